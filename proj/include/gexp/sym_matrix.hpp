#pragma once

// Small symmetric-matrix value type used for second-moment sets.
// Entries are mirrored on construction, so (i,j) == (j,i) holds bitwise.

#include <Eigen/Dense>

#include <initializer_list>
#include <stdexcept>
#include <vector>

namespace gexp {

class SymMatrix {
public:
    SymMatrix() : m_(Eigen::MatrixXd::Zero(1, 1)) {}

    explicit SymMatrix(int dim) : m_(Eigen::MatrixXd::Zero(dim, dim)) {
        if (dim < 1) throw std::invalid_argument("SymMatrix: dim must be >= 1");
    }

    // Row-major entries; the upper triangle wins when mirroring.
    SymMatrix(int dim, const std::vector<double>& row_major) : SymMatrix(dim) {
        if (static_cast<int>(row_major.size()) != dim * dim)
            throw std::invalid_argument("SymMatrix: need dim*dim entries");
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) m_(i, j) = row_major[i * dim + j];
        mirror();
    }

    explicit SymMatrix(const Eigen::MatrixXd& m) : m_(m) {
        if (m.rows() != m.cols())
            throw std::invalid_argument("SymMatrix: matrix must be square");
        mirror();
    }

    static SymMatrix scalar(double value) {
        SymMatrix s(1);
        s.m_(0, 0) = value;
        return s;
    }

    static SymMatrix identity(int dim) {
        return SymMatrix(Eigen::MatrixXd::Identity(dim, dim));
    }

    static SymMatrix diagonal(const std::vector<double>& d) {
        SymMatrix s(static_cast<int>(d.size()));
        for (std::size_t i = 0; i < d.size(); ++i)
            s.m_(static_cast<int>(i), static_cast<int>(i)) = d[i];
        return s;
    }

    int dim() const { return static_cast<int>(m_.rows()); }

    double operator()(int i, int j) const { return m_(i, j); }

    void set(int i, int j, double v) {
        m_(i, j) = v;
        m_(j, i) = v;
    }

    const Eigen::MatrixXd& mat() const { return m_; }

    bool is_diagonal(double tol = 0.0) const {
        for (int i = 0; i < dim(); ++i)
            for (int j = i + 1; j < dim(); ++j)
                if (std::abs(m_(i, j)) > tol) return false;
        return true;
    }

    // tr(A * B) for symmetric A, B.
    double trace_product(const SymMatrix& other) const {
        return (m_.array() * other.m_.array()).sum();
    }

    double frobenius_norm() const { return m_.norm(); }

    double frobenius_dist(const SymMatrix& other) const {
        return (m_ - other.m_).norm();
    }

    Eigen::VectorXd eigenvalues() const {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m_,
            Eigen::EigenvaluesOnly);
        return es.eigenvalues();
    }

    double min_eigenvalue() const { return eigenvalues().minCoeff(); }

    double max_eigenvalue() const { return eigenvalues().maxCoeff(); }

    // Operator (spectral) norm; for symmetric matrices the largest |eigenvalue|.
    double operator_norm() const {
        Eigen::VectorXd ev = eigenvalues();
        return std::max(std::abs(ev.minCoeff()), std::abs(ev.maxCoeff()));
    }

    bool is_psd(double tol) const { return min_eigenvalue() >= -tol; }

    SymMatrix operator+(const SymMatrix& o) const { return SymMatrix(m_ + o.m_); }
    SymMatrix operator-(const SymMatrix& o) const { return SymMatrix(m_ - o.m_); }
    SymMatrix operator*(double s) const { return SymMatrix(m_ * s); }

private:
    void mirror() {
        for (int i = 0; i < dim(); ++i)
            for (int j = i + 1; j < dim(); ++j) m_(j, i) = m_(i, j);
    }

    Eigen::MatrixXd m_;
};

inline SymMatrix operator*(double s, const SymMatrix& m) { return m * s; }

// Symmetric PSD square root via eigendecomposition. Eigenvalues in
// [-psd_tol, 0) are clipped to 0; anything below -psd_tol is an error.
inline SymMatrix matrix_sqrt(const SymMatrix& gamma, double psd_tol = 1e-8) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gamma.mat());
    if (es.info() != Eigen::Success)
        throw std::runtime_error("matrix_sqrt: eigendecomposition failed");
    Eigen::VectorXd ev = es.eigenvalues();
    for (int i = 0; i < ev.size(); ++i) {
        if (ev[i] < -psd_tol)
            throw std::invalid_argument("matrix_sqrt: input is not PSD");
        ev[i] = ev[i] > 0.0 ? std::sqrt(ev[i]) : 0.0;
    }
    Eigen::MatrixXd s = es.eigenvectors() * ev.asDiagonal() *
                        es.eigenvectors().transpose();
    return SymMatrix(s);
}

} // namespace gexp
