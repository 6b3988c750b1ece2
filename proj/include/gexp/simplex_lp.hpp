#pragma once

// Dense two-phase tableau simplex for small equality-form programs:
//   maximize c'x  subject to  A x = b, x >= 0.
// Bland's rule throughout, so cycling cannot occur. Sized for the per-step
// oracle (a handful of rows, a few thousand columns); not a general solver.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace gexp {

struct LpResult {
    bool feasible = false;
    bool bounded = true;
    double value = 0.0;
    std::vector<double> x;
};

namespace detail {

class SimplexTableau {
public:
    // columns: n structural + m artificial; rows: m constraints
    SimplexTableau(const Eigen::MatrixXd& A, const Eigen::VectorXd& b)
        : m_(static_cast<int>(A.rows())), n_(static_cast<int>(A.cols())) {
        T_.resize(m_, n_ + m_ + 1);
        T_.setZero();
        T_.block(0, 0, m_, n_) = A;
        T_.col(n_ + m_) = b;
        for (int i = 0; i < m_; ++i) {
            if (T_(i, n_ + m_) < 0.0) T_.row(i) = -T_.row(i);
            T_(i, n_ + i) = 1.0;
        }
        basis_.resize(m_);
        for (int i = 0; i < m_; ++i) basis_[i] = n_ + i;
        A0_ = T_.leftCols(n_ + m_);
        b0_ = T_.col(n_ + m_);
    }

    // minimize sum of artificials; returns the attained value
    double phase1(int max_iters) {
        Eigen::VectorXd cost = Eigen::VectorXd::Zero(n_ + m_);
        for (int j = n_; j < n_ + m_; ++j) cost[j] = 1.0;
        run(cost, max_iters, /*allow_artificial=*/true);
        double value = 0.0;
        for (int i = 0; i < m_; ++i)
            if (basis_[i] >= n_) value += T_(i, n_ + m_);
        return value;
    }

    // after a feasible phase 1: pivot artificials out or drop empty rows
    void purge_artificials() {
        for (int i = 0; i < m_; ++i) {
            if (basis_[i] < n_) continue;
            int pivot_col = -1;
            for (int j = 0; j < n_; ++j)
                if (std::abs(T_(i, j)) > 1e-11) { pivot_col = j; break; }
            if (pivot_col >= 0) pivot(i, pivot_col);
        }
    }

    // minimize cost'x over structural variables
    bool phase2(const Eigen::VectorXd& structural_cost, int max_iters) {
        Eigen::VectorXd cost = Eigen::VectorXd::Constant(
            n_ + m_, std::numeric_limits<double>::infinity());
        cost.head(n_) = structural_cost;
        for (int j = n_; j < n_ + m_; ++j) cost[j] = 0.0; // blocked below
        return run(cost, max_iters, /*allow_artificial=*/false);
    }

    // The tableau accumulates elimination roundoff across pivots, so the
    // final basic solution is recomputed from the original columns.
    std::vector<double> solution() const {
        Eigen::MatrixXd basis_cols(m_, m_);
        for (int i = 0; i < m_; ++i) basis_cols.col(i) = A0_.col(basis_[i]);
        const Eigen::VectorXd xb = basis_cols.colPivHouseholderQr().solve(b0_);
        std::vector<double> x(n_, 0.0);
        for (int i = 0; i < m_; ++i)
            if (basis_[i] < n_) x[basis_[i]] = std::max(xb[i], 0.0);
        return x;
    }

private:
    // one simplex run on the current tableau; returns false if unbounded
    bool run(const Eigen::VectorXd& cost, int max_iters,
             bool allow_artificial) {
        for (int iter = 0; iter < max_iters; ++iter) {
            // reduced costs: c_j - c_B' B^{-1} A_j, computed from the tableau
            Eigen::VectorXd cb(m_);
            for (int i = 0; i < m_; ++i) cb[i] = cost[basis_[i]];
            int entering = -1;
            const int limit = allow_artificial ? n_ + m_ : n_;
            for (int j = 0; j < limit; ++j) {
                const double reduced = cost[j] - cb.dot(T_.col(j));
                if (reduced < -1e-9) { entering = j; break; } // Bland
            }
            if (entering < 0) return true;
            int leaving = -1;
            double best_ratio = 0.0;
            for (int i = 0; i < m_; ++i) {
                const double a = T_(i, entering);
                if (a > 1e-11) {
                    const double ratio = T_(i, n_ + m_) / a;
                    if (leaving < 0 || ratio < best_ratio - 1e-12 ||
                        (std::abs(ratio - best_ratio) <= 1e-12 &&
                         basis_[i] < basis_[leaving])) {
                        leaving = i;
                        best_ratio = ratio;
                    }
                }
            }
            if (leaving < 0) return false; // unbounded direction
            pivot(leaving, entering);
        }
        throw std::runtime_error("simplex: iteration limit reached");
    }

    void pivot(int row, int col) {
        T_.row(row) /= T_(row, col);
        for (int i = 0; i < m_; ++i) {
            if (i == row) continue;
            const double f = T_(i, col);
            if (f != 0.0) T_.row(i) -= f * T_.row(row);
        }
        basis_[row] = col;
    }

    int m_, n_;
    Eigen::MatrixXd T_;
    Eigen::MatrixXd A0_; // sign-normalized columns, for the final re-solve
    Eigen::VectorXd b0_;
    std::vector<int> basis_;
};

} // namespace detail

inline LpResult solve_lp_max(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                             const Eigen::VectorXd& c,
                             int max_iters = 200000) {
    if (A.rows() != b.size() || A.cols() != c.size())
        throw std::invalid_argument("solve_lp_max: shape mismatch");
    detail::SimplexTableau tab(A, b);
    LpResult out;
    const double infeasibility = tab.phase1(max_iters);
    if (infeasibility > 1e-7) {
        out.feasible = false;
        return out;
    }
    tab.purge_artificials();
    out.feasible = true;
    if (!tab.phase2(-c, max_iters)) {
        out.bounded = false;
        return out;
    }
    out.x = tab.solution();
    out.value = 0.0;
    for (int j = 0; j < c.size(); ++j) out.value += c[j] * out.x[j];
    return out;
}

} // namespace gexp
