#pragma once

// Convex sets of admissible one-step covariance matrices, given either as a
// scalar interval [r, R] (d = 1) or as the convex hull of PSD vertices.
// All queries reduce to the vertex list:
//   * the support function of a hull is attained at a vertex,
//   * the smallest eigenvalue is concave, so its infimum sits at a vertex,
//   * the operator norm is convex, so its supremum sits at a vertex.

#include "gexp/sym_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gexp {

namespace detail {

// Euclidean projection of v onto the probability simplex (sort-based).
inline std::vector<double> project_to_simplex(std::vector<double> v) {
    const std::size_t k = v.size();
    std::vector<double> u = v;
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cumulative = 0.0;
    double theta = 0.0;
    int support = 0;
    for (std::size_t i = 0; i < k; ++i) {
        cumulative += u[i];
        const double candidate = (cumulative - 1.0) / static_cast<double>(i + 1);
        if (u[i] - candidate > 0.0) {
            theta = candidate;
            support = static_cast<int>(i + 1);
        }
    }
    (void)support;
    for (auto& x : v) x = std::max(0.0, x - theta);
    return v;
}

} // namespace detail

struct HullWeights {
    std::vector<double> w;   // convex weights over the vertex list
    double distance;         // Frobenius distance from the target
    int iterations;
    double gradient_residual;
};

class UncertaintySet {
public:
    enum class Kind { Interval, Hull };

    static constexpr int kMaxVertices = 16;

    static UncertaintySet make_interval(double r, double R) {
        if (!(0.0 <= r && r <= R))
            throw std::invalid_argument("UncertaintySet: need 0 <= r <= R");
        UncertaintySet d;
        d.kind_ = Kind::Interval;
        d.dim_ = 1;
        d.r_ = r;
        d.R_ = R;
        d.vertices_.push_back(SymMatrix::scalar(r));
        if (R > r) d.vertices_.push_back(SymMatrix::scalar(R));
        d.lambda_min_ = r;
        d.op_max_ = R;
        return d;
    }

    static UncertaintySet make_hull(std::vector<SymMatrix> vertices,
                                    double psd_tol = 1e-12) {
        if (vertices.empty())
            throw std::invalid_argument("UncertaintySet: empty vertex list");
        if (static_cast<int>(vertices.size()) > kMaxVertices)
            throw std::invalid_argument("UncertaintySet: too many vertices");
        const int dim = vertices.front().dim();
        for (const auto& v : vertices) {
            if (v.dim() != dim)
                throw std::invalid_argument(
                    "UncertaintySet: vertex dimensions disagree");
            if (!v.is_psd(psd_tol))
                throw std::invalid_argument("UncertaintySet: vertex is not PSD");
        }
        UncertaintySet d;
        d.kind_ = Kind::Hull;
        d.dim_ = dim;
        d.vertices_ = std::move(vertices);
        d.dedupe_vertices();
        double lmin = d.vertices_.front().min_eigenvalue();
        double omax = d.vertices_.front().operator_norm();
        for (const auto& v : d.vertices_) {
            lmin = std::min(lmin, v.min_eigenvalue());
            omax = std::max(omax, v.operator_norm());
        }
        d.lambda_min_ = std::max(0.0, lmin);
        d.op_max_ = omax;
        if (dim == 1) {
            d.r_ = d.lambda_min_;
            d.R_ = d.op_max_;
        }
        return d;
    }

    Kind kind() const { return kind_; }
    int dim() const { return dim_; }
    const std::vector<SymMatrix>& vertices() const { return vertices_; }

    bool is_interval() const { return kind_ == Kind::Interval; }
    double interval_r() const { require_1d(); return r_; }
    double interval_R() const { require_1d(); return R_; }

    // (r_D, R_D): inf of the smallest eigenvalue and sup of the operator norm.
    std::pair<double, double> spectrum_bounds() const {
        return {lambda_min_, op_max_};
    }

    // sup over A in the set of tr(Gamma * A) / 2.
    double support_function(const SymMatrix& gamma) const {
        check_dim(gamma);
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& v : vertices_)
            best = std::max(best, 0.5 * gamma.trace_product(v));
        return best;
    }

    UncertaintySet scale(double c) const {
        if (c < 0.0)
            throw std::invalid_argument("UncertaintySet::scale: c must be >= 0");
        if (is_interval()) return make_interval(c * r_, c * R_);
        std::vector<SymMatrix> scaled;
        scaled.reserve(vertices_.size());
        for (const auto& v : vertices_) scaled.push_back(v * c);
        return make_hull(std::move(scaled));
    }

    bool contains(const SymMatrix& gamma, double tol) const {
        check_dim(gamma);
        if (is_interval()) {
            const double g = gamma(0, 0);
            return g >= r_ - tol && g <= R_ + tol;
        }
        return hull_weights(gamma).distance <= tol;
    }

    // Nearest element of the set in Frobenius norm.
    SymMatrix project(const SymMatrix& gamma) const {
        check_dim(gamma);
        if (is_interval())
            return SymMatrix::scalar(std::clamp(gamma(0, 0), r_, R_));
        const HullWeights hw = hull_weights(gamma);
        return combine(hw.w);
    }

    SymMatrix combine(const std::vector<double>& w) const {
        if (w.size() != vertices_.size())
            throw std::invalid_argument("UncertaintySet::combine: weight count");
        SymMatrix acc(dim_);
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim_, dim_);
        for (std::size_t i = 0; i < w.size(); ++i)
            m += w[i] * vertices_[i].mat();
        return SymMatrix(m);
    }

    // Convex weights of the nearest hull point: accelerated projected
    // gradient on min_w ||sum_i w_i V_i - Gamma||_F^2 over the simplex.
    HullWeights hull_weights(const SymMatrix& gamma,
                             int max_iterations = 10000,
                             double gradient_tol = 1e-10) const {
        check_dim(gamma);
        const int k = static_cast<int>(vertices_.size());
        // Gram matrix of the vertices and linear term against the target.
        Eigen::MatrixXd G(k, k);
        Eigen::VectorXd c(k);
        for (int i = 0; i < k; ++i) {
            c[i] = vertices_[i].trace_product(gamma);
            for (int j = i; j < k; ++j) {
                G(i, j) = vertices_[i].trace_product(vertices_[j]);
                G(j, i) = G(i, j);
            }
        }
        double lipschitz = 2.0 * G.cwiseAbs().rowwise().sum().maxCoeff();
        if (lipschitz <= 0.0) lipschitz = 1.0;

        std::vector<double> w(k, 1.0 / k), y = w, w_prev = w;
        double t = 1.0;
        double residual = std::numeric_limits<double>::infinity();
        int it = 0;
        for (; it < max_iterations; ++it) {
            // gradient of the quadratic at y
            Eigen::Map<const Eigen::VectorXd> yv(y.data(), k);
            Eigen::VectorXd grad = 2.0 * (G * yv - c);
            std::vector<double> step(k);
            for (int i = 0; i < k; ++i) step[i] = y[i] - grad[i] / lipschitz;
            std::vector<double> w_next = detail::project_to_simplex(step);

            residual = 0.0;
            for (int i = 0; i < k; ++i)
                residual = std::max(residual,
                                    std::abs(w_next[i] - y[i]) * lipschitz);
            // FISTA momentum with restart on non-monotone steps
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            double dot = 0.0;
            for (int i = 0; i < k; ++i)
                dot += (w_next[i] - w[i]) * (w[i] - w_prev[i]);
            w_prev = w;
            w = w_next;
            if (dot < 0.0) {
                t = 1.0;
                y = w;
            } else {
                for (int i = 0; i < k; ++i)
                    y[i] = w[i] + ((t - 1.0) / t_next) * (w[i] - w_prev[i]);
                t = t_next;
            }
            if (residual <= gradient_tol) break;
        }
        if (residual > gradient_tol && it >= max_iterations)
            throw std::runtime_error(
                "UncertaintySet::hull_weights: QP did not converge, residual " +
                std::to_string(residual));
        HullWeights out;
        out.w = w;
        out.distance = combine(w).frobenius_dist(gamma);
        out.iterations = it;
        out.gradient_residual = residual;
        return out;
    }

private:
    void require_1d() const {
        if (dim_ != 1)
            throw std::logic_error("UncertaintySet: interval bounds need d == 1");
    }

    void check_dim(const SymMatrix& gamma) const {
        if (gamma.dim() != dim_)
            throw std::invalid_argument("UncertaintySet: dimension mismatch");
    }

    void dedupe_vertices() {
        std::vector<SymMatrix> unique;
        for (const auto& v : vertices_) {
            bool seen = false;
            for (const auto& u : unique)
                if (u.frobenius_dist(v) == 0.0) { seen = true; break; }
            if (!seen) unique.push_back(v);
        }
        vertices_ = std::move(unique);
    }

    Kind kind_ = Kind::Interval;
    int dim_ = 1;
    double r_ = 0.0, R_ = 0.0;          // interval bounds when dim == 1
    double lambda_min_ = 0.0, op_max_ = 0.0;
    std::vector<SymMatrix> vertices_;
};

} // namespace gexp
