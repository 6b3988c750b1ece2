#pragma once

// Finitely supported one-step laws together with the pointwise atom bounds
// implied by each bound mode. For an uncertainty set with spectrum bounds
// (r, R) in dimension d the admissible squared atom norms are
//   paper:   [d^2 r, d^2 R]
//   relaxed: [d   r, d^2 R]
//   none:    [0,     +inf)   (no pointwise support restriction; only the
//                             second-moment membership remains)
// paper and relaxed coincide at d == 1.

#include "gexp/uncertainty_set.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace gexp {

enum class BoundMode { Paper, Relaxed, None };

inline BoundMode bound_mode_from_name(const std::string& name) {
    if (name == "paper") return BoundMode::Paper;
    if (name == "relaxed") return BoundMode::Relaxed;
    if (name == "none") return BoundMode::None;
    throw std::invalid_argument("unknown bound mode: " + name);
}

inline std::string bound_mode_name(BoundMode mode) {
    switch (mode) {
        case BoundMode::Paper: return "paper";
        case BoundMode::Relaxed: return "relaxed";
        case BoundMode::None: return "none";
    }
    return "?";
}

struct PointwiseBounds {
    double lo = 0.0; // admissible squared atom norm, lower
    double hi = 0.0; // admissible squared atom norm, upper
};

inline PointwiseBounds pointwise_bounds(const UncertaintySet& d_step,
                                        BoundMode mode) {
    const auto [r, R] = d_step.spectrum_bounds();
    const double d = static_cast<double>(d_step.dim());
    PointwiseBounds b;
    b.hi = d * d * R;
    switch (mode) {
        case BoundMode::Paper: b.lo = d * d * r; break;
        case BoundMode::Relaxed: b.lo = d * r; break;
        case BoundMode::None:
            b.lo = 0.0;
            b.hi = std::numeric_limits<double>::infinity();
            break;
    }
    return b;
}

struct WeightedAtom {
    Eigen::VectorXd y;
    double w = 0.0;
};

struct StepMeasure {
    std::vector<WeightedAtom> atoms;

    int dim() const {
        return atoms.empty() ? 0 : static_cast<int>(atoms.front().y.size());
    }

    Eigen::VectorXd mean() const {
        Eigen::VectorXd m = Eigen::VectorXd::Zero(dim());
        for (const auto& a : atoms) m += a.w * a.y;
        return m;
    }

    SymMatrix second_moment() const {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim(), dim());
        for (const auto& a : atoms) m += a.w * (a.y * a.y.transpose());
        return SymMatrix(m);
    }

    static StepMeasure two_point(double a, double b) {
        StepMeasure mu;
        Eigen::VectorXd ya(1), yb(1);
        ya << a;
        yb << b;
        if (a == b) {
            mu.atoms.push_back({ya, 1.0});
            return mu;
        }
        const double wa = b / (b - a);
        mu.atoms.push_back({ya, wa});
        mu.atoms.push_back({yb, 1.0 - wa});
        return mu;
    }
};

struct MeasureCheck {
    bool ok = true;
    std::string message;
};

// Contract checks shared by the optimizers and the law validator.
inline MeasureCheck check_step_measure(const StepMeasure& mu,
                                       const UncertaintySet& d_step,
                                       BoundMode mode,
                                       double weight_tol = 1e-12,
                                       double mean_tol = 1e-10,
                                       double moment_tol = 1e-8) {
    MeasureCheck out;
    if (mu.atoms.empty())
        return {false, "measure has no atoms"};
    double total = 0.0;
    for (const auto& a : mu.atoms) {
        if (a.w <= 0.0) return {false, "non-positive weight"};
        total += a.w;
    }
    if (std::abs(total - 1.0) > weight_tol)
        return {false, "weights sum to " + std::to_string(total)};
    const Eigen::VectorXd m = mu.mean();
    if (m.cwiseAbs().maxCoeff() > mean_tol)
        return {false, "mean is not zero"};
    if (!d_step.contains(mu.second_moment(), moment_tol))
        return {false, "second moment escapes the uncertainty set"};
    const PointwiseBounds pb = pointwise_bounds(d_step, mode);
    if (std::isfinite(pb.hi)) {
        const double fuzz = 64.0 * std::numeric_limits<double>::epsilon() *
                            std::max(1.0, pb.hi);
        for (const auto& a : mu.atoms) {
            const double n2 = a.y.squaredNorm();
            if (n2 < pb.lo - fuzz || n2 > pb.hi + fuzz)
                return {false, "atom norm escapes pointwise bounds"};
        }
    }
    return out;
}

} // namespace gexp
