#pragma once

// Path functionals evaluated on piecewise-linear interpolations of discrete
// paths, plus their finite-dimensional Markov representations used by the
// dynamic-programming engines.
//
// Built-in scalar functions (square, call, put, identity, neg_square, abs)
// consume:
//   * Terminal:  |x|^2 for square / neg_square, the first coordinate else
//   * Lookback:  the running maximum of the first coordinate
//   * Average:   the running time-average of the first coordinate
// so every built-in payoff has a Markov state of dimension d (terminal)
// or d+1 (lookback / average).

#include <Eigen/Dense>

#include <atomic>
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace gexp {

struct DiscretePath {
    int n = 0;
    double T = 1.0;
    std::vector<Eigen::VectorXd> points; // n + 1 knots, points[0] == 0

    DiscretePath() = default;

    DiscretePath(int n_, double T_, std::vector<Eigen::VectorXd> pts)
        : n(n_), T(T_), points(std::move(pts)) {
        if (n < 1) throw std::invalid_argument("DiscretePath: n must be >= 1");
        if (T <= 0.0) throw std::invalid_argument("DiscretePath: T must be > 0");
        if (static_cast<int>(points.size()) != n + 1)
            throw std::invalid_argument("DiscretePath: need n + 1 points");
        const auto dim = points.front().size();
        if (points.front().cwiseAbs().maxCoeff() != 0.0)
            throw std::invalid_argument("DiscretePath: must start at 0");
        for (const auto& p : points)
            if (p.size() != dim)
                throw std::invalid_argument("DiscretePath: mixed dimensions");
    }

    int dim() const { return static_cast<int>(points.front().size()); }

    double sup_norm() const {
        double m = 0.0;
        for (const auto& p : points) m = std::max(m, p.norm());
        return m;
    }
};

// Piecewise-linear interpolation at time t in [0, T]; t == T resolves to the
// right endpoint.
inline Eigen::VectorXd interpolate(const DiscretePath& path, double t) {
    if (t < 0.0 || t > path.T)
        throw std::invalid_argument("interpolate: t outside [0, T]");
    if (t == path.T) return path.points.back();
    const double s = static_cast<double>(path.n) * t / path.T;
    const int k = static_cast<int>(std::floor(s));
    const double theta = s - k;
    return (1.0 - theta) * path.points[k] + theta * path.points[k + 1];
}

enum class PayoffKind { Terminal, Lookback, Average };

enum class BuiltinFn { Square, Call, Put, Identity, NegSquare, Abs };

struct GrowthBound {
    double c = 1.0;
    double p = 1.0;
};

inline BuiltinFn builtin_from_name(const std::string& name) {
    if (name == "square") return BuiltinFn::Square;
    if (name == "call") return BuiltinFn::Call;
    if (name == "put") return BuiltinFn::Put;
    if (name == "identity") return BuiltinFn::Identity;
    if (name == "neg_square") return BuiltinFn::NegSquare;
    if (name == "abs") return BuiltinFn::Abs;
    throw std::invalid_argument("unknown payoff function: " + name);
}

inline std::string builtin_name(BuiltinFn fn) {
    switch (fn) {
        case BuiltinFn::Square: return "square";
        case BuiltinFn::Call: return "call";
        case BuiltinFn::Put: return "put";
        case BuiltinFn::Identity: return "identity";
        case BuiltinFn::NegSquare: return "neg_square";
        case BuiltinFn::Abs: return "abs";
    }
    return "?";
}

inline double apply_builtin(BuiltinFn fn, double y, double strike) {
    switch (fn) {
        case BuiltinFn::Square: return y * y;
        case BuiltinFn::Call: return std::max(y - strike, 0.0);
        case BuiltinFn::Put: return std::max(strike - y, 0.0);
        case BuiltinFn::Identity: return y;
        case BuiltinFn::NegSquare: return -y * y;
        case BuiltinFn::Abs: return std::abs(y);
    }
    return 0.0;
}

class PathPayoff {
public:
    using TerminalFn = std::function<double(const Eigen::VectorXd&)>;
    // (terminal point, running max of first coordinate)
    using LookbackFn = std::function<double(const Eigen::VectorXd&, double)>;
    // (terminal point, running time-average vector)
    using AverageFn =
        std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

    static PathPayoff builtin(PayoffKind kind, BuiltinFn fn, double strike,
                              GrowthBound growth) {
        PathPayoff p;
        p.kind_ = kind;
        p.builtin_ = fn;
        p.strike_ = strike;
        p.growth_ = growth;
        p.is_builtin_ = true;
        return p;
    }

    static PathPayoff terminal(TerminalFn f, GrowthBound growth) {
        PathPayoff p;
        p.kind_ = PayoffKind::Terminal;
        p.terminal_fn_ = std::move(f);
        p.growth_ = growth;
        return p;
    }

    static PathPayoff lookback(LookbackFn f, GrowthBound growth) {
        PathPayoff p;
        p.kind_ = PayoffKind::Lookback;
        p.lookback_fn_ = std::move(f);
        p.growth_ = growth;
        return p;
    }

    static PathPayoff average(AverageFn f, GrowthBound growth) {
        PathPayoff p;
        p.kind_ = PayoffKind::Average;
        p.average_fn_ = std::move(f);
        p.growth_ = growth;
        return p;
    }

    PayoffKind kind() const { return kind_; }
    bool is_builtin() const { return is_builtin_; }
    BuiltinFn builtin_fn() const { return builtin_; }
    double strike() const { return strike_; }
    const GrowthBound& growth() const { return growth_; }

    double evaluate_on_discrete(const DiscretePath& path) const {
        double value = 0.0;
        switch (kind_) {
            case PayoffKind::Terminal:
                value = terminal_value(path.points.back());
                break;
            case PayoffKind::Lookback: {
                double m = path.points.front()(0);
                for (const auto& p : path.points) m = std::max(m, p(0));
                value = lookback_value(path.points.back(), m);
                break;
            }
            case PayoffKind::Average: {
                Eigen::VectorXd avg =
                    Eigen::VectorXd::Zero(path.points.front().size());
                for (int k = 1; k <= path.n; ++k)
                    avg += 0.5 * (path.points[k - 1] + path.points[k]);
                avg /= static_cast<double>(path.n);
                value = average_value(path.points.back(), avg);
                break;
            }
        }
        check_growth(value, path.sup_norm());
        return value;
    }

    // Evaluation pieces used by the Markov representation below.
    double terminal_value(const Eigen::VectorXd& x) const {
        if (is_builtin_) {
            if (builtin_ == BuiltinFn::Square) return x.squaredNorm();
            if (builtin_ == BuiltinFn::NegSquare) return -x.squaredNorm();
            return apply_builtin(builtin_, x(0), strike_);
        }
        return terminal_fn_(x);
    }

    double lookback_value(const Eigen::VectorXd& x, double running_max) const {
        if (is_builtin_) return apply_builtin(builtin_, running_max, strike_);
        return lookback_fn_(x, running_max);
    }

    double average_value(const Eigen::VectorXd& x,
                         const Eigen::VectorXd& avg) const {
        if (is_builtin_) return apply_builtin(builtin_, avg(0), strike_);
        return average_fn_(x, avg);
    }

    long growth_violations() const {
        return violations_ ? violations_->load() : 0;
    }

private:
    void check_growth(double value, double sup) const {
        const double bound =
            growth_.c * std::pow(1.0 + sup, growth_.p);
        if (std::abs(value) > bound && violations_)
            violations_->fetch_add(1);
    }

    PayoffKind kind_ = PayoffKind::Terminal;
    bool is_builtin_ = false;
    BuiltinFn builtin_ = BuiltinFn::Identity;
    double strike_ = 0.0;
    GrowthBound growth_;
    TerminalFn terminal_fn_;
    LookbackFn lookback_fn_;
    AverageFn average_fn_;
    std::shared_ptr<std::atomic<long>> violations_ =
        std::make_shared<std::atomic<long>>(0);
};

// Finite-dimensional state representation: state = (current point, auxiliary
// statistic). Replaying `update` along a path and applying `terminal_value`
// reproduces evaluate_on_discrete for every payoff this module constructs.
class MarkovStateSpec {
public:
    MarkovStateSpec(const PathPayoff& payoff, int dim, int n, double T)
        : payoff_(payoff), dim_(dim), n_(n), T_(T) {
        if (dim < 1 || n < 1 || T <= 0.0)
            throw std::invalid_argument("MarkovStateSpec: bad dimensions");
        if (payoff.kind() == PayoffKind::Average && dim > 1 &&
            !payoff.is_builtin())
            throw std::logic_error(
                "MarkovStateSpec: custom average payoffs need d == 1");
        state_dim_ = payoff.kind() == PayoffKind::Terminal ? dim : dim + 1;
    }

    int state_dim() const { return state_dim_; }
    int point_dim() const { return dim_; }
    PayoffKind kind() const { return payoff_.kind(); }
    double dt() const { return T_ / n_; }

    Eigen::VectorXd initial_state() const {
        return Eigen::VectorXd::Zero(state_dim_);
    }

    Eigen::VectorXd update(const Eigen::VectorXd& state,
                           const Eigen::VectorXd& next_point) const {
        Eigen::VectorXd out(state_dim_);
        out.head(dim_) = next_point;
        switch (payoff_.kind()) {
            case PayoffKind::Terminal:
                break;
            case PayoffKind::Lookback:
                out(dim_) = std::max(state(dim_), next_point(0));
                break;
            case PayoffKind::Average:
                // running integral of the first coordinate (trapezoid)
                out(dim_) =
                    state(dim_) + 0.5 * (state(0) + next_point(0)) * dt();
                break;
        }
        return out;
    }

    double terminal_value(const Eigen::VectorXd& state) const {
        const Eigen::VectorXd x = state.head(dim_);
        switch (payoff_.kind()) {
            case PayoffKind::Terminal:
                return payoff_.terminal_value(x);
            case PayoffKind::Lookback:
                return payoff_.lookback_value(x, state(dim_));
            case PayoffKind::Average: {
                Eigen::VectorXd avg = Eigen::VectorXd::Zero(dim_);
                avg(0) = state(dim_) / T_;
                return payoff_.average_value(x, avg);
            }
        }
        return 0.0;
    }

private:
    PathPayoff payoff_;
    int dim_;
    int n_;
    double T_;
    int state_dim_;
};

inline MarkovStateSpec markov_spec(const PathPayoff& payoff, int dim, int n,
                                   double T) {
    return MarkovStateSpec(payoff, dim, n, T);
}

} // namespace gexp
