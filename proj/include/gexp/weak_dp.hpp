#pragma once

// Discrete-time sublinear expectation by backward dynamic programming.
//
// The process is a d-dimensional martingale whose conditional step
// covariance must lie in D * (T/n) at every step, with pointwise atom bounds
// set by the bound mode. The value
//     sup over admissible laws of E[payoff(X)]
// satisfies a backward recursion: at each grid node the next-step value
// field is maximized over admissible one-step laws (exact two-point
// enumeration for d == 1, documented candidate family for d >= 2), composed
// with the payoff's Markov state update.
//
// The returned value is the recursion output at the origin state. With
// store_policy set, the maximizing one-step law is recorded per (step, node)
// and can be replayed as an explicit admissible path law by
// extract_optimal_law.

#include "gexp/payoff.hpp"
#include "gexp/philox.hpp"
#include "gexp/state_grid.hpp"
#include "gexp/step_optimizer.hpp"
#include "gexp/value_grid.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

namespace gexp {

struct WeakDpConfig {
    int nodes_per_step = 2;
    double radius_multiple = 5.0;
    BoundMode mode = BoundMode::Relaxed;
    bool store_policy = false;
    // additional one-step candidates, used to embed another engine's
    // admissible moves so its value is dominated on the same grid
    std::vector<double> extra_magnitudes;      // d == 1: |atom| values
    std::vector<StepMeasure> extra_candidates; // d >= 2: whole laws
    int frames = 4;              // d >= 2 rotation count
    bool include_midpoints = true;
};

struct WeakDpResult {
    double value = 0.0;
    int n = 0;
    double T = 0.0;
    int dim = 1;
    double grid_h = 0.0;
    double radius = 0.0;
    double step_opt_resolution = 0.0;
    double runtime_ms = 0.0;
    long long interpolation_queries = 0;
    long long extrapolation_queries = 0; // queries beyond the grid edge

    // stored policy (store_policy only)
    bool has_policy = false;
    std::vector<GridAxis> axes;
    std::vector<std::vector<std::array<double, 2>>> policy_1d; // (a, b)
    std::vector<std::vector<int>> policy_nd; // candidate index
    std::vector<StepMeasure> nd_candidates;
    std::optional<MarkovStateSpec> state_spec;
};

namespace detail {

inline std::size_t origin_flat_index(const ValueGrid& grid,
                                     const Eigen::VectorXd& state) {
    int idx[ValueGrid::kMaxDim] = {0, 0, 0, 0};
    for (int i = 0; i < grid.dim(); ++i) {
        const GridAxis& ax = grid.axes()[i];
        const int j = static_cast<int>(std::lround((state[i] - ax.lo) / ax.h));
        if (j < 0 || j >= ax.count)
            throw std::logic_error("initial state escapes the grid");
        idx[i] = j;
    }
    return grid.flat_index(idx);
}

} // namespace detail

inline WeakDpResult weak_dp_value(const PathPayoff& payoff,
                                  const UncertaintySet& D, int n, double T,
                                  const WeakDpConfig& cfg = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    if (n < 1) throw std::invalid_argument("weak_dp_value: n >= 1");
    if (T <= 0.0) throw std::invalid_argument("weak_dp_value: T > 0");
    const int d = D.dim();
    const MarkovStateSpec spec = markov_spec(payoff, d, n, T);
    const StateGrid sg =
        make_state_grid(D, n, T, spec, {cfg.nodes_per_step,
                                        cfg.radius_multiple});
    const UncertaintySet step_set = D.scale(T / n);
    const double dt = T / n;
    const PayoffKind kind = spec.kind();
    const int state_dim = spec.state_dim();

    WeakDpResult out;
    out.n = n;
    out.T = T;
    out.dim = d;
    out.grid_h = sg.h;
    out.radius = sg.radius;
    out.axes = sg.axes;

    ValueGrid V(sg.axes);
    {
        Eigen::VectorXd state(state_dim);
        int idx[ValueGrid::kMaxDim];
        for (std::size_t flat = 0; flat < V.size(); ++flat) {
            V.unflatten(flat, idx);
            for (int i = 0; i < state_dim; ++i)
                state[i] = sg.axes[i].node(idx[i]);
            V[flat] = spec.terminal_value(state);
        }
    }

    long long queries = 0, escapes = 0;
    const auto counted2 = [&](const ValueGrid& g, double a, double b) {
        ++queries;
        const double q[2] = {a, b};
        if (!g.in_range(q)) ++escapes;
        return g.interpolate(q);
    };

    if (cfg.store_policy) {
        out.has_policy = true;
        out.state_spec = spec;
        if (d == 1)
            out.policy_1d.assign(n, {});
        else
            out.policy_nd.assign(n, {});
    }

    if (d == 1) {
        Step1DOptions sopt;
        sopt.mode = cfg.mode;
        sopt.grid_h = sg.h;
        sopt.extra_magnitudes = cfg.extra_magnitudes;
        const Step1DOptimizer opt(step_set, sopt);
        out.step_opt_resolution = sg.h;

        Eigen::VectorXd state(state_dim);
        int idx[ValueGrid::kMaxDim];
        for (int k = n - 1; k >= 0; --k) {
            ValueGrid W(sg.axes);
            auto* policy = cfg.store_policy ? &out.policy_1d[k] : nullptr;
            if (policy) policy->resize(W.size());
            for (std::size_t flat = 0; flat < W.size(); ++flat) {
                W.unflatten(flat, idx);
                for (int i = 0; i < state_dim; ++i)
                    state[i] = sg.axes[i].node(idx[i]);
                const double x = state[0];
                Step1DResult res;
                if (state_dim == 1) {
                    res = opt.optimize(
                        [&](double xp) {
                            ++queries;
                            if (xp < sg.axes[0].lo || xp > sg.axes[0].hi())
                                ++escapes;
                            return V.interpolate1(xp);
                        },
                        x);
                } else if (kind == PayoffKind::Lookback) {
                    const double aux = state[1];
                    res = opt.optimize(
                        [&](double xp) {
                            return counted2(V, xp, std::max(aux, xp));
                        },
                        x);
                } else { // running integral
                    const double aux = state[1];
                    res = opt.optimize(
                        [&](double xp) {
                            return counted2(V, xp,
                                            aux + 0.5 * (x + xp) * dt);
                        },
                        x);
                }
                W[flat] = res.value;
                if (policy) (*policy)[flat] = {res.a, res.b};
            }
            V = std::move(W);
        }
    } else {
        StepNdOptions nopt;
        nopt.mode = cfg.mode;
        nopt.frames = cfg.frames;
        nopt.include_midpoints = cfg.include_midpoints;
        nopt.extra_candidates = cfg.extra_candidates;
        const StepNdOptimizer opt(step_set, nopt);
        out.nd_candidates = opt.candidates();
        out.step_opt_resolution = 0.0; // finite family, no grid resolution

        Eigen::VectorXd state(state_dim);
        Eigen::VectorXd position(d);
        int idx[ValueGrid::kMaxDim];
        double q[ValueGrid::kMaxDim];
        for (int k = n - 1; k >= 0; --k) {
            ValueGrid W(sg.axes);
            auto* policy = cfg.store_policy ? &out.policy_nd[k] : nullptr;
            if (policy) policy->resize(W.size());
            for (std::size_t flat = 0; flat < W.size(); ++flat) {
                W.unflatten(flat, idx);
                for (int i = 0; i < state_dim; ++i)
                    state[i] = sg.axes[i].node(idx[i]);
                position = state.head(d);
                const auto field = [&](const Eigen::VectorXd& xp) {
                    for (int i = 0; i < d; ++i) q[i] = xp[i];
                    if (state_dim > d) {
                        if (kind == PayoffKind::Lookback)
                            q[d] = std::max(state[d], xp[0]);
                        else
                            q[d] = state[d] +
                                   0.5 * (state[0] + xp[0]) * dt;
                    }
                    ++queries;
                    if (!W.in_range(q)) ++escapes; // same axes as V
                    return V.interpolate(q);
                };
                const StepNdResult res = opt.optimize(field, position);
                W[flat] = res.value;
                if (policy) (*policy)[flat] = res.candidate;
            }
            V = std::move(W);
        }
    }

    const Eigen::VectorXd start = spec.initial_state();
    out.value = V[detail::origin_flat_index(V, start)];
    out.interpolation_queries = queries;
    out.extrapolation_queries = escapes;
    out.runtime_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
    return out;
}

// Replays a stored optimal policy as an explicit admissible path law: start
// at the origin, look up the recorded one-step law at the nearest grid node,
// draw one atom. Every sampled path satisfies the pointwise bounds and the
// per-step second-moment membership by construction.
class OptimalLawSampler {
public:
    explicit OptimalLawSampler(const WeakDpResult& result)
        : res_(result), index_grid_(result.axes) {
        if (!result.has_policy || !result.state_spec)
            throw std::invalid_argument(
                "OptimalLawSampler: result stores no policy");
    }

    DiscretePath sample(PhiloxRng& rng) const {
        const MarkovStateSpec& spec = *res_.state_spec;
        const int d = res_.dim;
        Eigen::VectorXd state = spec.initial_state();
        std::vector<Eigen::VectorXd> points;
        points.reserve(res_.n + 1);
        points.push_back(Eigen::VectorXd::Zero(d));
        Eigen::VectorXd next(d);
        for (int k = 0; k < res_.n; ++k) {
            const std::size_t flat = nearest_flat(state);
            if (d == 1) {
                const auto [a, b] = res_.policy_1d[k][flat];
                double dx = 0.0;
                if (!(a == 0.0 && b == 0.0)) {
                    const double wa = b / (b - a);
                    dx = rng.next_double() < wa ? a : b;
                }
                next[0] = state[0] + dx;
            } else {
                const StepMeasure& mu =
                    res_.nd_candidates[res_.policy_nd[k][flat]];
                double u = rng.next_double();
                std::size_t pick = mu.atoms.size() - 1;
                for (std::size_t i = 0; i < mu.atoms.size(); ++i) {
                    u -= mu.atoms[i].w;
                    if (u < 0.0) {
                        pick = i;
                        break;
                    }
                }
                next = state.head(d) + mu.atoms[pick].y;
            }
            state = spec.update(state, next);
            points.push_back(next);
        }
        return DiscretePath(res_.n, res_.T, std::move(points));
    }

private:
    std::size_t nearest_flat(const Eigen::VectorXd& state) const {
        int idx[ValueGrid::kMaxDim] = {0, 0, 0, 0};
        for (int i = 0; i < index_grid_.dim(); ++i) {
            const GridAxis& ax = index_grid_.axes()[i];
            const double t = (state[i] - ax.lo) / ax.h;
            const int j = static_cast<int>(std::lround(t));
            idx[i] = std::max(0, std::min(ax.count - 1, j));
        }
        return index_grid_.flat_index(idx);
    }

    const WeakDpResult& res_;
    ValueGrid index_grid_; // index arithmetic only; values unused
};

inline OptimalLawSampler extract_optimal_law(const WeakDpResult& result) {
    return OptimalLawSampler(result);
}

} // namespace gexp
