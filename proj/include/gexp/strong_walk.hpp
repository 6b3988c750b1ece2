#pragma once

// Controlled random-walk formulation of the sublinear expectation.
//
// The driving noise is a scaled orthonormal-increment walk: the step
// innovation xi is uniform on the d+1 points sqrt(d+1) * v_l, where the v_l
// are the columns left after deleting the all-ones row from an orthogonal
// (d+1) x (d+1) matrix. Then E[xi] = 0, E[xi xi^T] = I and |xi|^2 = d. A
// policy chooses a matrix square root S (with S*S in the uncertainty set)
// per step and state; the controlled process accumulates increments
// S * xi * sqrt(T/n), so each step contributes conditional covariance
// S^2 * T/n. The value is the supremum of the expected payoff over a finite
// grid of such controls, computed by backward dynamic programming, and any
// fixed policy can be replayed by Monte Carlo.
//
// Every admissible control induces a one-step law that is also admissible
// for the unconstrained-martingale formulation, so on a shared state grid
// the value here is dominated by the dynamic-programming value there.

#include "gexp/payoff.hpp"
#include "gexp/philox.hpp"
#include "gexp/state_grid.hpp"
#include "gexp/step_measure.hpp"
#include "gexp/sym_matrix.hpp"
#include "gexp/uncertainty_set.hpp"
#include "gexp/value_grid.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gexp {

// ----------------------------------------------------------------------------
// Walk basis

struct WalkBasis {
    int d = 1;
    Eigen::MatrixXd vectors;       // d x (d+1); column l is v_l
    double scale = std::sqrt(2.0); // sqrt(d+1)
};

// Gram-Schmidt on the standard basis of R^{d+1}, seeded with the all-ones
// direction. The all-ones row is the one deleted (it would give the
// increments a nonzero mean); the remaining d orthonormal rows supply the
// columns v_l. Deterministic: the seeding order is fixed.
inline WalkBasis build_basis(int d) {
    if (d < 1) throw std::invalid_argument("build_basis: d >= 1");
    const int m = d + 1;
    Eigen::MatrixXd q(m, m);
    q.col(0) = Eigen::VectorXd::Constant(m, 1.0 / std::sqrt(double(m)));
    int cols = 1;
    for (int i = 0; i < m && cols < m; ++i) {
        Eigen::VectorXd v = Eigen::VectorXd::Unit(m, i);
        for (int j = 0; j < cols; ++j) v -= q.col(j).dot(v) * q.col(j);
        const double norm = v.norm();
        if (norm < 1e-8) continue; // already spanned
        q.col(cols++) = v / norm;
    }
    if (cols != m)
        throw std::logic_error("build_basis: orthogonalization failed");
    WalkBasis b;
    b.d = d;
    b.scale = std::sqrt(double(m));
    b.vectors = q.rightCols(d).transpose();
    return b;
}

// One-step law of the controlled walk under a fixed root S: the d+1 atoms
// S * sqrt(d+1) * v_l * sqrt(dt), uniformly weighted. Mean zero, second
// moment S^2 * dt. Useful for embedding these moves into another engine's
// candidate family when comparing values on a shared grid.
inline StepMeasure walk_step_measure(const WalkBasis& basis,
                                     const SymMatrix& S, double dt) {
    if (S.dim() != basis.d)
        throw std::invalid_argument("walk_step_measure: dimension mismatch");
    StepMeasure mu;
    const double w = 1.0 / (basis.d + 1);
    const double c = basis.scale * std::sqrt(dt);
    for (int l = 0; l <= basis.d; ++l)
        mu.atoms.push_back({c * (S.mat() * basis.vectors.col(l)), w});
    return mu;
}

// ----------------------------------------------------------------------------
// Control candidates

// Finite grid of matrix square roots covering the uncertainty set: roots of
// the hull vertices plus `1 + refinement` rounds of pairwise midpoints
// (projected back onto the set). Every candidate S satisfies S*S in D.
struct SigmaGrid {
    std::vector<SymMatrix> candidates;
};

inline SigmaGrid make_sigma_grid(const UncertaintySet& D, int refinement = 0) {
    if (refinement < 0)
        throw std::invalid_argument("make_sigma_grid: refinement >= 0");
    std::vector<SymMatrix> points = D.vertices();
    const auto add_unique = [&points](const SymMatrix& g) {
        for (const auto& p : points) {
            const double scale_ref =
                1.0 + g.mat().lpNorm<Eigen::Infinity>();
            if ((p.mat() - g.mat()).lpNorm<Eigen::Infinity>() <=
                1e-12 * scale_ref)
                return;
        }
        points.push_back(g);
    };
    for (int round = 0; round <= refinement; ++round) {
        const std::vector<SymMatrix> snapshot = points;
        for (std::size_t i = 0; i < snapshot.size(); ++i)
            for (std::size_t j = i + 1; j < snapshot.size(); ++j)
                add_unique(
                    D.project((snapshot[i] + snapshot[j]) * 0.5));
    }
    SigmaGrid g;
    g.candidates.reserve(points.size());
    for (const auto& p : points) g.candidates.push_back(matrix_sqrt(p));
    return g;
}

// ----------------------------------------------------------------------------
// Policies

// Adapted step control: per (step, state-grid node), an index into the sigma
// grid. An empty `choice` table denotes the constant policy using
// candidates[0] everywhere; a filled table must be total over (step, node).
struct WalkPolicy {
    int dim = 1;
    int n = 0;
    double T = 1.0;
    SigmaGrid grid;
    std::vector<GridAxis> axes;           // empty for constant policies
    std::vector<std::vector<int>> choice; // [step][flat node]
    std::optional<MarkovStateSpec> spec;  // payoff state + evaluation

    int candidate_at(int k, std::size_t flat) const {
        if (choice.empty()) return 0;
        return choice[static_cast<std::size_t>(k)][flat];
    }
};

inline WalkPolicy constant_policy(const SymMatrix& S,
                                  const PathPayoff& payoff, int n, double T) {
    WalkPolicy p;
    p.dim = S.dim();
    p.n = n;
    p.T = T;
    p.grid.candidates = {S};
    p.spec = markov_spec(payoff, p.dim, n, T);
    return p;
}

namespace detail {

inline std::size_t nearest_flat_index(const ValueGrid& grid,
                                      const Eigen::VectorXd& state) {
    int idx[ValueGrid::kMaxDim] = {0, 0, 0, 0};
    for (int i = 0; i < grid.dim(); ++i) {
        const GridAxis& ax = grid.axes()[i];
        const int j =
            static_cast<int>(std::lround((state[i] - ax.lo) / ax.h));
        idx[i] = std::max(0, std::min(ax.count - 1, j));
    }
    return grid.flat_index(idx);
}

// Increment vectors per candidate: moves[c][l] = sqrt(dt)*sqrt(d+1)*S_c*v_l.
inline std::vector<std::vector<Eigen::VectorXd>> candidate_moves(
    const SigmaGrid& grid, const WalkBasis& basis, double dt) {
    std::vector<std::vector<Eigen::VectorXd>> moves(grid.candidates.size());
    const double c = basis.scale * std::sqrt(dt);
    for (std::size_t s = 0; s < grid.candidates.size(); ++s) {
        moves[s].reserve(basis.d + 1);
        for (int l = 0; l <= basis.d; ++l)
            moves[s].push_back(
                c * (grid.candidates[s].mat() * basis.vectors.col(l)));
    }
    return moves;
}

} // namespace detail

// ----------------------------------------------------------------------------
// Backward dynamic programming over the control grid

struct StrongDpConfig {
    int nodes_per_step = 2;
    double radius_multiple = 5.0;
    int sigma_refinement = 0;
    bool store_policy = true;
};

struct StrongDpResult {
    double value = 0.0;
    int n = 0;
    double T = 0.0;
    int dim = 1;
    double grid_h = 0.0;
    double radius = 0.0;
    int sigma_candidates = 0;
    double runtime_ms = 0.0;
    long long interpolation_queries = 0;
    long long extrapolation_queries = 0;

    bool has_policy = false;
    WalkPolicy policy;
};

inline StrongDpResult strong_dp_value(const PathPayoff& payoff,
                                      const UncertaintySet& D, int n, double T,
                                      const StrongDpConfig& cfg = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    if (n < 1) throw std::invalid_argument("strong_dp_value: n >= 1");
    if (T <= 0.0) throw std::invalid_argument("strong_dp_value: T > 0");
    const int d = D.dim();
    if (d + 1 > 4)
        throw std::invalid_argument(
            "strong_dp_value: at most 4 walk directions (d <= 3) supported");
    const MarkovStateSpec spec = markov_spec(payoff, d, n, T);
    const StateGrid sg = make_state_grid(
        D, n, T, spec, {cfg.nodes_per_step, cfg.radius_multiple});
    const WalkBasis basis = build_basis(d);
    const SigmaGrid sig = make_sigma_grid(D, cfg.sigma_refinement);
    const double dt = T / n;
    const auto moves = detail::candidate_moves(sig, basis, dt);
    const int n_cand = static_cast<int>(sig.candidates.size());
    const int n_atoms = d + 1;
    const double inv_atoms = 1.0 / n_atoms;
    const PayoffKind kind = spec.kind();
    const int state_dim = spec.state_dim();

    StrongDpResult out;
    out.n = n;
    out.T = T;
    out.dim = d;
    out.grid_h = sg.h;
    out.radius = sg.radius;
    out.sigma_candidates = n_cand;

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

    if (cfg.store_policy) {
        out.has_policy = true;
        out.policy.dim = d;
        out.policy.n = n;
        out.policy.T = T;
        out.policy.grid = sig;
        out.policy.axes = sg.axes;
        out.policy.spec = spec;
        out.policy.choice.assign(n, {});
    }

    long long queries = 0, escapes = 0;
    Eigen::VectorXd state(state_dim);
    int idx[ValueGrid::kMaxDim];
    double q[ValueGrid::kMaxDim];
    for (int k = n - 1; k >= 0; --k) {
        ValueGrid W(sg.axes);
        auto* policy =
            cfg.store_policy ? &out.policy.choice[k] : nullptr;
        if (policy) policy->resize(W.size());
        for (std::size_t flat = 0; flat < W.size(); ++flat) {
            W.unflatten(flat, idx);
            for (int i = 0; i < state_dim; ++i)
                state[i] = sg.axes[i].node(idx[i]);
            double best = 0.0;
            int best_c = 0;
            for (int c = 0; c < n_cand; ++c) {
                double acc = 0.0;
                for (int l = 0; l < n_atoms; ++l) {
                    for (int i = 0; i < d; ++i)
                        q[i] = state[i] + moves[c][l][i];
                    if (state_dim > d) {
                        if (kind == PayoffKind::Lookback)
                            q[d] = std::max(state[d], q[0]);
                        else // running integral of the first coordinate
                            q[d] = state[d] +
                                   0.5 * (state[0] + q[0]) * dt;
                    }
                    ++queries;
                    if (!W.in_range(q)) ++escapes; // same axes as V
                    acc += V.interpolate(q);
                }
                const double val = acc * inv_atoms;
                if (c == 0 || val > best) {
                    best = val;
                    best_c = c;
                }
            }
            W[flat] = best;
            if (policy) (*policy)[flat] = best_c;
        }
        V = std::move(W);
    }

    out.value = V[detail::nearest_flat_index(V, spec.initial_state())];
    out.interpolation_queries = queries;
    out.extrapolation_queries = escapes;
    out.runtime_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
    return out;
}

// ----------------------------------------------------------------------------
// Monte Carlo under a fixed policy

struct SimulationStats {
    bool ok = false;
    std::string error;
    long paths = 0;
    double mean = 0.0;
    double std_error = 0.0; // standard error of the mean
    // empirical increment diagnostics, aggregated over all steps and paths:
    // mean step increment, and the average of dX dX^T scaled by n/T so it is
    // directly comparable to the uncertainty set
    Eigen::VectorXd increment_mean;
    SymMatrix increment_second_moment;
    std::uint64_t seed = 0;
};

namespace detail {

// Common Monte Carlo driver: walks `paths` trajectories under the policy,
// hands each finished path to `consume(path_index, points, terminal_state)`,
// and fills the increment diagnostics. Per-path generator substreams are
// derived from the seed, so results are independent of any partitioning.
template <typename Consume>
inline SimulationStats run_walk_paths(const WalkPolicy& policy,
                                      const WalkBasis& basis, int n, double T,
                                      long paths, std::uint64_t seed,
                                      Consume&& consume) {
    SimulationStats st;
    st.seed = seed;
    if (paths <= 0) {
        st.error = "no paths requested";
        return st;
    }
    if (basis.d != policy.dim) {
        st.error = "basis dimension does not match the policy";
        return st;
    }
    if (n != policy.n || T != policy.T) {
        st.error = "policy was built for a different (n, T)";
        return st;
    }
    if (!policy.spec) {
        st.error = "policy carries no payoff state";
        return st;
    }
    if (policy.grid.candidates.empty()) {
        st.error = "policy has no control candidates";
        return st;
    }
    if (!policy.choice.empty() &&
        (policy.choice.size() != static_cast<std::size_t>(n) ||
         policy.axes.empty())) {
        st.error = "policy choice table is not total";
        return st;
    }

    const MarkovStateSpec& spec = *policy.spec;
    const int d = basis.d;
    const int n_atoms = d + 1;
    const double dt = T / n;
    const auto moves = detail::candidate_moves(policy.grid, basis, dt);
    std::optional<ValueGrid> index_grid;
    if (!policy.choice.empty()) index_grid.emplace(policy.axes);

    Eigen::VectorXd dsum = Eigen::VectorXd::Zero(d);
    Eigen::MatrixXd dsq = Eigen::MatrixXd::Zero(d, d);
    std::vector<Eigen::VectorXd> points(n + 1, Eigen::VectorXd::Zero(d));
    Eigen::VectorXd state(spec.state_dim());
    for (long p = 0; p < paths; ++p) {
        PhiloxRng rng(seed, static_cast<std::uint64_t>(p));
        state = spec.initial_state();
        points[0].setZero();
        for (int k = 0; k < n; ++k) {
            int c = 0;
            if (index_grid)
                c = policy.candidate_at(
                    k, detail::nearest_flat_index(*index_grid, state));
            const int l =
                static_cast<int>(rng.next_below(std::uint64_t(n_atoms)));
            const Eigen::VectorXd& dx = moves[c][l];
            points[k + 1] = points[k] + dx;
            state = spec.update(state, points[k + 1]);
            dsum += dx;
            dsq += dx * dx.transpose();
        }
        consume(p, points, state);
    }

    const double steps = static_cast<double>(paths) * n;
    st.ok = true;
    st.paths = paths;
    st.increment_mean = dsum / steps;
    st.increment_second_moment =
        SymMatrix(Eigen::MatrixXd(dsq / (static_cast<double>(paths) * T)));
    return st;
}

} // namespace detail

// Draws i.i.d. uniform direction sequences, runs the controlled walk under
// the policy, and evaluates the policy's own payoff on each trajectory.
inline SimulationStats simulate_policy(const WalkPolicy& policy,
                                       const WalkBasis& basis, int n, double T,
                                       long paths, std::uint64_t seed) {
    double sum = 0.0, sumsq = 0.0;
    const MarkovStateSpec* spec =
        policy.spec ? &*policy.spec : nullptr;
    SimulationStats st = detail::run_walk_paths(
        policy, basis, n, T, paths, seed,
        [&](long, const std::vector<Eigen::VectorXd>&,
            const Eigen::VectorXd& state) {
            const double v = spec->terminal_value(state);
            sum += v;
            sumsq += v * v;
        });
    if (!st.ok) return st;
    st.mean = sum / paths;
    if (paths > 1) {
        const double var =
            std::max(0.0, (sumsq - sum * sum / paths) / (paths - 1));
        st.std_error = std::sqrt(var / paths);
    }
    return st;
}

// Sampler over trajectories of the controlled walk, exposed so functionals
// of the linearly interpolated path (running maxima, time averages) can be
// evaluated against laws other than the policy's own payoff.
class StrongPathSampler {
public:
    StrongPathSampler(WalkPolicy policy, WalkBasis basis)
        : policy_(std::move(policy)), basis_(std::move(basis)) {
        if (basis_.d != policy_.dim)
            throw std::invalid_argument(
                "StrongPathSampler: basis dimension does not match policy");
        if (!policy_.spec)
            throw std::invalid_argument(
                "StrongPathSampler: policy carries no payoff state");
        if (policy_.grid.candidates.empty())
            throw std::invalid_argument(
                "StrongPathSampler: policy has no control candidates");
        moves_ = detail::candidate_moves(policy_.grid, basis_,
                                         policy_.T / policy_.n);
        if (!policy_.choice.empty()) index_grid_.emplace(policy_.axes);
    }

    int n() const { return policy_.n; }
    double T() const { return policy_.T; }

    DiscretePath sample(PhiloxRng& rng) const {
        const MarkovStateSpec& spec = *policy_.spec;
        const int d = policy_.dim;
        Eigen::VectorXd state = spec.initial_state();
        std::vector<Eigen::VectorXd> points;
        points.reserve(policy_.n + 1);
        points.push_back(Eigen::VectorXd::Zero(d));
        for (int k = 0; k < policy_.n; ++k) {
            int c = 0;
            if (index_grid_)
                c = policy_.candidate_at(
                    k, detail::nearest_flat_index(*index_grid_, state));
            const int l =
                static_cast<int>(rng.next_below(std::uint64_t(d + 1)));
            points.push_back(points.back() + moves_[c][l]);
            state = spec.update(state, points.back());
        }
        return DiscretePath(policy_.n, policy_.T, std::move(points));
    }

    // Monte Carlo mean of `functional` applied to the interpolated path.
    SimulationStats expect(const PathPayoff& functional, long paths,
                           std::uint64_t seed) const {
        double sum = 0.0, sumsq = 0.0;
        SimulationStats st = detail::run_walk_paths(
            policy_, basis_, policy_.n, policy_.T, paths, seed,
            [&](long, const std::vector<Eigen::VectorXd>& pts,
                const Eigen::VectorXd&) {
                const double v = functional.evaluate_on_discrete(
                    DiscretePath(policy_.n, policy_.T, pts));
                sum += v;
                sumsq += v * v;
            });
        if (!st.ok) return st;
        st.mean = sum / paths;
        if (paths > 1) {
            const double var =
                std::max(0.0, (sumsq - sum * sum / paths) / (paths - 1));
            st.std_error = std::sqrt(var / paths);
        }
        return st;
    }

private:
    WalkPolicy policy_;
    WalkBasis basis_;
    std::vector<std::vector<Eigen::VectorXd>> moves_;
    std::optional<ValueGrid> index_grid_;
};

inline StrongPathSampler interpolated_law_pushforward(const WalkPolicy& policy,
                                                      const WalkBasis& basis,
                                                      int n, double T) {
    if (n != policy.n || T != policy.T)
        throw std::invalid_argument(
            "interpolated_law_pushforward: policy was built for a "
            "different (n, T)");
    return StrongPathSampler(policy, basis);
}

} // namespace gexp
