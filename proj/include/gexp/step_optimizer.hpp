#pragma once

// Per-step suprema over admissible one-step laws.
//
// d == 1: the feasible laws supported on the admissible shell with zero mean
// reduce to two-point measures (extreme points carry at most two atoms), so
// the supremum is searched over pairs (a, b) with a in [-sqrt(hi), -sqrt(lo)]
// and b in [sqrt(lo), sqrt(hi)], weights (b, -a)/(b - a), subject to the
// second-moment constraint  r' <= -ab <= R'.
//
// When the value function is a grid interpolant it is piecewise linear in
// each atom, and for a fixed opposite atom the objective is a Moebius
// function of the moving one, hence monotone on every linear piece. The
// supremum over the continuous box is therefore attained with both atoms on
// knot offsets, box edges, or constraint boundaries; enumerating those
// candidates is exact. Without knot information a dense grid plus local
// refinement is used instead.
//
// d >= 2: a documented lower bound over a finite candidate family. For a
// covariance candidate Gamma with square root S and any orthonormal frame
// (w_i), the 2d-point law with atoms +-sqrt(d) * S w_i at weight 1/(2d) has
// mean zero and second moment exactly Gamma.
//
// brute_force_step solves the same per-step problem as a finite LP over an
// atom grid (test oracle; independent of the search above).

#include "gexp/simplex_lp.hpp"
#include "gexp/step_measure.hpp"
#include "gexp/uncertainty_set.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace gexp {

struct Step1DOptions {
    BoundMode mode = BoundMode::Relaxed;
    double grid_h = 0.0; // > 0: knot offsets at multiples of h are candidates
    std::vector<double> extra_magnitudes; // e.g. active sigma-grid magnitudes
    int dense_per_side = 200;             // fallback when grid_h == 0
    bool refine = false;
    int refine_points = 17;
    int refine_rounds = 3;
    double none_cap = 8.0; // search cap (in units of sqrt(R')) for mode none
};

struct Step1DResult {
    double value = 0.0;
    double a = 0.0, b = 0.0; // a == b == 0 encodes the point mass at 0
    double resolution = 0.0; // finest candidate spacing used

    StepMeasure measure() const { return StepMeasure::two_point(a, b); }
};

class Step1DOptimizer {
public:
    Step1DOptimizer(const UncertaintySet& d_step, Step1DOptions opts)
        : opts_(std::move(opts)) {
        if (d_step.dim() != 1)
            throw std::invalid_argument("Step1DOptimizer: needs d == 1");
        std::tie(r_, R_) = d_step.spectrum_bounds();
        const PointwiseBounds pb = pointwise_bounds(d_step, opts_.mode);
        lo_mag_ = std::sqrt(pb.lo);
        hi_mag_ = opts_.mode == BoundMode::None
                      ? opts_.none_cap * std::sqrt(std::max(R_, 0.0))
                      : std::sqrt(pb.hi);
        base_mags_ = build_magnitudes();
    }

    // V is evaluated at absolute positions x + y.
    template <class F>
    Step1DResult optimize(F&& V, double x) const {
        if (R_ == 0.0) { // degenerate at zero: the only law is delta_0
            Step1DResult res;
            res.value = V(x);
            res.resolution = 0.0;
            return res;
        }
        mags_ = base_mags_;
        double spacing = base_spacing_;
        Step1DResult best = search(V, x, mags_, spacing);
        if (opts_.refine) {
            for (int round = 0; round < opts_.refine_rounds; ++round) {
                if (best.a == 0.0 && best.b == 0.0) break;
                std::vector<double> local;
                gather_window(-best.a, spacing, local);
                gather_window(best.b, spacing, local);
                if (local.empty()) break;
                // partners that make the second-moment constraint exactly
                // active, so boundary optima are reachable
                const std::size_t fixed = local.size();
                for (std::size_t q = 0; q < fixed; ++q)
                    for (double target : {r_, R_}) {
                        if (target <= 0.0) continue;
                        const double partner = target / local[q];
                        if (partner > 0.0 &&
                            partner >= std::max(lo_mag_, 0.0) &&
                            partner <= hi_mag_)
                            local.push_back(partner);
                    }
                sort_unique(local);
                spacing = 2.0 * spacing / (opts_.refine_points - 1);
                Step1DResult cand = search(V, x, local, spacing);
                if (cand.value > best.value ||
                    (cand.value >= best.value - tie_eps(best.value) &&
                     spread(cand) < spread(best)))
                    best = cand;
            }
        }
        return best;
    }

    const std::vector<double>& magnitudes() const { return base_mags_; }
    double step_lower() const { return r_; }
    double step_upper() const { return R_; }

private:
    static double spread(const Step1DResult& r) { return -r.a + r.b; }

    static double tie_eps(double v) { return 1e-12 * (1.0 + std::abs(v)); }

    static void sort_unique(std::vector<double>& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }

    std::vector<double> build_magnitudes() const {
        std::vector<double> mags;
        const double lo = std::max(lo_mag_, 0.0);
        if (opts_.grid_h > 0.0) {
            const double h = opts_.grid_h;
            base_spacing_ = h;
            int k = static_cast<int>(std::ceil(std::max(lo, h * 0.5) / h));
            for (; k * h <= hi_mag_ * (1.0 + 1e-14); ++k)
                mags.push_back(k * h);
        } else {
            const int per_side = std::max(opts_.dense_per_side, 2);
            const double start = lo > 0.0 ? lo : hi_mag_ / per_side;
            base_spacing_ = (hi_mag_ - start) / (per_side - 1.0);
            for (int i = 0; i < per_side; ++i)
                mags.push_back(start +
                               (hi_mag_ - start) * i / (per_side - 1.0));
        }
        if (lo > 0.0) mags.push_back(lo);
        mags.push_back(hi_mag_);
        for (double m : opts_.extra_magnitudes)
            if (m > 0.0) mags.push_back(std::clamp(m, std::max(lo, 0.0),
                                                   hi_mag_));
        // second-moment boundary partners (active only in mode none)
        if (opts_.mode == BoundMode::None) {
            const std::size_t fixed = mags.size();
            for (std::size_t i = 0; i < fixed; ++i) {
                const double m = mags[i];
                if (m <= 0.0) continue;
                for (double target : {r_, R_}) {
                    if (target <= 0.0) continue;
                    const double partner = target / m;
                    if (partner > 0.0 && partner <= hi_mag_ * (1.0 + 1e-14))
                        mags.push_back(partner);
                }
            }
        }
        std::vector<double> out;
        out.reserve(mags.size());
        for (double m : mags)
            if (m > 0.0 && m >= lo - 1e-300 && m <= hi_mag_ * (1.0 + 1e-14))
                out.push_back(std::min(m, hi_mag_));
        sort_unique(out);
        return out;
    }

    void gather_window(double center, double spacing,
                       std::vector<double>& out) const {
        const double lo = std::max(lo_mag_, 0.0);
        const double width = spacing;
        for (int i = 0; i < opts_.refine_points; ++i) {
            const double m = center - width +
                             2.0 * width * i / (opts_.refine_points - 1.0);
            if (m > 0.0 && m >= lo && m <= hi_mag_) out.push_back(m);
        }
    }

    template <class F>
    Step1DResult search(F&& V, double x, const std::vector<double>& mags,
                        double spacing) const {
        // cache V on both sides once per magnitude
        vals_down_.resize(mags.size());
        vals_up_.resize(mags.size());
        for (std::size_t i = 0; i < mags.size(); ++i) {
            vals_down_[i] = V(x - mags[i]);
            vals_up_[i] = V(x + mags[i]);
        }
        const bool zero_atom_ok = r_ <= 0.0;
        double best_value = -std::numeric_limits<double>::infinity();
        if (zero_atom_ok) best_value = V(x);

        for (std::size_t i = 0; i < mags.size(); ++i) {
            const double ma = mags[i];
            // feasible partners: ma * mb in [r', R']
            const auto from = std::lower_bound(mags.begin(), mags.end(),
                                               r_ / ma * (1.0 - 1e-12));
            for (auto it = from; it != mags.end(); ++it) {
                const double mb = *it;
                if (ma * mb > R_ * (1.0 + 1e-12)) break;
                const std::size_t j =
                    static_cast<std::size_t>(it - mags.begin());
                const double wa = mb / (ma + mb);
                const double v =
                    vals_up_[j] + wa * (vals_down_[i] - vals_up_[j]);
                if (v > best_value) best_value = v;
            }
        }

        // second pass: smallest spread among near-optimal pairs
        const double eps = tie_eps(best_value);
        Step1DResult res;
        res.value = best_value;
        res.resolution = spacing;
        double best_spread = std::numeric_limits<double>::infinity();
        bool found = false;
        if (zero_atom_ok && V(x) >= best_value - eps) {
            res.a = res.b = 0.0;
            best_spread = 0.0;
            found = true;
        }
        for (std::size_t i = 0; i < mags.size() && best_spread > 0.0; ++i) {
            const double ma = mags[i];
            const auto from = std::lower_bound(mags.begin(), mags.end(),
                                               r_ / ma * (1.0 - 1e-12));
            for (auto it = from; it != mags.end(); ++it) {
                const double mb = *it;
                if (ma * mb > R_ * (1.0 + 1e-12)) break;
                const std::size_t j =
                    static_cast<std::size_t>(it - mags.begin());
                const double wa = mb / (ma + mb);
                const double v =
                    vals_up_[j] + wa * (vals_down_[i] - vals_up_[j]);
                if (v >= best_value - eps && ma + mb < best_spread) {
                    best_spread = ma + mb;
                    res.a = -ma;
                    res.b = mb;
                    found = true;
                }
            }
        }
        if (!found)
            throw std::runtime_error(
                "optimize_step_1d: no feasible one-step law (bound mode "
                "excludes every candidate)");
        return res;
    }

    Step1DOptions opts_;
    double r_ = 0.0, R_ = 0.0;
    double lo_mag_ = 0.0, hi_mag_ = 0.0;
    std::vector<double> base_mags_;
    mutable double base_spacing_ = 0.0;
    mutable std::vector<double> mags_, vals_down_, vals_up_;
};

// Convenience wrapper matching the module-level operation.
inline Step1DResult optimize_step_1d(const UncertaintySet& d_step,
                                     const std::function<double(double)>& V,
                                     double x, Step1DOptions opts = {}) {
    if (opts.grid_h == 0.0) opts.refine = true;
    Step1DOptimizer opt(d_step, std::move(opts));
    return opt.optimize(V, x);
}

// ---------------------------------------------------------------------------

struct StepNdOptions {
    BoundMode mode = BoundMode::Relaxed;
    int frames = 4; // identity plus fixed Givens-composed rotations
    bool include_midpoints = true;
    std::vector<StepMeasure> extra_candidates; // appended after filtering
};

struct StepNdResult {
    double value = 0.0;
    int candidate = -1;
    const StepMeasure* measure = nullptr;
};

class StepNdOptimizer {
public:
    StepNdOptimizer(const UncertaintySet& d_step, StepNdOptions opts = {})
        : dim_(d_step.dim()) {
        const PointwiseBounds pb = pointwise_bounds(d_step, opts.mode);
        std::vector<SymMatrix> gammas = d_step.vertices();
        if (opts.include_midpoints) {
            const std::size_t v = gammas.size();
            for (std::size_t i = 0; i < v; ++i)
                for (std::size_t j = i + 1; j < v; ++j)
                    gammas.push_back(
                        SymMatrix(0.5 * (gammas[i].mat() + gammas[j].mat())));
        }
        const auto frames = make_frames(dim_, std::max(opts.frames, 1));
        const double fuzz =
            64.0 * std::numeric_limits<double>::epsilon() *
            std::max(1.0, pb.hi);
        for (const auto& gamma : gammas) {
            const SymMatrix s = matrix_sqrt(gamma);
            for (const auto& frame : frames) {
                StepMeasure mu;
                bool ok = true;
                for (int i = 0; i < dim_ && ok; ++i) {
                    const Eigen::VectorXd dir =
                        std::sqrt(static_cast<double>(dim_)) *
                        (s.mat() * frame.col(i));
                    const double n2 = dir.squaredNorm();
                    if (n2 < pb.lo - fuzz || n2 > pb.hi + fuzz) ok = false;
                    mu.atoms.push_back({dir, 0.5 / dim_});
                    mu.atoms.push_back({-dir, 0.5 / dim_});
                }
                if (ok) candidates_.push_back(std::move(mu));
            }
        }
        for (const auto& mu : opts.extra_candidates) {
            bool ok = !mu.atoms.empty();
            for (const auto& atom : mu.atoms) {
                const double n2 = atom.y.squaredNorm();
                if (n2 < pb.lo - fuzz || n2 > pb.hi + fuzz) ok = false;
            }
            if (ok) candidates_.push_back(mu);
        }
        if (candidates_.empty())
            throw std::runtime_error(
                "optimize_step_nd: no candidate satisfies the pointwise "
                "bounds (possible under bound mode 'paper')");
    }

    const std::vector<StepMeasure>& candidates() const { return candidates_; }

    template <class F>
    StepNdResult optimize(F&& V, const Eigen::VectorXd& x) const {
        StepNdResult best;
        best.value = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < candidates_.size(); ++c) {
            const StepMeasure& mu = candidates_[c];
            const double ref = V(x + mu.atoms.front().y);
            double acc = ref;
            for (std::size_t i = 1; i < mu.atoms.size(); ++i)
                acc += mu.atoms[i].w * (V(x + mu.atoms[i].y) - ref);
            if (acc > best.value) {
                best.value = acc;
                best.candidate = static_cast<int>(c);
            }
        }
        best.measure = &candidates_[best.candidate];
        return best;
    }

private:
    // Weight bookkeeping above: sum_i w_i V_i = ref + sum_{i>0} w_i (V_i - ref)
    // holds because the weights sum to one, and keeps constants exact.

    static std::vector<Eigen::MatrixXd> make_frames(int d, int count) {
        std::vector<Eigen::MatrixXd> frames;
        frames.push_back(Eigen::MatrixXd::Identity(d, d));
        if (d == 1) return frames;
        for (int k = 1; k < count; ++k) {
            const double theta =
                0.5 * M_PI * static_cast<double>(k) / count;
            Eigen::MatrixXd f = Eigen::MatrixXd::Identity(d, d);
            for (int i = 0; i + 1 < d; ++i) {
                Eigen::MatrixXd g = Eigen::MatrixXd::Identity(d, d);
                g(i, i) = std::cos(theta);
                g(i + 1, i + 1) = std::cos(theta);
                g(i, i + 1) = -std::sin(theta);
                g(i + 1, i) = std::sin(theta);
                f = f * g;
            }
            frames.push_back(f);
        }
        return frames;
    }

    int dim_;
    std::vector<StepMeasure> candidates_;
};

struct StepNdValue {
    double value = 0.0;
    StepMeasure measure;
};

inline StepNdValue optimize_step_nd(
    const UncertaintySet& d_step,
    const std::function<double(const Eigen::VectorXd&)>& V,
    const Eigen::VectorXd& x, StepNdOptions opts = {}) {
    StepNdOptimizer opt(d_step, opts);
    const StepNdResult res = opt.optimize(V, x);
    return {res.value, opt.candidates()[res.candidate]};
}

// ---------------------------------------------------------------------------
// LP oracle over an atom grid (tests only). Constraints: unit mass, zero
// mean, and second moment expressed as a convex combination of the hull
// vertices. d <= 2.

struct BruteForceResult {
    double value = 0.0;
    StepMeasure measure;
};

inline BruteForceResult brute_force_step(
    const UncertaintySet& d_step,
    const std::function<double(const Eigen::VectorXd&)>& V,
    const Eigen::VectorXd& x, double resolution,
    BoundMode mode = BoundMode::Relaxed, double none_cap = 8.0) {
    const int d = d_step.dim();
    if (d > 2)
        throw std::invalid_argument("brute_force_step: d <= 2 only");
    if (resolution <= 0.0)
        throw std::invalid_argument("brute_force_step: resolution > 0");
    const PointwiseBounds pb = pointwise_bounds(d_step, mode);
    const auto [r_step, R_step] = d_step.spectrum_bounds();
    const double hi_mag = mode == BoundMode::None
                              ? none_cap * std::sqrt(std::max(R_step, 0.0))
                              : std::sqrt(pb.hi);
    const double lo_mag = std::sqrt(pb.lo);

    // atom positions
    std::vector<Eigen::VectorXd> atoms;
    std::vector<double> mags;
    for (double m = lo_mag; m < hi_mag + resolution * 0.5; m += resolution)
        mags.push_back(std::min(m, hi_mag));
    if (mags.empty() || mags.back() < hi_mag) mags.push_back(hi_mag);
    if (lo_mag == 0.0) {
        // drop the zero-magnitude entry; the origin atom is added explicitly
        std::vector<double> pos;
        for (double m : mags)
            if (m > 0.0) pos.push_back(m);
        mags = pos;
        atoms.push_back(Eigen::VectorXd::Zero(d));
    }
    if (d == 1) {
        for (double m : mags) {
            Eigen::VectorXd a(1), b(1);
            a << -m;
            b << m;
            atoms.push_back(a);
            atoms.push_back(b);
        }
    } else {
        const int angles = std::max<int>(
            8, static_cast<int>(std::ceil(2.0 * M_PI * hi_mag / resolution)));
        for (double m : mags) {
            for (int k = 0; k < angles; ++k) {
                const double th = 2.0 * M_PI * k / angles;
                Eigen::VectorXd a(2);
                a << m * std::cos(th), m * std::sin(th);
                atoms.push_back(a);
            }
        }
    }

    const int na = static_cast<int>(atoms.size());
    const int nv = static_cast<int>(d_step.vertices().size());
    const int moment_rows = d * (d + 1) / 2;
    const int rows = 1 + d + moment_rows + 1;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, na + nv);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(rows);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(na + nv);

    for (int j = 0; j < na; ++j) {
        A(0, j) = 1.0;
        for (int i = 0; i < d; ++i) A(1 + i, j) = atoms[j](i);
        int rrow = 0;
        for (int i = 0; i < d; ++i)
            for (int k = i; k < d; ++k)
                A(1 + d + rrow++, j) = atoms[j](i) * atoms[j](k);
        c[j] = V(x + atoms[j]);
    }
    for (int v = 0; v < nv; ++v) {
        int rrow = 0;
        const SymMatrix& vert = d_step.vertices()[v];
        for (int i = 0; i < d; ++i)
            for (int k = i; k < d; ++k)
                A(1 + d + rrow++, na + v) = -vert(i, k);
        A(rows - 1, na + v) = 1.0;
    }
    b[0] = 1.0;
    b[rows - 1] = 1.0;

    LpResult lp = solve_lp_max(A, b, c);
    if (!lp.feasible)
        throw std::runtime_error("brute_force_step: infeasible atom grid");
    if (!lp.bounded)
        throw std::runtime_error("brute_force_step: unbounded program");
    BruteForceResult out;
    out.value = lp.value;
    for (int j = 0; j < na; ++j)
        if (lp.x[j] > 1e-12) out.measure.atoms.push_back({atoms[j], lp.x[j]});
    return out;
}

} // namespace gexp
