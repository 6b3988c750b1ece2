#pragma once

// Experiment harness: runs the requested engines over an n-schedule,
// assembles a convergence report, writes it as CSV, and validates sampled
// laws against the one-step contract (zero mean, second moment inside the
// uncertainty set, pointwise increment bounds for the chosen mode).

#include "gexp/config.hpp"
#include "gexp/gpde.hpp"
#include "gexp/payoff.hpp"
#include "gexp/philox.hpp"
#include "gexp/step_measure.hpp"
#include "gexp/strong_walk.hpp"
#include "gexp/sym_matrix.hpp"
#include "gexp/uncertainty_set.hpp"
#include "gexp/weak_dp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gexp {

struct ConvergenceRow {
    int n = 0;
    std::optional<double> weak_value;
    std::optional<double> strong_value;
    std::optional<double> pde_reference;
    std::optional<double> weak_abs_err;
    std::optional<double> strong_abs_err;
    std::optional<double> gap; // weak - strong when both ran
    double runtime_ms = 0.0;
    std::string error; // empty when every requested engine succeeded
};

struct ConvergenceReport {
    std::vector<ConvergenceRow> rows;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::string version = kVersion;
};

namespace detail {

inline void append_error(std::string& dst, const std::string& part) {
    if (!dst.empty()) dst += "; ";
    dst += part;
}

} // namespace detail

// Continuous-time reference value. Terminal payoffs only; d == 1 uses the
// interval solver, d == 2 requires diagonal vertices.
inline double pde_reference_value(const ExperimentConfig& cfg) {
    const PathPayoff payoff = cfg.payoff.build();
    if (payoff.kind() != PayoffKind::Terminal)
        throw std::invalid_argument(
            "pde engine supports terminal payoffs only");
    const double radius_multiple = std::max(cfg.radius_multiple, 5.0);
    const PdeGrid1D grid = make_pde_grid(cfg.D, cfg.T, cfg.pde_nodes_per_side,
                                         radius_multiple);
    if (cfg.D.dim() == 1)
        return solve_terminal(payoff, cfg.D, cfg.T, grid).value_at_origin;
    if (cfg.D.dim() == 2) {
        auto f = [&payoff](double x, double y) {
            Eigen::VectorXd p(2);
            p << x, y;
            return payoff.terminal_value(p);
        };
        return solve_diag_2d(f, cfg.D, cfg.T, grid).value_at_origin;
    }
    throw std::invalid_argument("pde engine supports d <= 2");
}

inline ConvergenceReport run_convergence(const ExperimentConfig& cfg) {
    ConvergenceReport report;
    report.config_hash = config_hash(cfg.raw);
    report.seed = cfg.seed;

    const PathPayoff payoff = cfg.payoff.build();

    std::optional<double> pde_ref;
    std::string pde_error;
    if (cfg.run_pde) {
        try {
            pde_ref = pde_reference_value(cfg);
        } catch (const std::exception& e) {
            pde_error = std::string("pde: ") + e.what();
        }
    }

    for (int n : cfg.n_schedule) {
        ConvergenceRow row;
        row.n = n;
        const auto t0 = std::chrono::steady_clock::now();
        if (cfg.run_weak) {
            WeakDpConfig wcfg;
            wcfg.nodes_per_step = cfg.nodes_per_step;
            wcfg.radius_multiple = cfg.radius_multiple;
            wcfg.mode = cfg.bound_mode;
            try {
                row.weak_value =
                    weak_dp_value(payoff, cfg.D, n, cfg.T, wcfg).value;
            } catch (const std::exception& e) {
                detail::append_error(row.error,
                                     std::string("weak: ") + e.what());
            }
        }
        if (cfg.run_strong) {
            StrongDpConfig scfg;
            scfg.nodes_per_step = cfg.nodes_per_step;
            scfg.radius_multiple = cfg.radius_multiple;
            scfg.sigma_refinement = cfg.sigma_refinement;
            scfg.store_policy = false;
            try {
                row.strong_value =
                    strong_dp_value(payoff, cfg.D, n, cfg.T, scfg).value;
            } catch (const std::exception& e) {
                detail::append_error(row.error,
                                     std::string("strong: ") + e.what());
            }
        }
        if (cfg.run_pde) {
            if (pde_ref)
                row.pde_reference = pde_ref;
            else
                detail::append_error(row.error, pde_error);
        }
        if (row.weak_value && row.pde_reference)
            row.weak_abs_err = std::abs(*row.weak_value - *row.pde_reference);
        if (row.strong_value && row.pde_reference)
            row.strong_abs_err =
                std::abs(*row.strong_value - *row.pde_reference);
        if (row.weak_value && row.strong_value)
            row.gap = *row.weak_value - *row.strong_value;
        row.runtime_ms =
            std::chrono::duration<double, std::milli>(
                std::chrono::steady_clock::now() - t0)
                .count();
        report.rows.push_back(std::move(row));
    }
    std::stable_sort(report.rows.begin(), report.rows.end(),
                     [](const ConvergenceRow& a, const ConvergenceRow& b) {
                         return a.n < b.n;
                     });
    return report;
}

namespace detail {

inline std::string csv_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline std::string csv_cell(const std::optional<double>& v) {
    return v ? csv_number(*v) : std::string();
}

} // namespace detail

inline void emit_csv(const ConvergenceReport& report, std::ostream& os) {
    std::vector<ConvergenceRow> rows = report.rows;
    std::stable_sort(rows.begin(), rows.end(),
                     [](const ConvergenceRow& a, const ConvergenceRow& b) {
                         return a.n < b.n;
                     });
    os << "n,weak_value,strong_value,pde_reference,weak_abs_err,"
          "strong_abs_err,gap,runtime_ms\n";
    for (const auto& row : rows) {
        os << row.n << ',' << detail::csv_cell(row.weak_value) << ','
           << detail::csv_cell(row.strong_value) << ','
           << detail::csv_cell(row.pde_reference) << ','
           << detail::csv_cell(row.weak_abs_err) << ','
           << detail::csv_cell(row.strong_abs_err) << ','
           << detail::csv_cell(row.gap) << ','
           << detail::csv_number(row.runtime_ms) << '\n';
    }
}

inline void emit_csv(const ConvergenceReport& report,
                     const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("emit_csv: cannot open '" + path +
                                 "' for writing");
    emit_csv(report, f);
    f.flush();
    if (!f)
        throw std::runtime_error("emit_csv: write to '" + path + "' failed");
}

// ---------------------------------------------------------------------------
// Law validation.

struct LawValidationReport {
    bool ok = true;
    bool pointwise_ok = true;   // every increment obeys the mode's bounds
    bool quadratic_variation_ok = true; // pathwise cap on realized QV
    bool conditional_moment_ok = true;  // two-time second moments in the set
    bool scaling_ok = true;             // fourth moments scale like lag^2
    bool moment_tested = false;
    bool scaling_tested = false;
    bool vacuous_pairs = false; // no usable (k, l) pairs; moment check empty
    double fourth_moment_exponent = 0.0;
    double fourth_moment_constant = 0.0;
    long paths = 0;
    std::string message; // first failure, with the offending path attached
};

namespace detail {

inline std::string dump_path(const DiscretePath& path, long index) {
    std::ostringstream os;
    os << "path " << index << " (n = " << path.n << "):";
    const std::size_t limit = std::min<std::size_t>(path.points.size(), 20);
    for (std::size_t k = 0; k < limit; ++k) {
        os << " [";
        for (int i = 0; i < path.points[k].size(); ++i) {
            if (i) os << ' ';
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.6g", path.points[k](i));
            os << buf;
        }
        os << ']';
    }
    if (path.points.size() > limit) os << " ...";
    return os.str();
}

} // namespace detail

// Streams `paths` samples from the sampler (each on its own counter stream)
// and checks the one-step contract:
//   (a) every increment's squared norm obeys the mode's pointwise bounds,
//   (b) the realized quadratic variation stays under the pointwise cap,
//   (c) empirical E[(X_l - X_k)(X_l - X_k)^T] lies in ((l - k) T / n) D
//       within three standard errors, for a handful of random pairs,
//   (d) fourth moments of dyadic lags fit an exponent close to 2.
template <typename Sampler>
LawValidationReport validate_law(const Sampler& sampler,
                                 const UncertaintySet& D, int n, double T,
                                 BoundMode mode, long paths = 10000,
                                 std::uint64_t seed = 0) {
    if (n < 1) throw std::invalid_argument("validate_law: n >= 1");
    if (T <= 0.0) throw std::invalid_argument("validate_law: T > 0");
    if (paths < 1) throw std::invalid_argument("validate_law: paths >= 1");
    LawValidationReport rep;
    rep.paths = paths;

    const int d = D.dim();
    const double dt = T / n;
    const UncertaintySet d_step = D.scale(dt);
    const PointwiseBounds pb = pointwise_bounds(d_step, mode);
    const double fuzz = 1e-9 * std::max(1.0, std::isfinite(pb.hi) ? pb.hi : 1.0);
    const double qv_cap = std::isfinite(pb.hi)
                              ? n * pb.hi
                              : std::numeric_limits<double>::infinity();

    // Random (k, l) pairs for the two-time moment check, drawn from a stream
    // far away from the per-path substreams.
    std::vector<std::pair<int, int>> pairs;
    {
        PhiloxRng rng(seed, ~std::uint64_t{0});
        for (int t = 0; t < 10; ++t) {
            const int k = static_cast<int>(rng.next_below(
                static_cast<std::uint64_t>(n)));
            const int l =
                k + 1 +
                static_cast<int>(rng.next_below(
                    static_cast<std::uint64_t>(n - k)));
            pairs.emplace_back(k, l);
        }
    }
    if (paths < 2) {
        pairs.clear();
        rep.vacuous_pairs = true;
    }

    std::vector<Eigen::MatrixXd> pair_sum(
        pairs.size(), Eigen::MatrixXd::Zero(d, d));
    std::vector<Eigen::MatrixXd> pair_sumsq(
        pairs.size(), Eigen::MatrixXd::Zero(d, d));

    std::vector<int> lags;
    for (int lag = 4; lag <= n / 4; lag *= 2) lags.push_back(lag);
    std::vector<double> lag_sum(lags.size(), 0.0);
    std::vector<long> lag_count(lags.size(), 0);

    for (long p = 0; p < paths; ++p) {
        PhiloxRng rng(seed, static_cast<std::uint64_t>(p));
        const DiscretePath path = sampler.sample(rng);
        if (path.n != n || static_cast<int>(path.points.size()) != n + 1)
            throw std::invalid_argument(
                "validate_law: sampler produced a path of the wrong length");

        Eigen::MatrixXd qv = Eigen::MatrixXd::Zero(d, d);
        for (int k = 0; k < n; ++k) {
            const Eigen::VectorXd inc = path.points[k + 1] - path.points[k];
            const double n2 = inc.squaredNorm();
            if (n2 < pb.lo - fuzz ||
                (std::isfinite(pb.hi) && n2 > pb.hi + fuzz)) {
                rep.pointwise_ok = false;
                rep.ok = false;
                std::ostringstream os;
                os << "increment " << k << " has squared norm " << n2
                   << " outside [" << pb.lo << ", " << pb.hi << "] for mode "
                   << bound_mode_name(mode) << "; "
                   << detail::dump_path(path, p);
                rep.message = os.str();
                return rep;
            }
            qv += inc * inc.transpose();
        }
        if (std::isfinite(qv_cap)) {
            const double norm = SymMatrix(qv).operator_norm();
            if (norm > qv_cap * (1.0 + 1e-9)) {
                rep.quadratic_variation_ok = false;
                rep.ok = false;
                std::ostringstream os;
                os << "realized quadratic variation has operator norm "
                   << norm << " above the cap " << qv_cap << "; "
                   << detail::dump_path(path, p);
                rep.message = os.str();
                return rep;
            }
        }
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const Eigen::VectorXd diff =
                path.points[pairs[i].second] - path.points[pairs[i].first];
            const Eigen::MatrixXd outer = diff * diff.transpose();
            pair_sum[i] += outer;
            pair_sumsq[i] += outer.cwiseProduct(outer);
        }
        for (std::size_t i = 0; i < lags.size(); ++i) {
            const int lag = lags[i];
            for (int k = 0; k + lag <= n; k += lag) {
                const double q =
                    (path.points[k + lag] - path.points[k]).squaredNorm();
                lag_sum[i] += q * q;
                ++lag_count[i];
            }
        }
    }

    if (!pairs.empty()) {
        rep.moment_tested = true;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const auto [k, l] = pairs[i];
            const double inv = 1.0 / static_cast<double>(paths);
            const Eigen::MatrixXd mean = pair_sum[i] * inv;
            const Eigen::MatrixXd var =
                (pair_sumsq[i] * inv - mean.cwiseProduct(mean))
                    .cwiseMax(0.0);
            const double se =
                std::sqrt(var.maxCoeff() / static_cast<double>(paths));
            const UncertaintySet window = D.scale((l - k) * dt);
            const double tol = 3.0 * se + 1e-10 * std::max(1.0, qv_cap);
            if (!window.contains(SymMatrix((mean + mean.transpose()) * 0.5),
                                 tol)) {
                rep.conditional_moment_ok = false;
                rep.ok = false;
                std::ostringstream os;
                os << "empirical second moment over steps [" << k << ", " << l
                   << ") escapes the scaled uncertainty set (tolerance "
                   << tol << ")";
                rep.message = os.str();
                return rep;
            }
        }
    } else if (!rep.vacuous_pairs) {
        rep.vacuous_pairs = true;
    }

    if (lags.size() >= 2) {
        bool usable = true;
        std::vector<double> xs, ys;
        for (std::size_t i = 0; i < lags.size(); ++i) {
            if (lag_count[i] == 0 || lag_sum[i] <= 0.0) {
                usable = false;
                break;
            }
            xs.push_back(std::log(lags[i] * dt));
            ys.push_back(std::log(lag_sum[i] /
                                  static_cast<double>(lag_count[i])));
        }
        if (usable) {
            rep.scaling_tested = true;
            const double m = static_cast<double>(xs.size());
            double mx = 0.0, my = 0.0;
            for (std::size_t i = 0; i < xs.size(); ++i) {
                mx += xs[i];
                my += ys[i];
            }
            mx /= m;
            my /= m;
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < xs.size(); ++i) {
                num += (xs[i] - mx) * (ys[i] - my);
                den += (xs[i] - mx) * (xs[i] - mx);
            }
            rep.fourth_moment_exponent = num / den;
            rep.fourth_moment_constant =
                std::exp(my - rep.fourth_moment_exponent * mx);
            if (rep.fourth_moment_exponent < 1.8 ||
                rep.fourth_moment_exponent > 2.2) {
                rep.scaling_ok = false;
                rep.ok = false;
                std::ostringstream os;
                os << "fourth moments scale with exponent "
                   << rep.fourth_moment_exponent
                   << ", expected a value in [1.8, 2.2]";
                rep.message = os.str();
                return rep;
            }
        }
    }
    return rep;
}

} // namespace gexp
