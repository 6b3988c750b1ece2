#pragma once

// Command-line front end. Kept header-only with injectable streams so the
// test suite can drive it in-process; tools/gexp_cli.cpp is a thin wrapper.
//
// Subcommands:
//   price-weak    discrete value over constrained one-step laws
//   price-strong  discrete value over controlled random-walk integrals
//   price-pde     continuous-time reference value
//   converge      run all requested engines over the n-schedule, emit CSV
//   validate      sample the weak-optimal law and check the step contract
//
// Exit codes: 0 success, 1 validation failure, 2 configuration error
// (bad flags, bad config file, or engine parameters an engine rejects).

#include "gexp/config.hpp"
#include "gexp/experiment.hpp"
#include "gexp/weak_dp.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace gexp {

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_experiment_text(ss.str());
}

namespace detail {

struct CliOverrides {
    std::string config_path;
    std::optional<int> n;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> sigma_refinement;
    std::optional<long> paths;
    std::optional<std::string> bound_mode;
};

inline void add_common_flags(CLI::App* sub, CliOverrides& o) {
    sub->add_option("--config", o.config_path, "experiment JSON file")
        ->required();
    sub->add_option("--n", o.n,
                    "override the number of steps (converge: collapse the "
                    "schedule to this single n)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", o.seed, "override the sampling seed");
    sub->add_option("--out", o.out, "override the CSV output path");
    sub->add_option("--sigma-grid-refinement", o.sigma_refinement,
                    "override the volatility grid refinement rounds")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--paths", o.paths,
                    "override the Monte Carlo path count")
        ->check(CLI::PositiveNumber);
    sub->add_option("--bound-mode", o.bound_mode,
                    "pointwise increment bound mode (for validate this "
                    "selects the mode checked, not the mode built)")
        ->check(CLI::IsMember({"paper", "relaxed", "none"}));
}

inline ExperimentConfig load_with_overrides(const CliOverrides& o,
                                            bool apply_bound_mode) {
    ExperimentConfig cfg = load_experiment_config(o.config_path);
    if (o.seed) cfg.seed = *o.seed;
    if (o.out) cfg.out_path = *o.out;
    if (o.sigma_refinement) cfg.sigma_refinement = *o.sigma_refinement;
    if (o.paths) cfg.paths = *o.paths;
    if (o.bound_mode && apply_bound_mode)
        cfg.bound_mode = bound_mode_from_name(*o.bound_mode);
    if (o.n) cfg.n_schedule = {*o.n};
    return cfg;
}

inline int pick_n(const ExperimentConfig& cfg) {
    return cfg.n_schedule.back();
}

} // namespace detail

inline int cli_main(const std::vector<std::string>& args, std::ostream& out,
                    std::ostream& err) {
    CLI::App app{"discrete and continuous values under volatility "
                 "uncertainty"};
    app.name("gexp");
    app.require_subcommand(1);

    detail::CliOverrides o;
    CLI::App* price_weak = app.add_subcommand(
        "price-weak", "value over constrained one-step laws");
    CLI::App* price_strong = app.add_subcommand(
        "price-strong", "value over controlled random-walk integrals");
    CLI::App* price_pde =
        app.add_subcommand("price-pde", "continuous-time reference value");
    CLI::App* converge = app.add_subcommand(
        "converge", "run the n-schedule and emit a CSV report");
    CLI::App* validate = app.add_subcommand(
        "validate", "sample the weak-optimal law and check it");
    for (CLI::App* sub :
         {price_weak, price_strong, price_pde, converge, validate})
        detail::add_common_flags(sub, o);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (price_weak->parsed()) {
            const ExperimentConfig cfg = detail::load_with_overrides(o, true);
            const int n = detail::pick_n(cfg);
            WeakDpConfig wcfg;
            wcfg.nodes_per_step = cfg.nodes_per_step;
            wcfg.radius_multiple = cfg.radius_multiple;
            wcfg.mode = cfg.bound_mode;
            const WeakDpResult res =
                weak_dp_value(cfg.payoff.build(), cfg.D, n, cfg.T, wcfg);
            out << "weak value (n = " << n
                << "): " << detail::csv_number(res.value) << "\n";
            return 0;
        }
        if (price_strong->parsed()) {
            const ExperimentConfig cfg = detail::load_with_overrides(o, true);
            const int n = detail::pick_n(cfg);
            StrongDpConfig scfg;
            scfg.nodes_per_step = cfg.nodes_per_step;
            scfg.radius_multiple = cfg.radius_multiple;
            scfg.sigma_refinement = cfg.sigma_refinement;
            scfg.store_policy = false;
            const StrongDpResult res =
                strong_dp_value(cfg.payoff.build(), cfg.D, n, cfg.T, scfg);
            out << "strong value (n = " << n
                << "): " << detail::csv_number(res.value) << "\n";
            return 0;
        }
        if (price_pde->parsed()) {
            const ExperimentConfig cfg = detail::load_with_overrides(o, true);
            const double v = pde_reference_value(cfg);
            out << "pde reference: " << detail::csv_number(v) << "\n";
            return 0;
        }
        if (converge->parsed()) {
            const ExperimentConfig cfg = detail::load_with_overrides(o, true);
            const ConvergenceReport report = run_convergence(cfg);
            bool flagged = false;
            for (const auto& row : report.rows)
                if (!row.error.empty()) {
                    err << "n = " << row.n << ": " << row.error << "\n";
                    flagged = true;
                }
            if (cfg.out_path.empty()) {
                emit_csv(report, out);
            } else {
                emit_csv(report, cfg.out_path);
                out << "wrote " << cfg.out_path << " (" << report.rows.size()
                    << " rows)\n";
            }
            if (flagged) out << "some engines failed; rows are partial\n";
            return 0;
        }
        // validate: build the law with the config's own mode, then check it
        // under the (possibly overridden) validation mode.
        const ExperimentConfig cfg = detail::load_with_overrides(o, false);
        const int n = detail::pick_n(cfg);
        const BoundMode check_mode = o.bound_mode
                                         ? bound_mode_from_name(*o.bound_mode)
                                         : cfg.bound_mode;
        WeakDpConfig wcfg;
        wcfg.nodes_per_step = cfg.nodes_per_step;
        wcfg.radius_multiple = cfg.radius_multiple;
        wcfg.mode = cfg.bound_mode;
        wcfg.store_policy = true;
        const WeakDpResult res =
            weak_dp_value(cfg.payoff.build(), cfg.D, n, cfg.T, wcfg);
        const OptimalLawSampler sampler(res);
        const long paths = cfg.paths > 0 ? cfg.paths : 10000;
        const LawValidationReport rep = validate_law(
            sampler, cfg.D, n, cfg.T, check_mode, paths, cfg.seed);
        auto flag = [](bool ok) { return ok ? "pass" : "FAIL"; };
        out << "pointwise bounds:      " << flag(rep.pointwise_ok) << "\n";
        out << "quadratic variation:   " << flag(rep.quadratic_variation_ok)
            << "\n";
        out << "conditional moments:   " << flag(rep.conditional_moment_ok)
            << (rep.vacuous_pairs ? " (no pairs tested)" : "") << "\n";
        out << "fourth-moment scaling: " << flag(rep.scaling_ok);
        if (rep.scaling_tested)
            out << " (exponent " << detail::csv_number(
                       rep.fourth_moment_exponent) << ")";
        else
            out << " (not tested at this n)";
        out << "\n";
        out << "law validation: " << (rep.ok ? "PASS" : "FAIL") << " (mode "
            << bound_mode_name(check_mode) << ", n " << n << ", paths "
            << paths << ")\n";
        if (!rep.ok) err << rep.message << "\n";
        return rep.ok ? 0 : 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace gexp
