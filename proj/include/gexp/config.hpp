#pragma once

// JSON configuration schema for experiments.
//
// {
//   "uncertainty": {"dim": 1, "kind": "interval", "r": 1.0, "R": 4.0}
//                | {"dim": 2, "kind": "hull", "vertices": [[...row-major]]},
//   "payoff": {"kind": "terminal" | "lookback" | "average",
//              "function": "square" | "call" | "put" | "identity"
//                        | "neg_square" | "abs",
//              "strike": 0.0,             // optional, default 0
//              "growth": {"c": 3.0, "p": 2.0}},
//   "T": 1.0,
//   "n_schedule": [4, 8, 16, 32, 64],     // strictly increasing
//   "engines": ["weak", "strong", "pde"], // at least one
//   "seed": 1,
//   "bound_mode": "relaxed",              // "paper" | "relaxed" | "none"
//   "out": "report.csv",
//   "grid": {                             // optional block, all optional
//     "nodes_per_step": 2,
//     "radius_multiple": 5.0,
//     "pde_nodes_per_side": 200,
//     "sigma_refinement": 0
//   },
//   "paths": 10000                        // optional, Monte Carlo / checks
// }
//
// Configuration problems throw ConfigError so callers can separate "the
// input is wrong" from engine failures.

#include "gexp/payoff.hpp"
#include "gexp/step_measure.hpp"
#include "gexp/sym_matrix.hpp"
#include "gexp/uncertainty_set.hpp"

#include <json.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gexp {

inline constexpr const char* kVersion = "0.1.0";

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what)
        : std::runtime_error(what) {}
};

namespace detail {

template <typename T>
T require_field(const nlohmann::json& j, const char* key,
                const char* where) {
    if (!j.contains(key))
        throw ConfigError(std::string(where) + ": missing field '" + key +
                          "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string(where) + ": bad field '" + key +
                          "': " + e.what());
    }
}

template <typename T>
T optional_field(const nlohmann::json& j, const char* key, T fallback,
                 const char* where) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string(where) + ": bad field '" + key +
                          "': " + e.what());
    }
}

} // namespace detail

inline UncertaintySet parse_uncertainty(const nlohmann::json& j) {
    const char* where = "uncertainty";
    const int dim = detail::require_field<int>(j, "dim", where);
    const std::string kind =
        detail::require_field<std::string>(j, "kind", where);
    try {
        if (kind == "interval") {
            if (dim != 1)
                throw ConfigError("uncertainty: interval sets need dim 1");
            const double r = detail::require_field<double>(j, "r", where);
            const double R = detail::require_field<double>(j, "R", where);
            return UncertaintySet::make_interval(r, R);
        }
        if (kind == "hull") {
            const auto rows = detail::require_field<
                std::vector<std::vector<double>>>(j, "vertices", where);
            if (rows.empty())
                throw ConfigError("uncertainty: empty vertex list");
            std::vector<SymMatrix> vertices;
            for (const auto& flat : rows) {
                if (static_cast<int>(flat.size()) != dim * dim)
                    throw ConfigError(
                        "uncertainty: vertex needs dim*dim row-major "
                        "entries");
                Eigen::MatrixXd m(dim, dim);
                for (int i = 0; i < dim; ++i)
                    for (int k = 0; k < dim; ++k)
                        m(i, k) = flat[static_cast<std::size_t>(i) * dim + k];
                vertices.emplace_back(m);
            }
            return UncertaintySet::make_hull(std::move(vertices));
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("uncertainty: ") + e.what());
    }
    throw ConfigError("uncertainty: unknown kind '" + kind +
                      "' (interval | hull)");
}

inline PayoffKind parse_payoff_kind(const std::string& name) {
    if (name == "terminal") return PayoffKind::Terminal;
    if (name == "lookback") return PayoffKind::Lookback;
    if (name == "average") return PayoffKind::Average;
    throw ConfigError("payoff: unknown kind '" + name +
                      "' (terminal | lookback | average)");
}

inline BuiltinFn parse_builtin_fn(const std::string& name) {
    if (name == "square") return BuiltinFn::Square;
    if (name == "call") return BuiltinFn::Call;
    if (name == "put") return BuiltinFn::Put;
    if (name == "identity") return BuiltinFn::Identity;
    if (name == "neg_square") return BuiltinFn::NegSquare;
    if (name == "abs") return BuiltinFn::Abs;
    throw ConfigError("payoff: unknown function '" + name +
                      "' (square | call | put | identity | neg_square | "
                      "abs)");
}

struct PayoffConfig {
    PayoffKind kind = PayoffKind::Terminal;
    BuiltinFn function = BuiltinFn::Square;
    double strike = 0.0;
    GrowthBound growth;

    PathPayoff build() const {
        return PathPayoff::builtin(kind, function, strike, growth);
    }
};

inline PayoffConfig parse_payoff(const nlohmann::json& j) {
    const char* where = "payoff";
    PayoffConfig p;
    p.kind = parse_payoff_kind(
        detail::require_field<std::string>(j, "kind", where));
    p.function = parse_builtin_fn(
        detail::require_field<std::string>(j, "function", where));
    p.strike = detail::optional_field<double>(j, "strike", 0.0, where);
    if (!j.contains("growth"))
        throw ConfigError("payoff: missing field 'growth' ({c, p})");
    const auto& g = j.at("growth");
    p.growth.c = detail::require_field<double>(g, "c", "payoff.growth");
    p.growth.p = detail::require_field<double>(g, "p", "payoff.growth");
    if (p.growth.c <= 0.0 || p.growth.p < 0.0)
        throw ConfigError("payoff.growth: need c > 0 and p >= 0");
    return p;
}

struct ExperimentConfig {
    UncertaintySet D = UncertaintySet::make_interval(1.0, 1.0);
    PayoffConfig payoff;
    double T = 1.0;
    std::vector<int> n_schedule;
    bool run_weak = false;
    bool run_strong = false;
    bool run_pde = false;
    std::uint64_t seed = 0;
    BoundMode bound_mode = BoundMode::Relaxed;
    std::string out_path;

    int nodes_per_step = 2;
    double radius_multiple = 5.0;
    int pde_nodes_per_side = 200;
    int sigma_refinement = 0;
    long paths = 10000;

    nlohmann::json raw; // canonical source, used for hashing
};

inline ExperimentConfig parse_experiment(const nlohmann::json& j) {
    const char* where = "experiment";
    ExperimentConfig cfg;
    if (!j.contains("uncertainty"))
        throw ConfigError("experiment: missing 'uncertainty' block");
    cfg.D = parse_uncertainty(j.at("uncertainty"));
    if (!j.contains("payoff"))
        throw ConfigError("experiment: missing 'payoff' block");
    cfg.payoff = parse_payoff(j.at("payoff"));
    cfg.T = detail::require_field<double>(j, "T", where);
    if (cfg.T <= 0.0) throw ConfigError("experiment: T must be positive");
    cfg.n_schedule =
        detail::require_field<std::vector<int>>(j, "n_schedule", where);
    if (cfg.n_schedule.empty())
        throw ConfigError("experiment: empty n_schedule");
    for (std::size_t i = 0; i < cfg.n_schedule.size(); ++i) {
        if (cfg.n_schedule[i] < 1)
            throw ConfigError("experiment: n_schedule entries must be >= 1");
        if (i > 0 && cfg.n_schedule[i] <= cfg.n_schedule[i - 1])
            throw ConfigError(
                "experiment: n_schedule must be strictly increasing");
    }
    const auto engines = detail::require_field<std::vector<std::string>>(
        j, "engines", where);
    if (engines.empty())
        throw ConfigError("experiment: at least one engine is required");
    for (const auto& e : engines) {
        if (e == "weak")
            cfg.run_weak = true;
        else if (e == "strong")
            cfg.run_strong = true;
        else if (e == "pde")
            cfg.run_pde = true;
        else
            throw ConfigError("experiment: unknown engine '" + e +
                              "' (weak | strong | pde)");
    }
    cfg.seed = detail::optional_field<std::uint64_t>(j, "seed", 0, where);
    const std::string mode = detail::optional_field<std::string>(
        j, "bound_mode", "relaxed", where);
    try {
        cfg.bound_mode = bound_mode_from_name(mode);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("experiment: ") + e.what());
    }
    cfg.out_path =
        detail::optional_field<std::string>(j, "out", "", where);
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        cfg.nodes_per_step = detail::optional_field<int>(
            g, "nodes_per_step", cfg.nodes_per_step, "grid");
        cfg.radius_multiple = detail::optional_field<double>(
            g, "radius_multiple", cfg.radius_multiple, "grid");
        cfg.pde_nodes_per_side = detail::optional_field<int>(
            g, "pde_nodes_per_side", cfg.pde_nodes_per_side, "grid");
        cfg.sigma_refinement = detail::optional_field<int>(
            g, "sigma_refinement", cfg.sigma_refinement, "grid");
    }
    cfg.paths =
        detail::optional_field<long>(j, "paths", cfg.paths, where);
    if (cfg.paths < 0) throw ConfigError("experiment: paths must be >= 0");
    cfg.raw = j;
    return cfg;
}

inline ExperimentConfig parse_experiment_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    return parse_experiment(j);
}

// FNV-1a over the canonical (sorted-key, compact) serialization.
inline std::uint64_t config_hash(const nlohmann::json& j) {
    const std::string s = j.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace gexp
