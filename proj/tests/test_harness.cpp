#include "gexp/cli.hpp"
#include "gexp/config.hpp"
#include "gexp/experiment.hpp"

#include "support/oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace gexp;

namespace {

const double kCallTarget = 2.0 / std::sqrt(2.0 * M_PI);

std::string square_config_text(const std::string& schedule,
                               const std::string& engines,
                               const std::string& extras = "") {
    return std::string("{") +
           R"("uncertainty": {"dim": 1, "kind": "interval", "r": 1.0, "R": 4.0},)" +
           R"("payoff": {"kind": "terminal", "function": "square",)" +
           R"( "growth": {"c": 3.0, "p": 2.0}},)" + R"("T": 1.0,)" +
           "\"n_schedule\": " + schedule + "," +
           "\"engines\": " + engines + "," +
           R"("seed": 1, "bound_mode": "relaxed")" + extras + "}";
}

std::string write_temp_config(const std::string& name,
                              const std::string& text) {
    const std::string path = "harness_" + name + ".json";
    std::ofstream f(path, std::ios::binary);
    f << text;
    f.close();
    return path;
}

struct CliRun {
    int code = 0;
    std::string out;
    std::string err;
};

CliRun run_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    CliRun r;
    r.code = cli_main(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

double value_after_colon(const std::string& line_prefix,
                         const std::string& text) {
    const auto pos = text.find(line_prefix);
    REQUIRE(pos != std::string::npos);
    const auto colon = text.find(": ", pos);
    REQUIRE(colon != std::string::npos);
    return std::stod(text.substr(colon + 2));
}

// strips the runtime (last) column from every data row so reruns of the
// same experiment can be compared byte for byte
std::string mask_runtime_column(const std::string& csv) {
    std::istringstream in(csv);
    std::ostringstream out;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!first) {
            const auto last = line.rfind(',');
            if (last != std::string::npos) line.resize(last + 1);
        }
        first = false;
        out << line << '\n';
    }
    return out.str();
}

} // namespace

TEST_CASE("experiment configs parse into typed settings") {
    const std::string text = square_config_text(
        "[4, 8, 16]", R"(["weak", "strong", "pde"])",
        R"(, "out": "report.csv", "paths": 555,)"
        R"( "grid": {"nodes_per_step": 3, "radius_multiple": 6.0,)"
        R"( "pde_nodes_per_side": 150, "sigma_refinement": 2})");
    const ExperimentConfig cfg = parse_experiment_text(text);
    CHECK(cfg.D.dim() == 1);
    const auto [r, R] = cfg.D.spectrum_bounds();
    CHECK(r == Catch::Approx(1.0));
    CHECK(R == Catch::Approx(4.0));
    CHECK(cfg.payoff.kind == PayoffKind::Terminal);
    CHECK(cfg.payoff.function == BuiltinFn::Square);
    CHECK(cfg.payoff.strike == 0.0);
    CHECK(cfg.payoff.growth.c == 3.0);
    CHECK(cfg.payoff.growth.p == 2.0);
    CHECK(cfg.T == 1.0);
    CHECK(cfg.n_schedule == std::vector<int>{4, 8, 16});
    CHECK(cfg.run_weak);
    CHECK(cfg.run_strong);
    CHECK(cfg.run_pde);
    CHECK(cfg.seed == 1);
    CHECK(cfg.bound_mode == BoundMode::Relaxed);
    CHECK(cfg.out_path == "report.csv");
    CHECK(cfg.paths == 555);
    CHECK(cfg.nodes_per_step == 3);
    CHECK(cfg.radius_multiple == 6.0);
    CHECK(cfg.pde_nodes_per_side == 150);
    CHECK(cfg.sigma_refinement == 2);

    SECTION("hull sets parse from row-major vertices") {
        const std::string hull = R"({
            "uncertainty": {"dim": 2, "kind": "hull",
                "vertices": [[1.0, 0.0, 0.0, 1.0], [4.0, 0.0, 0.0, 4.0]]},
            "payoff": {"kind": "terminal", "function": "square",
                       "growth": {"c": 3.0, "p": 2.0}},
            "T": 1.0, "n_schedule": [2, 4], "engines": ["weak"]})";
        const ExperimentConfig h = parse_experiment_text(hull);
        CHECK(h.D.dim() == 2);
        CHECK(h.D.vertices().size() == 2);
        const auto [hr, hR] = h.D.spectrum_bounds();
        CHECK(hr == Catch::Approx(1.0));
        CHECK(hR == Catch::Approx(4.0));
        CHECK_FALSE(h.run_strong);
    }

    SECTION("defaults fill optional fields") {
        const ExperimentConfig d = parse_experiment_text(
            square_config_text("[4]", R"(["weak"])"));
        CHECK(d.out_path.empty());
        CHECK(d.paths == 10000);
        CHECK(d.nodes_per_step == 2);
        CHECK(d.radius_multiple == 5.0);
        CHECK(d.pde_nodes_per_side == 200);
        CHECK(d.sigma_refinement == 0);
    }
}

TEST_CASE("malformed configs are rejected with a configuration error") {
    const std::vector<std::string> bad = {
        // not JSON at all
        "not json",
        // missing uncertainty
        R"({"payoff": {"kind": "terminal", "function": "square",
            "growth": {"c": 3, "p": 2}}, "T": 1,
            "n_schedule": [4], "engines": ["weak"]})",
        // interval in dimension 2
        R"({"uncertainty": {"dim": 2, "kind": "interval", "r": 1, "R": 4},
            "payoff": {"kind": "terminal", "function": "square",
            "growth": {"c": 3, "p": 2}}, "T": 1,
            "n_schedule": [4], "engines": ["weak"]})",
        // unknown set kind
        R"({"uncertainty": {"dim": 1, "kind": "ball", "r": 1, "R": 4},
            "payoff": {"kind": "terminal", "function": "square",
            "growth": {"c": 3, "p": 2}}, "T": 1,
            "n_schedule": [4], "engines": ["weak"]})",
        // vertex entry count mismatch
        R"({"uncertainty": {"dim": 2, "kind": "hull", "vertices": [[1, 0, 1]]},
            "payoff": {"kind": "terminal", "function": "square",
            "growth": {"c": 3, "p": 2}}, "T": 1,
            "n_schedule": [4], "engines": ["weak"]})",
        // empty vertex list
        R"({"uncertainty": {"dim": 2, "kind": "hull", "vertices": []},
            "payoff": {"kind": "terminal", "function": "square",
            "growth": {"c": 3, "p": 2}}, "T": 1,
            "n_schedule": [4], "engines": ["weak"]})",
        // interval with R < r
        R"({"uncertainty": {"dim": 1, "kind": "interval", "r": 4, "R": 1},
            "payoff": {"kind": "terminal", "function": "square",
            "growth": {"c": 3, "p": 2}}, "T": 1,
            "n_schedule": [4], "engines": ["weak"]})",
        // unknown payoff kind
        R"({"uncertainty": {"dim": 1, "kind": "interval", "r": 1, "R": 4},
            "payoff": {"kind": "barrier", "function": "square",
            "growth": {"c": 3, "p": 2}}, "T": 1,
            "n_schedule": [4], "engines": ["weak"]})",
        // unknown builtin function
        R"({"uncertainty": {"dim": 1, "kind": "interval", "r": 1, "R": 4},
            "payoff": {"kind": "terminal", "function": "cube",
            "growth": {"c": 3, "p": 2}}, "T": 1,
            "n_schedule": [4], "engines": ["weak"]})",
        // missing growth bound
        R"({"uncertainty": {"dim": 1, "kind": "interval", "r": 1, "R": 4},
            "payoff": {"kind": "terminal", "function": "square"}, "T": 1,
            "n_schedule": [4], "engines": ["weak"]})",
        // non-positive growth constant
        R"({"uncertainty": {"dim": 1, "kind": "interval", "r": 1, "R": 4},
            "payoff": {"kind": "terminal", "function": "square",
            "growth": {"c": 0, "p": 2}}, "T": 1,
            "n_schedule": [4], "engines": ["weak"]})",
        // missing T
        R"({"uncertainty": {"dim": 1, "kind": "interval", "r": 1, "R": 4},
            "payoff": {"kind": "terminal", "function": "square",
            "growth": {"c": 3, "p": 2}},
            "n_schedule": [4], "engines": ["weak"]})",
        // non-positive horizon
        R"({"uncertainty": {"dim": 1, "kind": "interval", "r": 1, "R": 4},
            "payoff": {"kind": "terminal", "function": "square",
            "growth": {"c": 3, "p": 2}}, "T": 0,
            "n_schedule": [4], "engines": ["weak"]})",
        // empty schedule
        R"({"uncertainty": {"dim": 1, "kind": "interval", "r": 1, "R": 4},
            "payoff": {"kind": "terminal", "function": "square",
            "growth": {"c": 3, "p": 2}}, "T": 1,
            "n_schedule": [], "engines": ["weak"]})",
        // schedule not strictly increasing
        R"({"uncertainty": {"dim": 1, "kind": "interval", "r": 1, "R": 4},
            "payoff": {"kind": "terminal", "function": "square",
            "growth": {"c": 3, "p": 2}}, "T": 1,
            "n_schedule": [4, 4], "engines": ["weak"]})",
        // schedule entry below one
        R"({"uncertainty": {"dim": 1, "kind": "interval", "r": 1, "R": 4},
            "payoff": {"kind": "terminal", "function": "square",
            "growth": {"c": 3, "p": 2}}, "T": 1,
            "n_schedule": [0, 4], "engines": ["weak"]})",
        // no engines
        R"({"uncertainty": {"dim": 1, "kind": "interval", "r": 1, "R": 4},
            "payoff": {"kind": "terminal", "function": "square",
            "growth": {"c": 3, "p": 2}}, "T": 1,
            "n_schedule": [4], "engines": []})",
        // unknown engine
        R"({"uncertainty": {"dim": 1, "kind": "interval", "r": 1, "R": 4},
            "payoff": {"kind": "terminal", "function": "square",
            "growth": {"c": 3, "p": 2}}, "T": 1,
            "n_schedule": [4], "engines": ["quantum"]})",
        // unknown bound mode
        R"({"uncertainty": {"dim": 1, "kind": "interval", "r": 1, "R": 4},
            "payoff": {"kind": "terminal", "function": "square",
            "growth": {"c": 3, "p": 2}}, "T": 1,
            "n_schedule": [4], "engines": ["weak"], "bound_mode": "loose"})",
        // negative path count
        R"({"uncertainty": {"dim": 1, "kind": "interval", "r": 1, "R": 4},
            "payoff": {"kind": "terminal", "function": "square",
            "growth": {"c": 3, "p": 2}}, "T": 1,
            "n_schedule": [4], "engines": ["weak"], "paths": -1})",
        // wrong type inside a field
        R"({"uncertainty": {"dim": 1, "kind": "interval", "r": "one", "R": 4},
            "payoff": {"kind": "terminal", "function": "square",
            "growth": {"c": 3, "p": 2}}, "T": 1,
            "n_schedule": [4], "engines": ["weak"]})",
    };
    for (const auto& text : bad) {
        INFO(text);
        CHECK_THROWS_AS(parse_experiment_text(text), ConfigError);
    }
}

TEST_CASE("config hashes are stable and separate different experiments") {
    const std::string a = square_config_text("[4, 8]", R"(["weak"])");
    const std::string b = square_config_text("[4, 16]", R"(["weak"])");
    const ExperimentConfig ca1 = parse_experiment_text(a);
    const ExperimentConfig ca2 = parse_experiment_text(a);
    const ExperimentConfig cb = parse_experiment_text(b);
    CHECK(config_hash(ca1.raw) == config_hash(ca2.raw));
    CHECK(config_hash(ca1.raw) != config_hash(cb.raw));
    CHECK(config_hash(ca1.raw) != 0);
}

TEST_CASE("convergence reports track the reference on the square payoff") {
    const ExperimentConfig cfg = parse_experiment_text(
        square_config_text("[4, 8, 16, 32, 64]",
                           R"(["weak", "strong", "pde"])"));
    const ConvergenceReport report = run_convergence(cfg);
    REQUIRE(report.rows.size() == 5);
    CHECK(report.config_hash == config_hash(cfg.raw));
    CHECK(report.seed == 1);
    CHECK(report.version == std::string(kVersion));
    int expected_n = 0;
    for (const auto& row : report.rows) {
        INFO("n = " << row.n);
        CHECK(row.error.empty());
        CHECK(row.n > expected_n);
        expected_n = row.n;
        REQUIRE(row.weak_value.has_value());
        REQUIRE(row.strong_value.has_value());
        REQUIRE(row.pde_reference.has_value());
        CHECK(*row.pde_reference == Catch::Approx(4.0).margin(1e-4));
        CHECK(*row.weak_abs_err <= 1e-2);
        CHECK(*row.strong_abs_err <= 1e-2);
        // one-step laws dominate the walk controls on the shared grid
        CHECK(*row.gap >= -1e-9);
        CHECK(row.runtime_ms >= 0.0);
    }
}

TEST_CASE("convergence errors shrink along the schedule for a kinked payoff") {
    const std::string text = std::string("{") +
        R"("uncertainty": {"dim": 1, "kind": "interval", "r": 1.0, "R": 4.0},)" +
        R"("payoff": {"kind": "terminal", "function": "call", "strike": 0.0,)" +
        R"( "growth": {"c": 3.0, "p": 1.0}},)" +
        R"("T": 1.0, "n_schedule": [4, 16, 64],)" +
        R"("engines": ["weak", "pde"], "seed": 1})";
    const ConvergenceReport report =
        run_convergence(parse_experiment_text(text));
    REQUIRE(report.rows.size() == 3);
    for (const auto& row : report.rows) {
        REQUIRE(row.pde_reference.has_value());
        CHECK(*row.pde_reference == Catch::Approx(kCallTarget).margin(2e-3));
        CHECK_FALSE(row.strong_value.has_value());
        CHECK_FALSE(row.strong_abs_err.has_value());
        CHECK_FALSE(row.gap.has_value());
    }
    const double e0 = *report.rows[0].weak_abs_err;
    const double e1 = *report.rows[1].weak_abs_err;
    const double e2 = *report.rows[2].weak_abs_err;
    CHECK(e1 <= 1.1 * e0 + 1e-9);
    CHECK(e2 <= 1.1 * e1 + 1e-9);
    CHECK(e2 < e0);
}

TEST_CASE("degenerate sets collapse both discrete engines onto the oracle") {
    const std::string text = std::string("{") +
        R"("uncertainty": {"dim": 1, "kind": "interval", "r": 2.0, "R": 2.0},)" +
        R"("payoff": {"kind": "terminal", "function": "call", "strike": 0.5,)" +
        R"( "growth": {"c": 3.0, "p": 1.0}},)" +
        R"("T": 1.0, "n_schedule": [4, 16, 64],)" +
        R"("engines": ["weak", "strong", "pde"], "seed": 1,)" +
        R"("bound_mode": "paper",)" +
        R"("grid": {"radius_multiple": 9.0}})";
    const ConvergenceReport report =
        run_convergence(parse_experiment_text(text));
    REQUIRE(report.rows.size() == 3);
    for (const auto& row : report.rows) {
        INFO("n = " << row.n);
        REQUIRE(row.weak_value.has_value());
        REQUIRE(row.strong_value.has_value());
        CHECK(std::abs(*row.gap) <= 1e-9);
        const double step = std::sqrt(2.0 / row.n);
        const double oracle = testsupport::binomial_terminal_expectation(
            row.n, step,
            [](double s) { return std::max(s - 0.5, 0.0); });
        CHECK(*row.weak_value == Catch::Approx(oracle).margin(1e-9));
        CHECK(*row.strong_value == Catch::Approx(oracle).margin(1e-9));
    }
    CHECK(*report.rows.back().weak_abs_err <= 1e-2);
    CHECK(*report.rows.back().strong_abs_err <= 1e-2);
}

TEST_CASE("engine failures flag the affected rows and keep the rest") {
    // the reference equation covers terminal payoffs, so asking for the pde
    // engine on a running-maximum payoff must degrade gracefully
    const std::string text = std::string("{") +
        R"("uncertainty": {"dim": 1, "kind": "interval", "r": 1.0, "R": 4.0},)" +
        R"("payoff": {"kind": "lookback", "function": "identity",)" +
        R"( "growth": {"c": 3.0, "p": 1.0}},)" +
        R"("T": 1.0, "n_schedule": [2, 4],)" +
        R"("engines": ["weak", "pde"], "seed": 1})";
    const ConvergenceReport report =
        run_convergence(parse_experiment_text(text));
    REQUIRE(report.rows.size() == 2);
    for (const auto& row : report.rows) {
        CHECK(row.weak_value.has_value());
        CHECK_FALSE(row.pde_reference.has_value());
        CHECK_FALSE(row.weak_abs_err.has_value());
        CHECK(row.error.find("pde:") != std::string::npos);
    }
}

TEST_CASE("csv reports use the fixed column layout") {
    ConvergenceReport report;
    ConvergenceRow full;
    full.n = 4;
    full.weak_value = 4.123456789012345;
    full.strong_value = 4.0;
    full.pde_reference = 4.000123456789;
    full.weak_abs_err = 0.123333332223345;
    full.strong_abs_err = 0.000123456789;
    full.gap = 0.123456789012345;
    full.runtime_ms = 12.5;
    ConvergenceRow weak_only;
    weak_only.n = 8;
    weak_only.weak_value = 3.5;
    weak_only.runtime_ms = 1.0;
    ConvergenceRow empty_row;
    empty_row.n = 16;
    empty_row.runtime_ms = 0.25;
    // rows arrive out of order and must be emitted sorted by n
    report.rows = {empty_row, full, weak_only};

    std::ostringstream os;
    emit_csv(report, os);
    const std::string csv = os.str();

    std::istringstream in(csv);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    REQUIRE(lines.size() == 4);
    CHECK(lines[0] ==
          "n,weak_value,strong_value,pde_reference,weak_abs_err,"
          "strong_abs_err,gap,runtime_ms");
    // ten significant digits, empty cells for engines that did not run
    CHECK(lines[1] ==
          "4,4.123456789,4,4.000123457,0.1233333322,0.000123456789,"
          "0.123456789,12.5");
    CHECK(lines[2] == "8,3.5,,,,,,1");
    CHECK(lines[3] == "16,,,,,,,0.25");
    CHECK(csv.find('\r') == std::string::npos);
    CHECK(csv.back() == '\n');

    SECTION("writing to an unreachable path reports the file name") {
        CHECK_THROWS_WITH(
            emit_csv(report, "/nonexistent_dir_zz/report.csv"),
            Catch::Matchers::ContainsSubstring("/nonexistent_dir_zz"));
    }
}

TEST_CASE("identical experiments emit identical reports") {
    const ExperimentConfig cfg = parse_experiment_text(
        square_config_text("[2, 4, 8]", R"(["weak", "pde"])"));
    std::ostringstream a, b;
    emit_csv(run_convergence(cfg), a);
    emit_csv(run_convergence(cfg), b);
    // runtimes differ between runs; every other byte must match
    CHECK(mask_runtime_column(a.str()) == mask_runtime_column(b.str()));
}

TEST_CASE("the command line maps outcomes onto exit codes") {
    const std::string square4 = write_temp_config(
        "square", square_config_text("[2, 4, 8]", R"(["weak", "pde"])"));

    SECTION("pricing subcommands print labeled values") {
        const CliRun pde = run_cli({"price-pde", "--config", square4});
        CHECK(pde.code == 0);
        CHECK(value_after_colon("pde reference", pde.out) ==
              Catch::Approx(4.0).margin(1e-3));

        const CliRun weak =
            run_cli({"price-weak", "--config", square4, "--n", "8"});
        CHECK(weak.code == 0);
        CHECK(weak.out.find("weak value (n = 8)") != std::string::npos);
        CHECK(value_after_colon("weak value", weak.out) ==
              Catch::Approx(4.0).margin(1e-2));

        const CliRun strong =
            run_cli({"price-strong", "--config", square4, "--n", "8"});
        CHECK(strong.code == 0);
        CHECK(value_after_colon("strong value", strong.out) ==
              Catch::Approx(4.0).margin(1e-2));
    }

    SECTION("converge writes the CSV file it was pointed at") {
        const std::string out_path = "harness_converge_out.csv";
        std::remove(out_path.c_str());
        const CliRun run = run_cli(
            {"converge", "--config", square4, "--out", out_path});
        CHECK(run.code == 0);
        CHECK(run.out.find(out_path) != std::string::npos);
        std::ifstream f(out_path, std::ios::binary);
        REQUIRE(f.good());
        std::stringstream ss;
        ss << f.rdbuf();
        const std::string csv = ss.str();
        CHECK(csv.rfind("n,weak_value,strong_value,pde_reference,"
                        "weak_abs_err,strong_abs_err,gap,runtime_ms\n",
                        0) == 0);
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
        std::remove(out_path.c_str());
    }

    SECTION("converge without an output path streams the CSV") {
        const std::string no_out = write_temp_config(
            "square_noout", square_config_text("[2, 4]", R"(["weak"])"));
        const CliRun run = run_cli({"converge", "--config", no_out});
        CHECK(run.code == 0);
        CHECK(run.out.rfind("n,weak_value,", 0) == 0);
        std::remove(no_out.c_str());
    }

    SECTION("flag and configuration problems exit with code two") {
        const CliRun unknown =
            run_cli({"price-weak", "--config", square4, "--bogus"});
        CHECK(unknown.code == 2);
        CHECK(unknown.err.find("Usage") != std::string::npos);

        const CliRun no_sub = run_cli({});
        CHECK(no_sub.code == 2);

        const CliRun missing =
            run_cli({"price-weak", "--config", "no_such_file.json"});
        CHECK(missing.code == 2);
        CHECK(missing.err.find("cannot open") != std::string::npos);

        const std::string broken =
            write_temp_config("broken", "{\"uncertainty\": ");
        const CliRun bad_json = run_cli({"price-weak", "--config", broken});
        CHECK(bad_json.code == 2);
        std::remove(broken.c_str());

        const CliRun bad_mode = run_cli(
            {"price-weak", "--config", square4, "--bound-mode", "loose"});
        CHECK(bad_mode.code == 2);

        const CliRun help = run_cli({"--help"});
        CHECK(help.code == 0);
        CHECK(help.out.find("Usage") != std::string::npos);
    }

    SECTION("validate accepts a law that honors its bounds") {
        const CliRun run = run_cli({"validate", "--config", square4, "--n",
                                    "8", "--paths", "4000"});
        CHECK(run.code == 0);
        CHECK(run.out.find("law validation: PASS") != std::string::npos);
    }

    SECTION("validate rejects a law built without pointwise bounds") {
        // built under mode "none" the optimal law for an out-of-the-money
        // call places an atom beyond the strict pointwise cap, so checking
        // it under mode "paper" must fail
        const std::string loose = write_temp_config(
            "loose",
            std::string("{") +
                R"("uncertainty": {"dim": 1, "kind": "interval", "r": 1.0,)" +
                R"( "R": 4.0},)" +
                R"("payoff": {"kind": "terminal", "function": "call",)" +
                R"( "strike": 1.0, "growth": {"c": 3.0, "p": 1.0}},)" +
                R"("T": 1.0, "n_schedule": [4], "engines": ["weak"],)" +
                R"("seed": 1, "bound_mode": "none"})");
        const CliRun run = run_cli({"validate", "--config", loose,
                                    "--bound-mode", "paper", "--paths",
                                    "2000"});
        CHECK(run.code == 1);
        CHECK(run.out.find("law validation: FAIL") != std::string::npos);
        CHECK(run.err.find("outside") != std::string::npos);
        std::remove(loose.c_str());
    }

    std::remove(square4.c_str());
}

TEST_CASE("sampled optimal laws satisfy the one-step contract") {
    const UncertaintySet D = UncertaintySet::make_interval(1.0, 4.0);
    const PathPayoff square = PathPayoff::builtin(
        PayoffKind::Terminal, BuiltinFn::Square, 0.0, GrowthBound{3.0, 2.0});

    SECTION("weak optimal law for the square payoff") {
        WeakDpConfig wcfg;
        wcfg.store_policy = true;
        const WeakDpResult res = weak_dp_value(square, D, 16, 1.0, wcfg);
        const OptimalLawSampler sampler(res);
        const LawValidationReport rep =
            validate_law(sampler, D, 16, 1.0, BoundMode::Relaxed, 4000, 3);
        INFO(rep.message);
        CHECK(rep.ok);
        CHECK(rep.pointwise_ok);
        CHECK(rep.quadratic_variation_ok);
        CHECK(rep.conditional_moment_ok);
        CHECK(rep.moment_tested);
        CHECK_FALSE(rep.vacuous_pairs);
        CHECK(rep.paths == 4000);

        // the bounds coincide across modes in one dimension
        const LawValidationReport paper =
            validate_law(sampler, D, 16, 1.0, BoundMode::Paper, 4000, 3);
        CHECK(paper.ok);
    }

    SECTION("strong optimal policy for a call") {
        const PathPayoff call = PathPayoff::builtin(
            PayoffKind::Terminal, BuiltinFn::Call, 0.2, GrowthBound{3.0, 1.0});
        StrongDpConfig scfg;
        scfg.store_policy = true;
        const StrongDpResult res = strong_dp_value(call, D, 16, 1.0, scfg);
        REQUIRE(res.has_policy);
        const StrongPathSampler sampler(res.policy, build_basis(1));
        const LawValidationReport rep =
            validate_law(sampler, D, 16, 1.0, BoundMode::Relaxed, 4000, 5);
        INFO(rep.message);
        CHECK(rep.ok);
    }

    SECTION("dyadic fourth moments scale like the square of the lag") {
        const UncertaintySet dgn = UncertaintySet::make_interval(2.0, 2.0);
        WeakDpConfig wcfg;
        wcfg.store_policy = true;
        const WeakDpResult res = weak_dp_value(square, dgn, 64, 1.0, wcfg);
        const OptimalLawSampler sampler(res);
        const LawValidationReport rep =
            validate_law(sampler, dgn, 64, 1.0, BoundMode::Paper, 4000, 3);
        INFO(rep.message);
        CHECK(rep.ok);
        CHECK(rep.scaling_tested);
        CHECK(rep.fourth_moment_exponent >= 1.8);
        CHECK(rep.fourth_moment_exponent <= 2.2);
        CHECK(rep.fourth_moment_constant > 0.0);
    }

    SECTION("a single path leaves the moment check vacuous") {
        WeakDpConfig wcfg;
        wcfg.store_policy = true;
        const WeakDpResult res = weak_dp_value(square, D, 8, 1.0, wcfg);
        const OptimalLawSampler sampler(res);
        const LawValidationReport rep =
            validate_law(sampler, D, 8, 1.0, BoundMode::Relaxed, 1, 3);
        CHECK(rep.ok);
        CHECK(rep.vacuous_pairs);
        CHECK_FALSE(rep.moment_tested);
    }

    SECTION("laws built without bounds fail the strict pointwise check") {
        const PathPayoff otm = PathPayoff::builtin(
            PayoffKind::Terminal, BuiltinFn::Call, 1.0, GrowthBound{3.0, 1.0});
        WeakDpConfig wcfg;
        wcfg.store_policy = true;
        wcfg.mode = BoundMode::None;
        const WeakDpResult res = weak_dp_value(otm, D, 4, 1.0, wcfg);
        const OptimalLawSampler sampler(res);
        const LawValidationReport rep =
            validate_law(sampler, D, 4, 1.0, BoundMode::Paper, 2000, 3);
        CHECK_FALSE(rep.ok);
        CHECK_FALSE(rep.pointwise_ok);
        CHECK(rep.message.find("outside") != std::string::npos);
        CHECK(rep.message.find("path") != std::string::npos);
    }

    SECTION("argument validation") {
        WeakDpConfig wcfg;
        wcfg.store_policy = true;
        const WeakDpResult res = weak_dp_value(square, D, 4, 1.0, wcfg);
        const OptimalLawSampler sampler(res);
        CHECK_THROWS_AS(
            validate_law(sampler, D, 0, 1.0, BoundMode::Paper, 100, 0),
            std::invalid_argument);
        CHECK_THROWS_AS(
            validate_law(sampler, D, 4, 0.0, BoundMode::Paper, 100, 0),
            std::invalid_argument);
        CHECK_THROWS_AS(
            validate_law(sampler, D, 4, 1.0, BoundMode::Paper, 0, 0),
            std::invalid_argument);
        // a sampler emitting paths of the wrong length is caught
        CHECK_THROWS_AS(
            validate_law(sampler, D, 8, 1.0, BoundMode::Paper, 10, 0),
            std::invalid_argument);
    }
}
