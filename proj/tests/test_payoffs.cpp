#include "gexp/payoff.hpp"
#include "support/test_rng.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace gexp;
using testsupport::Rand;

namespace {

DiscretePath path_1d(double T, std::vector<double> knots) {
    std::vector<Eigen::VectorXd> pts;
    for (double k : knots) {
        Eigen::VectorXd v(1);
        v << k;
        pts.push_back(v);
    }
    return DiscretePath(static_cast<int>(knots.size()) - 1, T, std::move(pts));
}

DiscretePath random_path(Rand& rand, int dim, int n, double T,
                         double step_scale) {
    std::vector<Eigen::VectorXd> pts;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
    pts.push_back(x);
    for (int k = 0; k < n; ++k) {
        for (int i = 0; i < dim; ++i) x(i) += step_scale * rand.normal();
        pts.push_back(x);
    }
    return DiscretePath(n, T, std::move(pts));
}

} // namespace

TEST_CASE("path validation") {
    CHECK_THROWS_AS(path_1d(1.0, {1.0, 2.0}), std::invalid_argument);
    CHECK_NOTHROW(path_1d(1.0, {0.0, 2.0}));
    CHECK_THROWS_AS(DiscretePath(0, 1.0, {}), std::invalid_argument);
}

TEST_CASE("interpolation hits the stated values") {
    auto path = path_1d(1.0, {0.0, 1.0, 3.0});
    CHECK(interpolate(path, 0.25)(0) == Catch::Approx(0.5));
    CHECK(interpolate(path, 0.0)(0) == 0.0);
    CHECK(interpolate(path, 1.0)(0) == 3.0);
    CHECK(interpolate(path, 0.5)(0) == Catch::Approx(1.0));
    CHECK(interpolate(path, 0.75)(0) == Catch::Approx(2.0));
    CHECK_THROWS_AS(interpolate(path, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(interpolate(path, -0.1), std::invalid_argument);
}

TEST_CASE("interpolation is exact at knots and linear between") {
    Rand rand(5);
    auto path = random_path(rand, 2, 8, 2.0, 0.5);
    for (int k = 0; k <= path.n; ++k) {
        const double t = path.T * k / path.n;
        CHECK((interpolate(path, t) - path.points[k]).norm() < 1e-12);
    }
    // second differences along any segment vanish
    for (int trial = 0; trial < 50; ++trial) {
        const int k = static_cast<int>(rand.index(path.n));
        const double t0 = path.T * k / path.n;
        const double dt = path.T / path.n;
        const double a = rand.uniform(0.3, 0.7) * dt;
        const double b = rand.uniform(0.0, 0.25) * dt;
        const Eigen::VectorXd lhs = interpolate(path, t0 + a + b) +
                                    interpolate(path, t0 + a - b);
        const Eigen::VectorXd rhs = 2.0 * interpolate(path, t0 + a);
        CHECK((lhs - rhs).norm() < 1e-10);
    }
}

TEST_CASE("terminal square evaluates the endpoint") {
    auto payoff = PathPayoff::builtin(PayoffKind::Terminal, BuiltinFn::Square,
                                      0.0, {1.0, 2.0});
    CHECK(payoff.evaluate_on_discrete(path_1d(1.0, {0.0, 1.0, 3.0})) == 9.0);
}

TEST_CASE("lookback max is the knot maximum") {
    auto payoff = PathPayoff::builtin(PayoffKind::Lookback,
                                      BuiltinFn::Identity, 0.0, {1.0, 1.0});
    CHECK(payoff.evaluate_on_discrete(path_1d(1.0, {0.0, 2.0, 1.0})) == 2.0);
    // running max never goes below the start
    CHECK(payoff.evaluate_on_discrete(path_1d(1.0, {0.0, -2.0, -1.0})) == 0.0);
}

TEST_CASE("average is the exact time integral of the interpolation") {
    auto payoff = PathPayoff::builtin(PayoffKind::Average, BuiltinFn::Identity,
                                      0.0, {1.0, 1.0});
    CHECK(payoff.evaluate_on_discrete(path_1d(1.0, {0.0, 1.0, 3.0})) ==
          Catch::Approx(1.25));
}

TEST_CASE("builtin menu") {
    CHECK(apply_builtin(builtin_from_name("call"), 2.0, 0.5) == 1.5);
    CHECK(apply_builtin(builtin_from_name("put"), 2.0, 3.0) == 1.0);
    CHECK(apply_builtin(builtin_from_name("abs"), -2.0, 0.0) == 2.0);
    CHECK(apply_builtin(builtin_from_name("neg_square"), 3.0, 0.0) == -9.0);
    CHECK_THROWS_AS(builtin_from_name("straddle"), std::invalid_argument);
}

TEST_CASE("markov state dimensions") {
    auto sq = PathPayoff::builtin(PayoffKind::Terminal, BuiltinFn::Square, 0.0,
                                  {1.0, 2.0});
    CHECK(markov_spec(sq, 1, 4, 1.0).state_dim() == 1);
    CHECK(markov_spec(sq, 3, 4, 1.0).state_dim() == 3);
    auto lb = PathPayoff::builtin(PayoffKind::Lookback, BuiltinFn::Identity,
                                  0.0, {1.0, 1.0});
    CHECK(markov_spec(lb, 1, 4, 1.0).state_dim() == 2);
    auto av = PathPayoff::builtin(PayoffKind::Average, BuiltinFn::Identity,
                                  0.0, {1.0, 1.0});
    CHECK(markov_spec(av, 1, 4, 1.0).state_dim() == 2);
    CHECK(markov_spec(av, 2, 4, 1.0).state_dim() == 3);
}

TEST_CASE("markov replay reproduces direct evaluation") {
    Rand rand(77);
    std::vector<PathPayoff> payoffs = {
        PathPayoff::builtin(PayoffKind::Terminal, BuiltinFn::Square, 0.0,
                            {1.0, 2.0}),
        PathPayoff::builtin(PayoffKind::Terminal, BuiltinFn::Call, 0.5,
                            {2.0, 1.0}),
        PathPayoff::builtin(PayoffKind::Lookback, BuiltinFn::Identity, 0.0,
                            {1.0, 1.0}),
        PathPayoff::builtin(PayoffKind::Lookback, BuiltinFn::Square, 0.0,
                            {1.0, 2.0}),
        PathPayoff::builtin(PayoffKind::Average, BuiltinFn::Abs, 0.0,
                            {1.0, 1.0}),
        PathPayoff::builtin(PayoffKind::Average, BuiltinFn::Square, 0.0,
                            {1.0, 2.0}),
    };
    for (int dim : {1, 2}) {
        for (const auto& payoff : payoffs) {
            for (int trial = 0; trial < 10; ++trial) {
                const int n = 2 + static_cast<int>(rand.index(20));
                const double T = rand.uniform(0.5, 2.5);
                auto path = random_path(rand, dim, n, T, 0.4);
                auto spec = markov_spec(payoff, dim, n, T);
                Eigen::VectorXd state = spec.initial_state();
                for (int k = 1; k <= n; ++k)
                    state = spec.update(state, path.points[k]);
                const double direct = payoff.evaluate_on_discrete(path);
                CHECK(spec.terminal_value(state) ==
                      Catch::Approx(direct).margin(1e-12));
            }
        }
    }
}

TEST_CASE("markov replay for custom payoffs in d == 1") {
    Rand rand(31);
    auto lb = PathPayoff::lookback(
        [](const Eigen::VectorXd& x, double m) { return m - x(0); },
        {2.0, 1.0});
    auto av = PathPayoff::average(
        [](const Eigen::VectorXd& x, const Eigen::VectorXd& a) {
            return a(0) * a(0) + x(0);
        },
        {2.0, 2.0});
    for (const auto& payoff : {lb, av}) {
        for (int trial = 0; trial < 10; ++trial) {
            const int n = 2 + static_cast<int>(rand.index(16));
            auto path = random_path(rand, 1, n, 1.0, 0.3);
            auto spec = markov_spec(payoff, 1, n, 1.0);
            Eigen::VectorXd state = spec.initial_state();
            for (int k = 1; k <= n; ++k)
                state = spec.update(state, path.points[k]);
            CHECK(spec.terminal_value(state) ==
                  Catch::Approx(payoff.evaluate_on_discrete(path))
                      .margin(1e-12));
        }
    }
    // custom average payoffs have no d >= 2 state representation
    CHECK_THROWS_AS(markov_spec(av, 2, 4, 1.0), std::logic_error);
}

TEST_CASE("growth violations are counted, not fatal") {
    auto honest = PathPayoff::builtin(PayoffKind::Terminal, BuiltinFn::Square,
                                      0.0, {1.0, 2.0});
    auto lying = PathPayoff::terminal(
        [](const Eigen::VectorXd& x) { return x.squaredNorm(); }, {0.1, 1.0});
    auto path = path_1d(1.0, {0.0, 1.0, 3.0});
    CHECK(honest.evaluate_on_discrete(path) == 9.0);
    CHECK(honest.growth_violations() == 0);
    CHECK(lying.evaluate_on_discrete(path) == 9.0);
    CHECK(lying.growth_violations() == 1);
    lying.evaluate_on_discrete(path);
    CHECK(lying.growth_violations() == 2);
}
