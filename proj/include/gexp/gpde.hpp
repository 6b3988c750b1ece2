#pragma once

// Continuous-time reference values from the nonlinear backward heat
// equation
//     -du/dt - G(d2u/dx2) = 0,   u(T, x) = f(x),
// where G(g) = (R g+ - r g-) / 2 encodes the volatility band [r, R]. The
// reference value is u(0, 0).
//
// The solver is an explicit monotone finite-difference scheme: backward in
// time from the terminal data, central second differences in space, with the
// nonlinearity applied pointwise. Monotonicity (and with it the comparison
// principle) holds under the CFL restriction dt <= h^2 / R, which is
// enforced, not assumed. Boundary nodes evolve with a zero second
// difference, i.e. the data continue linearly; with the default domain
// radius of five standard deviations the boundary's influence on the origin
// is far below the scheme's own discretization error.
//
// A diagonal two-dimensional variant covers hulls of diagonal matrices,
// where the maximizing vertex needs no cross-derivative terms.

#include "gexp/payoff.hpp"
#include "gexp/uncertainty_set.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gexp {

// G(g) = (R g+ - r g-) / 2 for a scalar band [r, R].
inline double g_scalar(double gamma, double r, double R) {
    return 0.5 * (R * std::max(gamma, 0.0) - r * std::max(-gamma, 0.0));
}

// ----------------------------------------------------------------------------
// Grids

struct PdeGrid1D {
    double h = 0.0;     // spatial spacing; nodes at multiples of h
    double radius = 0.0; // domain is [-radius, radius]
    int time_steps = 0; // m; dt = T / m
};

// Default grid: `nodes_per_side` spatial nodes per side of the origin, a
// domain of `radius_multiple` standard deviations, and the largest time step
// keeping `cfl_fraction` of the monotonicity bound.
inline PdeGrid1D make_pde_grid(const UncertaintySet& D, double T,
                               int nodes_per_side = 200,
                               double radius_multiple = 5.0,
                               double cfl_fraction = 0.9) {
    if (nodes_per_side < 2)
        throw std::invalid_argument("make_pde_grid: nodes_per_side >= 2");
    if (T <= 0.0) throw std::invalid_argument("make_pde_grid: T > 0");
    if (cfl_fraction <= 0.0 || cfl_fraction > 1.0)
        throw std::invalid_argument(
            "make_pde_grid: cfl_fraction in (0, 1]");
    const double R = D.spectrum_bounds().second;
    PdeGrid1D g;
    g.radius = radius_multiple * std::sqrt(std::max(R, 1e-12) * T);
    g.h = g.radius / nodes_per_side;
    const double dim_factor = D.dim() >= 2 ? 2.0 : 1.0;
    const double dt_max =
        cfl_fraction * g.h * g.h / (dim_factor * std::max(R, 1e-12));
    g.time_steps = std::max(1, static_cast<int>(std::ceil(T / dt_max)));
    return g;
}

struct PdeSolution {
    double value_at_origin = 0.0;
    double h = 0.0;
    double radius = 0.0;
    double dt = 0.0;
    int time_steps = 0;
    std::vector<double> x_nodes;     // spatial nodes
    std::vector<double> initial_slice; // u(0, x) after the backward sweep
};

namespace detail {

inline void check_pde_grid(const PdeGrid1D& grid, double T, double R,
                           double dim_factor) {
    if (grid.h <= 0.0 || grid.radius <= 0.0 || grid.time_steps < 1)
        throw std::invalid_argument("pde grid: positive h, radius, steps");
    const double min_radius = 5.0 * std::sqrt(std::max(R, 1e-12) * T);
    if (grid.radius < min_radius * (1.0 - 1e-12))
        throw std::invalid_argument(
            "pde grid: radius too small; at least 5*sqrt(R*T) = " +
            std::to_string(min_radius) + " is required");
    const double dt = T / grid.time_steps;
    const double dt_max = grid.h * grid.h / (dim_factor * std::max(R, 1e-12));
    if (dt > dt_max * (1.0 + 1e-12))
        throw std::invalid_argument(
            "pde grid: CFL violated; maximal admissible dt = " +
            std::to_string(dt_max) + ", requested dt = " +
            std::to_string(dt));
}

} // namespace detail

// ----------------------------------------------------------------------------
// One-dimensional solver

inline PdeSolution solve_terminal(const std::function<double(double)>& f,
                                  const UncertaintySet& D, double T,
                                  const PdeGrid1D& grid) {
    if (D.dim() != 1)
        throw std::invalid_argument("solve_terminal: one-dimensional sets");
    if (T <= 0.0) throw std::invalid_argument("solve_terminal: T > 0");
    const auto [r, R] = D.spectrum_bounds();
    detail::check_pde_grid(grid, T, R, 1.0);

    const int half = static_cast<int>(std::lround(grid.radius / grid.h));
    const int count = 2 * half + 1;
    const double dt = T / grid.time_steps;
    const double inv_h2 = 1.0 / (grid.h * grid.h);

    PdeSolution sol;
    sol.h = grid.h;
    sol.radius = grid.radius;
    sol.dt = dt;
    sol.time_steps = grid.time_steps;
    sol.x_nodes.resize(count);
    for (int i = 0; i < count; ++i)
        sol.x_nodes[i] = (i - half) * grid.h;

    std::vector<double> u(count), w(count);
    for (int i = 0; i < count; ++i) u[i] = f(sol.x_nodes[i]);

    for (int j = 0; j < grid.time_steps; ++j) {
        w[0] = u[0];                 // zero second difference at the edge
        w[count - 1] = u[count - 1]; // (data continue linearly)
        for (int i = 1; i + 1 < count; ++i) {
            const double gamma = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_h2;
            w[i] = u[i] + dt * g_scalar(gamma, r, R);
        }
        u.swap(w);
    }

    for (double v : u)
        if (!std::isfinite(v))
            throw std::runtime_error(
                "solve_terminal: scheme produced non-finite values");
    sol.value_at_origin = u[half];
    sol.initial_slice = std::move(u);
    return sol;
}

// Convenience overload for terminal payoffs; also enforces the payoff's own
// growth bound on the returned origin value.
inline PdeSolution solve_terminal(const PathPayoff& payoff,
                                  const UncertaintySet& D, double T,
                                  const PdeGrid1D& grid) {
    if (payoff.kind() != PayoffKind::Terminal)
        throw std::invalid_argument(
            "solve_terminal: the equation covers terminal payoffs only");
    Eigen::VectorXd p(1);
    PdeSolution sol = solve_terminal(
        [&payoff, &p](double x) mutable {
            p(0) = x;
            return payoff.terminal_value(p);
        },
        D, T, grid);
    const GrowthBound& g = payoff.growth();
    const double bound = g.c * std::pow(1.0 + grid.radius, g.p);
    if (std::abs(sol.value_at_origin) > bound)
        throw std::runtime_error(
            "solve_terminal: origin value escapes the payoff growth bound");
    return sol;
}

// ----------------------------------------------------------------------------
// Gaussian oracles

// 64-point Gauss-Hermite rule (weight exp(-x^2)), built once from the
// Jacobi matrix of the recurrence (Golub-Welsch): nodes are eigenvalues,
// weights sqrt(pi) times the squared first eigenvector components.
inline const std::pair<std::vector<double>, std::vector<double>>&
gauss_hermite_64() {
    static const auto rule = [] {
        const int m = 64;
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, m);
        for (int k = 1; k < m; ++k) {
            const double b = std::sqrt(0.5 * k);
            J(k, k - 1) = b;
            J(k - 1, k) = b;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
        if (es.info() != Eigen::Success)
            throw std::runtime_error("gauss_hermite_64: eigensolver failed");
        std::pair<std::vector<double>, std::vector<double>> out;
        out.first.resize(m);
        out.second.resize(m);
        const double sqrt_pi = std::sqrt(M_PI);
        for (int i = 0; i < m; ++i) {
            out.first[i] = es.eigenvalues()[i];
            const double q0 = es.eigenvectors()(0, i);
            out.second[i] = sqrt_pi * q0 * q0;
        }
        return out;
    }();
    return rule;
}

// E[g(X)] for X ~ N(0, sigma^2 T) by 64-point Gauss-Hermite quadrature.
inline double gaussian_expectation(const std::function<double(double)>& g,
                                   double sigma, double T) {
    if (sigma < 0.0)
        throw std::invalid_argument("gaussian_expectation: sigma >= 0");
    if (T < 0.0) throw std::invalid_argument("gaussian_expectation: T >= 0");
    const double s = sigma * std::sqrt(T);
    if (s == 0.0) return g(0.0);
    const auto& [nodes, weights] = gauss_hermite_64();
    const double c = std::sqrt(2.0) * s;
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i)
        acc += weights[i] * g(c * nodes[i]);
    return acc / std::sqrt(M_PI);
}

inline double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

inline double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
}

// E[f(sigma * W_T)] for the built-in payoff functions: closed form where one
// exists (all six have one); `strike` feeds the kinked functions.
inline double gaussian_oracle(BuiltinFn fn, double strike, double sigma,
                              double T) {
    if (sigma < 0.0)
        throw std::invalid_argument("gaussian_oracle: sigma >= 0");
    if (T < 0.0) throw std::invalid_argument("gaussian_oracle: T >= 0");
    const double s = sigma * std::sqrt(T);
    switch (fn) {
        case BuiltinFn::Square:
            return s * s;
        case BuiltinFn::Identity:
            return 0.0;
        case BuiltinFn::NegSquare:
            return -s * s;
        case BuiltinFn::Abs:
            return s * std::sqrt(2.0 / M_PI);
        case BuiltinFn::Call:
            if (s == 0.0) return std::max(-strike, 0.0);
            return s * normal_pdf(strike / s) -
                   strike * normal_cdf(-strike / s);
        case BuiltinFn::Put:
            if (s == 0.0) return std::max(strike, 0.0);
            return s * normal_pdf(strike / s) +
                   strike * normal_cdf(strike / s);
    }
    throw std::logic_error("gaussian_oracle: unknown function");
}

// ----------------------------------------------------------------------------
// Diagonal two-dimensional solver

// Restricted planar reference: every hull vertex must be diagonal, so the
// maximizing vertex never needs cross-derivative terms and
// G(diag(g1, g2)) = max over vertices diag(a1, a2) of (a1 g1 + a2 g2) / 2.
inline PdeSolution solve_diag_2d(
    const std::function<double(double, double)>& f, const UncertaintySet& D,
    double T, const PdeGrid1D& grid) {
    if (D.dim() != 2)
        throw std::invalid_argument("solve_diag_2d: two-dimensional sets");
    if (T <= 0.0) throw std::invalid_argument("solve_diag_2d: T > 0");
    std::vector<std::pair<double, double>> diags;
    for (const auto& v : D.vertices()) {
        if (std::abs(v(0, 1)) > 1e-12)
            throw std::invalid_argument(
                "solve_diag_2d: unsupported non-diagonal vertex");
        diags.emplace_back(v(0, 0), v(1, 1));
    }
    const double R = D.spectrum_bounds().second;
    detail::check_pde_grid(grid, T, R, 2.0);

    const int half = static_cast<int>(std::lround(grid.radius / grid.h));
    const int count = 2 * half + 1;
    const double dt = T / grid.time_steps;
    const double inv_h2 = 1.0 / (grid.h * grid.h);
    const auto at = [count](int i, int j) { return i * count + j; };

    std::vector<double> u(static_cast<std::size_t>(count) * count);
    std::vector<double> w(u.size());
    for (int i = 0; i < count; ++i)
        for (int j = 0; j < count; ++j)
            u[at(i, j)] = f((i - half) * grid.h, (j - half) * grid.h);

    for (int step = 0; step < grid.time_steps; ++step) {
        w = u; // boundary rows/columns keep a zero second difference
        for (int i = 1; i + 1 < count; ++i) {
            for (int j = 1; j + 1 < count; ++j) {
                const double g1 = (u[at(i + 1, j)] - 2.0 * u[at(i, j)] +
                                   u[at(i - 1, j)]) *
                                  inv_h2;
                const double g2 = (u[at(i, j + 1)] - 2.0 * u[at(i, j)] +
                                   u[at(i, j - 1)]) *
                                  inv_h2;
                double best = 0.5 * (diags[0].first * g1 +
                                     diags[0].second * g2);
                for (std::size_t v = 1; v < diags.size(); ++v)
                    best = std::max(best, 0.5 * (diags[v].first * g1 +
                                                 diags[v].second * g2));
                w[at(i, j)] = u[at(i, j)] + dt * best;
            }
        }
        u.swap(w);
    }

    PdeSolution sol;
    sol.h = grid.h;
    sol.radius = grid.radius;
    sol.dt = dt;
    sol.time_steps = grid.time_steps;
    sol.value_at_origin = u[at(half, half)];
    if (!std::isfinite(sol.value_at_origin))
        throw std::runtime_error(
            "solve_diag_2d: scheme produced non-finite values");
    return sol;
}

} // namespace gexp
