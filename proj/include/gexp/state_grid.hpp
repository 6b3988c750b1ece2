#pragma once

// Uniform state grids shared by the backward DP engines. The position
// spacing divides the largest admissible step magnitude sqrt(R * T / n)
// evenly, so the extreme per-step atoms land on lattice nodes. Node-exact
// payoffs (quadratics, degenerate binomial trees) then telescope through the
// recursion without interpolation error.
//
// Axis layout follows the Markov state: d position axes first, then one
// auxiliary axis for path-dependent payoffs (running maximum on the same
// lattice; running integral on a scaled lattice).

#include "gexp/payoff.hpp"
#include "gexp/uncertainty_set.hpp"
#include "gexp/value_grid.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace gexp {

struct StateGridConfig {
    int nodes_per_step = 2;       // lattice cells per extreme step magnitude
    double radius_multiple = 5.0; // grid radius in units of sqrt(R T)
};

struct StateGrid {
    std::vector<GridAxis> axes; // one per Markov state coordinate
    double h = 0.0;             // position spacing
    double radius = 0.0;        // position half-width
};

inline StateGrid make_state_grid(const UncertaintySet& D, int n, double T,
                                 const MarkovStateSpec& spec,
                                 const StateGridConfig& cfg = {}) {
    if (n < 1) throw std::invalid_argument("make_state_grid: n >= 1");
    if (T <= 0.0) throw std::invalid_argument("make_state_grid: T > 0");
    if (cfg.nodes_per_step < 1)
        throw std::invalid_argument("make_state_grid: nodes_per_step >= 1");
    if (cfg.radius_multiple < 4.0)
        throw std::invalid_argument(
            "make_state_grid: grid radius too small; at least 4*sqrt(R*T) "
            "is required");
    const double R = D.spectrum_bounds().second;
    const bool has_aux = spec.kind() != PayoffKind::Terminal;
    const int position_dims = spec.state_dim() - (has_aux ? 1 : 0);

    StateGrid g;
    if (R <= 0.0) {
        // the only admissible process is frozen at the origin; keep a
        // minimal 3-node axis so interpolation cells stay well-formed
        g.h = 1.0;
        g.radius = 1.0;
        for (int i = 0; i < position_dims; ++i)
            g.axes.push_back(GridAxis{-1.0, 1.0, 3});
        if (has_aux) {
            if (spec.kind() == PayoffKind::Lookback)
                g.axes.push_back(GridAxis{0.0, 1.0, 2});
            else
                g.axes.push_back(GridAxis{-1.0, 1.0, 3});
        }
        return g;
    }
    g.h = std::sqrt(R * T / n) / cfg.nodes_per_step;
    g.radius = cfg.radius_multiple * std::sqrt(R * T);
    const GridAxis position = centered_axis(g.radius, g.h);
    for (int i = 0; i < position_dims; ++i) g.axes.push_back(position);
    if (has_aux) {
        const int half = (position.count - 1) / 2;
        if (spec.kind() == PayoffKind::Lookback) {
            // running maximum of the first coordinate: starts at 0, shares
            // the position lattice so max-updates stay node-exact
            g.axes.push_back(GridAxis{0.0, g.h, half + 1});
        } else {
            // running integral: bounded by radius * T on the visible range
            g.axes.push_back(centered_axis(g.radius * T,
                                           g.radius * T / half));
        }
    }
    return g;
}

} // namespace gexp
