#pragma once

/**
 * @file remap.hpp
 * @brief Remapping onto the cartesian grid and the dynamic remapping criterion.
 */

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>

#include "tpart/density.hpp"
#include "tpart/errors.hpp"
#include "tpart/flows.hpp"
#include "tpart/grid.hpp"
#include "tpart/kernels.hpp"
#include "tpart/particles.hpp"

namespace tpart {

struct RemapPolicy {
    enum class Mode { never, fixed, dynamic };
    Mode mode = Mode::never;
    int period = 1;        ///< static remapping period N_r, in steps
    double c_remap = 1.0;  ///< dynamic threshold

    static RemapPolicy never() { return {}; }
    static RemapPolicy every(int n) { return {Mode::fixed, n, 1.0}; }
    static RemapPolicy dynamic(double c) { return {Mode::dynamic, 1, c}; }
};

/// "never", "static:N" or "dynamic:C".
inline RemapPolicy parse_remap_policy(std::string_view s) {
    if (s == "never") return RemapPolicy::never();
    const auto colon = s.find(':');
    if (colon != std::string_view::npos) {
        const std::string head(s.substr(0, colon));
        const std::string arg(s.substr(colon + 1));
        try {
            std::size_t used = 0;
            if (head == "static") {
                const int n = std::stoi(arg, &used);
                if (used == arg.size() && n >= 1) return RemapPolicy::every(n);
            } else if (head == "dynamic") {
                const double c = std::stod(arg, &used);
                if (used == arg.size() && c > 0.0) return RemapPolicy::dynamic(c);
            }
        } catch (const std::exception&) {
        }
    }
    throw ConfigError("invalid remap policy '" + std::string(s) + "' (never | static:N | dynamic:C)");
}

inline std::string to_string(const RemapPolicy& p) {
    switch (p.mode) {
        case RemapPolicy::Mode::never: return "never";
        case RemapPolicy::Mode::fixed: return "static:" + std::to_string(p.period);
        case RemapPolicy::Mode::dynamic: {
            char buf[64];
            std::snprintf(buf, sizeof buf, "dynamic:%g", p.c_remap);
            return buf;
        }
    }
    return "?";
}

/// Density samples at the last remap and their grid gradients.
struct RemapCache {
    GridField samples;
    GridField grad_x;
    GridField grad_y;
    double fmax = 0.0;
};

/// Central differences with step h, one-sided on the edges of the sample box.
inline RemapCache make_remap_cache(GridField samples, double h) {
    RemapCache c;
    const IndexBox box = samples.box();
    c.grad_x = GridField(box);
    c.grad_y = GridField(box);
    for (int j = box.lo; j <= box.hi; ++j) {
        for (int i = box.lo; i <= box.hi; ++i) {
            c.fmax = std::max(c.fmax, std::abs(samples.at(i, j)));
            const int il = std::max(i - 1, box.lo), ir = std::min(i + 1, box.hi);
            const int jl = std::max(j - 1, box.lo), jr = std::min(j + 1, box.hi);
            c.grad_x.at(i, j) =
                ir > il ? (samples.at(ir, j) - samples.at(il, j)) / (h * (ir - il)) : 0.0;
            c.grad_y.at(i, j) =
                jr > jl ? (samples.at(i, jr) - samples.at(i, jl)) / (h * (jr - jl)) : 0.0;
        }
    }
    c.samples = std::move(samples);
    return c;
}

/// Exact initial data on the nodes of `box`.
inline GridField sample_on_grid(const InitialData& data, const GridSpec& grid, const IndexBox& box) {
    GridField g(box);
    for (int j = box.lo; j <= box.hi; ++j)
        for (int i = box.lo; i <= box.hi; ++i) g.at(i, j) = data.density(grid.node(i, j));
    return g;
}

/// Numerical density on the nodes of `box`.
inline GridField sample_density(const ParticleSet& set, const IndexBox& box) {
    const Lattice lat = node_lattice(set.grid, box);
    const auto v = eval_density_lattice(set, lat);
    GridField g(box);
    g.values() = v;
    return g;
}

/**
 * Replaces the particles by the quasi-interpolant of their current density.
 *
 * The density is sampled on the particle grid enlarged by the stencil
 * radius; everything is reset to the undeformed grid state and the cache
 * is refreshed from the samples.
 */
inline RemapCache remap(ParticleSet& set) {
    if (set.method == Method::tsp) throw ConfigError("TSP particles are never remapped");
    const IndexBox sbox = set.grid.box.grown(set.kernel.stencil_radius());
    GridField samples = sample_density(set, sbox);
    for (double v : samples.values())
        if (!std::isfinite(v)) throw NumericalError("non-finite density while remapping");
    const GridField weights = quasi_weights(set.kernel, set.grid.h, samples, set.grid.box);
    RemapCache cache = make_remap_cache(std::move(samples), set.grid.h);
    reset_to_grid(set, weights, cache.fmax);
    return cache;
}

/// (1 + e1/h)^d (er/h) |f|_inf with r = 1 for LTP and 2 for QTP.
inline double transport_error_indicator(const ParticleSet& set, double fmax) {
    if (!set.has_markers())
        throw ConfigError("transport-error indicator needs the direct scheme (markers)");
    const double h = set.grid.h;
    const double e1 = backward_flow_indicator(set, 1);
    const double er = backward_flow_indicator(set, set.method == Method::qtp ? 2 : 1);
    const double g = 1.0 + e1 / h;
    return g * g * (er / h) * fmax;
}

/// h sum_j sup_k | sum_l d_l f(x0_k) D_{l j} | over active particles.
inline double remap_error_indicator(const ParticleSet& set, const RemapCache& cache) {
    double sup0 = 0.0;
    double sup1 = 0.0;
    for (auto k : set.active_ids) {
        const auto [i, j] = set.index[k];
        const double gx = cache.grad_x.value_or_zero(i, j);
        const double gy = cache.grad_y.value_or_zero(i, j);
        const Mat2& D = set.D[k];
        sup0 = std::max(sup0, std::abs(gx * D[0][0] + gy * D[1][0]));
        sup1 = std::max(sup1, std::abs(gx * D[0][1] + gy * D[1][1]));
    }
    return set.grid.h * (sup0 + sup1);
}

enum class RemapDecision { none = 0, scheduled = 1, forced = 2 };

/**
 * Remap decision at step n. A dynamic policy fires when
 * C_remap * transport >= remap_err with a nonzero transport indicator;
 * a degenerate local Jacobian forces a remap under any policy but never.
 */
inline RemapDecision should_remap(const RemapPolicy& policy, int n, double transport,
                                  double remap_err, bool degenerate = false) {
    switch (policy.mode) {
        case RemapPolicy::Mode::never:
            return RemapDecision::none;
        case RemapPolicy::Mode::fixed:
            if (n % policy.period == 0) return RemapDecision::scheduled;
            break;
        case RemapPolicy::Mode::dynamic:
            if (transport > 0.0 && policy.c_remap * transport >= remap_err)
                return RemapDecision::scheduled;
            break;
    }
    return degenerate ? RemapDecision::forced : RemapDecision::none;
}

}  // namespace tpart
