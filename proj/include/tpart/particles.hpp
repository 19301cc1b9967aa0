#pragma once

/**
 * @file particles.hpp
 * @brief Particle state and its evolution along the numerical forward flow.
 *
 * A ParticleSet holds one particle per node of its grid index box, in
 * row-major order. Inactive particles (negligible weight) are kept in the
 * arrays but skipped by every loop.
 *
 * Deformed particles approximate the backward flow around their center
 * x_k by the polynomial map
 *
 *     B_k(x) = x0_k + D_k (x - x_k) + 1/2 (x - x_k)^t Q_k (x - x_k),
 *
 * with Q_k = 0 for linear transformations. D_k and Q_k are obtained either
 * from a small stencil of markers pushed along with the particle (direct
 * scheme) or by composing one-step finite-difference derivatives of the
 * forward flow (incremental scheme).
 */

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tpart/errors.hpp"
#include "tpart/flows.hpp"
#include "tpart/grid.hpp"
#include "tpart/kernels.hpp"
#include "tpart/linalg.hpp"

namespace tpart {

enum class Method { tsp, fsl, ltp, qtp };
enum class DerivativeScheme { direct, incremental };

inline Method parse_method(std::string_view s) {
    if (s == "tsp") return Method::tsp;
    if (s == "fsl") return Method::fsl;
    if (s == "ltp") return Method::ltp;
    if (s == "qtp") return Method::qtp;
    throw ConfigError("unknown method '" + std::string(s) + "'");
}

inline std::string to_string(Method m) {
    switch (m) {
        case Method::tsp: return "tsp";
        case Method::fsl: return "fsl";
        case Method::ltp: return "ltp";
        case Method::qtp: return "qtp";
    }
    return "?";
}

inline DerivativeScheme parse_scheme(std::string_view s) {
    if (s == "direct") return DerivativeScheme::direct;
    if (s == "incremental") return DerivativeScheme::incremental;
    throw ConfigError("unknown derivative scheme '" + std::string(s) + "'");
}

inline std::string to_string(DerivativeScheme s) {
    return s == DerivativeScheme::direct ? "direct" : "incremental";
}

/// How the direct scheme estimates the forward Jacobian from its markers.
enum class MarkerJacobian {
    forward,     ///< (x_{e_j} - x_0) / h'
    one_sided2,  ///< (-3 x_0 + 4 x_{e_j} - x_{2 e_j}) / (2 h')
};

struct ParticleOptions {
    Method method = Method::ltp;
    DerivativeScheme scheme = DerivativeScheme::direct;
    double hprime = 0.0;  ///< <= 0 selects h/2 (direct) or h (incremental)
    double tsp_q = 1.0;   ///< TSP particle scale eps = h^q
    double w_tol = 1e-10;
    double support_slack = 0.5;  ///< incremental QTP support radius rho0 (1 + slack)
    /// Defaults to one_sided2 for QTP, forward otherwise.
    std::optional<MarkerJacobian> marker_jacobian;
};

inline constexpr double kSingularDet = 1e-12;

/// Marker offsets in units of h': {0, e1, e2, e1+e2, 2e1, 2e2}.
inline constexpr std::array<std::array<int, 2>, 6> kMarkerOffsets{
    {{0, 0}, {1, 0}, {0, 1}, {1, 1}, {2, 0}, {0, 2}}};

namespace marker {
inline constexpr std::size_t origin = 0, e1 = 1, e2 = 2, e12 = 3, e11 = 4, e22 = 5;
inline constexpr std::size_t count = kMarkerOffsets.size();
}  // namespace marker

struct ParticleSet {
    Method method = Method::ltp;
    DerivativeScheme scheme = DerivativeScheme::direct;
    MarkerJacobian marker_jacobian = MarkerJacobian::forward;
    ShapeKernel kernel;
    GridSpec grid;
    double hprime = 0.0;
    double eps = 0.0;  ///< fixed-shape particle scale (TSP, FSL)
    double w_tol = 1e-10;
    double support_slack = 0.5;

    std::vector<std::array<int, 2>> index;
    std::vector<double> weight;
    std::vector<Vec2> center;
    std::vector<Vec2> origin;
    std::vector<Mat2> D;
    std::vector<Tensor2> Q;              ///< QTP only
    std::vector<Vec2> markers;           ///< direct LTP/QTP, marker::count per particle
    std::vector<double> support_radius;  ///< QTP only, reference units
    std::vector<double> indicator1;      ///< per-particle marker mismatch of the linear map
    std::vector<double> indicator2;      ///< same for the quadratic map (QTP)
    std::vector<std::uint8_t> active;
    std::vector<std::uint32_t> active_ids;

    int step = 0;
    int last_remap_step = 0;
    bool degenerate = false;

    [[nodiscard]] std::size_t size() const { return weight.size(); }
    [[nodiscard]] std::size_t active_count() const { return active_ids.size(); }
    [[nodiscard]] double h() const { return grid.h; }
    [[nodiscard]] bool has_markers() const { return !markers.empty(); }
    [[nodiscard]] bool deformed() const { return method == Method::ltp || method == Method::qtp; }

    [[nodiscard]] std::span<Vec2> markers_of(std::size_t k) {
        return {markers.data() + k * marker::count, marker::count};
    }
    [[nodiscard]] std::span<const Vec2> markers_of(std::size_t k) const {
        return {markers.data() + k * marker::count, marker::count};
    }
};

/**
 * Puts every particle back on its grid node with the given weights.
 *
 * Centers, markers and derivative state are reset to the undeformed
 * configuration and activity flags are recomputed relative to `fmax`.
 */
inline void reset_to_grid(ParticleSet& set, const GridField& weights, double fmax) {
    const auto& box = set.grid.box;
    const std::size_t n = box.size();
    const double h = set.grid.h;
    const double threshold = set.w_tol * h * h * fmax;
    const bool direct_markers = set.deformed() && set.scheme == DerivativeScheme::direct;

    set.index.resize(n);
    set.weight.resize(n);
    set.center.resize(n);
    set.origin.resize(n);
    set.active.assign(n, 0);
    set.active_ids.clear();
    set.D.assign(n, identity<2>());
    if (set.method == Method::qtp) {
        set.Q.assign(n, Tensor2{});
        set.support_radius.assign(n, set.kernel.rho0);
        if (set.scheme == DerivativeScheme::incremental)
            set.support_radius.assign(n, set.kernel.rho0 * (1.0 + set.support_slack));
    }
    if (direct_markers) {
        set.markers.resize(n * marker::count);
        set.indicator1.assign(n, 0.0);
        set.indicator2.assign(n, 0.0);
    }

    std::size_t k = 0;
    for (int j = box.lo; j <= box.hi; ++j) {
        for (int i = box.lo; i <= box.hi; ++i, ++k) {
            set.index[k] = {i, j};
            set.weight[k] = weights.at(i, j);
            set.origin[k] = set.grid.node(i, j);
            set.center[k] = set.origin[k];
            if (direct_markers) {
                auto mk = set.markers_of(k);
                for (std::size_t l = 0; l < marker::count; ++l)
                    mk[l] = {set.origin[k][0] + set.hprime * kMarkerOffsets[l][0],
                             set.origin[k][1] + set.hprime * kMarkerOffsets[l][1]};
            }
            if (fmax > 0.0 && std::abs(set.weight[k]) > threshold) {
                set.active[k] = 1;
                set.active_ids.push_back(static_cast<std::uint32_t>(k));
            }
        }
    }
    set.degenerate = false;
    set.last_remap_step = set.step;
}

/**
 * Builds the particle approximation of `data` on `grid`.
 *
 * TSP particles get the standard point-value weights h^d f0(x_k); the
 * other methods use the quasi-interpolation weights of the kernel.
 */
inline ParticleSet initialize(const InitialData& data, const ShapeKernel& kernel,
                              const GridSpec& grid, const ParticleOptions& opt) {
    if (grid.h <= 0.0) throw ConfigError("grid step must be positive");
    ParticleSet set;
    set.method = opt.method;
    set.scheme = opt.scheme;
    set.kernel = kernel;
    set.grid = grid;
    set.w_tol = opt.w_tol;
    set.support_slack = opt.support_slack;
    set.marker_jacobian = opt.marker_jacobian.value_or(
        opt.method == Method::qtp ? MarkerJacobian::one_sided2 : MarkerJacobian::forward);
    if (opt.hprime > 0.0)
        set.hprime = opt.hprime;
    else
        set.hprime = opt.scheme == DerivativeScheme::direct ? 0.5 * grid.h : grid.h;
    if (opt.method == Method::tsp) {
        if (opt.tsp_q <= 0.0) throw ConfigError("TSP exponent q must be positive");
        set.eps = std::pow(grid.h, opt.tsp_q);
    } else {
        set.eps = grid.h;
    }

    const int m = opt.method == Method::tsp ? 0 : kernel.stencil_radius();
    GridField samples(grid.box.grown(m));
    double fmax = 0.0;
    const auto& sb = samples.box();
    for (int j = sb.lo; j <= sb.hi; ++j) {
        for (int i = sb.lo; i <= sb.hi; ++i) {
            const double v = data.density(grid.node(i, j));
            samples.at(i, j) = v;
            fmax = std::max(fmax, std::abs(v));
        }
    }

    GridField weights(grid.box);
    if (opt.method == Method::tsp) {
        const double hd = grid.h * grid.h;
        for (int j = grid.box.lo; j <= grid.box.hi; ++j)
            for (int i = grid.box.lo; i <= grid.box.hi; ++i) weights.at(i, j) = hd * samples.at(i, j);
    } else {
        weights = quasi_weights(kernel, grid.h, samples, grid.box);
    }
    reset_to_grid(set, weights, fmax);
    return set;
}

// ---------------------------------------------------------------------------
// Pushing

/// Advances centers (and markers) of active particles by the map F.
template <class ForwardMap>
void push_with(ParticleSet& set, ForwardMap&& F) {
    if (set.has_markers()) {
        for (auto k : set.active_ids) {
            for (auto& x : set.markers_of(k)) x = F(x);
            set.center[k] = set.markers_of(k)[marker::origin];
        }
    } else {
        for (auto k : set.active_ids) set.center[k] = F(set.center[k]);
    }
}

inline void push(ParticleSet& set, const FlowField& field, double t, double dt) {
    push_with(set, [&](const Vec2& x) { return rk4_step(field, t, dt, x); });
}

// ---------------------------------------------------------------------------
// Direct scheme: derivatives from markers

namespace detail {

inline Mat2 marker_jacobian(std::span<const Vec2> mk, double hp, MarkerJacobian kind) {
    Mat2 J{};
    const std::array<std::size_t, 2> ej{marker::e1, marker::e2};
    const std::array<std::size_t, 2> e2j{marker::e11, marker::e22};
    for (std::size_t j = 0; j < 2; ++j) {
        for (std::size_t i = 0; i < 2; ++i) {
            if (kind == MarkerJacobian::forward)
                J[i][j] = (mk[ej[j]][i] - mk[marker::origin][i]) / hp;
            else
                J[i][j] = (-3.0 * mk[marker::origin][i] + 4.0 * mk[ej[j]][i] - mk[e2j[j]][i]) / (2.0 * hp);
        }
    }
    return J;
}

/// Forward second differences of the marker positions, one matrix per component.
inline Tensor2 marker_hessians(std::span<const Vec2> mk, double hp) {
    const double inv = 1.0 / (hp * hp);
    Tensor2 H{};
    for (std::size_t i = 0; i < 2; ++i) {
        const double x0 = mk[marker::origin][i];
        H[i][0][0] = (x0 - 2.0 * mk[marker::e1][i] + mk[marker::e11][i]) * inv;
        H[i][1][1] = (x0 - 2.0 * mk[marker::e2][i] + mk[marker::e22][i]) * inv;
        const double mixed = (x0 - mk[marker::e1][i] - mk[marker::e2][i] + mk[marker::e12][i]) * inv;
        H[i][0][1] = mixed;
        H[i][1][0] = mixed;
    }
    return H;
}

/// Backward Hessians -D^t (sum_j D_ij H_j) D from forward Hessians H at the preimage.
inline Tensor2 backward_hessians(const Mat2& D, const Tensor2& H) {
    Tensor2 Q{};
    const Mat2 Dt = transpose(D);
    for (std::size_t i = 0; i < 2; ++i) {
        Mat2 s = D[i][0] * H[0] + D[i][1] * H[1];
        Q[i] = -1.0 * (Dt * s * D);
    }
    return Q;
}

inline Vec2 quadratic_term(const Tensor2& Q, const Vec2& dx) {
    return {0.5 * quad_form(Q[0], dx), 0.5 * quad_form(Q[1], dx)};
}

}  // namespace detail

/// Evaluates the particle's polynomial backward map of order r (1 or 2) at x.
inline Vec2 backward_map(const ParticleSet& set, std::size_t k, const Vec2& x, int r) {
    const Vec2 dx = x - set.center[k];
    Vec2 y = set.origin[k] + set.D[k] * dx;
    if (r >= 2 && set.method == Method::qtp) y = y + detail::quadratic_term(set.Q[k], dx);
    return y;
}

/// D_k = (marker Jacobian)^{-1}; flags the set degenerate on a singular Jacobian.
inline void update_D_direct(ParticleSet& set) {
    if (set.scheme != DerivativeScheme::direct || !set.has_markers())
        throw ConfigError("update_D_direct needs a direct-scheme deformed particle set");
    for (auto k : set.active_ids) {
        const Mat2 J = detail::marker_jacobian(set.markers_of(k), set.hprime, set.marker_jacobian);
        if (std::abs(det(J)) < kSingularDet) {
            set.degenerate = true;
            continue;
        }
        set.D[k] = inverse(J);
    }
}

/// Q_k from marker second differences and the current D_k.
inline void update_Q_direct(ParticleSet& set) {
    if (set.method != Method::qtp || !set.has_markers())
        throw ConfigError("update_Q_direct needs a direct-scheme QTP particle set");
    for (auto k : set.active_ids) {
        const Tensor2 H = detail::marker_hessians(set.markers_of(k), set.hprime);
        set.Q[k] = detail::backward_hessians(set.D[k], H);
    }
}

/**
 * Per-particle worst mismatch |B_k(x_{k,l}) - x0_{k,l}|_inf over the
 * markers, for the linear map and (QTP) the quadratic one. QTP support
 * radii are refreshed from the linear mismatch.
 */
inline void update_marker_indicators(ParticleSet& set) {
    const double h = set.grid.h;
    for (auto k : set.active_ids) {
        const auto mk = set.markers_of(k);
        double e1 = 0.0;
        double e2 = 0.0;
        for (std::size_t l = 0; l < marker::count; ++l) {
            const Vec2 target{set.origin[k][0] + set.hprime * kMarkerOffsets[l][0],
                              set.origin[k][1] + set.hprime * kMarkerOffsets[l][1]};
            e1 = std::max(e1, norm_inf(backward_map(set, k, mk[l], 1) - target));
            if (set.method == Method::qtp)
                e2 = std::max(e2, norm_inf(backward_map(set, k, mk[l], 2) - target));
        }
        set.indicator1[k] = e1;
        set.indicator2[k] = set.method == Method::qtp ? e2 : e1;
        if (set.method == Method::qtp) set.support_radius[k] = set.kernel.rho0 + e1 / h;
    }
}

/// Recomputes D, Q and marker indicators from the current marker positions.
inline void refresh_direct(ParticleSet& set) {
    update_D_direct(set);
    if (set.method == Method::qtp) update_Q_direct(set);
    update_marker_indicators(set);
}

/**
 * Global backward-flow indicator sup_k max_l |B_k(x_{k,l}) - x0_{k,l}|_inf
 * for order r, over active particles. Only defined for the direct scheme.
 */
inline double backward_flow_indicator(const ParticleSet& set, int r) {
    if (!set.has_markers())
        throw ConfigError("backward-flow indicator needs the direct scheme (markers)");
    if (r != 1 && r != 2) throw ConfigError("backward-flow indicator order must be 1 or 2");
    const auto& v = (r == 2 && set.method == Method::qtp) ? set.indicator2 : set.indicator1;
    double e = 0.0;
    for (auto k : set.active_ids) e = std::max(e, v[k]);
    return e;
}

// ---------------------------------------------------------------------------
// Incremental scheme: one-step finite differences of F, composed into D and Q

namespace detail {

struct OneStepDerivatives {
    Mat2 J;     ///< central-difference Jacobian of F at x
    Tensor2 H;  ///< centered second differences of F at x
};

template <class ForwardMap>
OneStepDerivatives one_step_derivatives(ForwardMap& F, const Vec2& x, double hp, bool hessians) {
    const Vec2 xp1 = F(Vec2{x[0] + hp, x[1]});
    const Vec2 xm1 = F(Vec2{x[0] - hp, x[1]});
    const Vec2 xp2 = F(Vec2{x[0], x[1] + hp});
    const Vec2 xm2 = F(Vec2{x[0], x[1] - hp});
    OneStepDerivatives d{};
    for (std::size_t i = 0; i < 2; ++i) {
        d.J[i][0] = (xp1[i] - xm1[i]) / (2.0 * hp);
        d.J[i][1] = (xp2[i] - xm2[i]) / (2.0 * hp);
    }
    if (hessians) {
        const Vec2 f0 = F(x);
        const Vec2 fpp = F(Vec2{x[0] + hp, x[1] + hp});
        const Vec2 fpm = F(Vec2{x[0] + hp, x[1] - hp});
        const Vec2 fmp = F(Vec2{x[0] - hp, x[1] + hp});
        const Vec2 fmm = F(Vec2{x[0] - hp, x[1] - hp});
        const double inv = 1.0 / (hp * hp);
        for (std::size_t i = 0; i < 2; ++i) {
            d.H[i][0][0] = (xp1[i] - 2.0 * f0[i] + xm1[i]) * inv;
            d.H[i][1][1] = (xp2[i] - 2.0 * f0[i] + xm2[i]) * inv;
            const double mixed = (fpp[i] - fpm[i] - fmp[i] + fmm[i]) * (0.25 * inv);
            d.H[i][0][1] = mixed;
            d.H[i][1][0] = mixed;
        }
    }
    return d;
}

}  // namespace detail

/// D^{n+1} = D^n (J^n)^{-1}; must run before the centers are pushed.
template <class ForwardMap>
void update_D_incremental(ParticleSet& set, ForwardMap&& F) {
    if (set.scheme != DerivativeScheme::incremental || !set.deformed())
        throw ConfigError("update_D_incremental needs an incremental-scheme deformed particle set");
    for (auto k : set.active_ids) {
        const auto d = detail::one_step_derivatives(F, set.center[k], set.hprime, false);
        if (std::abs(det(d.J)) < kSingularDet) {
            set.degenerate = true;
            continue;
        }
        set.D[k] = set.D[k] * inverse(d.J);
    }
}

/// Q^{n+1} from Q^n, D^n and the one-step derivatives, then D^{n+1}; before the push.
template <class ForwardMap>
void update_Q_incremental(ParticleSet& set, ForwardMap&& F) {
    if (set.scheme != DerivativeScheme::incremental || set.method != Method::qtp)
        throw ConfigError("update_Q_incremental needs an incremental-scheme QTP particle set");
    for (auto k : set.active_ids) {
        const auto d = detail::one_step_derivatives(F, set.center[k], set.hprime, true);
        if (std::abs(det(d.J)) < kSingularDet) {
            set.degenerate = true;
            continue;
        }
        const Mat2 Jc = inverse(d.J);
        const Mat2 Jct = transpose(Jc);
        const Mat2& D = set.D[k];
        Tensor2 Qn{};
        for (std::size_t i = 0; i < 2; ++i) {
            Mat2 s = set.Q[k][i];
            for (std::size_t j = 0; j < 2; ++j)
                for (std::size_t jp = 0; jp < 2; ++jp) s = s - (D[i][j] * Jc[j][jp]) * d.H[jp];
            Qn[i] = Jct * s * Jc;
        }
        set.Q[k] = Qn;
        set.D[k] = D * Jc;
    }
}

/**
 * One full time step with forward map F, in the order
 * (incremental) derivative update, push; (direct) push, derivatives from markers.
 */
template <class ForwardMap>
void advance_with(ParticleSet& set, ForwardMap&& F) {
    if (set.deformed() && set.scheme == DerivativeScheme::incremental) {
        if (set.method == Method::qtp)
            update_Q_incremental(set, F);
        else
            update_D_incremental(set, F);
    }
    push_with(set, F);
    if (set.has_markers()) refresh_direct(set);
    ++set.step;
}

inline void advance(ParticleSet& set, const FlowField& field, double t, double dt) {
    advance_with(set, [&](const Vec2& x) { return rk4_step(field, t, dt, x); });
}

}  // namespace tpart
