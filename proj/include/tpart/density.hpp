#pragma once

/**
 * @file density.hpp
 * @brief Evaluation of the particle density f_h = sum_k w_k phi_k.
 *
 * Point queries gather contributions through a uniform bin grid. Lattice
 * evaluation walks the particles in ascending index order and only visits
 * lattice nodes inside each particle's support footprint; every node then
 * accumulates the same nonzero terms, in the same order, as a gather would.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "tpart/grid.hpp"
#include "tpart/kernels.hpp"
#include "tpart/linalg.hpp"
#include "tpart/particles.hpp"

namespace tpart {

/// Axis-aligned box center +- half_width.
struct BBox {
    Vec2 center{0.0, 0.0};
    double half_width = 0.0;

    [[nodiscard]] bool contains(const Vec2& x) const {
        return std::abs(x[0] - center[0]) <= half_width && std::abs(x[1] - center[1]) <= half_width;
    }
};

namespace detail {

/// Support footprint {x : |A (x - c)|_inf <= R} of particle k.
struct Footprint {
    Mat2 A;
    double R;
};

inline Footprint footprint(const ParticleSet& set, std::size_t k) {
    switch (set.method) {
        case Method::tsp:
        case Method::fsl:
            return {identity<2>(), set.eps * set.kernel.rho0};
        case Method::ltp:
            return {set.D[k], set.grid.h * set.kernel.rho0};
        case Method::qtp:
            return {set.D[k], set.grid.h * set.support_radius[k]};
    }
    return {identity<2>(), 0.0};
}

}  // namespace detail

inline BBox particle_bbox(const ParticleSet& set, std::size_t k) {
    const auto fp = detail::footprint(set, k);
    if (set.method == Method::tsp || set.method == Method::fsl) return {set.center[k], fp.R};
    const double d = det(fp.A);
    if (std::abs(d) < kSingularDet) return {set.center[k], 0.0};
    return {set.center[k], fp.R * norm_inf(inverse(fp.A))};
}

/**
 * QTP a-priori support test: x lies in the linear image of the enlarged
 * cube (checked through the backward linear map) and the Jacobian of the
 * quadratic backward map has positive determinant at x.
 */
inline bool qtp_support_indicator(const ParticleSet& set, std::size_t k, const Vec2& x) {
    const Vec2 dx = x - set.center[k];
    const Mat2& D = set.D[k];
    const Vec2 lin = D * dx;
    if (norm_inf(lin) > set.grid.h * set.support_radius[k]) return false;
    const Tensor2& Q = set.Q[k];
    Mat2 J = D;
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) J[i][j] += Q[i][j][0] * dx[0] + Q[i][j][1] * dx[1];
    return det(J) > 0.0;
}

/// w_k phi_k(x) for one particle.
inline double particle_contribution(const ParticleSet& set, std::size_t k, const Vec2& x) {
    const Vec2 dx = x - set.center[k];
    switch (set.method) {
        case Method::tsp:
        case Method::fsl: {
            const double inv = 1.0 / set.eps;
            return set.weight[k] * inv * inv * kernel_eval<2>(set.kernel, inv * dx);
        }
        case Method::ltp: {
            const double inv = 1.0 / set.grid.h;
            return set.weight[k] * inv * inv * kernel_eval<2>(set.kernel, inv * (set.D[k] * dx));
        }
        case Method::qtp: {
            if (!qtp_support_indicator(set, k, x)) return 0.0;
            const double inv = 1.0 / set.grid.h;
            const Vec2 y = set.D[k] * dx + detail::quadratic_term(set.Q[k], dx);
            return set.weight[k] * inv * inv * kernel_eval<2>(set.kernel, inv * y);
        }
    }
    return 0.0;
}

/// Whether x lies in the (open) deformed support of particle k.
inline bool in_support(const ParticleSet& set, std::size_t k, const Vec2& x) {
    const Vec2 dx = x - set.center[k];
    const double rho0 = set.kernel.rho0;
    switch (set.method) {
        case Method::tsp:
        case Method::fsl:
            return norm_inf(dx) < set.eps * rho0;
        case Method::ltp:
            return norm_inf(set.D[k] * dx) < set.grid.h * rho0;
        case Method::qtp: {
            if (!qtp_support_indicator(set, k, x)) return false;
            const Vec2 y = set.D[k] * dx + detail::quadratic_term(set.Q[k], dx);
            return norm_inf(y) < set.grid.h * rho0;
        }
    }
    return false;
}

/**
 * Uniform bins over the active particles' bounding boxes. Bin size is the
 * largest box half-width; each particle is listed, in ascending order, in
 * every bin its box touches.
 */
class SpatialBins {
public:
    explicit SpatialBins(const ParticleSet& set) {
        boxes_.resize(set.size());
        double lo0 = 0.0, lo1 = 0.0, hi0 = 0.0, hi1 = 0.0, size = 0.0;
        bool first = true;
        for (auto k : set.active_ids) {
            const BBox b = particle_bbox(set, k);
            boxes_[k] = b;
            size = std::max(size, b.half_width);
            const double a0 = b.center[0] - b.half_width, a1 = b.center[1] - b.half_width;
            const double c0 = b.center[0] + b.half_width, c1 = b.center[1] + b.half_width;
            if (first) {
                lo0 = a0, lo1 = a1, hi0 = c0, hi1 = c1;
                first = false;
            } else {
                lo0 = std::min(lo0, a0), lo1 = std::min(lo1, a1);
                hi0 = std::max(hi0, c0), hi1 = std::max(hi1, c1);
            }
        }
        if (first) return;
        constexpr int kMaxBins = 1024;
        const double span = std::max(hi0 - lo0, hi1 - lo1);
        bin_size_ = std::max({size, span / kMaxBins, 1e-300});
        origin_ = {lo0, lo1};
        nx_ = static_cast<int>(std::floor((hi0 - lo0) / bin_size_)) + 1;
        ny_ = static_cast<int>(std::floor((hi1 - lo1) / bin_size_)) + 1;
        bins_.resize(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_));
        for (auto k : set.active_ids) {
            const BBox& b = boxes_[k];
            const int i0 = bin_coord(b.center[0] - b.half_width, 0);
            const int i1 = bin_coord(b.center[0] + b.half_width, 0);
            const int j0 = bin_coord(b.center[1] - b.half_width, 1);
            const int j1 = bin_coord(b.center[1] + b.half_width, 1);
            for (int j = j0; j <= j1; ++j)
                for (int i = i0; i <= i1; ++i) bins_[bin_index(i, j)].push_back(k);
        }
    }

    /// Candidate particles for x, ascending; empty outside the binned region.
    [[nodiscard]] const std::vector<std::uint32_t>& candidates(const Vec2& x) const {
        static const std::vector<std::uint32_t> none;
        if (bins_.empty()) return none;
        const double u = (x[0] - origin_[0]) / bin_size_;
        const double v = (x[1] - origin_[1]) / bin_size_;
        if (!(u >= 0.0 && v >= 0.0 && u < nx_ && v < ny_)) return none;
        return bins_[bin_index(static_cast<int>(u), static_cast<int>(v))];
    }

    [[nodiscard]] const BBox& bbox(std::size_t k) const { return boxes_[k]; }
    [[nodiscard]] double bin_size() const { return bin_size_; }

private:
    [[nodiscard]] int bin_coord(double x, int axis) const {
        const int n = axis == 0 ? nx_ : ny_;
        const int c = static_cast<int>(std::floor((x - origin_[axis]) / bin_size_));
        return std::clamp(c, 0, n - 1);
    }
    [[nodiscard]] std::size_t bin_index(int i, int j) const {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(i);
    }

    std::vector<BBox> boxes_;
    std::vector<std::vector<std::uint32_t>> bins_;
    Vec2 origin_{0.0, 0.0};
    double bin_size_ = 1.0;
    int nx_ = 0;
    int ny_ = 0;
};

/// Point evaluator; the particle set must not change while it is alive.
class DensityGather {
public:
    explicit DensityGather(const ParticleSet& set) : set_(set), bins_(set) {}

    [[nodiscard]] double operator()(const Vec2& x) const {
        double s = 0.0;
        for (auto k : bins_.candidates(x))
            if (bins_.bbox(k).contains(x)) s += particle_contribution(set_, k, x);
        return s;
    }

    [[nodiscard]] int overlap_count(const Vec2& x) const {
        int n = 0;
        for (auto k : bins_.candidates(x))
            if (bins_.bbox(k).contains(x) && in_support(set_, k, x)) ++n;
        return n;
    }

private:
    const ParticleSet& set_;
    SpatialBins bins_;
};

inline double eval_density(const ParticleSet& set, const Vec2& x) { return DensityGather(set)(x); }

inline int overlap_count(const ParticleSet& set, const Vec2& x) {
    return DensityGather(set).overlap_count(x);
}

/// Density at every lattice node, indexed by Lattice::index.
inline std::vector<double> eval_density_lattice(const ParticleSet& set, const Lattice& lat) {
    std::vector<double> out(lat.size(), 0.0);
    if (lat.size() == 0) return out;
    const double inv_sp = 1.0 / lat.spacing;
    auto clamp_i = [](long v, int n) { return static_cast<int>(std::clamp<long>(v, 0, n - 1)); };

    for (auto k : set.active_ids) {
        const BBox b = particle_bbox(set, k);
        if (!(b.half_width > 0.0)) continue;
        const auto fp = detail::footprint(set, k);
        const Vec2 c = set.center[k];

        const double jlo = std::ceil((c[1] - b.half_width - lat.origin[1]) * inv_sp) - 1.0;
        const double jhi = std::floor((c[1] + b.half_width - lat.origin[1]) * inv_sp) + 1.0;
        if (jhi < 0.0 || jlo > lat.ny - 1) continue;
        const int j0 = clamp_i(static_cast<long>(jlo), lat.ny);
        const int j1 = clamp_i(static_cast<long>(jhi), lat.ny);

        for (int j = j0; j <= j1; ++j) {
            const double dy = lat.origin[1] + lat.spacing * j - c[1];
            double lo = -b.half_width;
            double hi = b.half_width;
            for (std::size_t r = 0; r < 2 && lo <= hi; ++r) {
                const double a = fp.A[r][0];
                const double off = fp.A[r][1] * dy;
                if (std::abs(a) > 1e-300) {
                    double u = (-fp.R - off) / a;
                    double v = (fp.R - off) / a;
                    if (u > v) std::swap(u, v);
                    lo = std::max(lo, u);
                    hi = std::min(hi, v);
                } else if (std::abs(off) > fp.R) {
                    hi = lo - 1.0;
                }
            }
            if (lo > hi) continue;
            const double ilo = std::ceil((c[0] + lo - lat.origin[0]) * inv_sp) - 1.0;
            const double ihi = std::floor((c[0] + hi - lat.origin[0]) * inv_sp) + 1.0;
            if (ihi < 0.0 || ilo > lat.nx - 1) continue;
            const int i0 = clamp_i(static_cast<long>(ilo), lat.nx);
            const int i1 = clamp_i(static_cast<long>(ihi), lat.nx);
            for (int i = i0; i <= i1; ++i) {
                const Vec2 x = lat.point(i, j);
                if (!b.contains(x)) continue;
                out[lat.index(i, j)] += particle_contribution(set, k, x);
            }
        }
    }
    return out;
}

/// Trapezoidal quadrature of lattice values.
inline double lattice_integral(const Lattice& lat, const std::vector<double>& f) {
    double s = 0.0;
    for (int j = 0; j < lat.ny; ++j) {
        const double wj = (j == 0 || j == lat.ny - 1) ? 0.5 : 1.0;
        for (int i = 0; i < lat.nx; ++i) {
            const double wi = (i == 0 || i == lat.nx - 1) ? 0.5 : 1.0;
            s += wi * wj * f[lat.index(i, j)];
        }
    }
    return s * lat.spacing * lat.spacing;
}

}  // namespace tpart
