#pragma once

/**
 * @file kernels.hpp
 * @brief Reference particle shapes and the grid approximation operator.
 *
 * Two families of tensor-product shapes are provided: Monaghan's
 * interpolating M'4 kernel and the centered cardinal B-splines of odd
 * degree 1, 3 and 5. Each kernel carries the symmetric coefficient
 * stencil {a_0 .. a_m} of its quasi-interpolation operator
 *
 *     w_k(g) = h^d sum_{|l|_inf <= m} a_{l_1} ... a_{l_d} g(x_{k+l}),
 *
 * which reproduces every polynomial the span of the shapes contains.
 */

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "tpart/errors.hpp"
#include "tpart/grid.hpp"
#include "tpart/linalg.hpp"

namespace tpart {

enum class KernelKind { m4prime, bspline };

struct ShapeKernel {
    KernelKind kind = KernelKind::m4prime;
    int degree = 3;             ///< B-spline degree p; 3 for M'4 (piecewise cubic)
    double rho0 = 2.0;          ///< support half-width in reference units
    std::vector<double> stencil;  ///< a_0, a_1, ..., a_m
    int order = 2;              ///< degree of polynomials reproduced by A_h
    std::string id;

    [[nodiscard]] int stencil_radius() const { return static_cast<int>(stencil.size()) - 1; }
    [[nodiscard]] double a(int l) const {
        const int al = l < 0 ? -l : l;
        return al < static_cast<int>(stencil.size()) ? stencil[static_cast<std::size_t>(al)] : 0.0;
    }
};

inline ShapeKernel m4prime_kernel() {
    return ShapeKernel{KernelKind::m4prime, 3, 2.0, {1.0}, 2, "m4p"};
}

inline ShapeKernel bspline_kernel(int p) {
    switch (p) {
        case 1:
            return ShapeKernel{KernelKind::bspline, 1, 1.0, {1.0}, 1, "b1"};
        case 3:
            return ShapeKernel{KernelKind::bspline, 3, 2.0, {8.0 / 6.0, -1.0 / 6.0}, 3, "b3"};
        case 5:
            return ShapeKernel{KernelKind::bspline,
                               5,
                               3.0,
                               {503.0 / 288.0, -1469.0 / 3600.0, 7.0 / 225.0, 13.0 / 3600.0,
                                1.0 / 14400.0},
                               5,
                               "b5"};
        default:
            throw ConfigError("no quasi-interpolation stencil for B-spline degree " +
                              std::to_string(p));
    }
}

/// Kernel by id: "m4p", "b1", "b3", "b5".
inline ShapeKernel make_kernel(std::string_view id) {
    if (id == "m4p") return m4prime_kernel();
    if (id == "b1") return bspline_kernel(1);
    if (id == "b3") return bspline_kernel(3);
    if (id == "b5") return bspline_kernel(5);
    throw ConfigError("unknown kernel id '" + std::string(id) + "'");
}

namespace detail {

inline double m4prime(double x) {
    const double a = std::abs(x);
    if (a <= 1.0) return 1.0 - 2.5 * a * a + 1.5 * a * a * a;
    if (a < 2.0) return 0.5 * (2.0 - a) * (2.0 - a) * (1.0 - a);
    return 0.0;
}

inline double bspline1(double x) {
    const double a = std::abs(x);
    return a < 1.0 ? 1.0 - a : 0.0;
}

inline double bspline3(double x) {
    const double a = std::abs(x);
    if (a <= 1.0) return 2.0 / 3.0 - a * a + 0.5 * a * a * a;
    if (a < 2.0) {
        const double t = 2.0 - a;
        return t * t * t / 6.0;
    }
    return 0.0;
}

// Pieces obtained by expanding B_5 = B_4 * B_0 symbolically.
inline double bspline5(double x) {
    const double a = std::abs(x);
    const double a2 = a * a;
    if (a <= 1.0) return 11.0 / 20.0 - 0.5 * a2 + 0.25 * a2 * a2 - a2 * a2 * a / 12.0;
    if (a <= 2.0)
        return 17.0 / 40.0 + 5.0 / 8.0 * a - 7.0 / 4.0 * a2 + 5.0 / 4.0 * a2 * a -
               3.0 / 8.0 * a2 * a2 + a2 * a2 * a / 24.0;
    if (a < 3.0) {
        const double t = 3.0 - a;
        return t * t * t * t * t / 120.0;
    }
    return 0.0;
}

}  // namespace detail

inline double kernel_eval_1d(const ShapeKernel& kernel, double x) {
    if (kernel.kind == KernelKind::m4prime) return detail::m4prime(x);
    switch (kernel.degree) {
        case 1:
            return detail::bspline1(x);
        case 3:
            return detail::bspline3(x);
        default:
            return detail::bspline5(x);
    }
}

/// Tensor-product shape phi(x); exactly zero once |x|_inf >= rho0.
template <std::size_t D>
double kernel_eval(const ShapeKernel& kernel, const VecN<D>& x) {
    double v = 1.0;
    for (double xi : x) {
        if (std::abs(xi) >= kernel.rho0) return 0.0;
        v *= kernel_eval_1d(kernel, xi);
    }
    return v;
}

/// h^{-d} phi(y / h).
template <std::size_t D>
double scaled_particle_eval(const ShapeKernel& kernel, double h, const VecN<D>& y) {
    const double inv_h = 1.0 / h;
    return std::pow(inv_h, static_cast<double>(D)) * kernel_eval<D>(kernel, inv_h * y);
}

/**
 * Quasi-interpolation weights on `target` from node samples of g.
 *
 * Samples outside the box of `samples` count as zero. The tensorized
 * stencil is applied as two 1D passes.
 */
inline GridField quasi_weights(const ShapeKernel& kernel, double h, const GridField& samples,
                               const IndexBox& target) {
    const int m = kernel.stencil_radius();
    const IndexBox mid_box{target.lo - m, target.hi + m};

    // pass 1 along the first index, on rows j in target +- m
    GridField pass1(IndexBox{std::min(target.lo, mid_box.lo), std::max(target.hi, mid_box.hi)});
    for (int j = mid_box.lo; j <= mid_box.hi; ++j) {
        for (int i = target.lo; i <= target.hi; ++i) {
            double s = kernel.a(0) * samples.value_or_zero(i, j);
            for (int l = 1; l <= m; ++l)
                s += kernel.a(l) * (samples.value_or_zero(i - l, j) + samples.value_or_zero(i + l, j));
            pass1.at(i, j) = s;
        }
    }

    const double hd = h * h;
    GridField w(target);
    for (int j = target.lo; j <= target.hi; ++j) {
        for (int i = target.lo; i <= target.hi; ++i) {
            double s = kernel.a(0) * pass1.at(i, j);
            for (int l = 1; l <= m; ++l) s += kernel.a(l) * (pass1.at(i, j - l) + pass1.at(i, j + l));
            w.at(i, j) = hd * s;
        }
    }
    return w;
}

}  // namespace tpart
