#pragma once

/**
 * @file linalg.hpp
 * @brief Fixed-size vectors and matrices for particle geometry.
 *
 * Everything is templated on the spatial dimension; the transport code
 * instantiates it with kDim = 2 only.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

namespace tpart {

inline constexpr std::size_t kDim = 2;

template <std::size_t D>
using VecN = std::array<double, D>;

/// Row-major: m[i][j] is row i, column j.
template <std::size_t D>
using MatN = std::array<std::array<double, D>, D>;

using Vec2 = VecN<2>;
using Mat2 = MatN<2>;

/// One symmetric Hessian-like matrix per output component.
template <std::size_t D>
using TensorN = std::array<MatN<D>, D>;
using Tensor2 = TensorN<2>;

template <std::size_t D>
constexpr MatN<D> identity() {
    MatN<D> m{};
    for (std::size_t i = 0; i < D; ++i) m[i][i] = 1.0;
    return m;
}

template <std::size_t D>
constexpr VecN<D> operator+(const VecN<D>& a, const VecN<D>& b) {
    VecN<D> r{};
    for (std::size_t i = 0; i < D; ++i) r[i] = a[i] + b[i];
    return r;
}

template <std::size_t D>
constexpr VecN<D> operator-(const VecN<D>& a, const VecN<D>& b) {
    VecN<D> r{};
    for (std::size_t i = 0; i < D; ++i) r[i] = a[i] - b[i];
    return r;
}

template <std::size_t D>
constexpr VecN<D> operator*(double s, const VecN<D>& a) {
    VecN<D> r{};
    for (std::size_t i = 0; i < D; ++i) r[i] = s * a[i];
    return r;
}

template <std::size_t D>
constexpr VecN<D> operator*(const MatN<D>& m, const VecN<D>& v) {
    VecN<D> r{};
    for (std::size_t i = 0; i < D; ++i)
        for (std::size_t j = 0; j < D; ++j) r[i] += m[i][j] * v[j];
    return r;
}

template <std::size_t D>
constexpr MatN<D> operator*(const MatN<D>& a, const MatN<D>& b) {
    MatN<D> r{};
    for (std::size_t i = 0; i < D; ++i)
        for (std::size_t k = 0; k < D; ++k)
            for (std::size_t j = 0; j < D; ++j) r[i][j] += a[i][k] * b[k][j];
    return r;
}

template <std::size_t D>
constexpr MatN<D> operator+(const MatN<D>& a, const MatN<D>& b) {
    MatN<D> r{};
    for (std::size_t i = 0; i < D; ++i)
        for (std::size_t j = 0; j < D; ++j) r[i][j] = a[i][j] + b[i][j];
    return r;
}

template <std::size_t D>
constexpr MatN<D> operator-(const MatN<D>& a, const MatN<D>& b) {
    MatN<D> r{};
    for (std::size_t i = 0; i < D; ++i)
        for (std::size_t j = 0; j < D; ++j) r[i][j] = a[i][j] - b[i][j];
    return r;
}

template <std::size_t D>
constexpr MatN<D> operator*(double s, const MatN<D>& a) {
    MatN<D> r{};
    for (std::size_t i = 0; i < D; ++i)
        for (std::size_t j = 0; j < D; ++j) r[i][j] = s * a[i][j];
    return r;
}

template <std::size_t D>
constexpr MatN<D> transpose(const MatN<D>& a) {
    MatN<D> r{};
    for (std::size_t i = 0; i < D; ++i)
        for (std::size_t j = 0; j < D; ++j) r[i][j] = a[j][i];
    return r;
}

template <std::size_t D>
double norm_inf(const VecN<D>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

/// Max-row-sum norm, the operator norm induced by the vector max norm.
template <std::size_t D>
double norm_inf(const MatN<D>& a) {
    double m = 0.0;
    for (const auto& row : a) {
        double s = 0.0;
        for (double x : row) s += std::abs(x);
        m = std::max(m, s);
    }
    return m;
}

template <std::size_t D>
double norm_frobenius(const MatN<D>& a) {
    double s = 0.0;
    for (const auto& row : a)
        for (double x : row) s += x * x;
    return std::sqrt(s);
}

inline double det(const Mat2& a) { return a[0][0] * a[1][1] - a[0][1] * a[1][0]; }

/// Inverse of a 2x2 matrix; caller is responsible for checking det first.
inline Mat2 inverse(const Mat2& a) {
    const double inv = 1.0 / det(a);
    return {{{a[1][1] * inv, -a[0][1] * inv}, {-a[1][0] * inv, a[0][0] * inv}}};
}

/// Quadratic form v^t m v.
template <std::size_t D>
constexpr double quad_form(const MatN<D>& m, const VecN<D>& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < D; ++i)
        for (std::size_t j = 0; j < D; ++j) s += v[i] * m[i][j] * v[j];
    return s;
}

}  // namespace tpart
