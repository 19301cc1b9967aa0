#pragma once

/**
 * @file grid.hpp
 * @brief Cartesian particle grid, grid-indexed fields, and point lattices.
 */

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "tpart/linalg.hpp"

namespace tpart {

/// Square index box [lo, hi]^2 (inclusive) of nodes x_k = h k.
struct IndexBox {
    int lo = 0;
    int hi = 0;

    [[nodiscard]] int extent() const { return hi - lo + 1; }
    [[nodiscard]] std::size_t size() const {
        return static_cast<std::size_t>(extent()) * static_cast<std::size_t>(extent());
    }
    [[nodiscard]] bool contains(int i, int j) const {
        return i >= lo && i <= hi && j >= lo && j <= hi;
    }
    [[nodiscard]] IndexBox grown(int m) const { return {lo - m, hi + m}; }
};

struct GridSpec {
    double h = 1.0;
    IndexBox box;

    [[nodiscard]] Vec2 node(int i, int j) const {
        return {h * static_cast<double>(i), h * static_cast<double>(j)};
    }
};

/// Grid of step h covering [0,1]^2 with `margin` extra node layers on every side.
inline GridSpec unit_grid(double h, int margin) {
    const int n = static_cast<int>(std::lround(1.0 / h));
    if (n <= 0 || std::abs(n * h - 1.0) > 1e-12)
        throw std::invalid_argument("grid step must divide 1");
    return GridSpec{h, IndexBox{-margin, n + margin}};
}

/// Real values on the nodes of an index box, row-major with the first index fastest.
class GridField {
public:
    GridField() = default;
    explicit GridField(IndexBox box, double fill = 0.0)
        : box_(box), values_(box.size(), fill) {}

    [[nodiscard]] const IndexBox& box() const { return box_; }

    [[nodiscard]] double& at(int i, int j) { return values_[offset(i, j)]; }
    [[nodiscard]] double at(int i, int j) const { return values_[offset(i, j)]; }

    /// Zero outside the box.
    [[nodiscard]] double value_or_zero(int i, int j) const {
        return box_.contains(i, j) ? values_[offset(i, j)] : 0.0;
    }

    [[nodiscard]] std::vector<double>& values() { return values_; }
    [[nodiscard]] const std::vector<double>& values() const { return values_; }

private:
    [[nodiscard]] std::size_t offset(int i, int j) const {
        const auto e = static_cast<std::size_t>(box_.extent());
        return static_cast<std::size_t>(j - box_.lo) * e + static_cast<std::size_t>(i - box_.lo);
    }

    IndexBox box_;
    std::vector<double> values_;
};

/// Uniform point lattice origin + (i, j) * spacing, 0 <= i < nx, 0 <= j < ny.
struct Lattice {
    Vec2 origin{0.0, 0.0};
    double spacing = 1.0;
    int nx = 0;
    int ny = 0;

    [[nodiscard]] Vec2 point(int i, int j) const {
        return {origin[0] + spacing * static_cast<double>(i),
                origin[1] + spacing * static_cast<double>(j)};
    }
    [[nodiscard]] std::size_t size() const {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
    }
    [[nodiscard]] std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i);
    }
};

/// M x M nodes (i/(M-1), j/(M-1)) over the closed unit box.
inline Lattice eval_lattice(int m) {
    if (m < 2) throw std::invalid_argument("evaluation lattice needs at least 2 nodes per axis");
    return Lattice{{0.0, 0.0}, 1.0 / static_cast<double>(m - 1), m, m};
}

/// The nodes of a particle grid index box, as a lattice.
inline Lattice node_lattice(const GridSpec& grid, const IndexBox& box) {
    return Lattice{grid.node(box.lo, box.lo), grid.h, box.extent(), box.extent()};
}

}  // namespace tpart
