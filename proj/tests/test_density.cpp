#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "support.hpp"
#include "tpart/density.hpp"

using namespace tpart;
using tpart::test::make_set;

namespace {

void advance_n(ParticleSet& set, const TestCase& tc, int steps) {
    for (int n = 0; n < steps; ++n) advance(set, tc.field, n * tc.dt, tc.dt);
}

void expect_gather_equals_lattice(const ParticleSet& set, const Lattice& lat) {
    const auto field = eval_density_lattice(set, lat);
    const DensityGather gather(set);
    for (int j = 0; j < lat.ny; ++j)
        for (int i = 0; i < lat.nx; ++i) ASSERT_EQ(field[lat.index(i, j)], gather(lat.point(i, j))) << i << "," << j;
}

}  // namespace

TEST(Density, BoundingBoxes) {
    const double h = 1.0 / 32;
    auto ltp = make_set(hump_data({0.5, 0.5}), "b3", Method::ltp, h);
    const auto k = ltp.active_ids.front();
    EXPECT_DOUBLE_EQ(particle_bbox(ltp, k).half_width, h * 2.0);
    ltp.D[k] = Mat2{{{2.0, 0.0}, {0.0, 0.5}}};
    EXPECT_DOUBLE_EQ(particle_bbox(ltp, k).half_width, 2.0 * h * 2.0);

    ParticleOptions o = test::options(Method::tsp);
    o.tsp_q = 0.5;
    const auto tsp = initialize(hump_data({0.5, 0.5}), m4prime_kernel(), unit_grid(1.0 / 64, 0), o);
    EXPECT_DOUBLE_EQ(particle_bbox(tsp, tsp.active_ids.front()).half_width, 0.25);
}

TEST(Density, UnitDataAtStart) {
    const auto set = make_set(constant_data(1.0), "b3", Method::ltp, 1.0 / 16);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int n = 0; n < 200; ++n) EXPECT_NEAR(eval_density(set, {u(rng), u(rng)}), 1.0, 1e-10);
    EXPECT_EQ(eval_density(set, {5.0, 5.0}), 0.0);
}

TEST(Density, SingleDeformedHat) {
    const double h = 1.0 / 8;
    auto set = make_set(constant_data(1.0), "b1", Method::ltp, h, DerivativeScheme::direct, 0);
    const std::size_t keep = 40;
    for (std::size_t k = 0; k < set.size(); ++k) set.weight[k] = k == keep ? h * h : 0.0;
    set.active_ids = {static_cast<std::uint32_t>(keep)};
    set.D[keep] = Mat2{{{2.0, 0.0}, {0.0, 1.0}}};
    const Vec2 x = set.center[keep] + Vec2{h / 4, 0.0};
    EXPECT_DOUBLE_EQ(eval_density(set, x), 0.5);
}

TEST(Density, QtpSupportIndicator) {
    const double h = 1.0 / 16;
    auto set = make_set(hump_data({0.5, 0.5}), "b3", Method::qtp, h);
    const auto k = set.active_ids.front();
    const Vec2 c = set.center[k];
    EXPECT_TRUE(qtp_support_indicator(set, k, c + Vec2{h, -h}));
    EXPECT_FALSE(qtp_support_indicator(set, k, c + Vec2{2.5 * h, 0.0}));
    // D = I, (Q_1)_{11} = q with q dx_1 = -1.5
    const double dx = 0.5 * h;
    set.Q[k][0][0][0] = -1.5 / dx;
    EXPECT_FALSE(qtp_support_indicator(set, k, c + Vec2{dx, 0.0}));
    EXPECT_TRUE(qtp_support_indicator(set, k, c + Vec2{-dx, 0.0}));
}

TEST(Density, LatticeAtStartMatchesNodalValues) {
    const double h = 1.0 / 32;
    const auto data = hump_data({0.4, 0.6});
    const auto set = make_set(data, "b3", Method::ltp, h);
    const Lattice nodes = node_lattice(set.grid, IndexBox{0, 32});
    const auto f = eval_density_lattice(set, nodes);
    const DensityGather gather(set);
    for (int j = 0; j < nodes.ny; ++j)
        for (int i = 0; i < nodes.nx; ++i) {
            const Vec2 x = nodes.point(i, j);
            double s = 0.0;
            for (std::size_t k = 0; k < set.size(); ++k)
                s += set.weight[k] * scaled_particle_eval<2>(set.kernel, h, x - set.origin[k]);
            EXPECT_NEAR(f[nodes.index(i, j)], s, 1e-10);
        }
}

TEST(Density, ZeroParticlesGiveZeroField) {
    const auto set = make_set(constant_data(0.0), "b3", Method::qtp, 1.0 / 16);
    for (double v : eval_density_lattice(set, eval_lattice(33))) EXPECT_EQ(v, 0.0);
}

TEST(Density, MassMatchesWeights) {
    const auto set = make_set(hump_data({0.5, 0.5}), "b3", Method::ltp, 1.0 / 64);
    const Lattice lat = eval_lattice(256);
    const double mass = lattice_integral(lat, eval_density_lattice(set, lat));
    double w = 0.0;
    for (auto k : set.active_ids) w += set.weight[k];
    EXPECT_NEAR(mass, w, 1e-2 * w);
}

TEST(Density, OverlapCounts) {
    const auto b1 = make_set(constant_data(1.0), "b1", Method::ltp, 1.0 / 16);
    const auto b3 = make_set(constant_data(1.0), "b3", Method::ltp, 1.0 / 16);
    const Vec2 x{0.4113, 0.5871};
    EXPECT_EQ(overlap_count(b1, x), 4);
    EXPECT_EQ(overlap_count(b3, x), 16);
    EXPECT_EQ(overlap_count(b3, {7.0, -3.0}), 0);
}

TEST(Density, ScatterEqualsGather) {
    const Lattice lat = eval_lattice(97);
    const auto tc = make_test_case("sw-hump");
    for (Method m : {Method::fsl, Method::ltp, Method::qtp}) {
        for (auto s : {DerivativeScheme::direct, DerivativeScheme::incremental}) {
            if (m == Method::fsl && s == DerivativeScheme::incremental) continue;
            auto set = make_set(tc.data, "b3", m, 1.0 / 32, s);
            advance_n(set, tc, 12);
            expect_gather_equals_lattice(set, lat);
        }
    }
    ParticleOptions o = test::options(Method::tsp);
    o.tsp_q = 0.75;
    auto tsp = initialize(tc.data, m4prime_kernel(), unit_grid(1.0 / 32, 0), o);
    advance_n(tsp, tc, 12);
    expect_gather_equals_lattice(tsp, lat);
}

TEST(Density, LtpWithIdentityIsFsl) {
    const Lattice lat = eval_lattice(129);
    const auto data = cone_data({0.5, 0.25});
    auto fsl = make_set(data, "b3", Method::fsl, 1.0 / 32);
    auto ltp = make_set(data, "b3", Method::ltp, 1.0 / 32);
    for (int n = 0; n < 3; ++n) {
        advance(fsl, uniform_field({0.1, 0.2}), 0.1 * n, 0.1);
        advance(ltp, uniform_field({0.1, 0.2}), 0.1 * n, 0.1);
    }
    for (auto k : ltp.active_ids) ltp.D[k] = identity<2>();
    ASSERT_EQ(fsl.center, ltp.center);
    EXPECT_EQ(eval_density_lattice(fsl, lat), eval_density_lattice(ltp, lat));
}

TEST(Density, QtpWithoutQuadraticPartIsLtp) {
    const Lattice lat = eval_lattice(129);
    const auto tc = make_test_case("rb-hump");
    auto ltp = make_set(tc.data, "b3", Method::ltp, 1.0 / 32);
    advance_n(ltp, tc, 5);
    auto qtp = make_set(tc.data, "b3", Method::qtp, 1.0 / 32);
    qtp.center = ltp.center;
    qtp.D = ltp.D;
    const auto a = eval_density_lattice(ltp, lat);
    const auto b = eval_density_lattice(qtp, lat);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}
