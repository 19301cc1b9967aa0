#include <cmath>

#include <gtest/gtest.h>

#include "support.hpp"
#include "tpart/particles.hpp"

using namespace tpart;
using tpart::test::make_set;
using tpart::test::rel_diff;

namespace {

const Mat2 kA{{{2.0, 0.0}, {0.0, 0.5}}};
const Vec2 kB{0.01, -0.02};

Vec2 affine(const Vec2& x) { return kA * x + kB; }
Vec2 quadratic(const Vec2& x) { return {x[0] + x[0] * x[0], x[1]}; }

void expect_mat_near(const Mat2& a, const Mat2& b, double tol) {
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) EXPECT_NEAR(a[i][j], b[i][j], tol) << i << "," << j;
}

}  // namespace

TEST(Particles, ZeroDataIsInactive) {
    const auto set = make_set(constant_data(0.0), "b3", Method::ltp, 1.0 / 16);
    EXPECT_EQ(set.active_count(), 0u);
}

TEST(Particles, UnitDataGivesAreaWeights) {
    const double h = 1.0 / 16;
    const auto set = make_set(constant_data(1.0), "b3", Method::fsl, h);
    for (std::size_t k = 0; k < set.size(); ++k) {
        const auto [i, j] = set.index[k];
        if (i >= 0 && i <= 16 && j >= 0 && j <= 16) EXPECT_NEAR(set.weight[k], h * h, 1e-17);
    }
}

TEST(Particles, CompactDataActivatesAFraction) {
    const auto set = make_set(cone_data({0.5, 0.25}), "b3", Method::ltp, 1.0 / 32);
    EXPECT_GT(set.active_count(), 0u);
    EXPECT_LT(set.active_count(), set.size() / 4);
}

TEST(Particles, InitialState) {
    for (Method m : {Method::fsl, Method::ltp, Method::qtp}) {
        const auto set = make_set(hump_data({0.5, 0.5}), "b3", m, 1.0 / 16);
        for (auto k : set.active_ids) {
            EXPECT_EQ(set.center[k], set.origin[k]);
            EXPECT_EQ(set.D[k], identity<2>());
            if (m == Method::qtp) {
                EXPECT_EQ(set.support_radius[k], set.kernel.rho0);
                for (int i = 0; i < 2; ++i) EXPECT_EQ(set.Q[k][i], Mat2{});
            }
        }
    }
}

TEST(Particles, WeightBound) {
    const double h = 1.0 / 32;
    for (const char* id : {"m4p", "b1", "b3", "b5"}) {
        const auto k = make_kernel(id);
        double cw = 0.0;
        for (int a = -k.stencil_radius(); a <= k.stencil_radius(); ++a)
            for (int b = -k.stencil_radius(); b <= k.stencil_radius(); ++b)
                cw += std::abs(k.a(a) * k.a(b));
        const auto set = make_set(hump_data({0.5, 0.5}), id, Method::ltp, h);
        for (auto i : set.active_ids) EXPECT_LE(std::abs(set.weight[i]), cw * h * h * (1 + 1e-12));
    }
}

TEST(Particles, PushZeroField) {
    auto set = make_set(hump_data({0.5, 0.5}), "b3", Method::qtp, 1.0 / 16);
    const auto before = set;
    advance(set, zero_field(), 0.0, 0.1);
    EXPECT_EQ(set.center, before.center);
    EXPECT_EQ(set.markers, before.markers);
    EXPECT_EQ(set.D, before.D);
}

TEST(Particles, TranslationKeepsMarkerPatch) {
    auto set = make_set(hump_data({0.5, 0.5}), "b3", Method::qtp, 1.0 / 16);
    for (int n = 0; n < 5; ++n) advance(set, uniform_field({0.3, -0.1}), 0.1 * n, 0.1);
    for (auto k : set.active_ids) {
        const auto mk = set.markers_of(k);
        for (std::size_t l = 0; l < marker::count; ++l) {
            EXPECT_NEAR(mk[l][0] - mk[0][0], set.hprime * kMarkerOffsets[l][0], 1e-14);
            EXPECT_NEAR(mk[l][1] - mk[0][1], set.hprime * kMarkerOffsets[l][1], 1e-14);
        }
        expect_mat_near(set.D[k], identity<2>(), 1e-12);
    }
}

TEST(Particles, NlrOneStepRotation) {
    ParticleSet set = make_set(constant_data(1.0), "b1", Method::fsl, 1.0 / 10, DerivativeScheme::direct, 0);
    advance(set, nonlinear_rotation_field(), 0.0, 0.5);
    for (auto k : set.active_ids) {
        if (set.index[k] != std::array<int, 2>{7, 5}) continue;
        const double th = 0.0625;
        EXPECT_NEAR(set.center[k][0], 0.5 + 0.2 * std::cos(th), 1e-6);
        EXPECT_NEAR(set.center[k][1], 0.5 + 0.2 * std::sin(th), 1e-6);
    }
}

TEST(Particles, DirectJacobianOfAffineFlow) {
    const Mat2 expected{{{0.5, 0.0}, {0.0, 2.0}}};
    for (Method m : {Method::ltp, Method::qtp}) {
        auto set = make_set(hump_data({0.5, 0.5}), "b3", m, 1.0 / 16);
        advance_with(set, affine);
        for (auto k : set.active_ids) expect_mat_near(set.D[k], expected, 1e-12);
        EXPECT_LT(backward_flow_indicator(set, 1), 1e-14);
        if (m == Method::qtp)
            for (auto k : set.active_ids)
                for (int i = 0; i < 2; ++i) expect_mat_near(set.Q[k][i], Mat2{}, 1e-9);
    }
}

TEST(Particles, IncrementalJacobianOfAffineFlow) {
    const Mat2 expected{{{0.5, 0.0}, {0.0, 2.0}}};
    for (Method m : {Method::ltp, Method::qtp}) {
        auto set = make_set(hump_data({0.5, 0.5}), "b3", m, 1.0 / 16, DerivativeScheme::incremental);
        advance_with(set, affine);
        for (auto k : set.active_ids) expect_mat_near(set.D[k], expected, 1e-12);
        if (m == Method::qtp)
            for (auto k : set.active_ids)
                for (int i = 0; i < 2; ++i) expect_mat_near(set.Q[k][i], Mat2{}, 1e-9);
    }
}

TEST(Particles, IncrementalZeroFieldKeepsState) {
    auto set = make_set(hump_data({0.5, 0.5}), "b3", Method::qtp, 1.0 / 16, DerivativeScheme::incremental);
    advance_with(set, affine);
    const auto before = set;
    advance(set, zero_field(), 0.0, 0.1);
    for (auto k : set.active_ids) {
        expect_mat_near(set.D[k], before.D[k], 1e-14);
        for (int i = 0; i < 2; ++i) expect_mat_near(set.Q[k][i], before.Q[k][i], 1e-12);
    }
}

// F(x) = x + (x1^2, 0) has the inverse B1(y) = (sqrt(1 + 4 y1) - 1) / 2, B2(y) = y2, so at
// y = F(x): dB1/dy1 = 1 / (1 + 2 x1) and d2B1/dy1^2 = -2 / (1 + 2 x1)^3.
TEST(Particles, QuadraticFlowHessianOracle) {
    for (auto scheme : {DerivativeScheme::direct, DerivativeScheme::incremental}) {
        auto set = make_set(hump_data({0.5, 0.5}), "b3", Method::qtp, 1.0 / 16, scheme);
        advance_with(set, quadratic);
        for (auto k : set.active_ids) {
            const double s = 1.0 + 2.0 * set.origin[k][0];
            expect_mat_near(set.D[k], Mat2{{{1.0 / s, 0.0}, {0.0, 1.0}}}, 1e-10);
            expect_mat_near(set.Q[k][0], Mat2{{{-2.0 / (s * s * s), 0.0}, {0.0, 0.0}}}, 1e-8);
            expect_mat_near(set.Q[k][1], Mat2{}, 1e-8);
        }
    }
}

TEST(Particles, SingularJacobianIsFlagged) {
    auto set = make_set(hump_data({0.5, 0.5}), "b3", Method::ltp, 1.0 / 16);
    EXPECT_FALSE(set.degenerate);
    advance_with(set, [](const Vec2& x) { return Vec2{x[0], 0.25}; });
    EXPECT_TRUE(set.degenerate);
    auto inc = make_set(hump_data({0.5, 0.5}), "b3", Method::ltp, 1.0 / 16, DerivativeScheme::incremental);
    advance_with(inc, [](const Vec2& x) { return Vec2{x[0] + x[1], x[0] + x[1]}; });
    EXPECT_TRUE(inc.degenerate);
}

TEST(Particles, IndicatorVanishesAtStart) {
    const auto set = make_set(hump_data({0.5, 0.5}), "b3", Method::qtp, 1.0 / 16);
    EXPECT_EQ(backward_flow_indicator(set, 1), 0.0);
    EXPECT_EQ(backward_flow_indicator(set, 2), 0.0);
    const auto inc = make_set(hump_data({0.5, 0.5}), "b3", Method::qtp, 1.0 / 16, DerivativeScheme::incremental);
    EXPECT_THROW(backward_flow_indicator(inc, 1), ConfigError);
}

TEST(Particles, SchemesAgreeOnSmoothFlow) {
    const auto tc = make_test_case("rb-hump");
    for (Method m : {Method::ltp, Method::qtp}) {
        auto a = make_set(tc.data, "b3", m, 1.0 / 64);
        auto b = make_set(tc.data, "b3", m, 1.0 / 64, DerivativeScheme::incremental);
        for (int n = 0; n < 10; ++n) {
            advance(a, tc.field, n * tc.dt, tc.dt);
            advance(b, tc.field, n * tc.dt, tc.dt);
        }
        for (auto k : a.active_ids) {
            EXPECT_LE(rel_diff(b.D[k], a.D[k]), 1e-2);
            if (m != Method::qtp) continue;
            double num = 0.0, den = 0.0;
            for (int i = 0; i < 2; ++i) {
                num += std::pow(norm_frobenius(a.Q[k][i] - b.Q[k][i]), 2);
                den += std::pow(norm_frobenius(a.Q[k][i]), 2);
            }
            EXPECT_LE(std::sqrt(num), 5e-2 * std::sqrt(den) + 1e-12);
        }
    }
}

TEST(Particles, DirectJacobianConvergesOnNlr) {
    auto exact = [](double t, const Vec2& x) {
        Mat2 J{};
        const double s = 1e-7;
        for (int j = 0; j < 2; ++j) {
            Vec2 p = x, q = x;
            p[j] += s;
            q[j] -= s;
            const Vec2 a = nlr::backward(t, p), b = nlr::backward(t, q);
            for (int i = 0; i < 2; ++i) J[i][j] = (a[i] - b[i]) / (2 * s);
        }
        return J;
    };
    double prev = 0.0;
    for (int n : {32, 64, 128}) {
        auto set = make_set(hump_data({0.6, 0.5}), "b3", Method::ltp, 1.0 / n);
        for (int s = 0; s < 4; ++s) advance(set, nonlinear_rotation_field(), 0.5 * s, 0.5);
        double e = 0.0;
        for (auto k : set.active_ids) e = std::max(e, rel_diff(set.D[k], exact(2.0, set.center[k])));
        if (prev > 0.0) EXPECT_GT(prev / e, 1.6) << "1/h=" << n;
        prev = e;
    }
}

TEST(Particles, DeterminantNearOne) {
    const auto tc = make_test_case("sw-hump");
    auto set = make_set(tc.data, "b3", Method::qtp, 1.0 / 64);
    for (int n = 0; n < 10; ++n) advance(set, tc.field, n * tc.dt, tc.dt);
    for (auto k : set.active_ids) EXPECT_NEAR(det(set.D[k]), 1.0, 1e-2);
}

TEST(Particles, StateMachine) {
    const auto tc = make_test_case("sw-hump");
    auto fsl = make_set(tc.data, "b3", Method::fsl, 1.0 / 32);
    auto ltp = make_set(tc.data, "b3", Method::ltp, 1.0 / 32);
    ParticleOptions o = test::options(Method::tsp);
    auto tsp = initialize(tc.data, make_kernel("b3"), unit_grid(1.0 / 32, 4), o);
    for (int n = 0; n < 5; ++n) {
        advance(fsl, tc.field, n * tc.dt, tc.dt);
        advance(ltp, tc.field, n * tc.dt, tc.dt);
        advance(tsp, tc.field, n * tc.dt, tc.dt);
    }
    for (auto k : fsl.active_ids) EXPECT_EQ(fsl.D[k], identity<2>());
    EXPECT_TRUE(fsl.Q.empty());
    EXPECT_FALSE(fsl.has_markers());
    EXPECT_TRUE(ltp.Q.empty());
    EXPECT_TRUE(ltp.has_markers());
    EXPECT_FALSE(tsp.has_markers());
    EXPECT_TRUE(tsp.Q.empty());
}

TEST(Particles, Deterministic) {
    const auto tc = make_test_case("rb-hump");
    auto a = make_set(tc.data, "b5", Method::qtp, 1.0 / 32);
    auto b = make_set(tc.data, "b5", Method::qtp, 1.0 / 32);
    for (int n = 0; n < 5; ++n) {
        advance(a, tc.field, n * tc.dt, tc.dt);
        advance(b, tc.field, n * tc.dt, tc.dt);
    }
    EXPECT_EQ(a.center, b.center);
    EXPECT_EQ(a.markers, b.markers);
    EXPECT_EQ(a.D, b.D);
    EXPECT_EQ(a.Q, b.Q);
    EXPECT_EQ(a.weight, b.weight);
}

TEST(Particles, Parsers) {
    EXPECT_EQ(parse_method("qtp"), Method::qtp);
    EXPECT_EQ(parse_scheme("incremental"), DerivativeScheme::incremental);
    EXPECT_THROW(parse_method("sph"), ConfigError);
    EXPECT_THROW(parse_scheme("mixed"), ConfigError);
}
