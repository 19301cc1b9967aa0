#pragma once

/**
 * @file flows.hpp
 * @brief Benchmark velocity fields, initial data, and the RK4 forward flow.
 */

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "tpart/errors.hpp"
#include "tpart/linalg.hpp"

namespace tpart {

using VelocityFn = std::function<Vec2(double, const Vec2&)>;
using BackwardFlowFn = std::function<Vec2(double, const Vec2&)>;

enum class FieldId { swirl, rayleigh_benard, nonlinear_rotation, custom };

struct FlowField {
    FieldId id = FieldId::custom;
    std::string name;
    double period = 1.0;  ///< T in cos(pi t / T); unused by stationary fields
    bool reversible = false;
    VelocityFn velocity;
    std::optional<BackwardFlowFn> exact_backward;  ///< B(t, x): position at time 0
};

namespace nlr {

inline constexpr Vec2 kCenter{0.5, 0.5};
inline constexpr double kRadius = 0.4;

inline double alpha(const Vec2& x) {
    const double r = std::hypot(x[0] - kCenter[0], x[1] - kCenter[1]);
    const double s = 1.0 - r / kRadius;
    return s > 0.0 ? s * s * s : 0.0;
}

inline Vec2 velocity(const Vec2& x) {
    const double a = alpha(x);
    return {a * (kCenter[1] - x[1]), a * (x[0] - kCenter[0])};
}

/// Exact backward flow: rotation of x about the center by -alpha(x) t.
inline Vec2 backward(double t, const Vec2& x) {
    const double a = alpha(x);
    if (a == 0.0) return x;
    const double theta = a * t;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const double dx = x[0] - kCenter[0];
    const double dy = x[1] - kCenter[1];
    return {kCenter[0] + c * dx + s * dy, kCenter[1] - s * dx + c * dy};
}

}  // namespace nlr

/// psi = -sin^2(pi x1) sin^2(pi x2), u = (1/pi) cos(pi t/T) (d2 psi, -d1 psi).
inline FlowField swirl_field(double period) {
    using std::numbers::pi;
    FlowField f;
    f.id = FieldId::swirl;
    f.name = "SW";
    f.period = period;
    f.reversible = true;
    f.velocity = [period](double t, const Vec2& x) -> Vec2 {
        const double g = std::cos(pi * t / period);
        const double s1 = std::sin(pi * x[0]);
        const double s2 = std::sin(pi * x[1]);
        return {-g * s1 * s1 * std::sin(2.0 * pi * x[1]), g * std::sin(2.0 * pi * x[0]) * s2 * s2};
    };
    return f;
}

/// psi = (x1 - 1/2)(x1 - x1^2)(x2 - x2^2), u = cos(pi t/T) (d2 psi, -d1 psi).
inline FlowField rayleigh_benard_field(double period) {
    using std::numbers::pi;
    FlowField f;
    f.id = FieldId::rayleigh_benard;
    f.name = "RB";
    f.period = period;
    f.reversible = true;
    f.velocity = [period](double t, const Vec2& x) -> Vec2 {
        const double g = std::cos(pi * t / period);
        const double x1 = x[0];
        const double x2 = x[1];
        const double a = (x1 - 0.5) * (x1 - x1 * x1);
        const double da = -3.0 * x1 * x1 + 3.0 * x1 - 0.5;
        const double b = x2 - x2 * x2;
        const double db = 1.0 - 2.0 * x2;
        return {g * a * db, -g * da * b};
    };
    return f;
}

inline FlowField nonlinear_rotation_field() {
    FlowField f;
    f.id = FieldId::nonlinear_rotation;
    f.name = "NLR";
    f.velocity = [](double, const Vec2& x) { return nlr::velocity(x); };
    f.exact_backward = [](double t, const Vec2& x) { return nlr::backward(t, x); };
    return f;
}

inline FlowField custom_field(std::string name, VelocityFn u) {
    FlowField f;
    f.name = std::move(name);
    f.velocity = std::move(u);
    return f;
}

inline FlowField zero_field() {
    return custom_field("zero", [](double, const Vec2&) { return Vec2{0.0, 0.0}; });
}

inline FlowField uniform_field(Vec2 v) {
    return custom_field("uniform", [v](double, const Vec2&) { return v; });
}

/// Exact backward flow; only the nonlinear rotation field has one.
inline Vec2 exact_backward_flow(const FlowField& field, double t, const Vec2& x) {
    if (!field.exact_backward)
        throw ConfigError("field " + field.name + " has no analytic backward flow");
    return (*field.exact_backward)(t, x);
}

inline Vec2 exact_backward_flow_nlr(double t, const Vec2& x) { return nlr::backward(t, x); }

/// One classical RK4 step of X' = u(t, X); the numerical forward flow F^n.
inline Vec2 rk4_step(const FlowField& field, double t, double dt, const Vec2& x) {
    const auto& u = field.velocity;
    const double half = 0.5 * dt;
    const Vec2 k1 = u(t, x);
    const Vec2 k2 = u(t + half, {x[0] + half * k1[0], x[1] + half * k1[1]});
    const Vec2 k3 = u(t + half, {x[0] + half * k2[0], x[1] + half * k2[1]});
    const Vec2 k4 = u(t + dt, {x[0] + dt * k3[0], x[1] + dt * k3[1]});
    const double c = dt / 6.0;
    return {x[0] + c * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            x[1] + c * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])};
}

// ---------------------------------------------------------------------------
// Initial data

enum class DataId { hump, cone, linear, constant, custom };

struct InitialData {
    DataId id = DataId::custom;
    std::string name;
    Vec2 center{0.5, 0.5};
    std::function<double(const Vec2&)> density;
};

inline InitialData hump_data(Vec2 center) {
    return {DataId::hump, "hump", center, [center](const Vec2& x) {
                const double r = std::hypot(x[0] - center[0], x[1] - center[1]);
                return 0.5 * (1.0 + std::erf((11.0 - 100.0 * r) / 3.0));
            }};
}

inline InitialData cone_data(Vec2 center) {
    return {DataId::cone, "cone", center, [center](const Vec2& x) {
                const double r = std::hypot(x[0] - center[0], x[1] - center[1]);
                return std::max(0.0, 1.0 - 20.0 / 3.0 * r);
            }};
}

inline InitialData linear_data() {
    return {DataId::linear, "linear", {0.5, 0.5}, [](const Vec2& x) { return x[1] - 0.5; }};
}

inline InitialData constant_data(double c) {
    return {DataId::constant, "constant", {0.0, 0.0}, [c](const Vec2&) { return c; }};
}

inline double initial_density(const InitialData& data, const Vec2& x) { return data.density(x); }

// ---------------------------------------------------------------------------
// Benchmark cases

struct TestCase {
    std::string name;
    FlowField field;
    InitialData data;
    double final_time = 1.0;
    double dt = 0.01;
};

inline TestCase make_test_case(std::string_view id) {
    if (id == "sw-cone") return {"sw-cone", swirl_field(5.0), cone_data({0.5, 0.25}), 5.0, 0.05};
    if (id == "sw-hump") return {"sw-hump", swirl_field(5.0), hump_data({0.5, 0.7}), 5.0, 0.05};
    if (id == "rb-hump")
        return {"rb-hump", rayleigh_benard_field(3.0), hump_data({0.5, 0.4}), 3.0, 0.03};
    if (id == "nlr") return {"nlr", nonlinear_rotation_field(), linear_data(), 50.0, 0.5};
    throw ConfigError("unknown test case '" + std::string(id) + "'");
}

/// Reference solution: f0(B(t, x)) when an analytic backward flow exists,
/// f0 itself at t = 0 and, for reversible fields, at t = T.
inline double reference_solution(const TestCase& tc, double t, const Vec2& x) {
    constexpr double eps = 1e-9;
    if (std::abs(t) < eps) return tc.data.density(x);
    if (tc.field.exact_backward) return tc.data.density((*tc.field.exact_backward)(t, x));
    if (tc.field.reversible && std::abs(t - tc.final_time) < eps * std::max(1.0, tc.final_time))
        return tc.data.density(x);
    throw ConfigError("no reference solution for case " + tc.name + " at t=" + std::to_string(t));
}

inline bool has_reference(const TestCase& tc, double t) {
    constexpr double eps = 1e-9;
    return std::abs(t) < eps || tc.field.exact_backward.has_value() ||
           (tc.field.reversible && std::abs(t - tc.final_time) < eps * std::max(1.0, tc.final_time));
}

}  // namespace tpart
