#pragma once

#include "tpart/particles.hpp"

namespace tpart::test {

inline ParticleOptions options(Method m, DerivativeScheme s = DerivativeScheme::direct) {
    ParticleOptions o;
    o.method = m;
    o.scheme = s;
    return o;
}

inline ParticleSet make_set(const InitialData& data, const char* kernel, Method m, double h,
                            DerivativeScheme s = DerivativeScheme::direct, int margin = 4) {
    return initialize(data, make_kernel(kernel), unit_grid(h, margin), options(m, s));
}

inline double rel_diff(const Mat2& a, const Mat2& b) {
    return norm_frobenius(a - b) / norm_frobenius(b);
}

}  // namespace tpart::test
