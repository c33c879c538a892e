#pragma once

// Independent finite-difference oracle for the autodiff derivatives.
// Central differences, step 1e-5 * max(1, |x_i|).

#include <cmath>
#include <functional>

#include "kqbh/phase_space.hpp"

namespace kqbh::testing {

using ScalarOf = std::function<double(const PhasePoint&)>;

inline double fd_step(double x) { return 1e-5 * std::max(1.0, std::abs(x)); }

inline Vec4 fd_gradient(const ScalarOf& f, const PhasePoint& p) {
    Vec4 g;
    const Vec4 z = to_vec(p);
    for (int i = 0; i < 4; ++i) {
        const double h = fd_step(z[i]);
        Vec4 up = z, dn = z;
        up[i] += h;
        dn[i] -= h;
        g[i] = (f(from_vec(up)) - f(from_vec(dn))) / (2.0 * h);
    }
    return g;
}

/// {f, g} from finite-difference gradients, with the a, b, p_a, p_b ordering.
inline double fd_bracket(const ScalarOf& f, const ScalarOf& g, const PhasePoint& p) {
    const Vec4 gf = fd_gradient(f, p);
    const Vec4 gg = fd_gradient(g, p);
    return gf[0] * gg[2] - gf[2] * gg[0] + gf[1] * gg[3] - gf[3] * gg[1];
}

inline PhasePoint reference_point() { return {1.0, 0.0, 0.0, 1.0}; }

inline ModelParams kepler_unit() {
    ModelParams k;
    k.k1 = 1.0;
    return k;
}

inline ModelParams coupled() {
    ModelParams k;
    k.k1 = 1.0;
    k.k2 = 0.3;
    k.k3 = -0.2;
    return k;
}

inline double rel(double x, double y) { return std::abs(x - y) / (1.0 + std::max(std::abs(x), std::abs(y))); }

}  // namespace kqbh::testing
