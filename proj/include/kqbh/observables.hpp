#pragma once

/**
 * @file observables.hpp
 * @brief Phase-space functions of the (k1, k2, k3) Kepler-related system in
 *        parabolic coordinates.
 *
 * Hamiltonian
 *   H = (p_a^2 + p_b^2) / (2 r2) + (k1 + k2 a + k3 b) / r2,   r2 = a^2 + b^2.
 *
 * Complex functions
 *   A   = (a^2 - b^2)/r2 + i 2ab/r2                                 (|A| = 1)
 *   B   = (J^2/r2 + k1) + i (J (a p_a + b p_b)/r2 + k3 a - k2 b)
 *   M_a = [(J p_a - s a) + i (-J p_b - 2 k1 a + s b)] / sqrt(r2)
 *   M_b = [(J p_b - s b) + i ( J p_a - 2 k1 b - s a)] / sqrt(r2)
 * with J = a p_b - b p_a and s = k2 b - k3 a. Along the flow
 *   dA/dt = 2 i lambda A, dB/dt = 2 i lambda B, dM/dt = i lambda M,
 *   lambda = J / r2^2,
 * so J34 = A B* and K34 = M_a M_b* are complex constants of motion. Their
 * real and imaginary parts J3, J4, K3, K4 are defined here as Re/Im; no
 * expanded closed form is used as a definition.
 *
 * Every function is a template over the scalar type so that the same source
 * yields values, gradients (Dual1) and Hessians (Dual2).
 */

#include <cmath>
#include <complex>

#include "kqbh/autodiff.hpp"
#include "kqbh/complex.hpp"
#include "kqbh/fit.hpp"
#include "kqbh/phase_space.hpp"

namespace kqbh {

namespace detail {

template <PhaseScalar T>
void require_off_origin(const PhaseCoords<T>& z) {
    const double a = value_of(z.a);
    const double b = value_of(z.b);
    if (!(a * a + b * b > kOriginEpsilon)) {
        throw DomainError("observable evaluated at the origin singularity a^2 + b^2 = " +
                          std::to_string(a * a + b * b));
    }
}

}  // namespace detail

template <PhaseScalar T>
T radius2(const PhaseCoords<T>& z) {
    return z.a * z.a + z.b * z.b;
}

template <PhaseScalar T>
T hamiltonian(const PhaseCoords<T>& z, const ModelParams& k) {
    detail::require_off_origin(z);
    const T r2 = radius2(z);
    return (0.5 * (z.pa * z.pa + z.pb * z.pb) + k.k1 + k.k2 * z.a + k.k3 * z.b) / r2;
}

/// J = a p_b - b p_a (twice the Cartesian angular momentum).
template <PhaseScalar T>
T angular_momentum(const PhaseCoords<T>& z, const ModelParams& = {}) {
    return z.a * z.pb - z.b * z.pa;
}

template <PhaseScalar T>
T momentum_p1(const PhaseCoords<T>& z, const ModelParams& = {}) {
    detail::require_off_origin(z);
    return (z.a * z.pa - z.b * z.pb) / radius2(z);
}

template <PhaseScalar T>
T momentum_p2(const PhaseCoords<T>& z, const ModelParams& = {}) {
    detail::require_off_origin(z);
    return (z.a * z.pb + z.b * z.pa) / radius2(z);
}

struct Momenta {
    double J = 0.0;
    double P1 = 0.0;
    double P2 = 0.0;
};

inline Momenta momenta(const PhasePoint& p) {
    validate(p);
    return {angular_momentum(p), momentum_p1(p), momentum_p2(p)};
}

/// lambda = J / (a^2 + b^2)^2
template <PhaseScalar T>
T lambda_factor(const PhaseCoords<T>& z, const ModelParams& = {}) {
    detail::require_off_origin(z);
    const T r2 = radius2(z);
    return angular_momentum(z) / (r2 * r2);
}

template <PhaseScalar T>
Cx<T> func_A(const PhaseCoords<T>& z, const ModelParams& = {}) {
    detail::require_off_origin(z);
    const T inv = inverse(radius2(z));
    return {(z.a * z.a - z.b * z.b) * inv, 2.0 * z.a * z.b * inv};
}

template <PhaseScalar T>
Cx<T> func_B(const PhaseCoords<T>& z, const ModelParams& k) {
    detail::require_off_origin(z);
    const T j = angular_momentum(z);
    const T inv = inverse(radius2(z));
    return {j * j * inv + k.k1, j * (z.a * z.pa + z.b * z.pb) * inv + k.k3 * z.a - k.k2 * z.b};
}

/// s = k2 b - k3 a, the combination shared by M_a, M_b and the moduli.
template <PhaseScalar T>
T coupling_shift(const PhaseCoords<T>& z, const ModelParams& k) {
    return k.k2 * z.b - k.k3 * z.a;
}

template <PhaseScalar T>
Cx<T> func_Ma(const PhaseCoords<T>& z, const ModelParams& k) {
    detail::require_off_origin(z);
    const T j = angular_momentum(z);
    const T s = coupling_shift(z, k);
    const T inv = inverse(checked_sqrt(radius2(z)));
    return {(j * z.pa - s * z.a) * inv, (-(j * z.pb) - 2.0 * k.k1 * z.a + s * z.b) * inv};
}

template <PhaseScalar T>
Cx<T> func_Mb(const PhaseCoords<T>& z, const ModelParams& k) {
    detail::require_off_origin(z);
    const T j = angular_momentum(z);
    const T s = coupling_shift(z, k);
    const T inv = inverse(checked_sqrt(radius2(z)));
    return {(j * z.pb - s * z.b) * inv, (j * z.pa - 2.0 * k.k1 * z.b - s * z.a) * inv};
}

/// J34 = A B*
template <PhaseScalar T>
Cx<T> invariant_J34(const PhaseCoords<T>& z, const ModelParams& k) {
    return func_A(z, k) * conj(func_B(z, k));
}

/// K34 = M_a M_b*
template <PhaseScalar T>
Cx<T> invariant_K34(const PhaseCoords<T>& z, const ModelParams& k) {
    return func_Ma(z, k) * conj(func_Mb(z, k));
}

template <PhaseScalar T>
T invariant_J3(const PhaseCoords<T>& z, const ModelParams& k) { return invariant_J34(z, k).re; }
template <PhaseScalar T>
T invariant_J4(const PhaseCoords<T>& z, const ModelParams& k) { return invariant_J34(z, k).im; }
template <PhaseScalar T>
T invariant_K3(const PhaseCoords<T>& z, const ModelParams& k) { return invariant_K34(z, k).re; }
template <PhaseScalar T>
T invariant_K4(const PhaseCoords<T>& z, const ModelParams& k) { return invariant_K34(z, k).im; }

/// Parabolic-separability integral with F(a) = k1/2 + k2 a, G(b) = k1/2 + k3 b:
///   I2 = J P2 + 2 (a^2 G(b) - b^2 F(a)) / r2
template <PhaseScalar T>
T invariant_I2(const PhaseCoords<T>& z, const ModelParams& k) {
    detail::require_off_origin(z);
    const T F = 0.5 * k.k1 + k.k2 * z.a;
    const T G = 0.5 * k.k1 + k.k3 * z.b;
    return angular_momentum(z) * momentum_p2(z) + 2.0 * (z.a * z.a * G - z.b * z.b * F) / radius2(z);
}

struct InvariantSet {
    double H = 0.0;
    double J3 = 0.0;
    double J4 = 0.0;
    double K3 = 0.0;
    double K4 = 0.0;
    double I2 = 0.0;
    double J = 0.0;
};

inline InvariantSet invariants(const PhasePoint& p, const ModelParams& k) {
    validate(p);
    const auto j34 = invariant_J34(p, k);
    const auto k34 = invariant_K34(p, k);
    return {hamiltonian(p, k), j34.re, j34.im, k34.re, k34.im, invariant_I2(p, k), angular_momentum(p)};
}

// ---------------------------------------------------------------------------
// double-precision conveniences

inline std::complex<double> value_A(const PhasePoint& p) { validate(p); return to_std(func_A(p)); }
inline std::complex<double> value_B(const PhasePoint& p, const ModelParams& k) { validate(p); return to_std(func_B(p, k)); }
inline std::complex<double> value_Ma(const PhasePoint& p, const ModelParams& k) { validate(p); return to_std(func_Ma(p, k)); }
inline std::complex<double> value_Mb(const PhasePoint& p, const ModelParams& k) { validate(p); return to_std(func_Mb(p, k)); }
inline std::complex<double> value_J34(const PhasePoint& p, const ModelParams& k) { validate(p); return to_std(invariant_J34(p, k)); }
inline std::complex<double> value_K34(const PhasePoint& p, const ModelParams& k) { validate(p); return to_std(invariant_K34(p, k)); }

/// Gradient-carrying complex observables.
inline ComplexObservable observable_A(const PhasePoint& p, const ModelParams& k = {}) {
    return eval_grad([](const auto& z, const ModelParams& kk) { return func_A(z, kk); }, p, k);
}
inline ComplexObservable observable_B(const PhasePoint& p, const ModelParams& k) {
    return eval_grad([](const auto& z, const ModelParams& kk) { return func_B(z, kk); }, p, k);
}
inline ComplexObservable observable_Ma(const PhasePoint& p, const ModelParams& k) {
    return eval_grad([](const auto& z, const ModelParams& kk) { return func_Ma(z, kk); }, p, k);
}
inline ComplexObservable observable_Mb(const PhasePoint& p, const ModelParams& k) {
    return eval_grad([](const auto& z, const ModelParams& kk) { return func_Mb(z, kk); }, p, k);
}

// ---------------------------------------------------------------------------
// modulus identities

/// Residuals of the modulus identities at one point.
///   b_modulus:      |B|^2 - [2 J^2 H + 2 J (k3 p_a - k2 p_b) + k1^2 + s^2]
///   ma_mb_gap:      |M_a|^2 - |M_b|^2 - 4 k1 J3
///   ma_linear / mb_linear:   printed |M_a|^2, |M_b|^2 with s unsquared
///   ma_squared / mb_squared: the same with s^2
struct ModulusResiduals {
    Residual b_modulus;
    Residual ma_mb_gap;
    Residual ma_linear;
    Residual mb_linear;
    Residual ma_squared;
    Residual mb_squared;
};

inline ModulusResiduals modulus_identities(const PhasePoint& p, const ModelParams& k) {
    validate(p);
    const double h = hamiltonian(p, k);
    const double j = angular_momentum(p);
    const double s = coupling_shift(p, k);
    const double j3 = invariant_J3(p, k);
    const double b2 = norm(func_B(p, k));
    const double ma2 = norm(func_Ma(p, k));
    const double mb2 = norm(func_Mb(p, k));

    const double t_energy = 2.0 * j * j * h;
    const double t_mixed = 2.0 * j * (k.k3 * p.pa - k.k2 * p.pb);
    const double t_rx = 2.0 * k.k1 * j3;

    auto scale_of = [](std::initializer_list<double> terms) {
        double m = 0.0;
        for (double t : terms) m = std::max(m, std::abs(t));
        return m;
    };

    ModulusResiduals r;
    r.b_modulus = {b2 - (t_energy + t_mixed + k.k1 * k.k1 + s * s),
                   scale_of({b2, t_energy, t_mixed, k.k1 * k.k1, s * s})};
    r.ma_mb_gap = {ma2 - mb2 - 4.0 * k.k1 * j3, scale_of({ma2, mb2, 4.0 * k.k1 * j3})};
    const double common = t_energy + t_mixed + 2.0 * k.k1 * k.k1;
    r.ma_linear = {ma2 - (common + t_rx + s), scale_of({ma2, t_energy, t_mixed, t_rx, s})};
    r.mb_linear = {mb2 - (common - t_rx + s), scale_of({mb2, t_energy, t_mixed, t_rx, s})};
    r.ma_squared = {ma2 - (common + t_rx + s * s), scale_of({ma2, t_energy, t_mixed, t_rx, s * s})};
    r.mb_squared = {mb2 - (common - t_rx + s * s), scale_of({mb2, t_energy, t_mixed, t_rx, s * s})};
    return r;
}

// ---------------------------------------------------------------------------
// registry of real observables (used by sweeps and the finite-difference oracle)

inline std::vector<RealField> registered_observables() {
    return {
        make_field("H", [](const auto& z, const ModelParams& k) { return hamiltonian(z, k); }),
        make_field("J", [](const auto& z, const ModelParams& k) { return angular_momentum(z, k); }),
        make_field("P1", [](const auto& z, const ModelParams& k) { return momentum_p1(z, k); }),
        make_field("P2", [](const auto& z, const ModelParams& k) { return momentum_p2(z, k); }),
        make_field("lambda", [](const auto& z, const ModelParams& k) { return lambda_factor(z, k); }),
        make_field("A1", [](const auto& z, const ModelParams& k) { return func_A(z, k).re; }),
        make_field("A2", [](const auto& z, const ModelParams& k) { return func_A(z, k).im; }),
        make_field("B1", [](const auto& z, const ModelParams& k) { return func_B(z, k).re; }),
        make_field("B2", [](const auto& z, const ModelParams& k) { return func_B(z, k).im; }),
        make_field("Ma1", [](const auto& z, const ModelParams& k) { return func_Ma(z, k).re; }),
        make_field("Ma2", [](const auto& z, const ModelParams& k) { return func_Ma(z, k).im; }),
        make_field("Mb1", [](const auto& z, const ModelParams& k) { return func_Mb(z, k).re; }),
        make_field("Mb2", [](const auto& z, const ModelParams& k) { return func_Mb(z, k).im; }),
        make_field("J3", [](const auto& z, const ModelParams& k) { return invariant_J3(z, k); }),
        make_field("J4", [](const auto& z, const ModelParams& k) { return invariant_J4(z, k); }),
        make_field("K3", [](const auto& z, const ModelParams& k) { return invariant_K3(z, k); }),
        make_field("K4", [](const auto& z, const ModelParams& k) { return invariant_K4(z, k); }),
        make_field("I2", [](const auto& z, const ModelParams& k) { return invariant_I2(z, k); }),
    };
}

/// The first integrals checked for conservation.
inline std::vector<RealField> conserved_quantities() {
    return {
        make_field("J3", [](const auto& z, const ModelParams& k) { return invariant_J3(z, k); }),
        make_field("J4", [](const auto& z, const ModelParams& k) { return invariant_J4(z, k); }),
        make_field("K3", [](const auto& z, const ModelParams& k) { return invariant_K3(z, k); }),
        make_field("K4", [](const auto& z, const ModelParams& k) { return invariant_K4(z, k); }),
        make_field("I2", [](const auto& z, const ModelParams& k) { return invariant_I2(z, k); }),
    };
}

// ---------------------------------------------------------------------------
// Cartesian form of the same system

/// H in Cartesian coordinates with the potential
///   V = c1/R + c2 sqrt(R + x)/R + c3 sqrt(R - x)/R,  R = sqrt(x^2 + y^2),
/// where (c1, c2, c3) are the Cartesian couplings. On the chart sheet
/// a > 0, b > 0 this equals the parabolic H with k_i = 2 c_i.
inline double cartesian_hamiltonian(const CartesianPoint& c, double c1, double c2, double c3) {
    validate(c);
    const double r = std::hypot(c.x, c.y);
    return 0.5 * (c.px * c.px + c.py * c.py) + c1 / r + c2 * std::sqrt(std::max(0.0, r + c.x)) / r +
           c3 * std::sqrt(std::max(0.0, r - c.x)) / r;
}

/// Cartesian angular momentum x p_y - y p_x (equals J / 2 under the chart).
inline double cartesian_angular_momentum(const CartesianPoint& c) { return c.x * c.py - c.y * c.px; }

}  // namespace kqbh
