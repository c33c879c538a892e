#pragma once

// Closed-form expressions as they appear in the published derivation,
// transcribed literally (typos included). Nothing in the library uses these
// as definitions: they are only compared against the computed quantities,
// and the comparison outcome (match / sign / factor / mismatch) is reported.
//
// Also holds hand-corrected versions of the kernel generators; those are
// checked to lie in the numerical kernel before they are used.

#include <array>
#include <cmath>
#include <complex>

#include "kqbh/dual.hpp"
#include "kqbh/observables.hpp"
#include "kqbh/phase_space.hpp"

namespace kqbh::printed {

using cd = std::complex<double>;
inline constexpr cd I{0.0, 1.0};

/// Index pairs in the order (a,b), (a,pa), (a,pb), (b,pa), (b,pb), (pa,pb).
inline constexpr std::array<std::array<int, 2>, 6> kPairs{{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};
inline constexpr std::array<const char*, 6> kPairNames{"12", "13", "14", "23", "24", "34"};

using Coefficients = std::array<double, 6>;

// ---------------------------------------------------------------------------
// expanded integrals

inline double j3_closed_form(const PhasePoint& p, const ModelParams& k) {
    const double r2 = radius2(p);
    return angular_momentum(p) * momentum_p2(p) +
           2.0 * (k.k1 * 0.5 * (p.a * p.a - p.b * p.b) / r2 - k.k2 * p.a * p.b * p.b / r2 +
                  k.k3 * p.a * p.a * p.b / r2);
}

inline double j4_closed_form(const PhasePoint& p, const ModelParams& k) {
    const double r2 = radius2(p);
    return angular_momentum(p) * momentum_p1(p) -
           2.0 * (k.k1 * p.a * p.b / r2 + 0.5 * k.k2 * p.b * (p.a * p.a - p.b * p.b) / r2 +
                  0.5 * k.k3 * p.a * (p.b * p.b - p.a * p.a) / r2);
}

inline double k3_closed_form(const PhasePoint& p, const ModelParams& k) {
    const double r2 = radius2(p);
    const double s = coupling_shift(p, k);
    return angular_momentum(p) * momentum_p1(p) -
           (2.0 * k.k1 * p.a * p.b / r2 + s * (p.a * p.a - p.b * p.b) / r2);
}

inline double k4_closed_form(const PhasePoint& p, const ModelParams& k) {
    const double j = angular_momentum(p);
    const double s = coupling_shift(p, k);
    return 2.0 * j * j * hamiltonian(p, k) + 2.0 * j * (k.k3 * p.pa - k.k2 * p.pb) + s * s;
}

/// |B|^2 as printed (identical to the identity checked in observables).
inline double b_modulus_closed_form(const PhasePoint& p, const ModelParams& k) {
    const double j = angular_momentum(p);
    const double s = coupling_shift(p, k);
    return 2.0 * j * j * hamiltonian(p, k) + 2.0 * j * (k.k3 * p.pa - k.k2 * p.pb) + k.k1 * k.k1 + s * s;
}

/// Printed |M_a|^2 with the literal unsquared (k2 b - k3 a) term.
inline double ma_modulus_closed_form(const PhasePoint& p, const ModelParams& k) {
    const double j = angular_momentum(p);
    const double rx = j3_closed_form(p, k);
    return 2.0 * (j * j * hamiltonian(p, k) + k.k1 * rx + j * (k.k3 * p.pa - k.k2 * p.pb)) +
           coupling_shift(p, k) + 2.0 * k.k1 * k.k1;
}

inline double mb_modulus_closed_form(const PhasePoint& p, const ModelParams& k) {
    const double j = angular_momentum(p);
    const double rx = j3_closed_form(p, k);
    return 2.0 * (j * j * hamiltonian(p, k) - k.k1 * rx + j * (k.k3 * p.pa - k.k2 * p.pb)) +
           coupling_shift(p, k) + 2.0 * k.k1 * k.k1;
}

/// Printed right-hand side of |M_a|^2 - |M_b|^2 = 4 k1 R_x.
inline double ma_mb_gap_closed_form(const PhasePoint& p, const ModelParams& k) {
    return 4.0 * k.k1 * j3_closed_form(p, k);
}

// ---------------------------------------------------------------------------
// coefficient tables of the real 2-forms

/// Coefficients of Re(dA ^ dB*).
inline Coefficients omega1_alpha(const PhasePoint& p, const ModelParams& k) {
    const double a = p.a, b = p.b, pa = p.pa, pb = p.pb;
    const double r2 = a * a + b * b;
    const double r4 = r2 * r2;
    return {2.0 / r4 * ((a * a - b * b) * (b * k.k2 - a * k.k3)),
            2.0 * b / r4 * (2.0 * a * b * pa - r2 * pb),
            2.0 * b / r4 * (2.0 * a * b * pb - r2 * pa),
            2.0 * a / r4 * (2.0 * a * b * pa - r2 * pb),
            2.0 * a / r4 * (2.0 * a * b * pb - r2 * pa),
            0.0};
}

/// Coefficients of Im(dA ^ dB*).
inline Coefficients omega2_beta(const PhasePoint& p, const ModelParams& k) {
    const double a = p.a, b = p.b, pa = p.pa, pb = p.pb;
    const double r2 = a * a + b * b;
    const double r4 = r2 * r2;
    return {4.0 * a * b * (a * k.k3 - b * k.k2) / r4,
            4.0 * b * b * b * pa / r4,
            -4.0 * b * b * b * pb / r4,
            -4.0 * b * b * b * pa / r4,
            4.0 * a * a * a * pb / r4,
            0.0};
}

/// k1-part of the Re(dM_a ^ dM_b*) table (before the 2/r2^2 prefactor).
inline Coefficients omegaM1_alpha_k1(const PhasePoint& p, const ModelParams& k) {
    const double a = p.a, b = p.b, pa = p.pa, pb = p.pb;
    const double j = angular_momentum(p);
    const double u = a * pa + b * pb;
    return {0.0,
            -j * (u * pb + 2.0 * k.k1 * b) * b,
            j * (u * pa + 2.0 * k.k1 * a) * b,
            j * (u * pb + 2.0 * k.k1 * b) * a,
            -j * (u * pa + 2.0 * k.k1 * a) * a,
            2.0 * j * j * (a * a + b * b)};
}

/// (k2, k3)-part of the Re(dM_a ^ dM_b*) table (before the prefactor).
inline Coefficients omegaM1_alpha_k(const PhasePoint& p, const ModelParams& k) {
    const double a = p.a, b = p.b, pa = p.pa, pb = p.pb;
    const double k2 = k.k2, k3 = k.k3;
    const double j = angular_momentum(p);
    const double s = k2 * b - k3 * a;
    const double r2 = a * a + b * b;
    return {s * (s * r2 + j * (a * pa + b * pb)),
            k2 * b * b * (2 * a * b * pa - a * a * pb + b * b * pb) +
                k3 * b * (2 * b * b * b * pa - a * a * a * pb - 3 * a * b * b * pb),
            -k2 * b * b * (a * a * pa - b * b * pa + 2 * a * b * pb) +
                k3 * a * (-a * a * b * pa - 3 * b * b * b * pa + 2 * a * a * a * pb + 4 * a * b * b * pb),
            k2 * b * (-4 * a * a * b * pa - 2 * b * b * b * pa + 3 * a * a * a * pb + a * b * b * pb) -
                k3 * a * a * (-2 * a * b * pa + a * a * pb - b * b * pb),
            -k2 * a * (-3 * a * a * b * pa - b * b * b * pa + 2 * a * a * a * pb) -
                k3 * a * a * (a * a * pa - b * b * pa + 2 * a * b * pb),
            0.0};
}

/// Full Re(dM_a ^ dM_b*) coefficients, 2/r2^2 (alpha_k1 + alpha_k).
inline Coefficients omegaM1_alpha(const PhasePoint& p, const ModelParams& k) {
    const double r2 = radius2(p);
    const double pre = 2.0 / (r2 * r2);
    const auto x = omegaM1_alpha_k1(p, k);
    const auto y = omegaM1_alpha_k(p, k);
    Coefficients out{};
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = pre * (x[i] + y[i]);
    return out;
}

/// Im(dM_a ^ dM_b*) table entries (before the 2 k1/r2^2 prefactor).
inline Coefficients omegaM2_beta_raw(const PhasePoint& p, const ModelParams& k) {
    const double a = p.a, b = p.b, pa = p.pa, pb = p.pb;
    const double s = k.k2 * b - k.k3 * a;
    // "(a^2 p_b + b^2)" is transcribed literally.
    const double w = a * a * pb + b * b;
    return {-(a * a - b * b) * s,
            (w * pb - 2 * a * b * pa) * b,
            (w * pa - 2 * a * b * pb) * b,
            -(w * pb - 2 * a * b * pa) * a,
            -(w * pa - 2 * a * b * pb) * a,
            0.0};
}

inline Coefficients omegaM2_beta(const PhasePoint& p, const ModelParams& k) {
    const double r2 = radius2(p);
    const double pre = 2.0 * k.k1 / (r2 * r2);
    auto x = omegaM2_beta_raw(p, k);
    for (double& v : x) v *= pre;
    return x;
}

/// The recursion operator assembled from a coefficient table with the
/// printed component layout (columns are images of the basis vectors).
inline Mat4 recursion_from_table(const Coefficients& c) {
    const double c12 = c[0], c13 = c[1], c14 = c[2], c23 = c[3], c24 = c[4];
    Mat4 r = Mat4::Zero();
    // [c13 d_a + c14 d_b - c12 d_pb] (x) da
    r(0, 0) = c13; r(1, 0) = c14; r(3, 0) = -c12;
    // [c23 d_a + c24 d_b + c12 d_pa] (x) db
    r(0, 1) = c23; r(1, 1) = c24; r(2, 1) = c12;
    // [c13 d_pa + c23 d_pb] (x) dpa
    r(2, 2) = c13; r(3, 2) = c23;
    // [c14 d_pa + c24 d_pb] (x) dpb
    r(2, 3) = c14; r(3, 3) = c24;
    return r;
}

// ---------------------------------------------------------------------------
// vector fields, components in the (d_a, d_b, d_pa, d_pb) basis

inline CVec4 basis(int i) {
    CVec4 v = CVec4::Zero();
    v[i] = 1.0;
    return v;
}

/// W in its expanded form.
inline cd w_expanded(const PhasePoint& p) {
    const double a = p.a, b = p.b, pa = p.pa, pb = p.pb;
    return 2.0 * ((a * a - b * b) * pa * pb - a * b * (pa * pa - pb * pb)) +
           I * ((a * a - b * b) * (pa * pa - pb * pb) + 4.0 * a * b * pa * pb);
}

/// W in its factored form i (a + i b)^2 (p_a - i p_b)^2.
inline cd w_factored(const PhasePoint& p) {
    const cd z(p.a, p.b);
    const cd q(p.pa, -p.pb);
    return I * z * z * q * q;
}

inline CVec4 field_YA(const PhasePoint& p) {
    const double a = p.a, b = p.b;
    const double r2 = a * a + b * b;
    const cd c = 2.0 / (r2 * r2) * (-2.0 * a * b + I * (a * a - b * b));
    return c * (b * basis(2) - a * basis(3));
}

inline CVec4 field_YB(const PhasePoint& p, const ModelParams& k) {
    const double a = p.a, b = p.b, pa = p.pa, pb = p.pb;
    const double r2 = a * a + b * b;
    const double j = a * pb - b * pa;
    const double u = a * pa + b * pb;
    const CVec4 rot = a * basis(1) - b * basis(0);
    const CVec4 dil = a * basis(0) + b * basis(1);
    const CVec4 horizontal = (1.0 / r2) * (2.0 * j * rot + I * (j * dil + u * rot));
    const CVec4 vertical = (w_expanded(p) / (r2 * r2)) * (b * basis(2) - a * basis(3)) +
                           I * (k.k3 * basis(3) - k.k2 * basis(2));
    return horizontal - vertical;
}

/// Z_a = Z_a0 + k1 Z_a1 + k2 Z_a2 + k3 Z_a3.
inline CVec4 field_Za(const PhasePoint& p, const ModelParams& k) {
    const double a = p.a, b = p.b, pa = p.pa, pb = p.pb;
    const double r2 = a * a + b * b;
    const double s = std::sqrt(r2);
    const double s3 = s * r2;
    const CVec4 twist = b * basis(2) - a * basis(3);
    const CVec4 cube = b * b * b * basis(2) + a * a * a * basis(3);
    const CVec4 z0 = (1.0 / s) * ((a * pb - 2.0 * b * pa + I * b * pb) * basis(0) +
                                  (a * pa + I * (b * pa - 2.0 * a * pb)) * basis(1) -
                                  ((a * pa + b * pb) / r2) * ((pa - I * pb) * twist));
    const CVec4 z1 = (2.0 * I * b / s3) * twist;
    const CVec4 z2 = (1.0 / s3) * (cube + I * b * (a * b * basis(2) - (2.0 * a * a + b * b) * basis(3)));
    const CVec4 z3 = (1.0 / s3) * (a * (-(a * a + 2.0 * b * b) * basis(2) + a * b * basis(3)) + I * cube);
    return z0 + k.k1 * z1 + k.k2 * z2 + k.k3 * z3;
}

inline CVec4 field_Zb(const PhasePoint& p, const ModelParams& k) {
    const double a = p.a, b = p.b, pa = p.pa, pb = p.pb;
    const double r2 = a * a + b * b;
    const double s = std::sqrt(r2);
    const double s3 = s * r2;
    const CVec4 twist = b * basis(2) - a * basis(3);
    const CVec4 cube = b * b * b * basis(2) + a * a * a * basis(3);
    const CVec4 z0 = (1.0 / s) * ((-b * pb + I * (a * pb - 2.0 * b * pa)) * basis(0) +
                                  (2.0 * a * pb - b * pa + I * a * pa) * basis(1) -
                                  ((a * pa + b * pb) / r2) * ((pb + I * pa) * twist));
    const CVec4 z1 = (-2.0 * I * a / s3) * twist;
    const CVec4 z2 = (1.0 / s3) * (b * (-a * b * basis(2) + (2.0 * a * a + b * b) * basis(3)) + I * cube);
    const CVec4 z3 = (-1.0 / s3) * (cube + I * a * ((a * a + 2.0 * b * b) * basis(2) - a * b * basis(3)));
    return z0 + k.k1 * z1 + k.k2 * z2 + k.k3 * z3;
}

// ---------------------------------------------------------------------------
// kernel generators

inline Vec4 unit(int i) {
    Vec4 v = Vec4::Zero();
    v[i] = 1.0;
    return v;
}

inline Vec4 kernel_X11(const PhasePoint& p) {
    const double c = 2.0 * p.a * p.b * p.pb - radius2(p) * p.pa;
    return c * unit(2) + c * unit(3);
}

inline Vec4 kernel_X12(const PhasePoint& p, const ModelParams& k) {
    const double a = p.a, b = p.b;
    const double r2 = radius2(p);
    const double f = (a * a - b * b) * (a * k.k3 - b * k.k2) / (r2 * p.pa - 2.0 * a * b * p.pa);
    return a * unit(2) + b * unit(1) - f * unit(3);
}

inline Vec4 kernel_X21(const PhasePoint& p) {
    return p.a * p.a * p.pb * unit(2) + p.b * p.b * p.pa * unit(3);
}

inline Vec4 kernel_X22(const PhasePoint& p, const ModelParams& k) {
    const double a = p.a, b = p.b;
    const double f = b * (a * k.k3 - b * k.k2) / (a * p.pb);
    return a * unit(2) + b * unit(1) - f * unit(3);
}

}  // namespace kqbh::printed

namespace kqbh::corrected {

/// Y_B with the coupling term of the vertical part read as i (k3 d_pa - k2 d_pb).
inline CVec4 field_YB(const PhasePoint& p, const ModelParams& k) {
    using printed::basis;
    using printed::I;
    const CVec4 swap = I * (k.k3 * basis(3) - k.k2 * basis(2)) - I * (k.k3 * basis(2) - k.k2 * basis(3));
    return printed::field_YB(p, k) + swap;
}

/// Im(dM_a ^ dM_b*) table with (a^2 p_b + b^2) read as (a^2 + b^2), prefactor included.
inline printed::Coefficients omegaM2_beta(const PhasePoint& p, const ModelParams& k) {
    const double a = p.a, b = p.b, pa = p.pa, pb = p.pb;
    const double r2 = a * a + b * b;
    const double pre = 2.0 * k.k1 / (r2 * r2);
    const double s = k.k2 * b - k.k3 * a;
    return {-pre * (a * a - b * b) * s,
            pre * (r2 * pb - 2 * a * b * pa) * b,
            pre * (r2 * pa - 2 * a * b * pb) * b,
            -pre * (r2 * pb - 2 * a * b * pa) * a,
            -pre * (r2 * pa - 2 * a * b * pb) * a,
            0.0};
}

// Hand-corrected kernel generators, templated so they can be differentiated.
// Each is verified against the numerical kernel in the test suite.

/// Ker Re(dA ^ dB*): (2ab p_b - r2 p_a) d_pa + (r2 p_b - 2ab p_a) d_pb.
template <PhaseScalar T>
std::array<T, 4> kernel_X11(const PhaseCoords<T>& z, const ModelParams& = {}) {
    const T r2 = radius2(z);
    return {T(0.0), T(0.0), 2.0 * z.a * z.b * z.pb - r2 * z.pa, r2 * z.pb - 2.0 * z.a * z.b * z.pa};
}

/// Ker Re(dA ^ dB*): a d_a + b d_b - (a^2 - b^2)(a k3 - b k2)/(r2 p_a - 2ab p_b) d_pb.
template <PhaseScalar T>
std::array<T, 4> kernel_X12(const PhaseCoords<T>& z, const ModelParams& k) {
    const T r2 = radius2(z);
    const T f = (z.a * z.a - z.b * z.b) * (k.k3 * z.a - k.k2 * z.b) / (r2 * z.pa - 2.0 * z.a * z.b * z.pb);
    return {z.a, z.b, T(0.0), -f};
}

/// Ker Im(dA ^ dB*): a^2 p_b d_pa + b^2 p_a d_pb (as printed).
template <PhaseScalar T>
std::array<T, 4> kernel_X21(const PhaseCoords<T>& z, const ModelParams& = {}) {
    return {T(0.0), T(0.0), z.a * z.a * z.pb, z.b * z.b * z.pa};
}

/// Ker Im(dA ^ dB*): a d_a + b d_b - b (a k3 - b k2)/(a p_b) d_pb.
template <PhaseScalar T>
std::array<T, 4> kernel_X22(const PhaseCoords<T>& z, const ModelParams& k) {
    const T f = z.b * (k.k3 * z.a - k.k2 * z.b) / (z.a * z.pb);
    return {z.a, z.b, T(0.0), -f};
}

}  // namespace kqbh::corrected
