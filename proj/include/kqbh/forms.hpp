#pragma once

// Two-forms on T*R^2 as antisymmetric 4x4 matrices, Omega(X, Y) = X^T m Y.
//
//   w0       = da ^ dp_a + db ^ dp_b
//   Omega    = dA ^ dB*    = Omega1 + i Omega2
//   Omega_M  = dM_a ^ dM_b* = Omega_M1 + i Omega_M2
//
// The recursion operator of a form is R = w0^{-1} m, i.e. the matrix with
// Omega(X, Y) = w0(R X, Y).

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "kqbh/autodiff.hpp"
#include "kqbh/brackets.hpp"
#include "kqbh/fit.hpp"
#include "kqbh/observables.hpp"
#include "kqbh/printed.hpp"

namespace kqbh {

enum class FormKind { omega0, Omega1, Omega2, OmegaM1, OmegaM2 };

inline std::string to_string(FormKind f) {
    switch (f) {
        case FormKind::omega0: return "omega0";
        case FormKind::Omega1: return "Omega1";
        case FormKind::Omega2: return "Omega2";
        case FormKind::OmegaM1: return "OmegaM1";
        case FormKind::OmegaM2: return "OmegaM2";
    }
    return "?";
}

inline FormKind parse_form(const std::string& s) {
    for (FormKind f : {FormKind::omega0, FormKind::Omega1, FormKind::Omega2, FormKind::OmegaM1, FormKind::OmegaM2}) {
        if (to_string(f) == s) return f;
    }
    throw ConfigError("unknown form '" + s + "'");
}

inline constexpr std::array<FormKind, 4> kDegenerateForms{FormKind::Omega1, FormKind::Omega2, FormKind::OmegaM1,
                                                          FormKind::OmegaM2};

struct TwoFormMatrix {
    Mat4 m = Mat4::Zero();

    double magnitude() const { return m.cwiseAbs().maxCoeff(); }
    double antisymmetry_defect() const { return (m + m.transpose()).cwiseAbs().maxCoeff(); }
    /// i(X) Omega, component j = sum_i X_i m(i, j).
    Vec4 contract(const Vec4& x) const { return m.transpose() * x; }
    CVec4 contract(const CVec4& x) const { return m.transpose().cast<std::complex<double>>() * x; }
    double operator()(const Vec4& x, const Vec4& y) const { return x.dot(m * y); }
};

/// A form together with its first partials dm[k] = d m / d z_k.
struct FormJet {
    Mat4 m = Mat4::Zero();
    std::array<Mat4, kDim> dm{Mat4::Zero(), Mat4::Zero(), Mat4::Zero(), Mat4::Zero()};

    FormJet& operator+=(const FormJet& o) {
        m += o.m;
        for (int k = 0; k < kDim; ++k) dm[k] += o.dm[k];
        return *this;
    }
    FormJet& operator-=(const FormJet& o) {
        m -= o.m;
        for (int k = 0; k < kDim; ++k) dm[k] -= o.dm[k];
        return *this;
    }
    friend FormJet operator+(FormJet x, const FormJet& y) { return x += y; }
    friend FormJet operator-(FormJet x, const FormJet& y) { return x -= y; }

    TwoFormMatrix form() const { return {m}; }

    /// Entry (i, j) as a dual number carrying its gradient.
    Dual1 entry(int i, int j) const {
        return {m(i, j), Vec4(dm[0](i, j), dm[1](i, j), dm[2](i, j), dm[3](i, j))};
    }
};

inline Mat4 canonical_form_matrix() {
    Mat4 w = Mat4::Zero();
    w(0, 2) = 1.0;
    w(2, 0) = -1.0;
    w(1, 3) = 1.0;
    w(3, 1) = -1.0;
    return w;
}

/// df ^ dg = grad f grad g^T - grad g grad f^T.
inline Mat4 wedge(const Vec4& gf, const Vec4& gg) { return gf * gg.transpose() - gg * gf.transpose(); }

inline FormJet wedge_jet(const Dual2& f, const Dual2& g) {
    FormJet j;
    j.m = wedge(f.g, g.g);
    for (int k = 0; k < kDim; ++k) {
        const Vec4 hf = f.h.col(k);
        const Vec4 hg = g.h.col(k);
        j.dm[k] = hf * g.g.transpose() + f.g * hg.transpose() - hg * f.g.transpose() - g.g * hf.transpose();
    }
    return j;
}

/// wedge of two real scalar fields at p.
template <class F, class G>
TwoFormMatrix wedge_pair(F&& f, G&& g, const PhasePoint& p, const ModelParams& k) {
    return {wedge(eval_grad(f, p, k).g, eval_grad(g, p, k).g)};
}

namespace detail {

/// Real and imaginary parts of dF ^ dG*.
inline std::pair<FormJet, FormJet> complex_wedge(const Cx<Dual2>& F, const Cx<Dual2>& G) {
    FormJet re = wedge_jet(F.re, G.re) + wedge_jet(F.im, G.im);
    FormJet im = wedge_jet(F.im, G.re) - wedge_jet(F.re, G.im);
    return {re, im};
}

}  // namespace detail

inline FormJet form_jet(FormKind which, const PhasePoint& p, const ModelParams& k) {
    validate(p);
    if (which == FormKind::omega0) return FormJet{canonical_form_matrix(), {}};
    const auto z = seed<Dual2>(p);
    if (which == FormKind::Omega1 || which == FormKind::Omega2) {
        auto [re, im] = detail::complex_wedge(func_A(z, k), func_B(z, k));
        return which == FormKind::Omega1 ? re : im;
    }
    auto [re, im] = detail::complex_wedge(func_Ma(z, k), func_Mb(z, k));
    return which == FormKind::OmegaM1 ? re : im;
}

inline TwoFormMatrix build_form(FormKind which, const PhasePoint& p, const ModelParams& k) {
    validate(p);
    if (which == FormKind::omega0) return {canonical_form_matrix()};
    const auto z = seed<Dual1>(p);
    Cx<Dual1> F;
    Cx<Dual1> G;
    if (which == FormKind::Omega1 || which == FormKind::Omega2) {
        F = func_A(z, k);
        G = func_B(z, k);
    } else {
        F = func_Ma(z, k);
        G = func_Mb(z, k);
    }
    if (which == FormKind::Omega1 || which == FormKind::OmegaM1) {
        return {wedge(F.re.g, G.re.g) + wedge(F.im.g, G.im.g)};
    }
    return {wedge(F.im.g, G.re.g) - wedge(F.re.g, G.im.g)};
}

// ---------------------------------------------------------------------------
// degeneracy

/// Pfaffian m01 m23 - m02 m13 + m03 m12, with the sum of the term magnitudes
/// as the cancellation scale.
struct Pfaffian {
    double value = 0.0;
    double scale = 0.0;

    double relative() const { return std::abs(value) / std::max(scale, std::numeric_limits<double>::min()); }
};

inline Pfaffian pfaffian(const Mat4& m) {
    const double t1 = m(0, 1) * m(2, 3);
    const double t2 = m(0, 2) * m(1, 3);
    const double t3 = m(0, 3) * m(1, 2);
    return {t1 - t2 + t3, std::abs(t1) + std::abs(t2) + std::abs(t3)};
}

/// The scalar of m1 ^ m2 (symmetric in its arguments; equals 2 Pf(m) when m1 = m2).
inline Pfaffian mixed_wedge(const Mat4& m1, const Mat4& m2) {
    const std::array<double, 6> t{m1(0, 1) * m2(2, 3), -m1(0, 2) * m2(1, 3), m1(0, 3) * m2(1, 2),
                                  m2(0, 1) * m1(2, 3), -m2(0, 2) * m1(1, 3), m2(0, 3) * m1(1, 2)};
    Pfaffian out;
    for (double x : t) {
        out.value += x;
        out.scale += std::abs(x);
    }
    return out;
}

inline constexpr double kRankThreshold = 1e-10;

inline Vec4 singular_values(const Mat4& m) { return Eigen::JacobiSVD<Mat4>(m).singularValues(); }

/// Numerical rank: singular values above threshold * sigma_max.
inline int numeric_rank(const Mat4& m, double threshold = kRankThreshold) {
    const Vec4 s = singular_values(m);
    if (s[0] == 0.0) return 0;
    int r = 0;
    for (int i = 0; i < kDim; ++i) r += s[i] > threshold * s[0] ? 1 : 0;
    return r;
}

struct FormDegeneracy {
    FormKind form = FormKind::Omega1;
    Pfaffian pf;
    int rank = 0;
};

struct DegeneracyReport {
    std::array<FormDegeneracy, 4> forms;
    Pfaffian mixed_omega;    ///< Omega1 ^ Omega2
    Pfaffian mixed_omega_m;  ///< Omega_M1 ^ Omega_M2
};

inline DegeneracyReport degeneracy(const PhasePoint& p, const ModelParams& k) {
    DegeneracyReport r;
    std::array<Mat4, 4> ms;
    for (std::size_t n = 0; n < kDegenerateForms.size(); ++n) {
        ms[n] = build_form(kDegenerateForms[n], p, k).m;
        r.forms[n] = {kDegenerateForms[n], pfaffian(ms[n]), numeric_rank(ms[n])};
    }
    r.mixed_omega = mixed_wedge(ms[0], ms[1]);
    r.mixed_omega_m = mixed_wedge(ms[2], ms[3]);
    return r;
}

// ---------------------------------------------------------------------------
// kernels

/// Orthonormal basis of the numerical null space (columns), from the SVD.
inline Eigen::Matrix<double, 4, Eigen::Dynamic> kernel_basis(const Mat4& m, double threshold = kRankThreshold) {
    Eigen::JacobiSVD<Mat4> svd(m, Eigen::ComputeFullV);
    const Vec4 s = svd.singularValues();
    int rank = 0;
    for (int i = 0; i < kDim; ++i) rank += (s[0] > 0.0 && s[i] > threshold * s[0]) ? 1 : 0;
    return svd.matrixV().rightCols(kDim - rank);
}

/// |i(X) Omega| relative to |X| |m|.
inline double annihilation_residual(const Mat4& m, const Vec4& x) {
    const double denom = x.norm() * std::max(m.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    if (denom == 0.0) return 0.0;
    return (m.transpose() * x).cwiseAbs().maxCoeff() / denom;
}

inline constexpr double kKernelTolerance = 1e-10;

/// Two smooth kernel fields of a rank-2 form, built by elimination around
/// the largest entry m(i, j): for each remaining index l,
///   v_l = e_l + (m(j, l) / m(i, j)) e_i - (m(i, l) / m(i, j)) e_j.
/// The pivot is fixed at the evaluation point, so the fields are smooth in a
/// neighbourhood and their Jacobians come from the form jet.
struct PivotedKernel {
    std::array<int, 2> pivot{0, 1};
    std::array<FieldJet, 2> fields;
};

inline PivotedKernel pivoted_kernel(const FormJet& jet) {
    PivotedKernel out;
    int pi = 0;
    int pj = 1;
    double best = -1.0;
    for (int i = 0; i < kDim; ++i) {
        for (int j = i + 1; j < kDim; ++j) {
            if (std::abs(jet.m(i, j)) > best) {
                best = std::abs(jet.m(i, j));
                pi = i;
                pj = j;
            }
        }
    }
    if (!(best > 0.0)) throw EvaluationError("pivoted_kernel: zero form");
    out.pivot = {pi, pj};
    const Dual1 piv = jet.entry(pi, pj);
    int slot = 0;
    for (int l = 0; l < kDim; ++l) {
        if (l == pi || l == pj) continue;
        std::array<Dual1, 4> v{Dual1(0.0), Dual1(0.0), Dual1(0.0), Dual1(0.0)};
        v[l] = Dual1(1.0);
        v[pi] = jet.entry(pj, l) / piv;
        v[pj] = -(jet.entry(pi, l) / piv);
        FieldJet& f = out.fields[slot++];
        for (int r = 0; r < kDim; ++r) {
            f.value[r] = v[r].v;
            f.jacobian.row(r) = v[r].g.transpose().cast<std::complex<double>>();
        }
    }
    return out;
}

/// Rank of [u v w] after normalising each column. A bracket w that is
/// negligible against `cancel_scale` (the size of the terms it was computed
/// from) counts as zero and hence as lying in the span.
inline int span_rank(const Vec4& u, const Vec4& v, const Vec4& w, double cancel_scale, double threshold = 1e-9) {
    if (w.norm() <= 1e-10 * cancel_scale) return 2;
    Eigen::Matrix<double, 4, 3> a;
    a.col(0) = u.normalized();
    a.col(1) = v.normalized();
    a.col(2) = w.normalized();
    const Eigen::Vector3d s = Eigen::JacobiSVD<Eigen::Matrix<double, 4, 3>>(a).singularValues();
    int r = 0;
    for (int i = 0; i < 3; ++i) r += s[i] > threshold * s[0] ? 1 : 0;
    return r;
}

struct InvolutivityCheck {
    int rank = 0;                   ///< rank of [V1 V2 [V1,V2]]
    double bracket_norm = 0.0;      ///< |[V1,V2]| / (|DV2| |V1| + |DV1| |V2|)
    double bracket_residual = 0.0;  ///< annihilation residual of [V1,V2]
    double field_residual = 0.0;    ///< worst annihilation residual of V1, V2

    bool passed(double tol = kKernelTolerance) const { return rank == 2 && field_residual <= tol; }
};

inline InvolutivityCheck involutivity(const Mat4& m, const FieldJet& v1, const FieldJet& v2) {
    InvolutivityCheck c;
    const Vec4 x = v1.value.real();
    const Vec4 y = v2.value.real();
    const Vec4 br = lie_bracket(v1, v2).real();
    const double cancel = v2.jacobian.norm() * v1.value.norm() + v1.jacobian.norm() * v2.value.norm();
    c.field_residual = std::max(annihilation_residual(m, x), annihilation_residual(m, y));
    c.bracket_residual = annihilation_residual(m, br);
    c.bracket_norm = cancel > 0.0 ? br.norm() / cancel : br.norm();
    c.rank = span_rank(x, y, br, cancel);
    return c;
}

struct GeneratorCheck {
    std::string name;
    double residual = 0.0;  ///< annihilation residual
    bool in_kernel = false;
};

struct KernelReport {
    FormKind form = FormKind::Omega1;
    int rank = 0;
    bool degenerate_point = false;  ///< rank != 2, no involutivity test
    Eigen::Matrix<double, 4, Eigen::Dynamic> basis;
    double basis_residual = 0.0;
    std::array<int, 2> pivot{0, 0};
    InvolutivityCheck pivoted;
    std::optional<InvolutivityCheck> closed_form;  ///< corrected generators, Omega1/Omega2 only
    std::vector<GeneratorCheck> printed_generators;
    std::vector<GeneratorCheck> corrected_generators;
};

namespace detail {

template <class F>
Vec4 generator_value(F&& f, const PhasePoint& p, const ModelParams& k) {
    const auto v = f(p, k);
    return {v[0], v[1], v[2], v[3]};
}

}  // namespace detail

inline KernelReport kernel_and_involutivity(FormKind which, const PhasePoint& p, const ModelParams& k) {
    if (which == FormKind::omega0) throw ConfigError("omega0 is symplectic and has no kernel");
    KernelReport r;
    r.form = which;
    const FormJet jet = form_jet(which, p, k);
    r.rank = numeric_rank(jet.m);
    r.basis = kernel_basis(jet.m);
    for (int c = 0; c < r.basis.cols(); ++c) {
        r.basis_residual = std::max(r.basis_residual, annihilation_residual(jet.m, r.basis.col(c)));
    }

    auto check = [&](const std::string& name, const Vec4& x) {
        const double res = annihilation_residual(jet.m, x);
        return GeneratorCheck{name, res, res <= kKernelTolerance};
    };
    if (which == FormKind::Omega1) {
        r.printed_generators = {check("X11", printed::kernel_X11(p)), check("X12", printed::kernel_X12(p, k))};
        r.corrected_generators = {
            check("X11", detail::generator_value([](const auto& z, const auto& kk) { return corrected::kernel_X11(z, kk); }, p, k)),
            check("X12", detail::generator_value([](const auto& z, const auto& kk) { return corrected::kernel_X12(z, kk); }, p, k))};
    } else if (which == FormKind::Omega2) {
        r.printed_generators = {check("X21", printed::kernel_X21(p)), check("X22", printed::kernel_X22(p, k))};
        r.corrected_generators = {
            check("X21", detail::generator_value([](const auto& z, const auto& kk) { return corrected::kernel_X21(z, kk); }, p, k)),
            check("X22", detail::generator_value([](const auto& z, const auto& kk) { return corrected::kernel_X22(z, kk); }, p, k))};
    }

    if (r.rank != 2) {
        r.degenerate_point = true;
        return r;
    }
    const PivotedKernel pk = pivoted_kernel(jet);
    r.pivot = pk.pivot;
    r.pivoted = involutivity(jet.m, pk.fields[0], pk.fields[1]);

    if (which == FormKind::Omega1) {
        r.closed_form = involutivity(
            jet.m, component_jet([](const auto& z, const auto& kk) { return corrected::kernel_X11(z, kk); }, p, k),
            component_jet([](const auto& z, const auto& kk) { return corrected::kernel_X12(z, kk); }, p, k));
    } else if (which == FormKind::Omega2) {
        r.closed_form = involutivity(
            jet.m, component_jet([](const auto& z, const auto& kk) { return corrected::kernel_X21(z, kk); }, p, k),
            component_jet([](const auto& z, const auto& kk) { return corrected::kernel_X22(z, kk); }, p, k));
    }
    return r;
}

// ---------------------------------------------------------------------------
// recursion operators

/// w0^{-1}; note w0^{-1} = -w0.
inline Mat4 canonical_form_inverse() { return -canonical_form_matrix(); }

inline Mat4 recursion_matrix(const Mat4& m) { return canonical_form_inverse() * m; }

/// Largest |Omega(e_i, e_j) - w0(R e_i, e_j)| over basis pairs.
inline double recursion_defining_residual(const Mat4& m, const Mat4& r) {
    return (m - r.transpose() * canonical_form_matrix()).cwiseAbs().maxCoeff();
}

struct RecursionOperator {
    FormKind form = FormKind::Omega1;
    Mat4 r = Mat4::Zero();
    std::array<std::complex<double>, 4> eigenvalues{};  ///< sorted by modulus
    double det = 0.0;
    double tau = 0.0;         ///< tr(R) / 2
    double scale = 0.0;       ///< Frobenius norm of R
    double zero_pair = 0.0;   ///< max modulus of the two smallest eigenvalues / scale
    double pair_split = 0.0;  ///< |lambda_3 - lambda_4| / scale
    double defining_residual = 0.0;

    double det_relative() const {
        const double s4 = scale * scale * scale * scale;
        return s4 > 0.0 ? std::abs(det) / s4 : std::abs(det);
    }
    bool pattern_holds(double tol = 1e-9) const {
        return det_relative() <= tol && zero_pair <= tol && pair_split <= tol;
    }
};

inline RecursionOperator analyse_recursion(FormKind form, const Mat4& m) {
    RecursionOperator out;
    out.form = form;
    out.r = recursion_matrix(m);
    out.det = out.r.determinant();
    out.tau = 0.5 * out.r.trace();
    out.scale = out.r.norm();
    out.defining_residual = recursion_defining_residual(m, out.r);
    Eigen::EigenSolver<Mat4> es(out.r, false);
    for (int i = 0; i < kDim; ++i) out.eigenvalues[i] = es.eigenvalues()[i];
    std::sort(out.eigenvalues.begin(), out.eigenvalues.end(),
              [](auto x, auto y) { return std::abs(x) < std::abs(y); });
    const double s = out.scale > 0.0 ? out.scale : 1.0;
    out.zero_pair = std::max(std::abs(out.eigenvalues[0]), std::abs(out.eigenvalues[1])) / s;
    out.pair_split = std::abs(out.eigenvalues[2] - out.eigenvalues[3]) / s;
    return out;
}

inline RecursionOperator recursion_operator(FormKind which, const PhasePoint& p, const ModelParams& k) {
    return analyse_recursion(which, build_form(which, p, k).m);
}

/// Printed component layout of R1/R2 filled from a coefficient table.
struct RecursionLayoutCheck {
    double layout_residual = 0.0;   ///< layout filled with the computed coefficients vs R
    double printed_residual = 0.0;  ///< layout filled with the printed table vs R
};

inline printed::Coefficients coefficients_of(const Mat4& m) {
    printed::Coefficients c{};
    for (std::size_t n = 0; n < printed::kPairs.size(); ++n) c[n] = m(printed::kPairs[n][0], printed::kPairs[n][1]);
    return c;
}

inline RecursionLayoutCheck printed_recursion_check(FormKind which, const PhasePoint& p, const ModelParams& k) {
    if (which != FormKind::Omega1 && which != FormKind::Omega2) {
        throw ConfigError("printed recursion layouts exist for Omega1 and Omega2 only");
    }
    const Mat4 m = build_form(which, p, k).m;
    const Mat4 r = recursion_matrix(m);
    const auto table = which == FormKind::Omega1 ? printed::omega1_alpha(p, k) : printed::omega2_beta(p, k);
    const double s = 1.0 + r.cwiseAbs().maxCoeff();
    return {(printed::recursion_from_table(coefficients_of(m)) - r).cwiseAbs().maxCoeff() / s,
            (printed::recursion_from_table(table) - r).cwiseAbs().maxCoeff() / s};
}

// ---------------------------------------------------------------------------
// Nijenhuis torsion

/// A (1,1)-tensor field with first partials dr[k] = d R / d z_k.
struct OperatorJet {
    Mat4 r = Mat4::Zero();
    std::array<Mat4, kDim> dr{Mat4::Zero(), Mat4::Zero(), Mat4::Zero(), Mat4::Zero()};
};

inline OperatorJet recursion_jet(const FormJet& f) {
    const Mat4 winv = canonical_form_inverse();
    OperatorJet j;
    j.r = winv * f.m;
    for (int k = 0; k < kDim; ++k) j.dr[k] = winv * f.dm[k];
    return j;
}

/// N(e_i, e_j) for coordinate fields, with U = R e_i, V = R e_j:
///   N = [U, V] + R dU/dz_j - R dV/dz_i.
inline Vec4 nijenhuis_on_basis(const OperatorJet& j, int i, int jj) {
    const Vec4 u = j.r.col(i);
    const Vec4 v = j.r.col(jj);
    Mat4 du;
    Mat4 dv;
    for (int k = 0; k < kDim; ++k) {
        du.col(k) = j.dr[k].col(i);
        dv.col(k) = j.dr[k].col(jj);
    }
    return dv * u - du * v + j.r * du.col(jj) - j.r * dv.col(i);
}

/// Max-norm of N_R over the six coordinate basis pairs.
inline double nijenhuis_norm(const OperatorJet& j) {
    double m = 0.0;
    for (int i = 0; i < kDim; ++i) {
        for (int jj = i + 1; jj < kDim; ++jj) m = std::max(m, nijenhuis_on_basis(j, i, jj).cwiseAbs().maxCoeff());
    }
    return m;
}

inline double nijenhuis_torsion(FormKind which, const PhasePoint& p, const ModelParams& k) {
    return nijenhuis_norm(recursion_jet(form_jet(which, p, k)));
}

// ---------------------------------------------------------------------------
// contraction identities

/// Per-point data for i(Gamma) Omega_n = c_n lambda dF_n with
/// (Omega1, J4), (Omega2, J3), (Omega_M1, K4), (Omega_M2, K3).
struct ContractionSample {
    std::array<Vec4, 4> lhs;  ///< i(Gamma) Omega_n
    std::array<Vec4, 4> rhs;  ///< lambda dF_n
    std::array<double, 4> scale{};
    double lambda = 0.0;
    double complex_omega = 0.0;    ///< |i(Gamma) Omega - 2 i lambda d(A B*)| relative
    double complex_omega_m = 0.0;  ///< |i(Gamma) Omega_M - i lambda d(M_a M_b*)| relative
};

inline constexpr std::array<const char*, 4> kContractionNames{"Omega1.J4", "Omega2.J3", "OmegaM1.K4", "OmegaM2.K3"};
inline constexpr std::array<double, 4> kContractionFactors{-2.0, 2.0, -1.0, 1.0};

inline ContractionSample contraction_sample(const PhasePoint& p, const ModelParams& k) {
    ContractionSample s;
    const Vec4 gamma = dynamics_jet(p, k).value.real();
    s.lambda = lambda_factor(p, k);
    const auto j34 = eval_grad([](const auto& z, const ModelParams& kk) { return invariant_J34(z, kk); }, p, k);
    const auto k34 = eval_grad([](const auto& z, const ModelParams& kk) { return invariant_K34(z, kk); }, p, k);
    const std::array<Vec4, 4> grads{j34.im.g, j34.re.g, k34.im.g, k34.re.g};
    std::array<Vec4, 4> contractions;
    for (std::size_t n = 0; n < kDegenerateForms.size(); ++n) {
        const TwoFormMatrix f = build_form(kDegenerateForms[n], p, k);
        contractions[n] = f.contract(gamma);
        s.lhs[n] = contractions[n];
        s.rhs[n] = s.lambda * grads[n];
        s.scale[n] = std::max({s.lhs[n].cwiseAbs().maxCoeff(), 2.0 * s.rhs[n].cwiseAbs().maxCoeff()});
    }
    const std::complex<double> i(0.0, 1.0);
    auto complex_residual = [&](int re, int im, double c, const Dual1& fre, const Dual1& fim) {
        const CVec4 lhs = contractions[re].cast<std::complex<double>>() + i * contractions[im].cast<std::complex<double>>();
        const CVec4 rhs = c * i * s.lambda *
                          (fre.g.cast<std::complex<double>>() + i * fim.g.cast<std::complex<double>>());
        return (lhs - rhs).cwiseAbs().maxCoeff() /
               (1.0 + std::max(lhs.cwiseAbs().maxCoeff(), rhs.cwiseAbs().maxCoeff()));
    };
    s.complex_omega = complex_residual(0, 1, 2.0, j34.re, j34.im);
    s.complex_omega_m = complex_residual(2, 3, 1.0, k34.re, k34.im);
    return s;
}

struct ContractionFitResult {
    std::array<FactorFit::Result, 4> factors;
    double max_complex_residual = 0.0;
    std::size_t points = 0;
    std::size_t excluded = 0;  ///< |lambda| too small to vote
};

inline ContractionFitResult contraction_identities(const std::vector<PhasePoint>& points, const ModelParams& k,
                                                   double min_abs_lambda = 1e-10) {
    std::array<FactorFit, 4> fits;
    ContractionFitResult out;
    for (const auto& p : points) {
        const ContractionSample s = contraction_sample(p, k);
        ++out.points;
        out.max_complex_residual = std::max({out.max_complex_residual, s.complex_omega, s.complex_omega_m});
        if (std::abs(s.lambda) <= min_abs_lambda) {
            ++out.excluded;
            continue;
        }
        for (std::size_t n = 0; n < fits.size(); ++n) {
            fits[n].add(std::span<const double>(s.lhs[n].data(), kDim), std::span<const double>(s.rhs[n].data(), kDim),
                        s.scale[n]);
        }
    }
    for (std::size_t n = 0; n < fits.size(); ++n) out.factors[n] = fits[n].finish();
    return out;
}

// ---------------------------------------------------------------------------
// quasi factor and orthogonality

struct QuasiFactor {
    bool defined = false;
    double mu = std::numeric_limits<double>::quiet_NaN();
    double residual = 0.0;  ///< |i(mu Gamma) Omega1 - dJ4| relative
};

/// mu with i(mu Gamma) Omega1 = dJ4, i.e. mu = 1 / (c1 lambda).
inline QuasiFactor quasi_factor(const PhasePoint& p, const ModelParams& k, double c1 = kContractionFactors[0],
                                double min_abs_lambda = 1e-10) {
    QuasiFactor q;
    const double lam = lambda_factor(p, k);
    if (std::abs(lam) <= min_abs_lambda || c1 == 0.0) return q;
    q.defined = true;
    q.mu = 1.0 / (c1 * lam);
    const Vec4 gamma = dynamics_jet(p, k).value.real();
    const Vec4 lhs = build_form(FormKind::Omega1, p, k).contract(Vec4(q.mu * gamma));
    const Vec4 rhs = eval_grad([](const auto& z, const ModelParams& kk) { return invariant_J4(z, kk); }, p, k).g;
    q.residual = (lhs - rhs).cwiseAbs().maxCoeff() / (1.0 + rhs.cwiseAbs().maxCoeff());
    return q;
}

struct OrthogonalityResult {
    std::array<double, 4> value{};   ///< Omega1(Y4,G), Omega2(Y3,G), Omega_M1(Z4,G), Omega_M2(Z3,G)
    std::array<double, 4> scale{};   ///< |Y| |m| |Gamma|

    double max_relative() const {
        double m = 0.0;
        for (std::size_t n = 0; n < value.size(); ++n) {
            m = std::max(m, scale[n] > 0.0 ? std::abs(value[n]) / scale[n] : std::abs(value[n]));
        }
        return m;
    }
};

inline OrthogonalityResult orthogonality(const PhasePoint& p, const ModelParams& k) {
    OrthogonalityResult o;
    const Vec4 gamma = dynamics_jet(p, k).value.real();
    const std::array<RealField, 4> fields{
        make_field("J4", [](const auto& z, const ModelParams& kk) { return invariant_J4(z, kk); }),
        make_field("J3", [](const auto& z, const ModelParams& kk) { return invariant_J3(z, kk); }),
        make_field("K4", [](const auto& z, const ModelParams& kk) { return invariant_K4(z, kk); }),
        make_field("K3", [](const auto& z, const ModelParams& kk) { return invariant_K3(z, kk); })};
    for (std::size_t n = 0; n < fields.size(); ++n) {
        const Vec4 y = hamiltonian_vf(fields[n], p, k);
        const TwoFormMatrix f = build_form(kDegenerateForms[n], p, k);
        o.value[n] = f(y, gamma);
        o.scale[n] = y.norm() * f.magnitude() * gamma.norm();
    }
    return o;
}

// ---------------------------------------------------------------------------
// printed coefficient tables

enum class PrintedTable { alpha, beta, alpha_m_k1, alpha_m_k, beta_m };

inline std::string to_string(PrintedTable t) {
    switch (t) {
        case PrintedTable::alpha: return "alpha";
        case PrintedTable::beta: return "beta";
        case PrintedTable::alpha_m_k1: return "alpha_M_k1";
        case PrintedTable::alpha_m_k: return "alpha_M_k";
        case PrintedTable::beta_m: return "beta_M";
    }
    return "?";
}

inline constexpr std::array<PrintedTable, 5> kPrintedTables{PrintedTable::alpha, PrintedTable::beta,
                                                            PrintedTable::alpha_m_k1, PrintedTable::alpha_m_k,
                                                            PrintedTable::beta_m};

struct TableComparison {
    PrintedTable table = PrintedTable::alpha;
    printed::Coefficients printed{};
    printed::Coefficients computed{};
};

/// Printed coefficients (with their overall prefactors) next to the matching
/// entries of the computed form. The Omega_M1 table is split into its
/// k1-only part, compared with the form at (k1, 0, 0), and the k2/k3 part,
/// compared with the difference.
inline TableComparison printed_tables(PrintedTable which, const PhasePoint& p, const ModelParams& k) {
    validate(p);
    TableComparison t;
    t.table = which;
    const double r2 = radius2(p);
    const double pre = 2.0 / (r2 * r2);
    switch (which) {
        case PrintedTable::alpha:
            t.printed = printed::omega1_alpha(p, k);
            t.computed = coefficients_of(build_form(FormKind::Omega1, p, k).m);
            break;
        case PrintedTable::beta:
            t.printed = printed::omega2_beta(p, k);
            t.computed = coefficients_of(build_form(FormKind::Omega2, p, k).m);
            break;
        case PrintedTable::alpha_m_k1: {
            t.printed = printed::omegaM1_alpha_k1(p, k);
            for (double& x : t.printed) x *= pre;
            ModelParams k1_only = k.kepler();
            t.computed = coefficients_of(build_form(FormKind::OmegaM1, p, k1_only).m);
            break;
        }
        case PrintedTable::alpha_m_k: {
            t.printed = printed::omegaM1_alpha_k(p, k);
            for (double& x : t.printed) x *= pre;
            const Mat4 diff = build_form(FormKind::OmegaM1, p, k).m - build_form(FormKind::OmegaM1, p, k.kepler()).m;
            t.computed = coefficients_of(diff);
            break;
        }
        case PrintedTable::beta_m:
            t.printed = printed::omegaM2_beta(p, k);
            t.computed = coefficients_of(build_form(FormKind::OmegaM2, p, k).m);
            break;
    }
    return t;
}

struct TableEntryStatus {
    std::string name;
    FactorFit::Result fit;
    PrintedStatus status = PrintedStatus::mismatch;
};

/// Fits printed = c * computed per coefficient over many points.
inline std::array<TableEntryStatus, 6> printed_table_inventory(PrintedTable which, const std::vector<PhasePoint>& points,
                                                               const ModelParams& k, double tol = 1e-9) {
    std::array<FactorFit, 6> fits;
    for (const auto& p : points) {
        const TableComparison t = printed_tables(which, p, k);
        for (std::size_t n = 0; n < fits.size(); ++n) {
            fits[n].add(t.printed[n], t.computed[n], std::max(std::abs(t.printed[n]), std::abs(t.computed[n])));
        }
    }
    std::array<TableEntryStatus, 6> out;
    for (std::size_t n = 0; n < fits.size(); ++n) {
        out[n].name = std::string(printed::kPairNames[n]);
        out[n].fit = fits[n].finish();
        out[n].status = classify(out[n].fit, tol);
    }
    return out;
}

}  // namespace kqbh
