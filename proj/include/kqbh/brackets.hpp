#pragma once

// Poisson brackets, Hamiltonian vector fields and Lie brackets.
//
// Conventions (basis a, b, p_a, p_b):
//   {f, g} = f_a g_pa - f_pa g_a + f_b g_pb - f_pb g_b
//   X_f    = (f_pa, f_pb, -f_a, -f_b),  so that i(X_f) w0 = df
//   [X, Y] = (DY) X - (DX) Y
// Complex functions are handled by extending everything bilinearly.

#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <type_traits>
#include <vector>

#include "kqbh/autodiff.hpp"
#include "kqbh/fit.hpp"
#include "kqbh/observables.hpp"
#include "kqbh/printed.hpp"

namespace kqbh {

using VectorFieldValue = CVec4;

namespace detail {

template <class V>
auto bracket_of_gradients(const V& gf, const V& gg) {
    return gf[0] * gg[2] - gf[2] * gg[0] + gf[1] * gg[3] - gf[3] * gg[1];
}

/// X_f = S grad f.
inline Mat4 symplectic_rotation() {
    Mat4 s = Mat4::Zero();
    s(0, 2) = 1.0;
    s(1, 3) = 1.0;
    s(2, 0) = -1.0;
    s(3, 1) = -1.0;
    return s;
}

template <class R>
constexpr bool is_complex_result = std::is_same_v<std::decay_t<R>, Cx<Dual1>> ||
                                   std::is_same_v<std::decay_t<R>, Cx<Dual2>>;

inline CVec4 complex_gradient(const Cx<Dual1>& z) { return ComplexObservable(z).grad; }
inline CVec4 complex_gradient(const Dual1& x) { return x.g.cast<std::complex<double>>(); }

}  // namespace detail

/// Gradient-level bracket, usable when the gradients are already known.
inline double poisson(const Vec4& gf, const Vec4& gg) { return detail::bracket_of_gradients(gf, gg); }
inline std::complex<double> poisson(const CVec4& gf, const CVec4& gg) {
    return detail::bracket_of_gradients(gf, gg);
}

/// {f, g} for scalar fields. Real if both fields are real, complex otherwise.
template <class F, class G>
auto poisson(F&& f, G&& g, const PhasePoint& p, const ModelParams& k) {
    const auto df = eval_grad(f, p, k);
    const auto dg = eval_grad(g, p, k);
    if constexpr (!detail::is_complex_result<decltype(df)> && !detail::is_complex_result<decltype(dg)>) {
        return poisson(df.g, dg.g);
    } else {
        return poisson(detail::complex_gradient(df), detail::complex_gradient(dg));
    }
}

inline Vec4 hamiltonian_vf(const Vec4& grad) { return detail::symplectic_rotation() * grad; }
inline CVec4 hamiltonian_vf(const CVec4& grad) {
    return detail::symplectic_rotation().cast<std::complex<double>>() * grad;
}

/// X_f at p. Vec4 for real f, CVec4 for complex f.
template <class F>
auto hamiltonian_vf(F&& f, const PhasePoint& p, const ModelParams& k) {
    const auto df = eval_grad(f, p, k);
    if constexpr (detail::is_complex_result<decltype(df)>) {
        return hamiltonian_vf(detail::complex_gradient(df));
    } else {
        return hamiltonian_vf(df.g);
    }
}

// ---------------------------------------------------------------------------
// first-order jets of vector fields

/// Value and Jacobian (jacobian(i, j) = d X_i / d z_j) of a vector field.
struct FieldJet {
    CVec4 value = CVec4::Zero();
    CMat4 jacobian = CMat4::Zero();

    FieldJet& operator+=(const FieldJet& o) {
        value += o.value;
        jacobian += o.jacobian;
        return *this;
    }
    friend FieldJet operator+(FieldJet x, const FieldJet& y) { return x += y; }
    friend FieldJet operator-(FieldJet x, const FieldJet& y) {
        x.value -= y.value;
        x.jacobian -= y.jacobian;
        return x;
    }
    friend FieldJet operator*(std::complex<double> c, FieldJet x) {
        x.value *= c;
        x.jacobian *= c;
        return x;
    }
};

inline FieldJet conj(const FieldJet& x) { return {x.value.conjugate(), x.jacobian.conjugate()}; }

/// f X as a jet: D(f X) = f DX + X (grad f)^T.
inline FieldJet multiply(const ComplexObservable& f, const FieldJet& x) {
    return {f.value * x.value, f.value * x.jacobian + x.value * f.grad.transpose()};
}

inline ComplexObservable conj(const ComplexObservable& f) {
    ComplexObservable c;
    c.value = std::conj(f.value);
    c.grad = f.grad.conjugate();
    return c;
}

/// Jet of the Hamiltonian vector field of a (real or complex) scalar field.
template <class F>
FieldJet hamiltonian_jet(F&& f, const PhasePoint& p, const ModelParams& k) {
    const auto h = eval_hess(f, p, k);
    const CMat4 s = detail::symplectic_rotation().cast<std::complex<double>>();
    FieldJet jet;
    if constexpr (std::is_same_v<std::decay_t<decltype(h)>, Cx<Dual2>>) {
        const std::complex<double> i(0.0, 1.0);
        const CVec4 g = h.re.g.template cast<std::complex<double>>() + i * h.im.g.template cast<std::complex<double>>();
        const CMat4 hs = h.re.h.template cast<std::complex<double>>() + i * h.im.h.template cast<std::complex<double>>();
        jet.value = s * g;
        jet.jacobian = s * hs;
    } else {
        jet.value = s * h.g.template cast<std::complex<double>>();
        jet.jacobian = s * h.h.template cast<std::complex<double>>();
    }
    return jet;
}

/// Jet of a component field f(z, k) -> std::array<T, 4>.
template <class F>
FieldJet component_jet(F&& f, const PhasePoint& p, const ModelParams& k) {
    validate(p);
    const auto v = f(seed<Dual1>(p), k);
    FieldJet jet;
    for (int i = 0; i < kDim; ++i) {
        jet.value[i] = v[i].v;
        jet.jacobian.row(i) = v[i].g.transpose().template cast<std::complex<double>>();
    }
    return jet;
}

inline CVec4 lie_bracket(const FieldJet& x, const FieldJet& y) {
    return y.jacobian * x.value - x.jacobian * y.value;
}

// Named jets used repeatedly.

inline FieldJet dynamics_jet(const PhasePoint& p, const ModelParams& k) {
    return hamiltonian_jet([](const auto& z, const ModelParams& kk) { return hamiltonian(z, kk); }, p, k);
}

inline FieldJet lambda_jet(const PhasePoint& p, const ModelParams& k) {
    return hamiltonian_jet([](const auto& z, const ModelParams& kk) { return lambda_factor(z, kk); }, p, k);
}

inline FieldJet jet_YA(const PhasePoint& p, const ModelParams& k) {
    return hamiltonian_jet([](const auto& z, const ModelParams& kk) { return func_A(z, kk); }, p, k);
}

inline FieldJet jet_YB(const PhasePoint& p, const ModelParams& k) {
    return hamiltonian_jet([](const auto& z, const ModelParams& kk) { return func_B(z, kk); }, p, k);
}

/// Y = B* Y_A, one of the two terms of the Hamiltonian field of J34.
inline FieldJet jet_partial_symmetry(const PhasePoint& p, const ModelParams& k) {
    return multiply(conj(observable_B(p, k)), jet_YA(p, k));
}

// ---------------------------------------------------------------------------
// scaling relations {F, H} = c i lambda F

struct ScalingEntry {
    std::string name;
    std::complex<double> bracket;   ///< {F, H}
    std::complex<double> expected;  ///< c_expected i lambda F
    double expected_factor = 0.0;
    double residual = 0.0;          ///< relative to 1 + max(|{F,H}|, |expected|)
};

struct ScalingCheck {
    std::array<ScalingEntry, 4> entries;
    double lambda = 0.0;
    double max_residual() const {
        double m = 0.0;
        for (const auto& e : entries) m = std::max(m, e.residual);
        return m;
    }
};

inline ScalingCheck scaling_check(const PhasePoint& p, const ModelParams& k) {
    const std::complex<double> i(0.0, 1.0);
    const Vec4 gh = eval_grad([](const auto& z, const ModelParams& kk) { return hamiltonian(z, kk); }, p, k).g;
    const CVec4 gH = gh.cast<std::complex<double>>();
    const double lam = lambda_factor(p, k);

    ScalingCheck out;
    out.lambda = lam;
    const std::array<std::pair<const char*, ComplexObservable>, 4> fns{{{"A", observable_A(p, k)},
                                                                         {"B", observable_B(p, k)},
                                                                         {"Ma", observable_Ma(p, k)},
                                                                         {"Mb", observable_Mb(p, k)}}};
    const std::array<double, 4> factors{2.0, 2.0, 1.0, 1.0};
    for (std::size_t n = 0; n < fns.size(); ++n) {
        ScalingEntry& e = out.entries[n];
        e.name = fns[n].first;
        e.bracket = poisson(fns[n].second.grad, gH);
        e.expected_factor = factors[n];
        e.expected = factors[n] * i * lam * fns[n].second.value;
        e.residual = std::abs(e.bracket - e.expected) / (1.0 + std::max(std::abs(e.bracket), std::abs(e.expected)));
    }
    return out;
}

/// Adds the bracket {F, H} against i lambda F for each function to four fits.
inline void accumulate_scaling_factors(const PhasePoint& p, const ModelParams& k, std::array<FactorFit, 4>& fits,
                                       double min_abs_lambda = 1e-10) {
    const ScalingCheck c = scaling_check(p, k);
    if (std::abs(c.lambda) <= min_abs_lambda) return;
    for (std::size_t n = 0; n < c.entries.size(); ++n) {
        const auto& e = c.entries[n];
        const std::complex<double> unit = e.expected / e.expected_factor;
        fits[n].add(e.bracket, unit, std::abs(e.bracket));
    }
}

// ---------------------------------------------------------------------------
// printed vector fields against autodiff

struct PrintedFieldCheck {
    std::string name;
    CVec4 printed = CVec4::Zero();
    CVec4 computed = CVec4::Zero();
    double difference = 0.0;  ///< max-norm of printed - computed
    double scale = 0.0;       ///< max-norm of computed

    double relative() const { return difference / (1.0 + scale); }
};

inline const std::array<std::string, 4>& printed_field_names() {
    static const std::array<std::string, 4> names{"Y_A", "Y_B", "Z_a", "Z_b"};
    return names;
}

inline PrintedFieldCheck printed_vf(const std::string& name, const PhasePoint& p, const ModelParams& k) {
    validate(p);
    PrintedFieldCheck c;
    c.name = name;
    if (name == "Y_A") {
        c.printed = printed::field_YA(p);
        c.computed = observable_A(p, k).grad;
    } else if (name == "Y_B") {
        c.printed = printed::field_YB(p, k);
        c.computed = observable_B(p, k).grad;
    } else if (name == "Z_a") {
        c.printed = printed::field_Za(p, k);
        c.computed = observable_Ma(p, k).grad;
    } else if (name == "Z_b") {
        c.printed = printed::field_Zb(p, k);
        c.computed = observable_Mb(p, k).grad;
    } else {
        throw ConfigError("unknown printed vector field '" + name + "'");
    }
    c.computed = hamiltonian_vf(c.computed);
    c.difference = (c.printed - c.computed).cwiseAbs().maxCoeff();
    c.scale = c.computed.cwiseAbs().maxCoeff();
    return c;
}

/// |W_expanded - W_factored|.
inline double w_form_difference(const PhasePoint& p) {
    validate(p);
    return std::abs(printed::w_expanded(p) - printed::w_factored(p));
}

// ---------------------------------------------------------------------------
// obstruction and linearity checks

struct ObstructionSample {
    CVec4 commutator = CVec4::Zero();  ///< [Gamma, B* Y_A]
    CVec4 direction = CVec4::Zero();   ///< i J34 X_lambda
    double scale = 0.0;
};

inline ObstructionSample obstruction_sample(const PhasePoint& p, const ModelParams& k) {
    const std::complex<double> i(0.0, 1.0);
    ObstructionSample s;
    s.commutator = lie_bracket(dynamics_jet(p, k), jet_partial_symmetry(p, k));
    s.direction = i * value_J34(p, k) * lambda_jet(p, k).value;
    s.scale = std::max(s.commutator.cwiseAbs().maxCoeff(), s.direction.cwiseAbs().maxCoeff());
    return s;
}

inline void add_to_fit(FactorFit& fit, const CVec4& lhs, const CVec4& rhs, double scale) {
    std::array<double, 8> l{};
    std::array<double, 8> r{};
    for (int n = 0; n < kDim; ++n) {
        l[2 * n] = lhs[n].real();
        l[2 * n + 1] = lhs[n].imag();
        r[2 * n] = rhs[n].real();
        r[2 * n + 1] = rhs[n].imag();
    }
    fit.add(l, r, scale);
}

/// Fits c in [Gamma, B* Y_A] = c i J34 X_lambda over the given points.
inline FactorFit::Result obstruction_fit(const std::vector<PhasePoint>& points, const ModelParams& k) {
    FactorFit fit;
    for (const auto& p : points) {
        const ObstructionSample s = obstruction_sample(p, k);
        add_to_fit(fit, s.commutator, s.direction, s.scale);
    }
    return fit.finish();
}

/// Relative residual of B* Y_A + A Y_B* = X_{J34}.
inline double y34_linearity_residual(const PhasePoint& p, const ModelParams& k) {
    const CVec4 ya = hamiltonian_vf(observable_A(p, k).grad);
    const CVec4 yb = hamiltonian_vf(observable_B(p, k).grad);
    const CVec4 lhs = std::conj(value_B(p, k)) * ya + value_A(p) * yb.conjugate();
    const CVec4 rhs =
        hamiltonian_vf([](const auto& z, const ModelParams& kk) { return invariant_J34(z, kk); }, p, k);
    return (lhs - rhs).cwiseAbs().maxCoeff() / (1.0 + rhs.cwiseAbs().maxCoeff());
}

/// ||[Gamma, B* Y_A]||; nonzero means B* Y_A is not a symmetry.
inline double symmetry_defect(const PhasePoint& p, const ModelParams& k) {
    return lie_bracket(dynamics_jet(p, k), jet_partial_symmetry(p, k)).cwiseAbs().maxCoeff();
}

}  // namespace kqbh
