#pragma once

// Seeding of phase points into dual numbers, gradient/Hessian evaluation of
// scalar fields, and type-erased field handles.
//
// A "scalar field" is any callable f(const PhaseCoords<T>&, const ModelParams&)
// returning T or Cx<T>, generic over T in {double, Dual1, Dual2}.

#include <complex>
#include <functional>
#include <string>
#include <utility>

#include "kqbh/complex.hpp"
#include "kqbh/dual.hpp"
#include "kqbh/phase_space.hpp"

namespace kqbh {

template <PhaseScalar T>
PhaseCoords<T> seed(const PhasePoint& p) {
    if constexpr (std::same_as<T, double>) {
        return p;
    } else {
        return {T::variable(p.a, 0), T::variable(p.b, 1), T::variable(p.pa, 2), T::variable(p.pb, 3)};
    }
}

template <class F>
auto eval_value(F&& f, const PhasePoint& p, const ModelParams& k) {
    validate(p);
    return std::forward<F>(f)(p, k);
}

/// f evaluated with exact first partials (Dual1 or Cx<Dual1>).
template <class F>
auto eval_grad(F&& f, const PhasePoint& p, const ModelParams& k) {
    validate(p);
    return std::forward<F>(f)(seed<Dual1>(p), k);
}

/// f evaluated with exact first and second partials (Dual2 or Cx<Dual2>).
template <class F>
auto eval_hess(F&& f, const PhasePoint& p, const ModelParams& k) {
    validate(p);
    return std::forward<F>(f)(seed<Dual2>(p), k);
}

/// Complex value with its complex gradient in the (a, b, p_a, p_b) basis.
struct ComplexObservable {
    std::complex<double> value;
    CVec4 grad = CVec4::Zero();

    ComplexObservable() = default;
    ComplexObservable(const Cx<Dual1>& z)  // NOLINT
        : value(z.re.v, z.im.v), grad(z.re.g.cast<std::complex<double>>() +
                                      std::complex<double>(0.0, 1.0) * z.im.g.cast<std::complex<double>>()) {}
    ComplexObservable(const Dual1& x) : value(x.v, 0.0), grad(x.g.cast<std::complex<double>>()) {}  // NOLINT

    double real() const { return value.real(); }
    double imag() const { return value.imag(); }
};

inline Vec4 real_part(const CVec4& v) { return v.real(); }
inline Vec4 imag_part(const CVec4& v) { return v.imag(); }

// ---------------------------------------------------------------------------
// type-erased real scalar fields

/// A named real field stored at the three evaluation orders.
struct RealField {
    std::string name;
    std::function<double(const PhaseCoords<double>&, const ModelParams&)> at0;
    std::function<Dual1(const PhaseCoords<Dual1>&, const ModelParams&)> at1;
    std::function<Dual2(const PhaseCoords<Dual2>&, const ModelParams&)> at2;

    template <PhaseScalar T>
    T operator()(const PhaseCoords<T>& z, const ModelParams& k) const {
        if constexpr (std::same_as<T, double>) {
            return at0(z, k);
        } else if constexpr (std::same_as<T, Dual1>) {
            return at1(z, k);
        } else {
            return at2(z, k);
        }
    }
};

template <class F>
RealField make_field(std::string name, F f) {
    return RealField{std::move(name),
                     [f](const PhaseCoords<double>& z, const ModelParams& k) { return f(z, k); },
                     [f](const PhaseCoords<Dual1>& z, const ModelParams& k) { return f(z, k); },
                     [f](const PhaseCoords<Dual2>& z, const ModelParams& k) { return f(z, k); }};
}

}  // namespace kqbh
