#pragma once

// Complex numbers over an arbitrary phase-space scalar. std::complex<T> is
// only specified for floating-point T, so dual-valued complex functions use
// this pair type instead.

#include <complex>

#include "kqbh/dual.hpp"

namespace kqbh {

template <PhaseScalar T>
struct Cx {
    T re{};
    T im{};

    Cx() = default;
    Cx(T r) : re(std::move(r)), im(0.0) {}  // NOLINT
    Cx(T r, T i) : re(std::move(r)), im(std::move(i)) {}
};

template <PhaseScalar T>
Cx<T> operator+(const Cx<T>& x, const Cx<T>& y) { return {x.re + y.re, x.im + y.im}; }
template <PhaseScalar T>
Cx<T> operator-(const Cx<T>& x, const Cx<T>& y) { return {x.re - y.re, x.im - y.im}; }
template <PhaseScalar T>
Cx<T> operator-(const Cx<T>& x) { return {-x.re, -x.im}; }
template <PhaseScalar T>
Cx<T> operator*(const Cx<T>& x, const Cx<T>& y) {
    return {x.re * y.re - x.im * y.im, x.re * y.im + x.im * y.re};
}
template <PhaseScalar T>
Cx<T> operator*(const T& s, const Cx<T>& x) { return {s * x.re, s * x.im}; }
template <PhaseScalar T>
Cx<T> operator*(const Cx<T>& x, const T& s) { return {x.re * s, x.im * s}; }

template <PhaseScalar T>
Cx<T> conj(const Cx<T>& x) { return {x.re, -x.im}; }

/// |x|^2
template <PhaseScalar T>
T norm(const Cx<T>& x) { return x.re * x.re + x.im * x.im; }

inline std::complex<double> to_std(const Cx<double>& x) { return {x.re, x.im}; }

}  // namespace kqbh
