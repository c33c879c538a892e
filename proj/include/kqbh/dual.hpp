#pragma once

/**
 * @file dual.hpp
 * @brief Forward-mode automatic differentiation over the 4-dimensional phase space.
 *
 * Dual1 carries a value and its gradient; Dual2 additionally carries the
 * (symmetric) Hessian. Both are closed under +, -, *, / and the unary
 * primitives sqrt/pow/inverse, so every observable written as a template
 * over its scalar type can be evaluated with exact first and second partials.
 *
 * Unary primitives are implemented through a single chain rule:
 *   g  = phi'(x) * x.g
 *   H  = phi'(x) * x.H + phi''(x) * x.g x.g^T
 */

#include <cmath>
#include <complex>
#include <concepts>
#include <string>

#include <Eigen/Dense>

#include "kqbh/errors.hpp"

namespace kqbh {

inline constexpr int kDim = 4;

using Vec4 = Eigen::Matrix<double, kDim, 1>;
using Mat4 = Eigen::Matrix<double, kDim, kDim>;
using CVec4 = Eigen::Matrix<std::complex<double>, kDim, 1>;
using CMat4 = Eigen::Matrix<std::complex<double>, kDim, kDim>;

struct Dual1 {
    double v = 0.0;
    Vec4 g = Vec4::Zero();

    Dual1() = default;
    Dual1(double value) : v(value) {}  // NOLINT: constants promote implicitly
    Dual1(double value, const Vec4& grad) : v(value), g(grad) {}

    static Dual1 variable(double value, int index) {
        Dual1 d(value);
        d.g[index] = 1.0;
        return d;
    }

    Dual1& operator+=(const Dual1& o) { v += o.v; g += o.g; return *this; }
    Dual1& operator-=(const Dual1& o) { v -= o.v; g -= o.g; return *this; }
    Dual1& operator*=(const Dual1& o) {
        g = g * o.v + v * o.g;
        v *= o.v;
        return *this;
    }
};

struct Dual2 {
    double v = 0.0;
    Vec4 g = Vec4::Zero();
    Mat4 h = Mat4::Zero();

    Dual2() = default;
    Dual2(double value) : v(value) {}  // NOLINT
    Dual2(double value, const Vec4& grad, const Mat4& hess) : v(value), g(grad), h(hess) {}

    static Dual2 variable(double value, int index) {
        Dual2 d(value);
        d.g[index] = 1.0;
        return d;
    }

    Dual2& operator+=(const Dual2& o) { v += o.v; g += o.g; h += o.h; return *this; }
    Dual2& operator-=(const Dual2& o) { v -= o.v; g -= o.g; h -= o.h; return *this; }
    Dual2& operator*=(const Dual2& o) {
        h = h * o.v + g * o.g.transpose() + o.g * g.transpose() + v * o.h;
        g = g * o.v + v * o.g;
        v *= o.v;
        return *this;
    }
};

// ---------------------------------------------------------------------------
// value access, uniform over double / Dual1 / Dual2

inline double value_of(double x) { return x; }
inline double value_of(const Dual1& x) { return x.v; }
inline double value_of(const Dual2& x) { return x.v; }

template <class T>
concept PhaseScalar = std::same_as<T, double> || std::same_as<T, Dual1> || std::same_as<T, Dual2>;

// ---------------------------------------------------------------------------
// Dual1 arithmetic

inline Dual1 operator+(Dual1 a, const Dual1& b) { return a += b; }
inline Dual1 operator-(Dual1 a, const Dual1& b) { return a -= b; }
inline Dual1 operator*(Dual1 a, const Dual1& b) { return a *= b; }
inline Dual1 operator-(const Dual1& a) { return {-a.v, -a.g}; }
inline Dual1 operator+(Dual1 a, double b) { a.v += b; return a; }
inline Dual1 operator+(double b, Dual1 a) { a.v += b; return a; }
inline Dual1 operator-(Dual1 a, double b) { a.v -= b; return a; }
inline Dual1 operator-(double b, const Dual1& a) { return {b - a.v, -a.g}; }
inline Dual1 operator*(const Dual1& a, double b) { return {a.v * b, a.g * b}; }
inline Dual1 operator*(double b, const Dual1& a) { return {a.v * b, a.g * b}; }

inline Dual1 chain(const Dual1& x, double f, double df, double /*d2f*/) { return {f, df * x.g}; }

// ---------------------------------------------------------------------------
// Dual2 arithmetic

inline Dual2 operator+(Dual2 a, const Dual2& b) { return a += b; }
inline Dual2 operator-(Dual2 a, const Dual2& b) { return a -= b; }
inline Dual2 operator*(Dual2 a, const Dual2& b) { return a *= b; }
inline Dual2 operator-(const Dual2& a) { return {-a.v, -a.g, -a.h}; }
inline Dual2 operator+(Dual2 a, double b) { a.v += b; return a; }
inline Dual2 operator+(double b, Dual2 a) { a.v += b; return a; }
inline Dual2 operator-(Dual2 a, double b) { a.v -= b; return a; }
inline Dual2 operator-(double b, const Dual2& a) { return {b - a.v, -a.g, -a.h}; }
inline Dual2 operator*(const Dual2& a, double b) { return {a.v * b, a.g * b, a.h * b}; }
inline Dual2 operator*(double b, const Dual2& a) { return {a.v * b, a.g * b, a.h * b}; }

inline Dual2 chain(const Dual2& x, double f, double df, double d2f) {
    return {f, df * x.g, df * x.h + d2f * (x.g * x.g.transpose())};
}

// ---------------------------------------------------------------------------
// primitives shared by both orders

template <class T>
    requires(!std::same_as<T, double> && PhaseScalar<T>)
T inverse(const T& x) {
    if (x.v == 0.0) throw EvaluationError("division by zero in dual inverse");
    const double r = 1.0 / x.v;
    return chain(x, r, -r * r, 2.0 * r * r * r);
}

inline double inverse(double x) {
    if (x == 0.0) throw EvaluationError("division by zero in inverse");
    return 1.0 / x;
}

template <class T>
    requires(!std::same_as<T, double> && PhaseScalar<T>)
T operator/(const T& a, const T& b) {
    return a * inverse(b);
}

template <class T>
    requires(!std::same_as<T, double> && PhaseScalar<T>)
T operator/(const T& a, double b) {
    if (b == 0.0) throw EvaluationError("division by zero in dual operator/");
    return a * (1.0 / b);
}

template <class T>
    requires(!std::same_as<T, double> && PhaseScalar<T>)
T operator/(double a, const T& b) {
    return a * inverse(b);
}

template <class T>
    requires(!std::same_as<T, double> && PhaseScalar<T>)
T sqrt(const T& x) {
    if (x.v < 0.0) throw EvaluationError("sqrt of negative argument " + std::to_string(x.v));
    if (x.v == 0.0) throw EvaluationError("sqrt is not differentiable at zero");
    const double s = std::sqrt(x.v);
    return chain(x, s, 0.5 / s, -0.25 / (s * x.v));
}

inline double checked_sqrt(double x) {
    if (x < 0.0) throw EvaluationError("sqrt of negative argument " + std::to_string(x));
    return std::sqrt(x);
}

template <class T>
    requires(!std::same_as<T, double> && PhaseScalar<T>)
T checked_sqrt(const T& x) {
    return sqrt(x);
}

/// Integer power by repeated squaring; negative exponents go through inverse().
template <PhaseScalar T>
T ipow(const T& x, int n) {
    if (n < 0) return inverse(ipow(x, -n));
    T result(1.0);
    T base = x;
    while (n > 0) {
        if (n & 1) result = result * base;
        n >>= 1;
        if (n > 0) base = base * base;
    }
    return result;
}

/// Real power x^p for x > 0.
template <class T>
    requires(!std::same_as<T, double> && PhaseScalar<T>)
T pow(const T& x, double p) {
    if (x.v <= 0.0) throw EvaluationError("pow of non-positive base " + std::to_string(x.v));
    const double f = std::pow(x.v, p);
    return chain(x, f, p * f / x.v, p * (p - 1.0) * f / (x.v * x.v));
}

inline double pow(double x, double p) {
    if (x <= 0.0) throw EvaluationError("pow of non-positive base " + std::to_string(x));
    return std::pow(x, p);
}

template <PhaseScalar T>
T square(const T& x) {
    return x * x;
}

}  // namespace kqbh
