#pragma once

/**
 * @file phase_space.hpp
 * @brief Points of T*R^2 in the parabolic chart (a, b, p_a, p_b), the
 *        Cartesian chart, the coupling container and the random sampler.
 *
 * Chart convention: x = (a^2 - b^2)/2, y = a b, with the cotangent lift
 *   p_x = (a p_a - b p_b)/(a^2 + b^2),  p_y = (b p_a + a p_b)/(a^2 + b^2).
 * The map (a, b) -> (x, y) is a double cover; the chart used for Cartesian
 * round trips is the a > 0 sheet.
 */

#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include "kqbh/dual.hpp"
#include "kqbh/errors.hpp"

namespace kqbh {

inline constexpr double kOriginEpsilon = 1e-12;

/// Phase-space coordinates over any scalar type; basis order (a, b, p_a, p_b).
template <PhaseScalar T>
struct PhaseCoords {
    T a{};
    T b{};
    T pa{};
    T pb{};
};

using PhasePoint = PhaseCoords<double>;

inline Vec4 to_vec(const PhasePoint& p) { return {p.a, p.b, p.pa, p.pb}; }
inline PhasePoint from_vec(const Vec4& v) { return {v[0], v[1], v[2], v[3]}; }

inline std::string to_string(const PhasePoint& p) {
    std::ostringstream os;
    os.precision(17);
    os << "(a=" << p.a << ", b=" << p.b << ", p_a=" << p.pa << ", p_b=" << p.pb << ")";
    return os.str();
}

/// Throws DomainError unless all fields are finite and a^2 + b^2 > eps.
inline void validate(const PhasePoint& p, double eps_origin = kOriginEpsilon) {
    if (!std::isfinite(p.a) || !std::isfinite(p.b) || !std::isfinite(p.pa) || !std::isfinite(p.pb)) {
        throw DomainError("non-finite phase point " + to_string(p));
    }
    if (p.a * p.a + p.b * p.b <= eps_origin) {
        throw DomainError("phase point at the origin singularity " + to_string(p));
    }
}

struct CartesianPoint {
    double x = 0.0;
    double y = 0.0;
    double px = 0.0;
    double py = 0.0;
};

inline void validate(const CartesianPoint& c, double eps_origin = kOriginEpsilon) {
    if (!std::isfinite(c.x) || !std::isfinite(c.y) || !std::isfinite(c.px) || !std::isfinite(c.py)) {
        throw DomainError("non-finite Cartesian point");
    }
    if (std::hypot(c.x, c.y) <= eps_origin) throw DomainError("Cartesian point at the origin");
}

struct ModelParams {
    double k1 = 0.0;
    double k2 = 0.0;
    double k3 = 0.0;
    double tol_identity = 1e-9;
    double tol_fd = 1e-6;

    void validate() const {
        if (!std::isfinite(k1) || !std::isfinite(k2) || !std::isfinite(k3)) {
            throw ConfigError("couplings must be finite");
        }
        if (!(tol_identity > 0.0) || !(tol_fd > 0.0)) {
            throw ConfigError("tolerances must be strictly positive");
        }
    }

    /// Same tolerances, k2 = k3 = 0.
    ModelParams kepler() const {
        ModelParams m = *this;
        m.k2 = 0.0;
        m.k3 = 0.0;
        return m;
    }
};

// ---------------------------------------------------------------------------
// charts

namespace detail {

/// The chart formulas without the a > 0 restriction.
inline CartesianPoint chart_map(const PhasePoint& p) {
    const double r2 = p.a * p.a + p.b * p.b;
    return {0.5 * (p.a * p.a - p.b * p.b), p.a * p.b, (p.a * p.pa - p.b * p.pb) / r2,
            (p.b * p.pa + p.a * p.pb) / r2};
}

}  // namespace detail

/// The image of p under (a, b, p_a, p_b) -> -(a, b, p_a, p_b), which maps to
/// the same Cartesian point; used to bring orbit states back to the a > 0 sheet.
inline PhasePoint canonical_branch(const PhasePoint& p) {
    if (p.a > 0.0) return p;
    return {-p.a, -p.b, -p.pa, -p.pb};
}

inline CartesianPoint to_cartesian(const PhasePoint& p) {
    validate(p);
    if (!(p.a > 0.0)) throw DomainError("to_cartesian: chart requires a > 0, got " + to_string(p));
    return detail::chart_map(p);
}

/// Inverse chart onto the a > 0 sheet. Uses the better-conditioned square
/// root on each side of the y axis.
inline PhasePoint from_cartesian(const CartesianPoint& c) {
    validate(c);
    const double r = std::hypot(c.x, c.y);
    double a = 0.0;
    double b = 0.0;
    if (c.x >= 0.0) {
        a = std::sqrt(r + c.x);
        b = c.y / a;
    } else {
        const double babs = std::sqrt(r - c.x);
        a = std::abs(c.y) / babs;
        b = std::copysign(babs, c.y);
    }
    if (!(a > 0.0)) throw DomainError("from_cartesian: point on the cut y = 0, x < 0");
    return {a, b, a * c.px + b * c.py, -b * c.px + a * c.py};
}

// ---------------------------------------------------------------------------
// random sampling

/// Draws phase points with |a|, |b| in [0.2, 2] and momenta in [-2, 2].
class PointSampler {
public:
    struct Options {
        bool positive_a = false;  ///< restrict to the a > 0 chart sheet
        bool positive_b = false;
        double min_abs_j = 0.0;   ///< reject points with |a p_b - b p_a| below this
    };

    explicit PointSampler(std::uint64_t seed) : rng_(seed) {}
    PointSampler(std::uint64_t seed, Options opts) : rng_(seed), opts_(opts) {}

    PhasePoint next() {
        for (;;) {
            PhasePoint p{coordinate(opts_.positive_a), coordinate(opts_.positive_b), momentum(), momentum()};
            if (std::abs(p.a * p.pb - p.b * p.pa) >= opts_.min_abs_j) return p;
        }
    }

    /// Couplings uniform in [-1, 1]^3.
    ModelParams couplings() {
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        ModelParams k;
        k.k1 = u(rng_);
        k.k2 = u(rng_);
        k.k3 = u(rng_);
        return k;
    }

    std::mt19937_64& engine() { return rng_; }

private:
    double coordinate(bool positive) {
        std::uniform_real_distribution<double> mag(0.2, 2.0);
        const double m = mag(rng_);
        if (positive) return m;
        return std::bernoulli_distribution(0.5)(rng_) ? m : -m;
    }

    double momentum() { return std::uniform_real_distribution<double>(-2.0, 2.0)(rng_); }

    std::mt19937_64 rng_;
    Options opts_{};
};

}  // namespace kqbh
