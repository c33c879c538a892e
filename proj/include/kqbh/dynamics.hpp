#pragma once

// Time evolution under H: the Hamiltonian field Gamma, an implicit midpoint
// integrator (symplectic, time-symmetric) and classical RK4 as a
// non-symplectic reference, plus drift measurement of the first integrals.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "kqbh/autodiff.hpp"
#include "kqbh/brackets.hpp"
#include "kqbh/errors.hpp"
#include "kqbh/observables.hpp"

namespace kqbh {

/// Gamma = (H_pa, H_pb, -H_a, -H_b).
inline Vec4 derivative(const PhasePoint& p, const ModelParams& k) {
    const Dual1 h = eval_grad([](const auto& z, const ModelParams& kk) { return hamiltonian(z, kk); }, p, k);
    return hamiltonian_vf(h.g);
}

/// D Gamma = S Hess(H).
inline Mat4 derivative_jacobian(const PhasePoint& p, const ModelParams& k) {
    const Dual2 h = eval_hess([](const auto& z, const ModelParams& kk) { return hamiltonian(z, kk); }, p, k);
    return detail::symplectic_rotation() * h.h;
}

struct MidpointOptions {
    double tolerance = 1e-13;  ///< absolute, max-norm of the step residual
    int max_iterations = 25;
};

/// z' = z + h Gamma((z + z')/2), Newton iteration from the explicit Euler
/// predictor. Negative h is allowed (backward step).
inline PhasePoint step_midpoint(const PhasePoint& p, const ModelParams& k, double h, const MidpointOptions& opt = {}) {
    const Vec4 z = to_vec(p);
    Vec4 w = z + h * derivative(p, k);
    double res = 0.0;
    for (int it = 0; it < opt.max_iterations; ++it) {
        const PhasePoint mid = from_vec(0.5 * (z + w));
        const Vec4 f = w - z - h * derivative(mid, k);
        res = f.cwiseAbs().maxCoeff();
        if (res < opt.tolerance) return from_vec(w);
        const Mat4 jac = Mat4::Identity() - 0.5 * h * derivative_jacobian(mid, k);
        const Vec4 dw = jac.partialPivLu().solve(f);
        w -= dw;
        if (!w.allFinite()) break;
        if (dw.cwiseAbs().maxCoeff() < 0.1 * opt.tolerance) {
            const Vec4 g = w - z - h * derivative(from_vec(0.5 * (z + w)), k);
            res = g.cwiseAbs().maxCoeff();
            if (res < opt.tolerance) return from_vec(w);
        }
    }
    throw StepFailure("implicit midpoint: Newton iteration did not converge", res);
}

inline PhasePoint step_rk4(const PhasePoint& p, const ModelParams& k, double h) {
    const Vec4 z = to_vec(p);
    const Vec4 k1 = derivative(p, k);
    const Vec4 k2 = derivative(from_vec(z + 0.5 * h * k1), k);
    const Vec4 k3 = derivative(from_vec(z + 0.5 * h * k2), k);
    const Vec4 k4 = derivative(from_vec(z + h * k3), k);
    return from_vec(z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

enum class Integrator { midpoint, rk4 };

inline std::string to_string(Integrator m) { return m == Integrator::midpoint ? "midpoint" : "rk4"; }

inline Integrator parse_integrator(const std::string& s) {
    if (s == "midpoint") return Integrator::midpoint;
    if (s == "rk4") return Integrator::rk4;
    throw ConfigError("unknown integrator '" + s + "' (expected midpoint or rk4)");
}

inline PhasePoint step(Integrator m, const PhasePoint& p, const ModelParams& k, double h) {
    return m == Integrator::midpoint ? step_midpoint(p, k, h) : step_rk4(p, k, h);
}

enum class TrajectoryStatus { complete, truncated };

inline std::string to_string(TrajectoryStatus s) { return s == TrajectoryStatus::complete ? "complete" : "truncated"; }

struct Trajectory {
    std::vector<double> times;
    std::vector<PhasePoint> states;
    ModelParams params;
    Integrator integrator = Integrator::midpoint;
    double step_size = 0.0;
    TrajectoryStatus status = TrajectoryStatus::complete;
    std::string message;  ///< reason for truncation
    int halvings = 0;     ///< steps that needed a reduced step size

    std::size_t size() const { return states.size(); }
};

struct IntegrateOptions {
    int max_halvings = 6;
    double singular_radius2 = 100.0 * kOriginEpsilon;
};

namespace detail {

/// Advances by h, splitting into 2^n substeps while the midpoint solve fails.
inline PhasePoint advance(Integrator m, const PhasePoint& p, const ModelParams& k, double h, int max_halvings,
                          int& halvings) {
    for (int level = 0;; ++level) {
        try {
            const int n = 1 << level;
            PhasePoint z = p;
            for (int i = 0; i < n; ++i) z = step(m, z, k, h / n);
            if (level > 0) ++halvings;
            return z;
        } catch (const StepFailure&) {
            if (level >= max_halvings) throw;
        }
    }
}

}  // namespace detail

/// Fixed-step propagation over [0, t_max]. Steps are counted, not summed,
/// so t_i = i h exactly up to rounding of the product.
inline Trajectory integrate(const PhasePoint& p0, const ModelParams& k, double t_max, double h, Integrator method,
                            const IntegrateOptions& opt = {}) {
    validate(p0);
    k.validate();
    if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("step size must be positive and finite");
    if (!(t_max >= 0.0) || !std::isfinite(t_max)) throw ConfigError("t_max must be non-negative and finite");

    Trajectory tr;
    tr.params = k;
    tr.integrator = method;
    tr.step_size = h;
    const auto n = static_cast<std::size_t>(std::llround(t_max / h));
    tr.times.reserve(n + 1);
    tr.states.reserve(n + 1);
    tr.times.push_back(0.0);
    tr.states.push_back(p0);

    PhasePoint z = p0;
    for (std::size_t i = 1; i <= n; ++i) {
        try {
            z = detail::advance(method, z, k, h, opt.max_halvings, tr.halvings);
        } catch (const StepFailure& e) {
            tr.status = TrajectoryStatus::truncated;
            tr.message = std::string(e.what()) + " at t = " + std::to_string(tr.times.back());
            break;
        } catch (const DomainError& e) {
            tr.status = TrajectoryStatus::truncated;
            tr.message = std::string(e.what()) + " at t = " + std::to_string(tr.times.back());
            break;
        }
        if (!std::isfinite(z.a) || !std::isfinite(z.b) || !std::isfinite(z.pa) || !std::isfinite(z.pb) ||
            z.a * z.a + z.b * z.b < opt.singular_radius2) {
            tr.status = TrajectoryStatus::truncated;
            tr.message = "orbit reached the collision singularity at t = " + std::to_string(static_cast<double>(i) * h);
            break;
        }
        tr.times.push_back(static_cast<double>(i) * h);
        tr.states.push_back(z);
    }
    return tr;
}

// ---------------------------------------------------------------------------
// drift

inline constexpr std::array<const char*, 6> kDriftNames{"H", "J3", "J4", "K3", "K4", "I2"};

inline std::array<double, 6> drift_values(const PhasePoint& p, const ModelParams& k) {
    const InvariantSet s = invariants(p, k);
    return {s.H, s.J3, s.J4, s.K3, s.K4, s.I2};
}

struct DriftEntry {
    std::string name;
    double initial = 0.0;
    double max_abs = 0.0;
    double rms = 0.0;
    /// max_abs / |initial|; falls back to max_abs when |initial| < 1e-12.
    double relative = 0.0;
};

struct DriftReport {
    std::array<DriftEntry, 6> entries;
    std::size_t states = 0;

    double max_relative() const {
        double m = 0.0;
        for (const auto& e : entries) m = std::max(m, e.relative);
        return m;
    }
};

inline constexpr double kRelativeDriftFloor = 1e-12;

inline DriftReport drift(const Trajectory& tr) {
    DriftReport r;
    r.states = tr.size();
    if (tr.states.empty()) return r;
    const auto init = drift_values(tr.states.front(), tr.params);
    std::array<double, 6> sq{};
    for (const auto& s : tr.states) {
        const auto v = drift_values(s, tr.params);
        for (std::size_t n = 0; n < v.size(); ++n) {
            const double d = std::abs(v[n] - init[n]);
            r.entries[n].max_abs = std::max(r.entries[n].max_abs, d);
            sq[n] += d * d;
        }
    }
    for (std::size_t n = 0; n < init.size(); ++n) {
        DriftEntry& e = r.entries[n];
        e.name = kDriftNames[n];
        e.initial = init[n];
        e.rms = std::sqrt(sq[n] / static_cast<double>(tr.size()));
        e.relative = std::abs(init[n]) < kRelativeDriftFloor ? e.max_abs : e.max_abs / std::abs(init[n]);
    }
    return r;
}

/// Observed order of the drift under step halving, per invariant:
/// log2(drift(h) / drift(h/2)).
struct DriftConvergence {
    DriftReport coarse;
    DriftReport fine;
    std::array<double, 6> order{};

    bool within(double lo, double hi) const {
        for (double o : order) {
            if (!(o >= lo && o <= hi)) return false;
        }
        return true;
    }
};

inline DriftConvergence drift_convergence(const PhasePoint& p0, const ModelParams& k, double t_max, double h,
                                          Integrator method = Integrator::midpoint) {
    DriftConvergence c;
    c.coarse = drift(integrate(p0, k, t_max, h, method));
    c.fine = drift(integrate(p0, k, t_max, 0.5 * h, method));
    for (std::size_t n = 0; n < c.order.size(); ++n) {
        c.order[n] = std::log2(c.coarse.entries[n].max_abs / c.fine.entries[n].max_abs);
    }
    return c;
}

}  // namespace kqbh
