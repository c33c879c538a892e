#include <gtest/gtest.h>

#include <cmath>

#include "kqbh/dynamics.hpp"
#include "test_support.hpp"

using namespace kqbh;
using kqbh::testing::coupled;
using kqbh::testing::fd_gradient;
using kqbh::testing::kepler_unit;
using kqbh::testing::reference_point;

TEST(Derivative, ReferencePoint) {
    const Vec4 g = derivative(reference_point(), kepler_unit());
    EXPECT_LT((g - Vec4(0.0, 1.0, 3.0, 0.0)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Derivative, MatchesFiniteDifferenceOfH) {
    const PhasePoint p{0.7, -1.1, 0.4, 0.9};
    const Vec4 gh = fd_gradient([](const PhasePoint& q) { return hamiltonian(q, coupled()); }, p);
    const Vec4 expected(gh[2], gh[3], -gh[0], -gh[1]);
    EXPECT_LT((derivative(p, coupled()) - expected).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Derivative, JacobianMatchesFiniteDifferences) {
    const PhasePoint p{0.7, -1.1, 0.4, 0.9};
    const Mat4 jac = derivative_jacobian(p, coupled());
    const Vec4 z = to_vec(p);
    for (int c = 0; c < 4; ++c) {
        const double h = kqbh::testing::fd_step(z[c]);
        Vec4 up = z, dn = z;
        up[c] += h;
        dn[c] -= h;
        const Vec4 col = (derivative(from_vec(up), coupled()) - derivative(from_vec(dn), coupled())) / (2.0 * h);
        EXPECT_LT((jac.col(c) - col).cwiseAbs().maxCoeff(), 1e-7);
    }
}

TEST(Derivative, OriginThrows) { EXPECT_THROW(derivative(PhasePoint{0, 0, 1, 0}, coupled()), DomainError); }

TEST(Midpoint, IsTimeSymmetric) {
    PointSampler s(51);
    for (int n = 0; n < 50; ++n) {
        const PhasePoint p = s.next();
        const PhasePoint q = step_midpoint(step_midpoint(p, coupled(), 1e-2), coupled(), -1e-2);
        EXPECT_LT((to_vec(q) - to_vec(p)).cwiseAbs().maxCoeff(), 1e-11);
    }
}

TEST(Midpoint, ConsistentToSecondOrder) {
    const PhasePoint p{0.9, 0.5, -0.2, 0.6};
    double prev = 0.0;
    for (double h : {1e-2, 5e-3}) {
        const Vec4 d = to_vec(step_midpoint(p, coupled(), h)) - to_vec(p) - h * derivative(p, coupled());
        const double e = d.cwiseAbs().maxCoeff();
        if (prev > 0.0) EXPECT_NEAR(prev / e, 4.0, 0.2);
        prev = e;
    }
}

TEST(Midpoint, AgreesWithRk4ToThirdOrder) {
    const PhasePoint p{0.9, 0.5, -0.2, 0.6};
    double prev = 0.0;
    for (double h : {2e-2, 1e-2}) {
        const double e =
            (to_vec(step_midpoint(p, coupled(), h)) - to_vec(step_rk4(p, coupled(), h))).cwiseAbs().maxCoeff();
        if (prev > 0.0) EXPECT_NEAR(prev / e, 8.0, 0.8);
        prev = e;
    }
}

TEST(Rk4, LocalErrorIsFifthOrder) {
    // reference: the same interval in 64 rk4 substeps
    const PhasePoint p{0.9, 0.5, -0.2, 0.6};
    auto err = [&](double h) {
        PhasePoint fine = p;
        for (int i = 0; i < 64; ++i) fine = step_rk4(fine, coupled(), h / 64);
        return (to_vec(step_rk4(p, coupled(), h)) - to_vec(fine)).cwiseAbs().maxCoeff();
    };
    const double ratio = err(4e-2) / err(2e-2);
    EXPECT_GT(ratio, 24.0);
    EXPECT_LT(ratio, 40.0);
}

TEST(Integrate, ZeroTimeGivesSingleState) {
    const Trajectory tr = integrate(reference_point(), coupled(), 0.0, 1e-3, Integrator::midpoint);
    EXPECT_EQ(tr.size(), 1u);
    EXPECT_EQ(tr.status, TrajectoryStatus::complete);
    const DriftReport d = drift(tr);
    for (const auto& e : d.entries) EXPECT_EQ(e.max_abs, 0.0);
}

TEST(Integrate, RejectsBadArguments) {
    EXPECT_THROW(integrate(reference_point(), coupled(), 1.0, 0.0, Integrator::rk4), ConfigError);
    EXPECT_THROW(integrate(reference_point(), coupled(), -1.0, 1e-3, Integrator::rk4), ConfigError);
    EXPECT_THROW(integrate(PhasePoint{0, 0, 1, 1}, coupled(), 1.0, 1e-3, Integrator::rk4), DomainError);
    EXPECT_THROW(parse_integrator("euler"), ConfigError);
}

TEST(Integrate, TimesStrictlyIncreasing) {
    const Trajectory tr = integrate(reference_point(), coupled(), 1.0, 1e-2, Integrator::rk4);
    ASSERT_EQ(tr.size(), 101u);
    for (std::size_t i = 1; i < tr.size(); ++i) EXPECT_GT(tr.times[i], tr.times[i - 1]);
    EXPECT_NEAR(tr.times.back(), 1.0, 1e-12);
}

TEST(Integrate, ApproachToSingularityIsTruncated) {
    // radial infall: the fixed step skips over r = 0, so a coarse singularity
    // radius is used to catch the approach
    ModelParams k;
    k.k1 = -1.0;
    IntegrateOptions opt;
    opt.singular_radius2 = 0.05;
    const Trajectory tr = integrate(PhasePoint{1.0, 0.0, 0.0, 0.0}, k, 10.0, 1e-3, Integrator::midpoint, opt);
    EXPECT_EQ(tr.status, TrajectoryStatus::truncated);
    EXPECT_NE(tr.message.find("singularity"), std::string::npos);
    EXPECT_LT(tr.times.back(), 1.0);
}

TEST(Integrate, NewtonFailureNearOriginIsTruncated) {
    ModelParams k;
    k.k1 = -1.0;
    const Trajectory tr = integrate(PhasePoint{1e-3, 0.0, -1.0, 0.0}, k, 1.0, 1e-3, Integrator::midpoint);
    EXPECT_EQ(tr.status, TrajectoryStatus::truncated);
    EXPECT_EQ(tr.size(), 1u);
    EXPECT_NE(tr.message.find("Newton"), std::string::npos);
}

TEST(Midpoint, StepFailureCarriesResidual) {
    ModelParams k;
    k.k1 = -1.0;
    try {
        step_midpoint(PhasePoint{1e-3, 0.0, -1.0, 0.0}, k, 1e-3);
        FAIL() << "expected StepFailure";
    } catch (const StepFailure& e) {
        EXPECT_GT(e.residual(), 0.0);
    }
}

TEST(Integrate, CircularKeplerOrbitStaysCircular) {
    // Cartesian circular orbit of radius 1 about an attractive centre c1 = k1 / 2 = -1/2
    ModelParams k;
    k.k1 = -1.0;
    const PhasePoint p0 = from_cartesian(CartesianPoint{1.0, 0.0, 0.0, std::sqrt(0.5)});
    const Trajectory tr = integrate(p0, k, 100.0, 1e-3, Integrator::midpoint);
    ASSERT_EQ(tr.status, TrajectoryStatus::complete);
    double worst = 0.0;
    for (std::size_t i = 0; i < tr.size(); i += 100) {
        const CartesianPoint c = to_cartesian(canonical_branch(tr.states[i]));
        worst = std::max(worst, std::abs(std::hypot(c.x, c.y) - 1.0));
    }
    EXPECT_LT(worst, 1e-6);
}

TEST(Integrate, CartesianEnergyAndAngularMomentumAlongOrbit) {
    const ModelParams k = coupled();
    const Trajectory tr = integrate(PhasePoint{1.0, 0.3, 0.1, 0.9}, k, 5.0, 1e-3, Integrator::rk4);
    ASSERT_EQ(tr.status, TrajectoryStatus::complete);
    for (std::size_t i = 0; i < tr.size(); i += 50) {
        const PhasePoint p = tr.states[i];
        if (!(p.a > 0.0 && p.b > 0.0)) continue;
        const CartesianPoint c = to_cartesian(p);
        EXPECT_LT(kqbh::testing::rel(cartesian_hamiltonian(c, 0.5 * k.k1, 0.5 * k.k2, 0.5 * k.k3), hamiltonian(p, k)),
                  1e-12);
        EXPECT_LT(kqbh::testing::rel(cartesian_angular_momentum(c), 0.5 * angular_momentum(p)), 1e-12);
    }
}

TEST(Drift, MidpointDriftConvergesAtSecondOrder) {
    const DriftConvergence c =
        drift_convergence(reference_point(), coupled(), 10.0, 4e-3, Integrator::midpoint);
    for (std::size_t n = 0; n < 6; ++n) {
        EXPECT_GE(c.order[n], 1.8) << kDriftNames[n];
        EXPECT_LE(c.order[n], 2.2) << kDriftNames[n];
    }
}

TEST(Drift, MidpointHasNoSecularEnergyGrowth) {
    // energy error over [0, 40] is not larger than over [0, 10] by more than a
    // bounded factor, whereas rk4 error grows with time
    const Trajectory tr = integrate(reference_point(), coupled(), 40.0, 1e-2, Integrator::midpoint);
    const std::size_t quarter = tr.size() / 4;
    double early = 0.0, late = 0.0;
    const double h0 = hamiltonian(tr.states[0], coupled());
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const double d = std::abs(hamiltonian(tr.states[i], coupled()) - h0);
        (i < quarter ? early : late) = std::max(i < quarter ? early : late, d);
    }
    EXPECT_LT(late, 3.0 * early);
}

TEST(Drift, RelativeFallsBackToAbsoluteForZeroInitialValue) {
    Trajectory tr;
    tr.params = kepler_unit();
    tr.states = {reference_point(), PhasePoint{1.0, 0.0, 0.0, 1.0 + 1e-6}};
    tr.times = {0.0, 1.0};
    const DriftReport d = drift(tr);
    EXPECT_EQ(d.entries[3].name, "K3");
    EXPECT_EQ(d.entries[3].initial, 0.0);
    EXPECT_EQ(d.entries[3].relative, d.entries[3].max_abs);
}
