#include <gtest/gtest.h>

#include <cmath>

#include "kqbh/observables.hpp"
#include "test_support.hpp"

using namespace kqbh;
using kqbh::testing::coupled;
using kqbh::testing::fd_gradient;
using kqbh::testing::kepler_unit;
using kqbh::testing::reference_point;

namespace {

std::vector<PhasePoint> sweep(std::uint64_t seed, std::size_t n, PointSampler::Options o = {}) {
    PointSampler s(seed, o);
    std::vector<PhasePoint> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(s.next());
    return out;
}

}  // namespace

TEST(Dual, ProductAndQuotientRules) {
    const Dual1 x = Dual1::variable(1.5, 0);
    const Dual1 y = Dual1::variable(-0.5, 1);
    const Dual1 f = x * y / (x + 2.0);
    const double fx = (-0.5 * 3.5 - 1.5 * -0.5) / (3.5 * 3.5);
    EXPECT_NEAR(f.v, 1.5 * -0.5 / 3.5, 1e-15);
    EXPECT_NEAR(f.g[0], fx, 1e-15);
    EXPECT_NEAR(f.g[1], 1.5 / 3.5, 1e-15);
}

TEST(Dual, SecondOrderMatchesAnalyticHessian) {
    Dual2 x = Dual2::variable(0.7, 0);
    Dual2 y = Dual2::variable(1.3, 1);
    const Dual2 f = x * x * y + sqrt(y);
    EXPECT_NEAR(f.h(0, 0), 2.0 * 1.3, 1e-14);
    EXPECT_NEAR(f.h(0, 1), 2.0 * 0.7, 1e-14);
    EXPECT_NEAR(f.h(1, 0), 2.0 * 0.7, 1e-14);
    EXPECT_NEAR(f.h(1, 1), -0.25 * std::pow(1.3, -1.5), 1e-14);
}

TEST(PhaseSpace, ValidateRejectsOriginAndNaN) {
    EXPECT_THROW(validate(PhasePoint{0.0, 0.0, 1.0, 1.0}), DomainError);
    EXPECT_THROW(validate(PhasePoint{NAN, 1.0, 0.0, 0.0}), DomainError);
    EXPECT_NO_THROW(validate(reference_point()));
}

TEST(PhaseSpace, ChartRoundTripOnPositiveSheet) {
    PointSampler::Options o;
    o.positive_a = true;
    for (const auto& p : sweep(11, 500, o)) {
        const PhasePoint q = from_cartesian(to_cartesian(p));
        EXPECT_LT((to_vec(q) - to_vec(p)).cwiseAbs().maxCoeff(), 1e-12 * (1.0 + to_vec(p).cwiseAbs().maxCoeff()));
    }
}

TEST(PhaseSpace, ChartRequiresPositiveA) {
    EXPECT_THROW(to_cartesian(PhasePoint{-1.0, 0.5, 0.0, 0.0}), DomainError);
    EXPECT_THROW(from_cartesian(CartesianPoint{-1.0, 0.0, 0.0, 0.0}), DomainError);
}

TEST(PhaseSpace, CanonicalBranchIsSameCartesianPoint) {
    const PhasePoint p{-0.8, 1.1, 0.3, -0.4};
    const CartesianPoint c = to_cartesian(canonical_branch(p));
    const CartesianPoint d = detail::chart_map(p);
    EXPECT_NEAR(c.x, d.x, 1e-15);
    EXPECT_NEAR(c.y, d.y, 1e-15);
    EXPECT_NEAR(c.px, d.px, 1e-15);
    EXPECT_NEAR(c.py, d.py, 1e-15);
}

TEST(PhaseSpace, SamplerIsDeterministic) {
    const auto a = sweep(5, 20);
    const auto b = sweep(5, 20);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(to_vec(a[i]), to_vec(b[i]));
}

TEST(Observables, ReferencePointValues) {
    const PhasePoint p = reference_point();
    const ModelParams k = kepler_unit();
    const std::complex<double> i(0.0, 1.0);
    EXPECT_NEAR(hamiltonian(p, k), 1.5, 1e-12);
    EXPECT_NEAR(angular_momentum(p), 1.0, 1e-12);
    EXPECT_NEAR(lambda_factor(p), 1.0, 1e-12);
    EXPECT_NEAR(std::abs(value_A(p) - 1.0), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(value_B(p, k) - 2.0), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(value_J34(p, k) - 2.0), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(value_Ma(p, k) + 3.0 * i), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(value_Mb(p, k) - 1.0), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(value_K34(p, k) + 3.0 * i), 0.0, 1e-12);
}

TEST(Observables, ZeroMomentaGiveZeroAngularMomentum) {
    const PhasePoint p{0.7, -1.2, 0.0, 0.0};
    EXPECT_EQ(angular_momentum(p), 0.0);
    EXPECT_NEAR(hamiltonian(p, ModelParams{}), 0.0, 1e-15);
}

TEST(Observables, OriginThrows) {
    EXPECT_THROW(value_A(PhasePoint{0.0, 0.0, 1.0, 0.0}), DomainError);
    EXPECT_THROW(invariants(PhasePoint{0.0, 0.0, 1.0, 0.0}, coupled()), DomainError);
}

TEST(Observables, AutodiffMatchesFiniteDifferences) {
    const ModelParams k = coupled();
    for (const auto& field : registered_observables()) {
        for (const auto& p : sweep(3, 50)) {
            const Vec4 ad = eval_grad(field, p, k).g;
            const Vec4 fd = fd_gradient([&](const PhasePoint& q) { return field(q, k); }, p);
            const double scale = 1.0 + ad.cwiseAbs().maxCoeff();
            EXPECT_LT((ad - fd).cwiseAbs().maxCoeff() / scale, 1e-6) << field.name << " at " << to_string(p);
        }
    }
}

TEST(Observables, AbsAIsOne) {
    for (const auto& p : sweep(4, 300)) EXPECT_NEAR(std::abs(value_A(p)), 1.0, 1e-14);
}

TEST(Observables, ModulusIdentitiesHold) {
    PointSampler s(9);
    for (int n = 0; n < 300; ++n) {
        const PhasePoint p = s.next();
        const ModelParams k = s.couplings();
        const ModulusResiduals r = modulus_identities(p, k);
        EXPECT_LT(r.b_modulus.relative(), 1e-12);
        EXPECT_LT(r.ma_mb_gap.relative(), 1e-12);
        EXPECT_LT(r.ma_squared.relative(), 1e-12);
        EXPECT_LT(r.mb_squared.relative(), 1e-12);
    }
}

TEST(Observables, LinearShiftInModuliDoesNotHoldWithCouplings) {
    const ModulusResiduals r = modulus_identities(PhasePoint{0.9, 0.4, 0.3, -0.7}, coupled());
    EXPECT_GT(r.ma_linear.relative(), 1e-3);
}

TEST(Observables, I2EqualsJ3) {
    PointSampler s(10);
    for (int n = 0; n < 200; ++n) {
        const PhasePoint p = s.next();
        const ModelParams k = s.couplings();
        EXPECT_NEAR(invariant_I2(p, k), invariant_J3(p, k), 1e-12 * (1.0 + std::abs(invariant_J3(p, k))));
    }
}

TEST(Observables, ParabolicEqualsCartesianHamiltonian) {
    PointSampler::Options o;
    o.positive_a = true;
    o.positive_b = true;
    const ModelParams k = coupled();
    for (const auto& p : sweep(12, 500, o)) {
        const double hp = hamiltonian(p, k);
        const double hc = cartesian_hamiltonian(to_cartesian(p), 0.5 * k.k1, 0.5 * k.k2, 0.5 * k.k3);
        EXPECT_LT(kqbh::testing::rel(hp, hc), 1e-12);
        EXPECT_LT(kqbh::testing::rel(cartesian_angular_momentum(to_cartesian(p)), 0.5 * angular_momentum(p)), 1e-12);
    }
}

TEST(Observables, FactorFitRecoversConstant) {
    FactorFit fit;
    for (int i = 1; i <= 10; ++i) fit.add(-2.0 * i, static_cast<double>(i), 2.0 * i);
    const auto r = fit.finish();
    EXPECT_TRUE(r.consistent());
    EXPECT_TRUE(r.near(-2.0));
    EXPECT_EQ(classify(r, 1e-9), PrintedStatus::factor);
}
