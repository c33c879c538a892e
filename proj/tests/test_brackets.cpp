#include <gtest/gtest.h>

#include "kqbh/brackets.hpp"
#include "kqbh/printed.hpp"
#include "test_support.hpp"

using namespace kqbh;
using kqbh::testing::coupled;
using kqbh::testing::fd_bracket;
using kqbh::testing::fd_gradient;
using kqbh::testing::kepler_unit;
using kqbh::testing::reference_point;

namespace {

const auto H = [](const auto& z, const ModelParams& k) { return hamiltonian(z, k); };
const auto J3 = [](const auto& z, const ModelParams& k) { return invariant_J3(z, k); };
const auto J4 = [](const auto& z, const ModelParams& k) { return invariant_J4(z, k); };
const auto K3 = [](const auto& z, const ModelParams& k) { return invariant_K3(z, k); };
const auto P1 = [](const auto& z, const ModelParams& k) { return momentum_p1(z, k); };

std::vector<PhasePoint> sweep(std::uint64_t seed, std::size_t n) {
    PointSampler::Options o;
    o.min_abs_j = 1e-3;
    PointSampler s(seed, o);
    std::vector<PhasePoint> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(s.next());
    return out;
}

}  // namespace

TEST(Poisson, CanonicalPairs) {
    const PhasePoint p{0.4, -0.9, 1.1, 0.2};
    const ModelParams k;
    auto a = [](const auto& z, const ModelParams&) { return z.a; };
    auto pa = [](const auto& z, const ModelParams&) { return z.pa; };
    auto b = [](const auto& z, const ModelParams&) { return z.b; };
    auto pb = [](const auto& z, const ModelParams&) { return z.pb; };
    EXPECT_DOUBLE_EQ(poisson(a, pa, p, k), 1.0);
    EXPECT_DOUBLE_EQ(poisson(b, pb, p, k), 1.0);
    EXPECT_DOUBLE_EQ(poisson(a, pb, p, k), 0.0);
    EXPECT_DOUBLE_EQ(poisson(pa, a, p, k), -1.0);
}

TEST(Poisson, AntisymmetryAndLeibniz) {
    const ModelParams k = coupled();
    for (const auto& p : sweep(21, 100)) {
        EXPECT_NEAR(poisson(J3, H, p, k), -poisson(H, J3, p, k), 1e-14);
        // {f g, h} = f {g, h} + g {f, h}
        auto prod = [](const auto& z, const ModelParams& kk) { return momentum_p1(z, kk) * invariant_J4(z, kk); };
        const double lhs = poisson(prod, K3, p, k);
        const double rhs = momentum_p1(p) * poisson(J4, K3, p, k) + invariant_J4(p, k) * poisson(P1, K3, p, k);
        EXPECT_LT(kqbh::testing::rel(lhs, rhs), 1e-12);
    }
}

TEST(Poisson, AutodiffAgreesWithFiniteDifferenceOracle) {
    const ModelParams k = coupled();
    for (const auto& p : sweep(22, 50)) {
        const double ad = poisson(J4, P1, p, k);
        const double fd = fd_bracket([&](const PhasePoint& q) { return invariant_J4(q, k); },
                                     [&](const PhasePoint& q) { return momentum_p1(q); }, p);
        EXPECT_LT(kqbh::testing::rel(ad, fd), 1e-6);
    }
}

TEST(Poisson, JacobiIdentityByFiniteDifferences) {
    const ModelParams k = coupled();
    auto f = [&](const PhasePoint& q) { return invariant_J4(q, k); };
    auto g = [&](const PhasePoint& q) { return momentum_p1(q); };
    auto h = [&](const PhasePoint& q) { return q.a * q.pb * q.pb + q.b; };
    auto br = [&](auto x, auto y) {
        return [=](const PhasePoint& q) {
            const Vec4 gx = fd_gradient(x, q), gy = fd_gradient(y, q);
            return poisson(gx, gy);
        };
    };
    for (const auto& p : sweep(23, 20)) {
        const double t1 = fd_bracket(f, br(g, h), p);
        const double t2 = fd_bracket(g, br(h, f), p);
        const double t3 = fd_bracket(h, br(f, g), p);
        const double scale = std::abs(t1) + std::abs(t2) + std::abs(t3);
        EXPECT_LT(std::abs(t1 + t2 + t3), 1e-3 * (1.0 + scale));
    }
}

TEST(HamiltonianField, ReferencePoint) {
    const Vec4 x = hamiltonian_vf(H, reference_point(), kepler_unit());
    EXPECT_NEAR(x[0], 0.0, 1e-14);
    EXPECT_NEAR(x[1], 1.0, 1e-14);
    EXPECT_NEAR(x[2], 3.0, 1e-14);
    EXPECT_NEAR(x[3], 0.0, 1e-14);
}

TEST(HamiltonianField, ZeroMomentaZeroCouplingsGiveZeroField) {
    const Vec4 x = hamiltonian_vf(H, PhasePoint{0.3, 1.2, 0.0, 0.0}, ModelParams{});
    EXPECT_LT(x.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(LieBracket, HamiltonianFieldsCommuteToMinusFieldOfBracket) {
    // [X_f, X_g] = -X_{f,g} with X_f = S grad f and [X, Y] = (DY) X - (DX) Y
    const ModelParams k = coupled();
    for (const auto& p : sweep(24, 20)) {
        const CVec4 lhs = lie_bracket(hamiltonian_jet(J4, p, k), hamiltonian_jet(P1, p, k));
        const Vec4 g = fd_gradient([&](const PhasePoint& q) { return poisson(J4, P1, q, k); }, p);
        const Vec4 rhs = -hamiltonian_vf(g);
        EXPECT_LT((lhs.real() - rhs).cwiseAbs().maxCoeff(), 1e-6 * (1.0 + rhs.cwiseAbs().maxCoeff()));
        EXPECT_LT(lhs.imag().cwiseAbs().maxCoeff(), 1e-14);
    }
}

TEST(Scaling, ReferencePointBrackets) {
    const ScalingCheck c = scaling_check(reference_point(), kepler_unit());
    const std::complex<double> i(0.0, 1.0);
    EXPECT_NEAR(std::abs(c.entries[0].bracket - 2.0 * i), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(c.entries[1].bracket - 4.0 * i), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(c.entries[2].bracket - 3.0), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(c.entries[3].bracket - 1.0 * i), 0.0, 1e-12);
    EXPECT_LT(c.max_residual(), 1e-14);
}

TEST(Scaling, FactorsArePointIndependent) {
    PointSampler s(25, {false, false, 1e-3});
    std::array<FactorFit, 4> fits;
    for (int n = 0; n < 300; ++n) {
        const PhasePoint p = s.next();
        const ModelParams k = s.couplings();
        EXPECT_LT(scaling_check(p, k).max_residual(), 1e-9);
        accumulate_scaling_factors(p, k, fits);
    }
    const std::array<double, 4> expected{2.0, 2.0, 1.0, 1.0};
    for (std::size_t n = 0; n < 4; ++n) {
        const auto r = fits[n].finish();
        EXPECT_TRUE(r.consistent(1e-8));
        EXPECT_TRUE(r.near(expected[n], 1e-9));
    }
}

TEST(Conservation, BracketsWithHVanish) {
    PointSampler s(26);
    for (int n = 0; n < 200; ++n) {
        const PhasePoint p = s.next();
        const ModelParams k = s.couplings();
        for (const auto& f : conserved_quantities()) {
            const Vec4 gf = eval_grad(f, p, k).g;
            const Vec4 gh = eval_grad(H, p, k).g;
            EXPECT_LT(std::abs(poisson(gf, gh)) / (1.0 + gf.norm() * gh.norm()), 1e-10) << f.name;
        }
    }
}

TEST(PrintedFields, YAZaZbMatchAndYBDoesNot) {
    const ModelParams k = coupled();
    double worst_yb = 0.0;
    for (const auto& p : sweep(27, 100)) {
        EXPECT_LT(printed_vf("Y_A", p, k).relative(), 1e-12);
        EXPECT_LT(printed_vf("Z_a", p, k).relative(), 1e-12);
        EXPECT_LT(printed_vf("Z_b", p, k).relative(), 1e-12);
        worst_yb = std::max(worst_yb, printed_vf("Y_B", p, k).relative());
        const CVec4 fixed = corrected::field_YB(p, k);
        EXPECT_LT((fixed - printed_vf("Y_B", p, k).computed).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LT(w_form_difference(p), 1e-12);
    }
    EXPECT_GT(worst_yb, 1e-3);
}

TEST(PrintedFields, UnknownNameThrows) { EXPECT_THROW(printed_vf("Y_C", reference_point(), coupled()), ConfigError); }

TEST(Obstruction, CommutatorIsTwiceIJ34XLambda) {
    const auto pts = sweep(28, 100);
    const auto r = obstruction_fit(pts, coupled());
    EXPECT_TRUE(r.consistent(1e-8));
    EXPECT_TRUE(r.near(2.0, 1e-9));
    EXPECT_LT(r.max_residual, 1e-10);
}

TEST(Obstruction, PartialSymmetryIsNotASymmetry) {
    std::size_t commuting = 0;
    const auto pts = sweep(29, 100);
    for (const auto& p : pts) commuting += symmetry_defect(p, coupled()) > 1e-8 ? 0 : 1;
    EXPECT_LE(commuting, 5u);
}

TEST(Obstruction, Y34IsLinearCombination) {
    for (const auto& p : sweep(30, 100)) EXPECT_LT(y34_linearity_residual(p, coupled()), 1e-12);
}
