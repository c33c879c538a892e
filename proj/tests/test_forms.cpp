#include <gtest/gtest.h>

#include "kqbh/forms.hpp"
#include "test_support.hpp"

using namespace kqbh;
using kqbh::testing::coupled;
using kqbh::testing::fd_gradient;
using kqbh::testing::kepler_unit;
using kqbh::testing::reference_point;

namespace {

std::vector<PhasePoint> sweep(std::uint64_t seed, std::size_t n) {
    PointSampler::Options o;
    o.min_abs_j = 1e-3;
    PointSampler s(seed, o);
    std::vector<PhasePoint> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(s.next());
    return out;
}

/// Omega(e_i, e_j) from finite-difference gradients of the complex functions.
Mat4 fd_form(FormKind which, const PhasePoint& p, const ModelParams& k) {
    const bool ab = which == FormKind::Omega1 || which == FormKind::Omega2;
    auto F = [&](const PhasePoint& q) { return ab ? value_A(q) : value_Ma(q, k); };
    auto G = [&](const PhasePoint& q) { return ab ? value_B(q, k) : value_Mb(q, k); };
    const Vec4 fr = fd_gradient([&](const PhasePoint& q) { return F(q).real(); }, p);
    const Vec4 fi = fd_gradient([&](const PhasePoint& q) { return F(q).imag(); }, p);
    const Vec4 gr = fd_gradient([&](const PhasePoint& q) { return G(q).real(); }, p);
    const Vec4 gi = fd_gradient([&](const PhasePoint& q) { return G(q).imag(); }, p);
    auto w = [](const Vec4& x, const Vec4& y) -> Mat4 { return x * y.transpose() - y * x.transpose(); };
    // dF ^ dG* = (dFr + i dFi) ^ (dGr - i dGi)
    if (which == FormKind::Omega1 || which == FormKind::OmegaM1) return w(fr, gr) + w(fi, gi);
    return w(fi, gr) - w(fr, gi);
}

}  // namespace

TEST(Forms, CanonicalFormIsSymplectic) {
    const Mat4 w = canonical_form_matrix();
    EXPECT_EQ(numeric_rank(w), 4);
    EXPECT_DOUBLE_EQ(std::abs(pfaffian(w).value), 1.0);
    EXPECT_EQ(w * canonical_form_inverse(), Mat4::Identity());
}

TEST(Forms, WedgeOfEqualGradientsVanishes) {
    const Vec4 g(1.0, -2.0, 0.5, 3.0);
    EXPECT_EQ(wedge(g, g), Mat4::Zero());
}

TEST(Forms, MatchFiniteDifferenceOracle) {
    const ModelParams k = coupled();
    for (FormKind f : kDegenerateForms) {
        for (const auto& p : sweep(31, 30)) {
            const Mat4 ad = build_form(f, p, k).m;
            const Mat4 fd = fd_form(f, p, k);
            EXPECT_LT((ad - fd).cwiseAbs().maxCoeff(), 1e-6 * (1.0 + ad.cwiseAbs().maxCoeff())) << to_string(f);
            EXPECT_LT((form_jet(f, p, k).m - ad).cwiseAbs().maxCoeff(), 1e-13);
        }
    }
}

TEST(Forms, ReferencePointEntries) {
    const PhasePoint p = reference_point();
    const ModelParams k = kepler_unit();
    const Mat4 o1 = build_form(FormKind::Omega1, p, k).m;
    const Mat4 o2 = build_form(FormKind::Omega2, p, k).m;
    const Mat4 m1 = build_form(FormKind::OmegaM1, p, k).m;
    const Mat4 m2 = build_form(FormKind::OmegaM2, p, k).m;
    EXPECT_NEAR(o1(1, 2), 2.0, 1e-13);
    EXPECT_NEAR(o2(1, 3), 4.0, 1e-13);
    EXPECT_NEAR(m1(1, 3), -4.0, 1e-13);
    EXPECT_NEAR(m1(2, 3), 4.0, 1e-13);
    EXPECT_NEAR(m2(1, 2), -2.0, 1e-13);
    for (const Mat4* m : {&o1, &o2, &m1, &m2}) EXPECT_EQ(numeric_rank(*m), 2);
}

TEST(Forms, DegenerateAndNotSymplectic) {
    PointSampler s(32, {false, false, 1e-3});
    for (int n = 0; n < 300; ++n) {
        const PhasePoint p = s.next();
        const ModelParams k = s.couplings();
        const DegeneracyReport r = degeneracy(p, k);
        for (const auto& f : r.forms) {
            EXPECT_LT(f.pf.relative(), 1e-9) << to_string(f.form);
            EXPECT_EQ(f.rank, 2) << to_string(f.form);
        }
        EXPECT_LT(r.mixed_omega.relative(), 1e-9);
        EXPECT_LT(r.mixed_omega_m.relative(), 1e-9);
        for (FormKind f : kDegenerateForms) EXPECT_LT(build_form(f, p, k).antisymmetry_defect(), 1e-14);
    }
}

TEST(Contraction, ReferencePoint) {
    const PhasePoint p = reference_point();
    const ModelParams k = kepler_unit();
    const ContractionSample s = contraction_sample(p, k);
    const Vec4 expected_lhs(0.0, -6.0, 2.0, 0.0);
    const Vec4 expected_rhs(0.0, 3.0, -1.0, 0.0);
    EXPECT_LT((s.lhs[0] - expected_lhs).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((s.rhs[0] - expected_rhs).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT(s.complex_omega, 1e-14);
    EXPECT_LT(s.complex_omega_m, 1e-14);
}

TEST(Contraction, FactorsAreConstant) {
    const ContractionFitResult r = contraction_identities(sweep(33, 300), coupled());
    for (std::size_t n = 0; n < 4; ++n) {
        EXPECT_TRUE(r.factors[n].consistent(1e-8)) << kContractionNames[n];
        EXPECT_TRUE(r.factors[n].near(kContractionFactors[n], 1e-9)) << kContractionNames[n];
        EXPECT_LT(r.factors[n].max_residual, 1e-9);
    }
    EXPECT_LT(r.max_complex_residual, 1e-9);
}

TEST(Contraction, QuasiFactorAtReferencePoint) {
    const QuasiFactor q = quasi_factor(reference_point(), kepler_unit());
    ASSERT_TRUE(q.defined);
    EXPECT_NEAR(q.mu, -0.5, 1e-14);
    EXPECT_LT(q.residual, 1e-13);
}

TEST(Contraction, QuasiFactorUndefinedWhenLambdaVanishes) {
    EXPECT_FALSE(quasi_factor(PhasePoint{1.0, 0.5, 0.0, 0.0}, coupled()).defined);
}

TEST(Recursion, DefiningRelationAndSpectrum) {
    const ModelParams k = coupled();
    for (FormKind f : kDegenerateForms) {
        for (const auto& p : sweep(34, 200)) {
            const RecursionOperator r = recursion_operator(f, p, k);
            EXPECT_LT(r.defining_residual, 1e-12);
            EXPECT_TRUE(r.pattern_holds(1e-9)) << to_string(f) << " at " << to_string(p);
            EXPECT_NEAR(r.eigenvalues[2].imag(), 0.0, 1e-9 * r.scale);
        }
    }
}

TEST(Recursion, TauIsHalfTheTrace) {
    const RecursionOperator r = recursion_operator(FormKind::Omega1, PhasePoint{0.8, 0.6, -0.3, 1.2}, coupled());
    EXPECT_NEAR(r.eigenvalues[3].real(), r.tau, 1e-9 * r.scale);
}

TEST(Recursion, PrintedLayoutMatchesComputedOperator) {
    for (const auto& p : sweep(35, 50)) {
        EXPECT_LT(printed_recursion_check(FormKind::Omega1, p, coupled()).layout_residual, 1e-13);
        EXPECT_LT(printed_recursion_check(FormKind::Omega2, p, coupled()).layout_residual, 1e-13);
    }
    EXPECT_THROW(printed_recursion_check(FormKind::OmegaM1, reference_point(), coupled()), ConfigError);
}

TEST(Kernels, InvolutiveForAllForms) {
    for (FormKind f : kDegenerateForms) {
        for (const auto& p : sweep(36, 50)) {
            const KernelReport r = kernel_and_involutivity(f, p, coupled());
            ASSERT_FALSE(r.degenerate_point);
            EXPECT_EQ(r.basis.cols(), 2);
            EXPECT_LT(r.basis_residual, 1e-10);
            EXPECT_TRUE(r.pivoted.passed()) << to_string(f);
            if (r.closed_form) {
                EXPECT_TRUE(r.closed_form->passed()) << to_string(f);
                EXPECT_GT(r.closed_form->bracket_norm, 1e-6);
            }
        }
    }
}

TEST(Kernels, CorrectedGeneratorsAnnihilateAndPrintedOnesDoNot) {
    bool x12_misses = false;
    for (const auto& p : sweep(37, 50)) {
        const KernelReport r1 = kernel_and_involutivity(FormKind::Omega1, p, coupled());
        const KernelReport r2 = kernel_and_involutivity(FormKind::Omega2, p, coupled());
        for (const auto& g : r1.corrected_generators) EXPECT_TRUE(g.in_kernel) << g.name;
        for (const auto& g : r2.corrected_generators) EXPECT_TRUE(g.in_kernel) << g.name;
        x12_misses = x12_misses || !r1.printed_generators[1].in_kernel;
    }
    EXPECT_TRUE(x12_misses);
}

TEST(Kernels, SpanRankDetectsNewDirection) {
    const Vec4 u(1, 0, 0, 0), v(0, 1, 0, 0);
    EXPECT_EQ(span_rank(u, v, Vec4(1, 1, 0, 0), 1.0), 2);
    EXPECT_EQ(span_rank(u, v, Vec4(0, 0, 1, 0), 1.0), 3);
}

TEST(Kernels, OmegaZeroHasNone) {
    EXPECT_THROW(kernel_and_involutivity(FormKind::omega0, reference_point(), coupled()), ConfigError);
}

TEST(Nijenhuis, ConstantOperatorHasNoTorsion) {
    OperatorJet j;
    j.r << 1, 2, 0, 0, 0, 3, 1, 0, 4, 0, 0, 1, 0, 0, 2, 5;
    EXPECT_EQ(nijenhuis_norm(j), 0.0);
}

TEST(Nijenhuis, MatchesFiniteDifferenceOracle) {
    const ModelParams k = coupled();
    for (const auto& p : sweep(38, 20)) {
        OperatorJet fd;
        fd.r = recursion_matrix(build_form(FormKind::Omega1, p, k).m);
        const Vec4 z = to_vec(p);
        for (int c = 0; c < 4; ++c) {
            const double h = kqbh::testing::fd_step(z[c]);
            Vec4 up = z, dn = z;
            up[c] += h;
            dn[c] -= h;
            fd.dr[c] = (recursion_matrix(build_form(FormKind::Omega1, from_vec(up), k).m) -
                        recursion_matrix(build_form(FormKind::Omega1, from_vec(dn), k).m)) /
                       (2.0 * h);
        }
        const double ad = nijenhuis_torsion(FormKind::Omega1, p, k);
        EXPECT_NEAR(nijenhuis_norm(fd), ad, 1e-5 * (1.0 + ad));
    }
}

TEST(Nijenhuis, R1IsNotIntegrable) {
    const auto pts = sweep(39, 200);
    std::size_t above = 0;
    for (const auto& p : pts) above += nijenhuis_torsion(FormKind::Omega1, p, coupled()) > 1e-6 ? 1 : 0;
    EXPECT_GE(above, 190u);
}

TEST(Orthogonality, HamiltonianFieldsAreOrthogonalToGamma) {
    PointSampler s(40);
    for (int n = 0; n < 300; ++n) {
        const PhasePoint p = s.next();
        EXPECT_LT(orthogonality(p, s.couplings()).max_relative(), 1e-9);
    }
}

TEST(PrintedTables, ReferenceAlpha23SignAndLaterEntriesWithCorrections) {
    const TableComparison t = printed_tables(PrintedTable::alpha, reference_point(), kepler_unit());
    EXPECT_NEAR(t.printed[3], -2.0, 1e-13);
    EXPECT_NEAR(t.computed[3], 2.0, 1e-13);
    const auto pts = sweep(41, 100);
    const auto beta_m = printed_table_inventory(PrintedTable::beta_m, pts, coupled());
    EXPECT_EQ(beta_m[0].status, PrintedStatus::match);
    EXPECT_EQ(beta_m[1].status, PrintedStatus::mismatch);
    for (const auto& p : pts) {
        const auto fixed = corrected::omegaM2_beta(p, coupled());
        const auto computed = printed_tables(PrintedTable::beta_m, p, coupled()).computed;
        for (std::size_t n = 0; n < 6; ++n) EXPECT_NEAR(fixed[n], computed[n], 1e-12 * (1.0 + std::abs(computed[n])));
    }
}

TEST(FormNames, RoundTrip) {
    for (FormKind f : {FormKind::omega0, FormKind::Omega1, FormKind::Omega2, FormKind::OmegaM1, FormKind::OmegaM2}) {
        EXPECT_EQ(parse_form(to_string(f)), f);
    }
    EXPECT_THROW(parse_form("Omega7"), ConfigError);
}
