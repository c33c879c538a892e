#pragma once

// Cross-check of every transcribed closed form against the computed quantity
// it is meant to express. Each entry fits printed = c * computed over the
// sample and classifies c (match, sign, factor, mismatch).

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "kqbh/brackets.hpp"
#include "kqbh/fit.hpp"
#include "kqbh/forms.hpp"
#include "kqbh/observables.hpp"
#include "kqbh/printed.hpp"

namespace kqbh {

struct PrintedCheck {
    std::string item;
    std::string location;
    PrintedStatus status = PrintedStatus::mismatch;
    double factor = 0.0;        ///< fitted printed / computed
    double spread = 0.0;
    double max_residual = 0.0;  ///< post-fit, relative
    std::size_t points = 0;
    std::string correction;     ///< empty for matches
};

namespace detail {

inline std::string fmt(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

inline PrintedCheck make_check(std::string item, std::string location, const FactorFit::Result& r, double tol) {
    PrintedCheck c;
    c.item = std::move(item);
    c.location = std::move(location);
    c.status = classify(r, tol);
    c.factor = r.all_zero ? 1.0 : r.factor;
    c.spread = r.spread;
    c.max_residual = r.max_residual;
    c.points = r.points;
    return c;
}

using ScalarFn = std::function<double(const PhasePoint&, const ModelParams&)>;

inline FactorFit::Result fit_scalar(const std::vector<PhasePoint>& pts, const ModelParams& k, const ScalarFn& printed_fn,
                                    const ScalarFn& computed_fn) {
    FactorFit fit;
    for (const auto& p : pts) {
        const double x = printed_fn(p, k);
        const double y = computed_fn(p, k);
        fit.add(x, y, std::max(std::abs(x), std::abs(y)));
    }
    return fit.finish();
}

template <class P, class C>
FactorFit::Result fit_fields(const std::vector<PhasePoint>& pts, const ModelParams& k, P&& printed_fn, C&& computed_fn) {
    FactorFit fit;
    for (const auto& p : pts) {
        const CVec4 x = printed_fn(p, k);
        const CVec4 y = computed_fn(p, k);
        add_to_fit(fit, x, y, std::max(x.cwiseAbs().maxCoeff(), y.cwiseAbs().maxCoeff()));
    }
    return fit.finish();
}

}  // namespace detail

/// The alpha_23 entry at (1, 0, 0, 1), k = (1, 0, 0): printed -2, computed +2.
inline PrintedCheck reference_alpha23_check() {
    const PhasePoint p{1.0, 0.0, 0.0, 1.0};
    ModelParams k;
    k.k1 = 1.0;
    const TableComparison t = printed_tables(PrintedTable::alpha, p, k);
    FactorFit fit;
    fit.add(t.printed[3], t.computed[3], std::max(std::abs(t.printed[3]), std::abs(t.computed[3])));
    PrintedCheck c = detail::make_check("alpha_23 at (1,0,0,1), k=(1,0,0)", "coefficient table of Re(dA^dB*)",
                                        fit.finish(), 1e-12);
    c.correction = "printed " + detail::fmt(t.printed[3]) + ", computed " + detail::fmt(t.computed[3]) +
                   "; the printed entry carries the wrong sign";
    return c;
}

inline std::vector<PrintedCheck> printed_inventory(const std::vector<PhasePoint>& pts, const ModelParams& k,
                                                   double tol = 1e-9) {
    using detail::fit_scalar;
    using detail::fmt;
    using detail::make_check;
    std::vector<PrintedCheck> out;
    auto push = [&](PrintedCheck c, const std::string& correction) {
        if (c.status != PrintedStatus::match) c.correction = correction;
        out.push_back(std::move(c));
    };

    // expanded integrals
    auto re_j34 = [](const PhasePoint& p, const ModelParams& kk) { return invariant_J3(p, kk); };
    auto im_j34 = [](const PhasePoint& p, const ModelParams& kk) { return invariant_J4(p, kk); };
    auto re_k34 = [](const PhasePoint& p, const ModelParams& kk) { return invariant_K3(p, kk); };
    auto im_k34 = [](const PhasePoint& p, const ModelParams& kk) { return invariant_K4(p, kk); };
    push(make_check("J3 expanded form", "Re(A B*) expansion", fit_scalar(pts, k, printed::j3_closed_form, re_j34), tol),
         "use Re(A B*)");
    push(make_check("J4 expanded form", "Im(A B*) expansion", fit_scalar(pts, k, printed::j4_closed_form, im_j34), tol),
         "printed expression equals -Im(A B*)");
    {
        const auto r = fit_scalar(pts, k, printed::k3_closed_form, re_k34);
        const auto alt = fit_scalar(pts, k, printed::k3_closed_form, im_j34);
        push(make_check("K3 expanded form", "Re(M_a M_b*) expansion", r, tol),
             "printed expression equals " + fmt(alt.factor) + " * Im(A B*); Re(M_a M_b*) = 2 k1 Im(A B*)");
    }
    push(make_check("K4 expanded form", "Im(M_a M_b*) expansion", fit_scalar(pts, k, printed::k4_closed_form, im_k34), tol),
         "printed expression equals -Im(M_a M_b*)");

    // moduli
    auto b2 = [](const PhasePoint& p, const ModelParams& kk) { return norm(func_B(p, kk)); };
    auto ma2 = [](const PhasePoint& p, const ModelParams& kk) { return norm(func_Ma(p, kk)); };
    auto mb2 = [](const PhasePoint& p, const ModelParams& kk) { return norm(func_Mb(p, kk)); };
    auto gap = [](const PhasePoint& p, const ModelParams& kk) { return norm(func_Ma(p, kk)) - norm(func_Mb(p, kk)); };
    push(make_check("|B|^2 expanded form", "modulus of B", fit_scalar(pts, k, printed::b_modulus_closed_form, b2), tol),
         "");
    push(make_check("|M_a|^2 expanded form", "modulus of M_a", fit_scalar(pts, k, printed::ma_modulus_closed_form, ma2), tol),
         "the (k2 b - k3 a) term must be squared");
    push(make_check("|M_b|^2 expanded form", "modulus of M_b", fit_scalar(pts, k, printed::mb_modulus_closed_form, mb2), tol),
         "the (k2 b - k3 a) term must be squared");
    {
        auto ma2_sq = [](const PhasePoint& p, const ModelParams& kk) {
            const double s = coupling_shift(p, kk);
            return printed::ma_modulus_closed_form(p, kk) - s + s * s;
        };
        auto mb2_sq = [](const PhasePoint& p, const ModelParams& kk) {
            const double s = coupling_shift(p, kk);
            return printed::mb_modulus_closed_form(p, kk) - s + s * s;
        };
        push(make_check("|M_a|^2 with (k2 b - k3 a)^2", "modulus of M_a, squared variant", fit_scalar(pts, k, ma2_sq, ma2), tol), "");
        push(make_check("|M_b|^2 with (k2 b - k3 a)^2", "modulus of M_b, squared variant", fit_scalar(pts, k, mb2_sq, mb2), tol), "");
    }
    push(make_check("|M_a|^2 - |M_b|^2 = 4 k1 J3", "difference of the M moduli",
                    fit_scalar(pts, k, printed::ma_mb_gap_closed_form, gap), tol),
         "");

    // coefficient tables
    for (PrintedTable t : kPrintedTables) {
        const auto entries = printed_table_inventory(t, pts, k, tol);
        for (const auto& e : entries) {
            PrintedCheck c = make_check(to_string(t) + "_" + e.name, "coefficient table " + to_string(t), e.fit, tol);
            std::string fix;
            if (c.status == PrintedStatus::sign) fix = "flip the sign of the printed entry";
            if (c.status == PrintedStatus::factor) fix = "multiply the printed entry by " + fmt(1.0 / c.factor);
            if (c.status == PrintedStatus::mismatch) fix = "printed entry is not proportional to the form coefficient";
            if (t == PrintedTable::beta_m && c.status == PrintedStatus::mismatch) {
                fix += "; reading (a^2 p_b + b^2) as (a^2 + b^2) removes the discrepancy";
            }
            push(std::move(c), fix);
        }
    }
    out.push_back(reference_alpha23_check());

    // recursion operator layouts
    for (FormKind f : {FormKind::Omega1, FormKind::Omega2}) {
        double layout = 0.0;
        double table = 0.0;
        for (const auto& p : pts) {
            const RecursionLayoutCheck r = printed_recursion_check(f, p, k);
            layout = std::max(layout, r.layout_residual);
            table = std::max(table, r.printed_residual);
        }
        const std::string name = f == FormKind::Omega1 ? "R1" : "R2";
        PrintedCheck c;
        c.item = name + " component layout";
        c.location = "coordinate expression of " + name;
        c.points = pts.size();
        c.max_residual = layout;
        c.factor = 1.0;
        c.status = layout <= tol ? PrintedStatus::match : PrintedStatus::mismatch;
        push(std::move(c), "layout does not reproduce w0^{-1} Omega");
        PrintedCheck d;
        d.item = name + " with printed coefficients";
        d.location = "coordinate expression of " + name;
        d.points = pts.size();
        d.max_residual = table;
        d.factor = 1.0;
        d.status = table <= tol ? PrintedStatus::match : PrintedStatus::mismatch;
        push(std::move(d), "inherits the coefficient-table errors; layout itself is correct");
    }

    // vector fields
    push(make_check("Y_A", "Hamiltonian field of A",
                    detail::fit_fields(pts, k, [](const PhasePoint& p, const ModelParams&) { return printed::field_YA(p); },
                                       [](const PhasePoint& p, const ModelParams& kk) { return printed_vf("Y_A", p, kk).computed; }),
                    tol),
         "");
    push(make_check("Y_B", "Hamiltonian field of B",
                    detail::fit_fields(pts, k, printed::field_YB,
                                       [](const PhasePoint& p, const ModelParams& kk) { return printed_vf("Y_B", p, kk).computed; }),
                    tol),
         "coupling term of the vertical part should read i (k3 d/dp_a - k2 d/dp_b)");
    push(make_check("Z_a", "Hamiltonian field of M_a",
                    detail::fit_fields(pts, k, printed::field_Za,
                                       [](const PhasePoint& p, const ModelParams& kk) { return printed_vf("Z_a", p, kk).computed; }),
                    tol),
         "");
    push(make_check("Z_b", "Hamiltonian field of M_b",
                    detail::fit_fields(pts, k, printed::field_Zb,
                                       [](const PhasePoint& p, const ModelParams& kk) { return printed_vf("Z_b", p, kk).computed; }),
                    tol),
         "");
    {
        FactorFit fit;
        for (const auto& p : pts) {
            const auto x = printed::w_expanded(p);
            const auto y = printed::w_factored(p);
            fit.add(x, y, std::max(std::abs(x), std::abs(y)));
        }
        push(make_check("W expanded vs factored", "the function W inside Y_B", fit.finish(), tol), "");
    }

    // kernel generators
    struct Gen {
        const char* name;
        FormKind form;
        std::function<Vec4(const PhasePoint&, const ModelParams&)> printed_fn;
        std::function<Vec4(const PhasePoint&, const ModelParams&)> corrected_fn;
        const char* fix;
    };
    auto wrap = [](auto f) {
        return [f](const PhasePoint& p, const ModelParams& kk) {
            const auto v = f(p, kk);
            return Vec4(v[0], v[1], v[2], v[3]);
        };
    };
    const std::vector<Gen> gens{
        {"X11", FormKind::Omega1, [](const PhasePoint& p, const ModelParams&) { return printed::kernel_X11(p); },
         wrap([](const PhasePoint& p, const ModelParams& kk) { return corrected::kernel_X11(p, kk); }),
         "(2ab p_b - r2 p_a) d/dp_a + (r2 p_b - 2ab p_a) d/dp_b"},
        {"X12", FormKind::Omega1, printed::kernel_X12,
         wrap([](const PhasePoint& p, const ModelParams& kk) { return corrected::kernel_X12(p, kk); }),
         "a d/da + b d/db - (a^2 - b^2)(a k3 - b k2)/(r2 p_a - 2ab p_b) d/dp_b"},
        {"X21", FormKind::Omega2, [](const PhasePoint& p, const ModelParams&) { return printed::kernel_X21(p); },
         wrap([](const PhasePoint& p, const ModelParams& kk) { return corrected::kernel_X21(p, kk); }), ""},
        {"X22", FormKind::Omega2, printed::kernel_X22,
         wrap([](const PhasePoint& p, const ModelParams& kk) { return corrected::kernel_X22(p, kk); }),
         "a d/da + b d/db - b (a k3 - b k2)/(a p_b) d/dp_b"},
    };
    for (const auto& g : gens) {
        double worst = 0.0;
        double worst_corrected = 0.0;
        for (const auto& p : pts) {
            const Mat4 m = build_form(g.form, p, k).m;
            worst = std::max(worst, annihilation_residual(m, g.printed_fn(p, k)));
            worst_corrected = std::max(worst_corrected, annihilation_residual(m, g.corrected_fn(p, k)));
        }
        PrintedCheck c;
        c.item = std::string(g.name) + " kernel generator";
        c.location = "kernel of " + to_string(g.form);
        c.points = pts.size();
        c.max_residual = worst;
        c.factor = 1.0;
        c.status = worst <= kKernelTolerance ? PrintedStatus::match : PrintedStatus::mismatch;
        push(std::move(c), std::string(g.fix) + " (annihilation residual " + fmt(worst_corrected) + ")");
    }

    // contraction and bracket coefficients
    {
        std::array<FactorFit, 4> fits;
        FactorFit complex_omega;
        FactorFit complex_omega_m;
        FactorFit obstruction;
        FactorFit proof_factor;
        const std::array<double, 4> printed_c{-1.0, 1.0, -1.0, 1.0};
        const std::complex<double> i(0.0, 1.0);
        for (const auto& p : pts) {
            const ContractionSample s = contraction_sample(p, k);
            for (std::size_t n = 0; n < fits.size(); ++n) {
                const Vec4 printed_rhs = printed_c[n] * s.rhs[n];
                fits[n].add(std::span<const double>(printed_rhs.data(), kDim),
                            std::span<const double>(s.lhs[n].data(), kDim), s.scale[n]);
            }
            const Vec4 gamma = dynamics_jet(p, k).value.real();
            const CVec4 lhs = build_form(FormKind::Omega1, p, k).contract(gamma).cast<std::complex<double>>() +
                              i * build_form(FormKind::Omega2, p, k).contract(gamma).cast<std::complex<double>>();
            const CVec4 lhs_m = build_form(FormKind::OmegaM1, p, k).contract(gamma).cast<std::complex<double>>() +
                                i * build_form(FormKind::OmegaM2, p, k).contract(gamma).cast<std::complex<double>>();
            const double lam = s.lambda;
            const CVec4 rhs = i * lam * ComplexObservable(eval_grad([](const auto& z, const ModelParams& kk) { return invariant_J34(z, kk); }, p, k)).grad;
            const CVec4 rhs_m = i * lam * ComplexObservable(eval_grad([](const auto& z, const ModelParams& kk) { return invariant_K34(z, kk); }, p, k)).grad;
            add_to_fit(complex_omega, rhs, lhs, std::max(lhs.cwiseAbs().maxCoeff(), rhs.cwiseAbs().maxCoeff()));
            add_to_fit(complex_omega_m, rhs_m, lhs_m, std::max(lhs_m.cwiseAbs().maxCoeff(), rhs_m.cwiseAbs().maxCoeff()));
            const ObstructionSample o = obstruction_sample(p, k);
            add_to_fit(obstruction, o.direction, o.commutator, o.scale);
            const ScalingCheck sc = scaling_check(p, k);
            const std::complex<double> printed_gamma_a = i * lam * value_A(p);
            proof_factor.add(printed_gamma_a, sc.entries[0].bracket, std::abs(sc.entries[0].bracket));
        }
        const std::array<const char*, 4> names{"i(Gamma) Omega1 = -lambda dJ4", "i(Gamma) Omega2 = lambda dJ3",
                                               "i(Gamma) Omega_M1 = -lambda dK4", "i(Gamma) Omega_M2 = lambda dK3"};
        for (std::size_t n = 0; n < fits.size(); ++n) {
            PrintedCheck c = make_check(names[n], "real parts of the contraction identity", fits[n].finish(), tol);
            push(std::move(c), "coefficient is " + fmt(printed_c[n] / (c.factor == 0.0 ? 1.0 : c.factor)) + " lambda");
        }
        {
            PrintedCheck c = make_check("i(Gamma) Omega = i lambda d(A B*)", "contraction with dA^dB*", complex_omega.finish(), tol);
            push(std::move(c), "coefficient is " + fmt(1.0 / c.factor) + " i lambda");
        }
        {
            PrintedCheck c = make_check("i(Gamma) Omega_M = i lambda d(M_a M_b*)", "contraction with dM_a^dM_b*",
                                        complex_omega_m.finish(), tol);
            push(std::move(c), "coefficient is " + fmt(1.0 / c.factor) + " i lambda");
        }
        {
            PrintedCheck c = make_check("[Gamma, B* Y_A] = i J34 X_lambda", "commutator of Gamma with Y", obstruction.finish(), tol);
            push(std::move(c), "coefficient is " + fmt(1.0 / c.factor) + " i J34");
        }
        {
            PrintedCheck c = make_check("Gamma(A) = i lambda A", "derivation of the complex contraction", proof_factor.finish(), tol);
            push(std::move(c), "Gamma(A) = {A, H} = " + fmt(1.0 / c.factor) + " i lambda A");
        }
    }
    return out;
}

}  // namespace kqbh
