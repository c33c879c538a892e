#include <gtest/gtest.h>

#include <map>

#include "kqbh/inventory.hpp"
#include "test_support.hpp"

using namespace kqbh;

namespace {

const std::map<std::string, PrintedCheck>& inventory() {
    static const std::map<std::string, PrintedCheck> checks = [] {
        PointSampler::Options o;
        o.min_abs_j = 1e-3;
        PointSampler s(61, o);
        std::vector<PhasePoint> pts;
        for (int i = 0; i < 200; ++i) pts.push_back(s.next());
        std::map<std::string, PrintedCheck> m;
        for (auto& c : printed_inventory(pts, kqbh::testing::coupled())) m.emplace(c.item, c);
        return m;
    }();
    return checks;
}

const PrintedCheck& item(const std::string& name) {
    const auto it = inventory().find(name);
    if (it == inventory().end()) throw std::runtime_error("missing inventory item " + name);
    return it->second;
}

}  // namespace

TEST(Inventory, ReferenceAlpha23HasWrongSign) {
    const PrintedCheck c = reference_alpha23_check();
    EXPECT_EQ(c.status, PrintedStatus::sign);
    EXPECT_NEAR(c.factor, -1.0, 1e-12);
    EXPECT_FALSE(c.correction.empty());
}

TEST(Inventory, J4AndK4CarryGlobalSigns) {
    EXPECT_EQ(item("J3 expanded form").status, PrintedStatus::match);
    EXPECT_EQ(item("J4 expanded form").status, PrintedStatus::sign);
    EXPECT_EQ(item("K4 expanded form").status, PrintedStatus::sign);
    EXPECT_FALSE(item("J4 expanded form").correction.empty());
    EXPECT_FALSE(item("K4 expanded form").correction.empty());
}

TEST(Inventory, K3IsAFactorOfTheOtherComponent) {
    const PrintedCheck& c = item("K3 expanded form");
    EXPECT_EQ(c.status, PrintedStatus::factor);
    EXPECT_NEAR(c.factor, -0.5, 1e-9);
}

TEST(Inventory, X12KernelGeneratorFlaggedWithCorrection) {
    const PrintedCheck& c = item("X12 kernel generator");
    EXPECT_EQ(c.status, PrintedStatus::mismatch);
    EXPECT_NE(c.correction.find("residual"), std::string::npos);
    EXPECT_EQ(item("X21 kernel generator").status, PrintedStatus::match);
}

TEST(Inventory, ModuliNeedSquaredShift) {
    EXPECT_EQ(item("|M_a|^2 expanded form").status, PrintedStatus::mismatch);
    EXPECT_EQ(item("|M_a|^2 with (k2 b - k3 a)^2").status, PrintedStatus::match);
    EXPECT_EQ(item("|M_a|^2 - |M_b|^2 = 4 k1 J3").status, PrintedStatus::match);
}

TEST(Inventory, FieldsAndBracketCoefficients) {
    EXPECT_EQ(item("Y_A").status, PrintedStatus::match);
    EXPECT_EQ(item("Y_B").status, PrintedStatus::mismatch);
    EXPECT_EQ(item("i(Gamma) Omega = i lambda d(A B*)").status, PrintedStatus::factor);
    EXPECT_NEAR(item("[Gamma, B* Y_A] = i J34 X_lambda").factor, 0.5, 1e-9);
}

TEST(Inventory, EveryNonMatchHasACorrection) {
    for (const auto& [name, c] : inventory()) {
        if (c.status != PrintedStatus::match) EXPECT_FALSE(c.correction.empty()) << name;
    }
}
