#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "doco/experiment.hpp"
#include "doco/invariants.hpp"

using doco::ComparatorSequence;
using doco::DecisionVector;
using doco::FeasibleSet;
using doco::LossFunction;
using doco::Round;
using doco::RunTrace;

namespace {

RunTrace trace_of(const std::vector<double>& xs)
{
    RunTrace tr;
    Round t = 1;
    for (double x : xs)
        tr.rows.push_back({t++, DecisionVector{x}, 0.0, 0.0, 1, {}});
    return tr;
}

std::vector<LossFunction> linear_1d(const std::vector<double>& gs)
{
    std::vector<LossFunction> out;
    for (double g : gs)
        out.push_back(LossFunction::linear({g}));
    return out;
}

} // namespace

TEST(DynamicRegret, Examples)
{
    const auto losses = linear_1d({1, 1, 1, 1, 1});
    const auto tr = trace_of({0, 0, 0, 0, 0});
    EXPECT_DOUBLE_EQ(doco::dynamic_regret(tr, losses, doco::constant_comparators(DecisionVector{0.0}, 5)), 0.0);
    EXPECT_DOUBLE_EQ(doco::dynamic_regret(tr, losses, doco::constant_comparators(DecisionVector{-1.0}, 5)), 5.0);
    EXPECT_THROW(doco::dynamic_regret(trace_of({0}), losses, doco::constant_comparators(DecisionVector{0.0}, 5)),
                 std::invalid_argument);
}

TEST(DynamicRegret, ConstantComparatorAtOptimumIsStaticRegret)
{
    doco::Rng rng(6);
    const FeasibleSet box(1, 1.0);
    std::vector<double> gs, xs;
    for (int t = 0; t < 40; ++t) {
        gs.push_back(rng.uniform(-1.0, 1.0));
        xs.push_back(rng.uniform(-1.0, 1.0));
    }
    const auto losses = linear_1d(gs);
    const auto tr = trace_of(xs);
    const auto best = doco::best_fixed_point(losses, box);
    EXPECT_NEAR(doco::dynamic_regret(tr, losses, doco::constant_comparators(best.point, 40)),
                doco::static_regret(tr, losses, box), 1e-12);
}

TEST(StaticRegret, Examples)
{
    const FeasibleSet box(1, 1.0);
    const auto zero = linear_1d({0, 0, 0});
    EXPECT_EQ(doco::static_regret(trace_of({0.5, -0.2, 0.1}), zero, box), 0.0);
    EXPECT_DOUBLE_EQ(doco::static_regret(trace_of({0, 0, 0}), linear_1d({1, -1, 1}), box), 1.0);
}

TEST(StaticRegret, LowerBoundInstanceUsesVertexOptimum)
{
    const auto inst = doco::make_lowerbound_instance(12, 3, 2.0, 1.0, 3, 4);
    const auto losses = inst.losses();
    RunTrace tr;
    for (Round t = 1; t <= 12; ++t)
        tr.rows.push_back({t, inst.set().origin(), 0.0, 0.0, 1, {}});
    EXPECT_NEAR(doco::static_regret(tr, inst), doco::static_regret(tr, losses, inst.set()), 1e-12);
    EXPECT_NEAR(doco::static_regret(tr, inst), -doco::best_fixed_decision(inst).total_loss, 1e-12);
}

TEST(JointEffect, Examples)
{
    const ComparatorSequence u{{DecisionVector{0.0}, DecisionVector{1.0}}};
    EXPECT_DOUBLE_EQ(doco::joint_effect(std::vector<Round>{2, 1}, u), 2.0);
    EXPECT_EQ(doco::joint_effect(std::vector<Round>{1, 2}, u), 0.0);
    const auto flat = doco::constant_comparators(DecisionVector{0.4}, 3);
    EXPECT_EQ(doco::joint_effect(std::vector<Round>{3, 1, 2}, flat), 0.0);
    EXPECT_THROW(doco::joint_effect(std::vector<Round>{1}, u), std::invalid_argument);
    EXPECT_THROW(doco::joint_effect(std::vector<Round>{1, 1}, u), std::invalid_argument);
}

TEST(JointEffect, MeetsWorstCaseEstimates)
{
    doco::Rng rng(44);
    for (int s = 0; s < 200; ++s) {
        const auto sched = doco::inv::random_schedule(rng, 150, 15);
        const Round T = sched.horizon();
        const double D = 2.0;
        const auto set = FeasibleSet::from_diameter(D, 2);
        doco::Rng env_rng(rng.bits());
        const auto env = doco::make_drift_environment(set, T, rng.uniform(0.0, 0.6), doco::DriftLoss::quadratic,
                                                      1.0, env_rng);
        doco::Dogd d(set, 0.1);
        const auto tr = doco::drive(d, env.losses, sched);
        const double P = doco::path_length(env.comparators);
        const double J = doco::joint_effect(*tr.c_log, env.comparators);
        const double dd = static_cast<double>(sched.max_delay());
        ASSERT_LE(J, std::sqrt(2.0 * dd * T * D * P) + 1e-9);
        ASSERT_LE(J, 2.0 * dd * P + 1e-9);
        ASSERT_LE(J, T * D + 1e-9);
    }
}

TEST(BoundThm1, Examples)
{
    EXPECT_DOUBLE_EQ(doco::bound_thm1(1, 1, 1, 1, 0, 0), 2.0);
    const double D = 1.5, G = 0.7, sum_m = 123.0, P = 0.0;
    const double eta = doco::corollary_lr(D, G, sum_m);
    EXPECT_NEAR(doco::bound_thm1(D, G, eta, sum_m, P, 0.0), (2 * D + P) * G * std::sqrt(sum_m), 1e-12);
    EXPECT_DOUBLE_EQ(doco::bound_thm1(1, 2, 1, 1, 0, 3) - doco::bound_thm1(1, 2, 1, 1, 0, 0), 6.0);
}

TEST(BoundThm1, BalancedRateWithinFactorTwoOfOptimum)
{
    doco::Rng rng(2);
    for (int s = 0; s < 200; ++s) {
        const double D = rng.uniform(0.1, 5.0), G = rng.uniform(0.1, 5.0), P = rng.uniform(0.0, 100.0);
        const double sum_m = rng.uniform(1.0, 1e6), J = rng.uniform(0.0, 50.0);
        const double eta_star = std::sqrt(D * (D + P)) / (G * std::sqrt(sum_m));
        double best = INFINITY;
        for (int k = -4000; k <= 4000; ++k)
            best = std::min(best, doco::bound_thm1(D, G, eta_star * std::exp(k * 1e-3), sum_m, P, J));
        ASSERT_LE(doco::bound_thm1(D, G, eta_star, sum_m, P, J), 2.0 * best);
    }
}

TEST(BoundCor1, Examples)
{
    EXPECT_DOUBLE_EQ(doco::bound_cor1(1, 2, 9, 3, true, 4, 25), 5.0 * 2.0 * 3.0);
    EXPECT_DOUBLE_EQ(doco::bound_cor1(1, 1, 16, 0, false, 4, 25), 2.0 * 4.0);
    EXPECT_NEAR(doco::bound_cor1(1, 1, 100, 1, false, 4, 25), 44.142135623730950, 1e-12);
}

TEST(BoundThm2, Examples)
{
    const double D = 1.3, G = 0.9, S = 50.0;
    EXPECT_EQ(doco::bracket_index(D, 0.0), 1.0);
    EXPECT_NEAR(doco::bound_thm2(D, G, S, 0.0, true, 1, 50),
                4 * D * G * std::sqrt(S) + 2 * G * D * std::sqrt(S) * std::log(2.0), 1e-12);
    EXPECT_EQ(doco::bracket_index(1.0, 3.0), 2.0);
}

TEST(BoundThm2, GrowsLikeRootSPlusPath)
{
    double lo = INFINITY, hi = 0.0;
    for (double S = 1; S <= 1e8; S *= 10)
        for (double P = 0; P <= 1e4; P = P * 10 + 1) {
            const double r = doco::bound_thm2(1.0, 1.0, S, P, true, 1, 1) / std::sqrt(S * (P + 1));
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
    EXPECT_GT(lo, 0.0);
    EXPECT_LT(hi / lo, 20.0);
}

TEST(DoublingBounds, ClosedForms)
{
    const double r2 = std::numbers::sqrt2;
    EXPECT_NEAR(doco::bound_dogd_dt(1, 1, 8, 2, true, 1, 8), 1.0 * 4.0 * 4.0 / (r2 - 1), 1e-12);
    // P = 0: floor(log2 1) = 0, so the lead is (2 ln 2 + 1) G D + 3 G D.
    EXPECT_NEAR(doco::bound_mild_dt(1, 1, 8, 0, true, 1, 8), (2 * std::log(2.0) + 4.0) * 4.0 / (r2 - 1), 1e-12);
}

TEST(BoundLower, Examples)
{
    EXPECT_NEAR(doco::bound_lower(1000, 1, 2, 1, 0), std::sqrt(2.0 * 2.0 * 1000.0) / (4 * std::numbers::sqrt2),
                1e-12);
    EXPECT_NEAR(doco::bound_lower(1000, 1, 2, 1, 0), 11.180339887498949, 1e-12);
    // L = ceil(100*1/50) = 2 < d = 5: trivial regime.
    EXPECT_NEAR(doco::bound_lower(100, 5, 1, 1, 50), 100.0 / (2 * std::numbers::sqrt2), 1e-12);
    EXPECT_NEAR(doco::bound_lemma3(1000, 1, 2, 1), 22.360679774997898, 1e-12);
    EXPECT_NEAR(doco::bound_lemma3(1000, 10, 2, 1), 1000.0 / std::sqrt(200.0), 1e-12);
    EXPECT_THROW(doco::bound_lower(0, 1, 1, 1, 0), std::invalid_argument);
}
