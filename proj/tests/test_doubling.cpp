#include <gtest/gtest.h>

#include <cmath>

#include "doco/experiment.hpp"
#include "doco/invariants.hpp"

using doco::EpochController;
using doco::EpochDecision;
using doco::FeasibleSet;
using doco::Round;

namespace {

std::vector<Round> unit_delay_starts(Round T)
{
    std::vector<Round> s;
    for (Round k = 1; (Round{1} << k) - 1 <= T; ++k)
        s.push_back((Round{1} << k) - 1);
    return s;
}

} // namespace

TEST(EpochController, UnitDelaysRestartAtClosedForm)
{
    EpochController c;
    for (Round t = 1; t <= 5000; ++t) {
        c.begin_round(t);
        // B counts rounds since the epoch start.
        ASSERT_EQ(c.statistic(), t - c.epoch_start() + 1);
        c.record_arrivals(1);
    }
    EXPECT_EQ(c.epoch_starts(), unit_delay_starts(5000));
}

TEST(EpochController, FirstRoundOfEpochContinues)
{
    EpochController c;
    EXPECT_FALSE(c.begin_round(1));
    EXPECT_EQ(c.statistic(), 1);
    const std::vector<Round> none;
    EXPECT_EQ(doco::doubling_check(c, 1, none), EpochDecision::keep);
}

TEST(EpochController, HandEvaluationTwoRounds)
{
    // d = (2, 1): nothing arrives in round 1, so B = 1 + 2 = 3 > 2 at round 2.
    EpochController c;
    c.begin_round(1);
    const std::vector<Round> counts{0};
    EXPECT_EQ(doco::epoch_statistic(1, 2, counts), 3);
    EXPECT_EQ(doco::doubling_check(c, 2, counts), EpochDecision::restart);
    c.record_arrivals(0);
    EXPECT_TRUE(c.begin_round(2));
    EXPECT_EQ(c.epoch(), 2);
    EXPECT_EQ(c.epoch_start(), 2);
    EXPECT_EQ(c.history().back().candidate, 3);
}

TEST(EpochController, TieAtBudgetContinues)
{
    // Epoch 1 budget is 2; with unit arrivals B reaches exactly 2 at round 2.
    EpochController c;
    c.begin_round(1);
    c.record_arrivals(1);
    EXPECT_FALSE(c.begin_round(2));
    EXPECT_EQ(c.statistic(), 2);
}

TEST(EpochController, AcceptsOnlyCurrentEpochTimestamps)
{
    EpochController c;
    c.begin_round(1);
    c.record_arrivals(0);
    c.begin_round(2);
    EXPECT_FALSE(c.accepts(1));
    EXPECT_TRUE(c.accepts(2));
}

TEST(EpochBudget, RangeChecked)
{
    EXPECT_EQ(doco::epoch_budget(1), 2);
    EXPECT_EQ(doco::epoch_budget(10), 1024);
    EXPECT_THROW(doco::epoch_budget(0), std::out_of_range);
}

TEST(DoublingRates, Examples)
{
    EXPECT_DOUBLE_EQ(doco::dogd_dt_lr(1.0, 1.0, 2), 0.5);
    EXPECT_NEAR(doco::dogd_dt_lr(std::sqrt(2.0), 1.0, 1), 1.0, 1e-15);
    for (Round v = 1; v < 20; ++v)
        EXPECT_NEAR(doco::dogd_dt_lr(1.3, 0.7, v + 2), 0.5 * doco::dogd_dt_lr(1.3, 0.7, v), 1e-15);
    const auto p = doco::mild_dt_params(1.0, 1.0, 15, 2);
    EXPECT_DOUBLE_EQ(p.alpha, 0.5);
    EXPECT_EQ(p.lr_constants.size(), 3u);
    EXPECT_DOUBLE_EQ(p.expert_rates[0], 0.5);
    EXPECT_DOUBLE_EQ(p.expert_rates[2], 2.0);
}

TEST(DogdDoublingTrick, RestartsFromOriginWithHalvedSchedule)
{
    const FeasibleSet box(1, 1.0);
    doco::DogdDoublingTrick dt(box, 2.0, 1.0);
    const auto sched = doco::make_schedule(doco::ConstantDelay{1}, 20, 0);
    std::vector<doco::LossFunction> losses;
    for (Round t = 1; t <= 20; ++t)
        losses.push_back(doco::LossFunction::linear({1.0}, t));
    const auto trace = doco::drive(dt, losses, sched);
    EXPECT_EQ(trace.epoch_starts, (std::vector<Round>{1, 3, 7, 15}));
    // Each epoch opens at the origin.
    for (Round s : trace.epoch_starts)
        EXPECT_EQ(trace.rows[static_cast<std::size_t>(s - 1)].x[0], 0.0);
    EXPECT_DOUBLE_EQ(dt.eta(), doco::dogd_dt_lr(2.0, 1.0, 4));
    EXPECT_EQ(trace.dropped, 0);
}

TEST(DogdDoublingTrick, DropsPreEpochFeedback)
{
    // Constant delay 5: early gradients are still in flight at the first restart.
    const FeasibleSet box(1, 1.0);
    doco::DogdDoublingTrick dt(box, 2.0, 1.0);
    const auto sched = doco::make_schedule(doco::ConstantDelay{5}, 40, 0);
    std::vector<doco::LossFunction> losses;
    for (Round t = 1; t <= 40; ++t)
        losses.push_back(doco::LossFunction::linear({t % 2 ? 1.0 : -1.0}, t));
    const auto trace = doco::drive(dt, losses, sched);
    EXPECT_GT(trace.dropped, 0);
    EXPECT_FALSE(trace.c_log.has_value());
    EXPECT_EQ(trace.gradient_queries, 40u);
}

TEST(DoublingTrick, EpochStatisticMatchesRecomputation)
{
    doco::Rng rng(99);
    for (int s = 0; s < 100; ++s) {
        const auto sched = doco::inv::random_schedule(rng, 150, 20);
        const auto losses = doco::inv::random_linear_losses(rng, 1, sched.horizon(), 1.0);
        doco::DogdDoublingTrick dt(FeasibleSet(1, 1.0), 2.0, 1.0);
        doco::drive(dt, losses, sched);
        const auto F = doco::feedback_sets(sched);
        const auto& ctrl = dt.controller();
        for (const auto& r : ctrl.history()) {
            ASSERT_LE(r.statistic, doco::epoch_budget(r.epoch));
            const Round start = ctrl.epoch_starts()[static_cast<std::size_t>(r.epoch - 1)];
            std::vector<Round> counts;
            for (Round i = start; i < r.t; ++i)
                counts.push_back(
                    static_cast<Round>(doco::epoch_feedback_sets(sched, start, i).size()));
            ASSERT_EQ(doco::epoch_statistic(start, r.t, counts), r.statistic);
            if (r.t == start && r.epoch > 1)
                ASSERT_GT(r.candidate, doco::epoch_budget(r.epoch - 1));
        }
    }
}

TEST(MildOgdDoublingTrick, SharedRestartsAndSimplexAcrossEpochs)
{
    doco::Rng rng(5);
    for (int s = 0; s < 20; ++s) {
        const auto sched = doco::inv::random_schedule(rng, 300, 10);
        const auto losses = doco::inv::random_linear_losses(rng, 2, sched.horizon(), 1.0);
        const auto set = FeasibleSet::from_diameter(2.0, 2);
        doco::MildOgdDoublingTrick m(set, 2.0, 1.0, sched.horizon());
        doco::DogdDoublingTrick d(set, 2.0, 1.0);
        const auto tm = doco::drive(m, losses, sched);
        const auto td = doco::drive(d, losses, sched);
        // Restarts depend on the schedule only, so both variants agree.
        ASSERT_EQ(tm.epoch_starts, td.epoch_starts);
        ASSERT_LE(*tm.max_weight_sum_error, 1e-9);
        const auto p = doco::mild_dt_params(2.0, 1.0, sched.horizon(), m.controller().epoch());
        ASSERT_DOUBLE_EQ(m.meta().alpha(), p.alpha);
        ASSERT_EQ(m.meta().lr_grid(), p.expert_rates);
    }
}
