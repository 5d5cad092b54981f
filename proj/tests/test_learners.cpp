#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "doco/experiment.hpp"
#include "doco/invariants.hpp"

using doco::DecisionVector;
using doco::DelaySchedule;
using doco::FeasibleSet;
using doco::FeedbackItem;
using doco::LossFunction;
using doco::Round;

namespace {

FeedbackItem item(Round t, double g) { return {t, DecisionVector{g}, DecisionVector{0.0}}; }

std::vector<LossFunction> linear_1d(std::initializer_list<double> gs)
{
    std::vector<LossFunction> out;
    Round t = 1;
    for (double g : gs)
        out.push_back(LossFunction::linear({g}, t++));
    return out;
}

} // namespace

TEST(Ogd, StepExamples)
{
    const FeasibleSet box(1, 1.0);
    doco::Ogd a(box, 0.5);
    a.step(DecisionVector{1.0});
    EXPECT_DOUBLE_EQ(a.iterate()[0], -0.5);
    a.step(DecisionVector{0.0});
    EXPECT_DOUBLE_EQ(a.iterate()[0], -0.5);

    // Start from 0.9 by one step of size 0.9 against gradient -1.8, then clamp.
    doco::Ogd b(box, 0.5);
    b.step(DecisionVector{-1.8});
    EXPECT_DOUBLE_EQ(b.iterate()[0], 0.9);
    b.step(DecisionVector{-1.0});
    EXPECT_DOUBLE_EQ(b.iterate()[0], 1.0);
}

TEST(Dogd, PlayIsPureAndStartsAtOrigin)
{
    doco::Dogd d(FeasibleSet(2, 1.0), 0.3);
    EXPECT_EQ(d.play(1), DecisionVector::zeros(2));
    EXPECT_EQ(d.play(2), d.play(3));
    EXPECT_EQ(d.tau(), 1);
}

TEST(Dogd, HandSimulationTwoRounds)
{
    // g = (1, -1), d = (2, 1): both gradients arrive at round 2.
    doco::Dogd d(FeasibleSet(1, 1.0), 0.5);
    EXPECT_EQ(d.play(1)[0], 0.0);
    d.ingest(1, {});
    EXPECT_EQ(d.play(2)[0], 0.0);
    const FeedbackItem items[] = {item(1, 1.0), item(2, -1.0)};
    d.ingest(2, items);
    EXPECT_EQ(d.iterate()[0], 0.0);
    EXPECT_EQ(d.tau(), 3);
    EXPECT_EQ(d.c_log(), (std::vector<Round>{1, 2}));
}

TEST(Dogd, AfterOneGradientPlaysPostUpdateIterate)
{
    doco::Dogd d(FeasibleSet(1, 1.0), 0.5);
    const FeedbackItem one[] = {item(1, 1.0)};
    d.ingest(1, one);
    EXPECT_DOUBLE_EQ(d.play(2)[0], -0.5);
}

TEST(Dogd, EmptyIngestLeavesStateAndUnsortedInputThrows)
{
    doco::Dogd d(FeasibleSet(1, 1.0), 0.5);
    d.ingest(1, {});
    EXPECT_EQ(d.tau(), 1);
    EXPECT_TRUE(d.c_log().empty());
    const FeedbackItem unsorted[] = {item(2, 1.0), item(1, 1.0)};
    EXPECT_THROW(d.ingest(2, unsorted), std::invalid_argument);
}

TEST(Dogd, TauCountsIngestedGradients)
{
    doco::Rng rng(8);
    const auto sched = doco::inv::random_schedule(rng, 100, 10);
    const auto losses = doco::inv::random_linear_losses(rng, 2, sched.horizon(), 1.0);
    doco::Dogd d(FeasibleSet::from_diameter(2.0, 2), 0.1);
    doco::FeedbackQueue q;
    Round ingested = 0;
    for (Round t = 1; t <= sched.horizon(); ++t) {
        ASSERT_EQ(d.tau(), 1 + ingested);
        const auto out = doco::play_round(d, t, losses[static_cast<std::size_t>(t - 1)], sched, q);
        ingested += static_cast<Round>(out.arrived.size());
    }
}

TEST(Dogd, UnitDelaysReduceToOgdBitwise)
{
    doco::Rng rng(21);
    for (int s = 0; s < 30; ++s) {
        const Round T = rng.uniform_int(1, 200);
        const std::size_t n = static_cast<std::size_t>(rng.uniform_int(1, 4));
        const auto set = FeasibleSet::from_diameter(rng.uniform(0.5, 3.0), n);
        const double eta = rng.uniform(0.01, 1.0);
        const auto losses = doco::inv::random_linear_losses(rng, n, T, 1.0);
        const auto sched = doco::make_schedule(doco::ConstantDelay{1}, T, 0);
        doco::Ogd ogd(set, eta);
        doco::Dogd dogd(set, eta);
        ASSERT_EQ(doco::drive(ogd, losses, sched).decisions(), doco::drive(dogd, losses, sched).decisions());
    }
}

TEST(Dogd, ConsumptionLogIsPermutationAndIdentityWhenInOrder)
{
    doco::Rng rng(31);
    for (int s = 0; s < 300; ++s) {
        const bool ordered = s % 2 == 0;
        const auto sched = ordered ? doco::inv::random_in_order_schedule(rng) : doco::inv::random_schedule(rng);
        const auto losses = doco::inv::random_linear_losses(rng, 1, sched.horizon(), 1.0);
        doco::Dogd d(FeasibleSet(1, 1.0), 0.2);
        const auto trace = doco::drive(d, losses, sched);
        ASSERT_TRUE(trace.c_log.has_value());
        if (doco::is_in_order(sched)) {
            std::vector<Round> id(static_cast<std::size_t>(sched.horizon()));
            std::iota(id.begin(), id.end(), Round{1});
            ASSERT_EQ(*trace.c_log, id);
        }
    }
}

TEST(CorollaryRate, Examples)
{
    EXPECT_DOUBLE_EQ(doco::corollary_lr(2.0, 1.0, 4.0), 1.0);
    EXPECT_DOUBLE_EQ(doco::corollary_lr(1.0, 1.0, 1.0), 1.0);
    EXPECT_DOUBLE_EQ(doco::corollary_lr(1.0, 2.0, 100.0), 0.05);
    EXPECT_THROW(doco::corollary_lr(0.0, 1.0, 1.0), std::invalid_argument);
}

TEST(MildGrid, Examples)
{
    EXPECT_EQ(doco::mild_lr_grid(1.0, 1.0, 16.0, 15), (std::vector<double>{0.25, 0.5, 1.0}));
    EXPECT_EQ(doco::mild_grid_size(1), 2);
    EXPECT_EQ(doco::mild_lr_grid(2.0, 1.0, 4.0, 15), (std::vector<double>{1.0, 2.0, 4.0}));
}

TEST(MildGrid, SizeMatchesFloatingFormulaAwayFromPowers)
{
    for (Round T = 1; T <= 5000; ++T)
        EXPECT_EQ(doco::mild_grid_size(T), static_cast<int>(std::ceil(0.5 * std::log2(double(T + 1)))) + 1) << T;
}

TEST(InitWeights, Examples)
{
    const auto w3 = doco::init_weights(3);
    EXPECT_NEAR(w3[0], 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(w3[1], 2.0 / 9.0, 1e-15);
    EXPECT_NEAR(w3[2], 1.0 / 9.0, 1e-15);
    EXPECT_EQ(doco::init_weights(1), (std::vector<double>{1.0}));
    EXPECT_EQ(doco::init_weights(2), (std::vector<double>{0.75, 0.25}));
    for (int N = 1; N < 40; ++N) {
        const auto w = doco::init_weights(N);
        EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-12);
    }
}

TEST(MetaPlay, Examples)
{
    const std::vector<DecisionVector> two{DecisionVector{1.0}, DecisionVector{-1.0}};
    EXPECT_DOUBLE_EQ(doco::meta_play(std::vector<double>{0.5, 0.5}, two)[0], 0.0);
    const std::vector<DecisionVector> one{DecisionVector{0.3, -0.2}};
    EXPECT_EQ(doco::meta_play(std::vector<double>{1.0}, one), one[0]);
    const std::vector<DecisionVector> pair{DecisionVector{0.3}, DecisionVector{0.9}};
    EXPECT_NEAR(doco::meta_play(std::vector<double>{2.0 / 3.0, 1.0 / 3.0}, pair)[0], 0.5, 1e-15);
    EXPECT_THROW(doco::meta_play(std::vector<double>{1.0}, pair), std::invalid_argument);
}

TEST(DelayedHedge, Examples)
{
    const std::vector<double> w{0.5, 0.5};
    const auto u = doco::delayed_hedge_update(w, 1.0, std::vector<double>{0.0, std::log(2.0)});
    EXPECT_NEAR(u[0], 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(u[1], 1.0 / 3.0, 1e-15);
    const std::vector<double> w2{0.7, 0.3};
    const auto same = doco::delayed_hedge_update(w2, 2.0, std::vector<double>{0.4, 0.4});
    EXPECT_NEAR(same[0], 0.7, 1e-15);
    EXPECT_NEAR(same[1], 0.3, 1e-15);
}

TEST(DelayedHedge, StableForHugeLosses)
{
    const auto u = doco::delayed_hedge_update(std::vector<double>{0.5, 0.5}, 1.0, std::vector<double>{1e6, 1e6 + 1.0});
    EXPECT_NEAR(u[0], 1.0 / (1.0 + std::exp(-1.0)), 1e-12);
    EXPECT_NEAR(u[0] + u[1], 1.0, 1e-12);
}

TEST(MildOgd, EmptyArrivalOnlyPlays)
{
    doco::MildOgd m(FeasibleSet(1, 1.0), 1.0, {0.5, 1.0});
    const auto w = m.weights();
    m.play(1);
    m.ingest(1, {});
    EXPECT_EQ(m.weights(), w);
    EXPECT_EQ(m.experts()[0].tau(), 1);
    EXPECT_EQ(m.pending_history(), 1u);
}

TEST(MildOgd, HandSimulationTwoExperts)
{
    // K = [-1, 1], g = (1, -1, 1), d = 1, alpha = 1, grid (0.5, 1).
    const FeasibleSet box(1, 1.0);
    doco::MildOgd m(box, 1.0, {0.5, 1.0});
    const auto losses = linear_1d({1.0, -1.0, 1.0});
    const auto sched = doco::make_schedule(doco::ConstantDelay{1}, 3, 0);
    doco::FeedbackQueue q;

    auto r1 = doco::play_round(m, 1, losses[0], sched, q);
    EXPECT_EQ(r1.played[0], 0.0);
    EXPECT_DOUBLE_EQ(m.weights()[0], 0.75);
    EXPECT_DOUBLE_EQ(m.weights()[1], 0.25);
    EXPECT_DOUBLE_EQ(m.experts()[0].iterate()[0], -0.5);
    EXPECT_DOUBLE_EQ(m.experts()[1].iterate()[0], -1.0);

    auto r2 = doco::play_round(m, 2, losses[1], sched, q);
    const double x2 = 0.75 * -0.5 + 0.25 * -1.0;
    EXPECT_DOUBLE_EQ(r2.played[0], x2);
    // Surrogate l_2(x) = -(x - x2) at the experts' plays.
    const double a = 0.75 * std::exp(-(-(-0.5 - x2)));
    const double b = 0.25 * std::exp(-(-(-1.0 - x2)));
    EXPECT_NEAR(m.weights()[0], a / (a + b), 1e-15);
    EXPECT_NEAR(m.weights()[1], b / (a + b), 1e-15);
    EXPECT_DOUBLE_EQ(m.experts()[0].iterate()[0], 0.0);
    EXPECT_DOUBLE_EQ(m.experts()[1].iterate()[0], 0.0);
}

TEST(MildOgd, SingleExpertIsDogd)
{
    doco::Rng rng(4);
    const auto set = FeasibleSet::from_diameter(2.0, 3);
    const auto losses = doco::inv::random_linear_losses(rng, 3, 150, 1.0);
    const auto sched = doco::make_schedule(doco::ConstantDelay{1}, 150, 0);
    doco::MildOgd m(set, 0.7, {0.05});
    doco::Dogd d(set, 0.05);
    const auto a = doco::drive(m, losses, sched).decisions();
    const auto b = doco::drive(d, losses, sched).decisions();
    ASSERT_EQ(a, b);
}

TEST(MildOgd, TunedParameters)
{
    const auto set = FeasibleSet::from_diameter(2.0, 1);
    const auto m = doco::MildOgd::tuned(set, 2.0, 1.0, 15, 4.0);
    EXPECT_EQ(m.lr_grid(), (std::vector<double>{1.0, 2.0, 4.0}));
    EXPECT_DOUBLE_EQ(m.alpha(), 1.0 / (1.0 * 2.0 * 2.0));
    EXPECT_EQ(m.weights().size(), 3u);
}

TEST(MildOgd, WeightsStayOnSimplexAndQueriesEqualHorizon)
{
    doco::Rng rng(17);
    for (int s = 0; s < 30; ++s) {
        const auto sched = doco::inv::random_schedule(rng, 200, 15);
        const std::size_t n = static_cast<std::size_t>(rng.uniform_int(1, 3));
        const auto set = FeasibleSet::from_diameter(2.0, n);
        const auto losses = doco::inv::random_linear_losses(rng, n, sched.horizon(), 1.0);
        auto m = doco::MildOgd::tuned(set, 2.0, 1.0, sched.horizon(), double(doco::backlog_sum(sched)));
        const auto trace = doco::drive(m, losses, sched);
        ASSERT_LE(*trace.max_weight_sum_error, 1e-9);
        for (double w : m.weights())
            ASSERT_GE(w, 0.0);
        ASSERT_EQ(trace.gradient_queries, static_cast<std::size_t>(sched.horizon()));
        ASSERT_TRUE(trace.c_log.has_value());
        ASSERT_EQ(m.pending_history(), 0u);
    }
}

TEST(MildOgd, CorruptedNormalizationIsDetected)
{
    doco::Rng rng(1);
    const auto sched = doco::make_schedule(doco::ConstantDelay{2}, 50, 0);
    const auto set = FeasibleSet(1, 1.0);
    const auto losses = doco::inv::random_linear_losses(rng, 1, 50, 1.0);
    doco::MildOgd m(set, 0.5, {0.1, 0.2}, doco::MildOptions{true});
    const auto trace = doco::drive(m, losses, sched);
    EXPECT_GT(*trace.max_weight_sum_error, 1e-9);
}

TEST(Learners, AllPlaysFeasible)
{
    doco::Rng rng(77);
    for (int s = 0; s < 20; ++s) {
        const auto sched = doco::inv::random_schedule(rng, 150, 12);
        const std::size_t n = static_cast<std::size_t>(rng.uniform_int(1, 4));
        const auto set = FeasibleSet::from_diameter(1.5, n);
        const auto losses = doco::inv::random_linear_losses(rng, n, sched.horizon(), 2.0);
        for (auto kind : {doco::LearnerKind::ogd, doco::LearnerKind::dogd, doco::LearnerKind::dogd_dt,
                          doco::LearnerKind::mild, doco::LearnerKind::mild_dt}) {
            auto built = doco::make_learner({kind, {}, {}, {}}, set, 1.5, 2.0, sched);
            for (const auto& row : doco::drive(built.learner, losses, sched).rows)
                ASSERT_TRUE(set.contains(row.x)) << doco::to_string(kind);
        }
    }
}
