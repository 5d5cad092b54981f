#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "experiment.hpp"
#include "output.hpp"

namespace doco {

struct InvariantResult {
    std::string name;
    bool passed = true;
    std::string detail;
};

struct VerifyOptions {
    std::uint64_t seed = 20240501;
    /// How many random schedules / instances each property samples.
    int samples = 200;
    /// Test hook: skew the Hedge normalization so the weight-simplex check must fail.
    bool corrupt_hedge_normalization = false;
};

namespace inv {

/// Random schedule mixing every generator family (T <= max_T, d <= max_d).
inline DelaySchedule random_schedule(Rng& rng, Round max_T = 200, Round max_d = 20)
{
    const Round T = rng.uniform_int(1, max_T);
    const Round d = rng.uniform_int(1, max_d);
    switch (rng.uniform_int(0, 3)) {
    case 0: return make_schedule(ConstantDelay{d}, T, rng);
    case 1: return make_schedule(UniformDelay{1, d}, T, rng);
    case 2: return make_schedule(LowerBoundBlocks{d}, T, rng);
    default: return make_schedule(PermutedDelay{d}, T, rng);
    }
}

/// Random schedule with nondecreasing arrival rounds.
inline DelaySchedule random_in_order_schedule(Rng& rng, Round max_T = 200, Round max_d = 20)
{
    const Round T = rng.uniform_int(1, max_T);
    const Round d = rng.uniform_int(1, max_d);
    std::vector<Round> delays(static_cast<std::size_t>(T));
    Round prev_arrival = 0;
    for (Round t = 1; t <= T; ++t) {
        const Round lo = std::max(t, prev_arrival);
        const Round hi = t + d - 1;
        const Round arrival = lo > hi ? lo : rng.uniform_int(lo, hi);
        delays[static_cast<std::size_t>(t - 1)] = arrival - t + 1;
        prev_arrival = arrival;
    }
    return DelaySchedule(std::move(delays));
}

inline DecisionVector random_point(Rng& rng, std::size_t n, double lo, double hi)
{
    std::vector<double> c(n);
    for (auto& x : c)
        x = rng.uniform(lo, hi);
    return DecisionVector(std::move(c));
}

/// Random linear losses with ||g|| = G exactly.
inline std::vector<LossFunction> random_linear_losses(Rng& rng, std::size_t n, Round T, double G)
{
    std::vector<LossFunction> out;
    for (Round t = 1; t <= T; ++t) {
        std::vector<double> g(n);
        double norm = 0.0;
        do {
            norm = 0.0;
            for (auto& c : g) {
                c = rng.normal();
                norm += c * c;
            }
            norm = std::sqrt(norm);
        } while (norm == 0.0);
        for (auto& c : g)
            c *= G / norm;
        out.push_back(LossFunction::linear(DecisionVector(std::move(g)), t));
    }
    return out;
}

class Recorder {
public:
    explicit Recorder(std::string name) { r_.name = std::move(name); }

    /// Records the first failure only.
    void check(bool ok, const std::function<std::string()>& what)
    {
        if (!ok && r_.passed) {
            r_.passed = false;
            r_.detail = what();
        }
    }

    bool failed() const { return !r_.passed; }
    InvariantResult done() { return std::move(r_); }

private:
    InvariantResult r_;
};

inline std::string str(double x) { return format_double(x); }

} // namespace inv

// ---------------------------------------------------------------------------
// Geometry

inline InvariantResult check_projection(const VerifyOptions& o)
{
    inv::Recorder rec("projection: nearest point, idempotent, diameter");
    Rng rng(o.seed ^ 0x11);
    for (int s = 0; s < o.samples && !rec.failed(); ++s) {
        const std::size_t n = static_cast<std::size_t>(rng.uniform_int(1, 8));
        const FeasibleSet set = FeasibleSet::from_diameter(rng.uniform(0.1, 10.0), n);
        const double h = set.half_width();
        const DecisionVector p = inv::random_point(rng, n, -3.0 * h, 3.0 * h);
        const DecisionVector proj = set.project(p);
        rec.check(set.contains(proj), [] { return "projection left the set"; });
        rec.check(set.project(proj) == proj, [] { return "projection not idempotent bitwise"; });
        const double dp = distance(proj, p);
        for (int k = 0; k < 20; ++k) {
            const DecisionVector q = inv::random_point(rng, n, -h, h);
            rec.check(dp <= distance(q, p) + 1e-12, [&] { return "a sampled point is closer than the projection"; });
            const DecisionVector q2 = inv::random_point(rng, n, -h, h);
            rec.check(distance(q, q2) <= set.diameter() + 1e-12, [] { return "two set points exceed the diameter"; });
        }
    }
    return rec.done();
}

// ---------------------------------------------------------------------------
// Losses

inline InvariantResult check_gradients(const VerifyOptions& o)
{
    inv::Recorder rec("losses: gradients match central differences");
    Rng rng(o.seed ^ 0x22);
    const double G = 1.0;
    for (int s = 0; s < 100 && !rec.failed(); ++s) {
        const std::size_t n = static_cast<std::size_t>(rng.uniform_int(1, 6));
        const FeasibleSet set = FeasibleSet::from_diameter(2.0, n);
        const double h = set.half_width();
        const DecisionVector x = inv::random_point(rng, n, -0.9 * h, 0.9 * h);
        std::vector<int> signs(n);
        for (auto& w : signs)
            w = rng.sign();
        const LossFunction fs[] = {
            LossFunction::linear(inv::random_point(rng, n, -1.0, 1.0)),
            LossFunction::quadratic(inv::random_point(rng, n, -h, h), bounded_quadratic_scale(set, G)),
            LossFunction::sign_linear(signs, G),
        };
        for (const auto& f : fs) {
            const DecisionVector g = f.gradient(x);
            for (std::size_t i = 0; i < n; ++i) {
                const double step = 1e-5;
                DecisionVector up = x, dn = x;
                up[i] += step;
                dn[i] -= step;
                const double fd = (f.value(up) - f.value(dn)) / (2.0 * step);
                const double rel = std::abs(fd - g[i]) / std::max(1.0, std::abs(g[i]));
                rec.check(rel <= 1e-6, [&] { return "finite-difference mismatch, rel error " + inv::str(rel); });
            }
        }
    }
    return rec.done();
}

inline InvariantResult check_surrogates(const VerifyOptions& o)
{
    inv::Recorder rec("losses: surrogate anchoring and range");
    Rng rng(o.seed ^ 0x33);
    for (int s = 0; s < o.samples && !rec.failed(); ++s) {
        const std::size_t n = static_cast<std::size_t>(rng.uniform_int(1, 6));
        const double D = rng.uniform(0.5, 5.0);
        const double G = rng.uniform(0.5, 5.0);
        const FeasibleSet set = FeasibleSet::from_diameter(D, n);
        const double h = set.half_width();
        const auto g = inv::random_linear_losses(rng, n, 1, G).front().gradient(DecisionVector::zeros(n));
        const DecisionVector anchor = inv::random_point(rng, n, -h, h);
        const DecisionVector x = inv::random_point(rng, n, -h, h);
        const SurrogateLoss sl = make_surrogate(g, anchor, 1);
        rec.check(sl.value(anchor) == 0.0, [] { return "surrogate is nonzero at its anchor"; });
        rec.check(sl.gradient(x) == g, [] { return "surrogate gradient differs from the anchor gradient"; });
        rec.check(std::abs(sl.value(x)) <= G * D + 1e-9, [] { return "surrogate exceeds G D"; });
    }
    return rec.done();
}

// ---------------------------------------------------------------------------
// Delay

inline InvariantResult check_schedules(const VerifyOptions& o)
{
    inv::Recorder rec("delay: partition, in-order delivery, backlog identities");
    Rng rng(o.seed ^ 0x44);
    for (int s = 0; s < o.samples && !rec.failed(); ++s) {
        const DelaySchedule sched = s % 2 ? inv::random_schedule(rng) : inv::random_in_order_schedule(rng);
        const Round T = sched.horizon();
        const auto F = feedback_sets(sched);
        std::vector<int> seen(static_cast<std::size_t>(T), 0);
        std::vector<Round> concatenated;
        for (const auto& f : F)
            for (Round k : f) {
                ++seen[static_cast<std::size_t>(k - 1)];
                concatenated.push_back(k);
            }
        rec.check(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }),
                  [] { return "feedback sets do not partition 1..T"; });
        if (is_in_order(sched)) {
            bool identity = true;
            for (std::size_t i = 0; i < concatenated.size(); ++i)
                identity = identity && concatenated[i] == static_cast<Round>(i + 1);
            rec.check(identity, [] { return "in-order schedule delivered out of order"; });
        }
        const auto m = backlog(sched);
        for (Round t = 1; t <= T; ++t) {
            Round live = 0;
            for (Round k = 1; k < t; ++k)
                live += (k + sched.delay(k) - 1 >= t) ? 1 : 0;
            rec.check(m[static_cast<std::size_t>(t - 1)] - 1 == live,
                      [&] { return "m_t - 1 differs from the live backlog at t=" + std::to_string(t); });
        }
        const Round sum_m = backlog_sum(sched);
        rec.check(1 <= sum_m && sum_m <= sched.total_delay() && sched.total_delay() <= sched.max_delay() * T,
                  [] { return "1 <= sum m_t <= S <= dT violated"; });
    }
    for (Round d : {1, 3, 7}) {
        const DelaySchedule sched = make_schedule(LowerBoundBlocks{d}, 50, 0);
        for (Round t = 1; t <= 50; ++t)
            rec.check(sched.arrival(t) == std::min(((t - 1) / d + 1) * d, Round{50}),
                      [&] { return "block gradient not delivered at its block end"; });
    }
    return rec.done();
}

// ---------------------------------------------------------------------------
// Learners

inline InvariantResult check_learner_traces(const VerifyOptions& o)
{
    inv::Recorder rec("learners: feasibility, permutation, in-order identity, gradient reuse");
    Rng rng(o.seed ^ 0x55);
    for (int s = 0; s < o.samples / 2 && !rec.failed(); ++s) {
        const bool in_order_case = s % 2 == 0;
        const DelaySchedule sched = in_order_case ? inv::random_in_order_schedule(rng, 120, 12)
                                                  : inv::random_schedule(rng, 120, 12);
        const Round T = sched.horizon();
        const std::size_t n = static_cast<std::size_t>(rng.uniform_int(1, 4));
        const double D = 2.0, G = 1.0;
        const FeasibleSet set = FeasibleSet::from_diameter(D, n);
        const auto losses = inv::random_linear_losses(rng, n, T, G);
        const auto comparators = constant_comparators(set.origin(), T);
        for (LearnerKind kind : {LearnerKind::dogd, LearnerKind::mild, LearnerKind::dogd_dt, LearnerKind::mild_dt}) {
            auto built = make_learner({kind, {}, {}, {}}, set, D, G, sched);
            const RunTrace trace = drive(built.learner, losses, sched);
            for (const auto& row : trace.rows)
                rec.check(set.contains(row.x), [&] { return to_string(kind) + " played outside the set"; });
            rec.check(trace.gradient_queries == static_cast<std::size_t>(T),
                      [&] { return to_string(kind) + " queried " + std::to_string(trace.gradient_queries) +
                                   " gradients for T=" + std::to_string(T); });
            const auto m = backlog(sched);
            for (std::size_t i = 0; i < trace.rows.size(); ++i)
                rec.check(trace.rows[i].m == m[i], [] { return "trace m_t differs from the recomputed backlog"; });
            if (kind == LearnerKind::dogd || kind == LearnerKind::mild) {
                rec.check(trace.c_log.has_value(),
                          [&] { return to_string(kind) + ": c_log is not a permutation of 1..T after the flush"; });
                if (trace.c_log && is_in_order(sched)) {
                    bool identity = true;
                    for (Round t = 1; t <= T; ++t)
                        identity = identity && (*trace.c_log)[static_cast<std::size_t>(t - 1)] == t;
                    rec.check(identity, [&] { return to_string(kind) + ": in-order schedule but c_log != identity"; });
                    rec.check(joint_effect(*trace.c_log, comparators) == 0.0,
                              [] { return "in-order joint effect is not exactly 0"; });
                }
            }
        }
    }
    return rec.done();
}

inline InvariantResult check_ogd_reduction(const VerifyOptions& o)
{
    inv::Recorder rec("learners: unit delays reduce DOGD to OGD bitwise");
    Rng rng(o.seed ^ 0x66);
    for (int s = 0; s < 50 && !rec.failed(); ++s) {
        const Round T = rng.uniform_int(1, 300);
        const std::size_t n = static_cast<std::size_t>(rng.uniform_int(1, 6));
        const FeasibleSet set = FeasibleSet::from_diameter(rng.uniform(0.5, 4.0), n);
        const double eta = rng.uniform(0.01, 2.0);
        const auto losses = inv::random_linear_losses(rng, n, T, 1.0);
        const DelaySchedule sched = make_schedule(ConstantDelay{1}, T, 0);
        Ogd ogd(set, eta);
        Dogd dogd(set, eta);
        const auto a = drive(ogd, losses, sched).decisions();
        const auto b = drive(dogd, losses, sched).decisions();
        rec.check(a == b, [] { return "decision sequences differ"; });
    }
    return rec.done();
}

inline InvariantResult check_weight_simplex(const VerifyOptions& o)
{
    inv::Recorder rec("mild: Hedge weights stay on the simplex");
    Rng rng(o.seed ^ 0x77);
    const MildOptions mild{o.corrupt_hedge_normalization};
    for (int s = 0; s < 20 && !rec.failed(); ++s) {
        const DelaySchedule sched = inv::random_schedule(rng, 200, 10);
        const std::size_t n = static_cast<std::size_t>(rng.uniform_int(1, 4));
        const FeasibleSet set = FeasibleSet::from_diameter(2.0, n);
        const auto losses = inv::random_linear_losses(rng, n, sched.horizon(), 1.0);
        for (LearnerKind kind : {LearnerKind::mild, LearnerKind::mild_dt}) {
            auto built = make_learner({kind, {}, {}, {}}, set, 2.0, 1.0, sched, mild);
            const RunTrace trace = drive(built.learner, losses, sched);
            const double err = trace.max_weight_sum_error.value_or(std::numeric_limits<double>::infinity());
            rec.check(err <= 1e-9, [&] { return to_string(kind) + ": |sum w - 1| reached " + inv::str(err); });
        }
    }
    return rec.done();
}

inline InvariantResult check_epochs(const VerifyOptions& o)
{
    inv::Recorder rec("doubling: epoch statistic stays within budget and triggers restarts");
    Rng rng(o.seed ^ 0x88);
    for (int s = 0; s < o.samples / 4 && !rec.failed(); ++s) {
        const DelaySchedule sched = inv::random_schedule(rng, 200, 20);
        const Round T = sched.horizon();
        const FeasibleSet set = FeasibleSet::from_diameter(2.0, 1);
        const auto losses = inv::random_linear_losses(rng, 1, T, 1.0);
        DogdDoublingTrick learner(set, 2.0, 1.0);
        drive(learner, losses, sched);
        const auto F = feedback_sets(sched);
        const auto& hist = learner.controller().history();
        for (const auto& rec_row : hist) {
            rec.check(rec_row.statistic <= epoch_budget(rec_row.epoch),
                      [&] { return "B exceeds 2^v at round " + std::to_string(rec_row.t); });
            const Round start = learner.controller().epoch_starts()[static_cast<std::size_t>(rec_row.epoch - 1)];
            if (rec_row.t == start && rec_row.epoch > 1)
                rec.check(rec_row.candidate > epoch_budget(rec_row.epoch - 1),
                          [&] { return "restart at round " + std::to_string(rec_row.t) + " without B > 2^v"; });
            // From-scratch recomputation of B over epoch-filtered arrivals.
            std::vector<Round> counts;
            for (Round i = start; i < rec_row.t; ++i) {
                Round c = 0;
                for (Round k : F[static_cast<std::size_t>(i - 1)])
                    c += k >= start ? 1 : 0;
                counts.push_back(c);
            }
            rec.check(epoch_statistic(start, rec_row.t, counts) == rec_row.statistic,
                      [&] { return "running B differs from the recomputation at round " + std::to_string(rec_row.t); });
        }
    }
    // Unit delays: starts at 2^k - 1.
    const DelaySchedule unit = make_schedule(ConstantDelay{1}, 1000, 0);
    DogdDoublingTrick dt(FeasibleSet::from_diameter(2.0, 1), 2.0, 1.0);
    drive(dt, inv::random_linear_losses(rng, 1, 1000, 1.0), unit);
    std::vector<Round> expected;
    for (Round k = 1; (Round{1} << k) - 1 <= 1000; ++k)
        expected.push_back((Round{1} << k) - 1);
    rec.check(dt.controller().epoch_starts() == expected, [] { return "unit-delay epoch starts are not 2^k - 1"; });
    return rec.done();
}

// ---------------------------------------------------------------------------
// Environments

inline InvariantResult check_environments(const VerifyOptions& o)
{
    inv::Recorder rec("environments: path budgets, instance gradients, vertex optimum");
    Rng rng(o.seed ^ 0x99);
    for (int s = 0; s < 50 && !rec.failed(); ++s) {
        const Round T = rng.uniform_int(1, 300);
        const std::size_t n = static_cast<std::size_t>(rng.uniform_int(1, 4));
        const double D = rng.uniform(0.5, 4.0);
        const FeasibleSet set = FeasibleSet::from_diameter(D, n);
        for (double P : {0.0, 0.5 * D, D, 3.0 * D, 17.0 * D}) {
            const Round L = block_length_for_path(T, D, P);
            std::vector<DecisionVector> anchors;
            for (Round z = 0; z < block_count(T, L); ++z)
                anchors.push_back(inv::random_point(rng, n, -set.half_width(), set.half_width()));
            const auto c = make_piecewise_comparators(set, T, L, anchors);
            rec.check(path_length(c) <= P + 1e-9,
                      [&] { return "piecewise comparators exceed their path budget " + inv::str(P); });
        }
    }
    for (int s = 0; s < 100 && !rec.failed(); ++s) {
        const std::size_t n = static_cast<std::size_t>(rng.uniform_int(1, 10));
        const Round d = rng.uniform_int(1, 10);
        const Round T = rng.uniform_int(1, 60);
        const auto inst = make_lowerbound_instance(T, d, 2.0, 1.0, n, rng.bits());
        const auto losses = inst.losses();
        for (const auto& f : losses)
            rec.check(std::abs(norm2(f.gradient(inst.set().origin())) - 1.0) <= 1e-12,
                      [] { return "lower-bound gradient norm differs from G"; });
        double best = std::numeric_limits<double>::infinity();
        const double h = inst.set().half_width();
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
            std::vector<double> v(n);
            for (std::size_t i = 0; i < n; ++i)
                v[i] = (mask >> i) & 1 ? h : -h;
            const DecisionVector x(std::move(v));
            double total = 0.0;
            for (const auto& f : losses)
                total += f.value(x);
            best = std::min(best, total);
        }
        const double closed = best_fixed_decision(inst).total_loss;
        rec.check(std::abs(closed - best) <= 1e-9 * std::max(1.0, std::abs(best)),
                  [&] { return "vertex enumeration " + inv::str(best) + " vs closed form " + inv::str(closed); });
    }
    return rec.done();
}

// ---------------------------------------------------------------------------
// Metrics and bounds

inline InvariantResult check_metrics(const VerifyOptions& o)
{
    inv::Recorder rec("metrics: joint-effect bounds, rate balance, static-regret oracle");
    Rng rng(o.seed ^ 0xaa);
    for (int s = 0; s < o.samples / 4 && !rec.failed(); ++s) {
        const DelaySchedule sched = inv::random_schedule(rng, 150, 15);
        const Round T = sched.horizon();
        const double D = 2.0;
        const FeasibleSet set = FeasibleSet::from_diameter(D, 2);
        Rng env_rng(rng.bits());
        const auto env = make_drift_environment(set, T, rng.uniform(0.0, 0.5), DriftLoss::quadratic, 1.0, env_rng);
        Dogd learner(set, corollary_lr(D, 1.0, static_cast<double>(backlog_sum(sched))));
        const auto trace = drive(learner, env.losses, sched);
        const double P = path_length(env.comparators);
        const double J = joint_effect(*trace.c_log, env.comparators);
        const double d = static_cast<double>(sched.max_delay());
        const double tol = 1e-9;
        rec.check(J <= std::sqrt(2.0 * d * T * D * P) + tol, [] { return "joint effect above sqrt(2dTDP)"; });
        rec.check(J <= 2.0 * d * P + tol, [] { return "joint effect above 2dP"; });
        rec.check(J <= T * D + tol, [] { return "joint effect above TD"; });
    }
    for (int s = 0; s < 50 && !rec.failed(); ++s) {
        const double D = rng.uniform(0.5, 4.0), G = rng.uniform(0.5, 4.0), P = rng.uniform(0.0, 50.0);
        const double sum_m = rng.uniform(1.0, 1e5), J = rng.uniform(0.0, 10.0);
        const double eta_star = std::sqrt(D * (D + P)) / (G * std::sqrt(sum_m));
        // Golden-section minimization in log(eta).
        double a = std::log(eta_star) - 10.0, b = std::log(eta_star) + 10.0;
        const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
        auto f = [&](double le) { return bound_thm1(D, G, std::exp(le), sum_m, P, J); };
        for (int it = 0; it < 200; ++it) {
            const double c = b - phi * (b - a), e = a + phi * (b - a);
            if (f(c) < f(e))
                b = e;
            else
                a = c;
        }
        const double numeric_min = f(0.5 * (a + b));
        rec.check(bound_thm1(D, G, eta_star, sum_m, P, J) <= 2.0 * numeric_min,
                  [] { return "balanced rate is more than twice the optimum"; });
    }
    for (int s = 0; s < 20 && !rec.failed(); ++s) {
        const std::size_t n = static_cast<std::size_t>(rng.uniform_int(1, 2));
        const FeasibleSet set = FeasibleSet::from_diameter(2.0, n);
        const Round T = rng.uniform_int(1, 30);
        std::vector<LossFunction> losses;
        for (Round t = 1; t <= T; ++t) {
            if (rng.uniform01() < 0.5)
                losses.push_back(LossFunction::linear(inv::random_point(rng, n, -0.7, 0.7), t));
            else
                losses.push_back(LossFunction::quadratic(inv::random_point(rng, n, -set.half_width(), set.half_width()),
                                                         bounded_quadratic_scale(set, 1.0), t));
        }
        const double step = n == 1 ? 1e-3 : 1e-2;
        const double grid = best_fixed_point_grid(losses, set, step).total_loss;
        const double closed = best_fixed_point(losses, set).total_loss;
        // Grid minimum can exceed the true minimum by at most Lipschitz * half-diagonal of a cell.
        const double slack = static_cast<double>(T) * 1.0 * step * std::sqrt(static_cast<double>(n));
        rec.check(closed <= grid + 1e-12 && grid - closed <= slack,
                  [&] { return "closed form " + inv::str(closed) + " vs grid " + inv::str(grid); });
    }
    return rec.done();
}

inline InvariantResult check_bound_domination(const VerifyOptions& o)
{
    inv::Recorder rec("bounds: DOGD and Mild-OGD stay below their guarantees");
    Rng rng(o.seed ^ 0xbb);
    for (int s = 0; s < 12 && !rec.failed(); ++s) {
        ExperimentConfig c;
        c.T = 400;
        c.n = static_cast<std::size_t>(rng.uniform_int(1, 3));
        c.delay = UniformDelay{1, rng.uniform_int(1, 10)};
        c.environment = DriftEnvSpec{rng.uniform(0.0, 0.05), s % 2 ? DriftLoss::linear : DriftLoss::quadratic};
        for (LearnerKind kind :
             {LearnerKind::dogd, LearnerKind::mild, LearnerKind::dogd_dt, LearnerKind::mild_dt}) {
            c.learner = {kind, {}, {}, {}};
            const auto r = run_once(c, rng.bits());
            rec.check(r.summary["bound_violations"].empty(),
                      [&] { return to_string(kind) + " violated " + r.summary["bound_violations"].dump(); });
        }
    }
    return rec.done();
}

inline InvariantResult check_determinism(const VerifyOptions& o)
{
    inv::Recorder rec("harness: identical config and seed give identical outputs");
    ExperimentConfig c;
    c.T = 300;
    c.n = 3;
    c.delay = UniformDelay{1, 8};
    c.environment = DriftEnvSpec{0.01, DriftLoss::quadratic};
    for (LearnerKind kind : {LearnerKind::dogd, LearnerKind::mild_dt}) {
        c.learner = {kind, {}, {}, {}};
        const auto a = run_once(c, o.seed);
        const auto b = run_once(c, o.seed);
        rec.check(to_csv(a.trace) == to_csv(b.trace), [] { return "CSV output differs between identical runs"; });
        rec.check(a.summary.dump() == b.summary.dump(), [] { return "JSON summary differs between identical runs"; });
    }
    return rec.done();
}

inline std::vector<InvariantResult> verify(const VerifyOptions& o = {})
{
    using Check = InvariantResult (*)(const VerifyOptions&);
    const Check checks[] = {check_projection,     check_gradients,      check_surrogates, check_schedules,
                            check_learner_traces, check_ogd_reduction,  check_weight_simplex,
                            check_epochs,         check_environments,   check_metrics,
                            check_bound_domination, check_determinism};
    std::vector<InvariantResult> out;
    for (Check c : checks) {
        try {
            out.push_back(c(o));
        }
        catch (const std::exception& e) {
            out.push_back({"(exception)", false, e.what()});
        }
    }
    return out;
}

} // namespace doco
