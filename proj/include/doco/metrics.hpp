#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "environments.hpp"
#include "geometry.hpp"
#include "losses.hpp"

namespace doco {

struct TraceRow {
    Round t = 0;
    DecisionVector x;
    double loss = 0.0;
    double cum_loss = 0.0;
    Round m = 0;
    std::vector<Round> arrived;
};

/// Everything a run leaves behind for post-hoc analysis.
struct RunTrace {
    std::vector<TraceRow> rows;
    /// Consumption order c_1..c_T; present only when it is a full permutation of 1..T.
    std::optional<std::vector<Round>> c_log;
    Round total_delay = 0;
    Round max_delay = 0;
    bool in_order = true;
    Round backlog_sum = 0;
    std::size_t gradient_queries = 0;
    Round dropped = 0;
    /// Max |sum(w) - 1| over all rounds (expert-pool learners only).
    std::optional<double> max_weight_sum_error;
    std::vector<Round> epoch_starts;

    Round horizon() const noexcept { return static_cast<Round>(rows.size()); }

    std::vector<DecisionVector> decisions() const
    {
        std::vector<DecisionVector> out;
        out.reserve(rows.size());
        for (const auto& r : rows)
            out.push_back(r.x);
        return out;
    }
};

inline bool is_permutation_of_horizon(std::span<const Round> c_log, Round T)
{
    if (static_cast<Round>(c_log.size()) != T)
        return false;
    std::vector<bool> seen(static_cast<std::size_t>(T), false);
    for (Round c : c_log) {
        if (c < 1 || c > T || seen[static_cast<std::size_t>(c - 1)])
            return false;
        seen[static_cast<std::size_t>(c - 1)] = true;
    }
    return true;
}

inline double cumulative_loss(const RunTrace& trace, std::span<const LossFunction> losses)
{
    if (static_cast<Round>(losses.size()) != trace.horizon())
        throw std::invalid_argument("cumulative_loss: length mismatch");
    double s = 0.0;
    for (std::size_t t = 0; t < losses.size(); ++t)
        s += losses[t].value(trace.rows[t].x);
    return s;
}

/// sum_t f_t(x_t) - sum_t f_t(u_t)
inline double dynamic_regret(const RunTrace& trace, std::span<const LossFunction> losses,
                             const ComparatorSequence& comparators)
{
    if (static_cast<Round>(losses.size()) != trace.horizon() ||
        static_cast<Round>(comparators.size()) != trace.horizon())
        throw std::invalid_argument("dynamic_regret: length mismatch");
    double r = 0.0;
    for (std::size_t t = 0; t < losses.size(); ++t)
        r += losses[t].value(trace.rows[t].x) - losses[t].value(comparators.points[t]);
    return r;
}

/// sum_t f_t(x_t) - min_{x in K} sum_t f_t(x), via the closed-form hindsight optimum.
inline double static_regret(const RunTrace& trace, std::span<const LossFunction> losses, const FeasibleSet& set)
{
    return cumulative_loss(trace, losses) - best_fixed_point(losses, set).total_loss;
}

inline double static_regret(const RunTrace& trace, const LowerBoundInstance& inst)
{
    const auto losses = inst.losses();
    return cumulative_loss(trace, losses) - best_fixed_decision(inst).total_loss;
}

/// sum_t ||u_t - u_{c_t}||
inline double joint_effect(std::span<const Round> c_log, const ComparatorSequence& comparators)
{
    const auto T = static_cast<Round>(comparators.size());
    if (!is_permutation_of_horizon(c_log, T))
        throw std::invalid_argument("joint_effect: consumption log is not a permutation of 1..T (flush not run?)");
    double s = 0.0;
    for (Round t = 1; t <= T; ++t)
        s += distance(comparators[t], comparators[c_log[static_cast<std::size_t>(t - 1)]]);
    return s;
}

/// C = 0 under in-order arrivals, else G sqrt(2 d T D P).
inline double joint_term(double D, double G, double P, bool in_order, double d, double T)
{
    return in_order ? 0.0 : G * std::sqrt(2.0 * d * T * D * P);
}

inline double bound_thm1(double D, double G, double eta, double sum_m, double P, double joint)
{
    return (D * D + D * P) / eta + eta * G * G * sum_m + G * joint;
}

inline double bound_cor1(double D, double G, double S, double P, bool in_order, double d, double T)
{
    return (2.0 * D + P) * G * std::sqrt(S) + joint_term(D, G, P, in_order, d, T);
}

/// Index of the grid rate bracketing the path-tuned optimum: floor(log2 sqrt((P+D)/D)) + 1.
inline double bracket_index(double D, double P) { return std::floor(0.5 * std::log2((P + D) / D)) + 1.0; }

inline double bound_thm2(double D, double G, double S, double P, bool in_order, double d, double T)
{
    const double k = bracket_index(D, P);
    const double rootS = std::sqrt(S);
    return (3.0 * std::sqrt(D * (D + P)) + D) * G * rootS + joint_term(D, G, P, in_order, d, T) +
           2.0 * G * D * rootS * std::log(k + 1.0);
}

inline double bound_dogd_dt(double D, double G, double S, double P, bool in_order, double d, double T)
{
    return G * (2.0 * D + P) * std::sqrt(2.0 * S) / (std::numbers::sqrt2 - 1.0) +
           joint_term(D, G, P, in_order, d, T);
}

inline double bound_mild_dt(double D, double G, double S, double P, bool in_order, double d, double T)
{
    const double k = std::floor(0.5 * std::log2((D + P) / D));
    const double lead = (2.0 * std::log(k + 2.0) + 1.0) * G * D + 3.0 * G * std::sqrt(D * D + D * P);
    return lead * std::sqrt(2.0 * S) / (std::numbers::sqrt2 - 1.0) + joint_term(D, G, P, in_order, d, T);
}

/// Dynamic-regret lower bound for path budget P.
inline double bound_lower(double T, double d, double D, double G, double P)
{
    if (!(T > 0.0) || !(d > 0.0) || !(D > 0.0) || !(G > 0.0) || P < 0.0)
        throw std::invalid_argument("bound_lower: invalid arguments");
    const double L = std::ceil(T * D / std::max(P, D));
    if (d > L)
        return D * G * T / (2.0 * std::numbers::sqrt2);
    return G * std::sqrt(d * D * std::max(P, D) * T) / (4.0 * std::numbers::sqrt2);
}

/// Static-regret lower bound D G T / (2 sqrt(2 ceil(T/d))).
inline double bound_lemma3(double T, double d, double D, double G)
{
    if (!(T > 0.0) || !(d > 0.0))
        throw std::invalid_argument("bound_lemma3: invalid arguments");
    return D * G * T / (2.0 * std::sqrt(2.0 * std::ceil(T / d)));
}

} // namespace doco
