#pragma once

#include <cmath>
#include <concepts>
#include <span>
#include <stdexcept>
#include <vector>

#include "delay.hpp"
#include "geometry.hpp"

namespace doco {

/// Uniform protocol the harness drives: one play per round, then the round's arrivals.
/// `flush` ingests post-horizon arrivals without any plays.
template <class L>
concept OnlineLearner = requires(L l, Round t, std::span<const FeedbackItem> items) {
    { l.play(t) } -> std::convertible_to<DecisionVector>;
    l.ingest(t, items);
    l.flush(t, items);
};

inline void require_ascending(std::span<const FeedbackItem> items, const char* where)
{
    for (std::size_t i = 1; i < items.size(); ++i)
        if (items[i - 1].timestamp >= items[i].timestamp)
            throw std::invalid_argument(std::string(where) + ": feedback must be sorted by ascending timestamp");
}

/// eta = D / (G sqrt(sum_m)).
inline double corollary_lr(double D, double G, double sum_m)
{
    if (!(D > 0.0) || !(G > 0.0) || !(sum_m > 0.0))
        throw std::invalid_argument("corollary_lr: all inputs must be positive");
    return D / (G * std::sqrt(sum_m));
}

/// Non-delayed projected online gradient descent. The harness hands it the
/// round's own gradient at the end of every round, ignoring the delay schedule.
class Ogd {
public:
    static constexpr bool uses_delayed_feedback = false;

    Ogd(FeasibleSet set, double eta) : set_(std::move(set)), eta_(eta), y_(set_.origin())
    {
        if (!(eta > 0.0))
            throw std::invalid_argument("Ogd: learning rate must be positive");
    }

    void step(const DecisionVector& grad) { y_ = set_.project(descent_step(y_, eta_, grad)); }

    DecisionVector play(Round) const { return y_; }

    void ingest(Round, std::span<const FeedbackItem> items)
    {
        for (const auto& item : items)
            step(item.gradient);
    }

    void flush(Round, std::span<const FeedbackItem>) {}

    const DecisionVector& iterate() const noexcept { return y_; }
    double eta() const noexcept { return eta_; }

private:
    FeasibleSet set_;
    double eta_;
    DecisionVector y_;
};

/// Delayed OGD: one projected step per arrived gradient, in ascending timestamp order.
class Dogd {
public:
    static constexpr bool uses_delayed_feedback = true;

    Dogd(FeasibleSet set, double eta) : set_(std::move(set)), eta_(eta), y_(set_.origin())
    {
        if (!(eta > 0.0))
            throw std::invalid_argument("Dogd: learning rate must be positive");
    }

    DecisionVector play(Round) const { return y_; }

    void ingest(Round, std::span<const FeedbackItem> items)
    {
        require_ascending(items, "Dogd::ingest");
        for (const auto& item : items) {
            y_ = set_.project(descent_step(y_, eta_, item.gradient));
            ++tau_;
            c_log_.push_back(item.timestamp);
        }
    }

    void flush(Round t, std::span<const FeedbackItem> items) { ingest(t, items); }

    /// Restart from the origin with a new rate (used by the doubling trick).
    void reset(double eta)
    {
        if (!(eta > 0.0))
            throw std::invalid_argument("Dogd: learning rate must be positive");
        eta_ = eta;
        y_ = set_.origin();
        tau_ = 1;
    }

    const DecisionVector& iterate() const noexcept { return y_; }
    double eta() const noexcept { return eta_; }
    /// Number of generated decisions: 1 + gradients ingested since the last reset.
    Round tau() const noexcept { return tau_; }
    /// Timestamps in consumption order (c_1, c_2, ...), across resets.
    const std::vector<Round>& c_log() const noexcept { return c_log_; }
    const FeasibleSet& set() const noexcept { return set_; }

private:
    FeasibleSet set_;
    double eta_;
    DecisionVector y_;
    Round tau_ = 1;
    std::vector<Round> c_log_;
};

} // namespace doco
