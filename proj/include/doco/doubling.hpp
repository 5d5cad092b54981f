#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "delay.hpp"
#include "learners.hpp"
#include "mild_ogd.hpp"

namespace doco {

enum class EpochDecision { keep, restart };

/// Budget 2^v of epoch v.
inline Round epoch_budget(Round v)
{
    if (v < 1 || v > 62)
        throw std::out_of_range("epoch_budget: epoch index out of range");
    return Round{1} << v;
}

/// B = sum_{j=s_v}^{t} (j + 1 - s_v - sum_{i=s_v}^{j-1} |F_i^{s_v}|), from scratch.
/// `arrival_counts[i - s_v]` is |F_i^{s_v}| for i in [s_v, t-1].
inline Round epoch_statistic(Round epoch_start, Round t, std::span<const Round> arrival_counts)
{
    if (t < epoch_start)
        throw std::invalid_argument("epoch_statistic: round precedes epoch start");
    if (static_cast<Round>(arrival_counts.size()) < t - epoch_start)
        throw std::invalid_argument("epoch_statistic: missing arrival counts");
    Round B = 0;
    Round received = 0;
    for (Round j = epoch_start; j <= t; ++j) {
        if (j > epoch_start)
            received += arrival_counts[static_cast<std::size_t>(j - 1 - epoch_start)];
        B += j + 1 - epoch_start - received;
    }
    return B;
}

/// Tracks the epoch index v, its start s_v, and the running statistic B.
/// Restarts are decided at the start of a round, before the play.
class EpochController {
public:
    struct RoundRecord {
        Round t;
        Round epoch;
        Round statistic;
        /// Value tested against the budget; exceeds it exactly on restart rounds.
        Round candidate;
    };

    /// Returns true when round t opens a new epoch (never for the first round of an epoch).
    bool begin_round(Round t)
    {
        if (t <= last_round_)
            throw std::invalid_argument("EpochController: rounds must increase");
        last_round_ = t;
        if (t == start_ && history_.empty()) {
            statistic_ = 1;
            history_.push_back({t, epoch_, statistic_, statistic_});
            return false;
        }
        const Round candidate = statistic_ + (t + 1 - start_ - received_);
        bool restarted = false;
        if (candidate > epoch_budget(epoch_)) {
            ++epoch_;
            start_ = t;
            received_ = 0;
            statistic_ = 1;
            starts_.push_back(t);
            restarted = true;
        }
        else {
            statistic_ = candidate;
        }
        history_.push_back({t, epoch_, statistic_, candidate});
        return restarted;
    }

    /// Epoch arrivals |F_t^{s_v}| of the current round.
    void record_arrivals(Round count) { received_ += count; }

    /// Gradients queried before the current epoch are discarded.
    bool accepts(Round timestamp) const noexcept { return timestamp >= start_; }

    Round epoch() const noexcept { return epoch_; }
    Round epoch_start() const noexcept { return start_; }
    Round statistic() const noexcept { return statistic_; }
    const std::vector<Round>& epoch_starts() const noexcept { return starts_; }
    const std::vector<RoundRecord>& history() const noexcept { return history_; }

private:
    Round epoch_ = 1;
    Round start_ = 1;
    Round received_ = 0;
    Round statistic_ = 0;
    Round last_round_ = 0;
    std::vector<Round> starts_{1};
    std::vector<RoundRecord> history_;
};

/// From-scratch restart decision for round t given the epoch's arrival counts.
inline EpochDecision doubling_check(const EpochController& ctrl, Round t, std::span<const Round> arrival_counts)
{
    if (t == ctrl.epoch_start())
        return EpochDecision::keep;
    return epoch_statistic(ctrl.epoch_start(), t, arrival_counts) > epoch_budget(ctrl.epoch())
               ? EpochDecision::restart
               : EpochDecision::keep;
}

/// eta_v = D / (G 2^{v/2}).
inline double dogd_dt_lr(double D, double G, Round v)
{
    if (v < 1)
        throw std::invalid_argument("dogd_dt_lr: epoch index must be >= 1");
    return D / (G * std::pow(2.0, static_cast<double>(v) / 2.0));
}

struct MildDtParams {
    double alpha;
    std::vector<double> lr_constants;
    std::vector<double> expert_rates;
};

/// alpha_v = 1/(G D 2^{v/2}); constants D 2^{i-1}/G; expert rates constants / 2^{v/2}.
inline MildDtParams mild_dt_params(double D, double G, Round T, Round v)
{
    if (v < 1)
        throw std::invalid_argument("mild_dt_params: epoch index must be >= 1");
    if (!(D > 0.0) || !(G > 0.0))
        throw std::invalid_argument("mild_dt_params: D and G must be positive");
    const double scale = std::pow(2.0, static_cast<double>(v) / 2.0);
    MildDtParams p;
    p.alpha = 1.0 / (G * D * scale);
    const int N = mild_grid_size(T);
    for (int i = 0; i < N; ++i) {
        const double c = std::ldexp(D / G, i);
        p.lr_constants.push_back(c);
        p.expert_rates.push_back(c / scale);
    }
    return p;
}

/// Applies the epoch filter to a round's arrivals.
inline std::vector<FeedbackItem> keep_current_epoch(const EpochController& ctrl, std::span<const FeedbackItem> items,
                                                    Round& dropped)
{
    std::vector<FeedbackItem> kept;
    kept.reserve(items.size());
    for (const auto& item : items) {
        if (ctrl.accepts(item.timestamp))
            kept.push_back(item);
        else
            ++dropped;
    }
    return kept;
}

/// DOGD restarted from the origin whenever the backlog statistic outgrows 2^v.
class DogdDoublingTrick {
public:
    static constexpr bool uses_delayed_feedback = true;

    DogdDoublingTrick(FeasibleSet set, double D, double G) : D_(D), G_(G), dogd_(std::move(set), dogd_dt_lr(D, G, 1))
    {
    }

    DecisionVector play(Round t)
    {
        if (ctrl_.begin_round(t))
            dogd_.reset(dogd_dt_lr(D_, G_, ctrl_.epoch()));
        return dogd_.play(t);
    }

    void ingest(Round t, std::span<const FeedbackItem> items)
    {
        require_ascending(items, "DogdDoublingTrick::ingest");
        const auto kept = keep_current_epoch(ctrl_, items, dropped_);
        ctrl_.record_arrivals(static_cast<Round>(kept.size()));
        dogd_.ingest(t, kept);
    }

    void flush(Round t, std::span<const FeedbackItem> items)
    {
        require_ascending(items, "DogdDoublingTrick::flush");
        const auto kept = keep_current_epoch(ctrl_, items, dropped_);
        dogd_.flush(t, kept);
    }

    const EpochController& controller() const noexcept { return ctrl_; }
    const Dogd& inner() const noexcept { return dogd_; }
    const std::vector<Round>& c_log() const noexcept { return dogd_.c_log(); }
    Round dropped() const noexcept { return dropped_; }
    double eta() const noexcept { return dogd_.eta(); }

private:
    double D_;
    double G_;
    Dogd dogd_;
    EpochController ctrl_;
    Round dropped_ = 0;
};

/// Mild-OGD under the doubling trick. Meta and experts share one controller,
/// so they restart on the same round.
class MildOgdDoublingTrick {
public:
    static constexpr bool uses_delayed_feedback = true;

    MildOgdDoublingTrick(FeasibleSet set, double D, double G, Round T, MildOptions options = {})
        : D_(D), G_(G), T_(T), meta_(make_meta(std::move(set), D, G, T, options))
    {
    }

    DecisionVector play(Round t)
    {
        if (ctrl_.begin_round(t)) {
            const auto p = mild_dt_params(D_, G_, T_, ctrl_.epoch());
            meta_.reset(p.alpha, p.expert_rates);
        }
        return meta_.play(t);
    }

    void ingest(Round t, std::span<const FeedbackItem> items)
    {
        require_ascending(items, "MildOgdDoublingTrick::ingest");
        const auto kept = keep_current_epoch(ctrl_, items, dropped_);
        ctrl_.record_arrivals(static_cast<Round>(kept.size()));
        meta_.ingest(t, kept);
    }

    void flush(Round t, std::span<const FeedbackItem> items)
    {
        require_ascending(items, "MildOgdDoublingTrick::flush");
        const auto kept = keep_current_epoch(ctrl_, items, dropped_);
        meta_.flush(t, kept);
    }

    const EpochController& controller() const noexcept { return ctrl_; }
    const MildOgd& meta() const noexcept { return meta_; }
    const std::vector<double>& weights() const noexcept { return meta_.weights(); }
    double max_weight_sum_error() const noexcept { return meta_.max_weight_sum_error(); }
    const std::vector<Round>& c_log() const noexcept { return meta_.c_log(); }
    Round dropped() const noexcept { return dropped_; }

private:
    static MildOgd make_meta(FeasibleSet set, double D, double G, Round T, MildOptions options)
    {
        const auto p = mild_dt_params(D, G, T, 1);
        return MildOgd(std::move(set), p.alpha, p.expert_rates, options);
    }

    double D_;
    double G_;
    Round T_;
    MildOgd meta_;
    EpochController ctrl_;
    Round dropped_ = 0;
};

} // namespace doco
