#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "geometry.hpp"
#include "losses.hpp"
#include "rng.hpp"

namespace doco {

/// Per-round delays d_1..d_T, all >= 1. The gradient queried at round t
/// arrives at the end of round t + d_t - 1.
class DelaySchedule {
public:
    explicit DelaySchedule(std::vector<Round> delays) : delays_(std::move(delays))
    {
        if (delays_.empty())
            throw std::invalid_argument("DelaySchedule: horizon must be positive");
        for (Round d : delays_)
            if (d < 1)
                throw std::invalid_argument("DelaySchedule: delays must be >= 1");
    }

    Round horizon() const noexcept { return static_cast<Round>(delays_.size()); }

    /// d_t for 1-based t.
    Round delay(Round t) const { return delays_.at(static_cast<std::size_t>(t - 1)); }

    Round arrival(Round t) const { return t + delay(t) - 1; }

    const std::vector<Round>& delays() const noexcept { return delays_; }

    /// S = sum of delays.
    Round total_delay() const { return std::accumulate(delays_.begin(), delays_.end(), Round{0}); }

    /// d = max delay.
    Round max_delay() const { return *std::max_element(delays_.begin(), delays_.end()); }

    /// Last round at which any gradient arrives; never exceeds T + d - 1.
    Round last_arrival() const
    {
        Round last = 0;
        for (Round t = 1; t <= horizon(); ++t)
            last = std::max(last, arrival(t));
        return last;
    }

    bool operator==(const DelaySchedule&) const = default;

private:
    std::vector<Round> delays_;
};

/// F_1..F_{T+d-1}; entry r-1 holds the timestamps arriving at round r, ascending.
inline std::vector<std::vector<Round>> feedback_sets(const DelaySchedule& s)
{
    const Round rounds = s.horizon() + s.max_delay() - 1;
    std::vector<std::vector<Round>> sets(static_cast<std::size_t>(rounds));
    // Ascending k pushes keep every F_r sorted.
    for (Round k = 1; k <= s.horizon(); ++k)
        sets[static_cast<std::size_t>(s.arrival(k) - 1)].push_back(k);
    return sets;
}

/// Arrival order never inverts timestamps (ties allowed).
inline bool is_in_order(const DelaySchedule& s)
{
    for (Round t = 2; t <= s.horizon(); ++t)
        if (s.arrival(t - 1) > s.arrival(t))
            return false;
    return true;
}

/// m_t = t - sum_{i<t} |F_i| for t = 1..T.
inline std::vector<Round> backlog(const DelaySchedule& s)
{
    const Round T = s.horizon();
    std::vector<Round> arrivals_at(static_cast<std::size_t>(T + 1), 0);
    for (Round k = 1; k <= T; ++k) {
        const Round a = s.arrival(k);
        if (a <= T)
            ++arrivals_at[static_cast<std::size_t>(a)];
    }
    std::vector<Round> m(static_cast<std::size_t>(T));
    Round received = 0;
    for (Round t = 1; t <= T; ++t) {
        m[static_cast<std::size_t>(t - 1)] = t - received;
        received += arrivals_at[static_cast<std::size_t>(t)];
    }
    return m;
}

inline Round backlog_sum(const DelaySchedule& s)
{
    const auto m = backlog(s);
    return std::accumulate(m.begin(), m.end(), Round{0});
}

/// F_t^{s_v}: timestamps in [epoch_start, t] arriving exactly at round t.
inline std::vector<Round> epoch_feedback_sets(const DelaySchedule& s, Round epoch_start, Round t)
{
    if (epoch_start > t)
        throw std::invalid_argument("epoch_feedback_sets: epoch start after round");
    std::vector<Round> out;
    const Round hi = std::min(t, s.horizon());
    for (Round k = std::max<Round>(epoch_start, 1); k <= hi; ++k)
        if (s.arrival(k) == t)
            out.push_back(k);
    return out;
}

struct ConstantDelay {
    Round value = 1;
};
struct UniformDelay {
    Round lo = 1;
    Round hi = 1;
};
/// Blocks of length d; every gradient of a block arrives at the block's last round.
struct LowerBoundBlocks {
    Round d = 1;
};
/// The delay multiset {1 + ((t-1) mod d)} shuffled by the seed: S is fixed, order is not.
struct PermutedDelay {
    Round d = 1;
};
struct ExplicitDelays {
    std::vector<Round> delays;
};

using DelaySpec = std::variant<ConstantDelay, UniformDelay, LowerBoundBlocks, PermutedDelay, ExplicitDelays>;

inline DelaySchedule make_schedule(const DelaySpec& spec, Round T, Rng& rng)
{
    if (T < 1)
        throw std::invalid_argument("make_schedule: horizon must be positive");
    std::vector<Round> d(static_cast<std::size_t>(T));
    std::visit(
        [&](const auto& sp) {
            using S = std::decay_t<decltype(sp)>;
            if constexpr (std::is_same_v<S, ConstantDelay>) {
                if (sp.value < 1)
                    throw std::invalid_argument("constant delay must be >= 1");
                std::fill(d.begin(), d.end(), sp.value);
            }
            else if constexpr (std::is_same_v<S, UniformDelay>) {
                if (sp.lo < 1 || sp.hi < sp.lo)
                    throw std::invalid_argument("uniform delay needs 1 <= lo <= hi");
                for (auto& x : d)
                    x = rng.uniform_int(sp.lo, sp.hi);
            }
            else if constexpr (std::is_same_v<S, LowerBoundBlocks>) {
                if (sp.d < 1)
                    throw std::invalid_argument("lowerbound_blocks needs d >= 1");
                for (Round t = 1; t <= T; ++t) {
                    const Round z = (t - 1) / sp.d + 1;
                    d[static_cast<std::size_t>(t - 1)] = std::min(z * sp.d, T) - t + 1;
                }
            }
            else if constexpr (std::is_same_v<S, PermutedDelay>) {
                if (sp.d < 1)
                    throw std::invalid_argument("permuted delay needs d >= 1");
                for (Round t = 1; t <= T; ++t)
                    d[static_cast<std::size_t>(t - 1)] = 1 + (t - 1) % sp.d;
                // Fisher-Yates with the portable generator.
                for (Round i = T - 1; i > 0; --i) {
                    const auto j = rng.uniform_int(0, i);
                    std::swap(d[static_cast<std::size_t>(i)], d[static_cast<std::size_t>(j)]);
                }
            }
            else {
                if (static_cast<Round>(sp.delays.size()) != T)
                    throw std::invalid_argument("explicit delay list length " + std::to_string(sp.delays.size()) +
                                                " does not match horizon " + std::to_string(T));
                d = sp.delays;
            }
        },
        spec);
    return DelaySchedule(std::move(d));
}

inline DelaySchedule make_schedule(const DelaySpec& spec, Round T, std::uint64_t seed)
{
    Rng rng(seed);
    return make_schedule(spec, T, rng);
}

/// A gradient queried at round `timestamp`, evaluated at `anchor` (the decision played then).
struct FeedbackItem {
    Round timestamp = 0;
    DecisionVector gradient;
    DecisionVector anchor;
};

/// Pending gradients keyed by arrival round.
class FeedbackQueue {
public:
    void push(Round arrival_round, FeedbackItem item)
    {
        if (arrival_round < item.timestamp)
            throw std::invalid_argument("FeedbackQueue: arrival before query");
        pending_[arrival_round].push_back(std::move(item));
        ++size_;
    }

    void push(const DelaySchedule& s, FeedbackItem item)
    {
        const Round a = s.arrival(item.timestamp);
        push(a, std::move(item));
    }

    /// Removes and returns everything arriving at round r, ascending by timestamp.
    std::vector<FeedbackItem> pop(Round r)
    {
        auto it = pending_.find(r);
        if (it == pending_.end())
            return {};
        std::vector<FeedbackItem> out = std::move(it->second);
        pending_.erase(it);
        size_ -= out.size();
        std::stable_sort(out.begin(), out.end(),
                         [](const FeedbackItem& a, const FeedbackItem& b) { return a.timestamp < b.timestamp; });
        return out;
    }

    bool empty() const noexcept { return size_ == 0; }
    std::size_t size() const noexcept { return size_; }

private:
    std::map<Round, std::vector<FeedbackItem>> pending_;
    std::size_t size_ = 0;
};

} // namespace doco
