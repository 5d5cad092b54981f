#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "delay.hpp"
#include "geometry.hpp"
#include "learners.hpp"
#include "losses.hpp"

namespace doco {

/// Smallest k >= 0 with 4^k >= x, i.e. ceil(log2(sqrt(x))) computed exactly.
inline int ceil_half_log2(Round x)
{
    int k = 0;
    Round p = 1;
    while (p < x) {
        p *= 4;
        ++k;
    }
    return k;
}

/// Expert count for an expert pool over horizon T: ceil(log2(T+1)/2) + 1.
inline int mild_grid_size(Round T)
{
    if (T < 1)
        throw std::invalid_argument("mild_grid_size: horizon must be positive");
    return ceil_half_log2(T + 1) + 1;
}

/// eta_i = 2^{i-1} D / (G sqrt(beta)), i = 1..N, ascending.
inline std::vector<double> mild_lr_grid(double D, double G, double beta, Round T)
{
    if (!(D > 0.0) || !(G > 0.0) || !(beta > 0.0))
        throw std::invalid_argument("mild_lr_grid: D, G and beta must be positive");
    const int N = mild_grid_size(T);
    std::vector<double> grid(static_cast<std::size_t>(N));
    const double base = D / (G * std::sqrt(beta));
    for (int i = 0; i < N; ++i)
        grid[static_cast<std::size_t>(i)] = std::ldexp(base, i);
    return grid;
}

/// Prior favouring small rates: w_i = (N+1) / (i (i+1) N).
inline std::vector<double> init_weights(int N)
{
    if (N < 1)
        throw std::invalid_argument("init_weights: need at least one expert");
    std::vector<double> w(static_cast<std::size_t>(N));
    for (int i = 1; i <= N; ++i)
        w[static_cast<std::size_t>(i - 1)] =
            static_cast<double>(N + 1) / (static_cast<double>(i) * (i + 1) * static_cast<double>(N));
    return w;
}

/// Sum_i w_i x_i.
inline DecisionVector meta_play(std::span<const double> weights, std::span<const DecisionVector> decisions)
{
    if (weights.size() != decisions.size() || decisions.empty())
        throw std::invalid_argument("meta_play: weight/decision count mismatch");
    std::vector<double> x(decisions.front().size(), 0.0);
    for (std::size_t e = 0; e < decisions.size(); ++e) {
        if (decisions[e].size() != x.size())
            throw std::invalid_argument("meta_play: dimension mismatch");
        for (std::size_t i = 0; i < x.size(); ++i)
            x[i] += weights[e] * decisions[e][i];
    }
    return DecisionVector(std::move(x));
}

/// Normalizes log-weights in place (max-shifted) and returns the weights.
inline std::vector<double> normalize_log_weights(std::vector<double>& log_w)
{
    const double top = *std::max_element(log_w.begin(), log_w.end());
    double total = 0.0;
    for (double& lw : log_w) {
        lw -= top;
        total += std::exp(lw);
    }
    const double log_total = std::log(total);
    std::vector<double> w(log_w.size());
    for (std::size_t i = 0; i < log_w.size(); ++i) {
        w[i] = std::exp(log_w[i]) / total;
        log_w[i] -= log_total;
    }
    return w;
}

/// One delayed-Hedge step: w_i <- w_i exp(-alpha L_i) / normalizer, where L_i sums
/// the surrogate losses of everything that arrived this round.
inline std::vector<double> delayed_hedge_update(std::span<const double> weights, double alpha,
                                                std::span<const double> loss_sums)
{
    if (weights.size() != loss_sums.size())
        throw std::invalid_argument("delayed_hedge_update: size mismatch");
    const double floor = loss_sums.empty() ? 0.0 : *std::min_element(loss_sums.begin(), loss_sums.end());
    std::vector<double> log_w(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i)
        log_w[i] = (weights[i] > 0.0 ? std::log(weights[i]) : -std::numeric_limits<double>::infinity()) -
                   alpha * (loss_sums[i] - floor);
    return normalize_log_weights(log_w);
}

struct MildOptions {
    /// Fault injection for the invariant checker: skews weights after normalization.
    bool corrupt_normalization = false;
};

/// Delayed-Hedge meta-algorithm over a pool of DOGD experts that run on the
/// linearized surrogates <grad f_k(x_k), x - x_k>. Experts reuse the meta's
/// gradients; nothing but the meta queries the loss.
class MildOgd {
public:
    static constexpr bool uses_delayed_feedback = true;

    MildOgd(FeasibleSet set, double alpha, std::vector<double> lr_grid, MildOptions options = {})
        : set_(std::move(set)), options_(options)
    {
        if (lr_grid.empty())
            throw std::invalid_argument("MildOgd: empty learning-rate grid");
        std::sort(lr_grid.begin(), lr_grid.end());
        for (double eta : lr_grid)
            experts_.emplace_back(set_, eta);
        reset(alpha, lr_grid);
    }

    /// Parameters tuned with beta = sum_t m_t.
    static MildOgd tuned(const FeasibleSet& set, double D, double G, Round T, double beta, MildOptions options = {})
    {
        return MildOgd(set, 1.0 / (G * D * std::sqrt(beta)), mild_lr_grid(D, G, beta, T), options);
    }

    /// Restart every expert at the origin with new rates and reset the prior weights.
    void reset(double alpha, const std::vector<double>& lr_grid)
    {
        if (!(alpha > 0.0))
            throw std::invalid_argument("MildOgd: alpha must be positive");
        if (lr_grid.size() != experts_.size())
            throw std::invalid_argument("MildOgd: grid size cannot change on reset");
        alpha_ = alpha;
        grid_ = lr_grid;
        std::sort(grid_.begin(), grid_.end());
        for (std::size_t e = 0; e < experts_.size(); ++e)
            experts_[e].reset(grid_[e]);
        weights_ = init_weights(static_cast<int>(experts_.size()));
        log_weights_.resize(weights_.size());
        for (std::size_t i = 0; i < weights_.size(); ++i)
            log_weights_[i] = std::log(weights_[i]);
        history_.clear();
        track_weight_sum();
    }

    DecisionVector play(Round t)
    {
        std::vector<DecisionVector> plays;
        plays.reserve(experts_.size());
        for (const auto& e : experts_)
            plays.push_back(e.play(t));
        DecisionVector x = meta_play(weights_, plays);
        history_[t] = std::move(plays);
        // A convex combination of box points is in the box; clamping only absorbs rounding.
        return set_.project(x);
    }

    void ingest(Round t, std::span<const FeedbackItem> items)
    {
        require_ascending(items, "MildOgd::ingest");
        if (items.empty())
            return;
        std::vector<double> loss_sums(experts_.size(), 0.0);
        for (const auto& item : items) {
            auto it = history_.find(item.timestamp);
            if (it == history_.end())
                throw std::logic_error("MildOgd: feedback for a round with no recorded expert plays");
            const SurrogateLoss surrogate = make_surrogate(item.gradient, item.anchor, item.timestamp);
            for (std::size_t e = 0; e < experts_.size(); ++e)
                loss_sums[e] += surrogate.value(it->second[e]);
            history_.erase(it);
        }
        for (std::size_t e = 0; e < experts_.size(); ++e)
            log_weights_[e] -= alpha_ * loss_sums[e];
        weights_ = normalize_log_weights(log_weights_);
        if (options_.corrupt_normalization)
            for (auto& w : weights_)
                w *= 1.0 + 1e-6;
        track_weight_sum();
        for (auto& e : experts_)
            e.ingest(t, items);
    }

    /// Post-horizon arrivals: experts consume them so the consumption log completes.
    void flush(Round t, std::span<const FeedbackItem> items)
    {
        require_ascending(items, "MildOgd::flush");
        for (const auto& item : items)
            history_.erase(item.timestamp);
        for (auto& e : experts_)
            e.flush(t, items);
    }

    const std::vector<double>& weights() const noexcept { return weights_; }
    const std::vector<double>& lr_grid() const noexcept { return grid_; }
    double alpha() const noexcept { return alpha_; }
    const std::vector<Dogd>& experts() const noexcept { return experts_; }
    /// Largest |sum(w) - 1| seen after any update.
    double max_weight_sum_error() const noexcept { return max_weight_sum_error_; }
    /// Rounds whose expert plays are still awaiting feedback.
    std::size_t pending_history() const noexcept { return history_.size(); }
    /// Consumption order; identical across experts since they share arrivals.
    const std::vector<Round>& c_log() const { return experts_.front().c_log(); }

private:
    void track_weight_sum()
    {
        double s = 0.0;
        for (double w : weights_) {
            if (!(w >= 0.0))
                max_weight_sum_error_ = std::numeric_limits<double>::infinity();
            s += w;
        }
        max_weight_sum_error_ = std::max(max_weight_sum_error_, std::abs(s - 1.0));
    }

    FeasibleSet set_;
    MildOptions options_;
    double alpha_ = 1.0;
    std::vector<double> grid_;
    std::vector<Dogd> experts_;
    std::vector<double> weights_;
    std::vector<double> log_weights_;
    std::map<Round, std::vector<DecisionVector>> history_;
    double max_weight_sum_error_ = 0.0;
};

} // namespace doco
