#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "delay.hpp"
#include "geometry.hpp"
#include "losses.hpp"
#include "rng.hpp"

namespace doco {

/// u_1..u_T, all inside the feasible set.
struct ComparatorSequence {
    std::vector<DecisionVector> points;

    std::size_t size() const noexcept { return points.size(); }
    const DecisionVector& operator[](Round t) const { return points.at(static_cast<std::size_t>(t - 1)); }
};

inline double path_length(const ComparatorSequence& c)
{
    if (c.points.empty())
        throw std::invalid_argument("path_length: empty comparator sequence");
    double p = 0.0;
    for (std::size_t t = 1; t < c.points.size(); ++t)
        p += distance(c.points[t], c.points[t - 1]);
    return p;
}

inline ComparatorSequence constant_comparators(const DecisionVector& u, Round T)
{
    return ComparatorSequence{std::vector<DecisionVector>(static_cast<std::size_t>(T), u)};
}

/// L = ceil(T D / max{P, D}): comparators constant on blocks of this length
/// change at most P/D times, so their path length never exceeds P.
inline Round block_length_for_path(Round T, double D, double P)
{
    if (T < 1 || !(D > 0.0) || P < 0.0)
        throw std::invalid_argument("block_length_for_path: invalid arguments");
    return static_cast<Round>(std::ceil(static_cast<double>(T) * D / std::max(P, D)));
}

inline Round block_count(Round T, Round L) { return (T + L - 1) / L; }

/// Piecewise-constant sequence: block z covers rounds (z-1)L+1 .. min(zL, T).
inline ComparatorSequence make_piecewise_comparators(const FeasibleSet& set, Round T, Round L,
                                                     std::span<const DecisionVector> anchors)
{
    if (L < 1 || T < 1)
        throw std::invalid_argument("make_piecewise_comparators: block length and horizon must be positive");
    const Round Z = block_count(T, L);
    if (static_cast<Round>(anchors.size()) != Z)
        throw std::invalid_argument("make_piecewise_comparators: expected " + std::to_string(Z) + " anchors");
    for (const auto& a : anchors)
        if (!set.contains(a))
            throw std::invalid_argument("make_piecewise_comparators: anchor outside the feasible set");
    ComparatorSequence c;
    c.points.reserve(static_cast<std::size_t>(T));
    for (Round t = 1; t <= T; ++t)
        c.points.push_back(anchors[static_cast<std::size_t>((t - 1) / L)]);
    return c;
}

/// Best comparator constant on each block of length L (hindsight minimizer per block).
inline ComparatorSequence best_piecewise_comparators(std::span<const LossFunction> losses, const FeasibleSet& set,
                                                     Round L)
{
    const auto T = static_cast<Round>(losses.size());
    const Round Z = block_count(T, L);
    std::vector<DecisionVector> anchors;
    for (Round z = 0; z < Z; ++z) {
        const Round lo = z * L;
        const Round hi = std::min(T, (z + 1) * L);
        anchors.push_back(best_fixed_point(losses.subspan(static_cast<std::size_t>(lo),
                                                          static_cast<std::size_t>(hi - lo)),
                                           set)
                              .point);
    }
    return make_piecewise_comparators(set, T, L, anchors);
}

enum class DriftLoss { quadratic, linear };

struct DriftEnvironment {
    std::vector<LossFunction> losses;
    ComparatorSequence comparators;
};

/// Target theta_t walks inside the set with steps of length <= delta (projection
/// is non-expansive). Quadratic losses track theta_t; linear losses pull toward
/// it with gradient -(G / (h sqrt n)) theta_t. Comparators are the targets.
inline DriftEnvironment make_drift_environment(const FeasibleSet& set, Round T, double delta, DriftLoss kind,
                                               double G, Rng& rng)
{
    if (delta < 0.0)
        throw std::invalid_argument("make_drift_environment: step must be nonnegative");
    if (T < 1 || !(G > 0.0))
        throw std::invalid_argument("make_drift_environment: invalid horizon or gradient bound");
    const std::size_t n = set.dimension();
    const double h = set.half_width();
    std::vector<double> start(n);
    for (auto& c : start)
        c = rng.uniform(-h, h);
    DecisionVector theta(std::move(start));

    DriftEnvironment env;
    env.losses.reserve(static_cast<std::size_t>(T));
    env.comparators.points.reserve(static_cast<std::size_t>(T));
    const double scale = bounded_quadratic_scale(set, G);
    const double pull = G / (h * std::sqrt(static_cast<double>(n)));
    for (Round t = 1; t <= T; ++t) {
        env.comparators.points.push_back(theta);
        if (kind == DriftLoss::quadratic)
            env.losses.push_back(LossFunction::quadratic(theta, scale, t));
        else
            env.losses.push_back(LossFunction::linear(-pull * theta, t));
        if (t == T)
            break;
        std::vector<double> dir(n);
        double norm = 0.0;
        do {
            norm = 0.0;
            for (auto& c : dir) {
                c = rng.normal();
                norm += c * c;
            }
            norm = std::sqrt(norm);
        } while (norm == 0.0);
        for (std::size_t i = 0; i < n; ++i)
            dir[i] = theta[i] + delta * dir[i] / norm;
        theta = set.project(DecisionVector(std::move(dir)));
    }
    return env;
}

/// Adversarial instance: blocks of length d, one random-sign linear loss per
/// block, and delays that hold every gradient of a block until its last round.
class LowerBoundInstance {
public:
    LowerBoundInstance(Round T, Round d, double D, double G, std::size_t n, std::vector<std::vector<int>> signs,
                       std::uint64_t seed = 0)
        : T_(T), d_(d), D_(D), G_(G), set_(FeasibleSet::from_diameter(D, n)), signs_(std::move(signs)),
          schedule_(make_schedule(LowerBoundBlocks{d}, T, seed)), seed_(seed)
    {
        if (T < 1 || d < 1 || n < 1 || !(D > 0.0) || !(G > 0.0))
            throw std::invalid_argument("LowerBoundInstance: invalid parameters");
        if (static_cast<Round>(signs_.size()) != block_count(T, d))
            throw std::invalid_argument("LowerBoundInstance: need one sign vector per block");
        for (const auto& w : signs_) {
            if (w.size() != n)
                throw std::invalid_argument("LowerBoundInstance: sign vector dimension mismatch");
            for (int s : w)
                if (s != 1 && s != -1)
                    throw std::invalid_argument("LowerBoundInstance: signs must be +1 or -1");
        }
    }

    Round horizon() const noexcept { return T_; }
    Round max_delay() const noexcept { return d_; }
    double diameter() const noexcept { return D_; }
    double gradient_bound() const noexcept { return G_; }
    std::size_t dimension() const noexcept { return set_.dimension(); }
    std::uint64_t seed() const noexcept { return seed_; }
    const FeasibleSet& set() const noexcept { return set_; }
    const DelaySchedule& schedule() const noexcept { return schedule_; }
    const std::vector<std::vector<int>>& signs() const noexcept { return signs_; }

    Round blocks() const noexcept { return static_cast<Round>(signs_.size()); }
    /// 0-based block of round t.
    Round block_of(Round t) const { return (t - 1) / d_; }
    Round block_size(Round z) const { return std::min(T_, (z + 1) * d_) - z * d_; }
    /// Last round of block z (0-based), where all its gradients arrive.
    Round block_end(Round z) const { return std::min(T_, (z + 1) * d_); }

    std::vector<LossFunction> losses() const
    {
        std::vector<LossFunction> out;
        out.reserve(static_cast<std::size_t>(T_));
        for (Round t = 1; t <= T_; ++t)
            out.push_back(LossFunction::sign_linear(signs_[static_cast<std::size_t>(block_of(t))], G_, t));
        return out;
    }

private:
    Round T_;
    Round d_;
    double D_;
    double G_;
    FeasibleSet set_;
    std::vector<std::vector<int>> signs_;
    DelaySchedule schedule_;
    std::uint64_t seed_;
};

/// Rademacher signs keyed on (seed, block, coordinate).
inline LowerBoundInstance make_lowerbound_instance(Round T, Round d, double D, double G, std::size_t n,
                                                   std::uint64_t seed)
{
    if (T < 1 || d < 1 || n < 1)
        throw std::invalid_argument("make_lowerbound_instance: T, d and n must be positive");
    const Round Z = block_count(T, d);
    std::vector<std::vector<int>> signs(static_cast<std::size_t>(Z), std::vector<int>(n));
    for (Round z = 0; z < Z; ++z)
        for (std::size_t i = 0; i < n; ++i)
            signs[static_cast<std::size_t>(z)][i] =
                keyed_sign(seed, static_cast<std::uint64_t>(z), static_cast<std::uint64_t>(i));
    return LowerBoundInstance(T, d, D, G, n, std::move(signs), seed);
}

/// Vertex minimizer: x_i = -h sign(sum_z w_{z,i} |T_z|), ties to +h, with total
/// loss -h (G / sqrt n) sum_i |sum_z w_{z,i} |T_z||.
inline FixedPointOptimum best_fixed_decision(const LowerBoundInstance& inst)
{
    const std::size_t n = inst.dimension();
    const double h = inst.set().half_width();
    std::vector<double> x(n);
    double abs_total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        Round sum = 0;
        for (Round z = 0; z < inst.blocks(); ++z)
            sum += inst.signs()[static_cast<std::size_t>(z)][i] * inst.block_size(z);
        x[i] = sum > 0 ? -h : h;
        abs_total += static_cast<double>(sum < 0 ? -sum : sum);
    }
    const double total = -h * (inst.gradient_bound() / std::sqrt(static_cast<double>(n))) * abs_total;
    return {DecisionVector(std::move(x)), total};
}

} // namespace doco
