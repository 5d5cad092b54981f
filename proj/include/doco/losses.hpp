#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <cstdint>
#include <stdexcept>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "geometry.hpp"

namespace doco {

using Round = std::int64_t;

/// f(x) = <g, x>
struct Linear {
    DecisionVector g;
};

/// f(x) = (s/2) ||x - target||^2
struct QuadraticTracking {
    DecisionVector target;
    double scale;
};

/// f(x) = (G / sqrt(n)) <w, x> with w in {-1, +1}^n
struct SignLinear {
    std::vector<int> signs;
    double gain;
};

class LossFunction {
public:
    using Kind = std::variant<Linear, QuadraticTracking, SignLinear>;

    LossFunction(Kind kind, Round round_index) : kind_(std::move(kind)), round_(round_index) { validate(); }

    static LossFunction linear(DecisionVector g, Round t = 0) { return {Linear{std::move(g)}, t}; }
    static LossFunction quadratic(DecisionVector target, double scale, Round t = 0)
    {
        return {QuadraticTracking{std::move(target), scale}, t};
    }
    static LossFunction sign_linear(std::vector<int> signs, double gain, Round t = 0)
    {
        return {SignLinear{std::move(signs), gain}, t};
    }

    const Kind& kind() const noexcept { return kind_; }
    Round round_index() const noexcept { return round_; }

    std::size_t dimension() const
    {
        return std::visit(
            [](const auto& k) -> std::size_t {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, Linear>)
                    return k.g.size();
                else if constexpr (std::is_same_v<K, QuadraticTracking>)
                    return k.target.size();
                else
                    return k.signs.size();
            },
            kind_);
    }

    double value(const DecisionVector& x) const
    {
        check_dimension(x, "LossFunction::value");
        return std::visit(
            [&x](const auto& k) -> double {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, Linear>) {
                    return dot(k.g, x);
                }
                else if constexpr (std::is_same_v<K, QuadraticTracking>) {
                    double r2 = 0.0;
                    for (std::size_t i = 0; i < x.size(); ++i)
                        r2 += (x[i] - k.target[i]) * (x[i] - k.target[i]);
                    return 0.5 * k.scale * r2;
                }
                else {
                    double s = 0.0;
                    for (std::size_t i = 0; i < x.size(); ++i)
                        s += k.signs[i] * x[i];
                    return k.gain / std::sqrt(static_cast<double>(x.size())) * s;
                }
            },
            kind_);
    }

    DecisionVector gradient(const DecisionVector& x) const
    {
        check_dimension(x, "LossFunction::gradient");
        return std::visit(
            [&x](const auto& k) -> DecisionVector {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, Linear>) {
                    return k.g;
                }
                else if constexpr (std::is_same_v<K, QuadraticTracking>) {
                    return k.scale * (x - k.target);
                }
                else {
                    const double c = k.gain / std::sqrt(static_cast<double>(x.size()));
                    std::vector<double> g(x.size());
                    for (std::size_t i = 0; i < g.size(); ++i)
                        g[i] = c * k.signs[i];
                    return DecisionVector(std::move(g));
                }
            },
            kind_);
    }

    /// Analytic supremum of ||grad f|| over the box (an upper bound for quadratics).
    double gradient_norm_sup(const FeasibleSet& set) const
    {
        return std::visit(
            [&set](const auto& k) -> double {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, Linear>)
                    return norm2(k.g);
                else if constexpr (std::is_same_v<K, QuadraticTracking>)
                    return k.scale * (norm2(k.target) +
                                      set.half_width() * std::sqrt(static_cast<double>(set.dimension())));
                else
                    return k.gain;
            },
            kind_);
    }

private:
    void validate() const
    {
        if (const auto* q = std::get_if<QuadraticTracking>(&kind_)) {
            if (!(q->scale > 0.0) || !std::isfinite(q->scale))
                throw std::invalid_argument("QuadraticTracking: scale must be positive");
        }
        if (const auto* s = std::get_if<SignLinear>(&kind_)) {
            if (!(s->gain > 0.0))
                throw std::invalid_argument("SignLinear: gain must be positive");
            for (int w : s->signs)
                if (w != 1 && w != -1)
                    throw std::invalid_argument("SignLinear: signs must be +1 or -1");
        }
    }

    void check_dimension(const DecisionVector& x, const char* where) const
    {
        if (x.size() != dimension())
            throw std::invalid_argument(std::string(where) + ": dimension mismatch");
    }

    Kind kind_;
    Round round_;
};

inline bool check_gradient_bound(const LossFunction& f, const FeasibleSet& set, double G)
{
    return f.gradient_norm_sup(set) <= G;
}

/// Scale for a G-bounded quadratic tracking loss whose targets stay inside the set.
inline double bounded_quadratic_scale(const FeasibleSet& set, double G)
{
    const double radius = set.half_width() * std::sqrt(static_cast<double>(set.dimension()));
    return G / (2.0 * radius + radius);
}

/// Linearization <g, x - anchor>, kept as data so traces can be replayed.
struct SurrogateLoss {
    DecisionVector anchor_gradient;
    DecisionVector anchor_point;
    Round timestamp = 0;

    double value(const DecisionVector& x) const
    {
        require_same_dimension(x, anchor_point, "SurrogateLoss::value");
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
            s += anchor_gradient[i] * (x[i] - anchor_point[i]);
        return s;
    }

    const DecisionVector& gradient(const DecisionVector&) const noexcept { return anchor_gradient; }
};

inline SurrogateLoss make_surrogate(DecisionVector grad, DecisionVector anchor, Round t)
{
    require_same_dimension(grad, anchor, "make_surrogate");
    return SurrogateLoss{std::move(grad), std::move(anchor), t};
}

struct FixedPointOptimum {
    DecisionVector point;
    double total_loss;
};

/// argmin over the box of sum_t f_t. Every supported family sums to
/// (S/2)||x||^2 + <b, x> + const with S >= 0, which is separable, so the
/// coordinate-wise clamp of the unconstrained minimizer is exact; when S = 0
/// the sum is linear and the optimum is a vertex (zero coordinates go to +h).
inline FixedPointOptimum best_fixed_point(std::span<const LossFunction> losses, const FeasibleSet& set)
{
    const std::size_t n = set.dimension();
    double curvature = 0.0;
    std::vector<double> linear(n, 0.0);
    for (const auto& f : losses) {
        if (f.dimension() != n)
            throw std::invalid_argument("best_fixed_point: dimension mismatch");
        std::visit(
            [&](const auto& k) {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, Linear>) {
                    for (std::size_t i = 0; i < n; ++i)
                        linear[i] += k.g[i];
                }
                else if constexpr (std::is_same_v<K, QuadraticTracking>) {
                    curvature += k.scale;
                    for (std::size_t i = 0; i < n; ++i)
                        linear[i] -= k.scale * k.target[i];
                }
                else {
                    const double c = k.gain / std::sqrt(static_cast<double>(n));
                    for (std::size_t i = 0; i < n; ++i)
                        linear[i] += c * k.signs[i];
                }
            },
            f.kind());
    }
    const double h = set.half_width();
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (curvature > 0.0)
            x[i] = std::clamp(-linear[i] / curvature, -h, h);
        else
            x[i] = linear[i] > 0.0 ? -h : h;
    }
    DecisionVector point(std::move(x));
    double total = 0.0;
    for (const auto& f : losses)
        total += f.value(point);
    return {std::move(point), total};
}

/// Brute-force minimum of sum_t f_t over a regular grid with spacing `step`
/// (n <= 2 only). Returns the best grid point.
inline FixedPointOptimum best_fixed_point_grid(std::span<const LossFunction> losses, const FeasibleSet& set,
                                               double step)
{
    const std::size_t n = set.dimension();
    if (n > 2)
        throw std::invalid_argument("best_fixed_point_grid: unsupported for dimension > 2");
    if (!(step > 0.0))
        throw std::invalid_argument("best_fixed_point_grid: step must be positive");
    const double h = set.half_width();
    const auto cells = static_cast<long>(std::floor(2.0 * h / step + 1e-9));
    std::vector<double> axis;
    for (long i = 0; i <= cells; ++i)
        axis.push_back(-h + static_cast<double>(i) * step);
    if (axis.back() < h)
        axis.push_back(h);
    auto total_at = [&](const DecisionVector& x) {
        double s = 0.0;
        for (const auto& f : losses)
            s += f.value(x);
        return s;
    };
    FixedPointOptimum best{DecisionVector::zeros(n), std::numeric_limits<double>::infinity()};
    if (n == 1) {
        for (double a : axis) {
            DecisionVector x{a};
            const double v = total_at(x);
            if (v < best.total_loss)
                best = {x, v};
        }
    }
    else {
        for (double a : axis)
            for (double b : axis) {
                DecisionVector x{a, b};
                const double v = total_at(x);
                if (v < best.total_loss)
                    best = {x, v};
            }
    }
    return best;
}

} // namespace doco
