#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace doco {

/// A point in R^n. Entries are always finite.
class DecisionVector {
public:
    DecisionVector() = default;

    explicit DecisionVector(std::size_t n, double fill = 0.0) : coords_(n, fill) { check_finite(); }

    explicit DecisionVector(std::vector<double> coords) : coords_(std::move(coords)) { check_finite(); }

    DecisionVector(std::initializer_list<double> coords) : coords_(coords) { check_finite(); }

    static DecisionVector zeros(std::size_t n) { return DecisionVector(n, 0.0); }

    std::size_t size() const noexcept { return coords_.size(); }
    double operator[](std::size_t i) const { return coords_[i]; }
    double& operator[](std::size_t i) { return coords_[i]; }

    std::span<const double> coords() const noexcept { return coords_; }
    const std::vector<double>& data() const noexcept { return coords_; }

    auto begin() const noexcept { return coords_.begin(); }
    auto end() const noexcept { return coords_.end(); }

    bool operator==(const DecisionVector&) const = default;

private:
    void check_finite() const
    {
        for (double c : coords_)
            if (!std::isfinite(c))
                throw std::invalid_argument("DecisionVector: non-finite coordinate");
    }

    std::vector<double> coords_;
};

inline void require_same_dimension(const DecisionVector& a, const DecisionVector& b, const char* where)
{
    if (a.size() != b.size())
        throw std::invalid_argument(std::string(where) + ": dimension mismatch (" + std::to_string(a.size()) +
                                    " vs " + std::to_string(b.size()) + ")");
}

inline double dot(const DecisionVector& a, const DecisionVector& b)
{
    require_same_dimension(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

inline double norm2(const DecisionVector& a)
{
    double s = 0.0;
    for (double c : a)
        s += c * c;
    return std::sqrt(s);
}

inline double distance(const DecisionVector& a, const DecisionVector& b)
{
    require_same_dimension(a, b, "distance");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        s += diff * diff;
    }
    return std::sqrt(s);
}

inline DecisionVector operator-(const DecisionVector& a, const DecisionVector& b)
{
    require_same_dimension(a, b, "operator-");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = a[i] - b[i];
    return DecisionVector(std::move(out));
}

inline DecisionVector operator+(const DecisionVector& a, const DecisionVector& b)
{
    require_same_dimension(a, b, "operator+");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = a[i] + b[i];
    return DecisionVector(std::move(out));
}

inline DecisionVector operator*(double scale, const DecisionVector& a)
{
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = scale * a[i];
    return DecisionVector(std::move(out));
}

/// y - step * g, the unprojected gradient step.
inline DecisionVector descent_step(const DecisionVector& y, double step, const DecisionVector& g)
{
    require_same_dimension(y, g, "descent_step");
    std::vector<double> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
        out[i] = y[i] - step * g[i];
    return DecisionVector(std::move(out));
}

/// Origin-centered box [-h, h]^n.
class FeasibleSet {
public:
    FeasibleSet(std::size_t dimension, double half_width) : n_(dimension), h_(half_width)
    {
        if (dimension == 0)
            throw std::invalid_argument("FeasibleSet: dimension must be positive");
        if (!(half_width > 0.0) || !std::isfinite(half_width))
            throw std::invalid_argument("FeasibleSet: half width must be positive and finite");
    }

    /// Box whose Euclidean diameter equals `diameter`: h = D / (2 sqrt(n)).
    static FeasibleSet from_diameter(double diameter, std::size_t dimension)
    {
        if (dimension == 0)
            throw std::invalid_argument("FeasibleSet: dimension must be positive");
        return FeasibleSet(dimension, diameter / (2.0 * std::sqrt(static_cast<double>(dimension))));
    }

    std::size_t dimension() const noexcept { return n_; }
    double half_width() const noexcept { return h_; }

    double diameter() const noexcept { return 2.0 * h_ * std::sqrt(static_cast<double>(n_)); }

    bool contains(const DecisionVector& p) const
    {
        if (p.size() != n_)
            return false;
        return std::all_of(p.begin(), p.end(), [this](double c) { return c >= -h_ && c <= h_; });
    }

    /// Euclidean projection; for a box this is the coordinate-wise clamp.
    DecisionVector project(const DecisionVector& p) const
    {
        if (p.size() != n_)
            throw std::invalid_argument("project: dimension mismatch (" + std::to_string(p.size()) + " vs " +
                                        std::to_string(n_) + ")");
        std::vector<double> out(n_);
        for (std::size_t i = 0; i < n_; ++i)
            out[i] = std::clamp(p[i], -h_, h_);
        return DecisionVector(std::move(out));
    }

    DecisionVector origin() const { return DecisionVector::zeros(n_); }

private:
    std::size_t n_;
    double h_;
};

inline DecisionVector project(const FeasibleSet& set, const DecisionVector& p) { return set.project(p); }
inline double diameter(const FeasibleSet& set) { return set.diameter(); }

} // namespace doco
