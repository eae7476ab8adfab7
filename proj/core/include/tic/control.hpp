#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "tic/time_grid.hpp"

namespace tic {

using Control = std::vector<double>;

/// Box control domain U = prod_i [lower_i, upper_i].
struct ControlDomain {
    std::vector<double> lower;
    std::vector<double> upper;

    ControlDomain() = default;
    ControlDomain(std::vector<double> lo, std::vector<double> hi)
        : lower(std::move(lo)), upper(std::move(hi)) {
        if (lower.size() != upper.size() || lower.empty())
            throw std::invalid_argument("ControlDomain: bound size mismatch");
        for (std::size_t i = 0; i < lower.size(); ++i)
            if (!(lower[i] <= upper[i]))
                throw std::invalid_argument("ControlDomain: lower > upper");
    }

    int dim() const { return static_cast<int>(lower.size()); }

    bool contains(std::span<const double> u) const {
        if (u.size() != lower.size()) return false;
        for (std::size_t i = 0; i < u.size(); ++i)
            if (u[i] < lower[i] || u[i] > upper[i]) return false;
        return true;
    }

    /// Clamps u into the box componentwise; increments *clamps when a
    /// coordinate was moved.
    void clamp(std::span<double> u, std::int64_t* clamps = nullptr) const {
        for (std::size_t i = 0; i < u.size(); ++i) {
            double v = u[i];
            if (v < lower[i]) v = lower[i];
            if (v > upper[i]) v = upper[i];
            if (v != u[i]) {
                u[i] = v;
                if (clamps) ++*clamps;
            }
        }
    }
};

/// Markov feedback policy u = Pi(s, x). Values outside the control domain
/// are clamped by the consumers.
using FeedbackPolicy = std::function<Control(double s, double x)>;

/// Piecewise-constant control values on grid knots, per path.
/// u(s) = value at knot i for s in [s_i, s_{i+1}).
class ControlPath {
public:
    ControlPath() = default;
    ControlPath(std::size_t m_paths, int n_knots, int dim)
        : m_(m_paths), knots_(n_knots), dim_(dim),
          data_(m_paths * static_cast<std::size_t>(n_knots) * dim, 0.0) {}

    std::size_t paths() const { return m_; }
    int knots() const { return knots_; }
    int dim() const { return dim_; }

    std::span<double> at(std::size_t path, int knot) {
        return {data_.data() + (path * knots_ + knot) * dim_, static_cast<std::size_t>(dim_)};
    }
    std::span<const double> at(std::size_t path, int knot) const {
        return {data_.data() + (path * knots_ + knot) * dim_, static_cast<std::size_t>(dim_)};
    }

    std::int64_t clamp_count = 0;

    bool operator==(const ControlPath& o) const {
        return m_ == o.m_ && knots_ == o.knots_ && dim_ == o.dim_ && data_ == o.data_;
    }

private:
    std::size_t m_ = 0;
    int knots_ = 0;
    int dim_ = 0;
    std::vector<double> data_;
};

/// Constant-in-(s,x) policy.
inline FeedbackPolicy constant_policy(Control u) {
    return [u = std::move(u)](double, double) { return u; };
}

} // namespace tic
