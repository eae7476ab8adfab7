#pragma once

#include <stdexcept>
#include <vector>

namespace tic {

/// Uniform time grid on [t_start, t_end] with n_steps intervals.
/// Knots are s_i = t_start + i * dt, i = 0..n_steps.
struct TimeGrid {
    double t_start = 0.0;
    double t_end = 1.0;
    int n_steps = 1;

    TimeGrid() = default;
    TimeGrid(double a, double b, int n) : t_start(a), t_end(b), n_steps(n) {
        if (!(a < b))
            throw std::invalid_argument("TimeGrid: t_start must be < t_end");
        if (n < 1)
            throw std::invalid_argument("TimeGrid: n_steps must be >= 1");
    }

    double dt() const { return (t_end - t_start) / n_steps; }
    int n_knots() const { return n_steps + 1; }
    double knot(int i) const { return t_start + i * dt(); }
    double horizon() const { return t_end - t_start; }

    /// Index of the knot closest to time s.
    int nearest_knot(double s) const {
        double u = (s - t_start) / dt();
        int i = static_cast<int>(u + 0.5);
        if (i < 0) i = 0;
        if (i > n_steps) i = n_steps;
        return i;
    }

    /// Sub-grid [knot(i0), t_end] sharing the knots of this grid.
    TimeGrid suffix(int i0) const {
        if (i0 < 0 || i0 >= n_steps)
            throw std::invalid_argument("TimeGrid::suffix: index out of range");
        return TimeGrid(knot(i0), t_end, n_steps - i0);
    }
};

} // namespace tic
