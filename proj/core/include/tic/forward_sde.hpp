#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tic/brownian.hpp"
#include "tic/coefficients.hpp"
#include "tic/control.hpp"

namespace tic {

/// State trajectories X(s_i) per path on the problem grid.
class StatePaths {
public:
    StatePaths() = default;
    StatePaths(std::size_t m_paths, int n_knots, ForwardScheme scheme)
        : m_(m_paths), knots_(n_knots), scheme_(scheme),
          x_(m_paths * static_cast<std::size_t>(n_knots), 0.0) {}

    std::size_t paths() const { return m_; }
    int knots() const { return knots_; }
    ForwardScheme scheme() const { return scheme_; }

    double& at(std::size_t path, int knot) { return x_[path * knots_ + knot]; }
    double at(std::size_t path, int knot) const { return x_[path * knots_ + knot]; }
    std::span<const double> path(std::size_t m) const {
        return {x_.data() + m * knots_, static_cast<std::size_t>(knots_)};
    }
    /// Values at one knot gathered across paths.
    std::vector<double> knot_slice(int knot) const;

    /// Paths that left the state domain under the plain Euler scheme.
    std::int64_t flagged_paths = 0;

private:
    std::size_t m_ = 0;
    int knots_ = 0;
    ForwardScheme scheme_ = ForwardScheme::euler;
    std::vector<double> x_;
};

/// Euler-Maruyama (or log-Euler for multiplicative dynamics) solve of the
/// controlled state equation on the given ensemble. Throws if more than 0.1%
/// of the paths leave the state domain under the plain Euler scheme.
StatePaths solve_state_forward(const ProblemInstance& problem, const ControlPath& control,
                               const BrownianEnsemble& ensemble);

struct PolicyRun {
    StatePaths states;
    ControlPath controls;
};

/// Forward solve with the control generated on the fly from a feedback
/// policy (clamped into the control domain).
PolicyRun solve_state_forward(const ProblemInstance& problem, const FeedbackPolicy& policy,
                              const BrownianEnsemble& ensemble);

/// Spike window [start, start + epsilon], snapped to grid knots.
struct SpikeWindow {
    double start = 0.0;
    double epsilon = 0.0;
};

struct SnappedWindow {
    int first_knot = 0; // first control knot replaced
    int n_knots = 0;    // number of replaced knots
    double measure = 0.0; // snapped |E| = n_knots * dt
};

/// Snaps the window to knot boundaries; when start + epsilon overruns the
/// horizon the window becomes [T - eps, T]. Requires 0 < epsilon < T - t.
SnappedWindow snap_window(const SpikeWindow& window, const TimeGrid& grid);

/// Spike variation: base control outside the window, deviation inside.
ControlPath apply_spike_variation(const ControlPath& base, const Control& deviation,
                                  const SpikeWindow& window, const ProblemInstance& problem);

/// First-order variational process X1 along the base tuple:
///   dX1 = b_x X1 ds + [sigma_x X1 + delta_sigma 1_E] dW,  X1(t) = 0,
/// solved by Euler-Maruyama on the same ensemble.
StatePaths solve_variational_first(const ProblemInstance& problem, const StatePaths& base_states,
                                   const ControlPath& base_controls, const Control& deviation,
                                   const SpikeWindow& window, const BrownianEnsemble& ensemble);

} // namespace tic
