#include "tic/forward_sde.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

#include "tic/parallel.hpp"

namespace tic {

std::vector<double> StatePaths::knot_slice(int knot) const {
    std::vector<double> out(m_);
    for (std::size_t m = 0; m < m_; ++m) out[m] = at(m, knot);
    return out;
}

namespace {

void check_shapes(const ProblemInstance& problem, const BrownianEnsemble& ensemble) {
    if (ensemble.grid().n_steps != problem.grid.n_steps ||
        ensemble.grid().t_start != problem.grid.t_start ||
        ensemble.grid().t_end != problem.grid.t_end)
        throw std::invalid_argument("forward solve: ensemble grid does not match problem grid");
}

/// One Euler / log-Euler step; returns the next state.
inline double step_state(const ProblemInstance& problem, double s, double x,
                         std::span<const double> u, double dt, double dw) {
    const double drift = problem.bundle.b(s, x, u);
    const double diff = problem.bundle.sigma(s, x, u);
    if (problem.scheme == ForwardScheme::log_euler) {
        // Multiplicative dynamics: exponential update on log X keeps the
        // state strictly positive.
        const double bt = drift / x;
        const double st = diff / x;
        return x * std::exp((bt - 0.5 * st * st) * dt + st * dw);
    }
    return x + drift * dt + diff * dw;
}

template <typename ControlAt>
StatePaths forward_impl(const ProblemInstance& problem, const BrownianEnsemble& ensemble,
                        ControlAt&& control_at) {
    check_shapes(problem, ensemble);
    const int n = problem.grid.n_steps;
    const double dt = problem.grid.dt();
    StatePaths out(ensemble.paths(), n + 1, problem.scheme);
    std::atomic<std::int64_t> flagged{0};

    parallel_for_blocks(ensemble.paths(), [&](std::size_t lo, std::size_t hi) {
        std::int64_t local_flagged = 0;
        for (std::size_t m = lo; m < hi; ++m) {
            double x = problem.x0;
            out.at(m, 0) = x;
            bool bad = false;
            for (int i = 0; i < n; ++i) {
                const double s = problem.grid.knot(i);
                x = step_state(problem, s, x, control_at(m, i, x), dt, ensemble.dw(m, i));
                if (!problem.states.interior(x)) {
                    bad = true;
                    x = problem.states.project_inside(x);
                }
                out.at(m, i + 1) = x;
            }
            if (bad) ++local_flagged;
        }
        flagged.fetch_add(local_flagged);
    });
    out.flagged_paths = flagged.load();
    if (out.flagged_paths * 1000 > static_cast<std::int64_t>(ensemble.paths()))
        throw std::runtime_error("solve_state_forward: more than 0.1% of paths left the state domain");
    return out;
}

} // namespace

StatePaths solve_state_forward(const ProblemInstance& problem, const ControlPath& control,
                               const BrownianEnsemble& ensemble) {
    if (control.paths() != ensemble.paths() || control.knots() < problem.grid.n_steps)
        throw std::invalid_argument("solve_state_forward: control path shape mismatch");
    return forward_impl(problem, ensemble,
                        [&](std::size_t m, int i, double) { return control.at(m, i); });
}

PolicyRun solve_state_forward(const ProblemInstance& problem, const FeedbackPolicy& policy,
                              const BrownianEnsemble& ensemble) {
    check_shapes(problem, ensemble);
    const int knots = problem.grid.n_knots();
    const int dim = problem.controls.dim();
    ControlPath controls(ensemble.paths(), knots, dim);
    std::atomic<std::int64_t> clamps{0};

    auto control_at = [&](std::size_t m, int i, double x) {
        Control u = policy(problem.grid.knot(i), x);
        auto slot = controls.at(m, i);
        std::copy(u.begin(), u.end(), slot.begin());
        std::int64_t c = 0;
        problem.controls.clamp(slot, &c);
        if (c) clamps.fetch_add(c);
        return std::span<const double>(slot.data(), slot.size());
    };
    StatePaths states = forward_impl(problem, ensemble, control_at);

    // Terminal knot control (not used by the dynamics, kept for bookkeeping).
    for (std::size_t m = 0; m < ensemble.paths(); ++m) {
        Control u = policy(problem.grid.t_end, states.at(m, knots - 1));
        auto slot = controls.at(m, knots - 1);
        std::copy(u.begin(), u.end(), slot.begin());
        std::int64_t c = 0;
        problem.controls.clamp(slot, &c);
        if (c) clamps.fetch_add(c);
    }
    controls.clamp_count = clamps.load();
    return {std::move(states), std::move(controls)};
}

SnappedWindow snap_window(const SpikeWindow& window, const TimeGrid& grid) {
    const double horizon = grid.horizon();
    if (!(window.epsilon > 0.0) || window.epsilon >= horizon)
        throw std::invalid_argument("snap_window: epsilon must lie in ]0, T - t[");
    const double dt = grid.dt();
    SnappedWindow snapped;
    snapped.n_knots = std::max(1, static_cast<int>(std::llround(window.epsilon / dt)));
    if (snapped.n_knots >= grid.n_steps)
        snapped.n_knots = grid.n_steps - 1;
    snapped.first_knot = grid.nearest_knot(window.start);
    if (snapped.first_knot + snapped.n_knots > grid.n_steps)
        snapped.first_knot = grid.n_steps - snapped.n_knots; // window [T - eps, T]
    snapped.measure = snapped.n_knots * dt;
    return snapped;
}

ControlPath apply_spike_variation(const ControlPath& base, const Control& deviation,
                                  const SpikeWindow& window, const ProblemInstance& problem) {
    const SnappedWindow snapped = snap_window(window, problem.grid);
    ControlPath out = base;
    Control dev = deviation;
    problem.controls.clamp(dev);
    for (std::size_t m = 0; m < base.paths(); ++m)
        for (int i = snapped.first_knot; i < snapped.first_knot + snapped.n_knots; ++i) {
            auto slot = out.at(m, i);
            std::copy(dev.begin(), dev.end(), slot.begin());
        }
    return out;
}

StatePaths solve_variational_first(const ProblemInstance& problem, const StatePaths& base_states,
                                   const ControlPath& base_controls, const Control& deviation,
                                   const SpikeWindow& window, const BrownianEnsemble& ensemble) {
    const SnappedWindow snapped = snap_window(window, problem.grid);
    const int n = problem.grid.n_steps;
    const double dt = problem.grid.dt();
    Control dev = deviation;
    problem.controls.clamp(dev);

    StatePaths out(ensemble.paths(), n + 1, ForwardScheme::euler);
    parallel_for_blocks(ensemble.paths(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t m = lo; m < hi; ++m) {
            double x1 = 0.0;
            out.at(m, 0) = x1;
            for (int i = 0; i < n; ++i) {
                const double s = problem.grid.knot(i);
                const double xb = base_states.at(m, i);
                const auto ub = base_controls.at(m, i);
                const double bx = problem.bundle.b_x(s, xb, ub);
                const double sx = problem.bundle.sigma_x(s, xb, ub);
                double forcing = 0.0;
                if (i >= snapped.first_knot && i < snapped.first_knot + snapped.n_knots)
                    forcing = problem.bundle.sigma(s, xb, dev) - problem.bundle.sigma(s, xb, ub);
                x1 = x1 + bx * x1 * dt + (sx * x1 + forcing) * ensemble.dw(m, i);
                out.at(m, i + 1) = x1;
            }
        }
    });
    return out;
}

} // namespace tic
