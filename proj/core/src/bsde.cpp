#include "tic/bsde.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tic/regression.hpp"
#include "tic/stats.hpp"

namespace tic {

namespace {

bool slice_constant(std::span<const double> v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi - *lo < 1e-12 * (1.0 + std::abs(*hi));
}

int bin_count(std::size_t m) {
    return static_cast<int>(std::clamp<std::size_t>(m / 100, 1, 64));
}

PathDriver make_problem_driver(const ProblemInstance& problem, const ControlPath& control,
                               const StatePaths& states) {
    const double t = problem.grid.t_start;
    const TimeGrid grid = problem.grid;
    return [&problem, &control, &states, grid, t](int step, std::size_t path, double y,
                                                  double z) {
        const double s = grid.knot(step);
        const double x = states.at(path, step);
        return problem.bundle.f(s, x, control.at(path, step), y, z, t);
    };
}

} // namespace

std::vector<double> BsdeSolution::y_knot(int knot) const {
    std::vector<double> out(m_paths);
    for (std::size_t m = 0; m < m_paths; ++m) out[m] = y_at(m, knot);
    return out;
}

std::vector<double> BsdeSolution::z_knot(int knot) const {
    std::vector<double> out(m_paths);
    for (std::size_t m = 0; m < m_paths; ++m) out[m] = z_at(m, knot);
    return out;
}

BsdeSolution solve_bsde_backward(const TimeGrid& grid, const BrownianEnsemble& ensemble,
                                 const StatePaths& basis_states,
                                 std::span<const double> terminal,
                                 const PathDriver& driver, int basis_degree) {
    const std::size_t m = ensemble.paths();
    const int knots = grid.n_knots();
    if (basis_states.paths() != m || basis_states.knots() != knots)
        throw std::invalid_argument("solve_bsde_backward: basis/ensemble shape mismatch");
    if (terminal.size() != m)
        throw std::invalid_argument("solve_bsde_backward: terminal slice size mismatch");
    if (basis_degree < 1 || basis_degree > 5)
        throw std::invalid_argument("solve_bsde_backward: basis_degree must be in [1, 5]");

    const double dt = grid.dt();
    BsdeSolution sol;
    sol.m_paths = m;
    sol.knots = knots;
    sol.y.assign(m * knots, 0.0);
    sol.z.assign(m * knots, 0.0);
    for (std::size_t p = 0; p < m; ++p) sol.y[p * knots + knots - 1] = terminal[p];

    std::vector<double> ynext(terminal.begin(), terminal.end());
    std::vector<double> target(m), ycur(m), zcur(m);
    bool warned_reduced = false;

    for (int i = knots - 2; i >= 0; --i) {
        const std::vector<double> xs = basis_states.knot_slice(i);
        const KnotRegression reg(xs, basis_degree);
        if (reg.degree_reduced() && !warned_reduced) {
            sol.warnings.push_back("regression degree reduced at step " + std::to_string(i) +
                                   " (ill-conditioned basis)");
            warned_reduced = true;
        }

        // Z from the centered martingale increment: subtracting the
        // conditional mean E[Y_{i+1} | X_i] leaves the estimator unbiased
        // and removes almost all of its variance
        ycur = reg.fit(ynext); // also seeds the Picard sweeps below
        for (std::size_t p = 0; p < m; ++p)
            target[p] = (ynext[p] - ycur[p]) * ensemble.dw(p, i) / dt;
        zcur = reg.fit(target);
        for (int sweep = 0; sweep < 2; ++sweep) {
            for (std::size_t p = 0; p < m; ++p) {
                const double fv = driver(i, p, ycur[p], zcur[p]);
                if (!std::isfinite(fv))
                    throw std::runtime_error("solve_bsde_backward: non-finite driver value");
                target[p] = ynext[p] + fv * dt;
            }
            ycur = reg.fit(target);
        }

        for (std::size_t p = 0; p < m; ++p) {
            sol.y[p * knots + i] = ycur[p];
            sol.z[p * knots + i] = zcur[p];
        }
        ynext = ycur;
    }

    // terminal-knot Z copies the last interior regression value
    for (std::size_t p = 0; p < m; ++p)
        sol.z[p * knots + knots - 1] = sol.z[p * knots + knots - 2];

    const auto y0s = sol.y_knot(0);
    const auto z0s = sol.z_knot(0);
    sol.y0 = mean(y0s);
    sol.z0 = mean(z0s);
    sol.y0_sd = sample_sd(y0s);
    sol.z0_variance = sample_variance(z0s);
    return sol;
}

BsdeSolution solve_bsde_regression(const ProblemInstance& problem, const ControlPath& control,
                                   const StatePaths& states, const BrownianEnsemble& ensemble,
                                   int basis_degree) {
    const int knots = problem.grid.n_knots();
    const std::size_t m = ensemble.paths();
    const double t = problem.grid.t_start;
    std::vector<double> terminal(m);
    for (std::size_t p = 0; p < m; ++p)
        terminal[p] = problem.bundle.h(states.at(p, knots - 1), t);
    return solve_bsde_backward(problem.grid, ensemble, states, terminal,
                               make_problem_driver(problem, control, states), basis_degree);
}

BsdeSolution solve_linear_bsde_explicit(const LinearBsdeSpec& spec, const TimeGrid& grid,
                                        const BrownianEnsemble& ensemble) {
    if (!spec.beta || !spec.gamma || !spec.xi)
        throw std::invalid_argument("solve_linear_bsde_explicit: beta, gamma, xi required");
    const std::size_t m = ensemble.paths();
    const int knots = grid.n_knots();
    const int steps = knots - 1;
    const double dt = grid.dt();

    std::vector<double> beta(steps), gamma(steps);
    for (int i = 0; i < steps; ++i) {
        beta[i] = spec.beta(grid.knot(i));
        gamma[i] = spec.gamma(grid.knot(i));
        if (!std::isfinite(beta[i]) || !std::isfinite(gamma[i]))
            throw std::runtime_error("solve_linear_bsde_explicit: non-finite beta/gamma");
    }

    // eta per path per knot, exact exponential with left-point quadrature
    std::vector<double> eta(m * knots, 1.0);
    for (std::size_t p = 0; p < m; ++p) {
        double log_eta = 0.0;
        for (int i = 0; i < steps; ++i) {
            log_eta += (beta[i] - 0.5 * gamma[i] * gamma[i]) * dt +
                       gamma[i] * ensemble.dw(p, i);
            eta[p * knots + i + 1] = std::exp(log_eta);
        }
    }

    // tail sums S(i) = eta(T) xi + sum_{j >= i} eta_j alpha_j dt
    std::vector<double> tail(m);
    for (std::size_t p = 0; p < m; ++p)
        tail[p] = eta[p * knots + knots - 1] * spec.xi(p);

    std::vector<std::vector<double>> s_at(knots);
    s_at[knots - 1] = tail;
    for (int i = steps - 1; i >= 0; --i) {
        if (spec.alpha) {
            const double s = grid.knot(i);
            for (std::size_t p = 0; p < m; ++p)
                tail[p] += eta[p * knots + i] * spec.alpha(s, p) * dt;
        }
        s_at[i] = tail;
    }

    BsdeSolution sol;
    sol.m_paths = m;
    sol.knots = knots;
    sol.y.assign(m * knots, 0.0);
    sol.z.assign(m * knots, 0.0);

    auto condition_slice = [&](int knot) -> std::vector<double> {
        if (spec.basis_states) return spec.basis_states->knot_slice(knot);
        std::vector<double> w(m);
        for (std::size_t p = 0; p < m; ++p) w[p] = ensemble.w(p, knot);
        return w;
    };

    std::vector<std::vector<double>> xi_knot(knots); // Xi values per knot
    for (int i = 0; i < knots; ++i) {
        const std::vector<double> cond = condition_slice(i);
        std::vector<double> ce;
        if (i == 0 || slice_constant(cond)) {
            ce.assign(m, mean(s_at[i]));
        } else {
            ce = BinConditional(cond, bin_count(m)).fit(s_at[i]);
        }
        xi_knot[i].resize(m);
        for (std::size_t p = 0; p < m; ++p) {
            const double v = ce[p] / eta[p * knots + i];
            xi_knot[i][p] = v;
            sol.y[p * knots + i] = v;
        }
    }

    // Theta by centered martingale-increment regression
    std::vector<double> target(m);
    for (int i = 0; i < steps; ++i) {
        const std::vector<double> cond = condition_slice(i);
        const bool flat = i == 0 || slice_constant(cond);
        std::vector<double> ce_next; // E[Xi_{i+1} | F_i] as control variate
        if (flat) {
            ce_next.assign(m, mean(xi_knot[i + 1]));
        } else {
            ce_next = BinConditional(cond, bin_count(m)).fit(xi_knot[i + 1]);
        }
        for (std::size_t p = 0; p < m; ++p)
            target[p] = (xi_knot[i + 1][p] - ce_next[p]) * ensemble.dw(p, i) / dt;
        std::vector<double> theta;
        if (flat) {
            theta.assign(m, mean(target));
        } else {
            theta = KnotRegression(cond, 3).fit(target);
        }
        for (std::size_t p = 0; p < m; ++p) sol.z[p * knots + i] = theta[p];
    }
    for (std::size_t p = 0; p < m; ++p)
        sol.z[p * knots + knots - 1] = sol.z[p * knots + knots - 2];

    const auto y0s = sol.y_knot(0);
    const auto z0s = sol.z_knot(0);
    sol.y0 = mean(y0s);
    sol.z0 = mean(z0s);
    sol.y0_sd = sample_sd(y0s);
    sol.z0_variance = sample_variance(z0s);
    return sol;
}

CostEvaluation evaluate_cost_functional(const ProblemInstance& problem,
                                        const ControlPath& control,
                                        const BrownianEnsemble& ensemble,
                                        int basis_degree) {
    const StatePaths states = solve_state_forward(problem, control, ensemble);
    const BsdeSolution sol =
        solve_bsde_regression(problem, control, states, ensemble, basis_degree);

    const std::size_t m = ensemble.paths();
    const int knots = problem.grid.n_knots();
    const double dt = problem.grid.dt();
    const double t = problem.grid.t_start;

    std::vector<double> totals(m);
    for (std::size_t p = 0; p < m; ++p) {
        double acc = 0.0;
        for (int i = 0; i < knots - 1; ++i) {
            acc += problem.bundle.f(problem.grid.knot(i), states.at(p, i), control.at(p, i),
                                    sol.y_at(p, i), sol.z_at(p, i), t) *
                   dt;
        }
        acc += problem.bundle.h(states.at(p, knots - 1), t);
        totals[p] = acc;
    }

    CostEvaluation out;
    out.value = sol.y0;
    out.expectation_form = mean(totals);
    out.standard_error = standard_error(totals);
    return out;
}

ComparisonVerdict comparison_check(const LinearBsdeSpec& spec, const TimeGrid& grid,
                                   const BrownianEnsemble& ensemble) {
    ComparisonVerdict v;
    const std::size_t m = ensemble.paths();
    const int steps = grid.n_steps;
    bool nonneg = true;
    for (std::size_t p = 0; p < m && nonneg; ++p) {
        if (spec.xi(p) < 0.0) nonneg = false;
        if (spec.alpha)
            for (int i = 0; i < steps; ++i)
                if (spec.alpha(grid.knot(i), p) < 0.0) {
                    nonneg = false;
                    break;
                }
    }
    v.precondition_met = nonneg;
    if (!nonneg) return v; // guard case: no assertion made

    const BsdeSolution sol = solve_linear_bsde_explicit(spec, grid, ensemble);
    v.min_value = sol.y[0];
    for (std::size_t p = 0; p < m; ++p)
        for (int i = 0; i < sol.knots; ++i)
            if (sol.y_at(p, i) < v.min_value) {
                v.min_value = sol.y_at(p, i);
                v.worst_path = p;
                v.worst_knot = i;
            }
    v.holds = v.min_value >= -1e-8;
    return v;
}

StabilityTable stability_check(const ProblemInstance& problem, const ControlPath& control,
                               const StatePaths& states, const BrownianEnsemble& ensemble,
                               std::span<const double> perturbation_sizes,
                               int basis_degree) {
    const std::size_t m = ensemble.paths();
    const int knots = problem.grid.n_knots();
    const double t = problem.grid.t_start;

    std::vector<double> terminal(m);
    for (std::size_t p = 0; p < m; ++p)
        terminal[p] = problem.bundle.h(states.at(p, knots - 1), t);
    const PathDriver driver = make_problem_driver(problem, control, states);
    const BsdeSolution base = solve_bsde_backward(problem.grid, ensemble, states, terminal,
                                                  driver, basis_degree);

    std::vector<double> deltas(perturbation_sizes.begin(), perturbation_sizes.end());
    std::sort(deltas.begin(), deltas.end(), std::greater<>());

    StabilityTable table;
    std::vector<double> shifted(m);
    for (double delta : deltas) {
        StabilityRow row;
        row.delta = delta;
        if (delta == 0.0) {
            table.rows.push_back(row);
            continue;
        }
        for (std::size_t p = 0; p < m; ++p) shifted[p] = terminal[p] + delta;
        const BsdeSolution pert = solve_bsde_backward(problem.grid, ensemble, states, shifted,
                                                      driver, basis_degree);
        double sup = 0.0, zsq = 0.0;
        for (std::size_t idx = 0; idx < base.y.size(); ++idx) {
            sup = std::max(sup, std::abs(pert.y[idx] - base.y[idx]));
            const double dz = pert.z[idx] - base.z[idx];
            zsq += dz * dz;
        }
        row.y_sup_diff = sup;
        row.z_l2_diff = std::sqrt(zsq / static_cast<double>(base.y.size()));
        table.rows.push_back(row);
    }

    table.fitted_constant = 0.0;
    table.monotone = true;
    double prev_y = -1.0, prev_z = -1.0;
    for (const auto& row : table.rows) {
        if (row.delta > 0.0)
            table.fitted_constant = std::max(table.fitted_constant, row.y_sup_diff / row.delta);
        if (prev_y >= 0.0 && (row.y_sup_diff > prev_y + 1e-12 || row.z_l2_diff > prev_z + 1e-12))
            table.monotone = false;
        prev_y = row.y_sup_diff;
        prev_z = row.z_l2_diff;
    }
    return table;
}

} // namespace tic
