#include "tic/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "tic/stats.hpp"

namespace tic {

namespace {

Control control_at(const ControlPath& controls, std::size_t path, int knot) {
    const auto span = controls.at(path, knot);
    return {span.begin(), span.end()};
}

HamiltonianArgs args_at(const ProblemInstance& problem, const CandidateTuple& tuple,
                        const AdjointBundle& adjoints, int knot, std::size_t path) {
    HamiltonianArgs a;
    a.s = problem.grid.knot(knot);
    a.t = problem.grid.t_start;
    a.x = a.x_bar = tuple.states->at(path, knot);
    a.u_bar = control_at(*tuple.controls, path, knot);
    a.y = tuple.utility->y_at(path, knot);
    a.z = tuple.utility->z_at(path, knot);
    a.p = adjoints.first.y_at(path, knot);
    a.q = adjoints.first.z_at(path, knot);
    a.P = adjoints.second.y_at(path, knot);
    return a;
}

// At the initial knot the regression basis is degenerate (one state point),
// so the covariance estimators of Z(t;t) and q(t;t) carry an O(1/sqrt(M))
// noise floor of order the value itself. The first interior knot gives the
// same quantities up to O(dt) with far less variance; read them there.
struct EndpointSmoothing {
    bool active = false;
    double z = 0.0; // Z(t;t) stand-in
    double q = 0.0; // q(t;t) stand-in
};

EndpointSmoothing smoothing_for(const CandidateTuple& tuple, const AdjointBundle& adjoints,
                                int knot) {
    EndpointSmoothing s;
    if (knot != 0 || tuple.utility->knots < 2) return s;
    s.active = true;
    s.z = mean(tuple.utility->z_knot(1));
    s.q = mean(adjoints.first.z_knot(1));
    return s;
}

// per-path expectation-form totals int f ds + h along a solved control
std::vector<double> pathwise_totals(const ProblemInstance& problem, const ControlPath& control,
                                    const StatePaths& states, const BsdeSolution& sol) {
    const std::size_t m = states.paths();
    const int knots = states.knots();
    const double dt = problem.grid.dt();
    const double t = problem.grid.t_start;
    std::vector<double> totals(m);
    for (std::size_t p = 0; p < m; ++p) {
        double acc = 0.0;
        for (int i = 0; i < knots - 1; ++i)
            acc += problem.bundle.f(problem.grid.knot(i), states.at(p, i), control.at(p, i),
                                    sol.y_at(p, i), sol.z_at(p, i), t) *
                   dt;
        totals[p] = acc + problem.bundle.h(states.at(p, knots - 1), t);
    }
    return totals;
}

} // namespace

MeanEstimate estimate_spike_limit_adjoint(const ProblemInstance& problem,
                                          const CandidateTuple& tuple,
                                          const AdjointBundle& adjoints, const KappaPath& kappa,
                                          const Control& deviation, double s) {
    const int knot = problem.grid.nearest_knot(s);
    if (knot >= problem.grid.n_knots() - 1)
        throw std::invalid_argument("estimate_spike_limit_adjoint: s must be before T");
    const std::size_t m = tuple.states->paths();
    const EndpointSmoothing smooth = smoothing_for(tuple, adjoints, knot);
    std::vector<double> samples(m);
    for (std::size_t p = 0; p < m; ++p) {
        HamiltonianArgs a = args_at(problem, tuple, adjoints, knot, p);
        if (smooth.active) {
            a.z = smooth.z;
            a.q = smooth.q;
        }
        samples[p] = kappa.at(p, knot) * delta_hamiltonian(problem.bundle, a, deviation);
    }
    return {mean(samples), standard_error(samples)};
}

std::vector<double> default_epsilon_ladder(double horizon) {
    return {0.16 * horizon, 0.08 * horizon, 0.04 * horizon, 0.02 * horizon};
}

SpikeLimitEstimate estimate_spike_limit_direct(const ProblemInstance& problem,
                                               const ControlPath& base_control,
                                               const Control& deviation, double s,
                                               std::span<const double> epsilon_ladder,
                                               const BrownianEnsemble& ensemble,
                                               int basis_degree) {
    if (epsilon_ladder.size() < 2)
        throw std::invalid_argument("estimate_spike_limit_direct: need >= 2 ladder entries");
    std::vector<double> ladder(epsilon_ladder.begin(), epsilon_ladder.end());
    std::sort(ladder.begin(), ladder.end(), std::greater<>());

    const StatePaths base_states = solve_state_forward(problem, base_control, ensemble);
    const BsdeSolution base_sol =
        solve_bsde_regression(problem, base_control, base_states, ensemble, basis_degree);
    const std::vector<double> base_totals =
        pathwise_totals(problem, base_control, base_states, base_sol);

    SpikeLimitEstimate out;
    const std::size_t m = ensemble.paths();
    std::vector<double> diffs(m);
    double prev_measure = -1.0;
    for (double eps : ladder) {
        const SpikeWindow window{s, eps};
        const SnappedWindow snapped = snap_window(window, problem.grid);
        if (snapped.measure == prev_measure)
            throw std::invalid_argument(
                "estimate_spike_limit_direct: epsilon ladder exhausts grid resolution");
        prev_measure = snapped.measure;

        const ControlPath spiked =
            apply_spike_variation(base_control, deviation, window, problem);
        const StatePaths states = solve_state_forward(problem, spiked, ensemble);
        const BsdeSolution sol =
            solve_bsde_regression(problem, spiked, states, ensemble, basis_degree);
        const std::vector<double> totals = pathwise_totals(problem, spiked, states, sol);

        for (std::size_t p = 0; p < m; ++p)
            diffs[p] = (totals[p] - base_totals[p]) / snapped.measure;
        out.direct_values.emplace_back(snapped.measure, mean(diffs));
        out.quotient_se.push_back(standard_error(diffs));
    }

    const auto n = out.direct_values.size();
    const auto [e1, q1] = out.direct_values[n - 2];
    const auto [e2, q2] = out.direct_values[n - 1];
    out.extrapolated_direct = q2 + (q2 - q1) * e2 / (e1 - e2);

    out.differences_shrinking = true;
    for (std::size_t k = 0; k + 2 < n; ++k) {
        const double d_prev =
            std::abs(out.direct_values[k + 1].second - out.direct_values[k].second);
        const double d_next =
            std::abs(out.direct_values[k + 2].second - out.direct_values[k + 1].second);
        const double slack = 3.0 * (out.quotient_se[k] + 2.0 * out.quotient_se[k + 1] +
                                    out.quotient_se[k + 2]);
        if (d_next > d_prev + slack) out.differences_shrinking = false;
    }
    return out;
}

ArgminResult argmin_hamiltonian(const CoefficientBundle& bundle, const HamiltonianArgs& frozen,
                                const ControlDomain& domain, int resolution,
                                bool use_first_order) {
    if (resolution < 2) throw std::invalid_argument("argmin_hamiltonian: resolution < 2");
    const std::size_t dim = domain.dim();
    ArgminResult out;
    out.cell_width.resize(dim);
    for (std::size_t k = 0; k < dim; ++k)
        out.cell_width[k] = (domain.upper[k] - domain.lower[k]) / (resolution - 1);

    const auto value_of = [&](const Control& u) {
        const HamiltonianEval ev = eval_hamiltonian(bundle, frozen, u);
        return use_first_order ? ev.value_H : ev.value_calH;
    };
    out.reference_value = value_of(frozen.u_bar);

    Control u(dim, 0.0);
    std::vector<int> idx(dim, 0);
    bool first = true;
    while (true) {
        for (std::size_t k = 0; k < dim; ++k)
            u[k] = domain.lower[k] + idx[k] * out.cell_width[k];
        const double v = value_of(u);
        if (first || v < out.min_value) {
            out.min_value = v;
            out.minimizer = u;
            first = false;
        }
        std::size_t k = 0;
        while (k < dim && ++idx[k] == resolution) idx[k++] = 0;
        if (k == dim) break;
    }
    out.margin = out.reference_value - out.min_value;
    return out;
}

std::vector<Control> default_deviation_set(const ControlDomain& domain, std::uint64_t seed) {
    const std::size_t dim = domain.dim();
    std::vector<Control> set;

    // {lower, mid, upper}^dim lattice: vertices, edge midpoints, center
    std::vector<int> idx(dim, 0);
    while (true) {
        Control u(dim);
        for (std::size_t k = 0; k < dim; ++k) {
            const double mid = 0.5 * (domain.lower[k] + domain.upper[k]);
            u[k] = idx[k] == 0 ? domain.lower[k] : idx[k] == 1 ? mid : domain.upper[k];
        }
        set.push_back(std::move(u));
        std::size_t k = 0;
        while (k < dim && ++idx[k] == 3) idx[k++] = 0;
        if (k == dim) break;
    }

    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 8; ++i) {
        Control u(dim);
        for (std::size_t k = 0; k < dim; ++k)
            u[k] = domain.lower[k] + unit(gen) * (domain.upper[k] - domain.lower[k]);
        set.push_back(std::move(u));
    }
    return set;
}

EquilibriumReport check_equilibrium(const ProblemInstance& problem, const FeedbackPolicy& policy,
                                    std::span<const double> t_grid,
                                    std::span<const double> x_grid,
                                    const std::vector<Control>& deviations,
                                    const EquilibriumScanOptions& options) {
    EquilibriumReport report;
    if (deviations.empty()) {
        report.warnings.push_back("empty deviation set: condition 2 vacuously true");
        report.overall_pass = true;
        return report;
    }

    std::uint64_t cell_index = 0;
    bool all_pass = true;
    for (double t : t_grid) {
        for (double x : x_grid) {
            CellReport cell;
            cell.t = t;
            cell.x = x;
            const std::uint64_t cell_seed = mix_seed(options.seed, ++cell_index);
            try {
                const int knot0 = problem.grid.nearest_knot(t);
                if (knot0 >= problem.grid.n_knots() - 1)
                    throw std::invalid_argument("scan time too close to horizon");
                const ProblemInstance sub = problem.restarted(knot0, x);
                const BrownianEnsemble ensemble(sub.grid, options.n_paths, cell_seed);
                PolicyRun run = solve_state_forward(sub, policy, ensemble);
                const BsdeSolution utility = solve_bsde_regression(
                    sub, run.controls, run.states, ensemble, options.basis_degree);
                const CandidateTuple tuple{&run.states, &run.controls, &utility};
                const AdjointBundle adjoints =
                    solve_adjoints(sub, tuple, ensemble, options.basis_degree);
                const KappaPath kappa = compute_kappa(sub, tuple, ensemble);

                cell.y0 = utility.y0;
                cell.p0 = adjoints.p0();
                cell.large_p0 = adjoints.P0();
                cell.z0_sd = std::sqrt(utility.z0_variance);
                cell.q0_sd = std::sqrt(adjoints.q0_variance());
                cell.policy_control = control_at(run.controls, 0, 0);

                // condition 2 at s = t for every deviation
                const EndpointSmoothing smooth = smoothing_for(tuple, adjoints, 0);
                double scale = 0.0;
                for (const Control& u : deviations) {
                    DeviationResult res;
                    res.u = u;
                    const MeanEstimate est = estimate_spike_limit_adjoint(
                        sub, tuple, adjoints, kappa, u, sub.grid.t_start);
                    res.mean_delta = est.value;
                    res.se = est.se;
                    const std::size_t m = run.states.paths();
                    std::vector<double> deltas(m);
                    for (std::size_t p = 0; p < m; ++p) {
                        HamiltonianArgs a = args_at(sub, tuple, adjoints, 0, p);
                        if (smooth.active) {
                            a.z = smooth.z;
                            a.q = smooth.q;
                        }
                        deltas[p] = delta_hamiltonian(sub.bundle, a, u);
                    }
                    res.quantile01 = quantile(std::move(deltas), 0.01);
                    scale = std::max(scale, std::abs(res.mean_delta));
                    cell.deviations.push_back(std::move(res));
                }
                const double floor = options.floor_fraction * std::max(scale, 1e-12);
                cell.condition2_pass = true;
                for (auto& res : cell.deviations) {
                    res.pass = res.mean_delta >= -std::max(3.0 * res.se, floor);
                    cell.condition2_pass = cell.condition2_pass && res.pass;
                }

                // determinism gate and condition 3
                const double gate_scale =
                    std::max({1.0, std::abs(utility.y0), std::abs(adjoints.p0())});
                cell.gate_pass =
                    cell.z0_sd <= 0.05 * gate_scale && cell.q0_sd <= 0.05 * gate_scale;
                if (cell.gate_pass) {
                    cell.condition3_applicable = true;
                    HamiltonianArgs frozen = args_at(sub, tuple, adjoints, 0, 0);
                    if (smooth.active) {
                        frozen.z = smooth.z;
                        frozen.q = smooth.q;
                    }
                    const ArgminResult arg = argmin_hamiltonian(
                        sub.bundle, frozen, sub.controls, options.argmin_resolution);
                    cell.argmin_control = arg.minimizer;
                    cell.argmin_margin = arg.margin;
                    cell.condition3_pass = true;
                    for (std::size_t k = 0; k < arg.minimizer.size(); ++k) {
                        const double tol = arg.cell_width[k] * (1.0 + 1e-9);
                        if (std::abs(arg.minimizer[k] - frozen.u_bar[k]) > tol)
                            cell.condition3_pass = false;
                    }
                }
            } catch (const std::exception& ex) {
                cell.error = ex.what();
                report.warnings.push_back("cell (t=" + std::to_string(t) +
                                          ", x=" + std::to_string(x) + ") failed: " + ex.what());
                all_pass = false;
            }
            if (cell.error.empty() && !cell.condition2_pass) all_pass = false;
            report.cells.push_back(std::move(cell));
        }
    }
    report.overall_pass = all_pass;
    return report;
}

} // namespace tic
