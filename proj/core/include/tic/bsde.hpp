#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tic/brownian.hpp"
#include "tic/coefficients.hpp"
#include "tic/control.hpp"
#include "tic/forward_sde.hpp"

namespace tic {

/// Backward pair (Y, Z) on the grid, per path. Z at the terminal knot copies
/// the value at the last interior step (the terminal condition does not
/// define Z).
struct BsdeSolution {
    std::size_t m_paths = 0;
    int knots = 0;
    std::vector<double> y; // path-major, m_paths x knots
    std::vector<double> z;

    double y0 = 0.0;       // Y(t;t), cross-path average at the initial knot
    double z0 = 0.0;
    double y0_sd = 0.0;    // cross-path sd of the regressed Y(t;t)
    double z0_variance = 0.0;

    std::vector<std::string> warnings;

    double y_at(std::size_t path, int knot) const { return y[path * knots + knot]; }
    double z_at(std::size_t path, int knot) const { return z[path * knots + knot]; }
    std::vector<double> y_knot(int knot) const;
    std::vector<double> z_knot(int knot) const;
};

/// Pathwise driver for the generic backward solver: evaluated at grid step i
/// (time s_i) on path m with the current (y, z) iterate.
using PathDriver = std::function<double(int step, std::size_t path, double y, double z)>;

/// Generic least-squares Monte Carlo backward sweep against an arbitrary
/// driver and terminal slice, regressing on the supplied basis states. Two
/// fixed Picard sweeps resolve the implicit y-dependence per step.
BsdeSolution solve_bsde_backward(const TimeGrid& grid, const BrownianEnsemble& ensemble,
                                 const StatePaths& basis_states,
                                 std::span<const double> terminal,
                                 const PathDriver& driver, int basis_degree);

/// Recursive-utility BSDE along a simulated control/state pair:
///   dY = -f(s, X, u, Y, Z; t) ds + Z dW,   Y(T) = h(X(T); t),
/// with t = grid start of the problem.
BsdeSolution solve_bsde_regression(const ProblemInstance& problem, const ControlPath& control,
                                   const StatePaths& states, const BrownianEnsemble& ensemble,
                                   int basis_degree = 3);

/// Linear BSDE data: dXi = -[alpha + beta Xi + gamma Theta] ds + Theta dW,
/// Xi(T) = xi. beta, gamma are deterministic functions of s; alpha and xi may
/// depend on the path (alpha per step, xi per path).
struct LinearBsdeSpec {
    std::function<double(double s)> beta;
    std::function<double(double s)> gamma;
    std::function<double(double s, std::size_t path)> alpha;
    std::function<double(std::size_t path)> xi;
    // conditioning states for the conditional expectation; empty => condition
    // on the Brownian path value W(s_i)
    const StatePaths* basis_states = nullptr;
};

/// Explicit solve through the eta representation:
///   eta(s) = exp{ int (beta - gamma^2/2) dr + int gamma dW },
///   Xi(s)  = eta(s)^{-1} E[ eta(T) xi + int_s^T eta alpha dr | F_s ].
/// Conditional expectations use a nonnegativity-preserving bin estimator, so
/// the comparison property holds pathwise. Theta is recovered by
/// martingale-increment regression.
BsdeSolution solve_linear_bsde_explicit(const LinearBsdeSpec& spec, const TimeGrid& grid,
                                        const BrownianEnsemble& ensemble);

/// J(u; t, x) = Y(t;t), plus the expectation form E[int f ds + h(X(T))] as a
/// consistency diagnostic.
struct CostEvaluation {
    double value = 0.0;            // Y(t;t)
    double expectation_form = 0.0; // E[int f ds + h]
    double standard_error = 0.0;   // MC se of the expectation form
};

CostEvaluation evaluate_cost_functional(const ProblemInstance& problem,
                                        const ControlPath& control,
                                        const BrownianEnsemble& ensemble,
                                        int basis_degree = 3);

/// Comparison property: alpha >= 0 and xi >= 0 imply Xi >= 0 pathwise.
struct ComparisonVerdict {
    bool precondition_met = false; // data actually nonnegative
    bool holds = false;
    double min_value = 0.0;      // min Xi over paths and knots
    std::size_t worst_path = 0;
    int worst_knot = 0;
};

ComparisonVerdict comparison_check(const LinearBsdeSpec& spec, const TimeGrid& grid,
                                   const BrownianEnsemble& ensemble);

/// Continuous dependence on the terminal condition: additive shifts delta of
/// h against sup |Y_delta - Y| and ||Z_delta - Z||_L2.
struct StabilityRow {
    double delta = 0.0;
    double y_sup_diff = 0.0;
    double z_l2_diff = 0.0;
};

struct StabilityTable {
    std::vector<StabilityRow> rows; // sorted by decreasing delta
    double fitted_constant = 0.0;   // smallest C with y_sup_diff <= C*delta
    bool monotone = false;          // diffs nonincreasing as delta decreases
};

StabilityTable stability_check(const ProblemInstance& problem, const ControlPath& control,
                               const StatePaths& states, const BrownianEnsemble& ensemble,
                               std::span<const double> perturbation_sizes,
                               int basis_degree = 3);

} // namespace tic
