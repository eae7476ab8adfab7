#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tic/adjoint.hpp"
#include "tic/bsde.hpp"
#include "tic/control.hpp"
#include "tic/hamiltonian.hpp"

namespace tic {

struct MeanEstimate {
    double value = 0.0;
    double se = 0.0;
};

/// Monte Carlo average of kappa(s;t) * delta_calH(s;t,u) across paths, the
/// spike-variation limit in adjoint form.
MeanEstimate estimate_spike_limit_adjoint(const ProblemInstance& problem,
                                          const CandidateTuple& tuple,
                                          const AdjointBundle& adjoints, const KappaPath& kappa,
                                          const Control& deviation, double s);

struct SpikeLimitEstimate {
    std::vector<std::pair<double, double>> direct_values; // (snapped eps, quotient), eps decreasing
    std::vector<double> quotient_se;                      // CRN standard error per ladder entry
    double extrapolated_direct = 0.0;                     // Richardson from the two smallest eps
    bool differences_shrinking = false;                   // successive-quotient stabilization
};

/// Direct finite-epsilon spike quotients (J(u^eps) - J(u)) / eps on common
/// random numbers, with Richardson extrapolation of the two smallest ladder
/// entries.
SpikeLimitEstimate estimate_spike_limit_direct(const ProblemInstance& problem,
                                               const ControlPath& base_control,
                                               const Control& deviation, double s,
                                               std::span<const double> epsilon_ladder,
                                               const BrownianEnsemble& ensemble,
                                               int basis_degree = 3);

/// Default ladder {0.16, 0.08, 0.04, 0.02} * horizon.
std::vector<double> default_epsilon_ladder(double horizon);

struct ArgminResult {
    Control minimizer;
    double min_value = 0.0;
    double reference_value = 0.0; // calH (or H) at the candidate control
    double margin = 0.0;          // reference_value - min_value, >= 0 up to grid error
    std::vector<double> cell_width;
};

/// Grid search over the control box of u -> calH (or the first-order H when
/// use_first_order is set, per the convex-terminal corollary).
ArgminResult argmin_hamiltonian(const CoefficientBundle& bundle, const HamiltonianArgs& frozen,
                                const ControlDomain& domain, int resolution = 201,
                                bool use_first_order = false);

/// Deviation certificate set: box vertices, edge midpoints, center, and 8
/// seeded interior points.
std::vector<Control> default_deviation_set(const ControlDomain& domain,
                                           std::uint64_t seed = 2024);

struct DeviationResult {
    Control u;
    double mean_delta = 0.0; // E[kappa dH] at s = t (kappa(t;t) = 1)
    double se = 0.0;
    double quantile01 = 0.0; // 1% pathwise quantile of delta_calH
    bool pass = false;
};

struct CellReport {
    double t = 0.0;
    double x = 0.0;
    double y0 = 0.0, p0 = 0.0, large_p0 = 0.0;
    double z0_sd = 0.0, q0_sd = 0.0;
    std::vector<DeviationResult> deviations;
    bool condition2_pass = false;
    bool gate_pass = false; // Z(t;t), q(t;t) determinism diagnostics
    bool condition3_applicable = false;
    bool condition3_pass = false;
    Control policy_control;
    Control argmin_control;
    double argmin_margin = 0.0;
    std::string error; // nonempty when this cell failed and was isolated
};

struct EquilibriumReport {
    std::vector<CellReport> cells;
    bool overall_pass = false; // condition 2 at every cell and deviation
    std::vector<std::string> warnings;
};

struct EquilibriumScanOptions {
    std::size_t n_paths = 20000;
    int basis_degree = 3;
    std::uint64_t seed = 20240901;
    int argmin_resolution = 201;
    // numeric floor on the condition-2 band: at s = t the per-path spread of
    // delta_calH degenerates to zero, so a pure 3*se band has no width; the
    // floor is floor_fraction * max |E delta_calH| over the deviation set
    double floor_fraction = 2e-3;
};

/// Scans (t, x) cells: simulates the candidate 4-tuple from each cell under
/// the policy, solves adjoints and kappa, and renders the maximum-principle
/// verdicts (condition 2 for every deviation; condition 3 when the
/// determinism gate passes).
EquilibriumReport check_equilibrium(const ProblemInstance& problem, const FeedbackPolicy& policy,
                                    std::span<const double> t_grid,
                                    std::span<const double> x_grid,
                                    const std::vector<Control>& deviations,
                                    const EquilibriumScanOptions& options = {});

} // namespace tic
