#include <cmath>
#include <vector>

#include "doctest.h"
#include "tic/equilibrium.hpp"
#include "tic/merton.hpp"
#include "tic/scenario.hpp"
#include "tic/stats.hpp"

using namespace tic;

namespace {

struct SimTuple {
    PolicyRun run;
    BsdeSolution utility;
    CandidateTuple tuple;
};

SimTuple simulate(const ProblemInstance& problem, const FeedbackPolicy& policy,
                  const BrownianEnsemble& ens) {
    SimTuple s;
    s.run = solve_state_forward(problem, policy, ens);
    s.utility = solve_bsde_regression(problem, s.run.controls, s.run.states, ens);
    s.tuple = {&s.run.states, &s.run.controls, &s.utility};
    return s;
}

} // namespace

TEST_CASE("default epsilon ladder scales with the horizon") {
    std::vector<double> ladder = default_epsilon_ladder(2.0);
    REQUIRE(ladder.size() == 4);
    CHECK(ladder[0] == doctest::Approx(0.32));
    CHECK(ladder[3] == doctest::Approx(0.04));
    for (std::size_t i = 1; i < ladder.size(); ++i) CHECK(ladder[i] < ladder[i - 1]);
}

TEST_CASE("deviation certificate set covers the box") {
    ControlDomain box({-1.0, 0.0}, {1.0, 1.0});
    std::vector<Control> devs = default_deviation_set(box);
    CHECK(devs.size() == 17); // 3x3 lattice + 8 seeded interior points
    bool has_low = false, has_high = false, has_mid = false;
    for (const Control& u : devs) {
        REQUIRE(u.size() == 2);
        CHECK(box.contains(u));
        has_low = has_low || (u[0] == -1.0 && u[1] == 0.0);
        has_high = has_high || (u[0] == 1.0 && u[1] == 1.0);
        has_mid = has_mid || (u[0] == 0.0 && u[1] == 0.5);
    }
    CHECK(has_low);
    CHECK(has_high);
    CHECK(has_mid);
    // deterministic in the seed
    CHECK(default_deviation_set(box, 5) == default_deviation_set(box, 5));
    CHECK(default_deviation_set(box, 5) != default_deviation_set(box, 6));
}

TEST_CASE("direct spike quotients vanish for the null deviation") {
    ScenarioConfig cfg;
    cfg.scenario = "merton_exponential";
    cfg.n_steps = 25;
    cfg.n_paths = 2000;
    Scenario sc = make_scenario(cfg);
    BrownianEnsemble ens(sc.problem.grid, cfg.n_paths, 301);
    // constant candidate so the deviation can reproduce it exactly
    PolicyRun run = solve_state_forward(sc.problem, constant_policy({0.4, 0.3}), ens);
    std::vector<double> ladder = {0.32, 0.16, 0.08};
    SpikeLimitEstimate est = estimate_spike_limit_direct(sc.problem, run.controls, {0.4, 0.3},
                                                         0.0, ladder, ens);
    REQUIRE(est.direct_values.size() == 3);
    for (const auto& [eps, quotient] : est.direct_values) CHECK(quotient == 0.0);
    CHECK(est.extrapolated_direct == 0.0);
}

TEST_CASE("a ladder below the grid resolution is rejected") {
    ScenarioConfig cfg;
    cfg.scenario = "merton_exponential";
    cfg.n_steps = 20; // dt = 0.05
    cfg.n_paths = 500;
    Scenario sc = make_scenario(cfg);
    BrownianEnsemble ens(sc.problem.grid, cfg.n_paths, 303);
    PolicyRun run = solve_state_forward(sc.problem, constant_policy({0.4, 0.3}), ens);
    std::vector<double> ladder = {0.011, 0.01}; // both snap to one knot
    CHECK_THROWS(estimate_spike_limit_direct(sc.problem, run.controls, {1.0, 0.0}, 0.0,
                                             ladder, ens));
}

TEST_CASE("adjoint spike estimate vanishes for the null deviation") {
    ScenarioConfig cfg;
    cfg.scenario = "merton_exponential";
    cfg.n_steps = 50;
    cfg.n_paths = 4000;
    Scenario sc = make_scenario(cfg);
    BrownianEnsemble ens(sc.problem.grid, cfg.n_paths, 307);
    FeedbackPolicy policy = constant_policy({0.4, 0.3});
    SimTuple s = simulate(sc.problem, policy, ens);
    AdjointBundle adjoints = solve_adjoints(sc.problem, s.tuple, ens);
    KappaPath kappa = compute_kappa(sc.problem, s.tuple, ens);
    MeanEstimate est =
        estimate_spike_limit_adjoint(sc.problem, s.tuple, adjoints, kappa, {0.4, 0.3}, 0.0);
    CHECK(est.value == 0.0);
}

TEST_CASE("unit kappa reduces the estimate to the plain average") {
    // merton_exponential has beta = gamma = 0, so kappa is identically 1
    ScenarioConfig cfg;
    cfg.scenario = "merton_exponential";
    cfg.n_steps = 50;
    cfg.n_paths = 4000;
    Scenario sc = make_scenario(cfg);
    BrownianEnsemble ens(sc.problem.grid, cfg.n_paths, 311);
    SimTuple s = simulate(sc.problem, sc.candidate, ens);
    KappaPath kappa = compute_kappa(sc.problem, s.tuple, ens);
    CHECK(kappa.min_value() == 1.0);
}

TEST_CASE("direct and adjoint spike limits agree on the baseline") {
    ScenarioConfig cfg;
    cfg.scenario = "merton_exponential";
    cfg.n_steps = 50;
    cfg.n_paths = 20000;
    Scenario sc = make_scenario(cfg);
    BrownianEnsemble ens(sc.problem.grid, cfg.n_paths, 313);
    SimTuple s = simulate(sc.problem, sc.candidate, ens);
    AdjointBundle adjoints = solve_adjoints(sc.problem, s.tuple, ens);
    KappaPath kappa = compute_kappa(sc.problem, s.tuple, ens);

    const Control deviation = {1.0, 0.0};
    MeanEstimate adj =
        estimate_spike_limit_adjoint(sc.problem, s.tuple, adjoints, kappa, deviation, 0.0);
    std::vector<double> ladder = {0.16, 0.08, 0.04};
    SpikeLimitEstimate direct = estimate_spike_limit_direct(sc.problem, s.run.controls,
                                                            deviation, 0.0, ladder, ens);
    const double se = std::sqrt(adj.se * adj.se + direct.quotient_se.back() *
                                                      direct.quotient_se.back());
    const double tol = std::max(0.08 * std::abs(adj.value), 3.0 * se);
    CHECK(std::abs(adj.value - direct.extrapolated_direct) <= tol);
    CHECK(direct.differences_shrinking);
}

TEST_CASE("empty deviation set passes vacuously with a warning") {
    ScenarioConfig cfg;
    cfg.scenario = "merton_exponential";
    cfg.n_steps = 20;
    Scenario sc = make_scenario(cfg);
    EquilibriumScanOptions opts;
    opts.n_paths = 1000;
    std::vector<double> ts = {0.0}, xs = {1.0};
    EquilibriumReport report = check_equilibrium(sc.problem, sc.candidate, ts, xs, {}, opts);
    CHECK(report.overall_pass);
    CHECK_FALSE(report.warnings.empty());
    CHECK(report.cells.empty()); // nothing to scan without deviations
}

TEST_CASE("single-cell scan passes on the baseline and fails when shifted") {
    ScenarioConfig cfg;
    cfg.scenario = "merton_exponential";
    cfg.n_steps = 50;
    Scenario sc = make_scenario(cfg);
    std::vector<Control> deviations = default_deviation_set(sc.problem.controls);
    EquilibriumScanOptions opts;
    opts.n_paths = 4000;
    std::vector<double> ts = {0.0}, xs = {1.0};
    EquilibriumReport good = check_equilibrium(sc.problem, sc.candidate, ts, xs, deviations, opts);
    CHECK(good.overall_pass);
    REQUIRE(good.cells.size() == 1);
    CHECK(good.cells[0].condition2_pass);
    CHECK(good.cells[0].error.empty());

    ScenarioConfig bad_cfg = cfg;
    bad_cfg.zeta_shift = 0.3;
    Scenario bad = make_scenario(bad_cfg);
    // the far lattice deviations sit in the convex bowl of calH, so steer one
    // deviation back toward the unshifted optimum (the known descent direction)
    std::vector<Control> probing = deviations;
    Control steer = bad.candidate(0.0, 1.0);
    steer[0] -= 0.3;
    probing.push_back(steer);
    EquilibriumReport shifted =
        check_equilibrium(bad.problem, bad.candidate, ts, xs, probing, opts);
    CHECK_FALSE(shifted.overall_pass);
    bool negative_found = false;
    for (const DeviationResult& dev : shifted.cells[0].deviations)
        negative_found = negative_found || (!dev.pass && dev.mean_delta < 0.0);
    CHECK(negative_found);
}
