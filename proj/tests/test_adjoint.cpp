#include <cmath>
#include <span>
#include <vector>

#include "doctest.h"
#include "tic/adjoint.hpp"
#include "tic/merton.hpp"
#include "tic/stats.hpp"

using namespace tic;

namespace {

ProblemInstance custom_problem(DriverFn f, TerminalFn h, TerminalFn h_x = nullptr,
                               TerminalFn h_xx = nullptr, int n_steps = 50) {
    CoefficientBundle c;
    c.b = [](double, double, std::span<const double>) { return 0.0; };
    c.sigma = [](double, double, std::span<const double>) { return 1.0; };
    c.f = std::move(f);
    c.h = std::move(h);
    c.h_x = std::move(h_x);
    c.h_xx = std::move(h_xx);
    return build_problem(std::move(c), TimeGrid(0.0, 1.0, n_steps),
                         ControlDomain({0.0}, {0.0}), StateDomain::whole_line(), 0.0);
}

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

MertonSpec default_spec() {
    MertonSpec spec;
    spec.market = {0.03, 0.05, 0.3};
    spec.hbar = DiscountSpec::exponential(0.1);
    spec.hbar_hat = DiscountSpec::exponential(0.1);
    return spec;
}

} // namespace

TEST_CASE("first-order driver hand values") {
    AdjointCoeffs c;
    CHECK(eval_driver_g(c, 0.0, 0.0) == 0.0);

    c.b_x = 0.1;
    c.sigma_x = 0.2;
    c.f_y = -0.3;
    c.f_z = 0.4;
    c.f_x = 0.05;
    CHECK(eval_driver_g(c, 2.0, 1.0) == doctest::Approx(0.41).epsilon(1e-12));
    CHECK(eval_driver_g(c, 0.0, 0.0) == doctest::Approx(0.05)); // p = q = 0 leaves f_x
}

TEST_CASE("second-order driver hand values") {
    AdjointCoeffs zero;
    CHECK(eval_driver_G(zero, 0.0, 0.0, 0.0, 0.0) == 0.0);

    // identity Hessian, p = 1, sigma_x = 0.5, q = 0.5: v = (1, 1, 1), form = 3
    AdjointCoeffs c;
    c.sigma_x = 0.5;
    c.f_hess.xx = c.f_hess.yy = c.f_hess.zz = 1.0;
    CHECK(eval_driver_G(c, 0.0, 0.0, 1.0, 0.5) == doctest::Approx(3.0).epsilon(1e-12));

    AdjointCoeffs d;
    d.b_x = 0.1;
    d.sigma_x = 0.2;
    CHECK(eval_driver_G(d, 1.0, 0.0, 0.0, 0.0) == doctest::Approx(0.24).epsilon(1e-12));
}

TEST_CASE("kappa is identically one when the driver ignores y and z") {
    MertonSpec spec = default_spec(); // beta = gamma = 0
    ProblemInstance problem = build_merton_problem(spec, TimeGrid(0.0, 1.0, 40), 1.0);
    BrownianEnsemble ens(problem.grid, 300, 201);
    SimTuple s = simulate(problem, constant_policy({0.4, 0.3}), ens);
    KappaPath kappa = compute_kappa(problem, s.tuple, ens);
    for (std::size_t p = 0; p < kappa.m_paths; ++p)
        for (int k = 0; k < kappa.knots; ++k) CHECK(kappa.at(p, k) == 1.0);
}

TEST_CASE("kappa with constant f_y is the deterministic exponential") {
    auto f = [](double, double, std::span<const double>, double y, double, double) {
        return -0.1 * y;
    };
    ProblemInstance problem = custom_problem(f, [](double x, double) { return x; });
    BrownianEnsemble ens(problem.grid, 200, 203);
    SimTuple s = simulate(problem, constant_policy({0.0}), ens);
    KappaPath kappa = compute_kappa(problem, s.tuple, ens);
    for (std::size_t p = 0; p < kappa.m_paths; ++p) {
        CHECK(kappa.at(p, 0) == 1.0); // kappa(t;t) = 1
        CHECK(kappa.at(p, kappa.knots - 1) == doctest::Approx(std::exp(-0.1)).epsilon(1e-9));
    }
}

TEST_CASE("kappa stays strictly positive along the wealth tuple") {
    MertonSpec spec = default_spec();
    spec.aversion = AversionProcesses::constants(0.1, 0.05);
    ProblemInstance problem = build_merton_problem(spec, TimeGrid(0.0, 1.0, 40), 1.0);
    BrownianEnsemble ens(problem.grid, 2000, 207);
    SimTuple s = simulate(problem, constant_policy({0.4, 0.3}), ens);
    KappaPath kappa = compute_kappa(problem, s.tuple, ens);
    CHECK(kappa.min_value() > 0.0);
    for (std::size_t p = 0; p < kappa.m_paths; ++p) CHECK(kappa.at(p, 0) == 1.0);
}

TEST_CASE("linear terminal with zero coefficients gives a constant adjoint") {
    auto f = [](double, double, std::span<const double>, double, double, double) { return 0.0; };
    ProblemInstance problem =
        custom_problem(f, [](double x, double) { return 2.5 * x; },
                       [](double, double) { return 2.5; }, [](double, double) { return 0.0; });
    BrownianEnsemble ens(problem.grid, 400, 211);
    SimTuple s = simulate(problem, constant_policy({0.0}), ens);
    BsdeSolution adj = solve_first_adjoint(problem, s.tuple, ens);
    for (std::size_t p = 0; p < adj.m_paths; ++p)
        for (int k = 0; k < adj.knots; ++k) {
            CHECK(adj.y_at(p, k) == doctest::Approx(2.5).epsilon(1e-8));
            CHECK(adj.z_at(p, k) == doctest::Approx(0.0).epsilon(1e-8));
        }
}

TEST_CASE("pure f_x source integrates to the horizon") {
    // f = x: f_x = 1, all other adjoint inputs vanish, h_x = 0,
    // so p(s) = T - s deterministically and p(t;t) = 1
    auto f = [](double, double x, std::span<const double>, double, double, double) { return x; };
    ProblemInstance problem = custom_problem(f, [](double, double) { return 0.0; });
    BrownianEnsemble ens(problem.grid, 400, 213);
    SimTuple s = simulate(problem, constant_policy({0.0}), ens);
    BsdeSolution adj = solve_first_adjoint(problem, s.tuple, ens);
    CHECK(adj.y0 == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("linear terminal and zero sources give a vanishing second adjoint") {
    auto f = [](double, double, std::span<const double>, double, double, double) { return 0.0; };
    ProblemInstance problem =
        custom_problem(f, [](double x, double) { return 2.5 * x; },
                       [](double, double) { return 2.5; }, [](double, double) { return 0.0; });
    BrownianEnsemble ens(problem.grid, 400, 217);
    SimTuple s = simulate(problem, constant_policy({0.0}), ens);
    AdjointBundle adj = solve_adjoints(problem, s.tuple, ens);
    for (std::size_t p = 0; p < adj.second.m_paths; ++p)
        for (int k = 0; k < adj.second.knots; ++k) {
            CHECK(adj.second.y_at(p, k) == doctest::Approx(0.0).epsilon(1e-8));
            CHECK(adj.second.z_at(p, k) == doctest::Approx(0.0).epsilon(1e-8));
        }
}

TEST_CASE("constant inhomogeneous G integrates to c times the horizon") {
    // f = 0.25 x^2: f_hess.xx = 0.5 and v = (1, p, q) hits it with weight 1,
    // so G = 0.5 regardless of p, q; h_xx = 0 gives P(t;t) = 0.5 (T - t)
    auto f = [](double, double x, std::span<const double>, double, double, double) {
        return 0.25 * x * x;
    };
    ProblemInstance problem = custom_problem(f, [](double, double) { return 0.0; });
    BrownianEnsemble ens(problem.grid, 2000, 219);
    SimTuple s = simulate(problem, constant_policy({0.0}), ens);
    AdjointBundle adj = solve_adjoints(problem, s.tuple, ens);
    CHECK(adj.P0() == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("convex terminal keeps the second adjoint nonnegative") {
    MertonSpec spec = default_spec();
    ProblemInstance problem = build_merton_problem(spec, TimeGrid(0.0, 1.0, 40), 1.0);
    BrownianEnsemble ens(problem.grid, 5000, 223);
    SimTuple s = simulate(problem, constant_policy({0.4, 0.3}), ens);
    AdjointBundle adj = solve_adjoints(problem, s.tuple, ens);
    double min_p = 1e300;
    for (double v : adj.second.y) min_p = std::min(min_p, v);
    CHECK(min_p >= -1e-8);
}

TEST_CASE("wealth adjoint matches the marginal-utility theory value") {
    // classical policy: p(t;t) = -upsilon'(c* x0) at t = 0 up to O(dt)
    MertonSpec spec = default_spec();
    ProblemInstance problem = build_merton_problem(spec, TimeGrid(0.0, 1.0, 100), 1.0);
    MertonBaseline baseline =
        classical_merton_baseline(spec.market, spec.running_utility, 0.1, problem.grid);
    BrownianEnsemble ens(problem.grid, 20000, 227);
    SimTuple s = simulate(problem, baseline.policy, ens);
    BsdeSolution adj = solve_first_adjoint(problem, s.tuple, ens);
    const double c0 = baseline.consumption(0.0);
    const double theory = -spec.running_utility.marginal(c0 * 1.0);
    CHECK(adj.y0 == doctest::Approx(theory).epsilon(0.02));
}
