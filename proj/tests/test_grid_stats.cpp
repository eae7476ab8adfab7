#include <cmath>
#include <cstdlib>
#include <random>
#include <vector>

#include "doctest.h"
#include "tic/parallel.hpp"
#include "tic/regression.hpp"
#include "tic/stats.hpp"
#include "tic/time_grid.hpp"

using namespace tic;

TEST_CASE("time grid knots and spacing") {
    TimeGrid g(0.0, 1.0, 100);
    CHECK(g.dt() == doctest::Approx(0.01));
    CHECK(g.n_knots() == 101);
    CHECK(g.knot(0) == 0.0);
    CHECK(g.knot(100) == doctest::Approx(1.0));
    CHECK(g.horizon() == doctest::Approx(1.0));

    CHECK(g.nearest_knot(0.204) == 20);
    CHECK(g.nearest_knot(0.206) == 21);
    CHECK(g.nearest_knot(-5.0) == 0);
    CHECK(g.nearest_knot(5.0) == 100);

    TimeGrid tail = g.suffix(40);
    CHECK(tail.t_start == doctest::Approx(0.4));
    CHECK(tail.n_steps == 60);
    CHECK(tail.dt() == doctest::Approx(g.dt()));

    CHECK_THROWS(TimeGrid(1.0, 0.0, 10));
    CHECK_THROWS(TimeGrid(0.0, 1.0, 0));
    CHECK_THROWS(g.suffix(100));
}

TEST_CASE("sample statistics on known data") {
    std::vector<double> xs = {1.0, 2.0, 3.0, 4.0, 5.0};
    CHECK(mean(xs) == doctest::Approx(3.0));
    CHECK(sample_variance(xs) == doctest::Approx(2.5));
    CHECK(sample_sd(xs) == doctest::Approx(std::sqrt(2.5)));
    CHECK(standard_error(xs) == doctest::Approx(std::sqrt(2.5 / 5.0)));
    CHECK(quantile(xs, 0.5) == doctest::Approx(3.0));
    CHECK(quantile(xs, 0.0) == doctest::Approx(1.0));
    CHECK(quantile(xs, 1.0) == doctest::Approx(5.0));
}

TEST_CASE("slope fits recover exact relationships") {
    std::vector<double> x = {1.0, 2.0, 3.0, 4.0};
    std::vector<double> y = {2.5, 4.5, 6.5, 8.5}; // slope 2
    CHECK(fit_slope(x, y) == doctest::Approx(2.0));

    std::vector<double> px = {0.08, 0.04, 0.02, 0.01};
    std::vector<double> py;
    for (double v : px) py.push_back(3.0 * v * v); // slope 2 in log-log
    CHECK(loglog_slope(px, py) == doctest::Approx(2.0));
}

TEST_CASE("knot regression reproduces polynomials exactly") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::vector<double> states(4000), targets(4000);
    for (std::size_t i = 0; i < states.size(); ++i) {
        states[i] = u(rng);
        targets[i] = 1.5 - 0.7 * states[i] + 0.3 * states[i] * states[i];
    }
    KnotRegression reg(states, 3);
    CHECK(reg.degree_used() == 3);
    auto fitted = reg.fit(targets);
    for (std::size_t i = 0; i < targets.size(); ++i)
        CHECK(fitted[i] == doctest::Approx(targets[i]).epsilon(1e-8));
}

TEST_CASE("degenerate knot collapses to the cross-path mean") {
    std::vector<double> states(100, 1.0);
    std::vector<double> targets(100);
    for (std::size_t i = 0; i < targets.size(); ++i) targets[i] = 0.1 * i;
    KnotRegression reg(states, 3);
    CHECK(reg.degenerate());
    auto fitted = reg.fit(targets);
    const double m = mean(targets);
    for (double v : fitted) CHECK(v == doctest::Approx(m));
}

TEST_CASE("bin conditional expectation preserves nonnegativity") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> states(5000), targets(5000);
    for (std::size_t i = 0; i < states.size(); ++i) {
        states[i] = u(rng);
        targets[i] = u(rng) * states[i]; // nonnegative
    }
    BinConditional bins(states, 32);
    auto fitted = bins.fit(targets);
    for (double v : fitted) CHECK(v >= 0.0);
    CHECK(mean(fitted) == doctest::Approx(mean(targets)).epsilon(1e-10));
}

TEST_CASE("parallel blocks cover the range exactly once") {
    const std::size_t n = 30000;
    std::vector<int> hits(n, 0);
    parallel_for_blocks(n, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) hits[i] += 1;
    });
    for (std::size_t i = 0; i < n; ++i) REQUIRE(hits[i] == 1);
}

TEST_CASE("thread count honours the environment override") {
    setenv("TIC_THREADS", "3", 1);
    CHECK(thread_count() == 3);
    unsetenv("TIC_THREADS");
    CHECK(thread_count() >= 1);
}
