#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "tic/scenario.hpp"

using namespace tic;

TEST_CASE("preset catalogue") {
    std::vector<std::string> names = preset_names();
    REQUIRE(names.size() == 3);
    CHECK(std::find(names.begin(), names.end(), "merton_exponential") != names.end());
    CHECK(std::find(names.begin(), names.end(), "merton_hyperbolic_K1") != names.end());
    CHECK(std::find(names.begin(), names.end(), "merton_recursive_beta_gamma") != names.end());

    ScenarioConfig cfg;
    cfg.scenario = "no_such_preset";
    CHECK_THROWS(make_scenario(cfg));
}

TEST_CASE("config validation") {
    ScenarioConfig cfg;
    CHECK_THROWS(cfg.validate()); // scenario name required
    cfg.scenario = "merton_exponential";
    CHECK_NOTHROW(cfg.validate());
    cfg.n_steps = 0;
    CHECK_THROWS(cfg.validate());
    cfg.n_steps = 10;
    cfg.n_paths = 0;
    CHECK_THROWS(cfg.validate());
}

TEST_CASE("json round trip materializes the defaults") {
    ScenarioConfig cfg = parse_config_json(R"({"scenario": "merton_exponential"})");
    CHECK(cfg.scenario == "merton_exponential");
    CHECK(cfg.n_steps == 100);
    CHECK(cfg.n_paths == 100000);
    CHECK(cfg.seed == 20240901);
    CHECK(cfg.horizon == 1.0);

    const std::string echoed = config_to_json(cfg);
    ScenarioConfig again = parse_config_json(echoed);
    CHECK(again.n_steps == cfg.n_steps);
    CHECK(again.n_paths == cfg.n_paths);
    CHECK(again.seed == cfg.seed);
    CHECK(again.scenario == cfg.scenario);
    CHECK(config_to_json(again) == echoed);
}

TEST_CASE("unknown config keys are rejected") {
    CHECK_THROWS(parse_config_json(R"({"scenario": "merton_exponential", "n_stepz": 5})"));
    CHECK_THROWS(parse_config_json(R"(not json)"));
}

TEST_CASE("scan grids resolve to the documented defaults") {
    ScenarioConfig cfg;
    cfg.scenario = "merton_exponential";
    std::vector<double> ts = resolve_t_grid(cfg);
    REQUIRE(ts.size() == 5);
    CHECK(ts.front() == 0.0);
    CHECK(ts.back() < cfg.horizon);

    std::vector<double> xs = resolve_x_grid(cfg);
    REQUIRE(xs.size() == 5);
    CHECK(std::is_sorted(xs.begin(), xs.end()));
    CHECK(std::find(xs.begin(), xs.end(), cfg.x0) != xs.end());

    std::vector<double> ladder = resolve_epsilon_ladder(cfg);
    REQUIRE(ladder.size() == 4);
    CHECK(ladder[0] == doctest::Approx(0.16 * cfg.horizon));
}

TEST_CASE("zeta shift perturbs the candidate policy") {
    ScenarioConfig cfg;
    cfg.scenario = "merton_exponential";
    cfg.n_steps = 20;
    Scenario base = make_scenario(cfg);
    cfg.zeta_shift = 0.3;
    Scenario shifted = make_scenario(cfg);
    const Control u0 = base.candidate(0.0, 1.0);
    const Control u1 = shifted.candidate(0.0, 1.0);
    REQUIRE(u0.size() == 2);
    CHECK(u1[0] == doctest::Approx(u0[0] + 0.3));
    CHECK(u1[1] == doctest::Approx(u0[1]));
}

TEST_CASE("presets differ in their discount structure") {
    ScenarioConfig cfg;
    cfg.scenario = "merton_hyperbolic_K1";
    cfg.n_steps = 20;
    Scenario hyp = make_scenario(cfg);
    CHECK(hyp.spec.hbar.at(1.0, 0.0) == doctest::Approx(0.5)); // 1/(1+1)

    cfg.scenario = "merton_recursive_beta_gamma";
    Scenario rec = make_scenario(cfg);
    CHECK(rec.spec.aversion.beta(0.3, 0.0) == doctest::Approx(0.1));
    CHECK(rec.spec.aversion.gamma(0.3, 0.0) == doctest::Approx(0.05));
}
