#include "tic/scenario.hpp"

#include <algorithm>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace tic {

namespace {

MertonSpec exponential_spec() {
    MertonSpec spec;
    spec.market = MarketParams{0.03, 0.05, 0.3};
    spec.running_utility = CrraUtility{0.5};
    spec.terminal_utility = CrraUtility{0.5};
    spec.hbar = DiscountSpec::exponential(0.1);
    spec.hbar_hat = DiscountSpec::exponential(0.1);
    return spec;
}

} // namespace

void ScenarioConfig::validate() const {
    if (scenario.empty()) throw std::invalid_argument("config: scenario name required");
    if (!(horizon > 0.0)) throw std::invalid_argument("config: horizon must be positive");
    if (n_steps < 4) throw std::invalid_argument("config: n_steps must be >= 4");
    if (n_paths < 100) throw std::invalid_argument("config: n_paths must be >= 100");
    if (basis_degree < 1 || basis_degree > 5)
        throw std::invalid_argument("config: basis_degree must lie in [1, 5]");
    if (!(x0 > 0.0)) throw std::invalid_argument("config: x0 must be positive");
    if (scan_paths < 100) throw std::invalid_argument("config: scan_paths must be >= 100");
    for (double e : epsilon_ladder)
        if (!(e > 0.0) || !(e < horizon))
            throw std::invalid_argument("config: epsilon ladder entries must lie in ]0, T[");
}

std::vector<std::string> preset_names() {
    return {"merton_exponential", "merton_hyperbolic_K1", "merton_recursive_beta_gamma"};
}

Scenario make_scenario(const ScenarioConfig& config) {
    config.validate();
    const TimeGrid grid{0.0, config.horizon, config.n_steps};

    Scenario sc;
    sc.name = config.scenario;
    if (config.scenario == "merton_exponential") {
        sc.spec = exponential_spec();
        sc.description = "classical investment-consumption, exponential discounting";
    } else if (config.scenario == "merton_hyperbolic_K1") {
        sc.spec = exponential_spec();
        sc.spec.hbar = DiscountSpec::hyperbolic(1.0);
        sc.spec.hbar_hat = DiscountSpec::exponential(0.0); // flat terminal weight
        sc.description = "hyperbolic running discount K=1 (time-inconsistent)";
    } else if (config.scenario == "merton_recursive_beta_gamma") {
        sc.spec = exponential_spec();
        sc.spec.aversion = AversionProcesses::constants(0.1, 0.05);
        sc.description = "recursive utility with (beta, gamma) aversion";
    } else {
        throw std::invalid_argument("unknown scenario preset: " + config.scenario);
    }

    sc.problem = build_merton_problem(sc.spec, grid, config.x0);

    // candidate: constant stock fraction + time-zero precommitted consumption
    const double lam = sc.spec.running_utility.lambda;
    const double mu = sc.spec.market.mu();
    const double zeta =
        std::clamp(mu / ((1.0 - lam) * sc.spec.market.sigma * sc.spec.market.sigma), -1.0, 1.0) +
        config.zeta_shift;
    const auto consumption = precommitted_consumption(sc.spec.market, sc.spec.running_utility,
                                                      sc.spec.hbar, sc.spec.hbar_hat, grid);
    sc.candidate = [zeta, consumption](double s, double) -> Control {
        return {zeta, consumption(s)};
    };
    return sc;
}

std::vector<double> resolve_t_grid(const ScenarioConfig& config) {
    if (!config.t_grid.empty()) return config.t_grid;
    std::vector<double> ts;
    for (int i = 0; i < 5; ++i) ts.push_back(config.horizon * i / 5.0);
    return ts;
}

std::vector<double> resolve_x_grid(const ScenarioConfig& config) {
    if (!config.x_grid.empty()) return config.x_grid;
    return {0.6 * config.x0, 0.8 * config.x0, config.x0, 1.25 * config.x0, 1.6 * config.x0};
}

std::vector<double> resolve_epsilon_ladder(const ScenarioConfig& config) {
    if (!config.epsilon_ladder.empty()) return config.epsilon_ladder;
    return {0.16 * config.horizon, 0.08 * config.horizon, 0.04 * config.horizon,
            0.02 * config.horizon};
}

ScenarioConfig parse_config_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");

    static const std::vector<std::string> known = {
        "scenario",  "horizon", "n_steps", "n_paths",        "seed",       "basis_degree",
        "x0",        "epsilon_ladder",     "t_grid",         "x_grid",     "scan_paths",
        "zeta_shift", "output_dir"};
    for (const auto& [key, _] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw std::invalid_argument("config: unknown key '" + key + "'");

    ScenarioConfig c;
    c.scenario = j.value("scenario", std::string{});
    c.horizon = j.value("horizon", c.horizon);
    c.n_steps = j.value("n_steps", c.n_steps);
    c.n_paths = j.value("n_paths", c.n_paths);
    c.seed = j.value("seed", c.seed);
    c.basis_degree = j.value("basis_degree", c.basis_degree);
    c.x0 = j.value("x0", c.x0);
    c.epsilon_ladder = j.value("epsilon_ladder", c.epsilon_ladder);
    c.t_grid = j.value("t_grid", c.t_grid);
    c.x_grid = j.value("x_grid", c.x_grid);
    c.scan_paths = j.value("scan_paths", c.scan_paths);
    c.zeta_shift = j.value("zeta_shift", c.zeta_shift);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.validate();
    return c;
}

std::string config_to_json(const ScenarioConfig& config) {
    nlohmann::json j;
    j["scenario"] = config.scenario;
    j["horizon"] = config.horizon;
    j["n_steps"] = config.n_steps;
    j["n_paths"] = config.n_paths;
    j["seed"] = config.seed;
    j["basis_degree"] = config.basis_degree;
    j["x0"] = config.x0;
    j["epsilon_ladder"] = resolve_epsilon_ladder(config);
    j["t_grid"] = resolve_t_grid(config);
    j["x_grid"] = resolve_x_grid(config);
    j["scan_paths"] = config.scan_paths;
    j["zeta_shift"] = config.zeta_shift;
    j["output_dir"] = config.output_dir;
    return j.dump(2);
}

} // namespace tic
