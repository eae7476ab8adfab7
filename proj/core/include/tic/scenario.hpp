#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tic/control.hpp"
#include "tic/merton.hpp"

namespace tic {

/// Run configuration; every field has a materializable default so reports
/// can echo the fully resolved setup.
struct ScenarioConfig {
    std::string scenario;      // preset name, required
    double horizon = 1.0;      // T (t_start fixed at 0)
    int n_steps = 100;         // N
    std::size_t n_paths = 100000; // M
    std::uint64_t seed = 20240901;
    int basis_degree = 3;
    double x0 = 1.0;
    std::vector<double> epsilon_ladder; // empty => {0.16,0.08,0.04,0.02}*T
    std::vector<double> t_grid;         // empty => 5 equispaced in [0, T[
    std::vector<double> x_grid;         // empty => 5 around x0
    std::size_t scan_paths = 20000;     // per-cell paths for the scan
    double zeta_shift = 0.0;            // candidate-policy perturbation
    std::string output_dir = "out";

    void validate() const;
};

/// Fully materialized scenario: problem, coefficient data, and the candidate
/// policy to verify.
struct Scenario {
    std::string name;
    MertonSpec spec;
    ProblemInstance problem;
    FeedbackPolicy candidate;
    std::string description;
};

/// Available preset names.
std::vector<std::string> preset_names();

/// Builds the preset named in the config, applying grid/path overrides and
/// the optional zeta shift to the candidate policy. Throws on unknown names.
Scenario make_scenario(const ScenarioConfig& config);

/// Materialized scan grids (defaults filled in from the scenario).
std::vector<double> resolve_t_grid(const ScenarioConfig& config);
std::vector<double> resolve_x_grid(const ScenarioConfig& config);
std::vector<double> resolve_epsilon_ladder(const ScenarioConfig& config);

/// JSON round trip: parse (unknown keys rejected) and echo with all defaults
/// materialized.
ScenarioConfig parse_config_json(const std::string& text);
std::string config_to_json(const ScenarioConfig& config);

} // namespace tic
