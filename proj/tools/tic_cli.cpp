// Batch front-end: scenario runs, equilibrium scans, convergence studies.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tic/adjoint.hpp"
#include "tic/bsde.hpp"
#include "tic/equilibrium.hpp"
#include "tic/forward_sde.hpp"
#include "tic/merton.hpp"
#include "tic/parallel.hpp"
#include "tic/scenario.hpp"
#include "tic/stats.hpp"

namespace {

using nlohmann::json;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

json report_to_json(const tic::EquilibriumReport& report) {
    json cells = json::array();
    for (const auto& cell : report.cells) {
        json jc;
        jc["t"] = cell.t;
        jc["x"] = cell.x;
        if (!cell.error.empty()) {
            jc["error"] = cell.error;
            cells.push_back(jc);
            continue;
        }
        jc["y0"] = cell.y0;
        jc["p0"] = cell.p0;
        jc["P0"] = cell.large_p0;
        jc["z0_sd"] = cell.z0_sd;
        jc["q0_sd"] = cell.q0_sd;
        jc["policy_control"] = cell.policy_control;
        jc["condition2_pass"] = cell.condition2_pass;
        jc["gate_pass"] = cell.gate_pass;
        jc["condition3_applicable"] = cell.condition3_applicable;
        if (cell.condition3_applicable) {
            jc["condition3_pass"] = cell.condition3_pass;
            jc["argmin_control"] = cell.argmin_control;
            jc["argmin_margin"] = cell.argmin_margin;
        }
        json devs = json::array();
        for (const auto& d : cell.deviations) {
            devs.push_back({{"u", d.u},
                            {"delta_mean", d.mean_delta},
                            {"se", d.se},
                            {"quantile01", d.quantile01},
                            {"pass", d.pass}});
        }
        jc["deviations"] = devs;
        cells.push_back(jc);
    }
    json out;
    out["cells"] = cells;
    out["overall_pass"] = report.overall_pass;
    out["warnings"] = report.warnings;
    return out;
}

int run_scenario(const tic::ScenarioConfig& cfg) {
    const auto started = std::chrono::steady_clock::now();
    const tic::Scenario sc = tic::make_scenario(cfg);
    const auto deviations = tic::default_deviation_set(sc.problem.controls, cfg.seed);
    const auto t_grid = tic::resolve_t_grid(cfg);
    const auto x_grid = tic::resolve_x_grid(cfg);

    tic::EquilibriumScanOptions opts;
    opts.n_paths = cfg.scan_paths;
    opts.seed = cfg.seed;
    opts.basis_degree = cfg.basis_degree;
    const tic::EquilibriumReport report =
        tic::check_equilibrium(sc.problem, sc.candidate, t_grid, x_grid, deviations, opts);

    // direct spike quotients at the base cell for the first four deviations
    std::map<std::size_t, double> direct;
    {
        const tic::BrownianEnsemble ens(sc.problem.grid, cfg.scan_paths,
                                        tic::mix_seed(cfg.seed, 0xD12EC7));
        const tic::PolicyRun run = tic::solve_state_forward(sc.problem, sc.candidate, ens);
        const auto ladder = tic::resolve_epsilon_ladder(cfg);
        for (std::size_t k = 0; k < deviations.size() && k < 4; ++k) {
            const tic::SpikeLimitEstimate est = tic::estimate_spike_limit_direct(
                sc.problem, run.controls, deviations[k], sc.problem.grid.t_start, ladder, ens,
                cfg.basis_degree);
            direct[k] = est.extrapolated_direct;
        }
    }

    const std::filesystem::path out_dir(cfg.output_dir);
    std::filesystem::create_directories(out_dir / "tables");

    {
        std::ofstream f(out_dir / "report.json");
        f << report_to_json(report).dump(2) << "\n";
    }
    {
        std::ofstream f(out_dir / "tables" / "scan.csv");
        f << "t,x,zeta_dev,c_dev,delta_mean,delta_se,quantile01,adjoint_estimate,"
             "direct_extrapolated,pass\n";
        for (const auto& cell : report.cells) {
            if (!cell.error.empty()) continue;
            for (std::size_t k = 0; k < cell.deviations.size(); ++k) {
                const auto& d = cell.deviations[k];
                const bool base_cell = cell.t == t_grid.front() && cell.x == cfg.x0;
                f << fmt(cell.t) << ',' << fmt(cell.x) << ',' << fmt(d.u[0]) << ','
                  << fmt(d.u[1]) << ',' << fmt(d.mean_delta) << ',' << fmt(d.se) << ','
                  << fmt(d.quantile01) << ',' << fmt(d.mean_delta) << ',';
                if (base_cell && direct.count(k)) f << fmt(direct.at(k));
                f << ',' << (d.pass ? "pass" : "fail") << "\n";
            }
        }
    }
    {
        const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 std::chrono::steady_clock::now() - started)
                                 .count();
        json meta;
        meta["config"] = json::parse(tic::config_to_json(cfg));
        meta["scenario_description"] = sc.description;
        meta["version"] = "0.1.0";
        meta["threads"] = tic::thread_count();
        meta["elapsed_ms"] = elapsed;
        std::ofstream f(out_dir / "run_meta.json");
        f << meta.dump(2) << "\n";
    }

    std::cout << (report.overall_pass ? "PASS" : "FAIL") << " " << sc.name << " ("
              << report.cells.size() << " cells)\n";
    return report.overall_pass ? 0 : 2;
}

// synthetic geometric Brownian motion instance with a strong drift so the
// Euler weak error dominates Monte Carlo noise under common random numbers
tic::ProblemInstance gbm_probe(int n_steps, double drift, double vol) {
    tic::CoefficientBundle c;
    c.name = "gbm_probe";
    c.b = [drift](double, double x, std::span<const double>) { return drift * x; };
    c.sigma = [vol](double, double x, std::span<const double>) { return vol * x; };
    c.f = [](double, double, std::span<const double>, double, double, double) { return 0.0; };
    c.h = [](double x, double) { return x; };
    tic::ControlDomain controls;
    controls.lower = {0.0};
    controls.upper = {1.0};
    return tic::build_problem(std::move(c), tic::TimeGrid{0.0, 1.0, n_steps}, controls,
                              tic::StateDomain::whole_line(), 1.0, tic::ForwardScheme::euler);
}

int convergence_study(const tic::ScenarioConfig& cfg, const std::string& axis,
                      std::vector<double> ladder) {
    std::ostringstream csv;
    if (axis == "steps") {
        if (ladder.empty()) ladder = {8, 16, 32, 64};
        if (ladder.size() < 3) throw std::invalid_argument("steps ladder needs >= 3 points");
        const double drift = 1.0, vol = 0.5;
        csv << "n_steps,weak_error\n";
        std::vector<double> ns, errs;
        for (double nd : ladder) {
            const int n = static_cast<int>(nd);
            const tic::ProblemInstance probe = gbm_probe(n, drift, vol);
            const tic::BrownianEnsemble ens(probe.grid, cfg.n_paths, cfg.seed);
            const tic::PolicyRun run = tic::solve_state_forward(
                probe, [](double, double) -> tic::Control { return {0.0}; }, ens);
            // exact terminal from the same increments (common random numbers)
            std::vector<double> diffs(ens.paths());
            for (std::size_t p = 0; p < ens.paths(); ++p) {
                const double exact =
                    std::exp((drift - 0.5 * vol * vol) + vol * ens.w(p, n));
                diffs[p] = run.states.at(p, n) - exact;
            }
            const double err = std::abs(tic::mean(diffs));
            csv << n << ',' << fmt(err) << "\n";
            ns.push_back(n);
            errs.push_back(err);
        }
        csv << "slope," << fmt(tic::loglog_slope(ns, errs)) << "\n";
    } else if (axis == "paths") {
        if (ladder.empty()) ladder = {4000, 16000, 64000};
        if (ladder.size() < 3) throw std::invalid_argument("paths ladder needs >= 3 points");
        const tic::Scenario sc = tic::make_scenario(cfg);
        csv << "n_paths,standard_error\n";
        std::vector<double> ms, ses;
        for (double md : ladder) {
            const auto m = static_cast<std::size_t>(md);
            const tic::BrownianEnsemble ens(sc.problem.grid, m, cfg.seed);
            const tic::PolicyRun run = tic::solve_state_forward(sc.problem, sc.candidate, ens);
            std::vector<double> terminal(m);
            const int last = sc.problem.grid.n_knots() - 1;
            for (std::size_t p = 0; p < m; ++p)
                terminal[p] = sc.problem.bundle.h(run.states.at(p, last), 0.0);
            const double se = tic::standard_error(terminal);
            csv << m << ',' << fmt(se) << "\n";
            ms.push_back(static_cast<double>(m));
            ses.push_back(se);
        }
        csv << "slope," << fmt(tic::loglog_slope(ms, ses)) << "\n";
    } else if (axis == "epsilon") {
        if (ladder.empty()) ladder = tic::resolve_epsilon_ladder(cfg);
        if (ladder.size() < 3) throw std::invalid_argument("epsilon ladder needs >= 3 points");
        const tic::Scenario sc = tic::make_scenario(cfg);
        const tic::BrownianEnsemble ens(sc.problem.grid, cfg.scan_paths, cfg.seed);
        tic::PolicyRun run = tic::solve_state_forward(sc.problem, sc.candidate, ens);
        const tic::BsdeSolution utility = tic::solve_bsde_regression(
            sc.problem, run.controls, run.states, ens, cfg.basis_degree);
        const tic::CandidateTuple tuple{&run.states, &run.controls, &utility};
        const tic::AdjointBundle adjoints =
            tic::solve_adjoints(sc.problem, tuple, ens, cfg.basis_degree);
        const tic::KappaPath kappa = tic::compute_kappa(sc.problem, tuple, ens);

        tic::Control dev = sc.candidate(0.0, cfg.x0);
        dev[0] = std::min(dev[0] + 0.3, 1.0);
        const tic::MeanEstimate adj =
            tic::estimate_spike_limit_adjoint(sc.problem, tuple, adjoints, kappa, dev, 0.0);
        const tic::SpikeLimitEstimate est = tic::estimate_spike_limit_direct(
            sc.problem, run.controls, dev, 0.0, ladder, ens, cfg.basis_degree);

        csv << "epsilon,quotient,quotient_se,abs_gap_vs_adjoint\n";
        for (std::size_t k = 0; k < est.direct_values.size(); ++k) {
            const auto& [eps, q] = est.direct_values[k];
            csv << fmt(eps) << ',' << fmt(q) << ',' << fmt(est.quotient_se[k]) << ','
                << fmt(std::abs(q - adj.value)) << "\n";
        }
        csv << "extrapolated," << fmt(est.extrapolated_direct) << ",,"
            << fmt(std::abs(est.extrapolated_direct - adj.value)) << "\n";
        csv << "adjoint," << fmt(adj.value) << ',' << fmt(adj.se) << ",\n";
    } else {
        throw std::invalid_argument("unknown axis: " + axis);
    }

    std::cout << csv.str();
    const std::filesystem::path out_dir(cfg.output_dir);
    std::filesystem::create_directories(out_dir);
    std::ofstream f(out_dir / ("convergence_" + axis + ".csv"));
    f << csv.str();
    return 0;
}

tic::ScenarioConfig load_config(const std::string& config_path, const std::string& scenario) {
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw std::invalid_argument("cannot open config file: " + config_path);
        std::ostringstream buf;
        buf << in.rdbuf();
        return tic::parse_config_json(buf.str());
    }
    if (scenario.empty())
        throw std::invalid_argument("either --config or --scenario is required");
    tic::ScenarioConfig cfg;
    cfg.scenario = scenario;
    cfg.validate();
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"time-inconsistent recursive control toolkit"};
    app.require_subcommand(1);

    std::string config_path, scenario, out_dir, axis = "steps";
    std::vector<double> ladder;

    auto* run = app.add_subcommand("run", "scenario run with equilibrium scan");
    run->add_option("--config", config_path, "JSON config file");
    run->add_option("--scenario", scenario, "preset name (defaults otherwise)");
    run->add_option("--out", out_dir, "output directory override");

    auto* conv = app.add_subcommand("converge", "convergence study");
    conv->add_option("--config", config_path, "JSON config file");
    conv->add_option("--scenario", scenario, "preset name (defaults otherwise)");
    conv->add_option("--axis", axis, "steps | paths | epsilon")->required();
    conv->add_option("--ladder", ladder, "axis ladder values");
    conv->add_option("--out", out_dir, "output directory override");

    auto* presets = app.add_subcommand("presets", "list scenario presets");

    CLI11_PARSE(app, argc, argv);

    try {
        if (presets->parsed()) {
            for (const auto& name : tic::preset_names()) std::cout << name << "\n";
            return 0;
        }
        tic::ScenarioConfig cfg = load_config(config_path, scenario);
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        if (run->parsed()) return run_scenario(cfg);
        return convergence_study(cfg, axis, ladder);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
}
