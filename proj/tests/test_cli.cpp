#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace {

namespace fs = std::filesystem;

int run_command(const std::string& args, const fs::path& stdout_file) {
    const std::string cmd =
        std::string(TIC_CLI_PATH) + " " + args + " > " + stdout_file.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("tic_cli_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// small but complete run: single scan cell, explicit ladder coarse enough
// for the 25-step grid
std::string tiny_config(const fs::path& out_dir, double zeta_shift) {
    std::ostringstream cfg;
    cfg << R"({"scenario": "merton_exponential", "n_steps": 25, "n_paths": 4000,)"
        << R"( "scan_paths": 3000, "t_grid": [0.0], "x_grid": [1.0],)"
        << R"( "epsilon_ladder": [0.32, 0.16, 0.08], "zeta_shift": )" << zeta_shift
        << R"(, "output_dir": ")" << out_dir.string() << R"("})";
    return cfg.str();
}

fs::path write_config(const fs::path& dir, const std::string& text) {
    fs::path file = dir / "config.json";
    std::ofstream(file) << text;
    return file;
}

} // namespace

TEST_CASE("cli lists the presets") {
    fs::path dir = fresh_dir("presets");
    CHECK(run_command("presets", dir / "out.txt") == 0);
    const std::string out = slurp(dir / "out.txt");
    CHECK(out.find("merton_exponential") != std::string::npos);
    CHECK(out.find("merton_hyperbolic_K1") != std::string::npos);
    CHECK(out.find("merton_recursive_beta_gamma") != std::string::npos);
}

TEST_CASE("cli rejects a missing scenario") {
    fs::path dir = fresh_dir("missing");
    CHECK(run_command("run", dir / "out.txt") == 1);
    fs::path cfg = write_config(dir, R"({"scenario": "does_not_exist"})");
    CHECK(run_command("run --config " + cfg.string(), dir / "out2.txt") == 1);
    CHECK(slurp(dir / "out2.txt").find("error") != std::string::npos);
}

TEST_CASE("cli run produces the report bundle and is byte-stable") {
    fs::path dir_a = fresh_dir("run_a");
    fs::path dir_b = fresh_dir("run_b");
    fs::path cfg_a = write_config(dir_a, tiny_config(dir_a / "out", 0.0));
    fs::path cfg_b = write_config(dir_b, tiny_config(dir_b / "out", 0.0));

    REQUIRE(run_command("run --config " + cfg_a.string(), dir_a / "stdout.txt") == 0);
    CHECK(fs::exists(dir_a / "out" / "report.json"));
    CHECK(fs::exists(dir_a / "out" / "run_meta.json"));
    CHECK(fs::exists(dir_a / "out" / "tables" / "scan.csv"));

    const std::string csv = slurp(dir_a / "out" / "tables" / "scan.csv");
    CHECK(csv.find("t,x,zeta_dev,c_dev") == 0);

    REQUIRE(run_command("run --config " + cfg_b.string(), dir_b / "stdout.txt") == 0);
    // identical config (up to output paths) must give byte-identical reports
    CHECK(slurp(dir_a / "out" / "report.json") == slurp(dir_b / "out" / "report.json"));
    CHECK(slurp(dir_a / "out" / "tables" / "scan.csv") ==
          slurp(dir_b / "out" / "tables" / "scan.csv"));
}

// shifted config keeps the default 5x5 scan grids: the violation shows up at
// state cells away from x0, which a single-cell grid can miss at this budget
std::string shifted_config(const fs::path& out_dir) {
    std::ostringstream cfg;
    cfg << R"({"scenario": "merton_exponential", "n_steps": 25, "n_paths": 4000,)"
        << R"( "scan_paths": 3000, "epsilon_ladder": [0.32, 0.16, 0.08],)"
        << R"( "zeta_shift": 0.3, "output_dir": ")" << out_dir.string() << R"("})";
    return cfg.str();
}

TEST_CASE("cli flags the shifted policy with exit code 2") {
    fs::path dir = fresh_dir("shifted");
    fs::path cfg = write_config(dir, shifted_config(dir / "out"));
    CHECK(run_command("run --config " + cfg.string(), dir / "stdout.txt") == 2);
    const std::string report = slurp(dir / "out" / "report.json");
    CHECK(report.find("\"overall_pass\": false") != std::string::npos);
}
