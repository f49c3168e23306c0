#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

// End-to-end coverage of the CLI: every exit-code path plus report
// reproducibility. The binary path arrives via the INVFEM_BIN environment
// variable (set by ctest).

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output;
};

RunResult run_cli(const std::string& args) {
    const char* bin = std::getenv("INVFEM_BIN");
    REQUIRE(bin != nullptr);
    const std::string out_file = "cli_out.txt";
    const std::string command = std::string(bin) + " " + args + " > " + out_file + " 2>&1";
    const int status = std::system(command.c_str());
    RunResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(out_file);
    std::stringstream ss;
    ss << in.rdbuf();
    result.output = ss.str();
    return result;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

const char* kTetConfig = R"({
    "mesh": {"generator": "unit_tet"},
    "direction": "forward",
    "formulation": "displacement",
    "degree": 1,
    "material": {"kind": "neo_hookean", "mu": 1.0, "lambda": 1.0, "rho0": 1.0},
    "dirichlet": [{"tag": 1, "exprs": ["0", "0", "0"]}],
    "body_force": ["0", "-0.2", "0"]
})";

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    return nlohmann::json::parse(in);
}

}  // namespace

TEST_CASE("cli usage errors exit with 2", "[cli]") {
    CHECK(run_cli("").exit_code == 2);
    CHECK(run_cli("frobnicate").exit_code == 2);
    CHECK(run_cli("forward").exit_code == 2);            // missing --config
    CHECK(run_cli("verify nonsense").exit_code == 2);    // unknown suite
    CHECK(run_cli("bench nonsense").exit_code == 2);
}

TEST_CASE("schema violations exit with 2 and name the offending key", "[cli]") {
    write_file("cli_bad.json", R"({"mesh": {"generator": "unit_tet"}, "direction": "forward",
        "formulation": "displacement", "surprise": 1,
        "material": {"kind": "neo_hookean", "mu": 1.0, "lambda": 1.0, "rho0": 1.0}})");
    const RunResult result = run_cli("forward --config cli_bad.json");
    CHECK(result.exit_code == 2);
    CHECK(result.output.find("surprise") != std::string::npos);
}

TEST_CASE("forward solve writes report and vtk artifacts", "[cli]") {
    write_file("cli_tet.json", kTetConfig);
    const RunResult result = run_cli("forward --config cli_tet.json --output cli_fwd");
    CAPTURE(result.output);
    REQUIRE(result.exit_code == 0);

    const nlohmann::json report = read_json("cli_fwd/report.json");
    CHECK(report["subcommand"] == "forward");
    CHECK(report["convergence"]["steps"].back()["converged"] == true);
    CHECK(report["displacement"]["max_magnitude"].get<double>() > 1e-3);
    CHECK(std::ifstream("cli_fwd/solution.vtk").good());
    CHECK(std::ifstream("cli_fwd/solution_updated.vtk").good());
}

TEST_CASE("inverse and iga subcommands run", "[cli]") {
    std::string inverse_cfg(kTetConfig);
    const auto pos = inverse_cfg.find("forward");
    inverse_cfg.replace(pos, 7, "inverse");
    write_file("cli_inv.json", inverse_cfg);
    CHECK(run_cli("inverse --config cli_inv.json --output cli_inv").exit_code == 0);

    std::string iga_cfg(kTetConfig);
    const auto pos2 = iga_cfg.find("forward");
    iga_cfg.replace(pos2, 7, "iga");
    write_file("cli_iga.json", iga_cfg);
    const RunResult result = run_cli("iga --config cli_iga.json --output cli_iga");
    REQUIRE(result.exit_code == 0);
    const nlohmann::json report = read_json("cli_iga/report.json");
    CHECK(report["iga"]["converged"] == true);
    CHECK(report["iga"]["iterations"].get<int>() >= 1);
}

TEST_CASE("direction mismatch between subcommand and config exits with 2", "[cli]") {
    write_file("cli_tet2.json", kTetConfig);
    CHECK(run_cli("inverse --config cli_tet2.json").exit_code == 2);
}

TEST_CASE("solver divergence exits with 3 and still writes the report", "[cli]") {
    write_file("cli_div.json", kTetConfig);
    const RunResult result =
        run_cli("forward --config cli_div.json --output cli_div "
                "--set body_force.1=-1e9 --set solver.max_bisections=1 --set solver.max_iter=6");
    CHECK(result.exit_code == 3);
    const nlohmann::json report = read_json("cli_div/report.json");
    CHECK(report.contains("error"));
    CHECK(report["convergence"]["steps"].size() >= 1);
}

TEST_CASE("identical configs give bit-identical reports modulo timings", "[cli]") {
    write_file("cli_rep.json", kTetConfig);
    REQUIRE(run_cli("forward --config cli_rep.json --output cli_rep_a").exit_code == 0);
    REQUIRE(run_cli("forward --config cli_rep.json --output cli_rep_b").exit_code == 0);
    nlohmann::json a = read_json("cli_rep_a/report.json");
    nlohmann::json b = read_json("cli_rep_b/report.json");
    a.erase("timings");
    b.erase("timings");
    CHECK(a.dump() == b.dump());
}

TEST_CASE("overrides change the solved problem", "[cli]") {
    write_file("cli_ovr.json", kTetConfig);
    REQUIRE(run_cli("forward --config cli_ovr.json --output cli_ovr_base").exit_code == 0);
    REQUIRE(run_cli("forward --config cli_ovr.json --output cli_ovr_soft "
                    "--set material.mu=0.5").exit_code == 0);
    const double base =
        read_json("cli_ovr_base/report.json")["displacement"]["max_magnitude"].get<double>();
    const double soft =
        read_json("cli_ovr_soft/report.json")["displacement"]["max_magnitude"].get<double>();
    CHECK(soft > base);
}
