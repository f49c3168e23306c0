// invfem: forward and inverse finite-strain hyperelasticity on tetrahedral
// meshes. Subcommands: forward, inverse, iga (solvers driven by a JSON
// config), verify (analytic shear suites), bench (single-tetrahedron
// benchmark).
//
// Exit codes: 0 success, 1 runtime failure, 2 config/usage error,
// 3 solver divergence (the report is still written).

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "invfem/config.hpp"
#include "invfem/harness.hpp"

namespace fs = std::filesystem;
using namespace invfem;

namespace {

struct CommonOptions {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string output_dir;
};

json load_document(const CommonOptions& opts) {
    std::ifstream in(opts.config_path);
    if (!in) throw IoError("cannot open config " + opts.config_path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("config is not valid JSON: ") + e.what(), "");
    }
    for (const auto& assignment : opts.overrides) apply_override(doc, assignment);
    return doc;
}

std::string output_path(const CommonOptions& opts, const std::string& configured,
                        const std::string& fallback) {
    fs::path path = configured.empty() ? fs::path(fallback) : fs::path(configured);
    if (!opts.output_dir.empty() && path.is_relative()) path = fs::path(opts.output_dir) / path;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    return path.string();
}

std::string updated_vtk_path(const std::string& vtk_path) {
    fs::path path(vtk_path);
    fs::path stem = path.parent_path() / path.stem();
    return stem.string() + "_updated" + path.extension().string();
}

void write_report(const std::string& path, const ordered_json& report) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write report " + path);
    out << report.dump(2) << "\n";
}

void write_solution_vtk(const CommonOptions& opts, const RunConfig& cfg, const Mesh& mesh,
                        const AnalysisResult& result) {
    const std::string vtk_path = output_path(opts, cfg.vtk_path, "solution.vtk");
    std::vector<VtkPointField> fields;
    fields.push_back(vtk_point_field(
        "u", NodalField{result.displacement_space.get(), result.displacement}));
    if (result.pressure)
        fields.push_back(
            vtk_point_field("p", NodalField{result.pressure_space.get(), *result.pressure}));
    write_vtk(mesh, fields, vtk_path);
    write_vtk(result.updated_mesh, std::vector<VtkPointField>{}, updated_vtk_path(vtk_path));
    std::cout << "wrote " << vtk_path << " and " << updated_vtk_path(vtk_path) << "\n";
}

int run_solver_command(const std::string& subcommand, const CommonOptions& opts) {
    const json doc = load_document(opts);
    const RunConfig cfg = parse_run_config(doc);
    if (subcommand == "forward" && (cfg.direction != Direction::Forward || cfg.run_iga))
        throw SchemaError("config direction must be 'forward'", "/direction");
    if (subcommand == "inverse" && cfg.direction != Direction::Inverse)
        throw SchemaError("config direction must be 'inverse'", "/direction");
    if (subcommand == "iga" && !cfg.run_iga)
        throw SchemaError("config direction must be 'iga'", "/direction");

    const Mesh mesh = build_mesh(cfg);
    const std::string report_path = output_path(opts, cfg.report_path, "report.json");

    try {
        if (subcommand == "iga") {
            ProblemSetup setup = build_setup(cfg, mesh);
            const IGAResult result = iga_solve(setup, cfg.iga);
            ordered_json report = analysis_report("iga", result.analysis, mesh);
            report["iga"] = {{"converged", result.converged},
                             {"iterations", result.iterations},
                             {"error_history", result.error_history}};
            report["timings"]["wall_seconds"] = result.wall_seconds;
            write_report(report_path, report);
            write_solution_vtk(opts, cfg, mesh, result.analysis);
            std::cout << "IGA " << (result.converged ? "converged" : "stopped") << " after "
                      << result.iterations << " forward solves, final error "
                      << (result.error_history.empty() ? 0.0 : result.error_history.back())
                      << "\n";
            return result.converged ? 0 : 3;
        }

        ProblemSetup setup = build_setup(cfg, mesh);
        const AnalysisResult result =
            subcommand == "forward" ? solve_forward(setup) : solve_inverse(setup);
        const ordered_json report = analysis_report(subcommand, result, mesh);
        write_report(report_path, report);
        write_solution_vtk(opts, cfg, mesh, result);
        std::cout << subcommand << " solve converged ("
                  << result.convergence.total_newton_iterations << " Newton iterations, "
                  << report["displacement"]["max_magnitude"].get<double>()
                  << " m max displacement)\n";
        return 0;
    } catch (const DivergenceError& e) {
        ordered_json report;
        report["subcommand"] = subcommand;
        report["error"] = e.what();
        report["convergence"] = convergence_to_json(e.record());
        write_report(report_path, report);
        std::cerr << "solver diverged: " << e.what() << "\n";
        return 3;
    }
}

int run_verify(const std::string& suite, const CommonOptions& opts) {
    if (suite != "shear") {
        std::cerr << "unknown verify suite '" << suite << "' (available: shear)\n";
        return 2;
    }
    const harness::SimpleShearReport simple = harness::run_simple_shear_suite();
    const harness::GeneralizedShearReport generalized = harness::run_generalized_shear_suite();
    const harness::InverseShearReport inverse = harness::run_inverse_shear_suite();

    std::cout << "simple shear: max relative error " << simple.max_error << " over "
              << simple.cases.size() << " cases\n";
    std::cout << "generalized shear refinement:\n";
    for (const auto& level : generalized.levels)
        std::cout << "  divisions " << level.divisions << ": energy " << level.energy_error
                  << ", stress " << level.stress_error << "\n";
    std::cout << "inverse recovery l2: simple " << inverse.simple_l2 << ", generalized "
              << inverse.generalized_l2 << "\n";

    ordered_json report;
    report["simple_shear"] = harness::to_json(simple);
    report["generalized_shear"] = harness::to_json(generalized);
    report["inverse_shear"] = harness::to_json(inverse);
    write_report(output_path(opts, "", "verify_shear.json"), report);

    const bool ok = simple.max_error <= 1e-10 && generalized.monotone() &&
                    generalized.finest_error() < 0.02 && inverse.simple_l2 <= 1e-9 &&
                    inverse.generalized_l2 <= 1e-9;
    std::cout << (ok ? "verify shear: PASS\n" : "verify shear: FAIL\n");
    return ok ? 0 : 1;
}

int run_bench(const std::string& suite, const CommonOptions& opts, unsigned seed, int cases) {
    if (suite != "tet") {
        std::cerr << "unknown bench suite '" << suite << "' (available: tet)\n";
        return 2;
    }
    const harness::TetBenchReport report = harness::run_tet_benchmark(seed, cases);
    for (int part = 1; part <= 2; ++part) {
        const harness::TetBenchPart& p = part == 1 ? report.part1 : report.part2;
        std::cout << "part " << (part == 1 ? "I" : "II") << " (" << report.cases
                  << " cases, seed " << report.seed << ")\n";
        std::cout << "  PB     avg error " << p.pb.avg_error << ", avg time " << p.pb.avg_ms
                  << " ms\n";
        std::cout << "  IGA(1) avg error " << p.iga1.avg_error << ", avg iterations "
                  << p.iga1.avg_iterations << ", avg time " << p.iga1.avg_ms << " ms\n";
        std::cout << "  IGA(2) avg error " << p.iga2.avg_error << ", avg iterations "
                  << p.iga2.avg_iterations << ", avg time " << p.iga2.avg_ms << " ms, "
                  << p.iga2.failures << " failures\n";
        std::cout << "  one-shot faster than IGA(2) in " << 100.0 * p.pb_faster_fraction
                  << "% of cases\n";
    }
    write_report(output_path(opts, "", "bench_tet.json"), harness::to_json(report));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"forward and one-shot inverse finite-strain hyperelasticity on tetrahedral meshes"};
    app.require_subcommand(1);

    CommonOptions opts;
    unsigned seed = 42;
    int cases = 60;
    std::string verify_suite, bench_suite;

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        if (needs_config)
            cmd->add_option("--config", opts.config_path, "JSON run configuration")->required();
        cmd->add_option("--set", opts.overrides,
                        "dotted-path override, e.g. --set solver.tol=1e-8");
        cmd->add_option("--output", opts.output_dir, "directory for reports and VTK output");
    };

    CLI::App* forward = app.add_subcommand("forward", "standard deformation analysis");
    add_common(forward, true);
    CLI::App* inverse = app.add_subcommand("inverse", "one-shot inverse deformation analysis");
    add_common(inverse, true);
    CLI::App* iga = app.add_subcommand("iga", "iterative geometric algorithm baseline");
    add_common(iga, true);

    CLI::App* verify = app.add_subcommand("verify", "analytic verification suites");
    verify->add_option("suite", verify_suite, "suite name (shear)")->required();
    add_common(verify, false);

    CLI::App* bench = app.add_subcommand("bench", "single-tetrahedron benchmark");
    bench->add_option("suite", bench_suite, "suite name (tet)")->required();
    add_common(bench, false);
    bench->add_option("--seed", seed, "random seed for the parameter draws");
    bench->add_option("--cases", cases, "number of draws per part");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (forward->parsed()) return run_solver_command("forward", opts);
        if (inverse->parsed()) return run_solver_command("inverse", opts);
        if (iga->parsed()) return run_solver_command("iga", opts);
        if (verify->parsed()) return run_verify(verify_suite, opts);
        if (bench->parsed()) return run_bench(bench_suite, opts, seed, cases);
    } catch (const SchemaError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
