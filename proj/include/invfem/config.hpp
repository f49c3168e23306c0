#pragma once

#include <json.hpp>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "invfem/driver.hpp"

// Run configuration: a JSON document validated against a fixed schema before
// any solve (unknown keys are rejected, with the offending path reported).

namespace invfem {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

class SchemaError : public Error {
public:
    SchemaError(const std::string& what, std::string path)
        : Error(what + " (at " + (path.empty() ? "/" : path) + ")"), path_(std::move(path)) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

enum class MeshGenerator { Box, Cylinder, UnitTet, Gmsh };

struct RunConfig {
    MeshGenerator generator = MeshGenerator::UnitTet;
    Vec3d extents{1, 1, 1};
    std::array<int, 3> divisions{1, 1, 1};
    double length = 0.1, diameter = 0.01;
    int axial_divisions = 1, radial_layers = 1;
    std::string gmsh_path;

    Direction direction = Direction::Forward;
    bool run_iga = false;  // direction "iga": forward-style config, IGA driver
    Formulation formulation = Formulation::DisplacementOnly;
    int degree = 2;

    MaterialSpec material;
    std::vector<DirichletSpec> dirichlet;
    std::vector<TractionSpec> tractions;
    std::array<Expr, 3> body_force{};

    SolverSettings solver;
    IGASettings iga;

    std::string vtk_path, report_path;
};

namespace detail {

inline void check_keys(const json& doc, const std::set<std::string>& allowed,
                       const std::string& path) {
    if (!doc.is_object()) throw SchemaError("expected an object", path);
    for (const auto& [key, value] : doc.items())
        if (allowed.find(key) == allowed.end())
            throw SchemaError("unknown key '" + key + "'", path + "/" + key);
}

inline double require_number(const json& doc, const char* key, const std::string& path) {
    if (!doc.contains(key)) throw SchemaError(std::string("missing key '") + key + "'", path);
    if (!doc[key].is_number()) throw SchemaError(std::string("'") + key + "' must be a number",
                                                 path + "/" + key);
    return doc[key].get<double>();
}

inline double number_or(const json& doc, const char* key, double fallback,
                        const std::string& path) {
    if (!doc.contains(key)) return fallback;
    if (!doc[key].is_number()) throw SchemaError(std::string("'") + key + "' must be a number",
                                                 path + "/" + key);
    return doc[key].get<double>();
}

inline int require_int(const json& doc, const char* key, const std::string& path) {
    if (!doc.contains(key)) throw SchemaError(std::string("missing key '") + key + "'", path);
    if (!doc[key].is_number_integer())
        throw SchemaError(std::string("'") + key + "' must be an integer", path + "/" + key);
    return doc[key].get<int>();
}

inline std::string require_string(const json& doc, const char* key, const std::string& path) {
    if (!doc.contains(key)) throw SchemaError(std::string("missing key '") + key + "'", path);
    if (!doc[key].is_string())
        throw SchemaError(std::string("'") + key + "' must be a string", path + "/" + key);
    return doc[key].get<std::string>();
}

inline Expr parse_expr_key(const json& value, const std::string& path) {
    if (value.is_number()) return Expr::constant(value.get<double>());
    if (!value.is_string()) throw SchemaError("expected an expression string", path);
    try {
        return Expr::parse(value.get<std::string>());
    } catch (const ParseError& e) {
        throw SchemaError(std::string("bad expression: ") + e.what(), path);
    }
}

inline std::array<Expr, 3> parse_expr_triple(const json& value, const std::string& path) {
    if (!value.is_array() || value.size() != 3)
        throw SchemaError("expected an array of 3 expressions", path);
    std::array<Expr, 3> out;
    for (int c = 0; c < 3; ++c) out[c] = parse_expr_key(value[c], path + "/" + std::to_string(c));
    return out;
}

}  // namespace detail

inline RunConfig parse_run_config(const json& doc) {
    using namespace detail;
    RunConfig cfg;
    check_keys(doc, {"mesh", "direction", "formulation", "degree", "material", "dirichlet",
                     "tractions", "body_force", "solver", "iga", "output"},
               "");

    // mesh
    if (!doc.contains("mesh")) throw SchemaError("missing key 'mesh'", "");
    {
        const json& mesh = doc["mesh"];
        const std::string path = "/mesh";
        check_keys(mesh, {"generator", "extents", "divisions", "length", "diameter",
                          "axial_divisions", "radial_layers", "path"},
                   path);
        const std::string gen = require_string(mesh, "generator", path);
        if (gen == "box") {
            cfg.generator = MeshGenerator::Box;
            if (!mesh.contains("extents") || !mesh["extents"].is_array() ||
                mesh["extents"].size() != 3)
                throw SchemaError("box mesh requires 'extents' [3]", path);
            if (!mesh.contains("divisions") || !mesh["divisions"].is_array() ||
                mesh["divisions"].size() != 3)
                throw SchemaError("box mesh requires 'divisions' [3]", path);
            for (int d = 0; d < 3; ++d) {
                cfg.extents[d] = mesh["extents"][d].get<double>();
                cfg.divisions[d] = mesh["divisions"][d].get<int>();
            }
        } else if (gen == "cylinder") {
            cfg.generator = MeshGenerator::Cylinder;
            cfg.length = require_number(mesh, "length", path);
            cfg.diameter = require_number(mesh, "diameter", path);
            cfg.axial_divisions = require_int(mesh, "axial_divisions", path);
            cfg.radial_layers = require_int(mesh, "radial_layers", path);
        } else if (gen == "unit_tet") {
            cfg.generator = MeshGenerator::UnitTet;
        } else if (gen == "gmsh") {
            cfg.generator = MeshGenerator::Gmsh;
            cfg.gmsh_path = require_string(mesh, "path", path);
        } else {
            throw SchemaError("unknown mesh generator '" + gen + "'", path + "/generator");
        }
    }

    const std::string direction = require_string(doc, "direction", "");
    if (direction == "forward") {
        cfg.direction = Direction::Forward;
    } else if (direction == "inverse") {
        cfg.direction = Direction::Inverse;
    } else if (direction == "iga") {
        cfg.direction = Direction::Forward;
        cfg.run_iga = true;
    } else {
        throw SchemaError("direction must be forward|inverse|iga", "/direction");
    }

    const std::string formulation = require_string(doc, "formulation", "");
    if (formulation == "displacement") {
        cfg.formulation = Formulation::DisplacementOnly;
    } else if (formulation == "mixed") {
        cfg.formulation = Formulation::MixedUP;
    } else {
        throw SchemaError("formulation must be displacement|mixed", "/formulation");
    }

    cfg.degree = doc.contains("degree") ? require_int(doc, "degree", "") : 2;
    if (cfg.degree != 1 && cfg.degree != 2) throw SchemaError("degree must be 1 or 2", "/degree");
    if (cfg.formulation == Formulation::MixedUP && cfg.degree != 2)
        throw SchemaError("mixed formulation requires degree 2 (inf-sup pairing)", "/degree");

    // material
    if (!doc.contains("material")) throw SchemaError("missing key 'material'", "");
    {
        const json& mat = doc["material"];
        const std::string path = "/material";
        check_keys(mat, {"kind", "mu", "lambda", "c1", "c2", "d1", "rho0"}, path);
        const std::string kind = require_string(mat, "kind", path);
        const double rho0 = require_number(mat, "rho0", path);
        const bool mixed = cfg.formulation == Formulation::MixedUP;
        try {
            if (kind == "neo_hookean") {
                cfg.material = MaterialSpec::neo_hookean(require_number(mat, "mu", path),
                                                         require_number(mat, "lambda", path),
                                                         rho0, mixed);
            } else if (kind == "mooney_rivlin") {
                cfg.material = MaterialSpec::mooney_rivlin(require_number(mat, "c1", path),
                                                           require_number(mat, "c2", path),
                                                           require_number(mat, "d1", path),
                                                           rho0, mixed);
            } else {
                throw SchemaError("material kind must be neo_hookean|mooney_rivlin",
                                  path + "/kind");
            }
        } catch (const InvalidArgument& e) {
            throw SchemaError(e.what(), path);
        }
    }

    if (doc.contains("dirichlet")) {
        if (!doc["dirichlet"].is_array()) throw SchemaError("'dirichlet' must be an array", "");
        int index = 0;
        for (const json& entry : doc["dirichlet"]) {
            const std::string path = "/dirichlet/" + std::to_string(index++);
            detail::check_keys(entry, {"tag", "components", "exprs"}, path);
            DirichletSpec spec;
            spec.tag = detail::require_int(entry, "tag", path);
            spec.components = {false, false, false};
            if (entry.contains("components")) {
                if (!entry["components"].is_array())
                    throw SchemaError("'components' must be an array of indices", path);
                for (const json& c : entry["components"]) {
                    const int idx = c.get<int>();
                    if (idx < 0 || idx > 2)
                        throw SchemaError("component index must be 0, 1 or 2", path);
                    spec.components[idx] = true;
                }
            } else {
                spec.components = {true, true, true};
            }
            if (!entry.contains("exprs")) throw SchemaError("missing key 'exprs'", path);
            spec.exprs = detail::parse_expr_triple(entry["exprs"], path + "/exprs");
            cfg.dirichlet.push_back(std::move(spec));
        }
    }

    if (doc.contains("tractions")) {
        if (!doc["tractions"].is_array()) throw SchemaError("'tractions' must be an array", "");
        int index = 0;
        for (const json& entry : doc["tractions"]) {
            const std::string path = "/tractions/" + std::to_string(index++);
            detail::check_keys(entry, {"tag", "exprs"}, path);
            TractionSpec spec;
            spec.tag = detail::require_int(entry, "tag", path);
            if (!entry.contains("exprs")) throw SchemaError("missing key 'exprs'", path);
            spec.exprs = detail::parse_expr_triple(entry["exprs"], path + "/exprs");
            cfg.tractions.push_back(std::move(spec));
        }
    }

    if (doc.contains("body_force"))
        cfg.body_force = detail::parse_expr_triple(doc["body_force"], "/body_force");

    if (doc.contains("solver")) {
        const json& solver = doc["solver"];
        const std::string path = "/solver";
        detail::check_keys(solver, {"tol", "rel_tol", "max_iter", "continuation_steps",
                                    "max_bisections"},
                           path);
        cfg.solver.newton_tolerance = detail::number_or(solver, "tol", 1e-10, path);
        cfg.solver.relative_tolerance = detail::number_or(solver, "rel_tol", 1e-12, path);
        cfg.solver.max_newton_iterations =
            static_cast<int>(detail::number_or(solver, "max_iter", 25, path));
        cfg.solver.continuation_steps =
            static_cast<int>(detail::number_or(solver, "continuation_steps", 1, path));
        cfg.solver.max_step_bisections =
            static_cast<int>(detail::number_or(solver, "max_bisections", 8, path));
        try {
            cfg.solver.validate();
        } catch (const InvalidArgument& e) {
            throw SchemaError(e.what(), path);
        }
    }

    if (doc.contains("iga")) {
        const json& iga = doc["iga"];
        const std::string path = "/iga";
        detail::check_keys(iga, {"epsilon", "max_iterations"}, path);
        cfg.iga.epsilon = detail::number_or(iga, "epsilon", 1e-6, path);
        cfg.iga.max_iterations =
            static_cast<int>(detail::number_or(iga, "max_iterations", 50, path));
        try {
            cfg.iga.validate();
        } catch (const InvalidArgument& e) {
            throw SchemaError(e.what(), path);
        }
    }

    if (doc.contains("output")) {
        const json& output = doc["output"];
        detail::check_keys(output, {"vtk_path", "report_path"}, "/output");
        if (output.contains("vtk_path")) cfg.vtk_path = output["vtk_path"].get<std::string>();
        if (output.contains("report_path"))
            cfg.report_path = output["report_path"].get<std::string>();
    }

    return cfg;
}

// Dotted-path override: "solver.tol=1e-8", "material.mu=2e4",
// "body_force.1=-9.81". Values parse as JSON when possible, else as strings.
inline void apply_override(json& doc, const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos)
        throw SchemaError("override must look like key.path=value", "/" + assignment);
    const std::string key_path = assignment.substr(0, eq);
    const std::string value_text = assignment.substr(eq + 1);

    json value;
    try {
        value = json::parse(value_text);
    } catch (const json::exception&) {
        value = value_text;  // plain string
    }

    json* node = &doc;
    std::size_t begin = 0;
    std::vector<std::string> parts;
    while (begin <= key_path.size()) {
        const std::size_t dot = key_path.find('.', begin);
        parts.push_back(key_path.substr(begin, dot == std::string::npos ? dot : dot - begin));
        if (dot == std::string::npos) break;
        begin = dot + 1;
    }
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        const std::string& part = parts[i];
        if (node->is_array()) {
            node = &(*node)[std::stoul(part)];
        } else {
            node = &(*node)[part];
        }
    }
    if (node->is_array()) {
        (*node)[std::stoul(parts.back())] = value;
    } else {
        (*node)[parts.back()] = value;
    }
}

inline Mesh build_mesh(const RunConfig& cfg) {
    switch (cfg.generator) {
        case MeshGenerator::Box: return generate_box_mesh(cfg.extents, cfg.divisions);
        case MeshGenerator::Cylinder:
            return generate_cylinder_mesh(cfg.length, cfg.diameter, cfg.axial_divisions,
                                          cfg.radial_layers);
        case MeshGenerator::UnitTet: return generate_unit_tetrahedron();
        case MeshGenerator::Gmsh: return read_gmsh(cfg.gmsh_path).mesh;
    }
    throw InvalidArgument("unknown mesh generator");
}

// The mesh must outlive the returned setup.
inline ProblemSetup build_setup(const RunConfig& cfg, const Mesh& mesh) {
    ProblemSetup setup{make_problem(cfg.direction, cfg.formulation, mesh, cfg.material,
                                    cfg.formulation == Formulation::MixedUP ? 2 : cfg.degree),
                       cfg.solver};
    setup.problem.dirichlet = cfg.dirichlet;
    setup.problem.tractions = cfg.tractions;
    setup.problem.body_force = cfg.body_force;
    check_problem_tags(setup.problem);
    return setup;
}

inline ordered_json convergence_to_json(const ConvergenceRecord& record) {
    ordered_json out;
    out["total_newton_iterations"] = record.total_newton_iterations;
    out["steps"] = ordered_json::array();
    for (const auto& step : record.steps) {
        ordered_json s;
        s["load_scale"] = step.load_scale;
        s["converged"] = step.converged;
        s["residual_norms"] = step.residual_norms;
        out["steps"].push_back(std::move(s));
    }
    return out;
}

// Report of a forward/inverse/IGA run. Wall-clock fields are grouped under
// "timings" so reproducibility checks can strip them.
inline ordered_json analysis_report(const std::string& subcommand, const AnalysisResult& result,
                                    const Mesh& input_mesh) {
    ordered_json report;
    report["subcommand"] = subcommand;
    report["mesh"] = {{"vertices", input_mesh.vertices.size()},
                      {"cells", input_mesh.cells.size()}};
    report["dofs"] = result.displacement.size() +
                     (result.pressure ? result.pressure->size() : 0);

    double max_mag = 0, max_drop = 0;
    const FunctionSpace& space = *result.displacement_space;
    for (std::size_t v = 0; v < input_mesh.vertices.size(); ++v) {
        Vec3d u;
        for (int c = 0; c < 3; ++c) u[c] = result.displacement[space.dof(static_cast<int>(v), c)];
        max_mag = std::max(max_mag, norm(u));
        max_drop = std::max(max_drop, std::abs(u[1]));
    }
    report["displacement"] = {{"max_magnitude", max_mag}, {"max_y_magnitude", max_drop}};
    report["convergence"] = convergence_to_json(result.convergence);
    report["timings"] = {{"wall_seconds", result.wall_seconds}};
    return report;
}

}  // namespace invfem
