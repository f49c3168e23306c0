#pragma once

#include <charconv>
#include <chrono>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "invfem/config.hpp"
#include "invfem/oracles.hpp"

// The verification suites behind `invfem verify` / `invfem bench` and the
// acceptance tests: analytic shear checks, the single-tetrahedron benchmark
// against the iterative geometric algorithm, and the beam-under-gravity runs.

namespace invfem::harness {

namespace detail {

inline std::string fmt(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Forward or inverse shear problem on a cube mesh; all six face tags carry
// the driving displacement. For the inverse generalized case the closed-form
// body force that makes the quadratic field an exact equilibrium is added
// (manufactured equilibrium; J = 1 keeps the density factor trivial).
inline ProblemSetup shear_setup(const Mesh& mesh, Direction direction, ShearKind kind, double k,
                                double c1, double c2, bool manufactured_body_force,
                                bool mixed = false, double d1 = 1.0) {
    ProblemSetup setup{
        make_problem(direction, mixed ? Formulation::MixedUP : Formulation::DisplacementOnly,
                     mesh, MaterialSpec::mooney_rivlin(c1, c2, d1, 1.0, mixed), 2),
        SolverSettings{}};
    setup.solver.newton_tolerance = 1e-12;
    setup.solver.max_newton_iterations = 40;

    const std::string sign = direction == Direction::Forward ? "" : "-";
    const std::string profile = kind == ShearKind::Simple ? "y*" : "y^2*";
    const Expr ux = Expr::parse(sign + profile + fmt(k));
    for (int tag = 1; tag <= 6; ++tag)
        setup.problem.dirichlet.push_back(
            {tag, {true, true, true}, {ux, Expr::constant(0), Expr::constant(0)}});

    if (manufactured_body_force) {
        // div sigma row 0 = 4k(C1+C2), row 1 = -8k^2 y (4C2+2C1)/3; b = -div sigma / rho0
        const double bx = -4.0 * k * (c1 + c2);
        const double by = 8.0 * k * k * (4.0 * c2 + 2.0 * c1) / 3.0;
        setup.problem.body_force = {Expr::parse(fmt(bx)), Expr::parse(fmt(by) + "*y"),
                                    Expr::constant(0)};
    }
    return setup;
}

struct FieldErrors {
    double energy = 0;
    double stress = 0;      // full-tensor relative L2
    double stress_max = 0;  // worst single component (relative, or absolute for zero oracles)
};

// Pointwise quadrature comparison against the closed-form shear fields. For
// the generalized case the tabulated stress block is the deviatoric part of
// the incompressible solution; equilibrium additionally carries a hydrostatic
// field, which in the coordinates of the input (reference) mesh reads
//   h(x, y) = -4k(C1+C2)(x - 1/2) + (4/3)k^2(C2-C1)(y^2 - 1/3),
// normalized to zero mean because the boundary data preserve the enclosed
// volume. `with_hydrostatic` adds it to the oracle so mixed solutions are
// compared through the full Cauchy stress.
inline FieldErrors compare_with_oracle(const ProblemDefinition& prob, const SolutionState& state,
                                       const ShearOracle& oracle, bool with_hydrostatic = false) {
    const std::vector<QpSample> samples = sample_quadrature_fields(prob, state);
    std::vector<double> weights(samples.size());
    std::vector<double> fe(samples.size()), exact(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) weights[i] = samples[i].weight;

    FieldErrors errors;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        fe[i] = samples[i].psi;
        exact[i] = oracle_energy_pointwise(oracle, samples[i].x[1]);
    }
    errors.energy = field_relative_error(fe, exact, weights).value;

    double num = 0, den = 0;
    static const std::array<std::array<int, 2>, 6> comps = {
        {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {0, 2}, {1, 2}}};
    for (const auto& comp : comps) {
        for (std::size_t i = 0; i < samples.size(); ++i) {
            fe[i] = samples[i].cauchy(comp[0], comp[1]);
            exact[i] = oracle_cauchy(oracle, samples[i].x[1])(comp[0], comp[1]);
            if (with_hydrostatic && comp[0] == comp[1]) {
                const double x = samples[i].x[0], y = samples[i].x[1];
                exact[i] += -4.0 * oracle.k * (oracle.c1 + oracle.c2) * (x - 0.5) +
                            (4.0 / 3.0) * oracle.k * oracle.k * (oracle.c2 - oracle.c1) *
                                (y * y - 1.0 / 3.0);
            }
            const double d = fe[i] - exact[i];
            num += weights[i] * d * d;
            den += weights[i] * exact[i] * exact[i];
        }
        errors.stress_max =
            std::max(errors.stress_max, field_relative_error(fe, exact, weights).value);
    }
    errors.stress = den > 0 ? std::sqrt(num / den) : std::sqrt(num);
    return errors;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Simple shear: FE energy and all six Cauchy components against the closed
// forms, over k x (C1,C2) x mesh sweeps. Homogeneous deformation, so the
// errors sit at solver precision.
struct SimpleShearCase {
    double k, c1, c2;
    int divisions;
    double energy_error;
    double stress_error_max;
};

struct SimpleShearReport {
    std::vector<SimpleShearCase> cases;
    double max_error = 0;
    double wall_seconds = 0;
};

inline SimpleShearReport run_simple_shear_suite() {
    const auto start = std::chrono::steady_clock::now();
    SimpleShearReport report;
    const std::array<std::array<double, 2>, 3> materials = {{{1.0, 1.0}, {2.0, 0.5}, {0.5, 2.0}}};
    for (double k : {0.1, 0.5, 1.0})
        for (const auto& mat : materials)
            for (int divisions : {1, 2}) {
                const Mesh mesh = generate_unit_cube_mesh(divisions);
                ProblemSetup setup = detail::shear_setup(mesh, Direction::Forward,
                                                         ShearKind::Simple, k, mat[0], mat[1],
                                                         false);
                const auto [state, record] = continuation_solve(setup.problem, setup.solver);
                const ShearOracle oracle{k, mat[0], mat[1], ShearKind::Simple};
                const detail::FieldErrors errors =
                    detail::compare_with_oracle(setup.problem, state, oracle);
                report.cases.push_back(
                    {k, mat[0], mat[1], divisions, errors.energy, errors.stress_max});
                report.max_error =
                    std::max({report.max_error, errors.energy, errors.stress_max});
            }
    report.wall_seconds = detail::seconds_since(start);
    return report;
}

// ---------------------------------------------------------------------------
// Generalized shear: boundary-driven quadratic profile with no body force,
// run with the mixed nearly-incompressible formulation. In the incompressible
// limit the quadratic profile is the exact displacement; the Cauchy stress is
// the closed-form block plus the equilibrating hydrostatic field. The P1
// pressure space has to approximate that field, so the stress error decreases
// under refinement and lands well below the 2% target.
struct GeneralizedShearLevel {
    int divisions;
    double energy_error;
    double stress_error;
};

struct GeneralizedShearReport {
    std::vector<GeneralizedShearLevel> levels;
    double wall_seconds = 0;

    bool monotone() const {
        for (std::size_t i = 1; i < levels.size(); ++i) {
            if (levels[i].energy_error >= levels[i - 1].energy_error) return false;
            if (levels[i].stress_error >= levels[i - 1].stress_error) return false;
        }
        return true;
    }
    double finest_error() const {
        return std::max(levels.back().energy_error, levels.back().stress_error);
    }
};

inline GeneralizedShearReport run_generalized_shear_suite(double k = 0.5, double c1 = 0.5,
                                                          double c2 = 2.0) {
    const auto start = std::chrono::steady_clock::now();
    GeneralizedShearReport report;
    const double d1 = 1e4 * (c1 + c2);  // near-incompressibility
    const ShearOracle oracle{k, c1, c2, ShearKind::Generalized};

    for (int divisions : {1, 2, 4}) {
        const Mesh mesh = generate_unit_cube_mesh(divisions);
        ProblemSetup setup = detail::shear_setup(mesh, Direction::Forward, ShearKind::Generalized,
                                                 k, c1, c2, false, true, d1);
        const auto [state, record] = continuation_solve(setup.problem, setup.solver);
        const detail::FieldErrors errors =
            detail::compare_with_oracle(setup.problem, state, oracle, true);
        report.levels.push_back({divisions, errors.energy, errors.stress});
    }
    report.wall_seconds = detail::seconds_since(start);
    return report;
}

// ---------------------------------------------------------------------------
// Inverse shear recovery: start from the deformed cube, apply the opposite
// boundary displacement, recover the unit cube. The generalized variant adds
// the manufactured body force under which the quadratic field is the exact
// equilibrium, making exact recovery attainable.
struct InverseShearReport {
    double simple_l2 = 0;
    double generalized_l2 = 0;
    double wall_seconds = 0;
};

inline InverseShearReport run_inverse_shear_suite(double k = 0.5, int divisions = 2) {
    const auto start = std::chrono::steady_clock::now();
    InverseShearReport report;
    const Mesh cube = generate_unit_cube_mesh(divisions);

    {
        Mesh sheared = cube;
        for (auto& v : sheared.vertices) v[0] += k * v[1];
        ProblemSetup setup =
            detail::shear_setup(sheared, Direction::Inverse, ShearKind::Simple, k, 1.0, 1.0, false);
        const AnalysisResult result = solve_inverse(setup);
        report.simple_l2 = nodal_error(result.updated_mesh, cube).l2;
    }
    {
        Mesh deformed = cube;
        for (auto& v : deformed.vertices) v[0] += k * v[1] * v[1];
        ProblemSetup setup = detail::shear_setup(deformed, Direction::Inverse,
                                                 ShearKind::Generalized, k, 1.0, 1.0, true);
        const AnalysisResult result = solve_inverse(setup);
        report.generalized_l2 = nodal_error(result.updated_mesh, cube).l2;
    }
    report.wall_seconds = detail::seconds_since(start);
    return report;
}

// ---------------------------------------------------------------------------
// Single-tetrahedron benchmark: seeded random material/load draws; the
// one-shot method (PB) against IGA at a fixed threshold (IGA 1) and at the
// accuracy the one-shot method reached (IGA 2), in both orders.
struct MethodStats {
    double avg_error = 0, sd = 0, min = 1e300, max = 0;
    double avg_iterations = 0;
    double avg_ms = 0;
    int failures = 0;  // IGA runs that hit the iteration cap
};

struct TetBenchPart {
    MethodStats pb, iga1, iga2;
    double pb_faster_fraction = 0;  // one-shot faster than IGA 2
};

struct TetBenchReport {
    TetBenchPart part1, part2;
    int cases = 0;
    unsigned seed = 0;
    double wall_seconds = 0;
};

namespace detail {

struct CaseDraw {
    MaterialSpec material;
    double gravity;  // body acceleration along y (rho0 = 1)
};

inline CaseDraw draw_case(std::mt19937& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    CaseDraw draw;
    double stiffness_scale;
    if (unit(rng) < 0.5) {
        const double mu = std::exp(std::log(500.0) + unit(rng) * std::log(1e5 / 500.0));
        const double lambda = mu * (0.5 + 9.5 * unit(rng));
        draw.material = MaterialSpec::neo_hookean(mu, lambda, 1.0);
        stiffness_scale = mu;
    } else {
        const double c1 = std::exp(std::log(250.0) + unit(rng) * std::log(5e4 / 250.0));
        const double c2 = c1 * (0.1 + 1.9 * unit(rng));
        const double d1 = (c1 + c2) * (1.0 + 9.0 * unit(rng));
        draw.material = MaterialSpec::mooney_rivlin(c1, c2, d1, 1.0);
        stiffness_scale = 2.0 * (c1 + c2);
    }
    const double alpha = 0.02 + 0.18 * unit(rng);
    draw.gravity = (unit(rng) < 0.5 ? -1.0 : 1.0) * alpha * stiffness_scale;
    return draw;
}

inline ProblemSetup tet_setup(const Mesh& mesh, Direction direction, const CaseDraw& draw) {
    ProblemSetup setup{make_problem(direction, Formulation::DisplacementOnly, mesh, draw.material,
                                    1),
                       SolverSettings{}};
    setup.problem.dirichlet.push_back(
        {1, {true, true, true}, {Expr::constant(0), Expr::constant(0), Expr::constant(0)}});
    setup.problem.body_force = {Expr::constant(0), Expr::constant(draw.gravity),
                                Expr::constant(0)};
    // absolute tolerance scaled to the load resultant so draws are comparable
    setup.solver.newton_tolerance = 1e-12 * std::max(1.0, std::abs(draw.gravity));
    setup.solver.max_newton_iterations = 40;
    return setup;
}

struct Accumulator {
    std::vector<double> errors, iterations, ms;
    int failures = 0;

    void add(double error, double iters, double seconds, bool failed) {
        errors.push_back(error);
        iterations.push_back(iters);
        ms.push_back(seconds * 1e3);
        failures += failed ? 1 : 0;
    }

    MethodStats stats() const {
        MethodStats s;
        if (errors.empty()) return s;
        for (double e : errors) {
            s.avg_error += e;
            s.min = std::min(s.min, e);
            s.max = std::max(s.max, e);
        }
        s.avg_error /= errors.size();
        for (double e : errors) s.sd += (e - s.avg_error) * (e - s.avg_error);
        s.sd = std::sqrt(s.sd / errors.size());
        for (double i : iterations) s.avg_iterations += i;
        s.avg_iterations /= iterations.size();
        for (double m : ms) s.avg_ms += m;
        s.avg_ms /= ms.size();
        s.failures = failures;
        return s;
    }
};

}  // namespace detail

inline TetBenchReport run_tet_benchmark(unsigned seed = 42, int cases_per_part = 60) {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937 rng(seed);
    const Mesh tet = generate_unit_tetrahedron();

    TetBenchReport report;
    report.seed = seed;
    report.cases = cases_per_part;

    {
        // warm-up solve so first-touch allocation cost stays out of the timings
        std::mt19937 warm_rng(seed);
        const detail::CaseDraw draw = detail::draw_case(warm_rng);
        solve_forward(detail::tet_setup(tet, Direction::Forward, draw));
    }

    for (int part = 1; part <= 2; ++part) {
        detail::Accumulator pb, iga1, iga2;
        int pb_faster = 0;
        for (int c = 0; c < cases_per_part; ++c) {
            const detail::CaseDraw draw = detail::draw_case(rng);

            if (part == 1) {
                // forward first, then recover the rest shape from the result
                const AnalysisResult fwd =
                    solve_forward(detail::tet_setup(tet, Direction::Forward, draw));
                const Mesh& deformed = fwd.updated_mesh;

                const AnalysisResult inv =
                    solve_inverse(detail::tet_setup(deformed, Direction::Inverse, draw));
                const double err_pb = (inv.displacement + fwd.displacement).norm();
                pb.add(err_pb, double(inv.convergence.total_newton_iterations), inv.wall_seconds,
                       false);

                const ProblemSetup iga_setup = detail::tet_setup(deformed, Direction::Forward, draw);
                const IGAResult r1 = iga_solve(iga_setup, IGASettings{1e-6, 50});
                iga1.add((r1.analysis.displacement + fwd.displacement).norm(),
                         double(r1.iterations), r1.wall_seconds, !r1.converged);

                const IGAResult r2 =
                    iga_solve(iga_setup, IGASettings{std::max(err_pb, 1e-12), 50});
                iga2.add((r2.analysis.displacement + fwd.displacement).norm(),
                         double(r2.iterations), r2.wall_seconds, !r2.converged);
                pb_faster += inv.wall_seconds < r2.wall_seconds ? 1 : 0;
            } else {
                // inverse first from the unit tetrahedron, then verify forward
                const AnalysisResult inv =
                    solve_inverse(detail::tet_setup(tet, Direction::Inverse, draw));
                const AnalysisResult fwd = solve_forward(
                    detail::tet_setup(inv.updated_mesh, Direction::Forward, draw));
                const double err_pb = (inv.displacement + fwd.displacement).norm();
                pb.add(err_pb, double(inv.convergence.total_newton_iterations), inv.wall_seconds,
                       false);

                const ProblemSetup iga_setup = detail::tet_setup(tet, Direction::Forward, draw);
                const IGAResult r1 = iga_solve(iga_setup, IGASettings{1e-6, 50});
                const AnalysisResult f1 = solve_forward(
                    detail::tet_setup(r1.analysis.updated_mesh, Direction::Forward, draw));
                iga1.add((r1.analysis.displacement + f1.displacement).norm(),
                         double(r1.iterations), r1.wall_seconds, !r1.converged);

                const IGAResult r2 =
                    iga_solve(iga_setup, IGASettings{std::max(err_pb, 1e-12), 50});
                const AnalysisResult f2 = solve_forward(
                    detail::tet_setup(r2.analysis.updated_mesh, Direction::Forward, draw));
                iga2.add((r2.analysis.displacement + f2.displacement).norm(),
                         double(r2.iterations), r2.wall_seconds, !r2.converged);
                pb_faster += inv.wall_seconds < r2.wall_seconds ? 1 : 0;
            }
        }
        TetBenchPart& out = part == 1 ? report.part1 : report.part2;
        out.pb = pb.stats();
        out.iga1 = iga1.stats();
        out.iga2 = iga2.stats();
        out.pb_faster_fraction = double(pb_faster) / cases_per_part;
    }
    report.wall_seconds = detail::seconds_since(start);
    return report;
}

// ---------------------------------------------------------------------------
// Beam under gravity (PDMS cylinder, mixed Mooney-Rivlin): mesh convergence
// of the tip deflection, and the synthetic forward-then-inverse round trip.

inline MaterialSpec beam_material() {
    // Abaqus-convention fit: the reported D1 multiplies the inverse of the
    // volumetric coefficient, so the energy coefficient is 1/D1.
    const double c10 = 101709.668, c01 = 151065.460;
    const double d1 = 1.0 / 7.965272689e-8;
    return MaterialSpec::mooney_rivlin(c10, c01, d1, 965.0, true);
}

inline constexpr double beam_length = 0.182;
inline constexpr double beam_diameter = 0.0085;

inline ProblemSetup beam_setup(const Mesh& mesh, Direction direction, int continuation_steps) {
    ProblemSetup setup{make_problem(direction, Formulation::MixedUP, mesh, beam_material(), 2),
                       SolverSettings{}};
    setup.problem.dirichlet.push_back(
        {1, {true, true, true}, {Expr::constant(0), Expr::constant(0), Expr::constant(0)}});
    setup.problem.body_force = {Expr::constant(0), Expr::parse("-9.81"), Expr::constant(0)};
    setup.solver.continuation_steps = continuation_steps;
    setup.solver.newton_tolerance = 1e-9;
    setup.solver.max_newton_iterations = 30;
    return setup;
}

// Maximum deformation of the beam, attained at the tip: the largest vertex
// displacement magnitude.
inline double tip_deflection(const AnalysisResult& result, const Mesh& mesh) {
    const FunctionSpace& space = *result.displacement_space;
    double deformation = 0;
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
        Vec3d u;
        for (int c = 0; c < 3; ++c)
            u[c] = result.displacement[space.dof(static_cast<int>(v), c)];
        deformation = std::max(deformation, norm(u));
    }
    return deformation;
}

struct BeamLevel {
    int axial, radial;
    std::size_t dofs;
    double tip_deflection;
    double wall_seconds;
    int newton_iterations;
};

struct BeamConvergenceReport {
    std::vector<BeamLevel> levels;
    double wall_seconds = 0;

    bool monotone_increasing() const {
        for (std::size_t i = 1; i < levels.size(); ++i)
            if (levels[i].tip_deflection <= levels[i - 1].tip_deflection) return false;
        return true;
    }
};

inline BeamConvergenceReport run_beam_convergence(
    const std::vector<std::array<int, 2>>& levels = {{10, 2}, {18, 3}, {30, 4}}) {
    const auto start = std::chrono::steady_clock::now();
    BeamConvergenceReport report;
    for (const auto& level : levels) {
        const Mesh mesh = generate_cylinder_mesh(beam_length, beam_diameter, level[0], level[1]);
        ProblemSetup setup = beam_setup(mesh, Direction::Forward, 4);
        const AnalysisResult result = solve_forward(setup);
        report.levels.push_back({level[0], level[1],
                                 static_cast<std::size_t>(setup.problem.total_dofs()),
                                 tip_deflection(result, mesh), result.wall_seconds,
                                 result.convergence.total_newton_iterations});
    }
    report.wall_seconds = detail::seconds_since(start);
    return report;
}

struct BeamRoundTripReport {
    double l2 = 0;
    double max = 0;
    double relative_to_length = 0;
    double forward_tip = 0;
    double wall_seconds = 0;
};

inline BeamRoundTripReport run_beam_round_trip(int axial = 16, int radial = 2) {
    const auto start = std::chrono::steady_clock::now();
    const Mesh rest = generate_cylinder_mesh(beam_length, beam_diameter, axial, radial);

    const AnalysisResult forward = solve_forward(beam_setup(rest, Direction::Forward, 4));
    const Mesh deformed = forward.updated_mesh;

    const AnalysisResult inverse = solve_inverse(beam_setup(deformed, Direction::Inverse, 4));

    BeamRoundTripReport report;
    const NodalErrorMetrics err = nodal_error(inverse.updated_mesh, rest);
    report.l2 = err.l2;
    report.max = err.max;
    report.relative_to_length = err.l2 / beam_length;
    report.forward_tip = tip_deflection(forward, rest);
    report.wall_seconds = detail::seconds_since(start);
    return report;
}

// ---------------------------------------------------------------------------
// JSON renderings for reports.

inline ordered_json to_json(const SimpleShearReport& report) {
    ordered_json out;
    out["suite"] = "simple_shear";
    out["max_error"] = report.max_error;
    out["cases"] = ordered_json::array();
    for (const auto& c : report.cases)
        out["cases"].push_back({{"k", c.k},
                                {"c1", c.c1},
                                {"c2", c.c2},
                                {"divisions", c.divisions},
                                {"energy_error", c.energy_error},
                                {"stress_error_max", c.stress_error_max}});
    out["timings"] = {{"wall_seconds", report.wall_seconds}};
    return out;
}

inline ordered_json to_json(const GeneralizedShearReport& report) {
    ordered_json out;
    out["suite"] = "generalized_shear";
    out["monotone"] = report.monotone();
    out["finest_error"] = report.finest_error();
    out["levels"] = ordered_json::array();
    for (const auto& l : report.levels)
        out["levels"].push_back({{"divisions", l.divisions},
                                 {"energy_error", l.energy_error},
                                 {"stress_error", l.stress_error}});
    out["timings"] = {{"wall_seconds", report.wall_seconds}};
    return out;
}

inline ordered_json to_json(const InverseShearReport& report) {
    ordered_json out;
    out["suite"] = "inverse_shear";
    out["simple_l2"] = report.simple_l2;
    out["generalized_l2"] = report.generalized_l2;
    out["timings"] = {{"wall_seconds", report.wall_seconds}};
    return out;
}

inline ordered_json to_json(const MethodStats& stats, bool with_iterations) {
    ordered_json out;
    out["average_error"] = stats.avg_error;
    out["sd"] = stats.sd;
    out["minimum"] = stats.min;
    out["maximum"] = stats.max;
    if (with_iterations) {
        out["avg_iterations"] = stats.avg_iterations;
        out["failures"] = stats.failures;
    }
    out["avg_time_ms"] = stats.avg_ms;
    return out;
}

inline ordered_json to_json(const TetBenchReport& report) {
    ordered_json out;
    out["suite"] = "single_tetrahedron";
    out["seed"] = report.seed;
    out["cases_per_part"] = report.cases;
    for (int part = 1; part <= 2; ++part) {
        const TetBenchPart& p = part == 1 ? report.part1 : report.part2;
        ordered_json j;
        j["pb"] = to_json(p.pb, false);
        j["iga_1"] = to_json(p.iga1, true);
        j["iga_2"] = to_json(p.iga2, true);
        j["pb"]["avg_time_ratio"] = 1.0;
        j["iga_1"]["avg_time_ratio"] = p.pb.avg_ms > 0 ? p.iga1.avg_ms / p.pb.avg_ms : 0.0;
        j["iga_2"]["avg_time_ratio"] = p.pb.avg_ms > 0 ? p.iga2.avg_ms / p.pb.avg_ms : 0.0;
        j["pb_faster_fraction"] = p.pb_faster_fraction;
        out[part == 1 ? "part_1" : "part_2"] = std::move(j);
    }
    out["timings"] = {{"wall_seconds", report.wall_seconds}};
    return out;
}

inline ordered_json to_json(const BeamConvergenceReport& report) {
    ordered_json out;
    out["suite"] = "beam_convergence";
    out["levels"] = ordered_json::array();
    for (const auto& l : report.levels)
        out["levels"].push_back({{"axial", l.axial},
                                 {"radial", l.radial},
                                 {"dofs", l.dofs},
                                 {"tip_deflection_m", l.tip_deflection},
                                 {"newton_iterations", l.newton_iterations}});
    out["monotone_increasing"] = report.monotone_increasing();
    out["timings"] = {{"wall_seconds", report.wall_seconds}};
    return out;
}

inline ordered_json to_json(const BeamRoundTripReport& report) {
    ordered_json out;
    out["suite"] = "beam_round_trip";
    out["nodal_l2_m"] = report.l2;
    out["nodal_max_m"] = report.max;
    out["relative_to_length"] = report.relative_to_length;
    out["forward_tip_m"] = report.forward_tip;
    out["timings"] = {{"wall_seconds", report.wall_seconds}};
    return out;
}

}  // namespace invfem::harness
