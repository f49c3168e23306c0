#pragma once

#include <chrono>
#include <cmath>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "invfem/assembly.hpp"
#include "invfem/solver.hpp"

// High-level entry points: forward solve, one-shot inverse solve, and the
// iterative geometric algorithm (IGA) baseline.

namespace invfem {

struct ProblemSetup {
    ProblemDefinition problem;
    SolverSettings solver;
};

struct NodalErrorMetrics {
    double l2 = 0;   // over stacked vertex coordinate differences
    double max = 0;  // largest per-vertex distance
};

inline NodalErrorMetrics nodal_error(const Mesh& a, const Mesh& b) {
    if (a.vertices.size() != b.vertices.size())
        throw InvalidArgument("nodal_error requires equal vertex counts");
    NodalErrorMetrics m;
    double sum = 0;
    for (std::size_t v = 0; v < a.vertices.size(); ++v) {
        const Vec3d d = a.vertices[v] - b.vertices[v];
        const double n2 = dot(d, d);
        sum += n2;
        m.max = std::max(m.max, std::sqrt(n2));
    }
    m.l2 = std::sqrt(sum);
    return m;
}

// Moves mesh vertices by the vertex values of a displacement field. The mesh
// stays straight-sided; P2 edge nodes of any space built on the result are
// re-derived as edge midpoints.
inline Mesh displaced_mesh(const Mesh& mesh, const FunctionSpace& space,
                           const Eigen::VectorXd& u) {
    Mesh out = mesh;
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
        for (int c = 0; c < 3; ++c)
            out.vertices[v][c] += u[space.dof(static_cast<int>(v), c)];
    return out;
}

struct AnalysisResult {
    std::shared_ptr<const FunctionSpace> displacement_space;
    std::shared_ptr<const FunctionSpace> pressure_space;  // null unless mixed
    Eigen::VectorXd displacement;                         // u (forward) or u' (inverse)
    std::optional<Eigen::VectorXd> pressure;
    Mesh updated_mesh;  // x = X + u, or recovered X = x + u'
    ConvergenceRecord convergence;
    double wall_seconds = 0;

    NodalField displacement_field() const {
        return {displacement_space.get(), displacement};
    }
};

namespace detail {

inline AnalysisResult run_solve(const ProblemSetup& setup) {
    const auto start = std::chrono::steady_clock::now();
    auto [state, record] = continuation_solve(setup.problem, setup.solver);
    AnalysisResult result;
    result.displacement_space = setup.problem.displacement_space;
    result.pressure_space = setup.problem.pressure_space;
    result.displacement = state.u.coeffs;
    if (state.p) result.pressure = state.p->coeffs;
    result.updated_mesh =
        displaced_mesh(*setup.problem.mesh, *setup.problem.displacement_space, state.u.coeffs);
    result.convergence = std::move(record);
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

// A copy of the problem re-bound to a new mesh (used by IGA, whose geometry
// changes every iteration).
inline ProblemDefinition rebind_problem(const ProblemDefinition& prob, const Mesh& mesh,
                                        Direction direction) {
    ProblemDefinition out = make_problem(direction, prob.formulation, mesh, prob.material,
                                         prob.displacement_space->degree);
    out.dirichlet = prob.dirichlet;
    out.tractions = prob.tractions;
    out.body_force = prob.body_force;
    out.load_scale = prob.load_scale;
    out.quadrature_degree = prob.quadrature_degree;
    return out;
}

}  // namespace detail

// Standard deformation analysis: u on the reference input mesh, deformed
// geometry x = X + u.
inline AnalysisResult solve_forward(const ProblemSetup& setup) {
    if (setup.problem.direction != Direction::Forward)
        throw InvalidArgument("solve_forward requires a forward problem");
    return detail::run_solve(setup);
}

// One-shot inverse analysis: the input mesh is the deformed configuration;
// the recovered rest geometry is X = x + u'.
inline AnalysisResult solve_inverse(const ProblemSetup& setup) {
    if (setup.problem.direction != Direction::Inverse)
        throw InvalidArgument("solve_inverse requires an inverse problem");
    return detail::run_solve(setup);
}

struct IGASettings {
    double epsilon = 1e-6;   // threshold on the nodal l2 geometry error
    int max_iterations = 50;

    void validate() const {
        if (!(epsilon > 0)) throw InvalidArgument("IGA epsilon must be positive");
        if (max_iterations < 1) throw InvalidArgument("IGA max_iterations must be >= 1");
    }
};

struct IGAResult {
    AnalysisResult analysis;            // u' on the input (deformed) mesh
    std::vector<double> error_history;  // nodal l2 error per iteration
    int iterations = 0;                 // forward solves performed
    bool converged = false;
    double wall_seconds = 0;
};

// Sellier's fixed-point scheme, used as the baseline the one-shot method is
// benchmarked against:
//   X0 <- X_ini; repeat: forward-solve from X_j giving x_j,
//   err <- |x_j - X_ini|, X_{j+1} <- X_j - (x_j - X_ini)  until err <= eps,
// i.e. each guess is corrected by the mismatch between the computed and the
// known deformed configuration. A forward divergence inside an iteration
// aborts with the partial history.
inline IGAResult iga_solve(const ProblemSetup& setup, const IGASettings& iga) {
    iga.validate();
    const auto start = std::chrono::steady_clock::now();
    const Mesh& target = *setup.problem.mesh;  // X_ini: the known deformed geometry

    IGAResult result;
    Mesh rest_estimate = target;
    AnalysisResult last_forward;
    for (int j = 0; j < iga.max_iterations; ++j) {
        ProblemSetup forward_setup{detail::rebind_problem(setup.problem, rest_estimate,
                                                          Direction::Forward),
                                   setup.solver};
        try {
            last_forward = detail::run_solve(forward_setup);
        } catch (const DivergenceError& e) {
            result.wall_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            throw DivergenceError("IGA forward solve diverged at iteration " + std::to_string(j) +
                                      " (" + std::string(e.what()) + ")",
                                  e.record());
        }
        ++result.iterations;
        const double err = nodal_error(last_forward.updated_mesh, target).l2;
        result.error_history.push_back(err);
        if (err <= iga.epsilon) {
            result.converged = true;
            break;
        }
        if (result.iterations >= iga.max_iterations) break;
        // X_{j+1} = X_j - (x_j - X_ini)
        Mesh next = rest_estimate;
        for (std::size_t v = 0; v < next.vertices.size(); ++v)
            next.vertices[v] -= (last_forward.updated_mesh.vertices[v] - target.vertices[v]);
        rest_estimate = std::move(next);
    }

    // Report u' = X_rest - x on the input mesh's displacement space, with P2
    // edge values re-derived from the straight-sided geometry.
    AnalysisResult analysis;
    analysis.displacement_space = setup.problem.displacement_space;
    analysis.pressure_space = nullptr;
    const FunctionSpace& space = *setup.problem.displacement_space;
    const FunctionSpace rest_space = build_space(rest_estimate, space.degree, 3);
    Eigen::VectorXd uprime(space.dof_count());
    for (int n = 0; n < space.n_scalar_nodes; ++n)
        for (int c = 0; c < 3; ++c)
            uprime[space.dof(n, c)] = rest_space.node_coords[n][c] - space.node_coords[n][c];
    analysis.displacement = std::move(uprime);
    analysis.updated_mesh = rest_estimate;
    analysis.convergence = last_forward.convergence;
    result.analysis = std::move(analysis);
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

}  // namespace invfem
