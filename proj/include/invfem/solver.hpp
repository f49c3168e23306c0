#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <chrono>
#include <utility>
#include <vector>

#include "invfem/assembly.hpp"
#include "invfem/errors.hpp"

// Newton-Raphson with continuation in the loading parameter. The linear
// systems are solved by a sparse direct LU with column pivoting, which also
// covers the indefinite saddle-point matrices of the mixed formulation.

namespace invfem {

struct SolverSettings {
    double newton_tolerance = 1e-10;   // absolute l2 residual norm
    double relative_tolerance = 1e-12;
    int max_newton_iterations = 25;
    int continuation_steps = 1;
    int max_step_bisections = 8;

    void validate() const {
        if (!(newton_tolerance > 0) || !(relative_tolerance > 0))
            throw InvalidArgument("solver tolerances must be positive");
        if (max_newton_iterations < 1 || continuation_steps < 1 || max_step_bisections < 0)
            throw InvalidArgument("solver iteration limits must be positive");
    }
};

struct ConvergenceRecord {
    struct Step {
        double load_scale = 1.0;
        std::vector<double> residual_norms;  // per Newton iteration, starting at the initial norm
        bool converged = false;
    };
    std::vector<Step> steps;
    int total_newton_iterations = 0;
    double wall_seconds = 0;
};

class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, ConvergenceRecord record)
        : Error(what), record_(std::move(record)) {}
    const ConvergenceRecord& record() const { return record_; }

private:
    ConvergenceRecord record_;
};

// Sparse direct solve. SparseLU performs supernodal LU with partial pivoting
// (COLAMD ordering), sufficient for the indefinite mixed-formulation systems.
inline Eigen::VectorXd linear_solve(const SparseSystem& sys) {
    if (sys.matrix.rows() != sys.matrix.cols())
        throw InvalidArgument("linear_solve requires a square matrix");
    Eigen::SparseMatrix<double> a = sys.matrix;  // column-major copy for the factorization
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(a);
    lu.factorize(a);
    if (lu.info() != Eigen::Success)
        throw FactorizationError("sparse LU factorization failed: " + lu.lastErrorMessage());
    Eigen::VectorXd x = lu.solve(sys.rhs);
    if (lu.info() != Eigen::Success) throw FactorizationError("sparse LU solve failed");
    return x;
}

namespace detail {

// One Newton sequence at a fixed load scale. Returns false on divergence or
// element inversion so the caller can bisect the continuation step.
inline bool newton_at_scale(const ProblemDefinition& prob, const SolverSettings& settings,
                            SolutionState& state, ConvergenceRecord::Step& step,
                            const AssemblyPattern& pattern, int& iteration_count) {
    step.load_scale = prob.load_scale;
    step.residual_norms.clear();
    step.converged = false;
    try {
        // Constraints are not pre-applied: the first Newton step lands on the
        // new boundary values through the lifted rhs, so assembly always
        // starts from the smooth previous state.
        Eigen::VectorXd residual = assemble_residual(prob, state);
        double norm = residual.norm();
        const double initial_norm = norm;
        step.residual_norms.push_back(norm);
        for (int it = 0; it < settings.max_newton_iterations; ++it) {
            if (norm <= settings.newton_tolerance ||
                norm <= settings.relative_tolerance * initial_norm) {
                step.converged = true;
                return true;
            }
            const SparseSystem sys = assemble_jacobian(prob, state, &pattern);
            const Eigen::VectorXd dx = linear_solve(sys);
            add_to_state(prob, state, dx);
            residual = assemble_residual(prob, state);
            norm = residual.norm();
            step.residual_norms.push_back(norm);
            ++iteration_count;
            if (!std::isfinite(norm)) return false;
        }
        if (norm <= settings.newton_tolerance ||
            norm <= settings.relative_tolerance * initial_norm) {
            step.converged = true;
            return true;
        }
        return false;
    } catch (const ElementInversionError&) {
        return false;
    } catch (const FactorizationError&) {
        return false;
    }
}

// Advances from a state converged at `from_scale` to `to_scale`. The step is
// halved on divergence or element inversion (up to max_step_bisections
// failures in total) and grown again after successes.
inline SolutionState advance_scale(const ProblemDefinition& prob, const SolverSettings& settings,
                                   SolutionState state, double from_scale, double to_scale,
                                   const AssemblyPattern& pattern, ConvergenceRecord& record) {
    const double target = to_scale;
    double lo = from_scale;
    double increment = to_scale - from_scale;
    int bisections = 0;
    SolutionState lo_state = std::move(state);
    for (;;) {
        const double attempt = lo + increment;
        ProblemDefinition scaled = prob;
        scaled.load_scale = attempt;
        SolutionState trial = lo_state;
        ConvergenceRecord::Step step;
        const bool ok =
            newton_at_scale(scaled, settings, trial, step, pattern, record.total_newton_iterations);
        record.steps.push_back(step);
        if (ok) {
            lo = attempt;
            lo_state = std::move(trial);
            if (attempt == target) return lo_state;
            increment = std::min(2.0 * increment, target - lo);
        } else {
            ++bisections;
            if (bisections > settings.max_step_bisections)
                throw DivergenceError("Newton did not converge at load scale " +
                                          std::to_string(attempt) + " after " +
                                          std::to_string(bisections - 1) + " bisections",
                                      record);
            increment *= 0.5;
        }
    }
}

}  // namespace detail

// Solves at prob.load_scale starting from `initial`; on divergence or element
// inversion the load step is bisected (up to max_step_bisections) and
// re-advanced.
inline std::pair<SolutionState, ConvergenceRecord> newton_solve(const ProblemDefinition& prob,
                                                                const SolverSettings& settings,
                                                                SolutionState initial) {
    settings.validate();
    check_state(prob, initial);
    ConvergenceRecord record;
    const auto start = std::chrono::steady_clock::now();
    const AssemblyPattern pattern = build_pattern(prob);
    SolutionState result = detail::advance_scale(prob, settings, std::move(initial), 0.0,
                                                 prob.load_scale, pattern, record);
    record.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {std::move(result), std::move(record)};
}

// Uniform continuation schedule s_i = (i/N) * load_scale, warm-starting each
// step from the previous converged state.
inline std::pair<SolutionState, ConvergenceRecord> continuation_solve(
    const ProblemDefinition& prob, const SolverSettings& settings) {
    settings.validate();
    ConvergenceRecord record;
    const auto start = std::chrono::steady_clock::now();
    const AssemblyPattern pattern = build_pattern(prob);
    SolutionState state = zero_state(prob);
    const int n = settings.continuation_steps;
    double reached = 0.0;
    for (int i = 1; i <= n; ++i) {
        const double target = prob.load_scale * double(i) / n;
        state = detail::advance_scale(prob, settings, std::move(state), reached, target, pattern,
                                      record);
        reached = target;
    }
    record.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {std::move(state), std::move(record)};
}

}  // namespace invfem
