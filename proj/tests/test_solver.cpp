#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "invfem/driver.hpp"
#include "invfem/solver.hpp"

using namespace invfem;

namespace {

SparseSystem dense_to_system(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
    SparseSystem sys;
    sys.dof_count = static_cast<int>(a.rows());
    sys.matrix.resize(a.rows(), a.cols());
    std::vector<Eigen::Triplet<double>> triplets;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            if (a(i, j) != 0.0) triplets.emplace_back(i, j, a(i, j));
    sys.matrix.setFromTriplets(triplets.begin(), triplets.end());
    sys.rhs = b;
    return sys;
}

ProblemDefinition tet_gravity_problem(const Mesh& mesh, double g) {
    ProblemDefinition prob = make_problem(Direction::Forward, Formulation::DisplacementOnly, mesh,
                                          MaterialSpec::neo_hookean(1.0, 1.0, 1.0), 1);
    prob.dirichlet.push_back({1, {true, true, true},
                              {Expr::constant(0), Expr::constant(0), Expr::constant(0)}});
    prob.body_force = {Expr::constant(0), Expr::constant(g), Expr::constant(0)};
    return prob;
}

}  // namespace

TEST_CASE("linear solve basics", "[solver]") {
    // identity
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(4, 4);
    Eigen::VectorXd b(4);
    b << 1, -2, 3, 0.5;
    CHECK((linear_solve(dense_to_system(eye, b)) - b).norm() == 0.0);

    // indefinite 2x2 requires pivoting
    Eigen::MatrixXd swap(2, 2);
    swap << 0, 1, 1, 0;
    Eigen::VectorXd rhs(2);
    rhs << 1, 2;
    const Eigen::VectorXd x = linear_solve(dense_to_system(swap, rhs));
    CHECK(x[0] == Catch::Approx(2.0));
    CHECK(x[1] == Catch::Approx(1.0));
}

TEST_CASE("linear solve matches a dense LU oracle on random SPD systems", "[solver]") {
    std::mt19937 rng(41);
    std::normal_distribution<double> dist(0.0, 1.0);
    const int n = 50;
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = dist(rng);
    const Eigen::MatrixXd spd = m * m.transpose() + 0.5 * double(n) * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) b[i] = dist(rng);

    const Eigen::VectorXd x = linear_solve(dense_to_system(spd, b));
    const Eigen::VectorXd reference = Eigen::FullPivLU<Eigen::MatrixXd>(spd).solve(b);
    CHECK((x - reference).norm() < 1e-10 * reference.norm());
    CHECK((spd * x - b).norm() < 1e-10 * (spd.norm() * x.norm() + b.norm()));
}

TEST_CASE("singular matrix raises a factorization error", "[solver]") {
    Eigen::MatrixXd singular(2, 2);
    singular << 1, 1, 1, 1;
    Eigen::VectorXd b(2);
    b << 1, 1;
    CHECK_THROWS_AS(linear_solve(dense_to_system(singular, b)), FactorizationError);
}

TEST_CASE("zero loads converge without iterating", "[solver]") {
    const Mesh mesh = generate_unit_tetrahedron();
    const ProblemDefinition prob = tet_gravity_problem(mesh, 0.0);
    const auto [state, record] = newton_solve(prob, SolverSettings{}, zero_state(prob));
    CHECK(state.u.coeffs.norm() == 0.0);
    CHECK(record.total_newton_iterations <= 1);
    REQUIRE(record.steps.size() == 1);
    CHECK(record.steps[0].converged);
}

TEST_CASE("Newton converges with a quadratic tail on the tetrahedron", "[solver]") {
    const Mesh mesh = generate_unit_tetrahedron();
    const ProblemDefinition prob = tet_gravity_problem(mesh, -0.15);
    const auto [state, record] = newton_solve(prob, SolverSettings{}, zero_state(prob));
    REQUIRE(record.steps.size() == 1);
    const auto& norms = record.steps.back().residual_norms;
    REQUIRE(norms.size() >= 3);
    CHECK(norms.back() <= 1e-10);

    // quadratic tail on the normalized residuals: rho_{n+1} <= C rho_n^2
    const double r0 = norms.front();
    const double rho_prev = norms[norms.size() - 2] / r0;
    const double rho_last = norms.back() / r0;
    CHECK(rho_last <= 100.0 * rho_prev * rho_prev);

    // norms strictly decreasing over the final three iterations
    const std::size_t n = norms.size();
    CHECK(norms[n - 1] < norms[n - 2]);
    CHECK(norms[n - 2] < norms[n - 3]);
}

TEST_CASE("continuation with one step equals a direct Newton solve", "[solver]") {
    const Mesh mesh = generate_unit_tetrahedron();
    const ProblemDefinition prob = tet_gravity_problem(mesh, -0.12);
    SolverSettings settings;
    settings.continuation_steps = 1;
    const auto [direct, record_direct] = newton_solve(prob, settings, zero_state(prob));
    const auto [cont, record_cont] = continuation_solve(prob, settings);
    CHECK((direct.u.coeffs - cont.u.coeffs).norm() == 0.0);

    SolverSettings four = settings;
    four.continuation_steps = 4;
    const auto [state4, record4] = continuation_solve(prob, four);
    int converged_steps = 0;
    for (const auto& step : record4.steps) converged_steps += step.converged ? 1 : 0;
    CHECK(converged_steps == 4);
    CHECK((state4.u.coeffs - direct.u.coeffs).norm() < 1e-8);
}

TEST_CASE("beam solution is independent of the continuation schedule", "[solver]") {
    const Mesh mesh = generate_cylinder_mesh(0.2, 0.05, 4, 1);
    ProblemDefinition prob = make_problem(Direction::Forward, Formulation::MixedUP, mesh,
                                          MaterialSpec::mooney_rivlin(1e4, 1e4, 1e6, 1000.0, true),
                                          2);
    prob.dirichlet.push_back({1, {true, true, true},
                              {Expr::constant(0), Expr::constant(0), Expr::constant(0)}});
    prob.body_force = {Expr::constant(0), Expr::constant(-9.81), Expr::constant(0)};

    SolverSettings one;
    one.continuation_steps = 1;
    SolverSettings four;
    four.continuation_steps = 4;
    const auto [s1, r1] = continuation_solve(prob, one);
    const auto [s4, r4] = continuation_solve(prob, four);
    const double scale = std::max(1.0, s1.u.coeffs.norm());
    CHECK((s1.u.coeffs - s4.u.coeffs).norm() < 1e-8 * scale);
    CHECK(s1.u.coeffs.norm() > 1e-4);  // the load actually bends the beam
}

TEST_CASE("inverse shear with continuation is path independent", "[solver]") {
    const double k = 0.4;
    Mesh sheared = generate_box_mesh({1, 1, 1}, {2, 2, 2});
    for (auto& v : sheared.vertices) v[0] += k * v[1];

    auto solve_with_steps = [&](int steps) {
        ProblemDefinition prob = make_problem(Direction::Inverse, Formulation::DisplacementOnly,
                                              sheared,
                                              MaterialSpec::mooney_rivlin(1.0, 1.0, 1.0, 1000.0),
                                              2);
        for (int tag = 1; tag <= 6; ++tag)
            prob.dirichlet.push_back({tag, {true, true, true},
                                      {Expr::parse("-y*0.4"), Expr::constant(0), Expr::constant(0)}});
        SolverSettings settings;
        settings.continuation_steps = steps;
        return continuation_solve(prob, settings).first;
    };
    const SolutionState s1 = solve_with_steps(1);
    const SolutionState s2 = solve_with_steps(2);
    CHECK((s1.u.coeffs - s2.u.coeffs).norm() < 1e-9);
}

TEST_CASE("hopeless problems raise a divergence error with the record attached", "[solver]") {
    const Mesh mesh = generate_unit_tetrahedron();
    const ProblemDefinition prob = tet_gravity_problem(mesh, -1e6);  // absurd load
    SolverSettings settings;
    settings.max_step_bisections = 2;
    settings.max_newton_iterations = 8;
    try {
        newton_solve(prob, settings, zero_state(prob));
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(!e.record().steps.empty());
        CHECK(!e.record().steps.front().converged);
    }
}

TEST_CASE("step bisection rescues a load that plain Newton cannot take", "[solver]") {
    const Mesh mesh = generate_unit_tetrahedron();
    const ProblemDefinition prob = tet_gravity_problem(mesh, -0.45);
    SolverSettings strict;
    strict.max_newton_iterations = 50;
    strict.max_step_bisections = 8;
    const auto [state, record] = newton_solve(prob, strict, zero_state(prob));
    CHECK(record.steps.back().converged);
    CHECK(record.steps.back().residual_norms.back() <= strict.newton_tolerance);
    CHECK(state.u.coeffs.norm() > 0.01);
}
