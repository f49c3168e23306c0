#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "invfem/fem.hpp"

using namespace invfem;

namespace {

// Exact monomial integral over the reference tetrahedron:
// int x^a y^b z^c dV = a! b! c! / (a+b+c+3)!
double exact_monomial_integral(int a, int b, int c) {
    auto fact = [](int n) {
        double f = 1;
        for (int i = 2; i <= n; ++i) f *= i;
        return f;
    };
    return fact(a) * fact(b) * fact(c) / fact(a + b + c + 3);
}

Vec3d random_reference_point(std::mt19937& rng) {
    // rejection sampling inside the reference tet
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (;;) {
        const double x = dist(rng), y = dist(rng), z = dist(rng);
        if (x + y + z <= 1.0) return {x, y, z};
    }
}

}  // namespace

TEST_CASE("quadrature basics", "[fem]") {
    const QuadratureRule centroid = quadrature_tet(1);
    REQUIRE(centroid.points.size() == 1);
    CHECK(centroid.points[0][0] == Catch::Approx(0.25));
    CHECK(centroid.weights[0] == Catch::Approx(1.0 / 6.0).epsilon(1e-15));

    for (int degree = 2; degree <= 6; ++degree) {
        const QuadratureRule rule = quadrature_tet(degree);
        double x2 = 0;
        for (std::size_t q = 0; q < rule.points.size(); ++q)
            x2 += rule.weights[q] * rule.points[q][0] * rule.points[q][0];
        CHECK(std::abs(x2 - 1.0 / 60.0) < 1e-14);
    }

    CHECK_THROWS_AS(quadrature_tet(0), InvalidArgument);
    CHECK_THROWS_AS(quadrature_tet(7), InvalidArgument);
}

TEST_CASE("quadrature exactness for the full monomial basis", "[fem]") {
    for (int degree = 1; degree <= 6; ++degree) {
        const QuadratureRule rule = quadrature_tet(degree);

        double total = 0;
        for (double w : rule.weights) total += w;
        CHECK(std::abs(total - 1.0 / 6.0) < 1e-15);

        for (const auto& p : rule.points) {
            CHECK(p[0] >= 0.0);
            CHECK(p[1] >= 0.0);
            CHECK(p[2] >= 0.0);
            CHECK(p[0] + p[1] + p[2] <= 1.0 + 1e-14);
        }

        for (int a = 0; a + 0 <= degree; ++a)
            for (int b = 0; a + b <= degree; ++b)
                for (int c = 0; a + b + c <= degree; ++c) {
                    double approx = 0;
                    for (std::size_t q = 0; q < rule.points.size(); ++q)
                        approx += rule.weights[q] * std::pow(rule.points[q][0], a) *
                                  std::pow(rule.points[q][1], b) * std::pow(rule.points[q][2], c);
                    const double exact = exact_monomial_integral(a, b, c);
                    REQUIRE(std::abs(approx - exact) < 1e-13 * std::max(1.0, std::abs(exact)));
                }
    }
}

TEST_CASE("facet quadrature integrates over the reference triangle", "[fem]") {
    const FacetQuadratureRule rule = quadrature_facet(5);
    double total = 0, rs = 0;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
        total += rule.weights[q];
        rs += rule.weights[q] * rule.points[q][0] * rule.points[q][1];
    }
    CHECK(std::abs(total - 0.5) < 1e-14);
    CHECK(std::abs(rs - 1.0 / 24.0) < 1e-14);  // int r s over the triangle
}

TEST_CASE("basis values and gradients", "[fem]") {
    const std::array<Vec3d, 1> centroid = {Vec3d{0.25, 0.25, 0.25}};
    const BasisTable p1 = tabulate_basis(1, centroid);
    for (int i = 0; i < 4; ++i) CHECK(p1.value(0, i) == Catch::Approx(0.25));

    // partition of unity and zero gradient sum at random points, both degrees
    std::mt19937 rng(3);
    std::vector<Vec3d> points;
    for (int i = 0; i < 100; ++i) points.push_back(random_reference_point(rng));
    for (int degree : {1, 2}) {
        const BasisTable table = tabulate_basis(degree, points);
        for (std::size_t q = 0; q < points.size(); ++q) {
            double sum = 0;
            Vec3d gsum{};
            for (int i = 0; i < table.n_nodes; ++i) {
                sum += table.value(q, i);
                gsum += table.grad(q, i);
            }
            REQUIRE(std::abs(sum - 1.0) < 1e-13);
            REQUIRE(norm(gsum) < 1e-12);
        }
    }
}

TEST_CASE("basis functions are nodal", "[fem]") {
    std::vector<Vec3d> nodes = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    for (const auto& e : tet_edges)
        nodes.push_back(0.5 * (nodes[e[0]] + nodes[e[1]]));
    const BasisTable table = tabulate_basis(2, nodes);
    for (std::size_t q = 0; q < nodes.size(); ++q)
        for (int i = 0; i < 10; ++i)
            REQUIRE(table.value(q, i) == Catch::Approx(q == std::size_t(i) ? 1.0 : 0.0).margin(1e-14));
}

TEST_CASE("P2 reproduces quadratics exactly", "[fem]") {
    auto quadratic = [](const Vec3d& p) { return p[0] * p[0] + p[1] * p[2]; };

    std::vector<Vec3d> nodes = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    for (const auto& e : tet_edges)
        nodes.push_back(0.5 * (nodes[e[0]] + nodes[e[1]]));
    std::array<double, 10> coeffs{};
    for (int i = 0; i < 10; ++i) coeffs[i] = quadratic(nodes[i]);

    std::mt19937 rng(4);
    std::vector<Vec3d> points;
    for (int i = 0; i < 20; ++i) points.push_back(random_reference_point(rng));
    const BasisTable table = tabulate_basis(2, points);
    for (std::size_t q = 0; q < points.size(); ++q) {
        double value = 0;
        for (int i = 0; i < 10; ++i) value += table.value(q, i) * coeffs[i];
        REQUIRE(std::abs(value - quadratic(points[q])) < 1e-13);
    }
}

TEST_CASE("build_space DOF counts", "[fem]") {
    const Mesh tet = generate_unit_tetrahedron();
    CHECK(build_space(tet, 1, 3).dof_count() == 12);
    CHECK(build_space(tet, 2, 3).dof_count() == 30);  // 4 vertices + 6 edges, 3 components

    const Mesh box = generate_box_mesh({1, 1, 1}, {1, 1, 1});
    CHECK(build_space(box, 1, 1).dof_count() == 8);

    CHECK_THROWS_AS(build_space(tet, 3, 1), InvalidArgument);
}

TEST_CASE("boundary node sets contain the tagged facet nodes", "[fem]") {
    const Mesh mesh = generate_box_mesh({1, 1, 1}, {2, 2, 2});
    const FunctionSpace space = build_space(mesh, 2, 3);
    for (std::size_t f = 0; f < mesh.boundary_facets.size(); ++f) {
        const auto& nodes = space.boundary_nodes.at(mesh.boundary_facets[f].tag);
        for (int i = 0; i < space.facet_node_count(); ++i) {
            const int node = space.facet_nodes[f][i];
            REQUIRE(std::binary_search(nodes.begin(), nodes.end(), node));
        }
    }
}

TEST_CASE("edge numbering is independent of cell order", "[fem]") {
    Mesh mesh = generate_box_mesh({1, 1, 1}, {2, 1, 1});
    const FunctionSpace a = build_space(mesh, 2, 1);
    Mesh permuted = mesh;
    std::reverse(permuted.cells.begin(), permuted.cells.end());
    const FunctionSpace b = build_space(permuted, 2, 1);
    REQUIRE(a.n_scalar_nodes == b.n_scalar_nodes);
    for (int n = 0; n < a.n_scalar_nodes; ++n)
        for (int c = 0; c < 3; ++c)
            REQUIRE(a.node_coords[n][c] == b.node_coords[n][c]);
}

TEST_CASE("interpolation and evaluation round trip", "[fem]") {
    const Mesh mesh = generate_box_mesh({1, 1, 1}, {1, 1, 1});
    const FunctionSpace space = build_space(mesh, 2, 3);
    const NodalField field = interpolate(space, [](const Vec3d& p) {
        return Vec3d{p[0] * p[0], p[1] * p[2], 1.0 + p[2]};
    });
    std::mt19937 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t cell = std::uniform_int_distribution<std::size_t>(0, 5)(rng);
        const Vec3d ref = random_reference_point(rng);
        // physical location of the reference point
        const auto& tet = mesh.cells[cell];
        Vec3d x = mesh.vertices[tet[0]];
        for (int c = 0; c < 3; ++c) {
            const Vec3d e = mesh.vertices[tet[c + 1]] - mesh.vertices[tet[0]];
            x += ref[c] * e;
        }
        const Eigen::VectorXd value = evaluate_in_cell(field, cell, ref);
        REQUIRE(value[0] == Catch::Approx(x[0] * x[0]).margin(1e-12));
        REQUIRE(value[1] == Catch::Approx(x[1] * x[2]).margin(1e-12));
        REQUIRE(value[2] == Catch::Approx(1.0 + x[2]).margin(1e-12));
    }
}
