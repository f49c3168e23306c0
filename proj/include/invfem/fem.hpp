#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "invfem/errors.hpp"
#include "invfem/mesh.hpp"
#include "invfem/tensor.hpp"

namespace invfem {

// Quadrature on the reference tetrahedron (vertices at the origin and the
// three unit points). Weights include the reference measure: they sum to 1/6.
struct QuadratureRule {
    std::vector<Vec3d> points;
    std::vector<double> weights;
    int degree = 0;
};

// Quadrature on the reference triangle; weights sum to 1/2. Used for facet
// (traction) integration.
struct FacetQuadratureRule {
    std::vector<std::array<double, 2>> points;
    std::vector<double> weights;
};

namespace detail {

inline double factorial(int n) {
    double f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

template <class Emit>
void compositions(int total, int parts, std::array<int, 4>& cur, int pos, Emit&& emit) {
    if (pos == parts - 1) {
        cur[pos] = total;
        emit(cur);
        return;
    }
    for (int v = 0; v <= total; ++v) {
        cur[pos] = v;
        compositions(total - v, parts, cur, pos + 1, emit);
    }
}

// Grundmann-Moller simplex rule of index s on the dim-simplex: exact for
// polynomials of degree 2s+1, all points strictly inside, weights summing to
// the reference volume 1/dim!.
inline void grundmann_moeller(int dim, int s, std::vector<std::array<double, 4>>& bary,
                              std::vector<double>& weights) {
    const int d = 2 * s + 1;
    for (int i = 0; i <= s; ++i) {
        const int denom = d + dim - 2 * i;
        double coef = std::pow(2.0, -2 * s) * std::pow(double(denom), d) /
                      (factorial(i) * factorial(d + dim - i));
        if (i % 2) coef = -coef;
        std::array<int, 4> beta{};
        compositions(s - i, dim + 1, beta, 0, [&](const std::array<int, 4>& b) {
            std::array<double, 4> pt{};
            for (int j = 0; j <= dim; ++j) pt[j] = double(2 * b[j] + 1) / denom;
            bary.push_back(pt);
            weights.push_back(coef);
        });
    }
}

}  // namespace detail

// Rule exact for all monomials up to `degree` (1..6). Degrees 1, 2 and 4 use
// compact tabulated rules (the degree-4 default for assembly is the 11-point
// Keast rule); the rest fall back to Grundmann-Moller.
inline QuadratureRule quadrature_tet(int degree) {
    if (degree < 1 || degree > 6) throw InvalidArgument("quadrature degree must be in 1..6");
    QuadratureRule rule;
    rule.degree = degree;
    auto push = [&](double l1, double l2, double l3, double w) {
        rule.points.push_back(Vec3d{l1, l2, l3});
        rule.weights.push_back(w);
    };
    if (degree == 1) {
        push(0.25, 0.25, 0.25, 1.0 / 6.0);
    } else if (degree == 2) {
        const double a = 0.5854101966249684544614;  // (5 + 3 sqrt 5)/20
        const double b = 0.1381966011250105151795;  // (5 - sqrt 5)/20
        push(a, b, b, 1.0 / 24.0);
        push(b, a, b, 1.0 / 24.0);
        push(b, b, a, 1.0 / 24.0);
        push(b, b, b, 1.0 / 24.0);
    } else if (degree == 4) {
        // Keast 11-point rule.
        const double wc = -74.0 / 5625.0;
        const double w1 = 343.0 / 45000.0;
        const double w2 = 28.0 / 1125.0;
        const double a1 = 11.0 / 14.0, b1 = 1.0 / 14.0;
        const double a2 = (1.0 + std::sqrt(5.0 / 14.0)) / 4.0;
        const double b2 = (1.0 - std::sqrt(5.0 / 14.0)) / 4.0;
        push(0.25, 0.25, 0.25, wc);
        // (a1,b1,b1,b1) permutations; first barycentric coordinate dropped.
        push(b1, b1, b1, w1);  // a1 in slot 0
        push(a1, b1, b1, w1);
        push(b1, a1, b1, w1);
        push(b1, b1, a1, w1);
        // (a2,a2,b2,b2) permutations.
        push(a2, b2, b2, w2);  // a2 in slots 0,1
        push(b2, a2, b2, w2);  // slots 0,2
        push(b2, b2, a2, w2);  // slots 0,3
        push(a2, a2, b2, w2);  // slots 1,2
        push(a2, b2, a2, w2);  // slots 1,3
        push(b2, a2, a2, w2);  // slots 2,3
    } else {
        const int s = (degree == 3) ? 1 : (degree == 5) ? 2 : 3;
        std::vector<std::array<double, 4>> bary;
        std::vector<double> weights;
        detail::grundmann_moeller(3, s, bary, weights);
        for (std::size_t q = 0; q < bary.size(); ++q)
            push(bary[q][1], bary[q][2], bary[q][3], weights[q]);
    }
    return rule;
}

inline FacetQuadratureRule quadrature_facet(int degree = 5) {
    const int s = std::max(0, (degree - 1) / 2 + ((degree - 1) % 2 ? 1 : 0));
    std::vector<std::array<double, 4>> bary;
    std::vector<double> weights;
    detail::grundmann_moeller(2, s, bary, weights);
    FacetQuadratureRule rule;
    for (std::size_t q = 0; q < bary.size(); ++q) {
        rule.points.push_back({bary[q][1], bary[q][2]});
        rule.weights.push_back(weights[q]);
    }
    return rule;
}

// Values and reference gradients of the Lagrange basis at given reference
// points. P2 node order: 4 vertices, then edge midpoints in the order
// (0,1),(0,2),(0,3),(1,2),(1,3),(2,3).
struct BasisTable {
    int degree = 1;
    int n_nodes = 4;
    std::vector<double> values;  // [point * n_nodes + node]
    std::vector<Vec3d> grads;    // same layout

    double value(std::size_t q, int i) const { return values[q * n_nodes + i]; }
    const Vec3d& grad(std::size_t q, int i) const { return grads[q * n_nodes + i]; }
};

inline constexpr std::array<std::array<int, 2>, 6> tet_edges = {
    {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

inline BasisTable tabulate_basis(int degree, std::span<const Vec3d> points) {
    if (degree != 1 && degree != 2) throw InvalidArgument("basis degree must be 1 or 2");
    BasisTable table;
    table.degree = degree;
    table.n_nodes = (degree == 1) ? 4 : 10;
    table.values.reserve(points.size() * table.n_nodes);
    table.grads.reserve(points.size() * table.n_nodes);
    static const std::array<Vec3d, 4> grad_l = {Vec3d{-1, -1, -1}, Vec3d{1, 0, 0},
                                                Vec3d{0, 1, 0}, Vec3d{0, 0, 1}};
    for (const auto& p : points) {
        const std::array<double, 4> l = {1.0 - p[0] - p[1] - p[2], p[0], p[1], p[2]};
        if (degree == 1) {
            for (int i = 0; i < 4; ++i) {
                table.values.push_back(l[i]);
                table.grads.push_back(grad_l[i]);
            }
        } else {
            for (int i = 0; i < 4; ++i) {
                table.values.push_back(l[i] * (2.0 * l[i] - 1.0));
                table.grads.push_back((4.0 * l[i] - 1.0) * grad_l[i]);
            }
            for (const auto& e : tet_edges) {
                table.values.push_back(4.0 * l[e[0]] * l[e[1]]);
                table.grads.push_back(4.0 * l[e[0]] * grad_l[e[1]] + 4.0 * l[e[1]] * grad_l[e[0]]);
            }
        }
    }
    return table;
}

// Triangle Lagrange basis values (for facet integration). P2 node order:
// 3 vertices, then edges (0,1),(0,2),(1,2).
inline std::vector<double> tabulate_facet_basis(int degree,
                                                std::span<const std::array<double, 2>> points) {
    std::vector<double> values;
    const int n = (degree == 1) ? 3 : 6;
    values.reserve(points.size() * n);
    for (const auto& p : points) {
        const std::array<double, 3> l = {1.0 - p[0] - p[1], p[0], p[1]};
        if (degree == 1) {
            for (int i = 0; i < 3; ++i) values.push_back(l[i]);
        } else {
            for (int i = 0; i < 3; ++i) values.push_back(l[i] * (2.0 * l[i] - 1.0));
            values.push_back(4.0 * l[0] * l[1]);
            values.push_back(4.0 * l[0] * l[2]);
            values.push_back(4.0 * l[1] * l[2]);
        }
    }
    return values;
}

// Continuous Lagrange space on a tetrahedral mesh. P2 edge nodes are keyed by
// the sorted vertex pair and numbered lexicographically, so the global
// numbering does not depend on cell order.
struct FunctionSpace {
    const Mesh* mesh = nullptr;
    int degree = 1;
    int value_dim = 1;
    int n_scalar_nodes = 0;
    std::vector<std::array<int, 10>> cell_nodes;
    std::vector<Vec3d> node_coords;
    std::map<int, std::vector<int>> boundary_nodes;  // facet tag -> scalar node ids
    // Facet nodes in facet-basis order (3 vertices [+ 3 edge nodes]),
    // aligned with mesh.boundary_facets.
    std::vector<std::array<int, 6>> facet_nodes;

    int nodes_per_cell() const { return degree == 1 ? 4 : 10; }
    int facet_node_count() const { return degree == 1 ? 3 : 6; }
    int dof_count() const { return n_scalar_nodes * value_dim; }
    int dof(int node, int comp) const { return node * value_dim + comp; }
};

inline FunctionSpace build_space(const Mesh& mesh, int degree, int value_dim) {
    if (degree != 1 && degree != 2) throw InvalidArgument("space degree must be 1 or 2");
    if (value_dim != 1 && value_dim != 3) throw InvalidArgument("value dimension must be 1 or 3");

    FunctionSpace space;
    space.mesh = &mesh;
    space.degree = degree;
    space.value_dim = value_dim;
    const int n_vertices = static_cast<int>(mesh.vertices.size());

    std::map<std::array<int, 2>, int> edge_id;
    if (degree == 2) {
        std::set<std::array<int, 2>> edges;
        for (const auto& cell : mesh.cells)
            for (const auto& e : tet_edges) {
                int a = cell[e[0]], b = cell[e[1]];
                edges.insert({std::min(a, b), std::max(a, b)});
            }
        int next = n_vertices;
        for (const auto& e : edges) edge_id[e] = next++;
        space.n_scalar_nodes = next;
    } else {
        space.n_scalar_nodes = n_vertices;
    }

    space.node_coords.resize(space.n_scalar_nodes);
    for (int v = 0; v < n_vertices; ++v) space.node_coords[v] = mesh.vertices[v];
    for (const auto& [e, id] : edge_id)
        space.node_coords[id] = 0.5 * (mesh.vertices[e[0]] + mesh.vertices[e[1]]);

    space.cell_nodes.resize(mesh.cells.size());
    for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
        const auto& cell = mesh.cells[c];
        auto& nodes = space.cell_nodes[c];
        nodes.fill(-1);
        for (int i = 0; i < 4; ++i) nodes[i] = cell[i];
        if (degree == 2)
            for (int e = 0; e < 6; ++e) {
                int a = cell[tet_edges[e][0]], b = cell[tet_edges[e][1]];
                nodes[4 + e] = edge_id.at({std::min(a, b), std::max(a, b)});
            }
    }

    space.facet_nodes.resize(mesh.boundary_facets.size());
    std::map<int, std::set<int>> tag_nodes;
    for (std::size_t f = 0; f < mesh.boundary_facets.size(); ++f) {
        const auto& facet = mesh.boundary_facets[f];
        auto& nodes = space.facet_nodes[f];
        nodes.fill(-1);
        for (int i = 0; i < 3; ++i) nodes[i] = facet.vertices[i];
        if (degree == 2) {
            static const std::array<std::array<int, 2>, 3> facet_edges = {{{0, 1}, {0, 2}, {1, 2}}};
            for (int e = 0; e < 3; ++e) {
                int a = facet.vertices[facet_edges[e][0]], b = facet.vertices[facet_edges[e][1]];
                nodes[3 + e] = edge_id.at({std::min(a, b), std::max(a, b)});
            }
        }
        auto& set = tag_nodes[facet.tag];
        for (int i = 0; i < space.facet_node_count(); ++i) set.insert(nodes[i]);
    }
    for (auto& [tag, set] : tag_nodes)
        space.boundary_nodes[tag] = std::vector<int>(set.begin(), set.end());
    return space;
}

struct NodalField {
    const FunctionSpace* space = nullptr;
    Eigen::VectorXd coeffs;
};

inline NodalField zero_field(const FunctionSpace& space) {
    return {&space, Eigen::VectorXd::Zero(space.dof_count())};
}

// Nodal interpolation: fn(point) returns one value per component.
template <class Fn>
NodalField interpolate(const FunctionSpace& space, Fn&& fn) {
    NodalField field = zero_field(space);
    for (int n = 0; n < space.n_scalar_nodes; ++n) {
        if constexpr (std::is_convertible_v<std::invoke_result_t<Fn, Vec3d>, double>) {
            field.coeffs[space.dof(n, 0)] = fn(space.node_coords[n]);
        } else {
            const Vec3d v = fn(space.node_coords[n]);
            for (int c = 0; c < space.value_dim; ++c) field.coeffs[space.dof(n, c)] = v[c];
        }
    }
    return field;
}

// Vertex subset of a field's coefficients, for the VTK writer.
inline VtkPointField vtk_point_field(const std::string& name, const NodalField& field) {
    const auto& space = *field.space;
    const std::size_t nv = space.mesh->vertices.size();
    VtkPointField out{name, space.value_dim, {}};
    out.values.reserve(nv * space.value_dim);
    for (std::size_t v = 0; v < nv; ++v)
        for (int c = 0; c < space.value_dim; ++c)
            out.values.push_back(field.coeffs[space.dof(static_cast<int>(v), c)]);
    return out;
}

inline void write_vtk(const Mesh& mesh, const std::vector<std::pair<std::string, const NodalField*>>& fields,
                      const std::string& path) {
    std::vector<VtkPointField> point_fields;
    for (const auto& [name, field] : fields) point_fields.push_back(vtk_point_field(name, *field));
    write_vtk(mesh, point_fields, path);
}

// Evaluates a field inside a cell at a reference point (tests and utilities).
inline Eigen::VectorXd evaluate_in_cell(const NodalField& field, std::size_t cell, const Vec3d& ref) {
    const auto& space = *field.space;
    const std::array<Vec3d, 1> pts = {ref};
    const BasisTable table = tabulate_basis(space.degree, pts);
    Eigen::VectorXd value = Eigen::VectorXd::Zero(space.value_dim);
    for (int i = 0; i < space.nodes_per_cell(); ++i)
        for (int c = 0; c < space.value_dim; ++c)
            value[c] += table.value(0, i) * field.coeffs[space.dof(space.cell_nodes[cell][i], c)];
    return value;
}

}  // namespace invfem
