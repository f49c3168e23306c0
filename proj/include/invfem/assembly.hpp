#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <array>
#include <atomic>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "invfem/dual.hpp"
#include "invfem/errors.hpp"
#include "invfem/expr.hpp"
#include "invfem/fem.hpp"
#include "invfem/materials.hpp"
#include "invfem/mesh.hpp"
#include "invfem/tensor.hpp"

// Residual and consistent Jacobian of the weak form in either direction.
//
// Forward (input mesh is the reference configuration):
//   R(u)  = int P : grad0(eta) dV  -  s * (int rho0 b . eta dV + int t0 . eta dA)
// Inverse (input mesh is the deformed configuration):
//   R(u') = int sigma : grad(eta) dV - s * (int rho b . eta dV + int t . eta dA)
// with F = (grad u' + I)^-1, sigma = J^-1 P F^T and rho = rho0 / J (mass
// conservation). Mixed u-p adds the pressure equation d(psi)/dp weighted by
// the pressure test functions.
//
// Both directions are linearized through one dual-number evaluation per
// quadrature point. Forward seeds psi(G + I, p) directly. Inverse seeds the
// scalar W(H, p) = det(H) psi(H^-1, p), evaluated with dual arithmetic
// through the matrix inverse; the Cauchy stress and its derivatives follow
// from the identities
//   sigma        = W I - H^T (dW/dH)
//   d(psi)/dp    = (1/det H) dW/dp
// which the consistent-Jacobian acceptance test checks against finite
// differences for every material x direction x formulation combination.

namespace invfem {

enum class Direction { Forward, Inverse };
enum class Formulation { DisplacementOnly, MixedUP };

struct DirichletSpec {
    int tag = 0;
    std::array<bool, 3> components{true, true, true};
    std::array<Expr, 3> exprs{};
};

struct TractionSpec {
    int tag = 0;
    std::array<Expr, 3> exprs{};
};

struct ProblemDefinition {
    Direction direction = Direction::Forward;
    Formulation formulation = Formulation::DisplacementOnly;
    const Mesh* mesh = nullptr;
    std::shared_ptr<const FunctionSpace> displacement_space;
    std::shared_ptr<const FunctionSpace> pressure_space;  // MixedUP only
    MaterialSpec material;
    std::vector<DirichletSpec> dirichlet;
    std::vector<TractionSpec> tractions;
    std::array<Expr, 3> body_force{};  // acceleration field (m/s^2)
    double load_scale = 1.0;
    int quadrature_degree = 4;

    bool mixed() const { return formulation == Formulation::MixedUP; }
    int displacement_dofs() const { return displacement_space->dof_count(); }
    int pressure_dofs() const { return mixed() ? pressure_space->dof_count() : 0; }
    int total_dofs() const { return displacement_dofs() + pressure_dofs(); }
};

// Builds the spaces and checks the structural invariants (inf-sup pairing,
// referenced facet tags, material/formulation consistency).
inline ProblemDefinition make_problem(Direction direction, Formulation formulation,
                                      const Mesh& mesh, const MaterialSpec& material,
                                      int displacement_degree = 2) {
    ProblemDefinition prob;
    prob.direction = direction;
    prob.formulation = formulation;
    prob.mesh = &mesh;
    prob.material = material;
    material.validate();
    if (formulation == Formulation::MixedUP) {
        if (displacement_degree != 2)
            throw InvalidArgument("mixed u-p requires P2 displacement (inf-sup pairing)");
        if (!material.mixed())
            throw InvalidArgument("mixed formulation requires a mixed material kind");
        prob.pressure_space = std::make_shared<FunctionSpace>(build_space(mesh, 1, 1));
    } else if (material.mixed()) {
        throw InvalidArgument("mixed material kind requires the mixed formulation");
    }
    prob.displacement_space =
        std::make_shared<FunctionSpace>(build_space(mesh, displacement_degree, 3));
    return prob;
}

inline void check_problem_tags(const ProblemDefinition& prob) {
    const auto& known = prob.displacement_space->boundary_nodes;
    for (const auto& d : prob.dirichlet)
        if (known.find(d.tag) == known.end())
            throw InvalidArgument("dirichlet tag " + std::to_string(d.tag) + " not present in mesh");
    for (const auto& t : prob.tractions)
        if (known.find(t.tag) == known.end())
            throw InvalidArgument("traction tag " + std::to_string(t.tag) + " not present in mesh");
}

struct SolutionState {
    NodalField u;
    std::optional<NodalField> p;
};

inline SolutionState zero_state(const ProblemDefinition& prob) {
    SolutionState state{zero_field(*prob.displacement_space), std::nullopt};
    if (prob.mixed()) state.p = zero_field(*prob.pressure_space);
    return state;
}

inline void check_state(const ProblemDefinition& prob, const SolutionState& state) {
    if (state.u.space != prob.displacement_space.get() ||
        state.u.coeffs.size() != prob.displacement_dofs())
        throw InvalidArgument("displacement field does not match the problem space");
    if (prob.mixed() &&
        (!state.p || state.p->space != prob.pressure_space.get() ||
         state.p->coeffs.size() != prob.pressure_dofs()))
        throw InvalidArgument("pressure field does not match the problem space");
}

inline Eigen::VectorXd pack_state(const ProblemDefinition& prob, const SolutionState& state) {
    Eigen::VectorXd x(prob.total_dofs());
    x.head(prob.displacement_dofs()) = state.u.coeffs;
    if (prob.mixed()) x.tail(prob.pressure_dofs()) = state.p->coeffs;
    return x;
}

inline void add_to_state(const ProblemDefinition& prob, SolutionState& state,
                         const Eigen::VectorXd& dx) {
    state.u.coeffs += dx.head(prob.displacement_dofs());
    if (prob.mixed()) state.p->coeffs += dx.tail(prob.pressure_dofs());
}

// Sparse matrix plus right-hand side. The matrix is compressed sparse row
// (Eigen row-major); for assembled systems rhs = -residual.
struct SparseSystem {
    Eigen::SparseMatrix<double, Eigen::RowMajor> matrix;
    Eigen::VectorXd rhs;
    int dof_count = 0;
};

namespace detail {

inline int assembly_thread_count() {
    if (const char* env = std::getenv("INVFEM_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

struct ConstraintSet {
    std::vector<char> constrained;  // over all dofs (u then p)
    std::vector<double> values;
};

inline ConstraintSet build_constraints(const ProblemDefinition& prob) {
    check_problem_tags(prob);
    const auto& space = *prob.displacement_space;
    ConstraintSet set;
    set.constrained.assign(prob.total_dofs(), 0);
    set.values.assign(prob.total_dofs(), 0.0);
    for (const auto& spec : prob.dirichlet) {
        const auto& nodes = space.boundary_nodes.at(spec.tag);
        for (int node : nodes)
            for (int c = 0; c < 3; ++c) {
                if (!spec.components[c]) continue;
                const int dof = space.dof(node, c);
                set.constrained[dof] = 1;
                set.values[dof] = prob.load_scale * spec.exprs[c].evaluate(space.node_coords[node]);
            }
    }
    return set;
}

// Everything precomputed once per assembly sweep.
struct AssemblyContext {
    const ProblemDefinition* prob;
    QuadratureRule rule;
    BasisTable basis_u;
    BasisTable basis_p;  // P1 values at the same points (mixed only)
    ConstraintSet constraints;
    int nu = 4;           // displacement nodes per cell
    int ndof_u_cell = 12;
    int np = 0;           // pressure nodes per cell
    int ne = 12;          // total element dofs
    bool has_body_force = false;

    explicit AssemblyContext(const ProblemDefinition& p) : prob(&p) {
        rule = quadrature_tet(p.quadrature_degree);
        basis_u = tabulate_basis(p.displacement_space->degree, rule.points);
        if (p.mixed()) basis_p = tabulate_basis(1, rule.points);
        constraints = build_constraints(p);
        nu = p.displacement_space->nodes_per_cell();
        ndof_u_cell = 3 * nu;
        np = p.mixed() ? 4 : 0;
        ne = ndof_u_cell + np;
        for (const auto& e : p.body_force)
            if (!e.is_constant_zero()) has_body_force = true;
    }

    int global_dof(std::size_t cell, int local) const {
        if (local < ndof_u_cell) {
            const int node = prob->displacement_space->cell_nodes[cell][local / 3];
            return prob->displacement_space->dof(node, local % 3);
        }
        const int node = prob->pressure_space->cell_nodes[cell][local - ndof_u_cell];
        return prob->displacement_dofs() + node;
    }
};

// Per-quadrature-point linearization data shared by both directions.
struct QpData {
    Mat3d S;                    // P (forward) or sigma (inverse)
    double cp = 0;              // d psi / dp
    std::array<double, 81> D9;  // dS/dG, [(3c+b)*9 + (3e+f)]
    Mat3d Sp;                   // dS/dp
    std::array<double, 9> cpG;  // d cp / dG
    double cpp = 0;             // d cp / dp
    double det_h = 1.0;         // inverse direction: det(grad u' + I)
    Mat3d F_inv_dir;            // inverse direction: F = H^-1
};

template <class D>
Mat3<D> seeded_plus_identity(const Mat3d& G) {
    Mat3<D> A;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            A(r, c) = D::seeded(G(r, c) + (r == c ? 1.0 : 0.0), 3 * r + c);
    return A;
}

template <bool WithJacobian>
void linearize_qp(const ProblemDefinition& prob, const Mat3d& G, double p_val, long cell,
                  QpData& out) {
    using D = std::conditional_t<WithJacobian, Dual2<10>, Dual1<10>>;
    const bool mixed = prob.mixed();

    if (prob.direction == Direction::Forward) {
        const Mat3d F = G + Mat3d::identity();
        const double J = det(F);
        if (J <= 1e-10) throw ElementInversionError(J, cell);
        const Mat3<D> Fd = seeded_plus_identity<D>(G);
        const D pd = mixed ? D::seeded(p_val, 9) : D(0.0);
        const D psi = energy_density_t<D>(prob.material, Fd, mixed ? &pd : nullptr);
        for (int i = 0; i < 9; ++i) out.S.m[i] = psi.g[i];
        out.cp = psi.g[9];
        if constexpr (WithJacobian) {
            for (int i = 0; i < 9; ++i)
                for (int j = 0; j < 9; ++j) out.D9[i * 9 + j] = psi.hess(i, j);
            for (int i = 0; i < 9; ++i) out.Sp.m[i] = psi.hess(i, 9);
            for (int j = 0; j < 9; ++j) out.cpG[j] = psi.hess(9, j);
            out.cpp = psi.hess(9, 9);
        }
        return;
    }

    // Inverse direction: W(H, p) = det(H) psi(H^-1, p).
    const Mat3d H = G + Mat3d::identity();
    const double det_h = det(H);
    if (det_h <= 1e-10) throw ElementInversionError(det_h, cell);
    out.det_h = det_h;
    out.F_inv_dir = inverse(H);

    const Mat3<D> Hd = seeded_plus_identity<D>(G);
    const Mat3<D> Fd = inverse(Hd);
    const D pd = mixed ? D::seeded(p_val, 9) : D(0.0);
    const D W = det(Hd) * energy_density_t<D>(prob.material, Fd, mixed ? &pd : nullptr);

    const double W0 = W.v;
    // sigma = W I - H^T g with g = dW/dH.
    for (int c = 0; c < 3; ++c)
        for (int b = 0; b < 3; ++b) {
            double s = (c == b) ? W0 : 0.0;
            for (int a = 0; a < 3; ++a) s -= H(a, c) * W.g[3 * a + b];
            out.S(c, b) = s;
        }
    const double inv_det_h = 1.0 / det_h;
    out.cp = inv_det_h * W.g[9];

    if constexpr (WithJacobian) {
        // d sigma_cb / dH_ef = g_ef d_cb - d_cf g_eb - sum_a H_ac K[(ab),(ef)]
        for (int c = 0; c < 3; ++c)
            for (int b = 0; b < 3; ++b)
                for (int e = 0; e < 3; ++e)
                    for (int f = 0; f < 3; ++f) {
                        double v = (c == b) ? W.g[3 * e + f] : 0.0;
                        if (c == f) v -= W.g[3 * e + b];
                        for (int a = 0; a < 3; ++a)
                            v -= H(a, c) * W.hess(3 * a + b, 3 * e + f);
                        out.D9[(3 * c + b) * 9 + 3 * e + f] = v;
                    }
        for (int c = 0; c < 3; ++c)
            for (int b = 0; b < 3; ++b) {
                double v = (c == b) ? W.g[9] : 0.0;
                for (int a = 0; a < 3; ++a) v -= H(a, c) * W.hess(3 * a + b, 9);
                out.Sp(c, b) = v;
            }
        for (int e = 0; e < 3; ++e)
            for (int f = 0; f < 3; ++f)
                out.cpG[3 * e + f] = inv_det_h * (W.hess(9, 3 * e + f) -
                                                  out.F_inv_dir(f, e) * W.g[9]);
        out.cpp = inv_det_h * W.hess(9, 9);
    }
}

// Dense element contribution: residual r (ne) and, when requested, the
// element matrix K (ne x ne, row-major).
template <bool WithJacobian>
void cell_contribution(const AssemblyContext& ctx, std::size_t cell, const SolutionState& state,
                       std::vector<double>& r, std::vector<double>& K) {
    const ProblemDefinition& prob = *ctx.prob;
    const FunctionSpace& su = *prob.displacement_space;
    const Mesh& mesh = *prob.mesh;
    const auto& tet = mesh.cells[cell];

    const Vec3d v0 = mesh.vertices[tet[0]];
    const Mat3d Jg = [&] {
        Mat3d m;
        for (int c = 0; c < 3; ++c) {
            const Vec3d e = mesh.vertices[tet[c + 1]] - v0;
            for (int ral = 0; ral < 3; ++ral) m(ral, c) = e[ral];
        }
        return m;
    }();
    const double det_jg = det(Jg);
    const Mat3d jg_inv_t = transpose(inverse(Jg));

    const int nu = ctx.nu, np = ctx.np, ne = ctx.ne;
    r.assign(ne, 0.0);
    if constexpr (WithJacobian) K.assign(std::size_t(ne) * ne, 0.0);

    std::array<double, 30> coeff_u{};
    for (int i = 0; i < nu; ++i)
        for (int c = 0; c < 3; ++c)
            coeff_u[3 * i + c] = state.u.coeffs[su.dof(su.cell_nodes[cell][i], c)];
    std::array<double, 4> coeff_p{};
    if (np)
        for (int a = 0; a < np; ++a)
            coeff_p[a] = state.p->coeffs[prob.pressure_space->cell_nodes[cell][a]];

    std::array<Vec3d, 30> gp{};  // physical gradients at one point
    QpData qp;

    for (std::size_t q = 0; q < ctx.rule.points.size(); ++q) {
        const double w = ctx.rule.weights[q] * det_jg;
        for (int i = 0; i < nu; ++i) gp[i] = jg_inv_t * ctx.basis_u.grad(q, i);

        Mat3d G;
        for (int i = 0; i < nu; ++i)
            for (int c = 0; c < 3; ++c)
                for (int d = 0; d < 3; ++d) G(c, d) += coeff_u[3 * i + c] * gp[i][d];
        double p_val = 0.0;
        if (np)
            for (int a = 0; a < np; ++a) p_val += coeff_p[a] * ctx.basis_p.value(q, a);

        linearize_qp<WithJacobian>(prob, G, p_val, static_cast<long>(cell), qp);

        for (int i = 0; i < nu; ++i)
            for (int c = 0; c < 3; ++c) {
                double s = qp.S(c, 0) * gp[i][0] + qp.S(c, 1) * gp[i][1] + qp.S(c, 2) * gp[i][2];
                r[3 * i + c] += w * s;
            }
        if (np)
            for (int a = 0; a < np; ++a)
                r[3 * nu + a] += w * qp.cp * ctx.basis_p.value(q, a);

        if constexpr (WithJacobian) {
            for (int i = 0; i < nu; ++i)
                for (int c = 0; c < 3; ++c) {
                    double* krow = &K[std::size_t(3 * i + c) * ne];
                    for (int j = 0; j < nu; ++j)
                        for (int e = 0; e < 3; ++e) {
                            double v = 0;
                            for (int b = 0; b < 3; ++b) {
                                const double gib = gp[i][b];
                                const double* drow = &qp.D9[(3 * c + b) * 9 + 3 * e];
                                v += gib * (drow[0] * gp[j][0] + drow[1] * gp[j][1] +
                                            drow[2] * gp[j][2]);
                            }
                            krow[3 * j + e] += w * v;
                        }
                    if (np) {
                        const double sp =
                            qp.Sp(c, 0) * gp[i][0] + qp.Sp(c, 1) * gp[i][1] + qp.Sp(c, 2) * gp[i][2];
                        for (int a = 0; a < np; ++a)
                            krow[3 * nu + a] += w * sp * ctx.basis_p.value(q, a);
                    }
                }
            if (np)
                for (int a = 0; a < np; ++a) {
                    double* krow = &K[std::size_t(3 * nu + a) * ne];
                    const double pa = ctx.basis_p.value(q, a);
                    for (int j = 0; j < nu; ++j)
                        for (int e = 0; e < 3; ++e) {
                            const double v = qp.cpG[3 * e] * gp[j][0] + qp.cpG[3 * e + 1] * gp[j][1] +
                                             qp.cpG[3 * e + 2] * gp[j][2];
                            krow[3 * j + e] += w * pa * v;
                        }
                    for (int b = 0; b < np; ++b)
                        krow[3 * nu + b] += w * qp.cpp * pa * ctx.basis_p.value(q, b);
                }
        }

        if (ctx.has_body_force) {
            const Vec3d xq = v0 + Jg * ctx.rule.points[q];
            Vec3d b;
            for (int c = 0; c < 3; ++c) b[c] = prob.body_force[c].evaluate(xq);
            const double density_factor =
                prob.direction == Direction::Forward ? 1.0 : qp.det_h;  // rho = rho0 / J
            const double scale = prob.load_scale * prob.material.rho0 * density_factor;
            for (int i = 0; i < nu; ++i) {
                const double phi = ctx.basis_u.value(q, i);
                for (int c = 0; c < 3; ++c) r[3 * i + c] -= w * scale * b[c] * phi;
            }
            if constexpr (WithJacobian) {
                if (prob.direction == Direction::Inverse) {
                    // d(det H)/dG_ef = det(H) F_fe
                    for (int i = 0; i < nu; ++i) {
                        const double phi = ctx.basis_u.value(q, i);
                        for (int c = 0; c < 3; ++c) {
                            double* krow = &K[std::size_t(3 * i + c) * ne];
                            const double factor =
                                w * prob.load_scale * prob.material.rho0 * b[c] * phi * qp.det_h;
                            for (int j = 0; j < nu; ++j)
                                for (int e = 0; e < 3; ++e) {
                                    const double v = qp.F_inv_dir(0, e) * gp[j][0] +
                                                     qp.F_inv_dir(1, e) * gp[j][1] +
                                                     qp.F_inv_dir(2, e) * gp[j][2];
                                    krow[3 * j + e] -= factor * v;
                                }
                        }
                    }
                }
            }
        }
    }
}

// Traction terms are state-independent: they only enter the residual.
inline void accumulate_tractions(const ProblemDefinition& prob, Eigen::VectorXd& residual) {
    if (prob.tractions.empty()) return;
    const FunctionSpace& su = *prob.displacement_space;
    const Mesh& mesh = *prob.mesh;
    const FacetQuadratureRule rule = quadrature_facet(5);
    const std::vector<double> basis = tabulate_facet_basis(su.degree, rule.points);
    const int nf = su.facet_node_count();

    for (const auto& spec : prob.tractions) {
        for (std::size_t fi = 0; fi < mesh.boundary_facets.size(); ++fi) {
            const auto& facet = mesh.boundary_facets[fi];
            if (facet.tag != spec.tag) continue;
            const Vec3d p0 = mesh.vertices[facet.vertices[0]];
            const Vec3d e1 = mesh.vertices[facet.vertices[1]] - p0;
            const Vec3d e2 = mesh.vertices[facet.vertices[2]] - p0;
            const double area2 = norm(cross(e1, e2));
            for (std::size_t q = 0; q < rule.points.size(); ++q) {
                const Vec3d x = p0 + rule.points[q][0] * e1 + rule.points[q][1] * e2;
                Vec3d t;
                for (int c = 0; c < 3; ++c)
                    t[c] = prob.load_scale * spec.exprs[c].evaluate(x);
                const double w = rule.weights[q] * area2;
                for (int i = 0; i < nf; ++i) {
                    const double phi = basis[q * nf + i];
                    const int node = su.facet_nodes[fi][i];
                    for (int c = 0; c < 3; ++c) residual[su.dof(node, c)] -= w * t[c] * phi;
                }
            }
        }
    }
}

// Deterministic parallel sweep: cells are processed in fixed-size blocks,
// computed in parallel and scattered serially in block order, so results are
// bit-identical for any thread count.
template <class CellFn, class ScatterFn>
void blocked_cell_sweep(std::size_t n_cells, CellFn&& compute, ScatterFn&& scatter) {
    constexpr std::size_t block = 64;
    const std::size_t n_blocks = (n_cells + block - 1) / block;
    const int threads = std::min<int>(assembly_thread_count(), static_cast<int>(n_blocks));

    if (threads <= 1) {
        for (std::size_t c = 0; c < n_cells; ++c) {
            compute(c, 0);
            scatter(c, 0);
        }
        return;
    }

    const std::size_t wave = static_cast<std::size_t>(threads) * 4;
    std::exception_ptr error;
    std::mutex error_mutex;
    for (std::size_t wave_begin = 0; wave_begin < n_blocks; wave_begin += wave) {
        const std::size_t wave_end = std::min(n_blocks, wave_begin + wave);
        std::atomic<std::size_t> next{wave_begin};
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t b = next.fetch_add(1);
                    if (b >= wave_end) break;
                    const std::size_t begin = b * block, end = std::min(n_cells, begin + block);
                    try {
                        for (std::size_t c = begin; c < end; ++c)
                            compute(c, static_cast<int>(b - wave_begin));
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(error_mutex);
                        if (!error) error = std::current_exception();
                        break;
                    }
                }
            });
        for (auto& th : pool) th.join();
        if (error) std::rethrow_exception(error);
        for (std::size_t b = wave_begin; b < wave_end; ++b) {
            const std::size_t begin = b * block, end = std::min(n_cells, begin + block);
            for (std::size_t c = begin; c < end; ++c) scatter(c, static_cast<int>(b - wave_begin));
        }
    }
}

}  // namespace detail

inline Eigen::VectorXd assemble_residual(const ProblemDefinition& prob,
                                         const SolutionState& state) {
    check_state(prob, state);
    const detail::AssemblyContext ctx(prob);
    const std::size_t n_cells = prob.mesh->cells.size();
    Eigen::VectorXd residual = Eigen::VectorXd::Zero(prob.total_dofs());

    // Per-cell buffers for the whole sweep: residuals are small (ne doubles).
    std::vector<std::vector<double>> cell_r(n_cells);
    detail::blocked_cell_sweep(
        n_cells,
        [&](std::size_t c, int) {
            std::vector<double> k;
            detail::cell_contribution<false>(ctx, c, state, cell_r[c], k);
        },
        [&](std::size_t c, int) {
            for (int l = 0; l < ctx.ne; ++l) residual[ctx.global_dof(c, l)] += cell_r[c][l];
        });

    detail::accumulate_tractions(prob, residual);

    const Eigen::VectorXd x = pack_state(prob, state);
    for (int d = 0; d < prob.total_dofs(); ++d)
        if (ctx.constraints.constrained[d]) residual[d] = x[d] - ctx.constraints.values[d];
    return residual;
}

// Sparsity pattern shared across Newton iterations.
struct AssemblyPattern {
    Eigen::SparseMatrix<double, Eigen::RowMajor> skeleton;
};

inline AssemblyPattern build_pattern(const ProblemDefinition& prob) {
    const detail::AssemblyContext ctx(prob);
    const int nd = prob.total_dofs();
    std::vector<std::vector<int>> cols(nd);
    for (std::size_t c = 0; c < prob.mesh->cells.size(); ++c) {
        std::array<int, 34> dofs{};
        for (int l = 0; l < ctx.ne; ++l) dofs[l] = ctx.global_dof(c, l);
        for (int a = 0; a < ctx.ne; ++a) {
            const int row = dofs[a];
            if (ctx.constraints.constrained[row]) continue;
            for (int b = 0; b < ctx.ne; ++b)
                if (!ctx.constraints.constrained[dofs[b]]) cols[row].push_back(dofs[b]);
        }
    }
    for (int d = 0; d < nd; ++d) {
        cols[d].push_back(d);  // diagonal always present
        std::sort(cols[d].begin(), cols[d].end());
        cols[d].erase(std::unique(cols[d].begin(), cols[d].end()), cols[d].end());
    }
    AssemblyPattern pattern;
    pattern.skeleton.resize(nd, nd);
    Eigen::VectorXi sizes(nd);
    for (int d = 0; d < nd; ++d) sizes[d] = static_cast<int>(cols[d].size());
    pattern.skeleton.reserve(sizes);
    for (int d = 0; d < nd; ++d)
        for (int col : cols[d]) pattern.skeleton.insert(d, col) = 0.0;
    pattern.skeleton.makeCompressed();
    return pattern;
}

// Assembles the consistent Jacobian and rhs = -residual in one sweep.
// Dirichlet rows/columns are replaced by the identity. The eliminated column
// blocks are lifted into the rhs against the boundary-value increment, so a
// Newton step taken from a state that does not yet satisfy the constraints
// lands on them exactly while the free equations see the increment.
inline SparseSystem assemble_jacobian(const ProblemDefinition& prob, const SolutionState& state,
                                      const AssemblyPattern* cached_pattern = nullptr) {
    check_state(prob, state);
    const detail::AssemblyContext ctx(prob);
    const std::size_t n_cells = prob.mesh->cells.size();

    SparseSystem sys;
    sys.dof_count = prob.total_dofs();
    AssemblyPattern local;
    if (!cached_pattern) {
        local = build_pattern(prob);
        cached_pattern = &local;
    }
    sys.matrix = cached_pattern->skeleton;  // zero-valued copy with final layout
    for (Eigen::Index k = 0; k < sys.matrix.nonZeros(); ++k) sys.matrix.valuePtr()[k] = 0.0;
    Eigen::VectorXd residual = Eigen::VectorXd::Zero(sys.dof_count);
    Eigen::VectorXd lift = Eigen::VectorXd::Zero(sys.dof_count);
    const Eigen::VectorXd x = pack_state(prob, state);

    auto add_entry = [&](int row, int col, double v) {
        const int begin = sys.matrix.outerIndexPtr()[row];
        const int end = sys.matrix.outerIndexPtr()[row + 1];
        const int* cols = sys.matrix.innerIndexPtr();
        const int* it = std::lower_bound(cols + begin, cols + end, col);
        sys.matrix.valuePtr()[it - cols] += v;
    };

    constexpr std::size_t block = 64;
    const std::size_t wave_slots = static_cast<std::size_t>(detail::assembly_thread_count()) * 4;
    std::vector<std::vector<std::vector<double>>> slot_r(wave_slots);
    std::vector<std::vector<std::vector<double>>> slot_k(wave_slots);
    for (auto& s : slot_r) s.resize(block);
    for (auto& s : slot_k) s.resize(block);

    detail::blocked_cell_sweep(
        n_cells,
        [&](std::size_t c, int slot) {
            detail::cell_contribution<true>(ctx, c, state, slot_r[slot][c % block],
                                            slot_k[slot][c % block]);
        },
        [&](std::size_t c, int slot) {
            const auto& r = slot_r[slot][c % block];
            const auto& k = slot_k[slot][c % block];
            std::array<int, 34> dofs{};
            for (int l = 0; l < ctx.ne; ++l) dofs[l] = ctx.global_dof(c, l);
            for (int a = 0; a < ctx.ne; ++a) {
                residual[dofs[a]] += r[a];
                if (ctx.constraints.constrained[dofs[a]]) continue;
                for (int b = 0; b < ctx.ne; ++b) {
                    const double v = k[std::size_t(a) * ctx.ne + b];
                    if (ctx.constraints.constrained[dofs[b]])
                        lift[dofs[a]] +=
                            v * (ctx.constraints.values[dofs[b]] - x[dofs[b]]);
                    else
                        add_entry(dofs[a], dofs[b], v);
                }
            }
        });

    detail::accumulate_tractions(prob, residual);

    for (int d = 0; d < sys.dof_count; ++d)
        if (ctx.constraints.constrained[d]) {
            residual[d] = x[d] - ctx.constraints.values[d];
            add_entry(d, d, 1.0);
        }
    sys.rhs = -(residual + lift);
    return sys;
}

// Sets the constrained displacement DOFs to load_scale * expr(coordinate).
inline void apply_dirichlet(const ProblemDefinition& prob, SolutionState& state) {
    check_state(prob, state);
    const detail::ConstraintSet set = detail::build_constraints(prob);
    for (int d = 0; d < prob.displacement_dofs(); ++d)
        if (set.constrained[d]) state.u.coeffs[d] = set.values[d];
}

// Total potential energy of a forward displacement-only problem (work
// conjugacy checks; also used to report strain energies).
inline double assemble_energy(const ProblemDefinition& prob, const SolutionState& state) {
    if (prob.direction != Direction::Forward || prob.mixed())
        throw InvalidArgument("assemble_energy covers forward displacement-only problems");
    check_state(prob, state);
    const detail::AssemblyContext ctx(prob);
    const FunctionSpace& su = *prob.displacement_space;
    const Mesh& mesh = *prob.mesh;
    double energy = 0.0;

    for (std::size_t cell = 0; cell < mesh.cells.size(); ++cell) {
        const auto& tet = mesh.cells[cell];
        const Vec3d v0 = mesh.vertices[tet[0]];
        Mat3d Jg;
        for (int c = 0; c < 3; ++c) {
            const Vec3d e = mesh.vertices[tet[c + 1]] - v0;
            for (int r = 0; r < 3; ++r) Jg(r, c) = e[r];
        }
        const double det_jg = det(Jg);
        const Mat3d jg_inv_t = transpose(inverse(Jg));
        for (std::size_t q = 0; q < ctx.rule.points.size(); ++q) {
            const double w = ctx.rule.weights[q] * det_jg;
            Mat3d G;
            Vec3d u_val;
            for (int i = 0; i < ctx.nu; ++i) {
                const Vec3d g = jg_inv_t * ctx.basis_u.grad(q, i);
                const double phi = ctx.basis_u.value(q, i);
                for (int c = 0; c < 3; ++c) {
                    const double ui = state.u.coeffs[su.dof(su.cell_nodes[cell][i], c)];
                    u_val[c] += ui * phi;
                    for (int d = 0; d < 3; ++d) G(c, d) += ui * g[d];
                }
            }
            const Mat3d F = G + Mat3d::identity();
            energy += w * energy_density_t<double>(prob.material, F, nullptr);
            if (ctx.has_body_force) {
                const Vec3d xq = v0 + Jg * ctx.rule.points[q];
                for (int c = 0; c < 3; ++c)
                    energy -= w * prob.load_scale * prob.material.rho0 *
                              prob.body_force[c].evaluate(xq) * u_val[c];
            }
        }
    }

    // Traction potential: - s * int t . u dA
    if (!prob.tractions.empty()) {
        const FacetQuadratureRule rule = quadrature_facet(5);
        const std::vector<double> basis = tabulate_facet_basis(su.degree, rule.points);
        const int nf = su.facet_node_count();
        for (const auto& spec : prob.tractions)
            for (std::size_t fi = 0; fi < mesh.boundary_facets.size(); ++fi) {
                const auto& facet = mesh.boundary_facets[fi];
                if (facet.tag != spec.tag) continue;
                const Vec3d p0 = mesh.vertices[facet.vertices[0]];
                const Vec3d e1 = mesh.vertices[facet.vertices[1]] - p0;
                const Vec3d e2 = mesh.vertices[facet.vertices[2]] - p0;
                const double area2 = norm(cross(e1, e2));
                for (std::size_t q = 0; q < rule.points.size(); ++q) {
                    const Vec3d x = p0 + rule.points[q][0] * e1 + rule.points[q][1] * e2;
                    const double w = rule.weights[q] * area2;
                    for (int i = 0; i < nf; ++i) {
                        const int node = su.facet_nodes[fi][i];
                        for (int c = 0; c < 3; ++c)
                            energy -= w * prob.load_scale * spec.exprs[c].evaluate(x) *
                                      basis[q * nf + i] *
                                      state.u.coeffs[su.dof(node, c)];
                    }
                }
            }
    }
    return energy;
}

// Quadrature-point samples of the solution fields, for verification against
// closed-form oracles (no projection or smoothing).
struct QpSample {
    Vec3d x;
    double weight = 0;  // physical quadrature weight
    double psi = 0;
    Mat3d F;
    Mat3d cauchy;
    double pressure = 0;
};

inline std::vector<QpSample> sample_quadrature_fields(const ProblemDefinition& prob,
                                                      const SolutionState& state) {
    check_state(prob, state);
    const detail::AssemblyContext ctx(prob);
    const FunctionSpace& su = *prob.displacement_space;
    const Mesh& mesh = *prob.mesh;
    std::vector<QpSample> samples;
    samples.reserve(mesh.cells.size() * ctx.rule.points.size());

    for (std::size_t cell = 0; cell < mesh.cells.size(); ++cell) {
        const auto& tet = mesh.cells[cell];
        const Vec3d v0 = mesh.vertices[tet[0]];
        Mat3d Jg;
        for (int c = 0; c < 3; ++c) {
            const Vec3d e = mesh.vertices[tet[c + 1]] - v0;
            for (int r = 0; r < 3; ++r) Jg(r, c) = e[r];
        }
        const double det_jg = det(Jg);
        const Mat3d jg_inv_t = transpose(inverse(Jg));
        for (std::size_t q = 0; q < ctx.rule.points.size(); ++q) {
            QpSample s;
            s.x = v0 + Jg * ctx.rule.points[q];
            s.weight = ctx.rule.weights[q] * det_jg;
            Mat3d G;
            for (int i = 0; i < ctx.nu; ++i) {
                const Vec3d g = jg_inv_t * ctx.basis_u.grad(q, i);
                for (int c = 0; c < 3; ++c) {
                    const double ui = state.u.coeffs[su.dof(su.cell_nodes[cell][i], c)];
                    for (int d = 0; d < 3; ++d) G(c, d) += ui * g[d];
                }
            }
            if (prob.mixed())
                for (int a = 0; a < 4; ++a)
                    s.pressure += state.p->coeffs[prob.pressure_space->cell_nodes[cell][a]] *
                                  ctx.basis_p.value(q, a);

            const DeformationState def = prob.direction == Direction::Forward
                                             ? deformation_gradient_direct(G)
                                             : deformation_gradient_inverse(G);
            s.F = def.F;
            const std::optional<double> p =
                prob.mixed() ? std::optional<double>(s.pressure) : std::nullopt;
            s.psi = energy_density(prob.material, def, p);
            s.cauchy = piola_transform(first_pk_stress(prob.material, def, p), def.F);
            samples.push_back(s);
        }
    }
    return samples;
}

}  // namespace invfem
