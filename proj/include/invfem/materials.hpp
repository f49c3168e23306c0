#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "invfem/dual.hpp"
#include "invfem/errors.hpp"
#include "invfem/kinematics.hpp"
#include "invfem/tensor.hpp"

// Strain-energy densities and their stress/tangent evaluation. Stresses and
// consistent tangents are obtained by differentiating the energy with dual
// scalars, so swapping the material model means editing only the energy
// function.

namespace invfem {

enum class MaterialKind {
    NeoHookeanCompressible,
    MooneyRivlinCompressible,
    NeoHookeanMixed,
    MooneyRivlinMixed,
};

inline bool is_mixed_kind(MaterialKind kind) {
    return kind == MaterialKind::NeoHookeanMixed || kind == MaterialKind::MooneyRivlinMixed;
}

inline bool is_neo_hookean(MaterialKind kind) {
    return kind == MaterialKind::NeoHookeanCompressible || kind == MaterialKind::NeoHookeanMixed;
}

struct MaterialSpec {
    MaterialKind kind = MaterialKind::NeoHookeanCompressible;
    double mu = 0.0, lambda = 0.0;        // neo-Hookean (Pa)
    double c1 = 0.0, c2 = 0.0, d1 = 0.0;  // Mooney-Rivlin (Pa)
    double rho0 = 1000.0;                 // reference density (kg/m^3)

    static MaterialSpec neo_hookean(double mu, double lambda, double rho0, bool mixed = false) {
        MaterialSpec s;
        s.kind = mixed ? MaterialKind::NeoHookeanMixed : MaterialKind::NeoHookeanCompressible;
        s.mu = mu;
        s.lambda = lambda;
        s.rho0 = rho0;
        s.validate();
        return s;
    }

    static MaterialSpec mooney_rivlin(double c1, double c2, double d1, double rho0,
                                      bool mixed = false) {
        MaterialSpec s;
        s.kind = mixed ? MaterialKind::MooneyRivlinMixed : MaterialKind::MooneyRivlinCompressible;
        s.c1 = c1;
        s.c2 = c2;
        s.d1 = d1;
        s.rho0 = rho0;
        s.validate();
        return s;
    }

    bool mixed() const { return is_mixed_kind(kind); }

    void validate() const {
        if (!(rho0 > 0.0)) throw InvalidArgument("material rho0 must be positive");
        if (is_neo_hookean(kind)) {
            if (!(mu > 0.0)) throw InvalidArgument("neo-Hookean mu must be positive");
            if (lambda < 0.0) throw InvalidArgument("neo-Hookean lambda must be >= 0");
            if (mixed() && !(lambda > 0.0))
                throw InvalidArgument("mixed neo-Hookean requires lambda > 0");
        } else {
            if (!(c1 + c2 > 0.0)) throw InvalidArgument("Mooney-Rivlin requires C1 + C2 > 0");
            if (!(d1 > 0.0)) throw InvalidArgument("Mooney-Rivlin D1 must be positive");
        }
    }
};

// Strain energy density (Pa), templated over the scalar so dual numbers
// propagate first and second derivatives.
//
//   neo-Hookean:    mu/2 (I_B - 3) - mu ln J + lambda/2 (ln J)^2
//   Mooney-Rivlin:  C1 (Ibar - 3) + C2 (IIbar - 3) + D1 (J - 1)^2
//                   with Ibar = J^(-2/3) I_B, IIbar = J^(-4/3) II_B
//   mixed variants replace the volumetric term by the p ln(J) or p (J - 1)
//   coupling with its -p^2/(2 lambda) or -p^2/(4 D1) stabilisation.
template <class T>
T energy_density_t(const MaterialSpec& spec, const Mat3<T>& F, const T* p) {
    using std::log;
    using std::pow;

    if (spec.mixed() != (p != nullptr))
        throw InvalidArgument(spec.mixed() ? "mixed material requires a pressure value"
                                           : "compressible material takes no pressure");

    const T J = det(F);
    const double jv = value_of(J);
    if (jv <= 1e-10) throw ElementInversionError(jv);

    const T i_b = ddot(F, F);
    switch (spec.kind) {
        case MaterialKind::NeoHookeanCompressible: {
            const T lj = log(J);
            return 0.5 * spec.mu * (i_b - 3.0) - spec.mu * lj + 0.5 * spec.lambda * lj * lj;
        }
        case MaterialKind::NeoHookeanMixed: {
            const T lj = log(J);
            return 0.5 * spec.mu * (i_b - 3.0) - spec.mu * lj + (*p) * lj -
                   (*p) * (*p) / (2.0 * spec.lambda);
        }
        case MaterialKind::MooneyRivlinCompressible:
        case MaterialKind::MooneyRivlinMixed: {
            const Mat3<T> B = F * transpose(F);
            const T ii_b = 0.5 * (i_b * i_b - ddot(B, B));
            const T ibar = pow(J, -2.0 / 3.0) * i_b;
            const T iibar = pow(J, -4.0 / 3.0) * ii_b;
            T psi = spec.c1 * (ibar - 3.0) + spec.c2 * (iibar - 3.0);
            if (spec.kind == MaterialKind::MooneyRivlinCompressible)
                return psi + spec.d1 * (J - 1.0) * (J - 1.0);
            return psi + (*p) * (J - 1.0) - (*p) * (*p) / (4.0 * spec.d1);
        }
    }
    throw InvalidArgument("unknown material kind");
}

inline double energy_density(const MaterialSpec& spec, const DeformationState& state,
                             std::optional<double> p = std::nullopt) {
    const double pv = p.value_or(0.0);
    return energy_density_t<double>(spec, state.F, p ? &pv : nullptr);
}

namespace detail {

// Seed layout used throughout: 0..8 are the row-major entries of F (or of the
// displacement gradient at assembly level), 9 is the pressure.
constexpr int n_seeds = 10;

template <class D>
Mat3<D> seeded_matrix(const Mat3d& F) {
    Mat3<D> Fd;
    for (int i = 0; i < 9; ++i) Fd.m[i] = D::seeded(F.m[i], i);
    return Fd;
}

}  // namespace detail

// First Piola-Kirchhoff stress P = d psi / d F, by forward-mode AD.
inline Mat3d first_pk_stress(const MaterialSpec& spec, const DeformationState& state,
                             std::optional<double> p = std::nullopt) {
    using D = Dual1<detail::n_seeds>;
    const Mat3<D> Fd = detail::seeded_matrix<D>(state.F);
    const D pd = p ? D::seeded(*p, 9) : D(0.0);
    const D psi = energy_density_t<D>(spec, Fd, p ? &pd : nullptr);
    Mat3d P;
    for (int i = 0; i < 9; ++i) P.m[i] = psi.g[i];
    return P;
}

// Second derivatives of the energy: the fourth-order tangent dP/dF plus the
// pressure coupling blocks for mixed materials.
struct MaterialTangent {
    std::array<double, 81> dP_dF{};  // [(3a+b)*9 + (3c+d)]
    Mat3d dP_dp;                     // = d2 psi / dF dp
    double dpsi_dp = 0.0;
    double d2psi_dp2 = 0.0;

    double operator()(int a, int b, int c, int d) const { return dP_dF[(3 * a + b) * 9 + 3 * c + d]; }
};

inline MaterialTangent material_tangent(const MaterialSpec& spec, const DeformationState& state,
                                        std::optional<double> p = std::nullopt) {
    using D = Dual2<detail::n_seeds>;
    const Mat3<D> Fd = detail::seeded_matrix<D>(state.F);
    const D pd = p ? D::seeded(*p, 9) : D(0.0);
    const D psi = energy_density_t<D>(spec, Fd, p ? &pd : nullptr);
    MaterialTangent t;
    for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 9; ++j) t.dP_dF[i * 9 + j] = psi.hess(i, j);
    for (int i = 0; i < 9; ++i) t.dP_dp.m[i] = psi.hess(i, 9);
    t.dpsi_dp = psi.g[9];
    t.d2psi_dp2 = psi.hess(9, 9);
    return t;
}

}  // namespace invfem
