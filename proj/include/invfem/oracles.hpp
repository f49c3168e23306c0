#pragma once

#include <cmath>
#include <span>

#include "invfem/errors.hpp"
#include "invfem/tensor.hpp"

// Closed-form verification quantities for the simple and generalized shear
// of a Mooney-Rivlin cube. Implemented independently of the materials module
// (literal formulas only) so that FE-vs-oracle comparisons are two-sided.

namespace invfem {

enum class ShearKind { Simple, Generalized };

struct ShearOracle {
    double k = 0;   // shear constant
    double c1 = 0;  // Mooney-Rivlin C1 (Pa)
    double c2 = 0;  // Mooney-Rivlin C2 (Pa)
    ShearKind kind = ShearKind::Simple;
};

// Simple shear: psi = k^2 (C1 + C2). Generalized shear: the unit-cube average
// int_0^1 4 k^2 y^2 (C1 + C2) dy = 4 k^2 (C1 + C2) / 3.
inline double oracle_energy(const ShearOracle& o) {
    const double base = o.k * o.k * (o.c1 + o.c2);
    return o.kind == ShearKind::Simple ? base : 4.0 * base / 3.0;
}

// Pointwise energy density; for generalized shear the local gradient is 2ky.
inline double oracle_energy_pointwise(const ShearOracle& o, double y) {
    if (o.kind == ShearKind::Simple) return oracle_energy(o);
    const double kt = 2.0 * o.k * y;
    return kt * kt * (o.c1 + o.c2);
}

namespace detail {

inline Mat3d simple_shear_cauchy(double k, double c1, double c2) {
    Mat3d s;
    s(0, 0) = k * k * (2.0 * c2 + 4.0 * c1) / 3.0;
    s(1, 1) = -k * k * (4.0 * c2 + 2.0 * c1) / 3.0;
    s(2, 2) = k * k * (2.0 * c2 - 2.0 * c1) / 3.0;
    s(0, 1) = s(1, 0) = k * (2.0 * c2 + 2.0 * c1);
    return s;
}

}  // namespace detail

// The tabulated stress values: the simple-shear components, or for the
// generalized case the unit-cube averages of the pointwise field.
inline Mat3d oracle_cauchy(const ShearOracle& o) {
    if (o.kind == ShearKind::Simple) return detail::simple_shear_cauchy(o.k, o.c1, o.c2);
    Mat3d s;
    s(0, 0) = o.k * o.k * (8.0 * o.c2 + 16.0 * o.c1) / 9.0;
    s(1, 1) = -o.k * o.k * (16.0 * o.c2 + 8.0 * o.c1) / 9.0;
    s(2, 2) = o.k * o.k * (8.0 * o.c2 - 8.0 * o.c1) / 9.0;
    s(0, 1) = s(1, 0) = o.k * (2.0 * o.c2 + 2.0 * o.c1);
    return s;
}

// Pointwise stress at height y: generalized shear reduces to simple shear
// with the local constant 2ky.
inline Mat3d oracle_cauchy(const ShearOracle& o, double y) {
    if (o.kind == ShearKind::Simple) return detail::simple_shear_cauchy(o.k, o.c1, o.c2);
    return detail::simple_shear_cauchy(2.0 * o.k * y, o.c1, o.c2);
}

struct RelativeError {
    double value = 0;
    bool absolute = false;  // true when the oracle norm vanishes
};

// Relative L2 error of FE samples against oracle samples under a common
// quadrature weighting; switches to the absolute norm (flagged) when the
// oracle is identically zero.
inline RelativeError field_relative_error(std::span<const double> fe,
                                          std::span<const double> oracle,
                                          std::span<const double> weights) {
    if (fe.size() != oracle.size() || fe.size() != weights.size())
        throw InvalidArgument("field_relative_error requires matched sampling");
    double num = 0, den = 0;
    for (std::size_t i = 0; i < fe.size(); ++i) {
        const double d = fe[i] - oracle[i];
        num += weights[i] * d * d;
        den += weights[i] * oracle[i] * oracle[i];
    }
    if (den == 0.0) return {std::sqrt(num), true};
    return {std::sqrt(num / den), false};
}

}  // namespace invfem
