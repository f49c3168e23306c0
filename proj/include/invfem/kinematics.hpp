#pragma once

#include <array>
#include <cmath>

#include "invfem/errors.hpp"
#include "invfem/tensor.hpp"

// Deformation measures for both analysis directions. In a forward analysis
// F = grad(u) + I on the reference mesh; in an inverse analysis the input
// mesh is the deformed configuration and F = (grad(u') + I)^-1.

namespace invfem {

struct DeformationState {
    Mat3d F;
    double J = 1.0;
    Mat3d B;  // F F^T
    Mat3d C;  // F^T F
    double I_C = 3.0, II_C = 3.0, III_C = 1.0;  // shared with B (isotropy)
};

// (tr C, (tr(C)^2 - tr(C^2))/2, det C)
inline std::array<double, 3> invariants(const Mat3d& C) {
    const double i1 = trace(C);
    const double i2 = 0.5 * (i1 * i1 - trace(C * C));
    return {i1, i2, det(C)};
}

inline DeformationState make_deformation_state(const Mat3d& F) {
    DeformationState state;
    state.F = F;
    state.J = det(F);
    if (state.J <= 0.0) throw ElementInversionError(state.J);
    state.B = F * transpose(F);
    state.C = transpose(F) * F;
    const auto inv = invariants(state.C);
    state.I_C = inv[0];
    state.II_C = inv[1];
    state.III_C = inv[2];
    return state;
}

inline DeformationState deformation_gradient_direct(const Mat3d& grad_u) {
    return make_deformation_state(grad_u + Mat3d::identity());
}

inline DeformationState deformation_gradient_inverse(const Mat3d& grad_uprime) {
    const Mat3d H = grad_uprime + Mat3d::identity();
    const double det_h = det(H);
    if (det_h <= 0.0) throw ElementInversionError(det_h > 0.0 ? 1.0 / det_h : det_h);
    return make_deformation_state(inverse(H));
}

struct StrainTensors {
    Mat3d E;
};

inline StrainTensors green_lagrange(const Mat3d& C) {
    Mat3d E = C - Mat3d::identity();
    E *= 0.5;
    return {E};
}

// Cauchy stress from the first Piola-Kirchhoff stress: sigma = J^-1 P F^T.
inline Mat3d piola_transform(const Mat3d& P, const Mat3d& F) {
    const double J = det(F);
    if (J <= 0.0) throw ElementInversionError(J);
    return (1.0 / J) * (P * transpose(F));
}

}  // namespace invfem
