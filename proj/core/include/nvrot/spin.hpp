#pragma once

#include <Eigen/Dense>

#include "nvrot/constants.hpp"

namespace nvrot {

using Vector3 = Eigen::Vector3d;
using Tensor3 = Eigen::Matrix3d;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

// Angular-momentum matrices in the Zeeman basis, ordered by descending m.
struct SpinOperatorSet {
  double spin = 0.0;
  CMatrix sx;
  CMatrix sy;
  CMatrix sz;

  Eigen::Index dim() const { return sz.rows(); }
  const CMatrix& component(int axis) const;
};

// Supports spin 1/2 (nuclei) and spin 1 (NV ground state).
SpinOperatorSet spin_operators(double spin);

// Point-dipole hyperfine tensor for a 13C nucleus at r (nm) relative to the NV,
// in rad/s: A = (mu0 ge gn hbar / 4 pi r^3)(1 - 3 rhat rhat).
Tensor3 hyperfine_tensor(const Vector3& r_nm,
                         const PhysicalConstants& pc = constants());

// Homonuclear point-dipole tensor D_ij; the coupling is I_i . D_ij . I_j.
Tensor3 nuclear_dipolar_tensor(const Vector3& ri_nm, const Vector3& rj_nm,
                               const PhysicalConstants& pc = constants());

// Rotation-induced pseudo-field omega_rot / gamma_n, in gauss.
double pseudo_field(double omega_rot, const PhysicalConstants& pc = constants());

// Right-handed rotation by `angle` about `axis` (need not be normalised).
Eigen::Matrix3d rotation_matrix(const Vector3& axis, double angle);

// Kronecker product of dense complex matrices.
CMatrix kron(const CMatrix& a, const CMatrix& b);

}  // namespace nvrot
