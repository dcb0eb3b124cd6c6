#include "nvrot/spin.hpp"

#include <cmath>
#include <complex>
#include <string>

#include "nvrot/error.hpp"

namespace nvrot {

using cd = std::complex<double>;

const CMatrix& SpinOperatorSet::component(int axis) const {
  switch (axis) {
    case 0: return sx;
    case 1: return sy;
    case 2: return sz;
    default: throw Error("spin_core.invalid_argument", "spin axis must be 0, 1 or 2");
  }
}

SpinOperatorSet spin_operators(double spin) {
  const bool half = std::abs(spin - 0.5) < 1e-12;
  const bool one = std::abs(spin - 1.0) < 1e-12;
  if (!half && !one) {
    throw Error("spin_core.unsupported_spin",
                "unsupported spin quantum number " + std::to_string(spin) +
                    " (expected 1/2 or 1)");
  }
  const int dim = half ? 2 : 3;
  const double s = half ? 0.5 : 1.0;
  SpinOperatorSet ops;
  ops.spin = s;
  ops.sz = CMatrix::Zero(dim, dim);
  CMatrix raise = CMatrix::Zero(dim, dim);
  // Row/column k carries m = s - k.
  for (int k = 0; k < dim; ++k) {
    const double m = s - k;
    ops.sz(k, k) = m;
    if (k > 0) {
      // <m+1| S+ |m>
      raise(k - 1, k) = std::sqrt(s * (s + 1.0) - m * (m + 1.0));
    }
  }
  const CMatrix lower = raise.adjoint();
  ops.sx = 0.5 * (raise + lower);
  ops.sy = cd(0.0, -0.5) * (raise - lower);
  return ops;
}

namespace {

Tensor3 point_dipole(const Vector3& r_nm, double prefactor) {
  const double r = r_nm.norm();
  const Vector3 u = r_nm / r;
  return prefactor / (r * r * r) * (Tensor3::Identity() - 3.0 * u * u.transpose());
}

}  // namespace

Tensor3 hyperfine_tensor(const Vector3& r_nm, const PhysicalConstants& pc) {
  if (!(r_nm.norm() > 0.0)) {
    throw Error("spin_core.zero_distance", "hyperfine tensor needs a nonzero NV-nucleus separation");
  }
  return point_dipole(r_nm, pc.hyperfine_prefactor);
}

Tensor3 nuclear_dipolar_tensor(const Vector3& ri_nm, const Vector3& rj_nm,
                               const PhysicalConstants& pc) {
  const Vector3 rij = ri_nm - rj_nm;
  if (!(rij.norm() > 0.0)) {
    throw Error("spin_core.zero_distance", "dipolar tensor of coincident nuclei is undefined");
  }
  return point_dipole(rij, pc.nuclear_dipolar_prefactor);
}

double pseudo_field(double omega_rot, const PhysicalConstants& pc) {
  return omega_rot / pc.gamma_n;
}

Eigen::Matrix3d rotation_matrix(const Vector3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

}  // namespace nvrot
