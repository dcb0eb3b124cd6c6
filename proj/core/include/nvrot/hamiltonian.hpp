#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include "nvrot/spin.hpp"

namespace nvrot {

// Field and rotation geometry. Angles of B are measured in the frame of the
// rotation axis (z = rotation axis). The NV axis is tilted from the rotation
// axis by delta_theta about y.
struct FieldGeometry {
  double b_gauss = 0.0;
  double theta_b = 0.0;
  double phi_b = 0.0;
  double omega_rot = 0.0;
  double delta_theta = 0.0;
  double phi0 = 0.0;
  // Extra field along the rotation axis felt by the nuclei only. Used to build
  // the stationary counterpart of a rotating run (B_Omega on the nuclei).
  double nuclear_offset_gauss = 0.0;

  Vector3 lab_field() const;
  Eigen::Matrix3d tilt() const;
  // Rotation axis expressed in NV coordinates.
  Vector3 rotation_axis() const;
  // Field seen in the co-rotating NV frame at time t:
  //   B_nv(t) = T R_z(omega t + phi0) B_lab.
  Vector3 nv_field(double t) const;
  Vector3 nv_field_rate(double t) const;
  // Electron and nuclear field vectors as angular frequencies, including the
  // omega J.n frame term.
  Vector3 electron_drive(double t, const PhysicalConstants& pc = constants()) const;
  Vector3 nuclear_drive(double t, const PhysicalConstants& pc = constants()) const;
  bool time_independent() const;
  double rotation_frequency_hz() const { return hz(omega_rot); }
};

struct HamiltonianOptions {
  bool include_dipolar = true;
  // keep only the I_z I_z and flip-flop parts of the homonuclear coupling
  bool secular_dipolar = false;
};

// NV electron (spin 1) plus g nuclear spins. Basis is electron (+1, 0, -1)
// outermost, then nuclei in site order, each (up, down).
class ClusterHamiltonian {
 public:
  explicit ClusterHamiltonian(std::vector<Vector3> sites, HamiltonianOptions options = {},
                              const PhysicalConstants& pc = constants());

  int size() const { return static_cast<int>(sites_.size()); }
  Eigen::Index nuclear_dim() const { return Eigen::Index{1} << sites_.size(); }
  Eigen::Index dim() const { return 3 * nuclear_dim(); }
  const std::vector<Vector3>& sites() const { return sites_; }
  const std::vector<Tensor3>& hyperfine() const { return hyperfine_; }
  const PhysicalConstants& physical_constants() const { return pc_; }

  // Nuclear-space operators (dimension 2^g).
  const CMatrix& nuclear_spin(int site, int axis) const { return nuclear_[3 * site + axis]; }
  const CMatrix& nuclear_dipolar() const { return dipolar_; }

  // D Sz^2 + he.S + hn.sum(I) + sum S.A.I + H_dd, he/hn in rad/s.
  CMatrix assemble(const Vector3& electron_drive, const Vector3& nuclear_drive) const;
  CMatrix lab(const Vector3& b_gauss) const;
  CMatrix rotating(const FieldGeometry& geometry, double t) const;

 private:
  std::vector<Vector3> sites_;
  std::vector<Tensor3> hyperfine_;
  std::vector<CMatrix> nuclear_;
  CMatrix dipolar_;
  PhysicalConstants pc_;
};

// Eigenbasis of the electron-only Hamiltonian D Sz^2 + he.S. Index order
// matches the bare basis (+1, 0, -1); level m is the dressed state
// continuously connected to |m>, with gauge V(m, m) real and positive.
struct ElectronFrame {
  Eigen::Vector3d energy = Eigen::Vector3d::Zero();
  Eigen::Matrix3cd vectors = Eigen::Matrix3cd::Identity();
  // V^dag S_a V
  std::array<Eigen::Matrix3cd, 3> spin;
  // V^dag dV/dt for the given drive rate
  Eigen::Matrix3cd connection = Eigen::Matrix3cd::Zero();
};

ElectronFrame electron_frame(const Vector3& electron_drive, const Vector3& electron_drive_rate,
                             const PhysicalConstants& pc = constants());

// Basis index of an electron projection m_s in {+1, 0, -1}.
int electron_index(int m_s);

// g_i = 1 - (gamma_e / gamma_n D)(2 - 3|m_s|) P_perp A_i, where P_perp keeps the
// rows of A_i that couple to S_x, S_y.
Tensor3 effective_g_tensor(const Tensor3& a, int m_s, const PhysicalConstants& pc = constants());

struct EffectiveField {
  Vector3 vector = Vector3::Zero();  // gauss
  int m_s = 0;
};

// m_s B_dip + B.g_i with B_dip = A_i z / gamma_n. `b_gauss` is the field in the
// NV frame; omega_rot adds the pseudo-field along `axis` on the nuclear side.
EffectiveField effective_field(const Vector3& b_gauss, const Vector3& site, int m_s,
                               double omega_rot = 0.0, const Vector3& axis = Vector3::UnitZ(),
                               const PhysicalConstants& pc = constants());

struct LarmorResult {
  double omega = 0.0;    // rad/s
  double overlap = 1.0;  // weight of the selected pair on the target level
  bool ambiguous = false;
};

// Nuclear splitting inside electron level m_s from exact diagonalization of
// the one-spin rotating-frame Hamiltonian at time t.
LarmorResult larmor_frequency(const Vector3& site, const FieldGeometry& geometry, double t,
                              int m_s, const PhysicalConstants& pc = constants());

struct FrequencyTrace {
  int m_s = 0;
  std::vector<double> times;
  std::vector<Vector3> sites;
  // frequency_hz[spin][time]
  std::vector<std::vector<double>> frequency_hz;
  std::vector<std::vector<bool>> ambiguous;
};

FrequencyTrace frequency_trace(const std::vector<Vector3>& sites, const FieldGeometry& geometry,
                               const std::vector<double>& times, int m_s,
                               const PhysicalConstants& pc = constants());

// Columns: spin_index, r_nm, time_s, m_s, frequency_hz. Flagged (ambiguous)
// entries are listed in a header comment.
void write_frequency_trace(std::ostream& out, const FrequencyTrace& trace);

}  // namespace nvrot
