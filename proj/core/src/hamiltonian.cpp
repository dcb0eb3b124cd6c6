#include "nvrot/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <ostream>
#include <string>

#include "nvrot/csv.hpp"
#include "nvrot/error.hpp"

namespace nvrot {

using cd = std::complex<double>;

namespace {

Eigen::Matrix3d rz(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Eigen::Matrix3d m;
  m << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  return m;
}

Eigen::Matrix3d rz_derivative(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Eigen::Matrix3d m;
  m << -s, -c, 0.0, c, -s, 0.0, 0.0, 0.0, 0.0;
  return m;
}

const SpinOperatorSet& electron_ops() {
  static const SpinOperatorSet ops = spin_operators(1.0);
  return ops;
}

}  // namespace

Vector3 FieldGeometry::lab_field() const {
  return b_gauss * Vector3(std::sin(theta_b) * std::cos(phi_b),
                           std::sin(theta_b) * std::sin(phi_b), std::cos(theta_b));
}

Eigen::Matrix3d FieldGeometry::tilt() const {
  return rotation_matrix(Vector3::UnitY(), delta_theta);
}

Vector3 FieldGeometry::rotation_axis() const { return tilt() * Vector3::UnitZ(); }

Vector3 FieldGeometry::nv_field(double t) const {
  return tilt() * (rz(omega_rot * t + phi0) * lab_field());
}

Vector3 FieldGeometry::nv_field_rate(double t) const {
  return omega_rot * (tilt() * (rz_derivative(omega_rot * t + phi0) * lab_field()));
}

Vector3 FieldGeometry::electron_drive(double t, const PhysicalConstants& pc) const {
  return pc.gamma_e * nv_field(t) + omega_rot * rotation_axis();
}

Vector3 FieldGeometry::nuclear_drive(double t, const PhysicalConstants& pc) const {
  const Vector3 n = rotation_axis();
  return pc.gamma_n * (nv_field(t) + nuclear_offset_gauss * n) + omega_rot * n;
}

bool FieldGeometry::time_independent() const {
  return omega_rot == 0.0 || b_gauss == 0.0 || std::sin(theta_b) == 0.0;
}

ClusterHamiltonian::ClusterHamiltonian(std::vector<Vector3> sites, HamiltonianOptions options,
                                       const PhysicalConstants& pc)
    : sites_(std::move(sites)), pc_(pc) {
  const int g = size();
  if (g > 12) throw Error("hamiltonian.invalid_argument", "cluster too large for dense assembly");
  const Eigen::Index n = nuclear_dim();
  const SpinOperatorSet half = spin_operators(0.5);
  hyperfine_.reserve(sites_.size());
  for (const auto& r : sites_) hyperfine_.push_back(hyperfine_tensor(r, pc_));

  nuclear_.reserve(3 * sites_.size());
  for (int i = 0; i < g; ++i) {
    const CMatrix left = CMatrix::Identity(Eigen::Index{1} << i, Eigen::Index{1} << i);
    const CMatrix right =
        CMatrix::Identity(Eigen::Index{1} << (g - i - 1), Eigen::Index{1} << (g - i - 1));
    for (int axis = 0; axis < 3; ++axis) {
      nuclear_.push_back(kron(kron(left, half.component(axis)), right));
    }
  }

  dipolar_ = CMatrix::Zero(n, n);
  if (!options.include_dipolar) return;
  for (int i = 0; i < g; ++i) {
    for (int j = i + 1; j < g; ++j) {
      const Tensor3 d = nuclear_dipolar_tensor(sites_[i], sites_[j], pc_);
      if (options.secular_dipolar) {
        dipolar_ += d(2, 2) * (nuclear_spin(i, 2) * nuclear_spin(j, 2) -
                               0.5 * (nuclear_spin(i, 0) * nuclear_spin(j, 0) +
                                      nuclear_spin(i, 1) * nuclear_spin(j, 1)));
        continue;
      }
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
          if (d(a, b) != 0.0) dipolar_ += d(a, b) * (nuclear_spin(i, a) * nuclear_spin(j, b));
        }
      }
    }
  }
}

CMatrix ClusterHamiltonian::assemble(const Vector3& he, const Vector3& hn) const {
  const SpinOperatorSet& s = electron_ops();
  const Eigen::Index n = nuclear_dim();
  CMatrix electron = pc_.d_zfs * (s.sz * s.sz);
  for (int a = 0; a < 3; ++a) electron += he[a] * s.component(a);

  CMatrix nuclear = dipolar_;
  for (int i = 0; i < size(); ++i) {
    for (int b = 0; b < 3; ++b) nuclear += hn[b] * nuclear_spin(i, b);
  }

  CMatrix h = kron(electron, CMatrix::Identity(n, n)) + kron(CMatrix::Identity(3, 3), nuclear);
  for (int a = 0; a < 3; ++a) {
    CMatrix coupling = CMatrix::Zero(n, n);
    for (int i = 0; i < size(); ++i) {
      for (int b = 0; b < 3; ++b) coupling += hyperfine_[i](a, b) * nuclear_spin(i, b);
    }
    h += kron(s.component(a), coupling);
  }
  return h;
}

CMatrix ClusterHamiltonian::lab(const Vector3& b) const {
  return assemble(pc_.gamma_e * b, pc_.gamma_n * b);
}

CMatrix ClusterHamiltonian::rotating(const FieldGeometry& geometry, double t) const {
  return assemble(geometry.electron_drive(t, pc_), geometry.nuclear_drive(t, pc_));
}

int electron_index(int m_s) {
  switch (m_s) {
    case 1: return 0;
    case 0: return 1;
    case -1: return 2;
    default: throw Error("hamiltonian.invalid_argument", "m_s must be -1, 0 or +1");
  }
}

ElectronFrame electron_frame(const Vector3& he, const Vector3& he_rate,
                             const PhysicalConstants& pc) {
  const SpinOperatorSet& s = electron_ops();
  Eigen::Matrix3cd h = pc.d_zfs * (s.sz * s.sz);
  for (int a = 0; a < 3; ++a) h += he[a] * s.component(a);

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> es(h);
  if (es.info() != Eigen::Success) {
    throw Error("hamiltonian.eigensolver", "electron eigendecomposition failed");
  }
  // Ascending order gives 0, then the +-1 pair; the lower of the pair is the
  // level whose m_s opposes the longitudinal drive.
  std::array<int, 3> order = he.z() >= 0.0 ? std::array<int, 3>{2, 0, 1}
                                           : std::array<int, 3>{1, 0, 2};
  ElectronFrame f;
  for (int m = 0; m < 3; ++m) {
    f.energy[m] = es.eigenvalues()[order[m]];
    Eigen::Vector3cd v = es.eigenvectors().col(order[m]);
    const cd pivot = v[m];
    if (std::abs(pivot) > 0.0) v *= std::conj(pivot) / std::abs(pivot);
    f.vectors.col(m) = v;
  }
  for (int a = 0; a < 3; ++a) {
    f.spin[a] = f.vectors.adjoint() * s.component(a).topLeftCorner<3, 3>() * f.vectors;
  }

  Eigen::Matrix3cd rate = Eigen::Matrix3cd::Zero();
  for (int a = 0; a < 3; ++a) rate += he_rate[a] * f.spin[a];
  for (int m = 0; m < 3; ++m) {
    for (int n = 0; n < 3; ++n) {
      if (m != n) f.connection(m, n) = rate(m, n) / (f.energy[n] - f.energy[m]);
    }
  }
  // Keep V(m, m) real: Im(dV(m, m)/dt) = 0 fixes the diagonal.
  for (int m = 0; m < 3; ++m) {
    cd off = 0.0;
    for (int n = 0; n < 3; ++n) {
      if (n != m) off += f.vectors(m, n) * f.connection(n, m);
    }
    const double vmm = f.vectors(m, m).real();
    f.connection(m, m) = vmm > 0.0 ? cd(0.0, -off.imag() / vmm) : cd(0.0, 0.0);
  }
  return f;
}

Tensor3 effective_g_tensor(const Tensor3& a, int m_s, const PhysicalConstants& pc) {
  electron_index(m_s);
  Tensor3 transverse = a;
  transverse.row(2).setZero();
  const double k = 2.0 - 3.0 * std::abs(m_s);
  return Tensor3::Identity() - (pc.gamma_e / (pc.gamma_n * pc.d_zfs)) * k * transverse;
}

EffectiveField effective_field(const Vector3& b, const Vector3& site, int m_s, double omega_rot,
                               const Vector3& axis, const PhysicalConstants& pc) {
  const Tensor3 a = hyperfine_tensor(site, pc);
  const Tensor3 g = effective_g_tensor(a, m_s, pc);
  const Vector3 b_dip = a * Vector3::UnitZ() / pc.gamma_n;
  EffectiveField out;
  out.m_s = m_s;
  out.vector = m_s * b_dip + g.transpose() * b + pseudo_field(omega_rot, pc) * axis.normalized();
  return out;
}

LarmorResult larmor_frequency(const Vector3& site, const FieldGeometry& geometry, double t,
                              int m_s, const PhysicalConstants& pc) {
  const int level = electron_index(m_s);
  const ClusterHamiltonian cluster({site}, {}, pc);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(cluster.rotating(geometry, t));
  if (es.info() != Eigen::Success) {
    throw Error("hamiltonian.eigensolver", "cluster eigendecomposition failed");
  }
  // Reference: A-free, rotation-free electron states for the same field.
  const ElectronFrame ref =
      electron_frame(pc.gamma_e * geometry.nv_field(t), Vector3::Zero(), pc);
  const Eigen::Vector3cd target = ref.vectors.col(level);

  std::vector<std::pair<double, int>> weights;
  for (int k = 0; k < es.eigenvectors().cols(); ++k) {
    const auto v = es.eigenvectors().col(k);
    double w = 0.0;
    for (int nu = 0; nu < 2; ++nu) {
      cd amp = 0.0;
      for (int e = 0; e < 3; ++e) amp += std::conj(target[e]) * v[2 * e + nu];
      w += std::norm(amp);
    }
    weights.emplace_back(w, k);
  }
  std::sort(weights.begin(), weights.end(),
            [](const auto& x, const auto& y) { return x.first > y.first || (x.first == y.first && x.second < y.second); });

  LarmorResult out;
  out.omega = std::abs(es.eigenvalues()[weights[0].second] - es.eigenvalues()[weights[1].second]);
  out.overlap = weights[1].first;
  out.ambiguous = out.overlap < 0.7;
  return out;
}

FrequencyTrace frequency_trace(const std::vector<Vector3>& sites, const FieldGeometry& geometry,
                               const std::vector<double>& times, int m_s,
                               const PhysicalConstants& pc) {
  FrequencyTrace trace;
  trace.m_s = m_s;
  trace.times = times;
  trace.sites = sites;
  trace.frequency_hz.assign(sites.size(), std::vector<double>(times.size()));
  trace.ambiguous.assign(sites.size(), std::vector<bool>(times.size()));
  for (std::size_t i = 0; i < sites.size(); ++i) {
    for (std::size_t k = 0; k < times.size(); ++k) {
      const LarmorResult r = larmor_frequency(sites[i], geometry, times[k], m_s, pc);
      trace.frequency_hz[i][k] = hz(r.omega);
      trace.ambiguous[i][k] = r.ambiguous;
    }
  }
  return trace;
}

void write_frequency_trace(std::ostream& out, const FrequencyTrace& trace) {
  csv::Writer w(out);
  std::size_t flagged = 0;
  std::string flagged_list;
  for (std::size_t i = 0; i < trace.sites.size(); ++i) {
    for (std::size_t k = 0; k < trace.times.size(); ++k) {
      if (!trace.ambiguous[i][k]) continue;
      ++flagged;
      if (flagged <= 50) {
        flagged_list += " (" + std::to_string(i) + "," + std::to_string(k) + ")";
      }
    }
  }
  w.comment("nuclear precession frequencies, m_s = " + std::to_string(trace.m_s));
  w.comment("flagged_level_assignments: " + std::to_string(flagged) + flagged_list);
  w.header({"spin_index", "r_nm", "time_s", "m_s", "frequency_hz"});
  for (std::size_t i = 0; i < trace.sites.size(); ++i) {
    const double r = trace.sites[i].norm();
    for (std::size_t k = 0; k < trace.times.size(); ++k) {
      w.row({static_cast<double>(i), r, trace.times[k], static_cast<double>(trace.m_s),
             trace.frequency_hz[i][k]});
    }
  }
}

}  // namespace nvrot
