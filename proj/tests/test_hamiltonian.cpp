#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <sstream>

#include "nvrot/csv.hpp"
#include "nvrot/error.hpp"
#include "nvrot/hamiltonian.hpp"

using namespace nvrot;
using cd = std::complex<double>;

namespace {

// Electron (+1, 0, -1) x nucleus (up, down) Hamiltonian written out by hand.
struct OneSpinOracle {
  Eigen::Matrix3cd sx, sy, sz;
  Eigen::Matrix2cd ix, iy, iz;

  OneSpinOracle() {
    const double r = 1.0 / std::sqrt(2.0);
    const cd i(0.0, 1.0);
    sx << 0, r, 0, r, 0, r, 0, r, 0;
    sy << 0, -i * r, 0, i * r, 0, -i * r, 0, i * r, 0;
    sz << 1, 0, 0, 0, 0, 0, 0, 0, -1;
    ix << 0, 0.5, 0.5, 0;
    iy << 0, -0.5 * i, 0.5 * i, 0;
    iz << 0.5, 0, 0, -0.5;
  }

  static Eigen::MatrixXcd k(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (int r = 0; r < a.rows(); ++r)
      for (int c = 0; c < a.cols(); ++c) out.block(r * b.rows(), c * b.cols(), b.rows(), b.cols()) = a(r, c) * b;
    return out;
  }

  Eigen::MatrixXcd hamiltonian(const Vector3& b, const Vector3& site) const {
    const auto& pc = constants();
    const Eigen::Matrix3cd s[3] = {sx, sy, sz};
    const Eigen::Matrix2cd n[3] = {ix, iy, iz};
    const Eigen::Matrix2cd one2 = Eigen::Matrix2cd::Identity();
    const Eigen::Matrix3cd one3 = Eigen::Matrix3cd::Identity();
    Eigen::MatrixXcd h = k(pc.d_zfs * sz * sz, one2);
    const Vector3 u = site.normalized();
    const double pref = pc.hyperfine_prefactor / std::pow(site.norm(), 3);
    for (int a = 0; a < 3; ++a) {
      h += pc.gamma_e * b[a] * k(s[a], one2) + pc.gamma_n * b[a] * k(one3, n[a]);
      for (int c = 0; c < 3; ++c) {
        const double acoef = pref * ((a == c ? 1.0 : 0.0) - 3.0 * u[a] * u[c]);
        h += acoef * k(s[a], n[c]);
      }
    }
    return h;
  }

  // Splitting of the two eigenstates with the largest weight on electron level m.
  double splitting(const Vector3& b, const Vector3& site, int m) const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hamiltonian(b, site));
    const int e = 1 - m;  // basis index of m
    std::vector<std::pair<double, int>> w;
    for (int j = 0; j < 6; ++j) {
      const double weight = std::norm(es.eigenvectors()(2 * e, j)) + std::norm(es.eigenvectors()(2 * e + 1, j));
      w.push_back({weight, j});
    }
    std::sort(w.rbegin(), w.rend());
    return std::abs(es.eigenvalues()[w[0].second] - es.eigenvalues()[w[1].second]);
  }
};

}  // namespace

TEST(Larmor, BareFrequencyAtThirtyGauss) {
  FieldGeometry g;
  g.b_gauss = 30.0;
  const auto res = larmor_frequency(Vector3(6.0, 0.0, 3.0), g, 0.0, 0);
  EXPECT_NEAR(hz(res.omega), 32.1e3, 0.1e3);
  EXPECT_NEAR(hz(res.omega), 1071.5 * 30.0, 1.0);
  EXPECT_FALSE(res.ambiguous);
}

TEST(Larmor, MatchesHandBuiltDiagonalisation) {
  const OneSpinOracle oracle;
  const Vector3 site(0.4, -0.3, 0.6);
  for (double theta : {0.0, 0.4, 1.1}) {
    FieldGeometry g;
    g.b_gauss = 25.0;
    g.theta_b = theta;
    g.phi_b = 0.3;
    const Vector3 b = g.nv_field(0.0);
    for (int m : {0, -1, 1}) {
      const double exact = oracle.splitting(b, site, m);
      const auto res = larmor_frequency(site, g, 0.0, m);
      EXPECT_NEAR(res.omega, exact, 1e-7 * exact) << "theta " << theta << " m " << m;
    }
  }
}

class GTensor : public ::testing::TestWithParam<std::tuple<double, int>> {};

TEST_P(GTensor, EffectiveFieldAgreesWithDiagonalisation) {
  const auto [r, m] = GetParam();
  const OneSpinOracle oracle;
  const Vector3 site = r * Vector3(0.5, 0.3, 0.81).normalized();
  FieldGeometry g;
  g.b_gauss = 20.0;
  g.theta_b = rad(60.0);
  const Vector3 b = g.nv_field(0.0);
  const double exact = oracle.splitting(b, site, m);
  const auto eff = effective_field(b, site, m);
  EXPECT_EQ(eff.m_s, m);
  const double approx = constants().gamma_n * eff.vector.norm();
  // the neglected terms are second order in A / (gamma_e B) * (gamma_e B / D)
  EXPECT_NEAR(approx, exact, 2e-3 * exact) << "r " << r;
}

INSTANTIATE_TEST_SUITE_P(Sites, GTensor,
                         ::testing::Combine(::testing::Values(0.6, 1.0, 2.0),
                                            ::testing::Values(0, -1)));

TEST(GTensor, ReducesToIdentityWithoutCoupling) {
  const Tensor3 g = effective_g_tensor(Tensor3::Zero(), -1);
  EXPECT_LT((g - Tensor3::Identity()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(GTensor, ZRowUntouched) {
  const Tensor3 a = hyperfine_tensor(Vector3(0.3, 0.2, 0.5));
  const Tensor3 g = effective_g_tensor(a, 0);
  EXPECT_NEAR(g(2, 0), 0.0, 1e-15);
  EXPECT_NEAR(g(2, 1), 0.0, 1e-15);
  EXPECT_NEAR(g(2, 2), 1.0, 1e-15);
  const double k = 2.0 * constants().gamma_e / (constants().gamma_n * constants().d_zfs);
  EXPECT_NEAR(g(0, 1), -k * a(0, 1), 1e-12);
}

TEST(Geometry, TimeIndependenceCases) {
  FieldGeometry g;
  g.b_gauss = 10.0;
  g.theta_b = 0.3;
  EXPECT_TRUE(g.time_independent());
  g.omega_rot = 1000.0;
  EXPECT_FALSE(g.time_independent());
  g.theta_b = 0.0;
  EXPECT_TRUE(g.time_independent());
}

TEST(Geometry, RotatingFieldKeepsMagnitudeAndCone) {
  FieldGeometry g;
  g.b_gauss = 15.0;
  g.theta_b = 0.5;
  g.omega_rot = angular(3000.0);
  for (double t : {0.0, 1e-5, 7.3e-5}) {
    const Vector3 b = g.nv_field(t);
    EXPECT_NEAR(b.norm(), 15.0, 1e-12);
    EXPECT_NEAR(b.z(), 15.0 * std::cos(0.5), 1e-12);
  }
  // period 1/f
  EXPECT_LT((g.nv_field(0.0) - g.nv_field(1.0 / 3000.0)).norm(), 1e-10);
  // derivative against a central difference
  const double t = 2e-5, h = 1e-9;
  const Vector3 fd = (g.nv_field(t + h) - g.nv_field(t - h)) / (2 * h);
  EXPECT_LT((fd - g.nv_field_rate(t)).norm(), 1e-5 * g.nv_field_rate(t).norm());
}

TEST(Geometry, TiltedRotationAxis) {
  FieldGeometry g;
  g.delta_theta = rad(4.0);
  const Vector3 n = g.rotation_axis();
  EXPECT_NEAR(n.norm(), 1.0, 1e-15);
  EXPECT_NEAR(std::acos(n.z()), rad(4.0), 1e-12);
}

TEST(Geometry, NuclearDriveCarriesPseudoField) {
  FieldGeometry g;
  g.b_gauss = 20.0;
  g.omega_rot = angular(5000.0);
  const Vector3 hn = g.nuclear_drive(0.0);
  EXPECT_NEAR(hn.z(), constants().gamma_n * 20.0 + angular(5000.0), 1e-9);
  FieldGeometry s;
  s.b_gauss = 20.0;
  s.nuclear_offset_gauss = pseudo_field(angular(5000.0));
  EXPECT_NEAR((s.nuclear_drive(0.0) - hn).norm(), 0.0, 1e-9);
}

TEST(Cluster, RotatingHamiltonianIsHermitian) {
  ClusterHamiltonian c({Vector3(0.5, 0.1, 0.3), Vector3(-0.2, 0.7, 0.4)});
  FieldGeometry g;
  g.b_gauss = 20.0;
  g.theta_b = 0.6;
  g.omega_rot = angular(4000.0);
  const CMatrix h = c.rotating(g, 3.3e-5);
  EXPECT_EQ(h.rows(), 12);
  EXPECT_LT((h - h.adjoint()).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Cluster, LabMatchesHandBuiltOneSpin) {
  const OneSpinOracle oracle;
  const Vector3 site(0.3, 0.4, -0.5);
  ClusterHamiltonian c({site});
  const Vector3 b(3.0, -2.0, 11.0);
  const CMatrix diff = c.lab(b) - oracle.hamiltonian(b, site);
  EXPECT_LT(diff.cwiseAbs().maxCoeff(), 1e-12 * constants().d_zfs);
}

TEST(Cluster, AzimuthalCovariance) {
  ClusterHamiltonian c({Vector3(0.5, 0.1, 0.3)});
  FieldGeometry g;
  g.b_gauss = 20.0;
  g.theta_b = 0.7;
  g.omega_rot = angular(2500.0);
  const double alpha = 0.9, t = 1.7e-5;
  FieldGeometry shifted = g;
  shifted.phi_b += alpha;
  const CMatrix a = c.rotating(shifted, t);
  const CMatrix b = c.rotating(g, t + alpha / g.omega_rot);
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-9 * a.cwiseAbs().maxCoeff());
}

TEST(Cluster, RejectsOversizedCluster) {
  std::vector<Vector3> sites(13, Vector3(1, 0, 0));
  EXPECT_THROW(ClusterHamiltonian c(sites), Error);
}

TEST(ElectronFrame, DiagonalisesElectronHamiltonian) {
  FieldGeometry g;
  g.b_gauss = 40.0;
  g.theta_b = 0.8;
  g.omega_rot = angular(5000.0);
  const auto f = electron_frame(g.electron_drive(0.0), Vector3::Zero());
  const auto s = spin_operators(1.0);
  CMatrix h = constants().d_zfs * s.sz * s.sz;
  const Vector3 he = g.electron_drive(0.0);
  for (int a = 0; a < 3; ++a) h += he[a] * s.component(a);
  const Eigen::Matrix3cd v = f.vectors;
  EXPECT_LT((v.adjoint() * v - Eigen::Matrix3cd::Identity()).cwiseAbs().maxCoeff(), 1e-12);
  const Eigen::Matrix3cd d = v.adjoint() * h * v;
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(d(i, i).real(), f.energy[i], 1e-6 * constants().d_zfs);
    EXPECT_GT(v(i, i).real(), 0.9);
    EXPECT_NEAR(v(i, i).imag(), 0.0, 1e-12);
  }
  EXPECT_LT(std::abs(f.energy[1]), 1e-3 * constants().d_zfs);
}

TEST(ElectronFrame, IndexMapping) {
  EXPECT_EQ(electron_index(1), 0);
  EXPECT_EQ(electron_index(0), 1);
  EXPECT_EQ(electron_index(-1), 2);
  try {
    electron_index(2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "hamiltonian.invalid_argument");
  }
}

TEST(FrequencyTrace, CsvColumnsAndFlags) {
  FieldGeometry g;
  g.b_gauss = 20.0;
  g.theta_b = 0.4;
  g.omega_rot = angular(5000.0);
  const std::vector<Vector3> sites = {Vector3(0.5, 0.2, 0.6), Vector3(1.2, -0.4, 0.3)};
  const auto trace = frequency_trace(sites, g, {0.0, 5e-5, 1e-4, 2e-4}, -1);
  ASSERT_EQ(trace.frequency_hz.size(), 2u);
  ASSERT_EQ(trace.frequency_hz[0].size(), 4u);
  // the trace is periodic in the rotation period
  EXPECT_NEAR(trace.frequency_hz[1][0], trace.frequency_hz[1][3], 1e-6 * trace.frequency_hz[1][0]);
  std::stringstream out;
  write_frequency_trace(out, trace);
  const auto table = csv::read(out);
  EXPECT_EQ(table.rows.size(), 8u);
  EXPECT_EQ(table.columns.size(), 5u);
  EXPECT_NO_THROW(table.column("frequency_hz"));
  bool flagged_comment = false;
  for (const auto& c : table.comments) flagged_comment |= c.find("flagged_level_assignments") != std::string::npos;
  EXPECT_TRUE(flagged_comment);
}
