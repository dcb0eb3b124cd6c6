#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "nvrot/analysis.hpp"
#include "nvrot/csv.hpp"
#include "nvrot/error.hpp"

using namespace nvrot;
using cd = std::complex<double>;

namespace {

EchoResult synthetic(double f_rot, double t_max, double step, double scale, bool modulated) {
  EchoResult r;
  for (double t = 0.0; t <= t_max + 1e-12; t += step) {
    const double c = std::cos(std::numbers::pi * f_rot * t / 2.0);
    r.tau.push_back(t);
    r.signal.push_back(scale * std::exp(-t / 20e-3) * (modulated ? c * c : 1.0));
    r.spread.push_back(0.0);
  }
  return r;
}

// Nuclear splitting in electron level m from a hand-written one-spin
// Hamiltonian, minus the bare Larmor frequency.
double exact_shift(const Vector3& site, const Vector3& b, int m) {
  const auto& pc = constants();
  const double r2 = 1.0 / std::sqrt(2.0);
  const cd i(0.0, 1.0);
  Eigen::Matrix3cd s[3];
  s[0] << 0, r2, 0, r2, 0, r2, 0, r2, 0;
  s[1] << 0, -i * r2, 0, i * r2, 0, -i * r2, 0, i * r2, 0;
  s[2] << 1, 0, 0, 0, 0, 0, 0, 0, -1;
  Eigen::Matrix2cd n[3];
  n[0] << 0, 0.5, 0.5, 0;
  n[1] << 0, -0.5 * i, 0.5 * i, 0;
  n[2] << 0.5, 0, 0, -0.5;
  auto k = [](const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::MatrixXcd o(a.rows() * b.rows(), a.cols() * b.cols());
    for (int r = 0; r < a.rows(); ++r)
      for (int c = 0; c < a.cols(); ++c) o.block(r * b.rows(), c * b.cols(), b.rows(), b.cols()) = a(r, c) * b;
    return o;
  };
  const Eigen::Matrix2cd e2 = Eigen::Matrix2cd::Identity();
  const Eigen::Matrix3cd e3 = Eigen::Matrix3cd::Identity();
  const Vector3 u = site.normalized();
  const double pref = pc.hyperfine_prefactor / std::pow(site.norm(), 3);
  Eigen::MatrixXcd h = k(pc.d_zfs * s[2] * s[2], e2);
  for (int a = 0; a < 3; ++a) {
    h += pc.gamma_e * b[a] * k(s[a], e2) + pc.gamma_n * b[a] * k(e3, n[a]);
    for (int c = 0; c < 3; ++c) h += pref * ((a == c) - 3.0 * u[a] * u[c]) * k(s[a], n[c]);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  const int e = 1 - m;
  std::vector<std::pair<double, int>> w;
  for (int j = 0; j < 6; ++j) {
    w.push_back({std::norm(es.eigenvectors()(2 * e, j)) + std::norm(es.eigenvectors()(2 * e + 1, j)), j});
  }
  std::sort(w.rbegin(), w.rend());
  return std::abs(es.eigenvalues()[w[0].second] - es.eigenvalues()[w[1].second]) -
         pc.gamma_n * b.norm();
}

Vector3 direction(double theta, double phi) {
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

}  // namespace

TEST(Revivals, ConstructedModulation) {
  const double f = 5000.0, step = 2e-6;
  const auto r = synthetic(f, 1.8e-3, step, 1.0, true);
  const auto rev = detect_revivals(r, f);
  ASSERT_EQ(rev.size(), 4u);
  for (std::size_t k = 0; k < rev.size(); ++k) {
    EXPECT_NEAR(rev[k].time, (k + 1) * 2.0 / f, step / 2);
    EXPECT_NEAR(rev[k].offset, 0.0, step / 2);
    EXPECT_GT(rev[k].prominence, 0.0);
  }
}

TEST(Revivals, InvariantUnderVerticalScaling) {
  const double f = 5000.0;
  const auto a = detect_revivals(synthetic(f, 1.8e-3, 2e-6, 1.0, true), f);
  const auto b = detect_revivals(synthetic(f, 1.8e-3, 2e-6, 0.013, true), f);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a[k].time, b[k].time);
}

TEST(Revivals, FlatDecayHasNone) {
  EXPECT_TRUE(detect_revivals(synthetic(5000.0, 1.8e-3, 2e-6, 1.0, false), 5000.0).empty());
}

TEST(Revivals, NeedsThreePeriods) {
  try {
    detect_revivals(synthetic(5000.0, 0.5e-3, 2e-6, 1.0, true), 5000.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "analysis.invalid_argument");
  }
  EXPECT_THROW(detect_revivals(synthetic(5000.0, 1.8e-3, 2e-6, 1.0, true), 0.0), Error);
}

TEST(Revivals, CsvColumns) {
  std::stringstream ss;
  write_revivals_csv(ss, {{4e-4, 0.8, 0.0, 0.5}});
  const auto t = csv::read(ss);
  EXPECT_EQ(t.columns, (std::vector<std::string>{"time_s", "amplitude", "offset_from_2T_rot"}));
}

TEST(DipolarScaling, LegendreP2) {
  EXPECT_NEAR(dipolar_scaling_factor(rad(54.7356)), 0.0, 1e-6);
  EXPECT_NEAR(dipolar_scaling_factor(kMagicAngle), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(dipolar_scaling_factor(0.0), 1.0);
  EXPECT_NEAR(dipolar_scaling_factor(std::numbers::pi / 2), -0.5, 1e-15);
}

TEST(Hop, VanishingCouplingGivesZero) {
  const auto h = magic_angle_hop(Vector3(1e5, 2e5, 3e5), 40.0, kMagicAngle, -1);
  EXPECT_LT(std::abs(h.mean), 1e-9);
  EXPECT_LT(std::abs(h.first_order_mean), 1e-9);
}

TEST(Hop, PoleIsAzimuthIndependent) {
  const Vector3 site(0.7, -0.4, 0.5);
  const auto h = magic_angle_hop(site, 40.0, 0.0, -1);
  for (int i = 1; i < 3; ++i) EXPECT_NEAR(h.shift[i], h.shift[0], 1e-9 * std::abs(h.shift[0]));
  EXPECT_NEAR(h.mean, h.shift[0], 1e-9 * std::abs(h.shift[0]));
}

TEST(Hop, ExactShiftsAgreeWithDiagonalisation) {
  // The effective-field model drops terms of order (gamma_e B / D)^2 |A| and |A|^2 / D.
  const auto& pc = constants();
  const Vector3 site = 1.0 * Vector3(0.4, 0.5, 0.77).normalized();
  const double a_norm = hyperfine_tensor(site).norm();
  const double x = pc.gamma_e * 40.0 / pc.d_zfs;
  const double budget = x * x * a_norm + a_norm * a_norm / pc.d_zfs;
  for (int m : {0, -1}) {
    const auto h = magic_angle_hop(site, 40.0, kMagicAngle, m);
    double oracle_mean = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double s = exact_shift(site, 40.0 * direction(kMagicAngle, h.azimuth[i]), m);
      oracle_mean += s / 3.0;
      EXPECT_NEAR(h.shift[i], s, budget);
    }
    EXPECT_NEAR(h.mean, oracle_mean, budget);
  }
}

TEST(Hop, FirstOrderAnisotropyCancelsForZeroLevel) {
  for (double r : {1.0, 1.5, 2.0, 2.5}) {
    for (const Vector3& dir : {Vector3(0.3, 0.5, 0.8), Vector3(-0.9, 0.2, 0.1), Vector3(0.1, -0.2, -0.97)}) {
      const auto h = magic_angle_hop(r * dir.normalized(), 40.0, kMagicAngle, 0);
      EXPECT_LE(std::abs(h.anisotropic_mean), 1e-2 * h.anisotropic_max);
    }
  }
}

TEST(Hop, ConditionedLevelKeepsRankOneResidual) {
  // For m_s = -1 the m_s A z term is linear in field direction; three azimuths
  // at the magic angle leave m_s cos(theta) A_zz, plus the isotropic part.
  const Vector3 site = 1.0 * Vector3(0.4, 0.5, 0.77).normalized();
  const Tensor3 a = hyperfine_tensor(site);
  const auto h = magic_angle_hop(site, 40.0, kMagicAngle, -1);
  const double k = -constants().gamma_e / constants().d_zfs;  // (2 - 3|m_s|) gamma_e / D
  const double iso = -k * 40.0 * (a(0, 0) + a(1, 1)) / 3.0;
  EXPECT_NEAR(h.isotropic, iso, 1e-9 * std::abs(iso));
  const double predicted = -std::cos(kMagicAngle) * a(2, 2) + iso;
  EXPECT_NEAR(h.first_order_mean, predicted, 1e-9 * std::abs(a(2, 2)));
}

TEST(Hop, ResidualIsSecondOrderInCoupling) {
  // anisotropic residual of the exact mean shrinks faster than the shifts
  const Vector3 dir = Vector3(0.35, -0.6, 0.72).normalized();
  double previous = 0.0;
  for (double r : {1.0, 2.0, 4.0, 8.0}) {
    const auto h = magic_angle_hop(r * dir, 40.0, kMagicAngle, 0);
    double max_shift = 0.0;
    for (double s : h.shift) max_shift = std::max(max_shift, std::abs(s));
    const double ratio = std::abs(h.mean - h.isotropic) / max_shift;
    if (previous > 0.0) {
      EXPECT_LT(ratio, 0.25 * previous) << "r " << r;
    }
    previous = ratio;
  }
}

TEST(T2Map, SmallGridIsDeterministic) {
  T2MapSettings s;
  s.b_gauss = 20.0;
  s.bath = {0.011, 1.4, 0.25};
  s.seeds = {1, 2};
  s.max_revivals = 6;
  const std::vector<double> theta = {0.0, rad(30.0)};
  const std::vector<double> omega = {0.0, angular(5000.0)};
  const auto a = build_t2_map(theta, omega, s);
  const auto b = build_t2_map(theta, omega, s);
  ASSERT_EQ(a.cells.size(), 4u);
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    EXPECT_EQ(a.cells[i].signal, b.cells[i].signal);
    EXPECT_FALSE(a.cells[i].status.empty());
    EXPECT_EQ(a.cells[i].fit.t2_eff, b.cells[i].fit.t2_eff);
  }
  EXPECT_EQ(a.at(1, 0).theta_b, theta[1]);
  EXPECT_EQ(a.at(1, 0).omega_rot, 0.0);
  // on-axis field: revival samples see only the phenomenological envelope
  for (std::size_t j = 0; j < omega.size(); ++j) {
    EXPECT_NEAR(a.at(0, j).fit.t2_eff, 150e-6, 15e-6);
  }
  std::stringstream ss;
  write_t2_map_csv(ss, a);
  const auto t = csv::read(ss);
  EXPECT_EQ(t.rows.size(), 4u);
  EXPECT_EQ(t.columns,
            (std::vector<std::string>{"theta_deg", "f_rot_hz", "t2_us", "stretch_n", "residual", "status"}));
}

TEST(T2Map, RejectsEmptyGrid) {
  T2MapSettings s;
  s.seeds = {1};
  EXPECT_THROW(build_t2_map({}, {0.0}, s), Error);
  s.seeds.clear();
  EXPECT_THROW(build_t2_map({0.0}, {0.0}, s), Error);
}
