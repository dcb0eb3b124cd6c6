#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <random>

#include "nvrot/error.hpp"
#include "nvrot/propagation.hpp"

using namespace nvrot;
using cd = std::complex<double>;

namespace {

CMatrix expm_eig(const CMatrix& h, double dt) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  const Eigen::VectorXcd phase = (-cd(0.0, 1.0) * dt * es.eigenvalues().cast<cd>()).array().exp();
  return es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
}

CMatrix random_hermitian(int n, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> d;
  CMatrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = cd(d(rng), d(rng));
  return scale * 0.5 * (a + a.adjoint());
}

// Lab-frame midpoint product with a very small step; second order, so the
// error is ~ (dt_ref / dt_default)^2 below the default-step midpoint error.
CMatrix reference_propagator(const ClusterHamiltonian& c, const FieldGeometry& g, double t0,
                             double t1, int steps) {
  const double dt = (t1 - t0) / steps;
  CMatrix u = CMatrix::Identity(c.dim(), c.dim());
  for (int k = 0; k < steps; ++k) u = expm_eig(c.rotating(g, t0 + (k + 0.5) * dt), dt) * u;
  return u;
}

FieldGeometry rotating_geometry() {
  FieldGeometry g;
  g.b_gauss = 20.0;
  g.theta_b = rad(30.0);
  g.omega_rot = angular(5000.0);
  g.delta_theta = rad(0.2);
  return g;
}

}  // namespace

TEST(Expm, MatchesEigendecomposition) {
  std::mt19937_64 rng(11);
  for (int n : {2, 3, 6, 12, 24}) {
    for (double scale : {1e-3, 0.3, 5.0, 200.0}) {
      const CMatrix h = random_hermitian(n, scale, rng);
      const CMatrix u = expm_hermitian(h, 0.7);
      EXPECT_LT((u - expm_eig(h, 0.7)).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, scale * n))
          << "n " << n << " scale " << scale;
      EXPECT_LT(max_unitarity_error(u), 1e-12);
    }
  }
}

TEST(DefaultStep, RuleAndStaticLimit) {
  FieldGeometry g = rotating_geometry();
  const double fl = 1071.5 * 20.0 + 5000.0;
  EXPECT_NEAR(default_dt_max(g), std::min(1.0 / (64 * 5000.0), 1.0 / (64 * fl)), 1e-15);
  g.omega_rot = 0.0;
  EXPECT_TRUE(std::isinf(default_dt_max(g)));
}

TEST(Schedule, CheckpointsOnStepBoundaries) {
  const FieldGeometry g = rotating_geometry();
  PropagationSettings s;
  s.dt_max = 1e-6;
  FrameSchedule sched(g, {0.0, 3.5e-6, 1e-5, 1.05e-5}, s);
  EXPECT_EQ(sched.steps_to(0), 0u);
  double t = 0.0;
  for (std::size_t k = 1; k < sched.checkpoints().size(); ++k) {
    for (std::size_t i = sched.steps_to(k - 1); i < sched.steps_to(k); ++i) {
      EXPECT_NEAR(sched.steps()[i].t0, t, 1e-18);
      EXPECT_LE(sched.steps()[i].dt, 1e-6 * (1 + 1e-12));
      t += sched.steps()[i].dt;
    }
    EXPECT_NEAR(t, sched.checkpoints()[k], 1e-18);
  }
}

TEST(Schedule, StaticGeometryUsesOneStepPerInterval) {
  FieldGeometry g;
  g.b_gauss = 20.0;
  g.theta_b = 0.5;
  FrameSchedule sched(g, {0.0, 1e-5, 4e-5}, {});
  EXPECT_EQ(sched.steps().size(), 2u);
  // relative phase of a static frame is linear in time
  const auto& p1 = sched.relative_phase(1);
  const auto& p2 = sched.relative_phase(2);
  EXPECT_NEAR(p2[2], 4.0 * p1[2], 1e-9 * std::abs(p2[2]));
}

TEST(Propagate, StaticMatchesExactExponential) {
  ClusterHamiltonian c({Vector3(0.4, 0.2, 0.5), Vector3(-0.6, 0.3, 0.9)});
  FieldGeometry g;
  g.b_gauss = 20.0;
  g.theta_b = 0.5;
  const double t = 2.3e-5;
  const CMatrix u = propagate(c, g, 0.0, t);
  const CMatrix exact = expm_eig(c.rotating(g, 0.0), t);
  EXPECT_LT((u - exact).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT(max_unitarity_error(u), 1e-10);
}

TEST(Propagate, RotatingMatchesFineReference) {
  ClusterHamiltonian c({Vector3(0.5, -0.3, 0.7)});
  const FieldGeometry g = rotating_geometry();
  const double t0 = 1e-5, t1 = 2e-5;
  const CMatrix ref = reference_propagator(c, g, t0, t1, 40000);
  for (Integrator integ : {Integrator::Magnus4}) {
    PropagationSettings s;
    s.integrator = integ;
    const CMatrix u = propagate(c, g, t0, t1, s);
    EXPECT_LT((u - ref).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT(max_unitarity_error(u), 1e-10);
  }
}

TEST(Propagate, MidpointConvergesSecondOrder) {
  ClusterHamiltonian c({Vector3(0.5, -0.3, 0.7)});
  const FieldGeometry g = rotating_geometry();
  PropagationSettings fine{1e-8, Integrator::Magnus4};
  const CMatrix ref = propagate(c, g, 0.0, 2e-5, fine);
  PropagationSettings a{4e-7, Integrator::Midpoint};
  PropagationSettings b{2e-7, Integrator::Midpoint};
  const double ea = (propagate(c, g, 0.0, 2e-5, a) - ref).cwiseAbs().maxCoeff();
  const double eb = (propagate(c, g, 0.0, 2e-5, b) - ref).cwiseAbs().maxCoeff();
  EXPECT_GT(ea / eb, 3.0);
  EXPECT_LT(ea / eb, 5.0);
}

TEST(Propagate, StepHalvingConverges) {
  ClusterHamiltonian c({Vector3(0.3, 0.3, 0.4), Vector3(0.8, -0.1, 0.2)});
  const FieldGeometry g = rotating_geometry();
  const auto conv = propagate_converged(c, g, 0.0, 5e-5, {}, 1e-6);
  EXPECT_LT(conv.change, 1e-6);
  EXPECT_LT(max_unitarity_error(conv.unitary), 1e-10);
  try {
    propagate_converged(c, g, 0.0, 5e-5, {1e-5, Integrator::Midpoint}, 1e-15, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "echo.convergence");
  }
}

TEST(Propagate, CompositionOverSplitInterval) {
  ClusterHamiltonian c({Vector3(0.5, -0.3, 0.7)});
  const FieldGeometry g = rotating_geometry();
  PropagationSettings s{2e-7, Integrator::Magnus4};
  const CMatrix whole = propagate(c, g, 0.0, 3e-5, s);
  const CMatrix split = propagate(c, g, 1e-5, 3e-5, s) * propagate(c, g, 0.0, 1e-5, s);
  EXPECT_LT((whole - split).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(Conditional, BlocksAreUnitary) {
  ClusterHamiltonian c({Vector3(0.3, 0.3, 0.4), Vector3(0.8, -0.1, 0.2), Vector3(-0.5, 0.4, 0.6)});
  const FieldGeometry g = rotating_geometry();
  FrameSchedule sched(g, {0.0, 2e-5, 6e-5}, {});
  const auto props = conditional_propagators(c, sched);
  ASSERT_EQ(props.size(), 3u);
  for (const auto& p : props) {
    EXPECT_EQ(p.zero.rows(), 8);
    EXPECT_LT(max_unitarity_error(p.zero), 1e-10);
    EXPECT_LT(max_unitarity_error(p.minus), 1e-10);
  }
  const auto full = dressed_propagators(c, sched);
  ASSERT_EQ(full.size(), 3u);
  for (const auto& u : full) EXPECT_LT(max_unitarity_error(u), 1e-10);
}

TEST(Pulses, RotationsOnZeroMinusPair) {
  const auto pi = pulse_rotation(PulseKind::Pi);
  EXPECT_NEAR(std::abs(pi(1, 0)), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(pi(0, 0)), 0.0, 1e-15);
  const auto half = pulse_rotation(PulseKind::HalfPi, 0.4);
  EXPECT_NEAR(std::norm(half(0, 0)), 0.5, 1e-15);
  EXPECT_LT((half.adjoint() * half - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff(), 1e-15);
  const CMatrix p = pulse_operator(PulseKind::Pi, 0.0, 4);
  EXPECT_EQ(p.rows(), 12);
  EXPECT_LT(max_unitarity_error(p), 1e-15);
  // +1 level untouched
  EXPECT_NEAR(std::abs(p(0, 0) - 1.0), 0.0, 1e-15);
}

TEST(Integrators, NamesRoundTrip) {
  EXPECT_EQ(integrator_from_string(to_string(Integrator::Magnus4)), Integrator::Magnus4);
  EXPECT_EQ(integrator_from_string(to_string(Integrator::Midpoint)), Integrator::Midpoint);
  EXPECT_THROW(integrator_from_string("rk4"), Error);
}
