#include "nvrot/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include "nvrot/error.hpp"

namespace nvrot {

using cd = std::complex<double>;

namespace {

constexpr double kSqrt3 = std::numbers::sqrt3;
// Gauss-Legendre nodes and the CF4 mixing weights
constexpr double kNode1 = 0.5 - kSqrt3 / 6.0;
constexpr double kNode2 = 0.5 + kSqrt3 / 6.0;
constexpr double kWeight1 = 0.25 - kSqrt3 / 6.0;
constexpr double kWeight2 = 0.25 + kSqrt3 / 6.0;

template <typename M>
M expm_impl(const M& h, double dt) {
  const Eigen::Index n = h.rows();
  if (n == 2) {
    const double h0 = 0.5 * (h(0, 0).real() + h(1, 1).real());
    const double hz = 0.5 * (h(0, 0).real() - h(1, 1).real());
    const cd b = h(0, 1);
    const double norm = std::sqrt(hz * hz + std::norm(b));
    const double c = std::cos(norm * dt);
    const double s = norm > 0.0 ? std::sin(norm * dt) / norm : dt;
    M u(2, 2);
    u(0, 0) = cd(c, -s * hz);
    u(1, 1) = cd(c, s * hz);
    u(0, 1) = cd(0.0, -s) * b;
    u(1, 0) = cd(0.0, -s) * std::conj(b);
    return std::polar(1.0, -h0 * dt) * u;
  }
  const double norm = (h * dt).cwiseAbs().colwise().sum().maxCoeff();
  if (norm > 4.0) {
    Eigen::SelfAdjointEigenSolver<M> es(h);
    const auto phases = (es.eigenvalues() * (-dt)).unaryExpr([](double x) { return std::polar(1.0, x); });
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
  }
  // Scaled Taylor series (error ~ 0.25^13 / 13!) followed by squaring.
  int squarings = 0;
  double scaled = norm;
  while (scaled > 0.25) {
    scaled *= 0.5;
    ++squarings;
  }
  const M a = h * cd(0.0, -dt / std::ldexp(1.0, squarings));
  const M id = M::Identity(n, n);
  M u = id;
  for (int k = 12; k >= 1; --k) u = id + a * u / static_cast<double>(k);
  for (int k = 0; k < squarings; ++k) u = u * u;
  return u;
}

struct ClusterCache {
  std::array<CMatrix, 3> coupling;  // sum_i sum_b A_i(a, b) I_ib
  std::array<CMatrix, 3> total_spin;
  CMatrix dipolar;
};

ClusterCache make_cache(const ClusterHamiltonian& cluster) {
  const Eigen::Index n = cluster.nuclear_dim();
  ClusterCache c;
  for (int a = 0; a < 3; ++a) {
    c.coupling[a] = CMatrix::Zero(n, n);
    c.total_spin[a] = CMatrix::Zero(n, n);
  }
  for (int i = 0; i < cluster.size(); ++i) {
    for (int b = 0; b < 3; ++b) {
      c.total_spin[b] += cluster.nuclear_spin(i, b);
      for (int a = 0; a < 3; ++a) {
        c.coupling[a] += cluster.hyperfine()[i](a, b) * cluster.nuclear_spin(i, b);
      }
    }
  }
  c.dipolar = cluster.nuclear_dipolar();
  return c;
}

CMatrix dressed_hamiltonian(const ClusterCache& c, const FrameNode& node) {
  const Eigen::Index n = c.dipolar.rows();
  const ElectronFrame& f = node.frame;
  CMatrix electron = -cd(0.0, 1.0) * f.connection;
  for (int m = 0; m < 3; ++m) electron(m, m) += f.energy[m] - f.energy[1];
  CMatrix nuclear = c.dipolar;
  for (int b = 0; b < 3; ++b) nuclear += node.nuclear_drive[b] * c.total_spin[b];
  CMatrix h = kron(electron, CMatrix::Identity(n, n)) + kron(CMatrix::Identity(3, 3), nuclear);
  for (int a = 0; a < 3; ++a) h += kron(f.spin[a], c.coupling[a]);
  return h;
}

template <typename M>
struct TypedCache {
  std::array<M, 3> coupling;
  std::array<M, 3> total_spin;
  M dipolar;

  explicit TypedCache(const ClusterCache& c) : dipolar(c.dipolar) {
    for (int a = 0; a < 3; ++a) {
      coupling[a] = c.coupling[a];
      total_spin[a] = c.total_spin[a];
    }
  }
};

// Second-order Schrieffer-Wolff reduction onto dressed level m (E_m removed).
template <typename M>
M conditional_hamiltonian(const TypedCache<M>& c, const FrameNode& node, int m) {
  const ElectronFrame& f = node.frame;
  const Eigen::Index n = c.dipolar.rows();
  const M id = M::Identity(n, n);
  auto block = [&](int p, int q) {
    M out = f.spin[0](p, q) * c.coupling[0] + f.spin[1](p, q) * c.coupling[1] +
            f.spin[2](p, q) * c.coupling[2];
    out -= cd(0.0, 1.0) * f.connection(p, q) * id;
    return out;
  };
  M h = block(m, m) + c.dipolar;
  for (int b = 0; b < 3; ++b) h += node.nuclear_drive[b] * c.total_spin[b];
  for (int q = 0; q < 3; ++q) {
    if (q == m) continue;
    const M v = block(m, q);
    h += (v * v.adjoint()) / (f.energy[m] - f.energy[q]);
  }
  return h;
}

template <typename H, typename Builder>
auto step_unitary(const FrameStep& step, Integrator integrator, Builder&& build) {
  if (step.node_count == 1) return expm_impl<H>(build(step.nodes[0]), step.dt);
  const H h1 = build(step.nodes[0]);
  const H h2 = build(step.nodes[1]);
  if (integrator == Integrator::Midpoint) {
    return expm_impl<H>(0.5 * (h1 + h2), step.dt);
  }
  const H left = kWeight1 * h1 + kWeight2 * h2;
  const H right = kWeight2 * h1 + kWeight1 * h2;
  return H(expm_impl<H>(left, step.dt) * expm_impl<H>(right, step.dt));
}

template <typename M>
std::vector<ConditionalPropagator> conditional_typed(const ClusterCache& cache,
                                                     const FrameSchedule& schedule) {
  const TypedCache<M> c(cache);
  const Eigen::Index n = cache.dipolar.rows();
  const std::size_t count = schedule.checkpoints().size();
  std::vector<ConditionalPropagator> out(count);
  M p0 = M::Identity(n, n);
  M p1 = M::Identity(n, n);
  std::size_t step = 0;
  const auto& steps = schedule.steps();
  for (std::size_t k = 0; k < count; ++k) {
    for (; step < schedule.steps_to(k); ++step) {
      const FrameStep& s = steps[step];
      p0 = step_unitary<M>(s, schedule.integrator(),
                           [&](const FrameNode& node) { return conditional_hamiltonian(c, node, 1); }) *
           p0;
      p1 = step_unitary<M>(s, schedule.integrator(),
                           [&](const FrameNode& node) { return conditional_hamiltonian(c, node, 2); }) *
           p1;
    }
    out[k].zero = p0;
    out[k].minus = p1;
  }
  return out;
}

double energy_quadrature(const FrameStep& step, int level, bool relative) {
  double sum = 0.0;
  for (int j = 0; j < step.node_count; ++j) {
    const auto& e = step.nodes[j].frame.energy;
    sum += relative ? e[level] - e[1] : e[level];
  }
  return step.dt * sum / step.node_count;
}

}  // namespace

const char* to_string(Integrator integrator) {
  return integrator == Integrator::Magnus4 ? "magnus4" : "midpoint";
}

Integrator integrator_from_string(const std::string& name) {
  if (name == "magnus4") return Integrator::Magnus4;
  if (name == "midpoint") return Integrator::Midpoint;
  throw Error("echo.invalid_argument", "unknown integrator '" + name + "'");
}

double default_dt_max(const FieldGeometry& geometry, const PhysicalConstants& pc) {
  if (geometry.time_independent()) return std::numeric_limits<double>::infinity();
  const double f_rot = std::abs(geometry.rotation_frequency_hz());
  const double f_larmor = hz(pc.gamma_n * geometry.b_gauss) + f_rot;
  return std::min(1.0 / (64.0 * f_rot), 1.0 / (64.0 * f_larmor));
}

CMatrix expm_hermitian(const CMatrix& h, double dt) { return expm_impl<CMatrix>(h, dt); }

FrameSchedule::FrameSchedule(const FieldGeometry& geometry, std::vector<double> checkpoints,
                             const PropagationSettings& settings, const PhysicalConstants& pc)
    : checkpoints_(std::move(checkpoints)), integrator_(settings.integrator), pc_(pc) {
  if (checkpoints_.empty()) throw Error("echo.invalid_argument", "schedule needs a checkpoint");
  for (std::size_t k = 1; k < checkpoints_.size(); ++k) {
    if (!(checkpoints_[k] >= checkpoints_[k - 1])) {
      throw Error("echo.invalid_argument", "checkpoints must be non-decreasing");
    }
  }
  const bool constant = geometry.time_independent();
  dt_max_ = settings.dt_max > 0.0 ? settings.dt_max : default_dt_max(geometry, pc_);

  auto node_at = [&](double t) {
    FrameNode node;
    node.frame = electron_frame(geometry.electron_drive(t, pc_),
                                pc_.gamma_e * geometry.nv_field_rate(t), pc_);
    node.nuclear_drive = geometry.nuclear_drive(t, pc_);
    return node;
  };

  steps_to_.assign(checkpoints_.size(), 0);
  phase_.assign(checkpoints_.size(), Eigen::Vector3d::Zero());
  reference_.assign(checkpoints_.size(), 0.0);
  frames_.reserve(checkpoints_.size());
  frames_.push_back(node_at(checkpoints_[0]).frame);

  std::optional<FrameNode> constant_node;
  if (constant) constant_node = node_at(checkpoints_[0]);

  Eigen::Vector3d phase = Eigen::Vector3d::Zero();
  double reference = 0.0;
  for (std::size_t k = 1; k < checkpoints_.size(); ++k) {
    const double a = checkpoints_[k - 1];
    const double span = checkpoints_[k] - a;
    if (span > 0.0) {
      const long n = constant ? 1 : std::max(1L, static_cast<long>(std::ceil(span / dt_max_ - 1e-9)));
      const double dt = span / static_cast<double>(n);
      for (long j = 0; j < n; ++j) {
        FrameStep step;
        step.t0 = a + static_cast<double>(j) * dt;
        step.dt = dt;
        if (constant) {
          step.node_count = 1;
          step.nodes[0] = *constant_node;
        } else if (integrator_ == Integrator::Midpoint) {
          step.node_count = 1;
          step.nodes[0] = node_at(step.t0 + 0.5 * dt);
        } else {
          step.node_count = 2;
          step.nodes[0] = node_at(step.t0 + kNode1 * dt);
          step.nodes[1] = node_at(step.t0 + kNode2 * dt);
        }
        for (int m = 0; m < 3; ++m) phase[m] += energy_quadrature(step, m, true);
        reference += energy_quadrature(step, 1, false);
        steps_.push_back(step);
      }
    }
    steps_to_[k] = steps_.size();
    phase_[k] = phase;
    reference_[k] = reference;
    frames_.push_back(constant ? constant_node->frame : node_at(checkpoints_[k]).frame);
  }
}

std::vector<CMatrix> dressed_propagators(const ClusterHamiltonian& cluster,
                                         const FrameSchedule& schedule) {
  const ClusterCache cache = make_cache(cluster);
  const std::size_t count = schedule.checkpoints().size();
  std::vector<CMatrix> out;
  out.reserve(count);
  CMatrix p = CMatrix::Identity(cluster.dim(), cluster.dim());
  std::size_t step = 0;
  for (std::size_t k = 0; k < count; ++k) {
    for (; step < schedule.steps_to(k); ++step) {
      p = step_unitary<CMatrix>(schedule.steps()[step], schedule.integrator(),
                                [&](const FrameNode& node) { return dressed_hamiltonian(cache, node); }) *
          p;
    }
    out.push_back(p);
  }
  return out;
}

std::vector<ConditionalPropagator> conditional_propagators(const ClusterHamiltonian& cluster,
                                                           const FrameSchedule& schedule) {
  const ClusterCache cache = make_cache(cluster);
  switch (cluster.nuclear_dim()) {
    case 1: return conditional_typed<Eigen::Matrix<cd, 1, 1>>(cache, schedule);
    case 2: return conditional_typed<Eigen::Matrix2cd>(cache, schedule);
    case 4: return conditional_typed<Eigen::Matrix4cd>(cache, schedule);
    case 8: return conditional_typed<Eigen::Matrix<cd, 8, 8>>(cache, schedule);
    default: return conditional_typed<CMatrix>(cache, schedule);
  }
}

CMatrix propagate(const ClusterHamiltonian& cluster, const FieldGeometry& geometry, double t0,
                  double t1, const PropagationSettings& settings) {
  if (!(t1 >= t0)) throw Error("echo.invalid_argument", "propagate needs t1 >= t0");
  const FrameSchedule schedule(geometry, {t0, t1}, settings, cluster.physical_constants());
  const CMatrix p = dressed_propagators(cluster, schedule).back();
  const Eigen::Index n = cluster.nuclear_dim();
  const CMatrix id = CMatrix::Identity(n, n);
  const CMatrix v0 = kron(schedule.frame_at(0).vectors, id);
  const CMatrix v1 = kron(schedule.frame_at(1).vectors, id);
  return std::polar(1.0, -schedule.reference_phase(1)) * (v1 * p * v0.adjoint());
}

ConvergedPropagator propagate_converged(const ClusterHamiltonian& cluster,
                                        const FieldGeometry& geometry, double t0, double t1,
                                        const PropagationSettings& settings, double tol,
                                        int max_refinements) {
  PropagationSettings s = settings;
  if (!(s.dt_max > 0.0)) s.dt_max = default_dt_max(geometry, cluster.physical_constants());
  if (!std::isfinite(s.dt_max)) s.dt_max = std::max(t1 - t0, 1e-12);
  CMatrix previous = propagate(cluster, geometry, t0, t1, s);
  double change = 0.0;
  for (int r = 1; r <= max_refinements; ++r) {
    s.dt_max *= 0.5;
    CMatrix next = propagate(cluster, geometry, t0, t1, s);
    change = (next - previous).cwiseAbs().maxCoeff();
    if (change < tol) return {std::move(next), s.dt_max, change, r};
    previous = std::move(next);
  }
  throw Error("echo.convergence", "propagator did not converge: change " + std::to_string(change) +
                                      " after " + std::to_string(max_refinements) +
                                      " halvings (tolerance " + std::to_string(tol) + ")");
}

Eigen::Matrix2cd pulse_rotation(PulseKind kind, double phase) {
  const double angle = kind == PulseKind::Pi ? std::numbers::pi : 0.5 * std::numbers::pi;
  const double c = std::cos(0.5 * angle), s = std::sin(0.5 * angle);
  Eigen::Matrix2cd r;
  r(0, 0) = c;
  r(1, 1) = c;
  r(0, 1) = cd(0.0, -s) * std::polar(1.0, -phase);
  r(1, 0) = cd(0.0, -s) * std::polar(1.0, phase);
  return r;
}

CMatrix pulse_operator(PulseKind kind, double phase, Eigen::Index nuclear_dim) {
  CMatrix e = CMatrix::Identity(3, 3);
  e.block(1, 1, 2, 2) = pulse_rotation(kind, phase);
  return kron(e, CMatrix::Identity(nuclear_dim, nuclear_dim));
}

double max_unitarity_error(const CMatrix& u) {
  return (u.adjoint() * u - CMatrix::Identity(u.cols(), u.cols())).cwiseAbs().maxCoeff();
}

}  // namespace nvrot
