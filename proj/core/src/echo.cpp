#include "nvrot/echo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "nvrot/csv.hpp"
#include "nvrot/error.hpp"

namespace nvrot {

using cd = std::complex<double>;

namespace {

std::string num(double v) { return csv::format(v); }

void describe_geometry(Metadata& md, const FieldGeometry& g) {
  md["b_gauss"] = num(g.b_gauss);
  md["theta_b_deg"] = num(deg(g.theta_b));
  md["phi_b_deg"] = num(deg(g.phi_b));
  md["f_rot_hz"] = num(g.rotation_frequency_hz());
  md["delta_theta_deg"] = num(deg(g.delta_theta));
  md["phi0_deg"] = num(deg(g.phi0));
  if (g.nuclear_offset_gauss != 0.0) md["nuclear_offset_gauss"] = num(g.nuclear_offset_gauss);
}

void describe_engine(Metadata& md, const EngineSettings& s, const EchoPlan& plan) {
  md["engine"] = to_string(s.engine);
  md["g_max"] = std::to_string(s.g_max);
  md["integrator"] = to_string(s.propagation.integrator);
  md["dt_max_s"] = num(plan.schedule().dt_max());
  md["steps"] = std::to_string(plan.schedule().steps().size());
  md["start_time_s"] = num(plan.start_time());
  md["dipolar"] = s.hamiltonian.include_dipolar
                      ? (s.hamiltonian.secular_dipolar ? "secular" : "full")
                      : "off";
  md["code_version"] = NVROT_VERSION;
}

std::string join_seeds(const std::vector<std::uint64_t>& seeds) {
  std::string out;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(seeds[i]);
  }
  return out;
}

cd trace_overlap(const CMatrix& a, const CMatrix& b) {
  return (a.adjoint() * b).trace() / static_cast<double>(a.rows());
}

}  // namespace

const char* to_string(EngineKind engine) {
  return engine == EngineKind::Conditional ? "conditional" : "full";
}

EngineKind engine_from_string(const std::string& name) {
  if (name == "conditional") return EngineKind::Conditional;
  if (name == "full") return EngineKind::Full;
  throw Error("echo.invalid_argument", "unknown engine '" + name + "'");
}

namespace {

std::vector<double> pulse_times(const std::vector<double>& tau, double start) {
  std::vector<double> t{start};
  for (double x : tau) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw Error("echo.invalid_argument", "echo times must be finite and non-negative");
    }
    t.push_back(start + 0.5 * x);
    t.push_back(start + x);
  }
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

std::size_t locate(const std::vector<double>& t, double x) {
  return static_cast<std::size_t>(std::lower_bound(t.begin(), t.end(), x) - t.begin());
}

}  // namespace

EchoPlan::EchoPlan(const FieldGeometry& geometry, std::vector<double> tau, double start_time,
                   const PropagationSettings& settings, const PhysicalConstants& pc)
    : tau_(std::move(tau)),
      start_(start_time),
      schedule_(geometry, pulse_times(tau_, start_time), settings, pc) {
  const Eigen::Matrix2cd r = pulse_rotation(PulseKind::HalfPi);
  const Eigen::Matrix2cd p = pulse_rotation(PulseKind::Pi);
  const cd alpha = r(0, 0) * p(0, 1) * r(1, 0);
  const cd beta = r(0, 1) * p(1, 0) * r(0, 0);
  const cd weight = 4.0 * std::conj(alpha) * beta;
  const auto& t = schedule_.checkpoints();
  for (double x : tau_) {
    const std::size_t m = locate(t, start_ + 0.5 * x);
    const std::size_t e = locate(t, start_ + x);
    mid_.push_back(m);
    end_.push_back(e);
    const double first = schedule_.relative_phase(m)[2];
    const double second = schedule_.relative_phase(e)[2] - first;
    factor_.push_back(weight * std::polar(1.0, first - second));
  }
}

std::vector<cd> cluster_coherence(const ClusterHamiltonian& cluster, const EchoPlan& plan,
                                  EngineKind engine) {
  std::vector<cd> out(plan.size());
  if (engine == EngineKind::Conditional) {
    const auto p = conditional_propagators(cluster, plan.schedule());
    for (std::size_t i = 0; i < plan.size(); ++i) {
      const auto& a = p[plan.mid(i)];
      const auto& e = p[plan.end(i)];
      const CMatrix b0 = e.zero * a.zero.adjoint();
      const CMatrix b1 = e.minus * a.minus.adjoint();
      out[i] = trace_overlap(b0 * a.minus, b1 * a.zero);
    }
    return out;
  }
  const auto p = dressed_propagators(cluster, plan.schedule());
  const Eigen::Index n = cluster.nuclear_dim();
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const CMatrix& ua = p[plan.mid(i)];
    const CMatrix ub = p[plan.end(i)] * ua.adjoint();
    const auto& ph_mid = plan.schedule().relative_phase(plan.mid(i));
    const auto& ph_end = plan.schedule().relative_phase(plan.end(i));
    auto strip = [&](const CMatrix& u, int m, double phase) {
      return CMatrix(u.block(m * n, m * n, n, n) * std::polar(1.0, phase));
    };
    const CMatrix a0 = strip(ua, 1, ph_mid[1]);
    const CMatrix a1 = strip(ua, 2, ph_mid[2]);
    const CMatrix b0 = strip(ub, 1, ph_end[1] - ph_mid[1]);
    const CMatrix b1 = strip(ub, 2, ph_end[2] - ph_mid[2]);
    out[i] = trace_overlap(b0 * a1, b1 * a0);
  }
  return out;
}

std::vector<double> cluster_echo_signals(const ClusterHamiltonian& cluster, const EchoPlan& plan,
                                         EngineKind engine) {
  std::vector<double> out(plan.size());
  if (engine == EngineKind::Conditional) {
    const auto l = cluster_coherence(cluster, plan, engine);
    for (std::size_t i = 0; i < plan.size(); ++i) out[i] = (plan.electron_factor(i) * l[i]).real();
    return out;
  }
  const auto p = dressed_propagators(cluster, plan.schedule());
  const Eigen::Index n = cluster.nuclear_dim();
  const CMatrix half = pulse_operator(PulseKind::HalfPi, 0.0, n);
  const CMatrix pi = pulse_operator(PulseKind::Pi, 0.0, n);
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const CMatrix& ua = p[plan.mid(i)];
    const CMatrix ub = p[plan.end(i)] * ua.adjoint();
    const CMatrix u = half * ub * pi * ua * half;
    const double weight = u.block(n, n, n, n).squaredNorm();
    out[i] = 2.0 * weight / static_cast<double>(n) - 1.0;
  }
  return out;
}

double cluster_echo_signal(const std::vector<Vector3>& sites, const FieldGeometry& geometry,
                           double tau, double start_time, const EngineSettings& settings,
                           const PhysicalConstants& pc) {
  if (static_cast<int>(sites.size()) > settings.g_max) {
    throw Error("echo.invalid_argument", "cluster larger than g_max");
  }
  const ClusterHamiltonian cluster(sites, settings.hamiltonian, pc);
  const EchoPlan plan(geometry, {tau}, start_time, settings.propagation, pc);
  return cluster_echo_signals(cluster, plan, settings.engine).front();
}

std::vector<cd> bath_coherence(const BathConfiguration& bath, const ClusterPartition& partition,
                               const EchoPlan& plan, const EngineSettings& settings,
                               const PhysicalConstants& pc) {
  const std::size_t groups = partition.groups.size();
  std::vector<std::vector<cd>> per_group(groups);
  parallel_for(groups, settings.workers, [&](std::size_t g) {
    const ClusterHamiltonian cluster(cluster_sites(bath, partition.groups[g]), settings.hamiltonian,
                                     pc);
    per_group[g] = cluster_coherence(cluster, plan, settings.engine);
  });
  std::vector<cd> out(plan.size(), cd(1.0, 0.0));
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t i = 0; i < plan.size(); ++i) out[i] *= per_group[g][i];
  }
  for (std::size_t i = 0; i < plan.size(); ++i) out[i] *= plan.electron_factor(i);
  return out;
}

EchoResult bath_echo_signal(const BathConfiguration& bath, const ClusterPartition& partition,
                            const FieldGeometry& geometry, const std::vector<double>& tau,
                            double start_time, const EngineSettings& settings,
                            const PhysicalConstants& pc) {
  const EchoPlan plan(geometry, tau, start_time, settings.propagation, pc);
  const auto c = bath_coherence(bath, partition, plan, settings, pc);
  EchoResult r;
  r.tau = tau;
  r.spread.assign(tau.size(), 0.0);
  for (const cd& x : c) r.signal.push_back(x.real());
  describe_geometry(r.metadata, geometry);
  describe_engine(r.metadata, settings, plan);
  r.metadata["seeds"] = std::to_string(bath.seed);
  r.metadata["n_ave"] = "1";
  r.metadata["sites"] = std::to_string(bath.sites.size());
  r.metadata["groups"] = std::to_string(partition.groups.size());
  return r;
}

double phenomenological_envelope(double tau, double t2) {
  if (!(t2 > 0.0) || !std::isfinite(t2)) return 1.0;
  return std::exp(-tau / t2);
}

namespace {

struct EnsembleMembers {
  std::vector<BathConfiguration> baths;
  std::vector<ClusterPartition> partitions;
};

EnsembleMembers make_members(const std::vector<std::uint64_t>& seeds, const BathParams& params,
                             int g_max, int workers, const PhysicalConstants& pc) {
  EnsembleMembers m;
  m.baths.resize(seeds.size());
  m.partitions.resize(seeds.size());
  parallel_for(seeds.size(), workers, [&](std::size_t k) {
    m.baths[k] = generate_bath(params, seeds[k], pc);
    m.partitions[k] = partition_clusters(m.baths[k], g_max);
  });
  return m;
}

// Per-member coherences, members in parallel and groups serial inside.
std::vector<std::vector<cd>> member_coherences(const EnsembleMembers& m, const EchoPlan& plan,
                                               const EngineSettings& settings,
                                               const PhysicalConstants& pc) {
  EngineSettings inner = settings;
  inner.workers = 1;
  std::vector<std::vector<cd>> out(m.baths.size());
  parallel_for(m.baths.size(), settings.workers, [&](std::size_t k) {
    out[k] = bath_coherence(m.baths[k], m.partitions[k], plan, inner, pc);
  });
  return out;
}

double sample_std(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

void describe_bath(Metadata& md, const BathParams& p, const std::vector<std::uint64_t>& seeds,
                   const EnsembleMembers& m) {
  md["abundance"] = num(p.abundance);
  md["radius_nm"] = num(p.radius_nm);
  md["min_distance_nm"] = num(p.min_distance_nm);
  md["seeds"] = join_seeds(seeds);
  md["n_ave"] = std::to_string(seeds.size());
  std::string sites;
  for (std::size_t k = 0; k < m.baths.size(); ++k) {
    if (k) sites += ' ';
    sites += std::to_string(m.baths[k].sites.size());
  }
  md["sites"] = sites;
}

}  // namespace

EchoResult ensemble_average(const std::vector<std::uint64_t>& seeds, const BathParams& params,
                            const FieldGeometry& geometry, const std::vector<double>& tau,
                            double start_time, double t2_phenom, const EngineSettings& settings,
                            const PhysicalConstants& pc) {
  if (seeds.empty()) throw Error("echo.invalid_argument", "ensemble needs at least one seed");
  const EchoPlan plan(geometry, tau, start_time, settings.propagation, pc);
  const EnsembleMembers members = make_members(seeds, params, settings.g_max, settings.workers, pc);
  const auto c = member_coherences(members, plan, settings, pc);

  EchoResult r;
  r.tau = tau;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    std::vector<double> values;
    double mean = 0.0;
    for (const auto& member : c) {
      values.push_back(member[i].real());
      mean += member[i].real();
    }
    mean /= static_cast<double>(c.size());
    const double env = phenomenological_envelope(tau[i], t2_phenom);
    r.signal.push_back(mean * env);
    r.spread.push_back(sample_std(values, mean) * env);
  }
  describe_geometry(r.metadata, geometry);
  describe_engine(r.metadata, settings, plan);
  describe_bath(r.metadata, params, seeds, members);
  r.metadata["t2_phenom_s"] = std::isfinite(t2_phenom) && t2_phenom > 0.0 ? num(t2_phenom) : "none";
  return r;
}

double revival_time(double b_total, double f_rot_hz, int n, const PhysicalConstants& pc) {
  if (n < 1) throw Error("echo.invalid_argument", "revival index must be at least 1");
  const double denom = hz(pc.gamma_n * b_total) + f_rot_hz;
  if (!(denom > 0.0)) {
    throw Error("echo.zero_denominator", "revival time undefined: gamma_n B/2pi + f_rot <= 0");
  }
  return 2.0 * n / denom;
}

FringeScan fringe_scan(const FringeSettings& fringe, const std::vector<double>& theta_grid,
                       const std::vector<std::uint64_t>& seeds, const BathParams& params,
                       const EngineSettings& settings, const PhysicalConstants& pc) {
  if (seeds.empty()) throw Error("echo.invalid_argument", "fringe scan needs at least one seed");
  if (!fringe.phase_schedule_cycles.empty() &&
      fringe.phase_schedule_cycles.size() != theta_grid.size()) {
    throw Error("echo.invalid_argument", "phase schedule length must match the theta grid");
  }
  const EnsembleMembers members = make_members(seeds, params, settings.g_max, settings.workers, pc);
  const int n_rev = fringe.revival_index > 0 ? fringe.revival_index
                                             : (fringe.b_axial_gauss <= 30.0 ? 1 : 2);
  FringeScan scan;
  for (std::size_t k = 0; k < theta_grid.size(); ++k) {
    const double theta = theta_grid[k];
    const double c = std::cos(theta);
    if (!(c > 1e-9) || theta < 0.0) {
      throw Error("echo.invalid_argument", "fringe tilt must lie in [0, 90) degrees");
    }
    FieldGeometry g;
    g.b_gauss = fringe.b_axial_gauss / c;
    g.theta_b = theta;
    g.phi_b = 0.0;
    g.omega_rot = angular(fringe.f_rot_hz);
    g.delta_theta = fringe.delta_theta;
    g.phi0 = fringe.phi0;
    const double tau = fringe.tau_override > 0.0 ? fringe.tau_override
                                                 : revival_time(g.b_gauss, fringe.f_rot_hz, n_rev, pc);
    const double cycles = fringe.phase_schedule_cycles.empty()
                              ? fringe.phase_offset_cycles + fringe.phase_slope_cycles * theta
                              : fringe.phase_schedule_cycles[k];
    const double start = fringe.f_rot_hz > 0.0 ? cycles / fringe.f_rot_hz : 0.0;
    const EchoPlan plan(g, {tau}, start, settings.propagation, pc);
    const auto coh = member_coherences(members, plan, settings, pc);

    cd mean = 0.0;
    std::vector<double> re;
    for (const auto& m : coh) {
      mean += m[0];
      re.push_back(m[0].real());
    }
    mean /= static_cast<double>(coh.size());
    const double env = phenomenological_envelope(tau, fringe.t2_phenom);
    scan.theta_b.push_back(theta);
    scan.b_total.push_back(g.b_gauss);
    scan.tau.push_back(tau);
    scan.start_time.push_back(start);
    scan.signal.push_back(mean.real() * env);
    scan.envelope.push_back(std::abs(mean) * env);
    scan.spread.push_back(sample_std(re, mean.real()) * env);
    if (k == 0) describe_engine(scan.metadata, settings, plan);
  }
  scan.metadata["b_axial_gauss"] = num(fringe.b_axial_gauss);
  scan.metadata["f_rot_hz"] = num(fringe.f_rot_hz);
  scan.metadata["delta_theta_deg"] = num(deg(fringe.delta_theta));
  scan.metadata["revival_index"] = std::to_string(n_rev);
  scan.metadata["t2_phenom_s"] =
      std::isfinite(fringe.t2_phenom) && fringe.t2_phenom > 0.0 ? num(fringe.t2_phenom) : "none";
  scan.metadata.erase("start_time_s");
  describe_bath(scan.metadata, params, seeds, members);
  return scan;
}

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body) {
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(resolve_workers(workers)), n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_index = n;
  std::exception_ptr failure;
  auto run = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

void write_echo_csv(std::ostream& out, const EchoResult& result) {
  csv::Writer w(out);
  for (const auto& [k, v] : result.metadata) w.comment(k + ": " + v);
  w.header({"tau_s", "signal", "spread"});
  for (std::size_t i = 0; i < result.tau.size(); ++i) {
    w.row({result.tau[i], result.signal[i], result.spread.empty() ? 0.0 : result.spread[i]});
  }
}

void write_fringe_csv(std::ostream& out, const FringeScan& scan) {
  csv::Writer w(out);
  for (const auto& [k, v] : scan.metadata) w.comment(k + ": " + v);
  w.header({"theta_deg", "b_total_gauss", "tau_s", "start_time_s", "signal", "envelope", "spread"});
  for (std::size_t i = 0; i < scan.theta_b.size(); ++i) {
    w.row({deg(scan.theta_b[i]), scan.b_total[i], scan.tau[i], scan.start_time[i], scan.signal[i],
           scan.envelope[i], scan.spread[i]});
  }
}

}  // namespace nvrot
