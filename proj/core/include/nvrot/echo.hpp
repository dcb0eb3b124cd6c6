#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "nvrot/bath.hpp"
#include "nvrot/propagation.hpp"

namespace nvrot {

// Conditional: nuclei evolve under the m_s-conditioned Hamiltonians of the
// dressed 0 and -1 levels. Full: the whole 3 * 2^g space is propagated.
enum class EngineKind { Conditional, Full };

const char* to_string(EngineKind engine);
EngineKind engine_from_string(const std::string& name);

struct EngineSettings {
  EngineKind engine = EngineKind::Conditional;
  int g_max = 3;
  PropagationSettings propagation;
  HamiltonianOptions hamiltonian;
  // 0 = hardware concurrency. Results never depend on it.
  int workers = 0;
};

using Metadata = std::map<std::string, std::string>;

struct EchoResult {
  std::vector<double> tau;
  std::vector<double> signal;
  // inter-configuration standard deviation (zero for a single bath)
  std::vector<double> spread;
  Metadata metadata;
};

// The pi/2 - tau/2 - pi - tau/2 - pi/2 sequence sampled at every tau of a grid
// that starts at `start_time`. Checkpoints are the pulse times.
class EchoPlan {
 public:
  EchoPlan(const FieldGeometry& geometry, std::vector<double> tau, double start_time,
           const PropagationSettings& settings, const PhysicalConstants& pc = constants());

  std::size_t size() const { return tau_.size(); }
  const std::vector<double>& tau() const { return tau_; }
  double start_time() const { return start_; }
  const FrameSchedule& schedule() const { return schedule_; }
  std::size_t mid(std::size_t i) const { return mid_[i]; }
  std::size_t end(std::size_t i) const { return end_[i]; }
  // Electron-only factor of the echo coherence: pulse weights times the
  // relative phase picked up by the dressed 0/-1 pair.
  std::complex<double> electron_factor(std::size_t i) const { return factor_[i]; }

 private:
  std::vector<double> tau_;
  double start_;
  FrameSchedule schedule_;
  std::vector<std::size_t> mid_;
  std::vector<std::size_t> end_;
  std::vector<std::complex<double>> factor_;
};

// Nuclear part of the echo coherence, L(tau) = Tr(A^dag B) / 2^g with
// A = U_b(0) U_a(-1) and B = U_b(-1) U_a(0). The signal of independent groups
// is Re(electron_factor * prod L).
std::vector<std::complex<double>> cluster_coherence(const ClusterHamiltonian& cluster,
                                                    const EchoPlan& plan, EngineKind engine);

// S_G = 2 Tr[P0 rho(tau)] - 1 for one cluster. For the full engine this is the
// exact projection of the full propagator.
std::vector<double> cluster_echo_signals(const ClusterHamiltonian& cluster, const EchoPlan& plan,
                                         EngineKind engine);

double cluster_echo_signal(const std::vector<Vector3>& sites, const FieldGeometry& geometry,
                           double tau, double start_time, const EngineSettings& settings = {},
                           const PhysicalConstants& pc = constants());

// Complex echo coherence of a partitioned bath; the signal is its real part.
std::vector<std::complex<double>> bath_coherence(const BathConfiguration& bath,
                                                 const ClusterPartition& partition,
                                                 const EchoPlan& plan,
                                                 const EngineSettings& settings,
                                                 const PhysicalConstants& pc = constants());

EchoResult bath_echo_signal(const BathConfiguration& bath, const ClusterPartition& partition,
                            const FieldGeometry& geometry, const std::vector<double>& tau,
                            double start_time, const EngineSettings& settings = {},
                            const PhysicalConstants& pc = constants());

// exp(-tau / t2); t2 <= 0 or infinite disables the envelope.
double phenomenological_envelope(double tau, double t2_phenom);

inline constexpr double kNoEnvelope = std::numeric_limits<double>::infinity();

// Mean over baths generated from `seeds`, times the phenomenological envelope.
EchoResult ensemble_average(const std::vector<std::uint64_t>& seeds, const BathParams& bath,
                            const FieldGeometry& geometry, const std::vector<double>& tau,
                            double start_time, double t2_phenom,
                            const EngineSettings& settings = {},
                            const PhysicalConstants& pc = constants());

// 2n / (gamma_n B_tot / 2 pi + f_rot)
double revival_time(double b_total_gauss, double f_rot_hz, int n,
                    const PhysicalConstants& pc = constants());

struct FringeSettings {
  double b_axial_gauss = 20.0;
  double f_rot_hz = 0.0;
  double delta_theta = rad(0.2);
  double phi0 = 0.0;
  // 0 chooses the first revival up to 30 G and the second above
  int revival_index = 0;
  // > 0 fixes tau instead of following the revival
  double tau_override = 0.0;
  // Start phase of the sequence relative to the rotation, in cycles:
  // offset + slope * theta_b (rad), unless an explicit per-angle list is given.
  double phase_offset_cycles = 0.0;
  double phase_slope_cycles = 0.0;
  std::vector<double> phase_schedule_cycles;
  double t2_phenom = kNoEnvelope;
};

struct FringeScan {
  std::vector<double> theta_b;
  std::vector<double> b_total;
  std::vector<double> tau;
  std::vector<double> start_time;
  std::vector<double> signal;
  // |coherence|, the fringe envelope
  std::vector<double> envelope;
  std::vector<double> spread;
  Metadata metadata;
};

// For each tilt a transverse field along x is added to the axial field; tau
// follows the revival of the resulting total field.
FringeScan fringe_scan(const FringeSettings& fringe, const std::vector<double>& theta_grid,
                       const std::vector<std::uint64_t>& seeds, const BathParams& bath,
                       const EngineSettings& settings = {},
                       const PhysicalConstants& pc = constants());

// Runs body(i) for i in [0, n) on `workers` threads. Every index is visited
// exactly once; the first failing index (lowest) rethrows after joining.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body);
int resolve_workers(int requested);

void write_echo_csv(std::ostream& out, const EchoResult& result);
void write_fringe_csv(std::ostream& out, const FringeScan& scan);

}  // namespace nvrot
