#pragma once

#include <array>
#include <complex>
#include <string>
#include <vector>

#include "nvrot/hamiltonian.hpp"

namespace nvrot {

// Both integrators run in the electron-adiabatic frame (see ElectronFrame).
// Magnus4 is the two-exponential commutator-free fourth-order scheme on the
// Gauss-Legendre nodes; Midpoint is one exponential per step.
enum class Integrator { Magnus4, Midpoint };

const char* to_string(Integrator integrator);
Integrator integrator_from_string(const std::string& name);

struct PropagationSettings {
  // <= 0 selects default_dt_max
  double dt_max = 0.0;
  Integrator integrator = Integrator::Magnus4;
};

// min(1/(64 f_rot), 1/(64 f_L)) with f_L = gamma_n |B| / 2 pi + f_rot; infinite
// when the Hamiltonian is time independent.
double default_dt_max(const FieldGeometry& geometry, const PhysicalConstants& pc = constants());

// exp(-i dt H) for Hermitian H.
CMatrix expm_hermitian(const CMatrix& h, double dt);

struct FrameNode {
  ElectronFrame frame;
  Vector3 nuclear_drive = Vector3::Zero();
};

struct FrameStep {
  double t0 = 0.0;
  double dt = 0.0;
  int node_count = 1;
  std::array<FrameNode, 2> nodes;
};

// Electron frames on the step nodes between sorted checkpoints. Each interval
// between consecutive checkpoints is cut into equal steps no longer than
// dt_max, so checkpoints fall on step boundaries. The table depends only on
// the geometry, never on the nuclei, and is shared by every cluster.
class FrameSchedule {
 public:
  FrameSchedule(const FieldGeometry& geometry, std::vector<double> checkpoints,
                const PropagationSettings& settings, const PhysicalConstants& pc = constants());

  const std::vector<FrameStep>& steps() const { return steps_; }
  const std::vector<double>& checkpoints() const { return checkpoints_; }
  // steps_to_[k] steps lead from checkpoint 0 to checkpoint k
  std::size_t steps_to(std::size_t k) const { return steps_to_[k]; }
  const ElectronFrame& frame_at(std::size_t k) const { return frames_[k]; }
  // Integral of E_m - E_0 over [checkpoint 0, checkpoint k], per level.
  const Eigen::Vector3d& relative_phase(std::size_t k) const { return phase_[k]; }
  // Integral of E_0 over the same span.
  double reference_phase(std::size_t k) const { return reference_[k]; }
  Integrator integrator() const { return integrator_; }
  double dt_max() const { return dt_max_; }
  const PhysicalConstants& physical_constants() const { return pc_; }

 private:
  std::vector<double> checkpoints_;
  std::vector<std::size_t> steps_to_;
  std::vector<FrameStep> steps_;
  std::vector<ElectronFrame> frames_;
  std::vector<Eigen::Vector3d> phase_;
  std::vector<double> reference_;
  Integrator integrator_;
  double dt_max_;
  PhysicalConstants pc_;
};

// Full 3 * 2^g dressed-frame propagators from checkpoint 0 to each checkpoint,
// with the E_0 reference phase removed.
std::vector<CMatrix> dressed_propagators(const ClusterHamiltonian& cluster,
                                         const FrameSchedule& schedule);

// Nuclear propagators conditioned on the dressed 0 and -1 levels, from the
// second-order block-diagonal reduction of the dressed Hamiltonian. The large
// level energies are left out; use FrameSchedule::relative_phase.
struct ConditionalPropagator {
  CMatrix zero;
  CMatrix minus;
};

std::vector<ConditionalPropagator> conditional_propagators(const ClusterHamiltonian& cluster,
                                                           const FrameSchedule& schedule);

// Propagator of the rotating-frame Hamiltonian in the bare product basis.
CMatrix propagate(const ClusterHamiltonian& cluster, const FieldGeometry& geometry, double t0,
                  double t1, const PropagationSettings& settings = {});

struct ConvergedPropagator {
  CMatrix unitary;
  double dt_max = 0.0;
  double change = 0.0;
  int refinements = 0;
};

// Halves dt_max until two successive propagators differ by less than `tol`
// (max element). Throws echo.convergence after `max_refinements` halvings.
ConvergedPropagator propagate_converged(const ClusterHamiltonian& cluster,
                                        const FieldGeometry& geometry, double t0, double t1,
                                        const PropagationSettings& settings, double tol,
                                        int max_refinements = 6);

enum class PulseKind { HalfPi, Pi };

// Ideal rotation exp(-i angle/2 (cos(phase) sx + sin(phase) sy)) on the
// {0, -1} pair of an electron basis ordered (+1, 0, -1); identity on +1.
Eigen::Matrix2cd pulse_rotation(PulseKind kind, double phase = 0.0);
CMatrix pulse_operator(PulseKind kind, double phase = 0.0, Eigen::Index nuclear_dim = 1);

double max_unitarity_error(const CMatrix& u);

}  // namespace nvrot
