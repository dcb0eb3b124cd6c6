#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "nvrot/echo.hpp"
#include "nvrot/fit.hpp"

namespace nvrot {

struct T2MapSettings {
  double b_gauss = 20.0;
  double delta_theta = 0.0;
  BathParams bath;
  std::vector<std::uint64_t> seeds;
  double t2_phenom = 150e-6;
  // revival samples per cell, cut after the first one below `floor`
  int max_revivals = 12;
  double floor = 0.02;
  int min_points = 4;
  EngineSettings engine;
};

struct T2Cell {
  double theta_b = 0.0;
  double omega_rot = 0.0;
  std::vector<double> tau;
  std::vector<double> signal;
  StretchedExpFit fit;
  // "ok", "max_iterations" or the error code of a failed fit
  std::string status;
};

struct T2Map {
  std::vector<double> theta_grid;
  std::vector<double> omega_grid;
  // row-major: cells[i * omega_grid.size() + j] is (theta i, omega j)
  std::vector<T2Cell> cells;
  Metadata metadata;

  const T2Cell& at(std::size_t theta, std::size_t omega) const {
    return cells[theta * omega_grid.size() + omega];
  }
};

T2Map build_t2_map(const std::vector<double>& theta_grid, const std::vector<double>& omega_grid,
                   const T2MapSettings& settings, const PhysicalConstants& pc = constants());

// Columns: theta_deg, f_rot_hz, t2_us, stretch_n, residual, status.
void write_t2_map_csv(std::ostream& out, const T2Map& map);

struct Revival {
  double time = 0.0;
  double amplitude = 0.0;
  // time minus the nearest integer multiple of 2 / f_rot
  double offset = 0.0;
  double prominence = 0.0;
};

struct RevivalOptions {
  // relative to max |signal|, so detection is independent of signal scale
  double prominence = 0.05;
};

// Interior local maxima of the signal whose topographic prominence clears the
// threshold. The tau grid must span at least three rotation periods.
std::vector<Revival> detect_revivals(const EchoResult& result, double f_rot_hz,
                                     const RevivalOptions& options = {});

// Columns: time_s, amplitude, offset_from_2T_rot.
void write_revivals_csv(std::ostream& out, const std::vector<Revival>& revivals);

// Three-azimuth hop of a field of magnitude b at polar angle theta (from the
// NV axis). Shifts are gamma_n |B_eff| - gamma_n |B| in rad/s.
struct HopAnalysis {
  std::array<double, 3> azimuth{};
  std::array<double, 3> shift{};        // exact, from |B_eff|
  std::array<double, 3> first_order{};  // linear in the hyperfine tensor
  double mean = 0.0;
  double first_order_mean = 0.0;
  // orientation average of the first-order shift over the sphere
  double isotropic = 0.0;
  std::array<double, 3> anisotropic{};
  double anisotropic_mean = 0.0;
  double anisotropic_max = 0.0;
};

HopAnalysis magic_angle_hop(const Vector3& site, double b_gauss, double theta, int m_s,
                            const PhysicalConstants& pc = constants());

// Mean of the exact three-azimuth shifts (rad/s).
double magic_angle_hop_average(const Vector3& site, double b_gauss, double theta, int m_s,
                               const PhysicalConstants& pc = constants());

// P2(cos theta)
double dipolar_scaling_factor(double theta_b);

inline const double kMagicAngle = 0.9553166181245093;  // acos(1/sqrt(3))

}  // namespace nvrot
