#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nvrot/analysis.hpp"

namespace nvrot::cli {

inline const std::vector<std::string> kScenarios = {"freqs", "echo", "fringes", "t2map", "hop"};

struct GeometryBlock {
  double b_gauss = 20.0;
  double theta_b_deg = 0.0;
  double phi_b_deg = 0.0;
  double f_rot_hz = 0.0;
  double delta_theta_deg = 0.0;
  double phi0_deg = 0.0;
};

struct BathBlock {
  double abundance = 0.011;
  double radius_nm = 2.48;
  double min_distance_nm = 0.25;
  std::uint64_t seed = 1;
  int n_seeds = 1;
  // optional archive; replaces generation for freqs, echo and hop
  std::string file;
};

struct EngineBlock {
  std::string kind = "conditional";
  int g_max = 3;
  double dt_max_s = 0.0;  // 0 selects the default rule
  std::string integrator = "magnus4";
  double t2_phenom_us = 0.0;  // 0 disables the envelope
  std::string dipolar = "full";  // full, secular or off
  int workers = 0;
};

struct EchoBlock {
  double tau_max_us = 200.0;
  int tau_points = 201;
  double start_time_s = 0.0;
  double revival_prominence = 0.05;
};

struct FreqsBlock {
  std::vector<int> m_s = {0, -1};
  int n_spins = 20;
  double t_max_s = 0.0;  // 0 = one rotation period (100 us when stationary)
  int time_points = 101;
};

struct FringesBlock {
  double theta_min_deg = 0.0;
  double theta_max_deg = 40.0;
  int theta_points = 41;
  int revival_index = 0;
  double tau_override_us = 0.0;
  double phase_offset_cycles = 0.0;
  double phase_slope_cycles = 0.0;
  std::vector<double> phase_schedule_cycles;
};

struct T2MapBlock {
  std::vector<double> theta_deg = {0.0, 10.0, 20.0, 30.0};
  std::vector<double> f_rot_hz = {0.0, 2500.0, 5170.0};
  int max_revivals = 12;
  double floor = 0.02;
  int min_points = 4;
};

struct HopBlock {
  std::vector<int> m_s = {0, -1};
  // negative selects the magic angle
  double theta_deg = -1.0;
  double r_min_nm = 1.0;
  double r_max_nm = 2.48;
};

struct OutputBlock {
  std::string directory = "out";
  std::vector<std::string> formats = {"csv"};
};

struct RunConfig {
  std::string scenario = "echo";
  GeometryBlock geometry;
  BathBlock bath;
  EngineBlock engine;
  EchoBlock echo;
  FreqsBlock freqs;
  FringesBlock fringes;
  T2MapBlock t2map;
  HopBlock hop;
  OutputBlock output;
};

// Structured YAML. Unknown keys are rejected (config.unknown_key); malformed
// values raise config.parse with the line; ranges raise config.invalid.
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<string>");
RunConfig parse_config(const std::filesystem::path& path);

// key=value with a dotted key, value parsed as a YAML scalar or flow list.
void apply_override(RunConfig& config, const std::string& assignment);

void validate(const RunConfig& config);

// Every key, defaults included, in the same block layout parse_config reads.
std::string serialize_yaml(const RunConfig& config);
nlohmann::json to_json(const RunConfig& config);

std::vector<std::string> config_keys();

// Library views of the configuration.
FieldGeometry geometry_of(const RunConfig& config);
BathParams bath_params_of(const RunConfig& config);
EngineSettings engine_of(const RunConfig& config);
std::vector<std::uint64_t> seeds_of(const RunConfig& config);
double t2_phenom_of(const RunConfig& config);

}  // namespace nvrot::cli
