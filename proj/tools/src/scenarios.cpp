#include "nvrot_cli/scenarios.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "nvrot/analysis.hpp"
#include "nvrot/csv.hpp"
#include "nvrot/error.hpp"
#include "nvrot_cli/plot.hpp"

namespace nvrot::cli {

namespace fs = std::filesystem;

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[i] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
  return out;
}

struct Output {
  std::string name;
  std::string content;
};

struct ScenarioResult {
  std::vector<Output> outputs;
  nlohmann::json details = nlohmann::json::object();
  std::vector<std::uint64_t> seeds;
};

nlohmann::json to_json(const Metadata& m) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : m) j[k] = v;
  return j;
}

BathConfiguration load_or_generate(const RunConfig& c, std::uint64_t seed) {
  if (c.bath.file.empty()) return generate_bath(bath_params_of(c), seed);
  std::ifstream in(c.bath.file);
  if (!in) throw Error("bath.io", "cannot open bath archive " + c.bath.file);
  return read_bath(in);
}

ScenarioResult run_freqs(const RunConfig& c) {
  ScenarioResult r;
  const BathConfiguration bath = load_or_generate(c, c.bath.seed);
  r.seeds = {bath.seed};
  std::vector<std::size_t> order(bath.sites.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return bath.sites[a].norm() < bath.sites[b].norm();
  });
  order.resize(std::min<std::size_t>(order.size(), static_cast<std::size_t>(c.freqs.n_spins)));
  std::vector<Vector3> sites;
  for (std::size_t i : order) sites.push_back(bath.sites[i]);

  const FieldGeometry geo = geometry_of(c);
  double t_max = c.freqs.t_max_s;
  if (t_max <= 0.0) t_max = c.geometry.f_rot_hz > 0.0 ? 1.0 / c.geometry.f_rot_hz : 100e-6;
  const auto times = linspace(0.0, t_max, c.freqs.time_points);

  for (int m : c.freqs.m_s) {
    const auto trace = frequency_trace(sites, geo, times, m);
    std::ostringstream out;
    write_frequency_trace(out, trace);
    r.outputs.push_back({"freqs_ms" + std::to_string(m) + ".csv", out.str()});
  }
  r.details["spins"] = sites.size();
  r.details["bath_sites"] = bath.sites.size();
  r.details["t_max_s"] = t_max;
  return r;
}

ScenarioResult run_echo(const RunConfig& c) {
  ScenarioResult r;
  const FieldGeometry geo = geometry_of(c);
  const EngineSettings engine = engine_of(c);
  const auto tau = linspace(0.0, c.echo.tau_max_us * 1e-6, c.echo.tau_points);
  const double t2 = t2_phenom_of(c);

  EchoResult result;
  if (c.bath.file.empty()) {
    r.seeds = seeds_of(c);
    result = ensemble_average(r.seeds, bath_params_of(c), geo, tau, c.echo.start_time_s, t2, engine);
  } else {
    const BathConfiguration bath = load_or_generate(c, c.bath.seed);
    r.seeds = {bath.seed};
    result = bath_echo_signal(bath, partition_clusters(bath, engine.g_max), geo, tau,
                              c.echo.start_time_s, engine);
    for (std::size_t i = 0; i < tau.size(); ++i) {
      result.signal[i] *= phenomenological_envelope(tau[i], t2);
    }
    result.metadata["bath_file"] = c.bath.file;
    result.metadata["t2_phenom_s"] = std::isfinite(t2) ? csv::format(t2) : "none";
  }
  std::ostringstream out;
  write_echo_csv(out, result);
  r.outputs.push_back({"echo.csv", out.str()});
  r.details["echo"] = to_json(result.metadata);

  const double f = c.geometry.f_rot_hz;
  if (f > 0.0 && c.echo.tau_max_us * 1e-6 >= 3.0 / f) {
    const auto revivals = detect_revivals(result, f, {c.echo.revival_prominence});
    std::ostringstream rev;
    write_revivals_csv(rev, revivals);
    r.outputs.push_back({"revivals.csv", rev.str()});
    r.details["revivals"] = revivals.size();
  } else {
    r.details["revivals"] = "skipped: needs f_rot > 0 and a tau grid of at least three rotation periods";
  }
  return r;
}

ScenarioResult run_fringes(const RunConfig& c) {
  ScenarioResult r;
  FringeSettings fs;
  fs.b_axial_gauss = c.geometry.b_gauss;
  fs.f_rot_hz = c.geometry.f_rot_hz;
  fs.delta_theta = rad(c.geometry.delta_theta_deg);
  fs.phi0 = rad(c.geometry.phi0_deg);
  fs.revival_index = c.fringes.revival_index;
  fs.tau_override = c.fringes.tau_override_us * 1e-6;
  fs.phase_offset_cycles = c.fringes.phase_offset_cycles;
  fs.phase_slope_cycles = c.fringes.phase_slope_cycles;
  fs.phase_schedule_cycles = c.fringes.phase_schedule_cycles;
  fs.t2_phenom = t2_phenom_of(c);

  std::vector<double> grid;
  for (double t : linspace(c.fringes.theta_min_deg, c.fringes.theta_max_deg, c.fringes.theta_points)) {
    grid.push_back(rad(t));
  }
  r.seeds = seeds_of(c);
  const FringeScan scan = fringe_scan(fs, grid, r.seeds, bath_params_of(c), engine_of(c));
  std::ostringstream out;
  write_fringe_csv(out, scan);
  r.outputs.push_back({"fringes.csv", out.str()});
  r.details["fringes"] = to_json(scan.metadata);

  if (scan.theta_b.size() >= 8) {
    std::vector<double> x;
    for (double t : scan.theta_b) x.push_back(deg(t));
    std::ostringstream fit_out;
    csv::Writer w(fit_out);
    w.comment("S(theta) = offset + amplitude exp(-theta / decay) cos(frequency theta + phase), theta in deg");
    w.header({"offset", "amplitude", "amplitude_error", "decay_deg", "frequency_rad_per_deg", "phase_rad",
              "residual_rms", "status"});
    try {
      const auto fit = fit_damped_sinusoid(x, scan.signal);
      w.row(std::vector<std::string>{csv::format(fit.offset), csv::format(fit.amplitude),
                                     csv::format(fit.amplitude_error), csv::format(fit.decay),
                                     csv::format(fit.frequency), csv::format(fit.phase),
                                     csv::format(fit.residual_rms), fit.status});
    } catch (const Error& e) {
      w.row(std::vector<std::string>{"nan", "nan", "nan", "nan", "nan", "nan", "nan", e.code()});
    }
    r.outputs.push_back({"fringe_fit.csv", fit_out.str()});
  }
  return r;
}

ScenarioResult run_t2map(const RunConfig& c) {
  ScenarioResult r;
  T2MapSettings s;
  s.b_gauss = c.geometry.b_gauss;
  s.delta_theta = rad(c.geometry.delta_theta_deg);
  s.bath = bath_params_of(c);
  s.seeds = seeds_of(c);
  s.t2_phenom = t2_phenom_of(c);
  s.max_revivals = c.t2map.max_revivals;
  s.floor = c.t2map.floor;
  s.min_points = c.t2map.min_points;
  s.engine = engine_of(c);
  r.seeds = s.seeds;

  std::vector<double> theta, omega;
  for (double t : c.t2map.theta_deg) theta.push_back(rad(t));
  for (double f : c.t2map.f_rot_hz) omega.push_back(angular(f));
  const T2Map map = build_t2_map(theta, omega, s);
  std::ostringstream out;
  write_t2_map_csv(out, map);
  r.outputs.push_back({"t2map.csv", out.str()});
  r.details["t2map"] = to_json(map.metadata);
  return r;
}

ScenarioResult run_hop(const RunConfig& c) {
  ScenarioResult r;
  const BathConfiguration bath = load_or_generate(c, c.bath.seed);
  r.seeds = {bath.seed};
  const double theta = c.hop.theta_deg < 0.0 ? kMagicAngle : rad(c.hop.theta_deg);
  const double to_hz = 1.0 / (2.0 * M_PI);

  std::ostringstream out;
  csv::Writer w(out);
  w.comment("b_gauss: " + csv::format(c.geometry.b_gauss));
  w.comment("theta_deg: " + csv::format(deg(theta)));
  w.comment("shifts are gamma_n |B_eff| - gamma_n |B| at azimuths 0, 120, 240 deg");
  w.header({"site_index", "r_nm", "m_s", "shift_0_hz", "shift_120_hz", "shift_240_hz", "mean_hz",
            "first_order_mean_hz", "isotropic_hz", "anisotropic_max_hz", "anisotropic_mean_hz"});
  std::size_t rows = 0;
  for (std::size_t i = 0; i < bath.sites.size(); ++i) {
    const double rn = bath.sites[i].norm();
    if (rn < c.hop.r_min_nm || rn > c.hop.r_max_nm) continue;
    for (int m : c.hop.m_s) {
      const auto h = magic_angle_hop(bath.sites[i], c.geometry.b_gauss, theta, m);
      w.row({static_cast<double>(i), rn, static_cast<double>(m), h.shift[0] * to_hz,
             h.shift[1] * to_hz, h.shift[2] * to_hz, h.mean * to_hz, h.first_order_mean * to_hz,
             h.isotropic * to_hz, h.anisotropic_max * to_hz, h.anisotropic_mean * to_hz});
      ++rows;
    }
  }
  r.outputs.push_back({"hop.csv", out.str()});
  r.details["rows"] = rows;
  return r;
}

}  // namespace

fs::path output_directory(const RunConfig& config) {
  fs::path dir(config.output.directory);
  if (dir.is_absolute()) return dir;
  if (const char* root = std::getenv(kOutputRootEnv); root && *root) return fs::path(root) / dir;
  return fs::current_path() / dir;
}

void write_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cli.io", "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw Error("cli.io", "failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("cli.io", "cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

RunSummary run_scenario(const RunConfig& config) {
  validate(config);
  if (!config.bath.file.empty() && (config.scenario == "fringes" || config.scenario == "t2map")) {
    throw Error("config.invalid", "bath.file: not supported by the " + config.scenario +
                                      " scenario, which generates baths from seeds");
  }
  const auto start = std::chrono::steady_clock::now();
  ScenarioResult result;
  if (config.scenario == "freqs") {
    result = run_freqs(config);
  } else if (config.scenario == "echo") {
    result = run_echo(config);
  } else if (config.scenario == "fringes") {
    result = run_fringes(config);
  } else if (config.scenario == "t2map") {
    result = run_t2map(config);
  } else {
    result = run_hop(config);
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  RunSummary summary;
  summary.directory = output_directory(config);
  fs::create_directories(summary.directory);
  for (const auto& o : result.outputs) {
    write_atomic(summary.directory / o.name, o.content);
    summary.files.push_back(o.name);
  }
  const auto& formats = config.output.formats;
  if (std::find(formats.begin(), formats.end(), "gnuplot") != formats.end()) {
    static const std::map<std::string, std::pair<std::string, std::string>> layouts = {
        {"freqs", {"fig1d", "freqs_"}},
        {"fringes", {"fig2c", "fringes.csv"}},
        {"t2map", {"fig3", "t2map.csv"}},
        {"echo", {"fig4", "echo.csv"}},
    };
    if (const auto it = layouts.find(config.scenario); it != layouts.end()) {
      std::vector<fs::path> inputs;
      for (const auto& o : result.outputs) {
        if (o.name.rfind(it->second.second, 0) == 0) inputs.push_back(summary.directory / o.name);
      }
      const std::string name = it->second.first + ".dat";
      emit_plot_data(it->second.first, inputs, summary.directory / name);
      summary.files.push_back(name);
    }
  }
  summary.sidecar = {
      {"scenario", config.scenario},
      {"code_version", NVROT_VERSION},
      {"config", to_json(config)},
      {"seeds", result.seeds},
      {"workers", resolve_workers(config.engine.workers)},
      {"wall_time_s", wall},
      {"files", summary.files},
      {"details", result.details},
  };
  write_atomic(summary.directory / kSidecarName, summary.sidecar.dump(2) + "\n");
  return summary;
}

fs::path generate_bath_file(const RunConfig& config, const fs::path& target) {
  const BathConfiguration bath = generate_bath(bath_params_of(config), config.bath.seed);
  std::ostringstream out;
  write_bath(out, bath);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  write_atomic(target, out.str());
  return target;
}

}  // namespace nvrot::cli
