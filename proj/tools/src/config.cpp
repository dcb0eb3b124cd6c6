#include "nvrot_cli/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <variant>

#include "nvrot/csv.hpp"
#include "nvrot/error.hpp"

namespace nvrot::cli {

namespace {

using Field = std::variant<double*, int*, std::uint64_t*, std::string*, std::vector<int>*,
                           std::vector<double>*, std::vector<std::string>*>;

std::vector<std::pair<std::string, Field>> fields(RunConfig& c) {
  return {
      {"scenario", &c.scenario},
      {"geometry.b_gauss", &c.geometry.b_gauss},
      {"geometry.theta_b_deg", &c.geometry.theta_b_deg},
      {"geometry.phi_b_deg", &c.geometry.phi_b_deg},
      {"geometry.f_rot_hz", &c.geometry.f_rot_hz},
      {"geometry.delta_theta_deg", &c.geometry.delta_theta_deg},
      {"geometry.phi0_deg", &c.geometry.phi0_deg},
      {"bath.abundance", &c.bath.abundance},
      {"bath.radius_nm", &c.bath.radius_nm},
      {"bath.min_distance_nm", &c.bath.min_distance_nm},
      {"bath.seed", &c.bath.seed},
      {"bath.n_seeds", &c.bath.n_seeds},
      {"bath.file", &c.bath.file},
      {"engine.kind", &c.engine.kind},
      {"engine.g_max", &c.engine.g_max},
      {"engine.dt_max_s", &c.engine.dt_max_s},
      {"engine.integrator", &c.engine.integrator},
      {"engine.t2_phenom_us", &c.engine.t2_phenom_us},
      {"engine.dipolar", &c.engine.dipolar},
      {"engine.workers", &c.engine.workers},
      {"echo.tau_max_us", &c.echo.tau_max_us},
      {"echo.tau_points", &c.echo.tau_points},
      {"echo.start_time_s", &c.echo.start_time_s},
      {"echo.revival_prominence", &c.echo.revival_prominence},
      {"freqs.m_s", &c.freqs.m_s},
      {"freqs.n_spins", &c.freqs.n_spins},
      {"freqs.t_max_s", &c.freqs.t_max_s},
      {"freqs.time_points", &c.freqs.time_points},
      {"fringes.theta_min_deg", &c.fringes.theta_min_deg},
      {"fringes.theta_max_deg", &c.fringes.theta_max_deg},
      {"fringes.theta_points", &c.fringes.theta_points},
      {"fringes.revival_index", &c.fringes.revival_index},
      {"fringes.tau_override_us", &c.fringes.tau_override_us},
      {"fringes.phase_offset_cycles", &c.fringes.phase_offset_cycles},
      {"fringes.phase_slope_cycles", &c.fringes.phase_slope_cycles},
      {"fringes.phase_schedule_cycles", &c.fringes.phase_schedule_cycles},
      {"t2map.theta_deg", &c.t2map.theta_deg},
      {"t2map.f_rot_hz", &c.t2map.f_rot_hz},
      {"t2map.max_revivals", &c.t2map.max_revivals},
      {"t2map.floor", &c.t2map.floor},
      {"t2map.min_points", &c.t2map.min_points},
      {"hop.m_s", &c.hop.m_s},
      {"hop.theta_deg", &c.hop.theta_deg},
      {"hop.r_min_nm", &c.hop.r_min_nm},
      {"hop.r_max_nm", &c.hop.r_max_nm},
      {"output.directory", &c.output.directory},
      {"output.formats", &c.output.formats},
  };
}

std::string where(const YAML::Node& node, const std::string& origin) {
  const auto mark = node.Mark();
  if (mark.line < 0) return origin;
  return origin + ":" + std::to_string(mark.line + 1);
}

template <typename T>
T scalar(const YAML::Node& node, const std::string& key, const std::string& origin) {
  if (!node.IsScalar()) {
    throw Error("config.parse", where(node, origin) + ": " + key + " expects a scalar");
  }
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw Error("config.parse", where(node, origin) + ": cannot read " + key + " from '" +
                                    node.Scalar() + "'");
  }
}

template <typename T>
std::vector<T> list(const YAML::Node& node, const std::string& key, const std::string& origin) {
  std::vector<T> out;
  if (node.IsNull()) return out;
  if (node.IsScalar()) return {scalar<T>(node, key, origin)};
  if (!node.IsSequence()) {
    throw Error("config.parse", where(node, origin) + ": " + key + " expects a list");
  }
  for (const auto& item : node) out.push_back(scalar<T>(item, key, origin));
  return out;
}

void assign(const Field& field, const YAML::Node& node, const std::string& key,
            const std::string& origin) {
  std::visit(
      [&](auto* target) {
        using T = std::remove_pointer_t<decltype(target)>;
        if constexpr (std::is_same_v<T, std::vector<int>> || std::is_same_v<T, std::vector<double>> ||
                      std::is_same_v<T, std::vector<std::string>>) {
          *target = list<typename T::value_type>(node, key, origin);
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
          const std::string text = scalar<std::string>(node, key, origin);
          if (text.empty() || text[0] == '-') {
            throw Error("config.parse", where(node, origin) + ": " + key + " must be a non-negative integer");
          }
          *target = scalar<std::uint64_t>(node, key, origin);
        } else {
          *target = scalar<T>(node, key, origin);
        }
      },
      field);
}

const Field* find_field(const std::vector<std::pair<std::string, Field>>& table,
                        const std::string& key) {
  for (const auto& [k, f] : table) {
    if (k == key) return &f;
  }
  return nullptr;
}

bool is_block(const std::vector<std::pair<std::string, Field>>& table, const std::string& prefix) {
  return std::any_of(table.begin(), table.end(),
                     [&](const auto& e) { return e.first.rfind(prefix + ".", 0) == 0; });
}

void read_map(const YAML::Node& node, const std::string& prefix,
              const std::vector<std::pair<std::string, Field>>& table, const std::string& origin) {
  for (const auto& kv : node) {
    const std::string name = kv.first.as<std::string>();
    const std::string key = prefix.empty() ? name : prefix + "." + name;
    if (const Field* f = find_field(table, key)) {
      assign(*f, kv.second, key, origin);
    } else if (is_block(table, key)) {
      if (!kv.second.IsMap()) {
        throw Error("config.parse", where(kv.second, origin) + ": " + key + " must be a block");
      }
      read_map(kv.second, key, table, origin);
    } else {
      throw Error("config.unknown_key", where(kv.first, origin) + ": unknown key '" + key + "'");
    }
  }
}

void require(bool ok, const std::string& key, const std::string& detail) {
  if (!ok) throw Error("config.invalid", key + ": " + detail);
}

void in_range(double v, double lo, double hi, const std::string& key) {
  require(std::isfinite(v) && v >= lo && v <= hi, key,
          "value " + csv::format(v) + " outside allowed range [" + csv::format(lo) + ", " +
              csv::format(hi) + "]");
}

void one_of(const std::string& v, std::initializer_list<const char*> allowed, const std::string& key) {
  std::string list;
  for (const char* a : allowed) {
    if (v == a) return;
    list += std::string(list.empty() ? "" : ", ") + a;
  }
  throw Error("config.invalid", key + ": '" + v + "' is not one of {" + list + "}");
}

void valid_m_s(const std::vector<int>& values, const std::string& key) {
  require(!values.empty(), key, "needs at least one value");
  for (int m : values) require(m >= -1 && m <= 1, key, "m_s values must be -1, 0 or 1");
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  return out + "\"";
}

std::string render(const Field& field) {
  return std::visit(
      [](auto* v) -> std::string {
        using T = std::remove_pointer_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) {
          return csv::format(*v);
        } else if constexpr (std::is_same_v<T, int> || std::is_same_v<T, std::uint64_t>) {
          return std::to_string(*v);
        } else if constexpr (std::is_same_v<T, std::string>) {
          return quote(*v);
        } else {
          std::string out = "[";
          for (std::size_t i = 0; i < v->size(); ++i) {
            if (i) out += ", ";
            if constexpr (std::is_same_v<T, std::vector<double>>) {
              out += csv::format((*v)[i]);
            } else if constexpr (std::is_same_v<T, std::vector<int>>) {
              out += std::to_string((*v)[i]);
            } else {
              out += quote((*v)[i]);
            }
          }
          return out + "]";
        }
      },
      field);
}

nlohmann::json json_value(const Field& field) {
  return std::visit([](auto* v) { return nlohmann::json(*v); }, field);
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw Error("config.parse", origin + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  RunConfig config;
  if (root.IsNull()) {
    validate(config);
    return config;
  }
  if (!root.IsMap()) throw Error("config.parse", origin + ": top level must be a mapping");
  read_map(root, "", fields(config), origin);
  validate(config);
  return config;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("config.io", "cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error("config.parse", "override '" + assignment + "' must look like key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  const auto table = fields(config);
  const Field* f = find_field(table, key);
  if (!f) throw Error("config.unknown_key", "--set: unknown key '" + key + "'");
  YAML::Node node;
  try {
    node = YAML::Load(value);
  } catch (const YAML::ParserException& e) {
    throw Error("config.parse", "--set " + key + ": " + e.msg);
  }
  if (node.IsNull() && std::holds_alternative<std::string*>(*f)) node = YAML::Node(std::string());
  assign(*f, node, key, "--set");
}

void validate(const RunConfig& c) {
  one_of(c.scenario, {"freqs", "echo", "fringes", "t2map", "hop"}, "scenario");
  in_range(c.geometry.b_gauss, 0.0, 100.0, "geometry.b_gauss");
  in_range(c.geometry.theta_b_deg, 0.0, 90.0, "geometry.theta_b_deg");
  in_range(c.geometry.phi_b_deg, -360.0, 360.0, "geometry.phi_b_deg");
  in_range(c.geometry.f_rot_hz, 0.0, 20000.0, "geometry.f_rot_hz");
  in_range(c.geometry.delta_theta_deg, 0.0, 10.0, "geometry.delta_theta_deg");
  in_range(c.geometry.phi0_deg, -360.0, 360.0, "geometry.phi0_deg");

  in_range(c.bath.abundance, 0.0, 1.0, "bath.abundance");
  in_range(c.bath.radius_nm, 0.16, 10.0, "bath.radius_nm");
  in_range(c.bath.min_distance_nm, 0.0, c.bath.radius_nm, "bath.min_distance_nm");
  require(c.bath.min_distance_nm < c.bath.radius_nm, "bath.min_distance_nm", "must be below bath.radius_nm");
  in_range(c.bath.n_seeds, 1, 1000, "bath.n_seeds");

  one_of(c.engine.kind, {"conditional", "full"}, "engine.kind");
  in_range(c.engine.g_max, 1, c.engine.kind == "full" ? 4 : 6, "engine.g_max");
  in_range(c.engine.dt_max_s, 0.0, 1e-3, "engine.dt_max_s");
  one_of(c.engine.integrator, {"magnus4", "midpoint"}, "engine.integrator");
  in_range(c.engine.t2_phenom_us, 0.0, 1e6, "engine.t2_phenom_us");
  one_of(c.engine.dipolar, {"full", "secular", "off"}, "engine.dipolar");
  in_range(c.engine.workers, 0, 256, "engine.workers");

  in_range(c.echo.tau_max_us, 1e-3, 1e4, "echo.tau_max_us");
  in_range(c.echo.tau_points, 2, 100000, "echo.tau_points");
  in_range(c.echo.start_time_s, 0.0, 1.0, "echo.start_time_s");
  in_range(c.echo.revival_prominence, 1e-6, 1.0, "echo.revival_prominence");

  valid_m_s(c.freqs.m_s, "freqs.m_s");
  in_range(c.freqs.n_spins, 1, 10000, "freqs.n_spins");
  in_range(c.freqs.t_max_s, 0.0, 1.0, "freqs.t_max_s");
  in_range(c.freqs.time_points, 2, 100000, "freqs.time_points");

  in_range(c.fringes.theta_min_deg, 0.0, 89.0, "fringes.theta_min_deg");
  in_range(c.fringes.theta_max_deg, c.fringes.theta_min_deg, 89.0, "fringes.theta_max_deg");
  in_range(c.fringes.theta_points, 1, 10000, "fringes.theta_points");
  in_range(c.fringes.revival_index, 0, 100, "fringes.revival_index");
  in_range(c.fringes.tau_override_us, 0.0, 1e4, "fringes.tau_override_us");
  require(c.fringes.phase_schedule_cycles.empty() ||
              c.fringes.phase_schedule_cycles.size() == static_cast<std::size_t>(c.fringes.theta_points),
          "fringes.phase_schedule_cycles", "length must equal fringes.theta_points");

  require(!c.t2map.theta_deg.empty(), "t2map.theta_deg", "needs at least one angle");
  for (double t : c.t2map.theta_deg) in_range(t, 0.0, 90.0, "t2map.theta_deg");
  require(!c.t2map.f_rot_hz.empty(), "t2map.f_rot_hz", "needs at least one speed");
  for (double f : c.t2map.f_rot_hz) in_range(f, 0.0, 20000.0, "t2map.f_rot_hz");
  in_range(c.t2map.min_points, 4, 100, "t2map.min_points");
  in_range(c.t2map.max_revivals, c.t2map.min_points, 100, "t2map.max_revivals");
  in_range(c.t2map.floor, 0.0, 0.99, "t2map.floor");

  valid_m_s(c.hop.m_s, "hop.m_s");
  require(c.hop.theta_deg < 0.0 || c.hop.theta_deg <= 90.0, "hop.theta_deg",
          "value outside allowed range [0, 90] (negative selects the magic angle)");
  in_range(c.hop.r_min_nm, 0.05, 10.0, "hop.r_min_nm");
  in_range(c.hop.r_max_nm, c.hop.r_min_nm, 10.0, "hop.r_max_nm");

  require(!c.output.directory.empty(), "output.directory", "must not be empty");
  for (const auto& f : c.output.formats) one_of(f, {"csv", "gnuplot"}, "output.formats");
}

std::string serialize_yaml(const RunConfig& config) {
  auto table = fields(const_cast<RunConfig&>(config));
  std::string out;
  std::string block;
  for (const auto& [key, field] : table) {
    const auto dot = key.find('.');
    if (dot == std::string::npos) {
      out += key + ": " + render(field) + "\n";
      block.clear();
      continue;
    }
    const std::string head = key.substr(0, dot);
    if (head != block) {
      out += head + ":\n";
      block = head;
    }
    out += "  " + key.substr(dot + 1) + ": " + render(field) + "\n";
  }
  return out;
}

nlohmann::json to_json(const RunConfig& config) {
  auto table = fields(const_cast<RunConfig&>(config));
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, field] : table) {
    const auto dot = key.find('.');
    if (dot == std::string::npos) {
      j[key] = json_value(field);
    } else {
      j[key.substr(0, dot)][key.substr(dot + 1)] = json_value(field);
    }
  }
  return j;
}

std::vector<std::string> config_keys() {
  RunConfig c;
  std::vector<std::string> out;
  for (const auto& [k, f] : fields(c)) out.push_back(k);
  return out;
}

FieldGeometry geometry_of(const RunConfig& c) {
  FieldGeometry g;
  g.b_gauss = c.geometry.b_gauss;
  g.theta_b = rad(c.geometry.theta_b_deg);
  g.phi_b = rad(c.geometry.phi_b_deg);
  g.omega_rot = angular(c.geometry.f_rot_hz);
  g.delta_theta = rad(c.geometry.delta_theta_deg);
  g.phi0 = rad(c.geometry.phi0_deg);
  return g;
}

BathParams bath_params_of(const RunConfig& c) {
  return {c.bath.abundance, c.bath.radius_nm, c.bath.min_distance_nm};
}

EngineSettings engine_of(const RunConfig& c) {
  EngineSettings s;
  s.engine = engine_from_string(c.engine.kind);
  s.g_max = c.engine.g_max;
  s.propagation.dt_max = c.engine.dt_max_s;
  s.propagation.integrator = integrator_from_string(c.engine.integrator);
  s.hamiltonian.include_dipolar = c.engine.dipolar != "off";
  s.hamiltonian.secular_dipolar = c.engine.dipolar == "secular";
  s.workers = c.engine.workers;
  return s;
}

std::vector<std::uint64_t> seeds_of(const RunConfig& c) {
  std::vector<std::uint64_t> seeds;
  for (int k = 0; k < c.bath.n_seeds; ++k) seeds.push_back(c.bath.seed + static_cast<std::uint64_t>(k));
  return seeds;
}

double t2_phenom_of(const RunConfig& c) {
  return c.engine.t2_phenom_us > 0.0 ? c.engine.t2_phenom_us * 1e-6 : kNoEnvelope;
}

}  // namespace nvrot::cli
