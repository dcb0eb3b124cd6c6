#include "nvrot/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "nvrot/csv.hpp"
#include "nvrot/error.hpp"

namespace nvrot {

T2Map build_t2_map(const std::vector<double>& theta_grid, const std::vector<double>& omega_grid,
                   const T2MapSettings& settings, const PhysicalConstants& pc) {
  if (theta_grid.empty() || omega_grid.empty()) {
    throw Error("analysis.invalid_argument", "T2 map grids must be non-empty");
  }
  if (settings.seeds.empty()) throw Error("analysis.invalid_argument", "T2 map needs seeds");
  if (settings.max_revivals < settings.min_points) {
    throw Error("analysis.invalid_argument", "max_revivals must be at least min_points");
  }
  T2Map map;
  map.theta_grid = theta_grid;
  map.omega_grid = omega_grid;
  for (double theta : theta_grid) {
    for (double omega : omega_grid) {
      FieldGeometry g;
      g.b_gauss = settings.b_gauss;
      g.theta_b = theta;
      g.omega_rot = omega;
      g.delta_theta = settings.delta_theta;
      std::vector<double> tau;
      for (int n = 1; n <= settings.max_revivals; ++n) {
        tau.push_back(revival_time(settings.b_gauss, hz(omega), n, pc));
      }
      const EchoResult r = ensemble_average(settings.seeds, settings.bath, g, tau, 0.0,
                                            settings.t2_phenom, settings.engine, pc);
      T2Cell cell;
      cell.theta_b = theta;
      cell.omega_rot = omega;
      for (std::size_t i = 0; i < tau.size(); ++i) {
        cell.tau.push_back(tau[i]);
        cell.signal.push_back(r.signal[i]);
        if (r.signal[i] < settings.floor && cell.tau.size() >= static_cast<std::size_t>(settings.min_points)) {
          break;
        }
      }
      try {
        // S(tau) = S(0) exp(-(tau/T2)^n) with S(0) = 1 for the normalised echo
        FitOptions fo;
        fo.fixed_amplitude = 1.0;
        cell.fit = fit_stretched_exponential(cell.tau, cell.signal, fo);
        cell.status = cell.fit.status;
      } catch (const Error& e) {
        cell.fit.t2_eff = std::numeric_limits<double>::quiet_NaN();
        cell.fit.stretch_n = std::numeric_limits<double>::quiet_NaN();
        cell.fit.residual_rms = std::numeric_limits<double>::quiet_NaN();
        cell.status = e.code();
      }
      if (map.cells.empty()) map.metadata = r.metadata;
      map.cells.push_back(std::move(cell));
    }
  }
  for (const char* key : {"theta_b_deg", "f_rot_hz", "phi_b_deg", "dt_max_s", "steps"}) {
    map.metadata.erase(key);
  }
  map.metadata["t2_phenom_s"] = csv::format(settings.t2_phenom);
  map.metadata["max_revivals"] = std::to_string(settings.max_revivals);
  map.metadata["floor"] = csv::format(settings.floor);
  return map;
}

void write_t2_map_csv(std::ostream& out, const T2Map& map) {
  csv::Writer w(out);
  for (const auto& [k, v] : map.metadata) w.comment(k + ": " + v);
  w.header({"theta_deg", "f_rot_hz", "t2_us", "stretch_n", "residual", "status"});
  for (const auto& c : map.cells) {
    w.row({csv::format(deg(c.theta_b)), csv::format(hz(c.omega_rot)),
           csv::format(c.fit.t2_eff * 1e6), csv::format(c.fit.stretch_n),
           csv::format(c.fit.residual_rms), c.status});
  }
}

std::vector<Revival> detect_revivals(const EchoResult& result, double f_rot_hz,
                                     const RevivalOptions& options) {
  const auto& t = result.tau;
  const auto& s = result.signal;
  if (t.size() != s.size()) throw Error("analysis.invalid_argument", "tau/signal length mismatch");
  if (!(f_rot_hz > 0.0)) throw Error("analysis.invalid_argument", "f_rot must be positive");
  if (t.size() < 3 || t.back() - t.front() < 3.0 / f_rot_hz) {
    throw Error("analysis.invalid_argument", "tau grid must cover at least three rotation periods");
  }
  double peak = 0.0;
  for (double v : s) peak = std::max(peak, std::abs(v));
  const double threshold = options.prominence * peak;
  const double period = 2.0 / f_rot_hz;

  std::vector<Revival> out;
  const std::size_t n = s.size();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(s[i] > s[i - 1])) continue;
    // plateau: advance to its right edge
    std::size_t j = i;
    while (j + 1 < n && s[j + 1] == s[i]) ++j;
    if (j + 1 >= n || !(s[j + 1] < s[i])) {
      i = j;
      continue;
    }
    double left_min = s[i];
    for (std::size_t k = i; k-- > 0;) {
      if (s[k] > s[i]) break;
      left_min = std::min(left_min, s[k]);
    }
    double right_min = s[i];
    for (std::size_t k = j + 1; k < n; ++k) {
      if (s[k] > s[i]) break;
      right_min = std::min(right_min, s[k]);
    }
    const double prominence = s[i] - std::max(left_min, right_min);
    if (prominence >= threshold && prominence > 0.0) {
      const std::size_t c = (i + j) / 2;
      Revival r;
      r.time = t[c];
      r.amplitude = s[c];
      r.offset = t[c] - std::round(t[c] / period) * period;
      r.prominence = prominence;
      out.push_back(r);
    }
    i = j;
  }
  return out;
}

void write_revivals_csv(std::ostream& out, const std::vector<Revival>& revivals) {
  csv::Writer w(out);
  w.header({"time_s", "amplitude", "offset_from_2T_rot"});
  for (const auto& r : revivals) w.row({r.time, r.amplitude, r.offset});
}

HopAnalysis magic_angle_hop(const Vector3& site, double b_gauss, double theta, int m_s,
                            const PhysicalConstants& pc) {
  const Tensor3 a = hyperfine_tensor(site, pc);
  Tensor3 transverse = a;
  transverse.col(2).setZero();  // A P_perp
  const double k = (2.0 - 3.0 * std::abs(m_s)) * pc.gamma_e / pc.d_zfs;
  HopAnalysis h;
  h.isotropic = -k * b_gauss * transverse.trace() / 3.0;
  for (int i = 0; i < 3; ++i) {
    const double phi = 2.0 * std::numbers::pi * i / 3.0;
    const Vector3 dir(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
                      std::cos(theta));
    const Vector3 b = b_gauss * dir;
    const EffectiveField eff = effective_field(b, site, m_s, 0.0, Vector3::UnitZ(), pc);
    h.azimuth[i] = phi;
    h.shift[i] = pc.gamma_n * (eff.vector.norm() - b_gauss);
    h.first_order[i] = m_s * dir.dot(a * Vector3::UnitZ()) - k * b_gauss * dir.dot(transverse * dir);
    h.anisotropic[i] = h.first_order[i] - h.isotropic;
  }
  for (int i = 0; i < 3; ++i) {
    h.mean += h.shift[i] / 3.0;
    h.first_order_mean += h.first_order[i] / 3.0;
    h.anisotropic_mean += h.anisotropic[i] / 3.0;
    h.anisotropic_max = std::max(h.anisotropic_max, std::abs(h.anisotropic[i]));
  }
  return h;
}

double magic_angle_hop_average(const Vector3& site, double b_gauss, double theta, int m_s,
                               const PhysicalConstants& pc) {
  return magic_angle_hop(site, b_gauss, theta, m_s, pc).mean;
}

double dipolar_scaling_factor(double theta_b) {
  const double c = std::cos(theta_b);
  return 0.5 * (3.0 * c * c - 1.0);
}

}  // namespace nvrot
