#include "nvrot_cli/plot.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "nvrot/csv.hpp"
#include "nvrot/error.hpp"
#include "nvrot_cli/scenarios.hpp"

namespace nvrot::cli {

namespace fs = std::filesystem;

namespace {

csv::Table load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("plot.missing_input", "cannot open " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  if (text.str().find_first_not_of(" \t\r\n") == std::string::npos) {
    throw Error("plot.empty_input", path.string() + " is empty");
  }
  csv::Table t = csv::read(text);
  if (t.rows.empty()) throw Error("plot.empty_input", path.string() + " has no data rows");
  return t;
}

std::string num(double v) { return csv::format(v); }

void one_input(const std::vector<fs::path>& inputs, const std::string& layout) {
  if (inputs.size() != 1) {
    throw Error("plot.invalid_argument", layout + " takes exactly one input file");
  }
}

std::string fig1d(const std::vector<fs::path>& inputs) {
  if (inputs.empty()) throw Error("plot.invalid_argument", "fig1d needs at least one freqs CSV");
  std::ostringstream out;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const auto t = load(inputs[k]);
    const auto c_spin = t.column("spin_index");
    const auto c_time = t.column("time_s");
    const auto c_ms = t.column("m_s");
    const auto c_f = t.column("frequency_hz");
    // time -> spin -> frequency, both in first-seen order
    std::vector<std::string> times, spins;
    std::map<std::pair<std::string, std::string>, double> value;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto& tm = t.rows[r][c_time];
      const auto& sp = t.rows[r][c_spin];
      if (std::find(times.begin(), times.end(), tm) == times.end()) times.push_back(tm);
      if (std::find(spins.begin(), spins.end(), sp) == spins.end()) spins.push_back(sp);
      value[{tm, sp}] = t.number(r, c_f);
    }
    if (k) out << "\n\n";
    out << "# fig1d block " << k << ": " << inputs[k].filename().string() << ", m_s = "
        << t.rows[0][c_ms] << "\n# time_us";
    for (const auto& s : spins) out << " spin" << s << "_khz";
    out << "\n";
    for (const auto& tm : times) {
      out << num(std::stod(tm) * 1e6);
      for (const auto& s : spins) {
        const auto it = value.find({tm, s});
        out << ' ' << (it == value.end() ? std::string("nan") : num(it->second * 1e-3));
      }
      out << "\n";
    }
  }
  return out.str();
}

std::string fig2c(const std::vector<fs::path>& inputs) {
  one_input(inputs, "fig2c");
  const auto t = load(inputs[0]);
  const auto c_th = t.column("theta_deg");
  const auto c_s = t.column("signal");
  const auto c_e = t.column("envelope");
  const auto c_sp = t.column("spread");
  std::ostringstream out;
  out << "# fig2c: " << inputs[0].filename().string() << "\n# theta_deg signal envelope spread\n";
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    out << num(t.number(r, c_th)) << ' ' << num(t.number(r, c_s)) << ' ' << num(t.number(r, c_e))
        << ' ' << num(t.number(r, c_sp)) << "\n";
  }
  return out.str();
}

std::string fig3(const std::vector<fs::path>& inputs) {
  one_input(inputs, "fig3");
  const auto t = load(inputs[0]);
  const auto c_th = t.column("theta_deg");
  const auto c_f = t.column("f_rot_hz");
  const auto c_t2 = t.column("t2_us");
  std::vector<double> thetas, freqs;
  std::map<std::pair<double, double>, double> value;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double th = t.number(r, c_th);
    const double f = t.number(r, c_f);
    if (std::find(thetas.begin(), thetas.end(), th) == thetas.end()) thetas.push_back(th);
    if (std::find(freqs.begin(), freqs.end(), f) == freqs.end()) freqs.push_back(f);
    value[{th, f}] = t.number(r, c_t2);
  }
  std::ostringstream out;
  out << "# fig3: " << inputs[0].filename().string() << "\n"
      << "# nonuniform matrix of t2_us: first row = column count then f_rot_hz values,\n"
      << "# then one row per theta_deg (first entry) across f_rot\n";
  out << freqs.size();
  for (double f : freqs) out << ' ' << num(f);
  out << "\n";
  for (double th : thetas) {
    out << num(th);
    for (double f : freqs) {
      const auto it = value.find({th, f});
      out << ' ' << (it == value.end() ? std::string("nan") : num(it->second));
    }
    out << "\n";
  }
  return out.str();
}

std::string fig4(const std::vector<fs::path>& inputs) {
  one_input(inputs, "fig4");
  const auto t = load(inputs[0]);
  const auto c_tau = t.column("tau_s");
  const auto c_s = t.column("signal");
  const auto c_sp = t.column("spread");
  std::ostringstream out;
  out << "# fig4: " << inputs[0].filename().string() << "\n# tau_us signal spread\n";
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    out << num(t.number(r, c_tau) * 1e6) << ' ' << num(t.number(r, c_s)) << ' '
        << num(t.number(r, c_sp)) << "\n";
  }
  return out.str();
}

}  // namespace

std::string plot_data(const std::string& layout, const std::vector<fs::path>& inputs) {
  if (layout == "fig1d") return fig1d(inputs);
  if (layout == "fig2c") return fig2c(inputs);
  if (layout == "fig3") return fig3(inputs);
  if (layout == "fig4") return fig4(inputs);
  throw Error("plot.invalid_argument", "unknown layout '" + layout + "' (fig1d, fig2c, fig3, fig4)");
}

void emit_plot_data(const std::string& layout, const std::vector<fs::path>& inputs,
                    const fs::path& output) {
  const std::string data = plot_data(layout, inputs);
  if (output.has_parent_path()) fs::create_directories(output.parent_path());
  write_atomic(output, data);
}

}  // namespace nvrot::cli
