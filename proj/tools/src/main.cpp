#include <CLI11.hpp>

#include <iostream>
#include <nlohmann/json.hpp>

#include "nvrot/error.hpp"
#include "nvrot_cli/config.hpp"
#include "nvrot_cli/plot.hpp"
#include "nvrot_cli/scenarios.hpp"

namespace {

struct ConfigArgs {
  std::string path;
  std::vector<std::string> overrides;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("-c,--config", args.path, "YAML run configuration");
  cmd->add_option("--set", args.overrides, "override a dotted key, e.g. --set geometry.b_gauss=40")
      ->take_all();
}

// defaults < file < --set flags
nvrot::cli::RunConfig resolve(const ConfigArgs& args) {
  nvrot::cli::RunConfig cfg =
      args.path.empty() ? nvrot::cli::RunConfig{} : nvrot::cli::parse_config(args.path);
  for (const auto& o : args.overrides) nvrot::cli::apply_override(cfg, o);
  return cfg;
}

int fail(const std::string& code, const std::string& message) {
  nlohmann::json j = {{"error", {{"code", code}, {"message", message}}}};
  std::cerr << j.dump() << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nvrot: NV-centre spin-echo simulations in a rotating 13C bath"};
  app.set_version_flag("--version", std::string(NVROT_VERSION));
  app.require_subcommand(1);

  std::vector<std::pair<CLI::App*, std::string>> scenario_cmds;
  ConfigArgs scenario_args;
  std::string output_dir;
  for (const auto& name : nvrot::cli::kScenarios) {
    auto* cmd = app.add_subcommand(name, "run the " + name + " scenario");
    add_config_options(cmd, scenario_args);
    cmd->add_option("-o,--output", output_dir, "output directory (overrides output.directory)");
    scenario_cmds.emplace_back(cmd, name);
  }

  auto* bath_cmd = app.add_subcommand("bath", "bath archive utilities");
  bath_cmd->require_subcommand(1);
  auto* generate_cmd = bath_cmd->add_subcommand("generate", "write a seeded bath archive");
  ConfigArgs bath_args;
  add_config_options(generate_cmd, bath_args);
  std::string bath_out;
  generate_cmd->add_option("--out", bath_out, "archive path")->required();

  auto* validate_cmd = app.add_subcommand("validate", "check a configuration and print it resolved");
  ConfigArgs validate_args;
  validate_cmd->add_option("config", validate_args.path, "YAML run configuration");
  validate_cmd->add_option("--set", validate_args.overrides, "override a dotted key")->take_all();
  bool as_json = false;
  validate_cmd->add_flag("--json", as_json, "print JSON instead of YAML");

  auto* plot_cmd = app.add_subcommand("plot", "reshape result CSVs into gnuplot column files");
  std::string layout;
  std::vector<std::string> plot_inputs;
  std::string plot_out;
  plot_cmd->add_option("layout", layout, "fig1d, fig2c, fig3 or fig4")->required();
  plot_cmd->add_option("-i,--input", plot_inputs, "result CSV")->required();
  plot_cmd->add_option("-o,--output", plot_out, "output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail("cli.usage", e.what());
  }

  try {
    for (const auto& [cmd, name] : scenario_cmds) {
      if (!cmd->parsed()) continue;
      auto cfg = resolve(scenario_args);
      cfg.scenario = name;
      if (!output_dir.empty()) cfg.output.directory = output_dir;
      nvrot::cli::validate(cfg);
      const auto summary = nvrot::cli::run_scenario(cfg);
      nlohmann::json j = {{"directory", summary.directory.string()},
                          {"files", summary.files},
                          {"sidecar", nvrot::cli::kSidecarName},
                          {"wall_time_s", summary.sidecar["wall_time_s"]}};
      std::cout << j.dump(2) << "\n";
      return 0;
    }
    if (generate_cmd->parsed()) {
      const auto cfg = resolve(bath_args);
      nvrot::cli::validate(cfg);
      const auto path = nvrot::cli::generate_bath_file(cfg, bath_out);
      std::cout << path.string() << "\n";
      return 0;
    }
    if (validate_cmd->parsed()) {
      const auto cfg = resolve(validate_args);
      nvrot::cli::validate(cfg);
      if (as_json) {
        std::cout << nvrot::cli::to_json(cfg).dump(2) << "\n";
      } else {
        std::cout << nvrot::cli::serialize_yaml(cfg);
      }
      return 0;
    }
    if (plot_cmd->parsed()) {
      std::vector<std::filesystem::path> inputs(plot_inputs.begin(), plot_inputs.end());
      nvrot::cli::emit_plot_data(layout, inputs, plot_out);
      return 0;
    }
  } catch (const nvrot::Error& e) {
    return fail(e.code(), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail("cli.io", e.what());
  } catch (const std::exception& e) {
    return fail("cli.internal", e.what());
  }
  return fail("cli.usage", "no command given");
}
