// Command-line front end: run experiments from config files or presets,
// validate model assumptions, and print preset configs.

#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "svv/svv.hpp"

namespace {

int run_command(const std::string& source, bool paper_scale, std::optional<int> workers,
                std::optional<std::string> out_dir) {
  svv::ExperimentConfig cfg = svv::load_config_or_preset(source);
  svv::apply_env_overrides(cfg);  // precedence: config < environment < flags
  if (workers) cfg.workers = *workers;
  if (out_dir) cfg.out_dir = *out_dir;
  if (paper_scale) svv::apply_paper_scale(cfg);

  const svv::RunReport report = svv::run_experiment(cfg);
  std::cout << "wrote " << report.report_path.string() << "\n";
  for (const auto& entry : report.body["manifest"])
    std::cout << "  " << entry.get<std::string>() << "\n";
  const auto& results = report.body["results"];
  if (results.contains("slope")) std::cout << "slope: " << results["slope"] << "\n";
  if (results.contains("u")) std::cout << "hedge ratios: " << results["u"] << "\n";
  std::cout << "wall time: " << report.body["wall_time_s"].get<double>() << " s\n";
  return 0;
}

int validate_command(const std::string& source) {
  const svv::ExperimentConfig cfg = svv::load_config_or_preset(source);
  bool all_pass = true;
  for (const svv::AssumptionCheck& check : svv::validate_model(cfg)) {
    std::cout << (check.pass ? "[ ok ]" : "[FAIL]") << " " << check.name << " -- "
              << check.detail << "\n";
    all_pass = all_pass && check.pass;
  }
  if (!all_pass) throw svv::assumption_error("model assumptions violated; see checks above");
  std::cout << "all assumptions hold\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sandwiched-volatility market simulation and quadratic hedging"};
  app.require_subcommand(1);

  std::string source;
  bool paper_scale = false;
  std::optional<int> workers;
  std::optional<std::string> out_dir;
  CLI::App* run = app.add_subcommand("run", "run an experiment from a config file or preset");
  run->add_option("config", source, "config file path or preset name")->required();
  run->add_flag("--paper-scale", paper_scale, "multiply sample counts by 10");
  run->add_option("--workers", workers, "worker thread count (0 = hardware)");
  run->add_option("--out", out_dir, "output directory override");

  std::string validate_source;
  CLI::App* validate =
      app.add_subcommand("validate", "check model assumptions for a config or preset");
  validate->add_option("config", validate_source, "config file path or preset name")
      ->required();

  std::string preset_name;
  CLI::App* preset = app.add_subcommand("preset", "print a built-in preset config");
  preset->add_option("name", preset_name, "preset name")->required();

  try {
    app.parse(argc, argv);
    if (run->parsed()) return run_command(source, paper_scale, workers, out_dir);
    if (validate->parsed()) return validate_command(validate_source);
    std::cout << svv::preset_text(preset_name);
    return 0;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const svv::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const svv::assumption_error& e) {
    std::cerr << "assumption violation: " << e.what() << "\n";
    return 3;
  } catch (const svv::numerical_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
