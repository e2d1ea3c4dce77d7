#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "hypmass/masslab.hpp"

using namespace hypmass::lab;

int main(int argc, char** argv) {
  CLI::App app{"masslab: mass invariants of asymptotically hyperbolic metrics with umbilic boundary"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<int> dim, threads;
  std::optional<unsigned> seed;
  std::optional<std::string> out_dir, format;
  app.add_option("--config", config_path, "INI experiment file; defaults are used when absent");
  app.add_option("--dim", dim, "dimension n");
  app.add_option("--seed", seed, "seed for every random choice");
  app.add_option("--threads", threads, "worker threads for quadrature");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--format", format, "table format")->check(CLI::IsMember({"csv", "json"}));

  auto* verify = app.add_subcommand("verify", "run the invariant catalogue");
  auto* mass = app.add_subcommand("mass", "mass vector, radius table and energy scan for the configured data");
  auto* sweep = app.add_subcommand("sweep", "mass estimates along sigma, amplitude or radius-order");
  auto* spinor = app.add_subcommand("spinor-check", "Killing spinor and boundary operator checks (even n)");
  std::optional<std::string> axis;
  sweep->add_option("--axis", axis, "sweep axis")->check(CLI::IsMember({"sigma", "amplitude", "radius-order"}));
  for (auto* sub : {verify, mass, sweep, spinor}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_config_error;
  }

  try {
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    if (dim) cfg.n = *dim;
    if (seed) cfg.seed = *seed;
    if (threads) cfg.threads = *threads;
    if (out_dir) cfg.out_dir = *out_dir;
    if (format) cfg.format = *format;
    if (axis) cfg.sweep_axis = *axis;

    RunResult result;
    if (verify->parsed()) result = run_verify(cfg);
    else if (mass->parsed()) result = run_mass(cfg);
    else if (sweep->parsed()) result = run_sweep(cfg);
    else result = run_spinor_check(cfg);
    std::cout << result.summary;
    for (const auto& f : result.files) std::cout << "wrote " << f << "\n";
    return result.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return exit_config_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_invariant_failure;
  }
}
