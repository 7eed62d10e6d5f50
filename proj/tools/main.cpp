#include <iostream>

#include <CLI11.hpp>

#include "lmcf/cli.hpp"

namespace cli = lmcf::cli;

int main(int argc, char** argv) {
  CLI::App app{"Lagrangian mean curvature flow of curves: run, verify, analyze and sweep"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool svg = false;
  app.add_option("--config", config_path, "sectioned key = value config file");
  app.add_option("--out-dir", out_dir, "output directory, overrides [output] out_dir");
  auto* seed_opt = app.add_option("--seed", seed, "overrides [curve] seed");
  app.add_flag("--svg", svg, "write SVG frames");

  auto* run = app.add_subcommand("run", "integrate the flow and archive the run");
  auto* verify = app.add_subcommand("verify", "convergence checks of the evolution identities");
  auto* analyze = app.add_subcommand("analyze", "singular time, type, density budget and spectrum");
  auto* sweep = app.add_subcommand("sweep", "run and analyze a parameter grid");

  std::string run_dir;
  std::vector<std::string> probe;
  std::vector<std::string> grid;
  int threads = 0;
  verify->add_option("--run", run_dir, "run directory (default: --out-dir)");
  analyze->add_option("--run", run_dir, "run directory (default: --out-dir)");
  analyze->add_option("--probe", probe, "[probe] override key=value, repeatable");
  sweep->add_option("--grid", grid, "axis section.key=v1,v2,..., repeatable");
  sweep->add_option("--threads", threads, "worker threads, 0 = hardware concurrency");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitConfig;
  }

  auto load = [&]() {
    cli::RunConfig c = config_path.empty() ? cli::RunConfig{} : cli::load_config(config_path);
    if (!out_dir.empty()) c.output.out_dir = out_dir;
    if (seed_opt->count() > 0) c.curve.seed = seed;
    if (svg) c.output.svg = true;
    return c;
  };

  try {
    if (*run) return cli::cmd_run(load(), std::cout);
    if (*sweep) {
      std::vector<cli::GridAxis> axes;
      for (const auto& g : grid) axes.push_back(cli::parse_grid_axis(g));
      return cli::cmd_sweep(load(), axes, std::cout, threads);
    }
    if (run_dir.empty()) run_dir = out_dir;
    if (run_dir.empty()) {
      std::cerr << "error: --run <dir> (or --out-dir) is required\n";
      return cli::kExitConfig;
    }
    if (*verify) return cli::cmd_verify(run_dir, std::cout);
    return cli::cmd_analyze(run_dir, probe, std::cout);
  } catch (const lmcf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return cli::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitFailure;
  }
}
