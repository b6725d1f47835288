#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pipeline/config.hpp"
#include "pipeline/demo.hpp"
#include "pipeline/pipeline.hpp"

namespace rp = riskagg::pipeline;

int main(int argc, char** argv) {
  CLI::App app{"Risk factor aggregation and stress testing"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  const char* commands[][2] = {
      {"diagnose", "Rolling PCA diagnostics of the factor panel"},
      {"cluster", "Ward dendrogram and cluster assignment"},
      {"aggregate", "Build aggregated factors and the reconstruction MSE table"},
      {"calibrate", "Regress assets on aggregated factors"},
      {"stress", "Run the configured stress scenarios"},
      {"report", "Run every stage and write an artifact index"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "INI config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory (overrides the config)");
    sub->add_option("--seed", seed, "Random seed (overrides the config)");
  }

  std::string demo_dir;
  std::uint64_t demo_seed = 7;
  CLI::App* demo = app.add_subcommand("demo", "Write a synthetic dataset and example config");
  demo->add_option("dir", demo_dir, "Target directory")->required();
  demo->add_option("--seed", demo_seed, "Generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (demo->parsed()) {
      rp::write_demo(demo_dir, demo_seed);
      return 0;
    }
    rp::RunConfig cfg = rp::load_config(config_path);
    if (out_dir) cfg.output_dir = *out_dir;
    if (seed) cfg.seed = *seed;
    const std::string command = app.get_subcommands().front()->get_name();
    for (const auto& path : rp::run_command(command, std::move(cfg))) std::cout << path.string() << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return rp::exit_code_for(e);
  }
}
