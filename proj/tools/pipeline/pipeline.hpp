#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "riskagg/cluster.hpp"
#include "riskagg/factors.hpp"
#include "riskagg/nnet.hpp"
#include "riskagg/panel.hpp"

namespace riskagg::pipeline {

/// Factors built on the full factor history for one model.
struct Construction {
  AggregatedFactors factors;
  std::optional<LinearFactorMap> map;
  std::optional<ClusteredAeFit> cae;
  double mse = 0.0;
  std::string specification;
};

/// Runs the stages of a configured job, computing each intermediate result
/// at most once, and writes the artifacts of the requested commands below
/// the output directory.
class Pipeline {
 public:
  explicit Pipeline(RunConfig config);

  void diagnose();
  void cluster();
  void aggregate();
  void calibrate();
  void stress();
  /// Every command above, followed by an index of the written files.
  void report();

  const RunConfig& config() const noexcept { return config_; }
  const std::vector<std::filesystem::path>& written() const noexcept { return written_; }

 private:
  const ReturnPanel& factor_panel();
  const StandardizedPanel& standardized();
  const ReturnPanel& asset_panel();
  const Dendrogram& dendrogram();
  const ClusterAssignment& assignment();
  const Construction& construction(Provenance model);
  const FactorModel& factor_model(Provenance model);
  const Eigen::VectorXd& weights();

  std::filesystem::path artifact(const std::string& relative);
  void write_text(const std::string& relative, const std::string& body);
  std::string csv_header() const;

  RunConfig config_;
  std::vector<std::filesystem::path> written_;

  std::optional<ReturnPanel> factor_panel_;
  std::optional<StandardizedPanel> standardized_;
  std::optional<ReturnPanel> asset_panel_;
  std::optional<Dendrogram> dendrogram_;
  std::optional<ClusterAssignment> assignment_;
  std::map<Provenance, Construction> constructions_;
  std::map<Provenance, FactorModel> factor_models_;
  std::optional<Eigen::VectorXd> weights_;
};

/// Runs one command by name ("diagnose", "cluster", ...). Returns the files
/// written.
std::vector<std::filesystem::path> run_command(const std::string& command, RunConfig config);

/// Process exit code for an exception escaping run_command: 2 for
/// configuration and input problems, 3 for numeric failures.
int exit_code_for(const std::exception& e) noexcept;

}  // namespace riskagg::pipeline
