#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "riskagg/factors.hpp"
#include "riskagg/nnet.hpp"
#include "riskagg/panel.hpp"
#include "riskagg/stress.hpp"

namespace riskagg::pipeline {

enum class Grouping { Categories, Ward };

enum class ScenarioKind { Bump, Ellipsoid };

/// `auto` resolves to conditional for PCA-based models and to the decoder
/// network for the clustered autoencoder.
enum class PropagationChoice { Auto, Conditional, AeDecoder, None };

struct ScenarioSpec {
  std::string name;
  ScenarioKind kind = ScenarioKind::Bump;
  std::vector<std::string> core;
  std::vector<double> shifts_sd;
  PropagationChoice propagation = PropagationChoice::Auto;
  std::vector<std::string> factors;
  double radius = 2.0;
  /// Empty: every stress model that has all referenced factors.
  std::vector<Provenance> models;
};

struct PlainAeSpec {
  bool enabled = false;
  int bottleneck = 6;
  Architecture architecture{{100}, Activation::Gelu, true};
};

/// Parsed run configuration. Paths are absolute (resolved against the
/// directory of the config file).
struct RunConfig {
  std::filesystem::path factors_path;
  std::optional<std::filesystem::path> assets_path;
  std::optional<std::filesystem::path> categories_path;
  std::optional<std::filesystem::path> weights_path;
  bool prices = false;
  ReturnMethod return_method = ReturnMethod::Log;

  WindowSpec window;
  Eigen::Index diagnose_components = 6;

  Grouping grouping = Grouping::Categories;
  int clusters = 6;

  std::vector<Provenance> aggregate_models{Provenance::ClusteredPca, Provenance::ClusteredAe};
  Eigen::Index global_pca_factors = 6;
  PlainAeSpec plain_ae;

  TrainConfig train;
  Architecture encoder{{10}, Activation::Swish, true};
  Architecture decoder{{60}, Activation::Swish, true};

  Eigen::Index calibration_window = 750;

  std::vector<Provenance> stress_models{Provenance::GlobalPca, Provenance::ClusteredPca};
  std::vector<ScenarioSpec> scenarios;

  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 0;
  /// 16 hex digits of FNV-1a over the config file bytes.
  std::string hash;
};

/// Reads the INI-style config. Throws Error(Errc::Config) with the offending
/// key on any invalid entry.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);

std::string config_hash(std::string_view bytes);

}  // namespace riskagg::pipeline
