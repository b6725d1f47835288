#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "riskagg/factors.hpp"
#include "riskagg/nnet.hpp"

namespace riskagg {

enum class Propagation { ConditionalGaussian, AeDecoder, None };

std::string_view to_string(Propagation p) noexcept;
Propagation parse_propagation(std::string_view text);

/// Core factors shocked by a number of their own standard deviations.
struct StressScenario {
  std::string name;
  std::vector<std::string> core_labels;
  std::vector<double> shifts_sd;
  Propagation propagation = Propagation::ConditionalGaussian;

  void validate() const;
};

/// Largest condition number accepted for the core covariance block.
inline constexpr double kMaxCoreCondition = 1e12;

/// Core entries are mu_s + shift * sd; peripheral entries are the Gaussian
/// conditional mean E(F_u | F_s) = mu_u + S_us S_ss^-1 (F_s - mu_s) under the
/// unchanged factor covariance (or mu_u when propagation is None).
Eigen::VectorXd conditional_stress(const FactorModel& model, const StressScenario& scenario);

/// Worst portfolio outcome over the ellipsoid (s - mu)' S^-1 (s - mu) <= r^2
/// spanned by a subset of factors; the other factors stay at their means.
struct EllipsoidScenario {
  std::vector<std::string> factor_labels;
  double radius = 2.0;
  Eigen::VectorXd solution;
  /// (solution - mean) / factor_sd, i.e. the shift in standard deviations.
  Eigen::VectorXd shifts_sd;
  Eigen::VectorXd full_factor_vector;
  double objective = 0.0;
  double mahalanobis = 0.0;
  bool binding = false;
};

/// Closed form s* = mu - r S w / sqrt(w' S w), where w is the weighted beta
/// vector over the subset. Weights need not sum to one; only their direction
/// matters for the optimum.
EllipsoidScenario worst_case_ellipsoid(const FactorModel& model, const std::vector<std::string>& subset, double radius,
                                       const Eigen::VectorXd& weights);

/// Minimum of direction' s over `samples` points on the ellipsoid boundary:
/// an even angular grid in two dimensions, seeded random directions otherwise.
double ellipsoid_search_minimum(const Eigen::MatrixXd& covariance, const Eigen::VectorXd& mean,
                                const Eigen::VectorXd& direction, double radius, int samples,
                                std::uint64_t seed = 0);

/// Predicts peripheral codes from core codes with a freshly trained network
/// shaped like the joint decoder (hidden widths scaled by outputs / d, at
/// least one) and evaluates it at mu_core + shift * sd_core.
Eigen::VectorXd ae_stress_propagation(const Eigen::MatrixXd& codes, const std::vector<std::string>& code_labels,
                                      const StressScenario& scenario, const Architecture& decoder_arch,
                                      int decoder_outputs, const TrainConfig& config);
Eigen::VectorXd ae_stress_propagation(const ClusteredAe& model, const StandardizedPanel& panel,
                                      const StressScenario& scenario, const TrainConfig& config);

/// Architecture of a trained joint decoder (hidden widths and activation).
Architecture decoder_architecture(const Network& decoder);

struct PortfolioImpact {
  Eigen::VectorXd per_asset;
  double portfolio = 0.0;
};

/// alpha_i + sum_j beta_ij f_j per asset; weights must sum to one.
PortfolioImpact portfolio_impact(const FactorModel& model, const Eigen::VectorXd& factors,
                                 const Eigen::VectorXd& weights);

Eigen::VectorXd equal_weights(Eigen::Index assets);

struct TailFrequency {
  double fraction = 0.0;
  /// fraction * 250 trading days.
  double days_per_year = 0.0;
};

inline constexpr double kTradingDaysPerYear = 250.0;

/// Share of observations at or beyond mean + threshold * sd (below for
/// threshold <= 0, above otherwise).
TailFrequency tail_frequency(std::span<const double> series, double threshold_sd);

struct ScenarioResult {
  std::string name;
  std::string model;
  std::vector<std::string> factor_labels;
  std::vector<std::string> asset_labels;
  Eigen::VectorXd full_factor_vector;
  Eigen::VectorXd per_asset;
  double portfolio = 0.0;
  TailFrequency tail;
  std::optional<EllipsoidScenario> ellipsoid;
};

std::string scenario_result_to_json(const ScenarioResult& result, std::string_view config_hash, std::uint64_t seed);
/// `asset,impact` sorted by ascending impact (ties by label).
void write_sorted_impacts(std::ostream& out, const ScenarioResult& result);

}  // namespace riskagg
