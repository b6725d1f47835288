#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "riskagg/cluster.hpp"
#include "riskagg/nnet.hpp"
#include "riskagg/panel.hpp"

namespace riskagg {

enum class Provenance { GlobalPca, ClusteredPca, ClusteredAe };

std::string_view to_string(Provenance p) noexcept;
Provenance parse_provenance(std::string_view text);

/// n x K latent factor series with per-factor sample mean and sd.
struct AggregatedFactors {
  std::vector<std::string> labels;
  std::vector<Date> dates;
  Eigen::MatrixXd series;
  Provenance provenance = Provenance::ClusteredPca;
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;

  Eigen::Index count() const noexcept { return series.cols(); }
  void validate() const;
};

AggregatedFactors make_factors(std::vector<std::string> labels, std::vector<Date> dates, Eigen::MatrixXd series,
                               Provenance provenance);

/// Linear recipe that turns raw returns into factor scores: standardize with
/// `stats`, then factor k = sum over `columns[k]` of weights[k] * column.
/// Lets scores be recomputed on another window with the stored loadings.
struct LinearFactorMap {
  std::vector<std::string> input_labels;
  ColumnStats stats;
  std::vector<std::string> factor_labels;
  std::vector<std::vector<Eigen::Index>> columns;
  std::vector<Eigen::VectorXd> weights;
  Provenance provenance = Provenance::ClusteredPca;

  AggregatedFactors apply(const ReturnPanel& raw) const;
};

struct FactorConstruction {
  LinearFactorMap map;
  AggregatedFactors factors;
};

/// Factor k is the first-PC score of cluster k's columns.
FactorConstruction clustered_pca_factors(const StandardizedPanel& panel, const ClusterAssignment& assignment);

/// The first `count` PC scores of the whole panel, labelled PC1, PC2, ...
FactorConstruction global_pca_factors(const StandardizedPanel& panel, Eigen::Index count);

/// Codes of a trained clustered autoencoder, labelled by cluster name.
AggregatedFactors clustered_ae_factors(const ClusteredAe& model, const StandardizedPanel& panel);

void write_factor_series(std::ostream& out, const AggregatedFactors& factors);

/// Linear factor model r_i = alpha_i + sum_j beta_ij F_j + eps_i for p assets.
struct FactorModel {
  std::vector<std::string> asset_labels;
  std::vector<std::string> factor_labels;
  Provenance provenance = Provenance::ClusteredPca;
  Eigen::VectorXd alphas;
  Eigen::MatrixXd betas;
  Eigen::VectorXd residual_variances;
  Eigen::VectorXd factor_mean;
  Eigen::MatrixXd factor_covariance;
  /// Scale of one "standard deviation" shock per factor. Defaults to the sd
  /// of the calibration series; callers may substitute a longer history.
  Eigen::VectorXd factor_sd;
  Eigen::Index observations = 0;

  Eigen::Index assets() const noexcept { return betas.rows(); }
  Eigen::Index factors() const noexcept { return betas.cols(); }
  Eigen::Index factor_index(std::string_view label) const;
  void validate() const;
};

/// Per-asset OLS of returns on (1, F_1..F_K); residual variance uses n - K - 1.
FactorModel fit_factor_model(const Eigen::MatrixXd& asset_returns, std::vector<std::string> asset_labels,
                             const AggregatedFactors& factors);
/// Dates of the asset panel must equal the factor dates.
FactorModel fit_factor_model(const ReturnPanel& assets, const AggregatedFactors& factors);

/// B Omega B' (residual variances ignored).
Eigen::MatrixXd approx_covariance(const FactorModel& model);

std::string factor_model_to_json(const FactorModel& model);
FactorModel factor_model_from_json(std::string_view text);

}  // namespace riskagg
