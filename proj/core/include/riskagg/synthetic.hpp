#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "riskagg/panel.hpp"
#include "riskagg/random.hpp"

// Generators for synthetic return panels with planted structure.

namespace riskagg::synthetic {

/// `count` consecutive weekdays starting at (or after) `start`.
std::vector<Date> business_days(Date start, std::size_t count);

ReturnPanel make_panel(Eigen::MatrixXd values, std::vector<std::string> labels, Date start = {2000, 1, 3});
std::vector<std::string> numbered_labels(const std::string& prefix, Eigen::Index count);

Eigen::MatrixXd standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng);

/// Correlation matrix with unit diagonal, `rho` off the diagonal.
Eigen::MatrixXd equicorrelation(Eigen::Index d, double rho);
/// Block correlation: `within` inside each block, `between` across blocks.
Eigen::MatrixXd block_correlation(const std::vector<Eigen::Index>& block_sizes, double within, double between);

/// Gaussian sample whose population covariance is `cov`.
Eigen::MatrixXd correlated_sample(Eigen::Index n, const Eigen::MatrixXd& cov, Rng& rng);
/// Sample whose *sample* covariance (n - 1 convention) equals `cov` up to
/// rounding: the draw is whitened before being colored.
Eigen::MatrixXd exact_covariance_sample(Eigen::Index n, const Eigen::MatrixXd& cov, Rng& rng);

/// Returns with one latent factor per block:
/// x_j = loading * f_{block(j)} + noise * e_j, f ~ N(0, factor_cov).
struct BlockFactorPanel {
  Eigen::MatrixXd values;
  Eigen::MatrixXd factors;
  std::vector<int> block_of;
};
BlockFactorPanel block_factor_panel(Eigen::Index n, const std::vector<Eigen::Index>& block_sizes,
                                    const Eigen::MatrixXd& factor_cov, double loading, double noise, Rng& rng);

/// n x d data with population covariance Q diag(spectrum) Q' for a random
/// orthogonal Q.
Eigen::MatrixXd spectrum_sample(Eigen::Index n, const Eigen::VectorXd& spectrum, Rng& rng);

/// Columns that are noisy smooth nonlinear functions of one latent factor:
/// x_j = a_j f + b_j (f^2 - 1) + c_j sin(f) + noise * e_j.
Eigen::MatrixXd quadratic_factor_sample(Eigen::Index n, Eigen::Index d, double noise, Rng& rng);

}  // namespace riskagg::synthetic
