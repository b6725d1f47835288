#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "riskagg/panel.hpp"

namespace riskagg {

/// Principal components of a standardized panel.
///
/// `loadings` holds one PC per column (orthonormal), `eigenvalues` are the
/// variances of the score columns in descending order, and
/// `scores = data * loadings`. In each loading column the entry of largest
/// magnitude is positive.
struct PcaModel {
  std::vector<std::string> labels;
  Eigen::MatrixXd loadings;
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd scores;
  /// The standardized input the model was fit to.
  Eigen::MatrixXd data;
  ColumnStats source_stats;

  Eigen::Index dimension() const noexcept { return loadings.cols(); }
  Eigen::Index observations() const noexcept { return scores.rows(); }
};

/// Agreement between PCA on the features (X'X) and on the observations (XX').
struct DualityReport {
  double eigenvalue_max_rel_error = 0.0;
  /// Loadings rebuilt from the XX' eigenvectors vs. the X'X eigenvectors.
  double loading_max_abs_error = 0.0;
  /// XX' eigenvectors vs. scores scaled by the inverse root eigenvalues.
  double scores_max_abs_error = 0.0;
  /// Number of eigenpairs above the rank threshold that were compared.
  Eigen::Index compared = 0;
};

enum class Verdict { StrongIn, WeakIn, WeakOut, StrongOut };

std::string_view to_string(Verdict v) noexcept;

using CategoryVerdict = std::map<std::string, Verdict>;

/// Largest n for which fit_pca_dual will build the n x n Gram matrix.
inline constexpr Eigen::Index kMaxDualRows = 5000;

/// Symmetric eigendecomposition of X'X / (n - 1).
PcaModel fit_pca(const StandardizedPanel& panel);
PcaModel fit_pca(const Eigen::MatrixXd& standardized, std::vector<std::string> labels);

std::pair<PcaModel, DualityReport> fit_pca_dual(const StandardizedPanel& panel);
DualityReport check_duality(const PcaModel& model);

/// Rank-k approximation Z_k Phi_k' and its mean squared error against the
/// standardized input (mean over all n * d entries).
struct Reconstruction {
  Eigen::MatrixXd approx;
  double mse = 0.0;
};
Reconstruction reconstruct(const PcaModel& model, Eigen::Index k);

/// Entry (j, i) is Corr(x_j, z_i) = phi_ji * sqrt(lambda_i).
Eigen::MatrixXd factor_correlations(const PcaModel& model, bool absolute = false);

/// Number of PCs whose eigenvalue share is strictly above 1/d.
Eigen::Index kaiser_guttman(const PcaModel& model);
Eigen::Index kaiser_guttman(std::span<const double> eigenvalues);

struct ParticipationRatio {
  double ipr = 0.0;
  double pr = 0.0;
};

/// `component` is zero-based.
ParticipationRatio participation_ratio(const PcaModel& model, Eigen::Index component);
ParticipationRatio participation_ratio(const Eigen::VectorXd& eigenvector);

/// Size of the PR group: PR rounded half away from zero, clamped to [1, d].
Eigen::Index pr_group_size(double pr, Eigen::Index d);

/// Indices of the `size` largest |correlations|, ties broken by ascending
/// index; returned in ascending index order.
std::vector<Eigen::Index> top_indices(std::span<const double> abs_correlations, Eigen::Index size);

std::vector<std::string> pr_group(const PcaModel& model, Eigen::Index component);

Verdict classify_membership(std::size_t members, std::size_t members_in_group);

/// One verdict per category for the given PC.
CategoryVerdict classify_categories(const PcaModel& model, Eigen::Index component,
                                    const std::map<std::string, std::string>& categories);

}  // namespace riskagg
