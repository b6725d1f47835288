#include "riskagg/pca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <Eigen/Eigenvalues>

#include "riskagg/error.hpp"

namespace riskagg {
namespace {

constexpr double kClip = 1e-10;

// Eigenpairs of a symmetric matrix in descending order with the sign
// convention applied.
void sorted_eigen(const Eigen::MatrixXd& sym, Eigen::VectorXd& values, Eigen::MatrixXd& vectors) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) throw Error(Errc::Convergence, "eigensolver failed to converge");
  const Eigen::Index m = sym.rows();
  // Eigen returns ascending order.
  values = solver.eigenvalues().reverse();
  vectors = solver.eigenvectors().rowwise().reverse();
  for (Eigen::Index k = 0; k < m; ++k) {
    if (values(k) < 0.0 && values(k) >= -kClip * std::max(1.0, std::abs(values(0)))) values(k) = 0.0;
    Eigen::Index arg = 0;
    vectors.col(k).cwiseAbs().maxCoeff(&arg);
    if (vectors(arg, k) < 0.0) vectors.col(k) *= -1.0;
  }
}

void require_component(const PcaModel& model, Eigen::Index component) {
  if (component < 0 || component >= model.dimension()) {
    throw Error(Errc::OutOfRange, "component " + std::to_string(component) + " outside [0, " +
                                      std::to_string(model.dimension()) + ")");
  }
}

// Flips `v` to best match `ref` and returns the max abs difference.
double aligned_max_diff(const Eigen::VectorXd& ref, const Eigen::VectorXd& v) {
  const double sign = ref.dot(v) < 0.0 ? -1.0 : 1.0;
  return (ref - sign * v).cwiseAbs().maxCoeff();
}

}  // namespace

std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::StrongIn: return "StrongIn";
    case Verdict::WeakIn: return "WeakIn";
    case Verdict::WeakOut: return "WeakOut";
    case Verdict::StrongOut: return "StrongOut";
  }
  return "?";
}

PcaModel fit_pca(const StandardizedPanel& panel) {
  PcaModel model = fit_pca(panel.values, panel.labels());
  model.source_stats = panel.stats;
  return model;
}

PcaModel fit_pca(const Eigen::MatrixXd& x, std::vector<std::string> labels) {
  if (x.cols() < 1 || x.rows() < 2) throw Error(Errc::InsufficientData, "PCA needs n >= 2 rows and d >= 1 columns");
  if (!x.allFinite()) throw Error(Errc::NonFinite, "PCA input contains non-finite values");
  if (labels.empty()) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) labels.push_back("x" + std::to_string(j + 1));
  }
  if (static_cast<Eigen::Index>(labels.size()) != x.cols()) throw Error(Errc::ShapeMismatch, "label count != columns");

  PcaModel model;
  model.labels = std::move(labels);
  model.data = x;
  const Eigen::MatrixXd corr = (x.transpose() * x) / static_cast<double>(x.rows() - 1);
  sorted_eigen(corr, model.eigenvalues, model.loadings);
  model.scores = x * model.loadings;
  model.source_stats.mean = Eigen::VectorXd::Zero(x.cols());
  model.source_stats.sd = Eigen::VectorXd::Ones(x.cols());
  return model;
}

DualityReport check_duality(const PcaModel& model) {
  const Eigen::MatrixXd& x = model.data;
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (n > kMaxDualRows) {
    throw Error(Errc::OutOfRange, "duality check limited to n <= " + std::to_string(kMaxDualRows) + " rows");
  }
  // Work with the unscaled Gram matrices: l_k = (n - 1) * lambda_k.
  const double scale = static_cast<double>(n - 1);
  Eigen::VectorXd obs_values;
  Eigen::MatrixXd obs_vectors;
  sorted_eigen(x * x.transpose(), obs_values, obs_vectors);
  const Eigen::VectorXd feat_values = model.eigenvalues * scale;

  DualityReport report;
  const double top = std::max(feat_values(0), obs_values(0));
  const double rank_tol = std::max(n, d) * std::numeric_limits<double>::epsilon() * std::max(top, 1.0) * 1e3;
  const Eigen::Index common = std::min(n, d);
  for (Eigen::Index k = 0; k < std::max(n, d); ++k) {
    const double lf = k < d ? feat_values(k) : 0.0;
    const double lo = k < n ? obs_values(k) : 0.0;
    // Relative for the nonzero spectrum, relative to the top eigenvalue for
    // the null space.
    const double denom = lf > rank_tol ? lf : std::max(top, 1e-300);
    const double err = std::abs(lf - lo) / denom;
    report.eigenvalue_max_rel_error = std::max(report.eigenvalue_max_rel_error, err);
  }
  for (Eigen::Index k = 0; k < common; ++k) {
    const double l = feat_values(k);
    if (l <= rank_tol) break;
    // Eigenvectors are unique only for simple eigenvalues.
    const double gap_prev = k > 0 ? feat_values(k - 1) - l : l;
    const double gap_next = k + 1 < d ? l - feat_values(k + 1) : l;
    if (std::min(gap_prev, gap_next) <= rank_tol) continue;
    const double inv_root = 1.0 / std::sqrt(l);
    const Eigen::VectorXd phi_tilde_from_scores = model.scores.col(k) * inv_root;
    report.scores_max_abs_error =
        std::max(report.scores_max_abs_error, aligned_max_diff(obs_vectors.col(k), phi_tilde_from_scores));
    const Eigen::VectorXd phi_from_obs = x.transpose() * obs_vectors.col(k) * inv_root;
    report.loading_max_abs_error =
        std::max(report.loading_max_abs_error, aligned_max_diff(model.loadings.col(k), phi_from_obs));
    ++report.compared;
  }
  return report;
}

std::pair<PcaModel, DualityReport> fit_pca_dual(const StandardizedPanel& panel) {
  if (panel.rows() > kMaxDualRows) {
    throw Error(Errc::OutOfRange, "duality check limited to n <= " + std::to_string(kMaxDualRows) + " rows");
  }
  PcaModel model = fit_pca(panel);
  DualityReport report = check_duality(model);
  return {std::move(model), report};
}

Reconstruction reconstruct(const PcaModel& model, Eigen::Index k) {
  if (k < 1 || k > model.dimension()) {
    throw Error(Errc::OutOfRange, "k = " + std::to_string(k) + " outside [1, " + std::to_string(model.dimension()) + "]");
  }
  Reconstruction r;
  r.approx = model.scores.leftCols(k) * model.loadings.leftCols(k).transpose();
  r.mse = (model.data - r.approx).squaredNorm() / static_cast<double>(model.data.size());
  return r;
}

Eigen::MatrixXd factor_correlations(const PcaModel& model, bool absolute) {
  const Eigen::VectorXd roots = model.eigenvalues.cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXd corr = model.loadings * roots.asDiagonal();
  if (absolute) corr = corr.cwiseAbs();
  return corr;
}

Eigen::Index kaiser_guttman(std::span<const double> eigenvalues) {
  const double total = std::accumulate(eigenvalues.begin(), eigenvalues.end(), 0.0);
  if (eigenvalues.empty() || !(total > 0.0)) return 0;
  const double threshold = 1.0 / static_cast<double>(eigenvalues.size());
  // Shares equal to 1/d up to rounding do not count.
  constexpr double kTol = 1e-12;
  return std::count_if(eigenvalues.begin(), eigenvalues.end(),
                       [&](double l) { return l / total > threshold + kTol; });
}

Eigen::Index kaiser_guttman(const PcaModel& model) {
  return kaiser_guttman(std::span<const double>(model.eigenvalues.data(), static_cast<std::size_t>(model.eigenvalues.size())));
}

ParticipationRatio participation_ratio(const Eigen::VectorXd& v) {
  ParticipationRatio r;
  r.ipr = v.array().square().square().sum();
  r.pr = 1.0 / r.ipr;
  return r;
}

ParticipationRatio participation_ratio(const PcaModel& model, Eigen::Index component) {
  require_component(model, component);
  return participation_ratio(Eigen::VectorXd(model.loadings.col(component)));
}

Eigen::Index pr_group_size(double pr, Eigen::Index d) {
  // std::lround rounds halfway cases away from zero.
  const long rounded = std::isfinite(pr) ? std::lround(pr) : static_cast<long>(d);
  return std::clamp<Eigen::Index>(rounded, 1, d);
}

std::vector<Eigen::Index> top_indices(std::span<const double> abs_correlations, Eigen::Index size) {
  std::vector<Eigen::Index> order(abs_correlations.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return abs_correlations[static_cast<std::size_t>(a)] > abs_correlations[static_cast<std::size_t>(b)];
  });
  size = std::clamp<Eigen::Index>(size, 0, static_cast<Eigen::Index>(order.size()));
  order.resize(static_cast<std::size_t>(size));
  std::sort(order.begin(), order.end());
  return order;
}

std::vector<std::string> pr_group(const PcaModel& model, Eigen::Index component) {
  require_component(model, component);
  const auto pr = participation_ratio(model, component);
  const Eigen::VectorXd corr = factor_correlations(model, true).col(component);
  const auto idx = top_indices(std::span<const double>(corr.data(), static_cast<std::size_t>(corr.size())),
                               pr_group_size(pr.pr, model.dimension()));
  std::vector<std::string> labels;
  labels.reserve(idx.size());
  for (const auto i : idx) labels.push_back(model.labels[static_cast<std::size_t>(i)]);
  return labels;
}

Verdict classify_membership(std::size_t members, std::size_t in_group) {
  if (in_group == members) return Verdict::StrongIn;
  if (in_group == 0) return Verdict::StrongOut;
  return 2 * in_group > members ? Verdict::WeakIn : Verdict::WeakOut;
}

CategoryVerdict classify_categories(const PcaModel& model, Eigen::Index component,
                                    const std::map<std::string, std::string>& categories) {
  const auto group = pr_group(model, component);
  const std::set<std::string> in_group(group.begin(), group.end());
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;  // category -> (members, in group)
  for (const auto& label : model.labels) {
    const auto it = categories.find(label);
    if (it == categories.end()) throw Error(Errc::Config, "label '" + label + "' has no category");
    auto& c = counts[it->second];
    ++c.first;
    if (in_group.contains(label)) ++c.second;
  }
  CategoryVerdict verdicts;
  for (const auto& [category, c] : counts) verdicts.emplace(category, classify_membership(c.first, c.second));
  return verdicts;
}

}  // namespace riskagg
