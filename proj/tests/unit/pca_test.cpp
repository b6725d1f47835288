#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "riskagg/error.hpp"
#include "riskagg/pca.hpp"
#include "riskagg/synthetic.hpp"

namespace riskagg {
namespace {

PcaModel fit_exact(const Eigen::MatrixXd& corr, Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  return fit_pca(standardize(synthetic::make_panel(synthetic::exact_covariance_sample(n, corr, rng), {})));
}

TEST(FitPca, UncorrelatedColumns) {
  const PcaModel m = fit_exact(Eigen::MatrixXd::Identity(2, 2), 40, 1);
  EXPECT_NEAR(m.eigenvalues(0), 1.0, 1e-10);
  EXPECT_NEAR(m.eigenvalues(1), 1.0, 1e-10);
}

TEST(FitPca, PerfectlyCorrelatedColumns) {
  Eigen::MatrixXd x(4, 2);
  x << 1, 1, 2, 2, -1, -1, 5, 5;
  const PcaModel m = fit_pca(standardize(synthetic::make_panel(x, {})));
  EXPECT_NEAR(m.eigenvalues(0), 2.0, 1e-12);
  EXPECT_NEAR(m.eigenvalues(1), 0.0, 1e-12);
  EXPECT_NEAR(m.loadings(0, 0), 1.0 / std::numbers::sqrt2, 1e-12);
  EXPECT_NEAR(m.loadings(1, 0), 1.0 / std::numbers::sqrt2, 1e-12);
}

TEST(FitPca, EquicorrelatedThree) {
  const PcaModel m = fit_exact(synthetic::equicorrelation(3, 0.5), 100, 2);
  EXPECT_NEAR(m.eigenvalues(0), 2.0, 1e-10);
  EXPECT_NEAR(m.eigenvalues(1), 0.5, 1e-10);
  EXPECT_NEAR(m.eigenvalues(2), 0.5, 1e-10);
}

TEST(FitPca, StructuralProperties) {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index d = 3 + trial;
    const Eigen::Index n = 20 + 7 * trial;
    const PcaModel m = fit_pca(standardize(synthetic::make_panel(synthetic::standard_normal(n, d, rng), {})));
    const Eigen::MatrixXd gram = m.loadings.transpose() * m.loadings;
    EXPECT_LE((gram - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NEAR(m.eigenvalues.sum(), static_cast<double>(d), 1e-10);
    for (Eigen::Index i = 1; i < d; ++i) EXPECT_GE(m.eigenvalues(i - 1), m.eigenvalues(i));
    EXPECT_GE(m.eigenvalues.minCoeff(), 0.0);
    const Eigen::MatrixXd score_cov = m.scores.transpose() * m.scores / static_cast<double>(n - 1);
    Eigen::MatrixXd off = score_cov;
    off.diagonal().setZero();
    EXPECT_LE(off.cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((score_cov.diagonal() - m.eigenvalues).cwiseAbs().maxCoeff(), 1e-10);
    for (Eigen::Index i = 0; i < d; ++i) {
      Eigen::Index arg = 0;
      m.loadings.col(i).cwiseAbs().maxCoeff(&arg);
      EXPECT_GT(m.loadings(arg, i), 0.0);
    }
  }
}

TEST(FitPca, SignFlipInvariance) {
  Rng rng(8);
  const Eigen::MatrixXd x = synthetic::correlated_sample(80, synthetic::equicorrelation(5, 0.4), rng);
  const PcaModel base = fit_pca(standardize(synthetic::make_panel(x, {})));
  Eigen::MatrixXd flipped = x;
  flipped.col(2) *= -1.0;
  const PcaModel m = fit_pca(standardize(synthetic::make_panel(flipped, {})));
  EXPECT_LE((m.eigenvalues - base.eigenvalues).cwiseAbs().maxCoeff(), 1e-10);
  const Eigen::MatrixXd a = factor_correlations(base, true);
  const Eigen::MatrixXd b = factor_correlations(m, true);
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Duality, FiftyByTen) {
  Rng rng(21);
  const Eigen::MatrixXd x = synthetic::correlated_sample(50, synthetic::equicorrelation(10, 0.3), rng);
  const auto [model, report] = fit_pca_dual(standardize(synthetic::make_panel(x, {})));
  EXPECT_EQ(report.compared, 10);
  EXPECT_LE(report.eigenvalue_max_rel_error, 1e-8);
  EXPECT_LE(report.loading_max_abs_error, 1e-8);
  EXPECT_LE(report.scores_max_abs_error, 1e-8);
}

TEST(Duality, RankOne) {
  Rng rng(3);
  const Eigen::MatrixXd f = synthetic::standard_normal(30, 1, rng);
  Eigen::MatrixXd x(30, 4);
  for (int j = 0; j < 4; ++j) x.col(j) = f.col(0) * (j + 1.0);
  const auto [model, report] = fit_pca_dual(standardize(synthetic::make_panel(x, {})));
  EXPECT_NEAR(model.eigenvalues(0), 4.0, 1e-10);
  EXPECT_LE(model.eigenvalues.tail(3).maxCoeff(), 1e-10);
  EXPECT_EQ(report.compared, 1);
  EXPECT_LE(report.eigenvalue_max_rel_error, 1e-8);
  EXPECT_LE(report.loading_max_abs_error, 1e-8);
}

TEST(Duality, SquarePanel) {
  Rng rng(4);
  const Eigen::MatrixXd x = synthetic::standard_normal(10, 10, rng);
  const auto [model, report] = fit_pca_dual(standardize(synthetic::make_panel(x, {})));
  // Centering leaves rank 9.
  EXPECT_EQ(report.compared, 9);
  EXPECT_LE(report.eigenvalue_max_rel_error, 1e-8);
  EXPECT_LE(report.loading_max_abs_error, 1e-8);
}

TEST(Reconstruct, FullRankAndMonotone) {
  Rng rng(9);
  const PcaModel m = fit_pca(standardize(synthetic::make_panel(synthetic::correlated_sample(60, synthetic::equicorrelation(6, 0.5), rng), {})));
  EXPECT_LE(reconstruct(m, 6).mse, 1e-10);
  double previous = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 1; k <= 6; ++k) {
    const double mse = reconstruct(m, k).mse;
    EXPECT_LE(mse, previous + 1e-12);
    // Discarded variance share: sum of dropped eigenvalues * (n-1)/n / d.
    const double expected = m.eigenvalues.tail(6 - k).sum() * 59.0 / 60.0 / 6.0;
    EXPECT_NEAR(mse, expected, 1e-10);
    previous = mse;
  }
  try {
    reconstruct(m, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::OutOfRange);
  }
  EXPECT_THROW(reconstruct(m, 7), Error);
}

TEST(FactorCorrelations, MatchesSampleCorrelation) {
  Rng rng(12);
  const PcaModel m = fit_pca(standardize(synthetic::make_panel(synthetic::correlated_sample(120, synthetic::equicorrelation(5, 0.3), rng), {})));
  const Eigen::MatrixXd c = factor_correlations(m);
  EXPECT_LE(c.cwiseAbs().maxCoeff(), 1.0 + 1e-8);
  for (Eigen::Index j = 0; j < 5; ++j) {
    for (Eigen::Index i = 0; i < 5; ++i) {
      EXPECT_NEAR(c(j, i), oracle::sample_correlation(m.data.col(j), m.scores.col(i)), 1e-6);
    }
  }
}

TEST(KaiserGuttman, Examples) {
  const std::vector<double> a{0.5, 0.3, 0.2};
  EXPECT_EQ(kaiser_guttman(a), 1);
  const std::vector<double> flat{1.0, 1.0, 1.0, 1.0};
  EXPECT_EQ(kaiser_guttman(flat), 0);
  const PcaModel m = fit_exact(synthetic::block_correlation({3, 3, 3, 3}, 0.9, 0.0), 200, 14);
  EXPECT_EQ(kaiser_guttman(m), 4);
}

TEST(ParticipationRatio, Examples) {
  EXPECT_NEAR(participation_ratio(Eigen::VectorXd::Constant(5, 1.0 / std::sqrt(5.0))).pr, 5.0, 1e-12);
  EXPECT_NEAR(participation_ratio(Eigen::VectorXd::Unit(5, 2)).pr, 1.0, 1e-12);
  Eigen::VectorXd half = Eigen::VectorXd::Zero(6);
  half(0) = half(1) = std::sqrt(0.5);
  EXPECT_NEAR(participation_ratio(half).pr, 2.0, 1e-12);
}

TEST(ParticipationRatio, PlantedPanels) {
  const Eigen::Index d = 10;
  const PcaModel eq = fit_exact(synthetic::equicorrelation(d, 0.8), 300, 15);
  EXPECT_GE(participation_ratio(eq, 0).pr, 0.9 * d);

  // Nine tightly correlated columns and one standing on its own.
  Eigen::MatrixXd corr = synthetic::equicorrelation(d, 0.7);
  corr.row(3).setZero();
  corr.col(3).setZero();
  corr(3, 3) = 1.0;
  const PcaModel dom = fit_exact(corr, 400, 16);
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < d; ++i) best = std::min(best, participation_ratio(dom, i).pr);
  EXPECT_LE(best, 1.5);
}

TEST(PrGroup, SizeRoundingAndClamping) {
  EXPECT_EQ(pr_group_size(2.5, 10), 3);
  EXPECT_EQ(pr_group_size(2.49, 10), 2);
  EXPECT_EQ(pr_group_size(0.2, 10), 1);
  EXPECT_EQ(pr_group_size(10.0, 10), 10);
}

TEST(PrGroup, TopIndicesTieBreak) {
  const std::vector<double> corr{0.2, 0.9, 0.5, 0.9, 0.1};
  EXPECT_EQ(top_indices(corr, 2), (std::vector<Eigen::Index>{1, 3}));
  EXPECT_EQ(top_indices(corr, 3), (std::vector<Eigen::Index>{1, 2, 3}));
  const std::vector<double> tie{0.5, 0.5, 0.5};
  EXPECT_EQ(top_indices(tie, 1), (std::vector<Eigen::Index>{0}));
}

TEST(PrGroup, AllLabelsWhenPrIsFull) {
  const PcaModel eq = fit_exact(synthetic::equicorrelation(4, 0.9), 100, 17);
  EXPECT_EQ(pr_group_size(participation_ratio(eq, 0).pr, 4), 4);
  EXPECT_EQ(pr_group(eq, 0).size(), 4u);
}

TEST(Verdicts, MembershipRules) {
  EXPECT_EQ(classify_membership(2, 2), Verdict::StrongIn);
  EXPECT_EQ(classify_membership(3, 2), Verdict::WeakIn);
  EXPECT_EQ(classify_membership(2, 1), Verdict::WeakOut);
  EXPECT_EQ(classify_membership(3, 0), Verdict::StrongOut);
  EXPECT_EQ(to_string(Verdict::WeakIn), "WeakIn");
}

TEST(Verdicts, CategoriesOnPlantedBlock) {
  // First PC lives on the A block only.
  std::vector<Eigen::Index> sizes{3, 3};
  Eigen::MatrixXd corr = synthetic::block_correlation(sizes, 0.0, 0.0);
  corr.block(0, 0, 3, 3) = synthetic::equicorrelation(3, 0.95);
  Rng rng(18);
  const Eigen::MatrixXd x = synthetic::exact_covariance_sample(200, corr, rng);
  const PcaModel m = fit_pca(x, {"a1", "a2", "a3", "b1", "b2", "b3"});
  const std::map<std::string, std::string> cats{{"a1", "A"}, {"a2", "A"}, {"a3", "A"},
                                                {"b1", "B"}, {"b2", "B"}, {"b3", "B"}};
  const CategoryVerdict v = classify_categories(m, 0, cats);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v.at("A"), Verdict::StrongIn);
  EXPECT_EQ(v.at("B"), Verdict::StrongOut);
}

}  // namespace
}  // namespace riskagg
