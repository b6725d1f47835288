// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "riskagg/cluster.hpp"
#include "riskagg/factors.hpp"
#include "riskagg/nnet.hpp"
#include "riskagg/pca.hpp"
#include "riskagg/stress.hpp"
#include "riskagg/synthetic.hpp"

namespace fs = std::filesystem;
using namespace riskagg;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Eigen::MatrixXd random_covariance(Eigen::Index k, Rng& rng) {
  const Eigen::MatrixXd a = synthetic::standard_normal(k, k, rng);
  return a * a.transpose() / static_cast<double>(k) + 0.2 * Eigen::MatrixXd::Identity(k, k);
}

FactorModel model_with(const Eigen::VectorXd& mu, const Eigen::MatrixXd& cov, const Eigen::MatrixXd& betas) {
  FactorModel m;
  m.factor_labels = synthetic::numbered_labels("F", mu.size());
  m.asset_labels = synthetic::numbered_labels("a", betas.rows());
  m.alphas = Eigen::VectorXd::Zero(betas.rows());
  m.betas = betas;
  m.residual_variances = Eigen::VectorXd::Zero(betas.rows());
  m.factor_mean = mu;
  m.factor_covariance = cov;
  m.factor_sd = cov.diagonal().cwiseSqrt();
  m.observations = 1000;
  return m;
}

Outcome duality() {
  Rng rng(101);
  std::uniform_int_distribution<Eigen::Index> rows(30, 200);
  std::uniform_int_distribution<Eigen::Index> cols(5, 20);
  double eig = 0.0;
  double load = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = rows(rng);
    const Eigen::Index d = cols(rng);
    const Eigen::MatrixXd x = synthetic::correlated_sample(n, random_covariance(d, rng), rng);
    const auto [model, report] = fit_pca_dual(standardize(synthetic::make_panel(x, {})));
    eig = std::max(eig, report.eigenvalue_max_rel_error);
    load = std::max(load, report.loading_max_abs_error);
  }
  return {eig <= 1e-8 && load <= 1e-8, "max eigenvalue rel err " + fmt(eig) + ", max loading err " + fmt(load)};
}

Outcome conditional_vs_monte_carlo() {
  Rng rng(202);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd cov = random_covariance(6, rng);
    const Eigen::VectorXd mu = synthetic::standard_normal(6, 1, rng).col(0) * 0.1;
    const FactorModel m = model_with(mu, cov, Eigen::MatrixXd::Ones(1, 6) / 6.0);
    // Alternate between one and two core factors.
    std::vector<Eigen::Index> core{trial % 6};
    if (trial % 2) core.push_back((trial + 3) % 6);
    StressScenario s{"mc", {}, {}, Propagation::ConditionalGaussian};
    for (const auto c : core) {
      s.core_labels.push_back(m.factor_labels[static_cast<std::size_t>(c)]);
      s.shifts_sd.push_back(-2.0);
    }
    const Eigen::VectorXd f = conditional_stress(m, s);
    Eigen::VectorXd core_values(static_cast<Eigen::Index>(core.size()));
    for (std::size_t c = 0; c < core.size(); ++c) core_values(static_cast<Eigen::Index>(c)) = f(core[c]);
    const auto mc = oracle::monte_carlo_conditional_mean(mu, cov, core, core_values, 100000, 1000 + static_cast<std::uint64_t>(trial));
    Eigen::Index u = 0;
    for (Eigen::Index i = 0; i < 6; ++i) {
      if (std::find(core.begin(), core.end(), i) != core.end()) continue;
      worst = std::max(worst, std::abs(f(i) - mc.mean(u)) / mc.standard_error(u));
      ++u;
    }
  }
  return {worst <= 3.0, "worst deviation " + fmt(worst) + " standard errors"};
}

Outcome ellipsoid() {
  Rng rng(303);
  double excess = -std::numeric_limits<double>::infinity();
  double distance = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd cov = random_covariance(2, rng);
    const Eigen::VectorXd mu = synthetic::standard_normal(2, 1, rng).col(0) * 0.1;
    const Eigen::MatrixXd betas = synthetic::standard_normal(4, 2, rng);
    const Eigen::VectorXd w = Eigen::VectorXd::Constant(4, 0.25);
    const EllipsoidScenario e = worst_case_ellipsoid(model_with(mu, cov, betas), {"F1", "F2"}, 2.0, w);
    const Eigen::Vector2d direction = betas.transpose() * w;
    const double grid = oracle::ellipse_grid_minimum(cov, mu, direction, 2.0, 10000);
    excess = std::max(excess, e.objective - grid);
    distance = std::max(distance, std::abs(e.mahalanobis - 2.0));
  }
  return {excess <= 1e-9 && distance <= 1e-6,
          "closed form minus grid best <= " + fmt(excess) + ", |mahalanobis - r| <= " + fmt(distance)};
}

Outcome linear_ae_vs_pca() {
  Rng rng(404);
  Eigen::VectorXd spectrum(10);
  for (Eigen::Index i = 0; i < 10; ++i) spectrum(i) = 4.0 * std::pow(0.5, static_cast<double>(i));
  const StandardizedPanel panel = standardize(synthetic::make_panel(synthetic::spectrum_sample(1000, spectrum, rng), {}));
  const PcaModel pca = fit_pca(panel);
  const double pca_mse = reconstruct(pca, 3).mse;
  Rng init(405);
  TrainConfig cfg;
  cfg.max_epochs = 400;
  cfg.batch_size = 32;
  cfg.step_size = 3e-3;
  cfg.validation_fraction = 0.0;
  cfg.patience = 0;
  cfg.seed = 406;
  const AeFit fit = train(make_autoencoder(10, 3, {{}, Activation::Identity, false}, init), panel.values, cfg);
  const double rel = (fit.result.full_mse - pca_mse) / pca_mse;
  const Eigen::MatrixXd span = fit.network.decoder.layers().back().weights.transpose();
  const double angle = oracle::max_principal_angle_degrees(span, pca.loadings.leftCols(3));
  return {std::abs(rel) <= 0.02 && angle <= 2.0,
          "AE mse " + fmt(fit.result.full_mse) + " vs PCA " + fmt(pca_mse) + " (rel " + fmt(rel) + "), max angle " + fmt(angle) + " deg"};
}

Outcome nonlinear_detection() {
  Rng rng(505);
  const StandardizedPanel panel = standardize(synthetic::make_panel(synthetic::quadratic_factor_sample(2000, 8, 0.1, rng), {}));
  const double pca_mse = reconstruct(fit_pca(panel), 1).mse;
  Rng init(506);
  TrainConfig cfg;
  cfg.max_epochs = 300;
  cfg.batch_size = 64;
  cfg.step_size = 3e-3;
  cfg.validation_fraction = 0.2;
  cfg.patience = 50;
  cfg.seed = 507;
  const AeFit fit = train(make_autoencoder(8, 1, {{16}, Activation::Gelu, true}, init), panel.values, cfg);
  const double gain = (pca_mse - fit.result.full_mse) / pca_mse;
  return {gain >= 0.05, "GELU AE mse " + fmt(fit.result.full_mse) + " vs PCA " + fmt(pca_mse) + " (" + fmt(100.0 * gain) + "% lower)"};
}

Outcome gradient_checks() {
  double worst = 0.0;
  for (const Activation a : {Activation::Identity, Activation::Gelu, Activation::Selu, Activation::Swish}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      Rng rng(600 + seed);
      Network net({{5, 7, a, true}, {7, 4, a, true}, {4, 5, Activation::Identity, true}});
      net.initialize(rng);
      Eigen::VectorXd p = net.parameters();
      for (Eigen::Index i = 0; i < p.size(); ++i) p(i) += 0.05 * std::sin(3.0 * static_cast<double>(i) + static_cast<double>(seed));
      net.set_parameters(p);
      const Eigen::MatrixXd x = synthetic::standard_normal(13, 5, rng);
      const Eigen::MatrixXd y = synthetic::standard_normal(13, 5, rng);
      const LossGradient lg = loss_and_gradient(net, x, y, 0.01);
      const auto f = [&](const Eigen::VectorXd& params) {
        Network probe = net;
        probe.set_parameters(params);
        return loss_and_gradient(probe, x, y, 0.01).loss;
      };
      const Eigen::VectorXd numeric = oracle::central_difference_gradient(f, p, 1e-5);
      const Eigen::VectorXd analytic = net.flatten(lg.gradient);
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        const double scale = std::max({std::abs(analytic(i)), std::abs(numeric(i)), 1e-6});
        worst = std::max(worst, std::abs(analytic(i) - numeric(i)) / scale);
      }
    }
  }
  return {worst <= 1e-4, "worst relative error " + fmt(worst) + " over 4 activations x 5 seeds"};
}

PcaModel fit_exact(const Eigen::MatrixXd& corr, Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  return fit_pca(standardize(synthetic::make_panel(synthetic::exact_covariance_sample(n, corr, rng), {})));
}

Outcome diagnostics() {
  const Eigen::Index kg = kaiser_guttman(fit_exact(synthetic::block_correlation({5, 5, 5, 5}, 0.9, 0.0), 500, 701));

  const Eigen::Index d = 12;
  const double pr_eq = participation_ratio(fit_exact(synthetic::equicorrelation(d, 0.6), 500, 702), 0).pr;

  Eigen::MatrixXd corr = synthetic::equicorrelation(d, 0.7);
  corr.row(5).setZero();
  corr.col(5).setZero();
  corr(5, 5) = 1.0;
  const PcaModel dom = fit_exact(corr, 500, 703);
  double pr_min = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < d; ++i) pr_min = std::min(pr_min, participation_ratio(dom, i).pr);

  return {kg == 4 && pr_eq >= 0.9 * static_cast<double>(d) && pr_min <= 1.5,
          "KG count " + std::to_string(kg) + ", equicorrelated PR1 " + fmt(pr_eq) + "/" + std::to_string(d) +
              ", dominant-column min PR " + fmt(pr_min)};
}

Outcome ward() {
  Rng rng(801);
  const std::vector<Eigen::Index> sizes{4, 5, 3, 6, 4, 5};
  const Eigen::MatrixXd x = synthetic::correlated_sample(2000, synthetic::block_correlation(sizes, 0.8, 0.05), rng);
  const ClusterAssignment a = cut(ward_cluster(standardize(synthetic::make_panel(x, {}))), 6);
  std::vector<int> truth;
  for (std::size_t b = 0; b < sizes.size(); ++b) truth.insert(truth.end(), static_cast<std::size_t>(sizes[b]), static_cast<int>(b));
  const double rand = oracle::rand_index(truth, a.cluster_of);

  double worst = 0.0;
  bool shapes = true;
  for (int trial = 0; trial < 21; ++trial) {
    const Eigen::Index d = 2 + trial % 7;
    const Eigen::MatrixXd pts = synthetic::standard_normal(10 + trial, d, rng);
    const Dendrogram tree = ward_cluster(pts, {});
    const std::vector<double> expected = oracle::brute_force_ward_heights(pts);
    shapes = shapes && tree.merges.size() == expected.size();
    for (std::size_t m = 0; m < std::min(expected.size(), tree.merges.size()); ++m) {
      worst = std::max(worst, std::abs(tree.merges[m].height - expected[m]));
    }
  }
  return {rand >= 0.95 && shapes && worst <= 1e-9, "Rand index " + fmt(rand) + ", max height error vs brute force " + fmt(worst)};
}

Outcome end_to_end() {
  // Six block factors with mild cross-correlation; four noisy columns each.
  Rng rng(901);
  const Eigen::Index k = 6;
  const Eigen::Index n = 20000;
  Eigen::MatrixXd sigma_f = synthetic::equicorrelation(k, 0.3);
  sigma_f(0, 1) = sigma_f(1, 0) = 0.6;
  const Eigen::VectorXd vol = (Eigen::VectorXd(k) << 0.012, 0.01, 0.008, 0.015, 0.009, 0.011).finished();
  sigma_f = vol.asDiagonal() * sigma_f * vol.asDiagonal();
  const std::vector<Eigen::Index> sizes(static_cast<std::size_t>(k), 4);
  const synthetic::BlockFactorPanel bf = synthetic::block_factor_panel(n, sizes, sigma_f, 1.0, 0.002, rng);
  std::vector<std::string> labels;
  std::map<std::string, std::string> categories;
  for (Eigen::Index j = 0; j < bf.values.cols(); ++j) {
    labels.push_back("x" + std::to_string(j + 1));
    categories[labels.back()] = "B" + std::to_string(bf.block_of[static_cast<std::size_t>(j)] + 1);
  }
  ReturnPanel panel = synthetic::make_panel(bf.values, labels);
  const FactorConstruction fc = clustered_pca_factors(standardize(panel), assignment_from_categories(labels, categories));

  const Eigen::Index assets = 20;
  const Eigen::MatrixXd betas = synthetic::standard_normal(assets, k, rng).cwiseAbs() + Eigen::MatrixXd::Constant(assets, k, 0.2);
  const Eigen::MatrixXd eps = synthetic::standard_normal(n, assets, rng) * 0.004;
  const Eigen::MatrixXd returns = bf.factors * betas.transpose() + eps;
  const FactorModel model = fit_factor_model(returns, synthetic::numbered_labels("a", assets), fc.factors);

  const std::string core = fc.factors.labels.front();
  const Eigen::VectorXd f = conditional_stress(model, {"core", {core}, {-2.0}, Propagation::ConditionalGaussian});
  const Eigen::VectorXd w = equal_weights(assets);
  const double impact = portfolio_impact(model, f, w).portfolio;
  // E[w'r | f1 = -2 sd(f1)] under the generating Gaussian.
  const double analytic = w.dot(betas * sigma_f.col(0)) / sigma_f(0, 0) * (-2.0 * vol(0));
  const double rel = std::abs(impact - analytic) / std::abs(analytic);

  Rng tail_rng(902);
  const Eigen::MatrixXd g = synthetic::standard_normal(200000, 1, tail_rng);
  const TailFrequency tail = tail_frequency(std::span<const double>(g.data(), static_cast<std::size_t>(g.size())), -2.0);

  return {rel <= 0.10 && std::abs(tail.fraction - 0.0228) <= 0.004,
          "impact " + fmt(impact) + " vs analytic " + fmt(analytic) + " (rel " + fmt(rel) + "), tail fraction " + fmt(tail.fraction)};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(RISKAGG_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome reproducibility() {
  const fs::path dir = fs::temp_directory_path() / "riskagg_acceptance_repro";
  fs::remove_all(dir);
  if (run_cli("demo " + dir.string()) != 0) return {false, "demo data could not be written"};
  const std::string config = (dir / "config.ini").string();
  std::size_t compared = 0;
  std::vector<std::string> mismatched;
  for (const std::string command : {"diagnose", "cluster", "aggregate", "calibrate", "stress", "report"}) {
    const fs::path a = dir / (command + "_a");
    const fs::path b = dir / (command + "_b");
    if (run_cli(command + " --config " + config + " --seed 42 --out " + a.string()) != 0 ||
        run_cli(command + " --config " + config + " --seed 42 --out " + b.string()) != 0) {
      return {false, command + " exited non-zero"};
    }
    for (const auto& e : fs::recursive_directory_iterator(a)) {
      if (!e.is_regular_file()) continue;
      ++compared;
      const fs::path twin = b / fs::relative(e.path(), a);
      if (!fs::exists(twin) || slurp(e.path()) != slurp(twin)) mismatched.push_back(command + ":" + e.path().filename().string());
    }
  }
  fs::remove_all(dir);
  std::string detail = std::to_string(compared) + " artifacts over 6 commands compared byte for byte";
  if (!mismatched.empty()) detail += "; differing: " + mismatched.front();
  return {mismatched.empty() && compared > 0, detail};
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<Outcome()> check;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "pca duality", 10.0, duality},
      {2, "conditional stress vs monte carlo", 60.0, conditional_vs_monte_carlo},
      {3, "ellipsoid worst case", 5.0, ellipsoid},
      {4, "linear autoencoder vs pca", 120.0, linear_ae_vs_pca},
      {5, "nonlinear detection", 300.0, nonlinear_detection},
      {6, "gradient checks", std::numeric_limits<double>::infinity(), gradient_checks},
      {7, "diagnostics", std::numeric_limits<double>::infinity(), diagnostics},
      {8, "ward clustering", std::numeric_limits<double>::infinity(), ward},
      {9, "end to end", std::numeric_limits<double>::infinity(), end_to_end},
      {10, "reproducibility", std::numeric_limits<double>::infinity(), reproducibility},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = seconds < c.limit_seconds;
    const bool pass = o.pass && in_time;
    failures += pass ? 0 : 1;
    std::cout << (pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": " << o.detail << " (" << fmt(seconds) << " s";
    if (std::isfinite(c.limit_seconds)) std::cout << ", limit " << fmt(c.limit_seconds) << " s";
    if (!in_time) std::cout << ", too slow";
    std::cout << ")" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
