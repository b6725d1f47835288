#include "riskagg/stress.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>
#include <set>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "riskagg/error.hpp"

namespace riskagg {
namespace {

std::vector<Eigen::Index> indices_of(const FactorModel& model, const std::vector<std::string>& labels) {
  std::vector<Eigen::Index> idx;
  for (const auto& l : labels) idx.push_back(model.factor_index(l));
  return idx;
}

Eigen::MatrixXd block(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& rows, const std::vector<Eigen::Index>& cols) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(rows[i], cols[j]);
  }
  return out;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(idx[i]);
  return out;
}

// Throws unless the symmetric block is positive definite and well conditioned.
void require_well_conditioned(const Eigen::MatrixXd& sym, const std::string& what) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw Error(Errc::Convergence, what + ": eigensolver failed");
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > kMaxCoreCondition) {
    throw Error(Errc::Singular, what + " is singular or ill-conditioned (condition " + std::to_string(hi / lo) + ")");
  }
}

std::vector<Eigen::Index> complement(Eigen::Index k, const std::vector<Eigen::Index>& idx) {
  std::vector<Eigen::Index> out;
  for (Eigen::Index j = 0; j < k; ++j) {
    if (std::find(idx.begin(), idx.end(), j) == idx.end()) out.push_back(j);
  }
  return out;
}

}  // namespace

std::string_view to_string(Propagation p) noexcept {
  switch (p) {
    case Propagation::ConditionalGaussian: return "conditional";
    case Propagation::AeDecoder: return "ae";
    case Propagation::None: return "none";
  }
  return "?";
}

Propagation parse_propagation(std::string_view text) {
  if (text == "conditional" || text == "conditional-gaussian") return Propagation::ConditionalGaussian;
  if (text == "ae" || text == "ae-decoder") return Propagation::AeDecoder;
  if (text == "none") return Propagation::None;
  throw Error(Errc::Config, "unknown propagation '" + std::string(text) + "'");
}

void StressScenario::validate() const {
  if (core_labels.empty()) throw Error(Errc::Config, "scenario '" + name + "' has no core factors");
  if (core_labels.size() != shifts_sd.size()) throw Error(Errc::Config, "scenario '" + name + "' needs one shift per core factor");
  if (std::set<std::string>(core_labels.begin(), core_labels.end()).size() != core_labels.size()) {
    throw Error(Errc::Config, "scenario '" + name + "' lists a core factor twice");
  }
  for (const double s : shifts_sd) {
    if (!std::isfinite(s)) throw Error(Errc::Config, "scenario '" + name + "' has a non-finite shift");
  }
}

Eigen::VectorXd conditional_stress(const FactorModel& model, const StressScenario& scenario) {
  scenario.validate();
  const auto core = indices_of(model, scenario.core_labels);
  const auto peripheral = complement(model.factors(), core);
  Eigen::VectorXd out = model.factor_mean;
  Eigen::VectorXd deviation(static_cast<Eigen::Index>(core.size()));
  for (std::size_t i = 0; i < core.size(); ++i) {
    deviation(static_cast<Eigen::Index>(i)) = scenario.shifts_sd[i] * model.factor_sd(core[i]);
    out(core[i]) += deviation(static_cast<Eigen::Index>(i));
  }
  if (scenario.propagation == Propagation::None || peripheral.empty()) return out;

  const Eigen::MatrixXd s_ss = block(model.factor_covariance, core, core);
  require_well_conditioned(s_ss, "core covariance block");
  const Eigen::MatrixXd s_us = block(model.factor_covariance, peripheral, core);
  const Eigen::VectorXd shift_u = s_us * s_ss.ldlt().solve(deviation);
  for (std::size_t i = 0; i < peripheral.size(); ++i) out(peripheral[i]) += shift_u(static_cast<Eigen::Index>(i));
  return out;
}

EllipsoidScenario worst_case_ellipsoid(const FactorModel& model, const std::vector<std::string>& subset, double radius,
                                       const Eigen::VectorXd& weights) {
  if (subset.empty()) throw Error(Errc::Config, "ellipsoid scenario needs at least one factor");
  if (!(radius > 0.0)) throw Error(Errc::Config, "ellipsoid radius must be positive");
  if (weights.size() != model.assets()) throw Error(Errc::ShapeMismatch, "weights length != number of assets");
  const auto idx = indices_of(model, subset);
  const Eigen::MatrixXd cov = block(model.factor_covariance, idx, idx);
  require_well_conditioned(cov, "ellipsoid covariance");
  const Eigen::VectorXd mean = gather(model.factor_mean, idx);
  const Eigen::VectorXd direction = gather(model.betas.transpose() * weights, idx);

  EllipsoidScenario out;
  out.factor_labels = subset;
  out.radius = radius;
  const double quad = direction.dot(cov * direction);
  const double scale = std::max(1.0, (model.betas.transpose() * weights).cwiseAbs().maxCoeff());
  if (!(quad > 0.0) || direction.norm() <= 1e-14 * scale) {
    out.solution = mean;
    out.binding = false;
  } else {
    out.solution = mean - radius * (cov * direction) / std::sqrt(quad);
    out.binding = true;
  }
  const Eigen::VectorXd dev = out.solution - mean;
  out.mahalanobis = std::sqrt(std::max(0.0, dev.dot(cov.ldlt().solve(dev))));
  out.shifts_sd = dev.cwiseQuotient(gather(model.factor_sd, idx));
  out.full_factor_vector = model.factor_mean;
  for (std::size_t i = 0; i < idx.size(); ++i) out.full_factor_vector(idx[i]) = out.solution(static_cast<Eigen::Index>(i));
  out.objective = weights.dot(model.alphas + model.betas * out.full_factor_vector);
  return out;
}

double ellipsoid_search_minimum(const Eigen::MatrixXd& covariance, const Eigen::VectorXd& mean,
                                const Eigen::VectorXd& direction, double radius, int samples, std::uint64_t seed) {
  const Eigen::Index m = covariance.rows();
  const Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success) throw Error(Errc::Singular, "covariance is not positive definite");
  const Eigen::MatrixXd l = llt.matrixL();
  double best = std::numeric_limits<double>::infinity();
  Rng rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd u(m);
  for (int i = 0; i < samples; ++i) {
    if (m == 2) {
      const double t = 2.0 * std::numbers::pi * i / samples;
      u << std::cos(t), std::sin(t);
    } else {
      for (Eigen::Index j = 0; j < m; ++j) u(j) = normal(rng);
      u.normalize();
    }
    best = std::min(best, direction.dot(mean + radius * (l * u)));
  }
  return best;
}

Architecture decoder_architecture(const Network& decoder) {
  Architecture arch;
  const auto& layers = decoder.layers();
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) arch.hidden.push_back(layers[l].spec.output_size);
  if (layers.size() > 1) arch.activation = layers.front().spec.activation;
  arch.has_bias = !layers.empty() && layers.back().spec.has_bias;
  return arch;
}

Eigen::VectorXd ae_stress_propagation(const Eigen::MatrixXd& codes, const std::vector<std::string>& code_labels,
                                      const StressScenario& scenario, const Architecture& decoder_arch,
                                      int decoder_outputs, const TrainConfig& config) {
  scenario.validate();
  if (static_cast<Eigen::Index>(code_labels.size()) != codes.cols()) throw Error(Errc::ShapeMismatch, "code labels != columns");
  if (codes.rows() < 4) throw Error(Errc::InsufficientData, "insufficient code history for propagation training");
  std::vector<Eigen::Index> core;
  for (const auto& l : scenario.core_labels) {
    const auto it = std::find(code_labels.begin(), code_labels.end(), l);
    if (it == code_labels.end()) throw Error(Errc::Config, "unknown code '" + l + "'");
    core.push_back(static_cast<Eigen::Index>(it - code_labels.begin()));
  }
  const auto peripheral = complement(codes.cols(), core);
  const ColumnStats stats = column_stats(codes);
  Eigen::VectorXd out = stats.mean;
  Eigen::RowVectorXd shocked(static_cast<Eigen::Index>(core.size()));
  for (std::size_t i = 0; i < core.size(); ++i) {
    const double v = stats.mean(core[i]) + scenario.shifts_sd[i] * stats.sd(core[i]);
    out(core[i]) = v;
    shocked(static_cast<Eigen::Index>(i)) = v;
  }
  if (scenario.propagation == Propagation::None || peripheral.empty()) return out;

  Eigen::MatrixXd inputs(codes.rows(), static_cast<Eigen::Index>(core.size()));
  for (std::size_t i = 0; i < core.size(); ++i) inputs.col(static_cast<Eigen::Index>(i)) = codes.col(core[i]);
  Eigen::MatrixXd targets(codes.rows(), static_cast<Eigen::Index>(peripheral.size()));
  for (std::size_t i = 0; i < peripheral.size(); ++i) targets.col(static_cast<Eigen::Index>(i)) = codes.col(peripheral[i]);

  Architecture arch = decoder_arch;
  const double ratio = static_cast<double>(peripheral.size()) / std::max(1, decoder_outputs);
  for (int& h : arch.hidden) h = std::max(1, static_cast<int>(std::lround(h * ratio)));
  Rng rng = make_rng(config.seed, "stress/ae-propagation/" + scenario.name + "/init");
  Network net = make_regressor(static_cast<int>(core.size()), static_cast<int>(peripheral.size()), arch, rng);
  TrainConfig c = config;
  c.seed = derive_seed(config.seed, "stress/ae-propagation/" + scenario.name + "/train");
  train_network(net, inputs, targets, c);
  const Eigen::RowVectorXd predicted = net.predict(shocked);
  for (std::size_t i = 0; i < peripheral.size(); ++i) out(peripheral[i]) = predicted(static_cast<Eigen::Index>(i));
  return out;
}

Eigen::VectorXd ae_stress_propagation(const ClusteredAe& model, const StandardizedPanel& panel,
                                      const StressScenario& scenario, const TrainConfig& config) {
  return ae_stress_propagation(encode_clustered(model, panel.values), model.assignment.names, scenario,
                               decoder_architecture(model.decoder), model.output_size(), config);
}

PortfolioImpact portfolio_impact(const FactorModel& model, const Eigen::VectorXd& factors,
                                 const Eigen::VectorXd& weights) {
  if (factors.size() != model.factors()) throw Error(Errc::ShapeMismatch, "factor vector length != number of factors");
  if (weights.size() != model.assets()) throw Error(Errc::ShapeMismatch, "weights length != number of assets");
  if (std::abs(weights.sum() - 1.0) > 1e-9) throw Error(Errc::Config, "portfolio weights must sum to one");
  PortfolioImpact out;
  out.per_asset = model.alphas + model.betas * factors;
  out.portfolio = weights.dot(out.per_asset);
  return out;
}

Eigen::VectorXd equal_weights(Eigen::Index assets) {
  if (assets < 1) throw Error(Errc::InsufficientData, "portfolio has no assets");
  return Eigen::VectorXd::Constant(assets, 1.0 / static_cast<double>(assets));
}

TailFrequency tail_frequency(std::span<const double> series, double threshold_sd) {
  if (series.empty()) throw Error(Errc::InsufficientData, "empty series");
  const auto n = static_cast<double>(series.size());
  const double mean = std::accumulate(series.begin(), series.end(), 0.0) / n;
  double ss = 0.0;
  for (const double x : series) ss += (x - mean) * (x - mean);
  const double sd = series.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  const double cut = mean + threshold_sd * sd;
  const auto hits = threshold_sd <= 0.0 ? std::count_if(series.begin(), series.end(), [&](double x) { return x <= cut; })
                                        : std::count_if(series.begin(), series.end(), [&](double x) { return x >= cut; });
  TailFrequency out;
  out.fraction = static_cast<double>(hits) / n;
  out.days_per_year = out.fraction * kTradingDaysPerYear;
  return out;
}

std::string scenario_result_to_json(const ScenarioResult& r, std::string_view config_hash, std::uint64_t seed) {
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  nlohmann::json doc = {{"scenario", r.name},
                        {"model", r.model},
                        {"config_hash", config_hash},
                        {"seed", seed},
                        {"factor_labels", r.factor_labels},
                        {"full_factor_vector", vec(r.full_factor_vector)},
                        {"asset_labels", r.asset_labels},
                        {"per_asset_impact", vec(r.per_asset)},
                        {"portfolio_impact", r.portfolio},
                        {"tail_frequency", r.tail.fraction},
                        {"tail_days_per_year", r.tail.days_per_year}};
  if (r.ellipsoid) {
    const auto& e = *r.ellipsoid;
    doc["ellipsoid"] = {{"factor_labels", e.factor_labels}, {"radius", e.radius},
                        {"solution", vec(e.solution)},      {"shifts_sd", vec(e.shifts_sd)},
                        {"mahalanobis", e.mahalanobis},     {"binding", e.binding},
                        {"objective", e.objective}};
  }
  return doc.dump(1);
}

void write_sorted_impacts(std::ostream& out, const ScenarioResult& r) {
  std::vector<std::size_t> order(r.asset_labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ia = r.per_asset(static_cast<Eigen::Index>(a));
    const double ib = r.per_asset(static_cast<Eigen::Index>(b));
    return ia != ib ? ia < ib : r.asset_labels[a] < r.asset_labels[b];
  });
  out << "asset,impact\n";
  for (const auto i : order) out << r.asset_labels[i] << ',' << format_number(r.per_asset(static_cast<Eigen::Index>(i))) << '\n';
}

}  // namespace riskagg
