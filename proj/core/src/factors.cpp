#include "riskagg/factors.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <Eigen/QR>
#include <nlohmann/json.hpp>

#include "riskagg/error.hpp"
#include "riskagg/pca.hpp"

namespace riskagg {
namespace {

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(x.rows() - 1);
  return 0.5 * (cov + cov.transpose());
}

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<std::vector<double>> to_rows(const Eigen::MatrixXd& m) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows[static_cast<std::size_t>(i)] = to_vec(m.row(i).transpose());
  return rows;
}

Eigen::MatrixXd from_rows(const std::vector<std::vector<double>>& rows, Eigen::Index cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != cols) throw Error(Errc::Parse, "matrix row has the wrong length");
    m.row(static_cast<Eigen::Index>(i)) = from_vec(rows[i]).transpose();
  }
  return m;
}

}  // namespace

std::string_view to_string(Provenance p) noexcept {
  switch (p) {
    case Provenance::GlobalPca: return "pca";
    case Provenance::ClusteredPca: return "clustered-pca";
    case Provenance::ClusteredAe: return "clustered-ae";
  }
  return "?";
}

Provenance parse_provenance(std::string_view text) {
  if (text == "pca") return Provenance::GlobalPca;
  if (text == "clustered-pca") return Provenance::ClusteredPca;
  if (text == "clustered-ae") return Provenance::ClusteredAe;
  throw Error(Errc::Config, "unknown model '" + std::string(text) + "' (expected pca, clustered-pca or clustered-ae)");
}

void AggregatedFactors::validate() const {
  if (series.cols() < 1) throw Error(Errc::InsufficientData, "need at least one factor");
  if (static_cast<Eigen::Index>(labels.size()) != series.cols()) throw Error(Errc::ShapeMismatch, "factor labels != columns");
  if (!dates.empty() && static_cast<Eigen::Index>(dates.size()) != series.rows()) {
    throw Error(Errc::ShapeMismatch, "factor dates != rows");
  }
  if (!series.allFinite()) throw Error(Errc::NonFinite, "factor series contains non-finite values");
}

AggregatedFactors make_factors(std::vector<std::string> labels, std::vector<Date> dates, Eigen::MatrixXd series,
                               Provenance provenance) {
  AggregatedFactors f;
  f.labels = std::move(labels);
  f.dates = std::move(dates);
  f.series = std::move(series);
  f.provenance = provenance;
  f.validate();
  const ColumnStats s = column_stats(f.series);
  f.mean = s.mean;
  f.sd = s.sd;
  return f;
}

AggregatedFactors LinearFactorMap::apply(const ReturnPanel& raw) const {
  if (raw.labels != input_labels) throw Error(Errc::ShapeMismatch, "panel columns do not match the factor map inputs");
  const StandardizedPanel std_panel = standardize(raw, stats);
  Eigen::MatrixXd series(raw.rows(), static_cast<Eigen::Index>(factor_labels.size()));
  for (std::size_t k = 0; k < factor_labels.size(); ++k) {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(raw.rows());
    for (std::size_t m = 0; m < columns[k].size(); ++m) z += weights[k](static_cast<Eigen::Index>(m)) * std_panel.values.col(columns[k][m]);
    series.col(static_cast<Eigen::Index>(k)) = z;
  }
  return make_factors(factor_labels, raw.dates, std::move(series), provenance);
}

FactorConstruction clustered_pca_factors(const StandardizedPanel& panel, const ClusterAssignment& assignment) {
  assignment.validate();
  if (assignment.labels != panel.labels()) throw Error(Errc::ShapeMismatch, "assignment does not cover the panel's columns");
  FactorConstruction out;
  auto& map = out.map;
  map.input_labels = panel.labels();
  map.stats = panel.stats;
  map.provenance = Provenance::ClusteredPca;
  map.factor_labels = assignment.names;
  for (int k = 0; k < assignment.clusters(); ++k) {
    const auto members = assignment.members(k);
    Eigen::MatrixXd sub(panel.rows(), static_cast<Eigen::Index>(members.size()));
    for (std::size_t m = 0; m < members.size(); ++m) sub.col(static_cast<Eigen::Index>(m)) = panel.values.col(members[m]);
    const PcaModel pca = fit_pca(sub, {});
    map.columns.push_back(members);
    map.weights.push_back(pca.loadings.col(0));
  }
  out.factors = map.apply(panel.base);
  return out;
}

FactorConstruction global_pca_factors(const StandardizedPanel& panel, Eigen::Index count) {
  if (count < 1 || count > panel.cols()) throw Error(Errc::OutOfRange, "PC count outside [1, d]");
  const PcaModel pca = fit_pca(panel);
  FactorConstruction out;
  auto& map = out.map;
  map.input_labels = panel.labels();
  map.stats = panel.stats;
  map.provenance = Provenance::GlobalPca;
  std::vector<Eigen::Index> all(static_cast<std::size_t>(panel.cols()));
  for (Eigen::Index j = 0; j < panel.cols(); ++j) all[static_cast<std::size_t>(j)] = j;
  for (Eigen::Index k = 0; k < count; ++k) {
    map.factor_labels.push_back("PC" + std::to_string(k + 1));
    map.columns.push_back(all);
    map.weights.push_back(pca.loadings.col(k));
  }
  out.factors = map.apply(panel.base);
  return out;
}

AggregatedFactors clustered_ae_factors(const ClusteredAe& model, const StandardizedPanel& panel) {
  if (model.assignment.labels != panel.labels()) throw Error(Errc::ShapeMismatch, "model inputs do not match the panel's columns");
  return make_factors(model.assignment.names, panel.base.dates, encode_clustered(model, panel.values),
                      Provenance::ClusteredAe);
}

void write_factor_series(std::ostream& out, const AggregatedFactors& factors) {
  out << "date";
  for (const auto& l : factors.labels) out << ',' << l;
  out << '\n';
  for (Eigen::Index i = 0; i < factors.series.rows(); ++i) {
    out << (factors.dates.empty() ? std::to_string(i) : factors.dates[static_cast<std::size_t>(i)].to_string());
    for (Eigen::Index k = 0; k < factors.series.cols(); ++k) out << ',' << format_number(factors.series(i, k));
    out << '\n';
  }
}

Eigen::Index FactorModel::factor_index(std::string_view label) const {
  const auto it = std::find(factor_labels.begin(), factor_labels.end(), label);
  if (it == factor_labels.end()) throw Error(Errc::Config, "unknown factor '" + std::string(label) + "'");
  return static_cast<Eigen::Index>(it - factor_labels.begin());
}

void FactorModel::validate() const {
  const Eigen::Index p = assets();
  const Eigen::Index k = factors();
  if (static_cast<Eigen::Index>(asset_labels.size()) != p || alphas.size() != p || residual_variances.size() != p) {
    throw Error(Errc::ShapeMismatch, "asset dimensions disagree");
  }
  if (static_cast<Eigen::Index>(factor_labels.size()) != k || factor_mean.size() != k || factor_sd.size() != k ||
      factor_covariance.rows() != k || factor_covariance.cols() != k) {
    throw Error(Errc::ShapeMismatch, "factor dimensions disagree");
  }
  const double scale = std::max(1.0, factor_covariance.cwiseAbs().maxCoeff());
  if ((factor_covariance - factor_covariance.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw Error(Errc::Singular, "factor covariance is not symmetric");
  }
  if ((residual_variances.array() < 0.0).any()) throw Error(Errc::OutOfRange, "negative residual variance");
}

FactorModel fit_factor_model(const Eigen::MatrixXd& returns, std::vector<std::string> asset_labels,
                             const AggregatedFactors& factors) {
  factors.validate();
  const Eigen::Index n = returns.rows();
  const Eigen::Index k = factors.count();
  if (factors.series.rows() != n) throw Error(Errc::ShapeMismatch, "asset and factor rows are not aligned");
  if (n <= k + 1) throw Error(Errc::InsufficientData, "need more than K + 1 rows for the regression");
  if (!returns.allFinite()) throw Error(Errc::NonFinite, "asset returns contain non-finite values");
  if (static_cast<Eigen::Index>(asset_labels.size()) != returns.cols()) throw Error(Errc::ShapeMismatch, "asset labels != columns");

  Eigen::MatrixXd design(n, k + 1);
  design.col(0).setOnes();
  design.rightCols(k) = factors.series;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < k + 1) {
    std::string names;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index i = qr.rank(); i < k + 1; ++i) {
      const Eigen::Index c = perm(i);
      names += (names.empty() ? "" : ", ") + (c == 0 ? std::string("intercept") : factors.labels[static_cast<std::size_t>(c - 1)]);
    }
    throw Error(Errc::Collinearity, "factor matrix is rank deficient; dependent columns: " + names);
  }

  FactorModel model;
  model.asset_labels = std::move(asset_labels);
  model.factor_labels = factors.labels;
  model.provenance = factors.provenance;
  model.observations = n;
  const Eigen::MatrixXd coef = qr.solve(returns);  // (K + 1) x p
  model.alphas = coef.row(0).transpose();
  model.betas = coef.bottomRows(k).transpose();
  const Eigen::MatrixXd residuals = returns - design * coef;
  model.residual_variances = (residuals.colwise().squaredNorm() / static_cast<double>(n - k - 1)).transpose();
  model.factor_mean = factors.series.colwise().mean().transpose();
  model.factor_covariance = sample_covariance(factors.series);
  model.factor_sd = model.factor_covariance.diagonal().cwiseSqrt();
  model.validate();
  return model;
}

FactorModel fit_factor_model(const ReturnPanel& assets, const AggregatedFactors& factors) {
  if (!factors.dates.empty() && assets.dates != factors.dates) {
    throw Error(Errc::ShapeMismatch, "asset and factor dates are not aligned");
  }
  return fit_factor_model(assets.values, assets.labels, factors);
}

Eigen::MatrixXd approx_covariance(const FactorModel& model) {
  Eigen::MatrixXd cov = model.betas * model.factor_covariance * model.betas.transpose();
  return 0.5 * (cov + cov.transpose());
}

std::string factor_model_to_json(const FactorModel& model) {
  nlohmann::json doc = {{"format", "riskagg-factor-model"},
                        {"version", 1},
                        {"provenance", to_string(model.provenance)},
                        {"observations", model.observations},
                        {"asset_labels", model.asset_labels},
                        {"factor_labels", model.factor_labels},
                        {"alphas", to_vec(model.alphas)},
                        {"betas", to_rows(model.betas)},
                        {"residual_variances", to_vec(model.residual_variances)},
                        {"factor_mean", to_vec(model.factor_mean)},
                        {"factor_covariance", to_rows(model.factor_covariance)},
                        {"factor_sd", to_vec(model.factor_sd)}};
  return doc.dump(1);
}

FactorModel factor_model_from_json(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    if (doc.value("format", "") != "riskagg-factor-model") throw Error(Errc::Parse, "not a factor model document");
    FactorModel m;
    m.provenance = parse_provenance(doc.at("provenance").get<std::string>());
    m.observations = doc.at("observations").get<Eigen::Index>();
    m.asset_labels = doc.at("asset_labels").get<std::vector<std::string>>();
    m.factor_labels = doc.at("factor_labels").get<std::vector<std::string>>();
    const auto k = static_cast<Eigen::Index>(m.factor_labels.size());
    m.alphas = from_vec(doc.at("alphas").get<std::vector<double>>());
    m.betas = from_rows(doc.at("betas").get<std::vector<std::vector<double>>>(), k);
    m.residual_variances = from_vec(doc.at("residual_variances").get<std::vector<double>>());
    m.factor_mean = from_vec(doc.at("factor_mean").get<std::vector<double>>());
    m.factor_covariance = from_rows(doc.at("factor_covariance").get<std::vector<std::vector<double>>>(), k);
    m.factor_sd = from_vec(doc.at("factor_sd").get<std::vector<double>>());
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Parse, std::string("factor model JSON: ") + e.what());
  }
}

}  // namespace riskagg
