#include "pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "riskagg/error.hpp"
#include "riskagg/pca.hpp"
#include "riskagg/stress.hpp"

namespace riskagg::pipeline {
namespace {

namespace fs = std::filesystem;

std::string describe_group(const std::vector<std::string>& labels) {
  std::string out;
  for (const auto& l : labels) out += (out.empty() ? "" : ";") + l;
  return out;
}

ReturnPanel load_returns(const fs::path& path, const std::optional<fs::path>& categories, bool prices,
                         ReturnMethod method) {
  LoadOptions options;
  options.categories_path = categories;
  ReturnPanel panel = load_panel_file(path, options);
  return prices ? to_returns(panel, method) : panel;
}

std::string arch_spec(const Architecture& enc, const Architecture& dec) {
  return "enc: " + enc.describe() + "; dec: " + dec.describe();
}

Propagation resolve(PropagationChoice choice, Provenance model) {
  switch (choice) {
    case PropagationChoice::Conditional: return Propagation::ConditionalGaussian;
    case PropagationChoice::AeDecoder: return Propagation::AeDecoder;
    case PropagationChoice::None: return Propagation::None;
    case PropagationChoice::Auto: break;
  }
  return model == Provenance::ClusteredAe ? Propagation::AeDecoder : Propagation::ConditionalGaussian;
}

bool has_labels(const std::vector<std::string>& available, const std::vector<std::string>& wanted) {
  return std::all_of(wanted.begin(), wanted.end(), [&](const std::string& w) {
    return std::find(available.begin(), available.end(), w) != available.end();
  });
}

}  // namespace

Pipeline::Pipeline(RunConfig config) : config_(std::move(config)) {}

std::string Pipeline::csv_header() const {
  return "# config_hash=" + config_.hash + " seed=" + std::to_string(config_.seed) + "\n";
}

fs::path Pipeline::artifact(const std::string& relative) {
  const fs::path path = config_.output_dir / relative;
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  if (ec) throw Error(Errc::Io, "cannot create '" + path.parent_path().string() + "': " + ec.message());
  return path;
}

void Pipeline::write_text(const std::string& relative, const std::string& body) {
  const fs::path path = artifact(relative);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << body;
  out.close();
  if (!out) throw Error(Errc::Io, "cannot write '" + path.string() + "'");
  written_.push_back(path);
}

const ReturnPanel& Pipeline::factor_panel() {
  if (!factor_panel_) {
    factor_panel_ = load_returns(config_.factors_path, config_.categories_path, config_.prices, config_.return_method);
  }
  return *factor_panel_;
}

const StandardizedPanel& Pipeline::standardized() {
  if (!standardized_) standardized_ = standardize(factor_panel());
  return *standardized_;
}

const ReturnPanel& Pipeline::asset_panel() {
  if (!asset_panel_) {
    if (!config_.assets_path) throw Error(Errc::Config, "[input] assets is required for calibrate and stress");
    asset_panel_ = load_returns(*config_.assets_path, std::nullopt, config_.prices, config_.return_method);
  }
  return *asset_panel_;
}

const Dendrogram& Pipeline::dendrogram() {
  if (!dendrogram_) dendrogram_ = ward_cluster(standardized());
  return *dendrogram_;
}

const ClusterAssignment& Pipeline::assignment() {
  if (!assignment_) {
    if (config_.grouping == Grouping::Categories) {
      assignment_ = assignment_from_categories(factor_panel().labels, factor_panel().categories);
    } else {
      if (config_.clusters > factor_panel().cols()) {
        throw Error(Errc::Config, "[cluster] k exceeds the number of factor columns");
      }
      assignment_ = cut(dendrogram(), config_.clusters);
    }
  }
  return *assignment_;
}

const Construction& Pipeline::construction(Provenance model) {
  if (const auto it = constructions_.find(model); it != constructions_.end()) return it->second;
  const StandardizedPanel& panel = standardized();
  Construction c;
  switch (model) {
    case Provenance::GlobalPca: {
      const Eigen::Index k = std::min(config_.global_pca_factors, panel.cols());
      FactorConstruction fc = global_pca_factors(panel, k);
      c.factors = std::move(fc.factors);
      c.map = std::move(fc.map);
      c.mse = reconstruct(fit_pca(panel), k).mse;
      c.specification = std::to_string(k) + " PCs";
      break;
    }
    case Provenance::ClusteredPca: {
      const ClusterAssignment& a = assignment();
      FactorConstruction fc = clustered_pca_factors(panel, a);
      c.factors = std::move(fc.factors);
      c.map = std::move(fc.map);
      // Each cluster reconstructed from its own first PC.
      double sse = 0.0;
      for (int k = 0; k < a.clusters(); ++k) {
        const auto members = a.members(k);
        Eigen::MatrixXd sub(panel.rows(), static_cast<Eigen::Index>(members.size()));
        for (std::size_t m = 0; m < members.size(); ++m) sub.col(static_cast<Eigen::Index>(m)) = panel.values.col(members[m]);
        sse += reconstruct(fit_pca(sub, {}), 1).mse * static_cast<double>(sub.size());
      }
      c.mse = sse / static_cast<double>(panel.values.size());
      c.specification = std::to_string(a.clusters()) + " clusters, first PC each";
      break;
    }
    case Provenance::ClusteredAe: {
      TrainConfig train = config_.train;
      train.seed = config_.seed;
      c.cae = fit_clustered_ae(panel.values, assignment(), config_.encoder, config_.decoder, train);
      c.factors = clustered_ae_factors(c.cae->model, panel);
      c.mse = c.cae->full_mse;
      c.specification = arch_spec(config_.encoder, config_.decoder);
      break;
    }
  }
  return constructions_.emplace(model, std::move(c)).first->second;
}

const FactorModel& Pipeline::factor_model(Provenance model) {
  if (const auto it = factor_models_.find(model); it != factor_models_.end()) return it->second;
  const AggregatedFactors& full = construction(model).factors;
  const ReturnPanel& assets = asset_panel();

  // Last `calibration_window` dates present in both panels.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> rows;
  for (std::size_t i = 0, j = 0; i < assets.dates.size() && j < full.dates.size();) {
    if (assets.dates[i] < full.dates[j]) {
      ++i;
    } else if (full.dates[j] < assets.dates[i]) {
      ++j;
    } else {
      rows.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      ++i;
      ++j;
    }
  }
  if (static_cast<Eigen::Index>(rows.size()) > config_.calibration_window) {
    rows.erase(rows.begin(), rows.end() - config_.calibration_window);
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  if (n <= full.count() + 1) {
    throw Error(Errc::InsufficientData, "only " + std::to_string(n) + " dates shared by the asset and factor panels");
  }
  Eigen::MatrixXd r(n, assets.cols());
  Eigen::MatrixXd f(n, full.count());
  std::vector<Date> dates;
  for (Eigen::Index t = 0; t < n; ++t) {
    r.row(t) = assets.values.row(rows[static_cast<std::size_t>(t)].first);
    f.row(t) = full.series.row(rows[static_cast<std::size_t>(t)].second);
    dates.push_back(assets.dates[static_cast<std::size_t>(rows[static_cast<std::size_t>(t)].first)]);
  }
  FactorModel fm = fit_factor_model(r, assets.labels, make_factors(full.labels, std::move(dates), std::move(f), model));
  // Shocks are measured against the longer factor history.
  fm.factor_sd = full.sd;
  return factor_models_.emplace(model, std::move(fm)).first->second;
}

const Eigen::VectorXd& Pipeline::weights() {
  if (weights_) return *weights_;
  const ReturnPanel& assets = asset_panel();
  if (!config_.weights_path) {
    weights_ = equal_weights(assets.cols());
    return *weights_;
  }
  std::ifstream in(*config_.weights_path);
  if (!in) throw Error(Errc::Config, "cannot read weights '" + config_.weights_path->string() + "'");
  std::map<std::string, double> by_label;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#' || line == "label,weight") continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(Errc::Config, "weights: expected 'label,weight' in '" + line + "'");
    try {
      by_label[line.substr(0, comma)] = std::stod(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw Error(Errc::Config, "weights: bad number in '" + line + "'");
    }
  }
  Eigen::VectorXd w(assets.cols());
  for (Eigen::Index j = 0; j < assets.cols(); ++j) {
    const auto it = by_label.find(assets.labels[static_cast<std::size_t>(j)]);
    if (it == by_label.end()) throw Error(Errc::Config, "weights: no weight for asset '" + assets.labels[static_cast<std::size_t>(j)] + "'");
    w(j) = it->second;
  }
  if (std::abs(w.sum() - 1.0) > 1e-9) throw Error(Errc::Config, "weights must sum to one");
  weights_ = w;
  return *weights_;
}

void Pipeline::diagnose() {
  const ReturnPanel& panel = factor_panel();
  const auto windows = rolling_windows(panel, config_.window);
  const bool with_categories = !panel.categories.empty();

  std::ostringstream diag, kg, corr, verdicts, groups, heat;
  diag << csv_header() << "date,pc,eigenvalue,share,kg_flag,ipr,pr,pr_group_size\n";
  kg << csv_header() << "date,kg_count\n";
  corr << csv_header() << "date,label,pc,abs_corr\n";
  verdicts << csv_header() << "date,pc,category,verdict\n";
  groups << csv_header() << "date,pc,members\n";

  for (const Window& w : windows) {
    const PcaModel model = fit_pca(standardize(w.panel));
    const Eigen::Index d = model.dimension();
    const Eigen::Index shown = std::min(config_.diagnose_components, d);
    const Eigen::Index kg_count = kaiser_guttman(model);
    const std::string date = w.end_date.to_string();
    kg << date << ',' << kg_count << '\n';
    const Eigen::MatrixXd abs_corr = factor_correlations(model, true);
    for (Eigen::Index i = 0; i < d; ++i) {
      const ParticipationRatio pr = participation_ratio(model, i);
      diag << date << ',' << i + 1 << ',' << format_number(model.eigenvalues(i)) << ','
           << format_number(model.eigenvalues(i) / static_cast<double>(d)) << ',' << (i < kg_count ? 1 : 0) << ','
           << format_number(pr.ipr) << ',' << format_number(pr.pr) << ',' << pr_group_size(pr.pr, d) << '\n';
    }
    for (Eigen::Index i = 0; i < shown; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) {
        corr << date << ',' << model.labels[static_cast<std::size_t>(j)] << ',' << i + 1 << ',' << format_number(abs_corr(j, i)) << '\n';
      }
      groups << date << ',' << i + 1 << ',' << describe_group(pr_group(model, i)) << '\n';
      if (with_categories) {
        for (const auto& [category, verdict] : classify_categories(model, i, panel.categories)) {
          verdicts << date << ',' << i + 1 << ',' << category << ',' << to_string(verdict) << '\n';
        }
      }
    }
    if (&w == &windows.back()) {
      heat << csv_header() << "# window ending " << date << "\nlabel";
      for (Eigen::Index i = 0; i < shown; ++i) heat << ",PC" << i + 1;
      heat << '\n';
      for (Eigen::Index j = 0; j < d; ++j) {
        heat << model.labels[static_cast<std::size_t>(j)];
        for (Eigen::Index i = 0; i < shown; ++i) heat << ',' << format_number(abs_corr(j, i));
        heat << '\n';
      }
    }
  }
  write_text("diagnose/diagnostics.csv", diag.str());
  write_text("diagnose/kg_counts.csv", kg.str());
  write_text("diagnose/correlations.csv", corr.str());
  write_text("diagnose/heatmap_last.csv", heat.str());
  write_text("diagnose/pr_groups.csv", groups.str());
  if (with_categories) write_text("diagnose/verdicts.csv", verdicts.str());
}

void Pipeline::cluster() {
  const Dendrogram& tree = dendrogram();
  std::ostringstream merges;
  merges << csv_header() << "step,left,right,height,size\n";
  for (std::size_t m = 0; m < tree.merges.size(); ++m) {
    const Merge& mg = tree.merges[m];
    merges << m + 1 << ',' << mg.left << ',' << mg.right << ',' << format_number(mg.height) << ',' << mg.size << '\n';
  }
  write_text("cluster/dendrogram.csv", merges.str());

  const int k = std::min<int>(config_.clusters, tree.leaves());
  const ClusterAssignment a = cut(tree, k);
  std::ostringstream out;
  out << csv_header() << "label,cluster,name\n";
  for (std::size_t j = 0; j < a.labels.size(); ++j) {
    out << a.labels[j] << ',' << a.cluster_of[j] + 1 << ',' << a.names[static_cast<std::size_t>(a.cluster_of[j])] << '\n';
  }
  write_text("cluster/assignment.csv", out.str());
}

void Pipeline::aggregate() {
  std::ostringstream table;
  table << csv_header() << "model,specification,l2,batch_size,mse\n";
  auto row = [&](std::string_view model, const std::string& spec, const std::string& l2, const std::string& batch, double mse) {
    table << model << ",\"" << spec << "\"," << l2 << ',' << batch << ',' << format_number(mse) << '\n';
  };
  const std::string l2 = format_number(config_.train.l2);
  const std::string batch = std::to_string(config_.train.batch_size);

  for (const Provenance model : config_.aggregate_models) {
    const Construction& c = construction(model);
    std::ostringstream series;
    series << csv_header();
    write_factor_series(series, c.factors);
    write_text("aggregate/factors_" + std::string(to_string(model)) + ".csv", series.str());
    if (model == Provenance::ClusteredAe) {
      row(to_string(model), c.specification, l2, batch, c.mse);
      nlohmann::json doc = nlohmann::json::parse(clustered_ae_to_json(c.cae->model));
      doc["config_hash"] = config_.hash;
      doc["seed"] = config_.seed;
      write_text("aggregate/model_clustered-ae.json", doc.dump(1) + "\n");
      std::ostringstream log;
      log << csv_header();
      for (std::size_t k = 0; k < c.cae->encoder_results.size(); ++k) {
        log << "# encoder " << c.cae->model.assignment.names[k] << '\n';
        write_epoch_log(log, c.cae->encoder_results[k].log);
      }
      log << "# decoder\n";
      write_epoch_log(log, c.cae->decoder_result.log);
      write_text("aggregate/train_log_clustered-ae.csv", log.str());
    } else {
      row(to_string(model), c.specification, "-", "-", c.mse);
    }
  }

  if (config_.plain_ae.enabled) {
    const StandardizedPanel& panel = standardized();
    Rng rng = make_rng(config_.seed, "aggregate/plain-ae/init");
    AeNetwork ae = make_autoencoder(static_cast<int>(panel.cols()), config_.plain_ae.bottleneck, config_.plain_ae.architecture, rng);
    TrainConfig train = config_.train;
    train.seed = derive_seed(config_.seed, "aggregate/plain-ae/train");
    const AeFit fit = riskagg::train(std::move(ae), panel.values, train);
    row("ae", config_.plain_ae.architecture.describe() + "; bottleneck " + std::to_string(config_.plain_ae.bottleneck), l2,
        batch, fit.result.full_mse);
  }
  write_text("aggregate/mse_table.csv", table.str());
}

void Pipeline::calibrate() {
  for (const Provenance model : config_.stress_models) {
    nlohmann::json doc = nlohmann::json::parse(factor_model_to_json(factor_model(model)));
    doc["config_hash"] = config_.hash;
    doc["seed"] = config_.seed;
    write_text("calibrate/factor_model_" + std::string(to_string(model)) + ".json", doc.dump(1) + "\n");
  }
}

void Pipeline::stress() {
  std::ostringstream summary;
  summary << csv_header() << "scenario,model,type,propagation,portfolio_impact,tail_fraction,tail_days_per_year,binding\n";

  for (const ScenarioSpec& spec : config_.scenarios) {
    const auto& wanted = spec.kind == ScenarioKind::Bump ? spec.core : spec.factors;
    std::vector<Provenance> models = spec.models;
    if (models.empty()) {
      for (const Provenance m : config_.stress_models) {
        if (has_labels(construction(m).factors.labels, wanted)) models.push_back(m);
      }
      if (models.empty()) {
        throw Error(Errc::Config, "scenario '" + spec.name + "': no stress model provides factors " + describe_group(wanted));
      }
    }
    for (const Provenance m : models) {
      const FactorModel& fm = factor_model(m);
      const Construction& c = construction(m);
      if (!has_labels(fm.factor_labels, wanted)) {
        throw Error(Errc::Config, "scenario '" + spec.name + "': model " + std::string(to_string(m)) + " lacks factors " + describe_group(wanted));
      }
      ScenarioResult result;
      result.name = spec.name;
      result.model = to_string(m);
      result.factor_labels = fm.factor_labels;
      result.asset_labels = fm.asset_labels;
      std::string type = "bump";
      std::string propagation = "-";
      double threshold = 0.0;
      if (spec.kind == ScenarioKind::Bump) {
        const StressScenario scenario{spec.name, spec.core, spec.shifts_sd, resolve(spec.propagation, m)};
        propagation = to_string(scenario.propagation);
        if (scenario.propagation == Propagation::AeDecoder) {
          if (!c.cae) throw Error(Errc::Config, "scenario '" + spec.name + "': ae propagation needs the clustered-ae model");
          TrainConfig train = config_.train;
          train.seed = config_.seed;
          result.full_factor_vector = ae_stress_propagation(c.cae->model, standardized(), scenario, train);
        } else {
          result.full_factor_vector = conditional_stress(fm, scenario);
        }
        threshold = spec.shifts_sd.front();
      } else {
        type = "ellipsoid";
        EllipsoidScenario e = worst_case_ellipsoid(fm, spec.factors, spec.radius, weights());
        result.full_factor_vector = e.full_factor_vector;
        threshold = -spec.radius;
        result.ellipsoid = std::move(e);
      }
      const PortfolioImpact impact = portfolio_impact(fm, result.full_factor_vector, weights());
      result.per_asset = impact.per_asset;
      result.portfolio = impact.portfolio;
      const auto lead_it = std::find(c.factors.labels.begin(), c.factors.labels.end(), wanted.front());
      const Eigen::Index lead = lead_it - c.factors.labels.begin();
      const Eigen::VectorXd history = c.factors.series.col(lead);
      result.tail = tail_frequency(std::span<const double>(history.data(), static_cast<std::size_t>(history.size())), threshold);

      const std::string stem = "stress/" + spec.name + "__" + result.model;
      write_text(stem + ".json", scenario_result_to_json(result, config_.hash, config_.seed) + "\n");
      std::ostringstream impacts;
      impacts << csv_header();
      write_sorted_impacts(impacts, result);
      write_text(stem + "_impacts.csv", impacts.str());
      summary << spec.name << ',' << result.model << ',' << type << ',' << propagation << ',' << format_number(result.portfolio)
              << ',' << format_number(result.tail.fraction) << ',' << format_number(result.tail.days_per_year) << ','
              << (result.ellipsoid ? (result.ellipsoid->binding ? "true" : "false") : "-") << '\n';
    }
  }
  write_text("stress/summary.csv", summary.str());
}

void Pipeline::report() {
  diagnose();
  cluster();
  aggregate();
  calibrate();
  stress();
  std::ostringstream index;
  index << csv_header() << "artifact\n";
  for (const auto& p : written_) index << p.lexically_relative(config_.output_dir).generic_string() << '\n';
  write_text("index.csv", index.str());
}

std::vector<fs::path> run_command(const std::string& command, RunConfig config) {
  Pipeline p(std::move(config));
  if (command == "diagnose") {
    p.diagnose();
  } else if (command == "cluster") {
    p.cluster();
  } else if (command == "aggregate") {
    p.aggregate();
  } else if (command == "calibrate") {
    p.calibrate();
  } else if (command == "stress") {
    p.stress();
  } else if (command == "report") {
    p.report();
  } else {
    throw Error(Errc::Config, "unknown command '" + command + "'");
  }
  return p.written();
}

int exit_code_for(const std::exception& e) noexcept {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return is_numeric_failure(err->code()) ? 3 : 2;
  return 2;
}

}  // namespace riskagg::pipeline
