#include "demo.hpp"

#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "riskagg/error.hpp"
#include "riskagg/panel.hpp"
#include "riskagg/random.hpp"
#include "riskagg/synthetic.hpp"

namespace riskagg::pipeline {
namespace {

struct Category {
  const char* name;
  int size;
};

constexpr Category kCategories[] = {{"us_equity", 5}, {"europe_equity", 5}, {"asia_equity", 4},
                                    {"rates", 5},     {"credit", 4},        {"commodities", 4}};

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << body;
  out.close();
  if (!out) throw Error(Errc::Io, "cannot write '" + path.string() + "'");
}

constexpr const char* kConfig = R"(seed = 7
output = out

[input]
factors = factors.csv
assets = assets.csv
categories = categories.csv

[window]
width = 250
stride = 21
components = 6

[aggregate]
models = pca, clustered-pca, clustered-ae
pca_factors = 6

[train]
max_epochs = 60
batch_size = 64
step_size = 0.003
l2 = 0.0001
patience = 10

[calibrate]
window = 750

[stress]
models = pca, clustered-pca, clustered-ae

[scenario.global]
type = ellipsoid
factors = PC1, PC2
radius = 2
models = pca

[scenario.europe]
core = europe_equity
shifts = -2
models = clustered-pca, clustered-ae

[scenario.cyclical]
core = us_equity, commodities
shifts = -2, -1.5
models = clustered-pca
)";

}  // namespace

void write_demo(const std::filesystem::path& dir, std::uint64_t seed, int days) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::Io, "cannot create '" + dir.string() + "': " + ec.message());

  Rng rng = make_rng(seed, "demo");
  std::normal_distribution<double> normal;
  const Eigen::Index n = days;
  const Eigen::Index k = std::size(kCategories);

  // Daily returns around 1% volatility: market + category + idiosyncratic.
  const Eigen::MatrixXd market = synthetic::standard_normal(n, 1, rng);
  const Eigen::MatrixXd blocks = synthetic::standard_normal(n, k, rng);
  std::vector<std::string> labels;
  std::string categories = "label,category\n";
  std::vector<Eigen::VectorXd> columns;
  for (Eigen::Index c = 0; c < k; ++c) {
    for (int j = 1; j <= kCategories[c].size; ++j) {
      const std::string label = std::string(kCategories[c].name) + "_" + std::to_string(j);
      labels.push_back(label);
      categories += label + "," + kCategories[c].name + "\n";
      Eigen::VectorXd col(n);
      for (Eigen::Index t = 0; t < n; ++t) col(t) = 0.01 * (0.5 * market(t, 0) + 0.7 * blocks(t, c) + 0.5 * normal(rng));
      columns.push_back(std::move(col));
    }
  }
  Eigen::MatrixXd factors(n, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) factors.col(static_cast<Eigen::Index>(j)) = columns[j];

  // Each asset loads on two factor columns.
  const Eigen::Index assets = 30;
  std::uniform_int_distribution<Eigen::Index> pick(0, factors.cols() - 1);
  std::uniform_real_distribution<double> beta(0.3, 1.2);
  Eigen::MatrixXd asset_returns(n, assets);
  for (Eigen::Index a = 0; a < assets; ++a) {
    const Eigen::Index first = pick(rng);
    const Eigen::Index second = pick(rng);
    const double b1 = beta(rng);
    const double b2 = beta(rng);
    for (Eigen::Index t = 0; t < n; ++t) {
      asset_returns(t, a) = 0.0002 + b1 * factors(t, first) + 0.5 * b2 * factors(t, second) + 0.005 * normal(rng);
    }
  }

  std::ostringstream fout;
  write_panel(fout, synthetic::make_panel(factors, labels, {2019, 1, 2}));
  write_file(dir / "factors.csv", fout.str());
  std::ostringstream aout;
  write_panel(aout, synthetic::make_panel(asset_returns, synthetic::numbered_labels("asset", assets), {2019, 1, 2}));
  write_file(dir / "assets.csv", aout.str());
  write_file(dir / "categories.csv", categories);
  write_file(dir / "config.ini", kConfig);
}

}  // namespace riskagg::pipeline
