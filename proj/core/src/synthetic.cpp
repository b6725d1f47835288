#include "riskagg/synthetic.hpp"

#include <chrono>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "riskagg/error.hpp"

namespace riskagg::synthetic {
namespace {

Eigen::MatrixXd symmetric_root(const Eigen::MatrixXd& cov) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() < -1e-12) {
    throw Error(Errc::Singular, "covariance is not positive semi-definite");
  }
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

std::vector<Date> business_days(Date start, std::size_t count) {
  using namespace std::chrono;
  sys_days day = year_month_day{year{start.year}, month{static_cast<unsigned>(start.month)},
                                std::chrono::day{static_cast<unsigned>(start.day)}};
  std::vector<Date> out;
  out.reserve(count);
  while (out.size() < count) {
    const weekday wd{day};
    if (wd != Saturday && wd != Sunday) {
      const year_month_day ymd{day};
      out.push_back({static_cast<int>(ymd.year()), static_cast<int>(static_cast<unsigned>(ymd.month())),
                     static_cast<int>(static_cast<unsigned>(ymd.day()))});
    }
    day += days{1};
  }
  return out;
}

std::vector<std::string> numbered_labels(const std::string& prefix, Eigen::Index count) {
  std::vector<std::string> out;
  for (Eigen::Index j = 0; j < count; ++j) out.push_back(prefix + std::to_string(j + 1));
  return out;
}

ReturnPanel make_panel(Eigen::MatrixXd values, std::vector<std::string> labels, Date start) {
  ReturnPanel p;
  p.dates = business_days(start, static_cast<std::size_t>(values.rows()));
  p.labels = labels.empty() ? numbered_labels("x", values.cols()) : std::move(labels);
  p.values = std::move(values);
  p.validate();
  return p;
}

Eigen::MatrixXd standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(rows, cols);
  // Row-major fill so that the first rows do not depend on the row count.
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  }
  return m;
}

Eigen::MatrixXd equicorrelation(Eigen::Index d, double rho) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Constant(d, d, rho);
  c.diagonal().setOnes();
  return c;
}

Eigen::MatrixXd block_correlation(const std::vector<Eigen::Index>& sizes, double within, double between) {
  Eigen::Index d = 0;
  for (const auto s : sizes) d += s;
  Eigen::MatrixXd c = Eigen::MatrixXd::Constant(d, d, between);
  Eigen::Index start = 0;
  for (const auto s : sizes) {
    c.block(start, start, s, s).setConstant(within);
    start += s;
  }
  c.diagonal().setOnes();
  return c;
}

Eigen::MatrixXd correlated_sample(Eigen::Index n, const Eigen::MatrixXd& cov, Rng& rng) {
  return standard_normal(n, cov.rows(), rng) * symmetric_root(cov);
}

Eigen::MatrixXd exact_covariance_sample(Eigen::Index n, const Eigen::MatrixXd& cov, Rng& rng) {
  const Eigen::Index d = cov.rows();
  if (n <= d) throw Error(Errc::InsufficientData, "exact covariance sample needs n > d");
  Eigen::MatrixXd z = standard_normal(n, d, rng);
  z.rowwise() -= z.colwise().mean();
  const Eigen::MatrixXd s = (z.transpose() * z) / static_cast<double>(n - 1);
  // z * S^{-1/2} has identity sample covariance.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  const Eigen::MatrixXd inv_root =
      es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  return z * inv_root * symmetric_root(cov);
}

BlockFactorPanel block_factor_panel(Eigen::Index n, const std::vector<Eigen::Index>& sizes, const Eigen::MatrixXd& factor_cov,
                                    double loading, double noise, Rng& rng) {
  if (static_cast<Eigen::Index>(sizes.size()) != factor_cov.rows()) {
    throw Error(Errc::ShapeMismatch, "one factor per block required");
  }
  BlockFactorPanel out;
  out.factors = correlated_sample(n, factor_cov, rng);
  Eigen::Index d = 0;
  for (const auto s : sizes) d += s;
  const Eigen::MatrixXd eps = standard_normal(n, d, rng);
  out.values.resize(n, d);
  Eigen::Index j = 0;
  for (std::size_t b = 0; b < sizes.size(); ++b) {
    for (Eigen::Index m = 0; m < sizes[b]; ++m, ++j) {
      out.values.col(j) = loading * out.factors.col(static_cast<Eigen::Index>(b)) + noise * eps.col(j);
      out.block_of.push_back(static_cast<int>(b));
    }
  }
  return out;
}

Eigen::MatrixXd spectrum_sample(Eigen::Index n, const Eigen::VectorXd& spectrum, Rng& rng) {
  const Eigen::Index d = spectrum.size();
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(standard_normal(d, d, rng));
  const Eigen::MatrixXd q = qr.householderQ();
  return standard_normal(n, d, rng) * spectrum.cwiseSqrt().asDiagonal() * q.transpose();
}

Eigen::MatrixXd quadratic_factor_sample(Eigen::Index n, Eigen::Index d, double noise, Rng& rng) {
  std::uniform_real_distribution<double> coef(0.5, 1.0);
  std::uniform_int_distribution<int> sign(0, 1);
  Eigen::VectorXd a(d), b(d), c(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    a(j) = coef(rng);
    b(j) = (sign(rng) ? 1.0 : -1.0) * coef(rng);
    c(j) = (sign(rng) ? 1.0 : -1.0) * coef(rng);
  }
  const Eigen::MatrixXd latent = standard_normal(n, 1, rng);
  const Eigen::MatrixXd eps = standard_normal(n, d, rng);
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double f = latent(i, 0);
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = a(j) * f + b(j) * (f * f - 1.0) + c(j) * std::sin(f) + noise * eps(i, j);
  }
  return x;
}

}  // namespace riskagg::synthetic
