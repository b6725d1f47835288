#pragma once

// Independent reference computations used only by tests. None of these call
// into the code paths they are used to check.

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace riskagg::oracle {

/// Ward clustering by brute force: at each step every candidate pair is
/// merged tentatively and the total within-cluster sum of squares is
/// recomputed from scratch. Returns the merge heights (increase in total
/// within-cluster sum of squares) in merge order.
std::vector<double> brute_force_ward_heights(const Eigen::MatrixXd& points_as_columns);

/// OLS coefficients ((K + 1) x p, intercept first) from the normal equations.
Eigen::MatrixXd normal_equations_ols(const Eigen::MatrixXd& returns, const Eigen::MatrixXd& factors);

struct MonteCarloConditional {
  Eigen::VectorXd mean;
  Eigen::VectorXd standard_error;
};

/// Simulates draws from N(mu, cov), regresses each peripheral factor on the
/// core factors (with intercept) and evaluates the fitted regression at the
/// shocked core values.
MonteCarloConditional monte_carlo_conditional_mean(const Eigen::VectorXd& mu, const Eigen::MatrixXd& cov,
                                                   const std::vector<Eigen::Index>& core,
                                                   const Eigen::VectorXd& core_values, Eigen::Index draws,
                                                   std::uint64_t seed);

/// Minimum of direction' s over `points` evenly spaced boundary points of the
/// 2-D ellipse (s - mu)' cov^-1 (s - mu) = r^2, parameterized through the
/// eigen-decomposition of cov.
double ellipse_grid_minimum(const Eigen::Matrix2d& cov, const Eigen::Vector2d& mu, const Eigen::Vector2d& direction,
                            double radius, int points);

/// Central finite differences of f at x with step h.
Eigen::VectorXd central_difference_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                            const Eigen::VectorXd& x, double h);

/// Sample Pearson correlation.
double sample_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Largest principal angle (degrees) between the column spaces of a and b.
double max_principal_angle_degrees(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Rand index between two partitions given as per-item labels.
double rand_index(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace riskagg::oracle
