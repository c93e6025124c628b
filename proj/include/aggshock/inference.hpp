#pragma once

#include "aggshock/aggregate.hpp"
#include "aggshock/panel.hpp"
#include "aggshock/tsmodel.hpp"

#include <Eigen/Dense>
#include <vector>

namespace aggshock {

struct VarianceEstimate {
  Eigen::Matrix2d sigma = Eigen::Matrix2d::Zero();
  double rho_hat = 0.0;
  LambdaModel lambda;
};

// Post-period residuals of the aggregated series and of Z, combined
// through lambda.lambda_post.
VarianceEstimate estimate_variance(const BalancedPanel& panel, const Vector& omega, const Vector& Z,
                                   const Matrix& Psi, const LambdaModel& lambda, const SampleSplit& split);

// Same, with rho fitted on the post-period Z residuals.
VarianceEstimate estimate_variance(const BalancedPanel& panel, const Vector& omega, const Vector& Z,
                                   const Matrix& Psi, const SampleSplit& split);

// Fills result.sigma_hat and result.rho_hat.
void attach_variance(EstimateResult& result, const BalancedPanel& panel, const Vector& Z, const Matrix& Psi);

struct TestResult {
  double tau0 = 0.0;
  double statistic = 0.0;
  double critical = 0.0;
  bool reject = false;
  double alpha = 0.05;
  bool zero_variance = false;
};

TestResult ar_test(double delta, double pi, const Eigen::Matrix2d& sigma, double tau0, double alpha);

// Inverse standard normal CDF.
double normal_quantile(double p);

struct GridSpec {
  double lo = 0.0;
  double hi = 0.0;
  Index points = 2001;

  double at(Index k) const;
  double step() const { return (hi - lo) / static_cast<double>(points - 1); }
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct ConfidenceSet {
  double alpha = 0.05;
  GridSpec grid;
  std::vector<Interval> intervals;
  bool unbounded_below = false;
  bool unbounded_above = false;

  bool empty() const { return intervals.empty(); }
  bool contains(double tau) const;
};

// tau_hat +- 20 delta-method standard errors, 2001 points.
GridSpec default_grid(double delta, double pi, const Eigen::Matrix2d& sigma);

// Marks each grid point, then merges runs of accepted points.
// threads <= 0 keeps the OpenMP default.
ConfidenceSet confidence_set(double delta, double pi, const Eigen::Matrix2d& sigma, double alpha,
                             const GridSpec& grid, int threads = 0);

// Shared by the parallel and serial paths.
ConfidenceSet merge_accepted(const std::vector<unsigned char>& accepted, const GridSpec& grid, double alpha);

}  // namespace aggshock
