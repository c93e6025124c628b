#pragma once

#include "aggshock/panel.hpp"
#include "aggshock/tsmodel.hpp"
#include "aggshock/weights.hpp"

#include <Eigen/Dense>
#include <optional>

namespace aggshock {

struct AggregateSeries {
  Vector Y;  // one entry per period of the block
  Vector W;
};

// (1/n) sum_i omega_i Y_it for every column of the block.
AggregateSeries aggregate_series(const BalancedPanel& block, const Vector& omega);

struct StageFit {
  double beta = 0.0;  // intercept
  Vector eta_psi;     // coefficients on Psi columns 2..p
  double coef_z = 0.0;
  Vector residuals;
};

// OLS of series on (1, Psi[:,1:], Z) over range; series is indexed by the range.
StageFit estimate_stage(const Vector& series, const Vector& Z, const Matrix& Psi, PeriodRange range);

struct EstimateConfig {
  std::optional<Index> t0;     // default floor(T/3)
  std::optional<double> zeta;  // default default_zeta
  bool sign_constraint = false;
  std::optional<Matrix> covariate_constraints;
};

struct EstimateResult {
  double delta = 0.0;
  double pi = 0.0;
  double tau = 0.0;
  Index t0 = 0;
  double zeta = 0.0;
  WeightSolution weights;
  StageFit fit_y;
  StageFit fit_w;
  AggregateSeries post;  // aggregated series over t >= T0
  std::optional<Eigen::Matrix2d> sigma_hat;
  std::optional<double> rho_hat;
  bool weak_first_stage = false;
};

EstimateResult estimate(const BalancedPanel& panel, const ExposureVector& D, const Vector& Z, const Matrix& Psi,
                        const EstimateConfig& config);

}  // namespace aggshock
