#pragma once

#include "aggshock/error.hpp"
#include "aggshock/panel.hpp"

#include <optional>
#include <vector>

namespace aggshock {

struct WeightConfig {
  double zeta = 1.0;
  Index T0 = 0;
  bool sign_constraint = false;
  std::optional<Matrix> covariate_constraints;  // n x q, imposes X' w = 0
};

struct WeightSolution {
  Vector omega;
  Vector eta_y;  // p coefficients on Psi, then the Z coefficient
  Vector eta_w;
  double objective = 0.0;
  Vector balance_y;  // length T0
  Vector balance_w;
  Vector bench_balance_y;  // same residuals for the (D - mean D) / var(D) weights
  Vector bench_balance_w;

  double zeta = 0.0;  // value actually used
  bool zeta_inflated = false;
  double sigma2_y = 0.0;
  double sigma2_w = 0.0;
  double q_rcond = 0.0;  // reciprocal condition estimate of the quadratic form
  int iterations = 0;
  std::vector<Index> active_set;  // units pinned to zero by the sign constraint
  double kkt_residual = 0.0;
};

class MaxIterationsError : public Error {
 public:
  MaxIterationsError(const std::string& detail, WeightSolution best, double residual)
      : Error(ErrorCode::MaxIterations, detail), best_(std::move(best)), residual_(residual) {}

  const WeightSolution& best() const { return best_; }
  double residual() const { return residual_; }

 private:
  WeightSolution best_;
  double residual_;
};

// min(s_k(Y~ / sd_Y), s_k(W~ / sd_W)) / sqrt(n + T) with k = floor(T/2),
// ~ the full-sample two-way demeaning and sd the pre-period scale factors.
double default_zeta(const BalancedPanel& panel, Index T0);

// Uses the first config.T0 periods of panel, Z and Psi.
WeightSolution solve_weights(const BalancedPanel& panel, const ExposureVector& D, const Vector& Z,
                             const Matrix& Psi, const WeightConfig& config);

// Adds the sign constraint omega_i (D_i - mean D) >= 0 and/or covariate
// constraints. Dual active-set method.
WeightSolution solve_weights_constrained(const BalancedPanel& panel, const ExposureVector& D,
                                         const Vector& Z, const Matrix& Psi, const WeightConfig& config);

struct BalanceReport {
  Vector residual_y;
  Vector residual_w;
  double rms_y = 0.0;
  double rms_w = 0.0;
  double bench_rms_y = 0.0;
  double bench_rms_w = 0.0;
  // Scale-normalized combined RMS relative to the benchmark weights.
  double ratio = 0.0;
};

BalanceReport balance_diagnostics(const WeightSolution& solution);

}  // namespace aggshock
