#pragma once

#include "aggshock/panel.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace aggshock {

// Z_t = nu_t + sum_k coefs[k] nu_{t-k-1}, nu ~ N(0, innovation_var).
struct MaModel {
  std::vector<double> coefs;
  double innovation_var = 1.0;

  double variance() const;
  // Autocovariance at lag h.
  double autocovariance(int h) const;
};

struct DesignFlags {
  bool use_L = false;
  bool use_H = false;
};

// Designs 1..4: {}, {L}, {H}, {L, H}.
DesignFlags design_flags(int design);

struct DgpSpec {
  double tau = 1.43;
  Index n = 0;
  Index T = 0;
  Vector pi;
  Matrix L_y, L_w;
  Vector beta_y, beta_w;
  Vector mu_y, mu_w;
  Vector theta_y, theta_w;
  Eigen::Matrix2d noise_cov = Eigen::Matrix2d::Zero();
  MaModel z_model;
  double h_a = 0.5;  // H_t = h_a Z_t + h_b Ztilde_t
  double h_b = 0.25;
  DesignFlags design;

  void validate() const;
};

// tau = 1.43, pi ~ N(1, 0.25^2), rank-11 L with entry RMS three noise
// standard deviations, and the published noise, shock and loading parameters.
DgpSpec synthetic_spec(Index n, Index T, std::uint64_t seed);

// Cleaning regressions, truncated SVD and residual covariance on a real
// panel; loadings theta are drawn with seed.
DgpSpec calibrate_from_panel(const BalancedPanel& panel, const Vector& Z, int rank, double tau = 1.43,
                             std::uint64_t seed = 1);

// Method-of-moments MA(2) fit on lag 0..2 autocovariances.
MaModel fit_ma2(const Vector& Z);

// Norm ratio ||theta_w H|| / ||pi Z|| implied by the population moments.
double confounder_size_ratio(const DgpSpec& spec);

struct SimDraw {
  BalancedPanel panel;
  Vector Z;
  Vector H;
};

SimDraw simulate_once(const DgpSpec& spec, std::uint64_t seed);

struct McOptions {
  int reps = 200;
  std::uint64_t seed = 1;
  double noise_scale = 1.0;  // multiplies noise_cov
  bool run_tests = true;
  double tau0 = 1.43;
  double alpha = 0.05;
  int threads = 0;  // <= 0 keeps the OpenMP default
  bool keep_errors = false;
};

struct RepResult {
  bool ok = false;
  std::string error;
  double pi_ours = 0.0, delta_ours = 0.0, tau_ours = 0.0;
  double pi_tsls = 0.0, delta_tsls = 0.0, tau_tsls = 0.0;
  // (1/n) omega' pi for each estimator's own weights
  double target_pi_ours = 0.0, target_pi_tsls = 0.0;
  bool reject = false;
};

// One replication: simulate, construct D on t < T/3, run both estimators.
RepResult run_replication(const DgpSpec& spec, const McOptions& options, int rep);

// OpenMP over replications, results in replication order.
std::vector<RepResult> simulate_replications(const DgpSpec& spec, const McOptions& options);

struct ErrorStats {
  double rmse = 0.0;
  double bias = 0.0;
};

struct EstimatorStats {
  ErrorStats pi, delta, tau;
};

struct McReport {
  int design = 0;
  EstimatorStats ours;
  EstimatorStats tsls;
  std::optional<double> rejection_rate;
  int reps = 0;
  std::uint64_t seed = 0;
  int failures = 0;
  std::vector<std::string> failure_messages;
  std::vector<double> tau_errors_ours;  // filled when keep_errors
  std::vector<double> tau_errors_tsls;
};

// Fixed-order reduction; throws MonteCarloUnstable when 1% or more fail.
McReport summarize(const std::vector<RepResult>& results, const DgpSpec& spec, const McOptions& options);

McReport run_monte_carlo(const DgpSpec& spec, int design, const McOptions& options);

double rejection_rates(const DgpSpec& spec, int design, const McOptions& options);

}  // namespace aggshock
