#include "aggshock/inference.hpp"

#include "aggshock/error.hpp"

#include <omp.h>

#include <cmath>
#include <limits>

namespace aggshock {

namespace {

Vector checked_z_residuals(const Vector& Z, const Matrix& Psi, PeriodRange post) {
  const Vector ez = z_residuals(Z, Psi, post);
  const double ez2 = ez.squaredNorm();
  if (!(ez2 > 1e-24 * Z.segment(post.begin, post.size()).squaredNorm()) || ez2 == 0.0) {
    fail(ErrorCode::DegenerateInstrument, "Z lies in the span of Psi over the post-period");
  }
  return ez;
}

}  // namespace

VarianceEstimate estimate_variance(const BalancedPanel& panel, const Vector& omega, const Vector& Z,
                                   const Matrix& Psi, const LambdaModel& lambda, const SampleSplit& split) {
  if (split.T() != panel.T()) fail(ErrorCode::InvalidArgument, "split does not match panel length");
  if (lambda.lambda_post.rows() != split.T1 || lambda.lambda_post.cols() != panel.T()) {
    fail(ErrorCode::InvalidArgument, "lambda has the wrong shape for this split");
  }
  const PeriodRange post{split.T0, panel.T()};
  const Vector ez = checked_z_residuals(Z, Psi, post);
  const double ez2 = ez.squaredNorm();
  const AggregateSeries s = aggregate_series(panel.periods(post.begin, post.size()), omega);
  const Vector ey = estimate_stage(s.Y, Z, Psi, post).residuals;
  const Vector ew = estimate_stage(s.W, Z, Psi, post).residuals;
  const Vector vy = lambda.lambda_post.transpose() * ey;
  const Vector vw = lambda.lambda_post.transpose() * ew;
  const double denom = ez2 * ez2;
  VarianceEstimate out;
  out.sigma(0, 0) = vy.squaredNorm() / denom;
  out.sigma(1, 1) = vw.squaredNorm() / denom;
  out.sigma(0, 1) = out.sigma(1, 0) = vy.dot(vw) / denom;
  out.rho_hat = lambda.rho_hat;
  out.lambda = lambda;
  return out;
}

VarianceEstimate estimate_variance(const BalancedPanel& panel, const Vector& omega, const Vector& Z,
                                   const Matrix& Psi, const SampleSplit& split) {
  const Vector ez = checked_z_residuals(Z, Psi, PeriodRange{split.T0, panel.T()});
  const double rho = fit_ar1(ez);
  return estimate_variance(panel, omega, Z, Psi, build_lambda_post(rho, panel.T(), split.T0), split);
}

void attach_variance(EstimateResult& result, const BalancedPanel& panel, const Vector& Z, const Matrix& Psi) {
  const SampleSplit split{result.t0, panel.T() - result.t0};
  const VarianceEstimate v = estimate_variance(panel, result.weights.omega, Z, Psi, split);
  result.sigma_hat = v.sigma;
  result.rho_hat = v.rho_hat;
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    fail(ErrorCode::InvalidArgument, "probability outside [0, 1]");
  }
  // Acklam's rational approximation.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                             1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                             6.680131188771972e+01,  -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                             -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                             3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // One Halley step on Phi(x) - p.
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

TestResult ar_test(double delta, double pi, const Eigen::Matrix2d& sigma, double tau0, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
  TestResult r;
  r.tau0 = tau0;
  r.alpha = alpha;
  r.statistic = std::abs(delta - tau0 * pi);
  const double var = sigma(0, 0) - 2.0 * tau0 * sigma(0, 1) + tau0 * tau0 * sigma(1, 1);
  r.critical = std::sqrt(std::max(0.0, var)) * normal_quantile(1.0 - alpha / 2.0);
  if (r.critical == 0.0 && r.statistic == 0.0) {
    r.zero_variance = true;
    r.reject = false;
    return r;
  }
  r.reject = r.statistic >= r.critical;
  return r;
}

double GridSpec::at(Index k) const {
  if (k == points - 1) return hi;
  return lo + static_cast<double>(k) * step();
}

bool ConfidenceSet::contains(double tau) const {
  for (const auto& iv : intervals) {
    if (tau >= iv.lo && tau <= iv.hi) return true;
  }
  return false;
}

GridSpec default_grid(double delta, double pi, const Eigen::Matrix2d& sigma) {
  GridSpec g;
  g.points = 2001;
  const double tau = delta / pi;
  const double se2 = (sigma(0, 0) - 2.0 * tau * sigma(0, 1) + tau * tau * sigma(1, 1)) / (pi * pi);
  double center = std::isfinite(tau) ? tau : 0.0;
  double half = 20.0 * std::sqrt(std::max(0.0, se2));
  if (!std::isfinite(half) || !(half > 0.0)) half = 20.0 * (1.0 + std::abs(center));
  g.lo = center - half;
  g.hi = center + half;
  return g;
}

ConfidenceSet merge_accepted(const std::vector<unsigned char>& accepted, const GridSpec& grid, double alpha) {
  ConfidenceSet cs;
  cs.alpha = alpha;
  cs.grid = grid;
  const Index m = static_cast<Index>(accepted.size());
  Index k = 0;
  while (k < m) {
    if (!accepted[static_cast<std::size_t>(k)]) {
      ++k;
      continue;
    }
    const Index start = k;
    while (k + 1 < m && accepted[static_cast<std::size_t>(k + 1)]) ++k;
    cs.intervals.push_back(Interval{grid.at(start), grid.at(k)});
    ++k;
  }
  cs.unbounded_below = m > 0 && accepted.front();
  cs.unbounded_above = m > 0 && accepted.back();
  return cs;
}

ConfidenceSet confidence_set(double delta, double pi, const Eigen::Matrix2d& sigma, double alpha,
                             const GridSpec& grid, int threads) {
  if (grid.points < 2 || !(grid.hi > grid.lo)) fail(ErrorCode::InvalidArgument, "grid needs lo < hi and >= 2 points");
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
  const Index m = grid.points;
  std::vector<unsigned char> accepted(static_cast<std::size_t>(m), 0);
  const int nt = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(static) num_threads(nt)
  for (Index k = 0; k < m; ++k) {
    accepted[static_cast<std::size_t>(k)] = ar_test(delta, pi, sigma, grid.at(k), alpha).reject ? 0 : 1;
  }
  return merge_accepted(accepted, grid, alpha);
}

}  // namespace aggshock
