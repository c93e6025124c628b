#include "aggshock/aggregate.hpp"

#include "aggshock/error.hpp"
#include "aggshock/linalg.hpp"

#include <cmath>
#include <limits>

namespace aggshock {

AggregateSeries aggregate_series(const BalancedPanel& block, const Vector& omega) {
  if (omega.size() != block.n()) fail(ErrorCode::InvalidArgument, "weight length does not match panel rows");
  const double n = static_cast<double>(block.n());
  return AggregateSeries{block.Y.transpose() * omega / n, block.W.transpose() * omega / n};
}

StageFit estimate_stage(const Vector& series, const Vector& Z, const Matrix& Psi, PeriodRange range) {
  if (range.begin < 0 || range.end > Z.size() || Psi.rows() != Z.size()) {
    fail(ErrorCode::InvalidArgument, "period range outside the series");
  }
  if (series.size() != range.size()) fail(ErrorCode::InvalidArgument, "series length does not match range");
  const Index m = range.size();
  const Index p = Psi.cols();
  Matrix X(m, p + 1);
  X.col(0).setOnes();
  X.middleCols(1, p - 1) = Psi.block(range.begin, 1, m, p - 1);
  X.col(p) = Z.segment(range.begin, m);
  const LeastSquares ls(X);
  if (!ls.full_rank() || m <= p + 1) {
    fail(ErrorCode::CollinearDesign, "post-period design (1, Psi, Z) is rank deficient");
  }
  const Vector coef = ls.solve(series);
  StageFit fit;
  fit.beta = coef(0);
  fit.eta_psi = coef.segment(1, p - 1);
  fit.coef_z = coef(p);
  fit.residuals = series - X * coef;
  return fit;
}

EstimateResult estimate(const BalancedPanel& panel, const ExposureVector& D, const Vector& Z, const Matrix& Psi,
                        const EstimateConfig& config) {
  panel.validate_for_estimation();
  AggregateData agg{Z, Psi};
  agg.validate();
  if (agg.T() != panel.T()) fail(ErrorCode::InvalidArgument, "aggregate series length does not match panel");

  EstimateResult r;
  r.t0 = config.t0 ? *config.t0 : default_t0(panel.T());
  const SampleSplit split = make_split(panel.T(), r.t0, Psi.cols());
  r.zeta = config.zeta ? *config.zeta : default_zeta(panel, r.t0);

  WeightConfig wc;
  wc.zeta = r.zeta;
  wc.T0 = r.t0;
  wc.sign_constraint = config.sign_constraint;
  wc.covariate_constraints = config.covariate_constraints;
  r.weights = solve_weights(panel, D, Z, Psi, wc);
  r.zeta = r.weights.zeta;

  const PeriodRange post{split.T0, panel.T()};
  r.post = aggregate_series(panel.periods(post.begin, post.size()), r.weights.omega);
  r.fit_y = estimate_stage(r.post.Y, Z, Psi, post);
  r.fit_w = estimate_stage(r.post.W, Z, Psi, post);
  r.delta = r.fit_y.coef_z;
  r.pi = r.fit_w.coef_z;
  r.weak_first_stage = std::abs(r.pi) < 1e-10;
  r.tau = r.weak_first_stage ? std::numeric_limits<double>::quiet_NaN() : r.delta / r.pi;
  return r;
}

}  // namespace aggshock
