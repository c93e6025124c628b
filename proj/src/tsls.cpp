#include "aggshock/tsls.hpp"

#include "aggshock/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace aggshock {

namespace {

void check_shapes(const BalancedPanel& panel, const ExposureVector& D, const Vector& Z) {
  panel.validate();
  if (D.n() != panel.n()) fail(ErrorCode::InvalidArgument, "exposure length does not match panel rows");
  if (Z.size() != panel.T()) fail(ErrorCode::InvalidArgument, "Z length does not match panel columns");
  if (!D.D.allFinite() || !Z.allFinite()) fail(ErrorCode::NonFiniteValue, "D or Z not finite");
}

}  // namespace

double TslsResult::discrepancy() const {
  return std::max(std::abs(delta_fe - delta_ts), std::abs(pi_fe - pi_ts));
}

Vector tsls_weights(const ExposureVector& D) {
  const double v = population_variance(D.D);
  if (!(v > 0.0)) fail(ErrorCode::CollinearInstrument, "exposure has zero variance");
  return (D.D.array() - D.D.mean()) / v;
}

FeCoefficients tsls_fixed_effects(const BalancedPanel& panel, const ExposureVector& D, const Vector& Z) {
  check_shapes(panel, D, Z);
  const Matrix x = demean_two_way(D.D * Z.transpose());
  const double sxx = x.squaredNorm();
  const double scale = (D.D * Z.transpose()).squaredNorm();
  if (!(sxx > 1e-24 * scale) || sxx == 0.0) {
    fail(ErrorCode::CollinearInstrument, "D_i Z_t has no within variation");
  }
  // x is already demeaned, so demeaning Y and W is unnecessary.
  FeCoefficients out;
  out.delta = x.cwiseProduct(panel.Y).sum() / sxx;
  out.pi = x.cwiseProduct(panel.W).sum() / sxx;
  return out;
}

FeCoefficients tsls_timeseries(const BalancedPanel& panel, const ExposureVector& D, const Vector& Z) {
  check_shapes(panel, D, Z);
  const double vd = population_variance(D.D);
  if (!(vd > 0.0)) fail(ErrorCode::CollinearInstrument, "exposure has zero variance");
  const Vector a = tsls_weights(D) / static_cast<double>(panel.n());
  const Vector Yt = panel.Y.transpose() * a;
  const Vector Wt = panel.W.transpose() * a;
  const Vector zc = Z.array() - Z.mean();
  const double szz = zc.squaredNorm();
  if (!(szz > 1e-24 * Z.squaredNorm()) || szz == 0.0) {
    fail(ErrorCode::CollinearInstrument, "Z is constant over time");
  }
  FeCoefficients out;
  out.delta = zc.dot(Yt) / szz;
  out.pi = zc.dot(Wt) / szz;
  return out;
}

TslsResult tsls_estimate(const BalancedPanel& panel, const ExposureVector& D, const Vector& Z) {
  const FeCoefficients fe = tsls_fixed_effects(panel, D, Z);
  const FeCoefficients ts = tsls_timeseries(panel, D, Z);
  TslsResult r;
  r.delta_fe = fe.delta;
  r.pi_fe = fe.pi;
  r.delta_ts = ts.delta;
  r.pi_ts = ts.pi;
  r.weak_first_stage = std::abs(fe.pi) < 1e-10;
  r.tau = r.weak_first_stage ? std::numeric_limits<double>::quiet_NaN() : fe.delta / fe.pi;
  return r;
}

}  // namespace aggshock
