#include "aggshock/tsmodel.hpp"

#include "aggshock/error.hpp"
#include "aggshock/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace aggshock {

Matrix build_psi(Index T, const PsiSpec& spec) {
  if (T < 1) fail(ErrorCode::InvalidArgument, "T must be positive");
  if (spec.trend_degree < 0) fail(ErrorCode::InvalidArgument, "trend degree must be >= 0");
  const Index k = spec.extra ? spec.extra->cols() : 0;
  if (spec.extra && spec.extra->rows() != T) {
    fail(ErrorCode::InvalidArgument, "extra Psi series must have T rows");
  }
  const Index p = 1 + spec.trend_degree + k;
  if (p > T) fail(ErrorCode::RankDeficientPsi, "more Psi columns than periods");
  Matrix Psi(T, p);
  for (Index t = 0; t < T; ++t) {
    const double s = static_cast<double>(t + 1) / static_cast<double>(T);
    double v = 1.0;
    for (int d = 0; d <= spec.trend_degree; ++d) {
      Psi(t, d) = v;
      v *= s;
    }
  }
  if (k > 0) {
    if (!spec.extra->allFinite()) fail(ErrorCode::NonFiniteValue, "extra Psi series not finite");
    Psi.rightCols(k) = *spec.extra;
  }
  if (LeastSquares(Psi).rank() < p) fail(ErrorCode::RankDeficientPsi, "Psi columns are collinear");
  return Psi;
}

Vector z_residuals(const Vector& Z, const Matrix& Psi, PeriodRange range) {
  if (range.begin < 0 || range.end > Z.size() || Psi.rows() != Z.size()) {
    fail(ErrorCode::InvalidArgument, "period range outside the series");
  }
  if (range.size() <= Psi.cols()) {
    fail(ErrorCode::InvalidArgument, "period range too short for Psi");
  }
  const LeastSquares ls(Psi.middleRows(range.begin, range.size()));
  if (!ls.full_rank()) fail(ErrorCode::RankDeficientPsi, "Psi is rank deficient over the range");
  return ls.residuals(Z.segment(range.begin, range.size()));
}

double fit_ar1(const Vector& e) {
  if (e.size() < 3) fail(ErrorCode::DegenerateSeries, "AR(1) fit needs at least 3 observations");
  const Index m = e.size() - 1;
  const double den = e.head(m).squaredNorm();
  if (!(den > 0.0) || !(population_variance(e) > 0.0)) {
    fail(ErrorCode::DegenerateSeries, "series has zero variance");
  }
  const double rho = e.tail(m).dot(e.head(m)) / den;
  if (!std::isfinite(rho)) fail(ErrorCode::DegenerateSeries, "AR(1) slope not finite");
  return std::clamp(rho, -0.99, 0.99);
}

LambdaModel build_lambda_post(double rho_hat, Index T, Index T0) {
  if (!(std::abs(rho_hat) < 1.0)) fail(ErrorCode::InvalidArgument, "|rho| must be < 1");
  if (T0 < 0 || T0 >= T) fail(ErrorCode::InvalidArgument, "need 0 <= T0 < T");
  LambdaModel m;
  m.rho_hat = rho_hat;
  m.T = T;
  m.T0 = T0;
  m.lambda_post = Matrix::Zero(T - T0, T);
  for (Index r = 0; r < T - T0; ++r) {
    const Index t = T0 + r;
    double v = 1.0;
    for (Index s = t; s >= 0; --s) {
      m.lambda_post(r, s) = v;
      v *= rho_hat;
    }
  }
  return m;
}

}  // namespace aggshock
