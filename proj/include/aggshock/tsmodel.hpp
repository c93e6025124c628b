#pragma once

#include "aggshock/panel.hpp"

#include <optional>

namespace aggshock {

struct PsiSpec {
  int trend_degree = 0;
  std::optional<Matrix> extra;  // T x k exogenous aggregate series
};

// Columns: 1, t/T, (t/T)^2, ..., then the extra series.
Matrix build_psi(Index T, const PsiSpec& spec);

// Half-open period range [begin, end).
struct PeriodRange {
  Index begin = 0;
  Index end = 0;

  Index size() const { return end - begin; }
};

// OLS residuals of Z on Psi over the given periods.
Vector z_residuals(const Vector& Z, const Matrix& Psi, PeriodRange range);

// Lag-one OLS slope without intercept, clamped to [-0.99, 0.99].
double fit_ar1(const Vector& residuals);

struct LambdaModel {
  double rho_hat = 0.0;
  Index T = 0;
  Index T0 = 0;
  Matrix lambda_post;  // T1 x T, row r is period T0 + r
};

// Entry (r, s) is rho^(T0 + r - s) for s <= T0 + r, zero otherwise.
LambdaModel build_lambda_post(double rho_hat, Index T, Index T0);

}  // namespace aggshock
