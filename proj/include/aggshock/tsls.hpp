#pragma once

#include "aggshock/panel.hpp"

namespace aggshock {

struct FeCoefficients {
  double delta = 0.0;
  double pi = 0.0;
};

struct TslsResult {
  double delta_fe = 0.0;
  double pi_fe = 0.0;
  double delta_ts = 0.0;
  double pi_ts = 0.0;
  double tau = 0.0;  // NaN when the first stage is weak
  bool weak_first_stage = false;

  // Largest absolute disagreement between the two representations.
  double discrepancy() const;
};

// Within-transformation regression of Y and W on D_i Z_t.
FeCoefficients tsls_fixed_effects(const BalancedPanel& panel, const ExposureVector& D, const Vector& Z);

// OLS of the (D - mean D) / var(D) / n aggregates on (1, Z).
FeCoefficients tsls_timeseries(const BalancedPanel& panel, const ExposureVector& D, const Vector& Z);

TslsResult tsls_estimate(const BalancedPanel& panel, const ExposureVector& D, const Vector& Z);

// (D_i - mean D) / var(D), the implied unit weights.
Vector tsls_weights(const ExposureVector& D);

}  // namespace aggshock
