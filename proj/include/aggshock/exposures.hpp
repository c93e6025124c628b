#pragma once

#include "aggshock/panel.hpp"

namespace aggshock {

struct ExposureFit {
  ExposureVector D;
  Vector se;
  Vector r2;
};

// Per-unit OLS of W_it on (Psi_t, Z_t) over t < T0; D_i is the Z slope.
// threads <= 0 keeps the OpenMP default.
ExposureFit construct_exposures(const BalancedPanel& panel, const Vector& Z, const Matrix& Psi, Index T0,
                                int threads = 0);

// D_i = mean of W_it over t < T0.
ExposureVector mean_exposures(const BalancedPanel& panel, Index T0);

}  // namespace aggshock
