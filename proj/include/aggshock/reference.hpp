#pragma once

// Single-threaded versions of the OpenMP kernels, kept for tests and
// benchmarks.

#include "aggshock/exposures.hpp"
#include "aggshock/inference.hpp"
#include "aggshock/sim.hpp"

namespace aggshock::reference {

std::vector<RepResult> simulate_replications(const DgpSpec& spec, const McOptions& options);

ConfidenceSet confidence_set(double delta, double pi, const Eigen::Matrix2d& sigma, double alpha,
                             const GridSpec& grid);

// Fresh normal-equations regression per unit.
ExposureFit construct_exposures(const BalancedPanel& panel, const Vector& Z, const Matrix& Psi, Index T0);

}  // namespace aggshock::reference
