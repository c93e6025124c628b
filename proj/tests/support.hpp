#pragma once

#include "aggshock/error.hpp"
#include "aggshock/inference.hpp"
#include "aggshock/panel.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <vector>

namespace support {

using aggshock::BalancedPanel;
using aggshock::ExposureVector;
using aggshock::Index;
using aggshock::Matrix;
using aggshock::Vector;

Matrix normal_matrix(Index rows, Index cols, std::mt19937_64& g, double sd = 1.0);
Vector normal_vector(Index size, std::mt19937_64& g, double mean = 0.0, double sd = 1.0);

struct Instance {
  BalancedPanel panel;
  ExposureVector D;
  Vector Z;
  Matrix Psi;
};

// Two-way effects, a rank-2 factor term, D_i Z_t loading and noise.
Instance random_instance(Index n, Index T, std::uint64_t seed, int trend_degree = 0);

template <class F>
std::optional<aggshock::ErrorCode> error_of(F&& f) {
  try {
    f();
  } catch (const aggshock::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

// Adds a_i + b_t to every entry.
Matrix add_effects(const Matrix& M, const Vector& a, const Vector& b);

}  // namespace support

namespace oracle {

using support::BalancedPanel;
using support::ExposureVector;
using support::Index;
using support::Matrix;
using support::Vector;

Matrix demean_loops(const Matrix& M);

// (X'X)^-1 X'y with an explicit inverse.
Vector ols_inverse(const Matrix& X, const Vector& y);
Vector residuals_inverse(const Matrix& X, const Vector& y);

struct DummyTsls {
  double delta = 0.0;
  double pi = 0.0;
  double tau = 0.0;  // two-stage least squares with all dummies
};

// Full dummy-variable regressions: unit dummies, T-1 time dummies, D_i Z_t.
DummyTsls dummy_tsls(const BalancedPanel& panel, const ExposureVector& D, const Vector& Z);

struct Scales {
  double sy = 0.0;
  double sw = 0.0;
};
Scales scales_loops(const BalancedPanel& panel, Index T0);

// Profiled quadratic form built with an explicit annihilator matrix.
Matrix profiled_q(const BalancedPanel& panel, const Vector& Z, const Matrix& Psi, Index T0, double zeta);

// Constraint rows [1'; D'] and right-hand side (0, n).
std::pair<Matrix, Vector> constraints(const ExposureVector& D);

struct PgResult {
  Vector w;
  double stationarity = 0.0;
  long iterations = 0;
};

// Accelerated projected gradient on {E w = b} with adaptive restart.
PgResult projected_gradient(const Matrix& Q, const Matrix& E, const Vector& b, double tol, long max_iter);

// Full KKT system solved by full-pivoting LU.
Vector kkt_lu(const Matrix& Q, const Matrix& E, const Vector& b);

// Minimum over all 2^m choices of units pinned to zero, keeping only
// sign-feasible candidates s_i w_i >= 0.
Vector enumerate_sign(const Matrix& Q, const Matrix& E, const Vector& b, const Vector& signs);

struct JointSolution {
  Vector w;
  Vector eta_y;
  Vector eta_w;
  double objective = 0.0;
};

// Minimizes the unprofiled criterion jointly over (w, eta_y, eta_w).
JointSolution joint_weights(const BalancedPanel& panel, const ExposureVector& D, const Vector& Z, const Matrix& Psi,
                            Index T0, double zeta);

// Dense T x T lower-triangular Lambda, explicit row extraction and products.
Eigen::Matrix2d toeplitz_variance(const BalancedPanel& panel, const Vector& omega, const Vector& Z, const Matrix& Psi,
                                  double rho, Index T0);

// Singular values from the eigenvalues of M'M, descending.
Vector singular_values_eig(const Matrix& M);

double default_zeta_eig(const BalancedPanel& panel, Index T0);

// Accepted set {tau0 : (delta - tau0 pi)^2 < z^2 (1, -tau0) S (1, -tau0)'}
// from the roots of the quadratic. Pieces may have infinite ends.
struct QuadraticSet {
  std::vector<std::pair<double, double>> pieces;
};
QuadraticSet ar_accepted_closed_form(double delta, double pi, const Eigen::Matrix2d& sigma, double alpha);

}  // namespace oracle
