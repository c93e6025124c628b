#pragma once

#include "aggshock/panel.hpp"

#include <Eigen/Dense>

namespace aggshock {

// OLS via column-pivoted QR. Rank is judged with a relative threshold on
// the R diagonal.
class LeastSquares {
 public:
  explicit LeastSquares(const Matrix& X, double threshold = 1e-10);

  Index rank() const { return qr_.rank(); }
  Index cols() const { return X_.cols(); }
  bool full_rank() const { return rank() == X_.cols(); }

  Vector solve(const Vector& y) const;
  Matrix solve(const Matrix& Y) const;
  Vector residuals(const Vector& y) const;
  // Residuals of every row of Yrows (each row is one series over X's rows).
  Matrix row_residuals(const Matrix& Yrows) const;
  Matrix xtx_inverse() const;

  const Matrix& design() const { return X_; }

 private:
  Matrix X_;
  Eigen::ColPivHouseholderQR<Matrix> qr_;
};

// Horizontal concatenation helper.
Matrix hcat(const Matrix& A, const Matrix& B);

// Ratio of the extreme singular values; +inf when the smallest is zero.
double condition_number(const Matrix& A);

}  // namespace aggshock
