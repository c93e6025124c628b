#include "aggshock/linalg.hpp"

#include <limits>

namespace aggshock {

LeastSquares::LeastSquares(const Matrix& X, double threshold) : X_(X), qr_(X) {
  qr_.setThreshold(threshold);
}

Vector LeastSquares::solve(const Vector& y) const { return qr_.solve(y); }

Matrix LeastSquares::solve(const Matrix& Y) const { return qr_.solve(Y); }

Vector LeastSquares::residuals(const Vector& y) const { return y - X_ * qr_.solve(y); }

Matrix LeastSquares::row_residuals(const Matrix& Yrows) const {
  const Matrix Yt = Yrows.transpose();
  return (Yt - X_ * qr_.solve(Yt)).transpose();
}

Matrix LeastSquares::xtx_inverse() const {
  const Matrix XtX = X_.transpose() * X_;
  return XtX.ldlt().solve(Matrix::Identity(X_.cols(), X_.cols()));
}

Matrix hcat(const Matrix& A, const Matrix& B) {
  Matrix out(A.rows(), A.cols() + B.cols());
  out << A, B;
  return out;
}

double condition_number(const Matrix& A) {
  if (A.size() == 0) return 1.0;
  Eigen::JacobiSVD<Matrix> svd(A);
  const auto& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  if (smin <= 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / smin;
}

}  // namespace aggshock
