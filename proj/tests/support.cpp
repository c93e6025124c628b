#include "support.hpp"

#include "aggshock/tsmodel.hpp"

#include <cmath>
#include <limits>

namespace support {

Matrix normal_matrix(Index rows, Index cols, std::mt19937_64& g, double sd) {
  std::normal_distribution<double> N(0.0, sd);
  Matrix M(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) M(i, j) = N(g);
  return M;
}

Vector normal_vector(Index size, std::mt19937_64& g, double mean, double sd) {
  std::normal_distribution<double> N(mean, sd);
  Vector v(size);
  for (Index i = 0; i < size; ++i) v(i) = N(g);
  return v;
}

Matrix add_effects(const Matrix& M, const Vector& a, const Vector& b) {
  Matrix out = M;
  out.colwise() += a;
  out.rowwise() += b.transpose();
  return out;
}

Instance random_instance(Index n, Index T, std::uint64_t seed, int trend_degree) {
  std::mt19937_64 g(seed);
  Instance in;
  in.D.D = normal_vector(n, g, 1.0, 0.5);
  in.Z = normal_vector(T, g);
  const Matrix factors_y = normal_matrix(n, 2, g) * normal_matrix(2, T, g);
  const Matrix factors_w = normal_matrix(n, 2, g) * normal_matrix(2, T, g);
  Matrix W = in.D.D * in.Z.transpose() + 0.5 * factors_w + normal_matrix(n, T, g, 0.7);
  Matrix Y = 1.5 * W + 0.5 * factors_y + normal_matrix(n, T, g, 0.7);
  in.panel.W = add_effects(W, normal_vector(n, g), normal_vector(T, g));
  in.panel.Y = add_effects(Y, normal_vector(n, g), normal_vector(T, g));
  for (Index i = 0; i < n; ++i) in.panel.unit_ids.push_back("u" + std::to_string(i));
  for (Index t = 0; t < T; ++t) in.panel.time_ids.push_back(std::to_string(t));
  aggshock::PsiSpec ps;
  ps.trend_degree = trend_degree;
  in.Psi = aggshock::build_psi(T, ps);
  return in;
}

}  // namespace support

namespace oracle {

Matrix demean_loops(const Matrix& M) {
  const Index n = M.rows(), T = M.cols();
  Matrix out(n, T);
  double grand = 0.0;
  for (Index i = 0; i < n; ++i)
    for (Index t = 0; t < T; ++t) grand += M(i, t);
  grand /= static_cast<double>(n * T);
  for (Index i = 0; i < n; ++i) {
    double row = 0.0;
    for (Index t = 0; t < T; ++t) row += M(i, t);
    row /= static_cast<double>(T);
    for (Index t = 0; t < T; ++t) {
      double col = 0.0;
      for (Index k = 0; k < n; ++k) col += M(k, t);
      col /= static_cast<double>(n);
      out(i, t) = M(i, t) - row - col + grand;
    }
  }
  return out;
}

Vector ols_inverse(const Matrix& X, const Vector& y) {
  const Matrix XtX = X.transpose() * X;
  return XtX.inverse() * (X.transpose() * y);
}

Vector residuals_inverse(const Matrix& X, const Vector& y) { return y - X * ols_inverse(X, y); }

DummyTsls dummy_tsls(const BalancedPanel& panel, const ExposureVector& D, const Vector& Z) {
  const Index n = panel.n(), T = panel.T();
  const Index rows = n * T;
  const Index k = 1 + n + (T - 1);
  Matrix X = Matrix::Zero(rows, k);
  Vector y(rows), w(rows);
  for (Index i = 0; i < n; ++i) {
    for (Index t = 0; t < T; ++t) {
      const Index r = i * T + t;
      X(r, 0) = D.D(i) * Z(t);
      X(r, 1 + i) = 1.0;
      if (t > 0) X(r, n + t) = 1.0;
      y(r) = panel.Y(i, t);
      w(r) = panel.W(i, t);
    }
  }
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(X);
  DummyTsls out;
  out.delta = cod.solve(y)(0);
  out.pi = cod.solve(w)(0);
  // Second stage: Y on fitted W and the dummies.
  const Vector w_hat = X * cod.solve(w);
  Matrix X2 = X;
  X2.col(0) = w_hat;
  out.tau = Eigen::CompleteOrthogonalDecomposition<Matrix>(X2).solve(y)(0);
  return out;
}

Scales scales_loops(const BalancedPanel& panel, Index T0) {
  const double denom = static_cast<double>(panel.n() * T0);
  Scales s;
  s.sy = demean_loops(panel.Y.leftCols(T0)).squaredNorm() / denom;
  s.sw = demean_loops(panel.W.leftCols(T0)).squaredNorm() / denom;
  return s;
}

Matrix profiled_q(const BalancedPanel& panel, const Vector& Z, const Matrix& Psi, Index T0, double zeta) {
  const Index n = panel.n();
  const double nd = static_cast<double>(n);
  Matrix X(T0, Psi.cols() + 1);
  X << Psi.topRows(T0), Z.head(T0);
  const Matrix M = Matrix::Identity(T0, T0) - X * (X.transpose() * X).inverse() * X.transpose();
  const Scales s = scales_loops(panel, T0);
  const Matrix Yp = panel.Y.leftCols(T0), Wp = panel.W.leftCols(T0);
  Matrix Q = zeta * zeta * static_cast<double>(T0) / (nd * nd) * Matrix::Identity(n, n);
  Q += (Yp * M * Yp.transpose() / s.sy + Wp * M * Wp.transpose() / s.sw) / (nd * nd);
  return 0.5 * (Q + Q.transpose());
}

std::pair<Matrix, Vector> constraints(const ExposureVector& D) {
  const Index n = D.n();
  Matrix E(2, n);
  E.row(0).setOnes();
  E.row(1) = D.D.transpose();
  Vector b(2);
  b << 0.0, static_cast<double>(n);
  return {E, b};
}

PgResult projected_gradient(const Matrix& Q, const Matrix& E, const Vector& b, double tol, long max_iter) {
  const Index n = Q.rows();
  const Matrix EEt_inv = (E * E.transpose()).inverse();
  const Matrix P = Matrix::Identity(n, n) - E.transpose() * EEt_inv * E;
  const Vector w0 = E.transpose() * EEt_inv * b;
  const double L = 2.0 * Eigen::SelfAdjointEigenSolver<Matrix>(P * Q * P).eigenvalues().maxCoeff();
  auto f = [&](const Vector& w) { return w.dot(Q * w); };
  PgResult r;
  Vector x = w0, x_prev = w0, y = w0;
  double t = 1.0;
  for (r.iterations = 0; r.iterations < max_iter; ++r.iterations) {
    const Vector gx = P * (2.0 * Q * x);
    if (gx.norm() <= tol * (1.0 + (2.0 * Q * x).norm())) break;
    const Vector gy = P * (2.0 * Q * y);
    x_prev = x;
    x = y - gy / L;
    x += E.transpose() * EEt_inv * (b - E * x);  // guard against drift
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    if (f(x) > f(x_prev)) {
      t = 1.0;
      y = x;
      continue;
    }
    y = x + ((t - 1.0) / t_next) * (x - x_prev);
    t = t_next;
  }
  r.w = x;
  r.stationarity = (P * (2.0 * Q * x)).norm() / (1.0 + (2.0 * Q * x).norm());
  return r;
}

Vector kkt_lu(const Matrix& Q, const Matrix& E, const Vector& b) {
  const Index n = Q.rows(), m = E.rows();
  Matrix K = Matrix::Zero(n + m, n + m);
  K.topLeftCorner(n, n) = 2.0 * Q;
  K.topRightCorner(n, m) = E.transpose();
  K.bottomLeftCorner(m, n) = E;
  Vector rhs = Vector::Zero(n + m);
  rhs.tail(m) = b;
  return Eigen::FullPivLU<Matrix>(K).solve(rhs).head(n);
}

Vector enumerate_sign(const Matrix& Q, const Matrix& E, const Vector& b, const Vector& signs) {
  const Index n = Q.rows();
  std::vector<Index> free_units;
  for (Index i = 0; i < n; ++i)
    if (signs(i) != 0.0) free_units.push_back(i);
  const std::size_t m = free_units.size();
  double best = std::numeric_limits<double>::infinity();
  Vector best_w;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
    std::vector<Index> pinned;
    for (std::size_t k = 0; k < m; ++k)
      if (mask & (std::uint64_t{1} << k)) pinned.push_back(free_units[k]);
    Matrix A(E.rows() + static_cast<Index>(pinned.size()), n);
    A.topRows(E.rows()) = E;
    Vector r = Vector::Zero(A.rows());
    r.head(E.rows()) = b;
    for (std::size_t k = 0; k < pinned.size(); ++k) {
      A.row(E.rows() + static_cast<Index>(k)).setZero();
      A(E.rows() + static_cast<Index>(k), pinned[k]) = 1.0;
    }
    Eigen::FullPivLU<Matrix> lu(A);
    if (lu.rank() < A.rows()) continue;
    const Vector w = kkt_lu(Q, A, r);
    if ((A * w - r).norm() > 1e-8 * (1.0 + r.norm())) continue;
    bool feasible = true;
    for (Index i = 0; i < n; ++i)
      if (signs(i) * w(i) < -1e-12 * (1.0 + w.cwiseAbs().maxCoeff())) feasible = false;
    if (!feasible) continue;
    const double obj = w.dot(Q * w);
    if (obj < best) {
      best = obj;
      best_w = w;
    }
  }
  return best_w;
}

JointSolution joint_weights(const BalancedPanel& panel, const ExposureVector& D, const Vector& Z, const Matrix& Psi,
                            Index T0, double zeta) {
  const Index n = panel.n();
  const double nd = static_cast<double>(n);
  const Index k = Psi.cols() + 1;
  Matrix X(T0, k);
  X << Psi.topRows(T0), Z.head(T0);
  const Scales s = scales_loops(panel, T0);
  const Index nv = n + 2 * k;
  Matrix Ay = Matrix::Zero(T0, nv), Aw = Matrix::Zero(T0, nv);
  Ay.leftCols(n) = panel.Y.leftCols(T0).transpose() / nd;
  Ay.middleCols(n, k) = -X;
  Aw.leftCols(n) = panel.W.leftCols(T0).transpose() / nd;
  Aw.rightCols(k) = -X;
  Matrix H = Ay.transpose() * Ay / s.sy + Aw.transpose() * Aw / s.sw;
  H.topLeftCorner(n, n).diagonal().array() += zeta * zeta * static_cast<double>(T0) / (nd * nd);
  auto [E0, b] = constraints(D);
  Matrix E = Matrix::Zero(2, nv);
  E.leftCols(n) = E0;
  const Vector v = kkt_lu(H, E, b);
  JointSolution out;
  out.w = v.head(n);
  out.eta_y = v.segment(n, k);
  out.eta_w = v.tail(k);
  out.objective = v.dot(H * v);
  return out;
}

Eigen::Matrix2d toeplitz_variance(const BalancedPanel& panel, const Vector& omega, const Vector& Z, const Matrix& Psi,
                                  double rho, Index T0) {
  const Index T = panel.T(), T1 = T - T0, p = Psi.cols();
  const double nd = static_cast<double>(panel.n());
  Matrix Lambda = Matrix::Zero(T, T);
  for (Index t = 0; t < T; ++t)
    for (Index s = 0; s <= t; ++s) Lambda(t, s) = std::pow(rho, static_cast<double>(t - s));
  Matrix Lpost(T1, T);
  for (Index r = 0; r < T1; ++r) Lpost.row(r) = Lambda.row(T0 + r);

  Vector ya(T1), wa(T1), z(T1);
  for (Index r = 0; r < T1; ++r) {
    double sy = 0.0, sw = 0.0;
    for (Index i = 0; i < panel.n(); ++i) {
      sy += omega(i) * panel.Y(i, T0 + r);
      sw += omega(i) * panel.W(i, T0 + r);
    }
    ya(r) = sy / nd;
    wa(r) = sw / nd;
    z(r) = Z(T0 + r);
  }
  const Matrix Xz = Psi.bottomRows(T1);
  Matrix X(T1, p + 1);
  X << Xz, z;
  const Vector ey = residuals_inverse(X, ya);
  const Vector ew = residuals_inverse(X, wa);
  const Vector ez = residuals_inverse(Xz, z);
  const double d = std::pow(ez.squaredNorm(), 2);
  const Eigen::RowVectorXd vy = ey.transpose() * Lpost;
  const Eigen::RowVectorXd vw = ew.transpose() * Lpost;
  Eigen::Matrix2d S;
  S(0, 0) = vy.dot(vy) / d;
  S(1, 1) = vw.dot(vw) / d;
  S(0, 1) = S(1, 0) = vy.dot(vw) / d;
  return S;
}

Vector singular_values_eig(const Matrix& M) {
  const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(M.transpose() * M).eigenvalues();
  Vector sv(ev.size());
  for (Index k = 0; k < ev.size(); ++k) sv(k) = std::sqrt(std::max(0.0, ev(ev.size() - 1 - k)));
  return sv;
}

double default_zeta_eig(const BalancedPanel& panel, Index T0) {
  const Scales s = scales_loops(panel, T0);
  const Index k = panel.T() / 2;
  const double sy = singular_values_eig(demean_loops(panel.Y) / std::sqrt(s.sy))(k - 1);
  const double sw = singular_values_eig(demean_loops(panel.W) / std::sqrt(s.sw))(k - 1);
  return std::min(sy, sw) / std::sqrt(static_cast<double>(panel.n() + panel.T()));
}

namespace {

// Inverse of 0.5 erfc(-x / sqrt 2) by bisection.
double quantile_bisect(double p) {
  double lo = -40.0, hi = 40.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

QuadraticSet ar_accepted_closed_form(double delta, double pi, const Eigen::Matrix2d& sigma, double alpha) {
  const double z2 = std::pow(quantile_bisect(1.0 - alpha / 2.0), 2);
  const double a = pi * pi - z2 * sigma(1, 1);
  const double b = -2.0 * (delta * pi - z2 * sigma(0, 1));
  const double c = delta * delta - z2 * sigma(0, 0);
  const double inf = std::numeric_limits<double>::infinity();
  QuadraticSet out;
  const double disc = b * b - 4.0 * a * c;
  if (a > 0.0) {
    if (disc > 0.0) {
      const double s = std::sqrt(disc);
      out.pieces.push_back({(-b - s) / (2.0 * a), (-b + s) / (2.0 * a)});
    }
  } else if (a < 0.0) {
    if (disc > 0.0) {
      const double s = std::sqrt(disc);
      const double r1 = (-b + s) / (2.0 * a), r2 = (-b - s) / (2.0 * a);
      out.pieces.push_back({-inf, std::min(r1, r2)});
      out.pieces.push_back({std::max(r1, r2), inf});
    } else {
      out.pieces.push_back({-inf, inf});
    }
  } else if (b != 0.0) {
    const double r = -c / b;
    out.pieces.push_back(b > 0.0 ? std::make_pair(-inf, r) : std::make_pair(r, inf));
  } else if (c < 0.0) {
    out.pieces.push_back({-inf, inf});
  }
  return out;
}

}  // namespace oracle
