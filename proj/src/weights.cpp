#include "aggshock/weights.hpp"

#include "aggshock/linalg.hpp"
#include "aggshock/tsls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace aggshock {

namespace {

constexpr double kSingularRcond = 1e-14;

struct Problem {
  Index n = 0;
  Index T0 = 0;
  double c = 0.0;  // zeta^2 T0 / n^2
  ScaleFactors scale;
  Matrix Ypre, Wpre, X;
  Matrix Q;
  Matrix E;  // independent equality rows
  Vector b;
  Vector signs;  // sign(D_i - mean D)
  Vector bench;  // (D - mean D) / var(D)
};

void check_inputs(const BalancedPanel& panel, const ExposureVector& D, const Vector& Z, const Matrix& Psi,
                  const WeightConfig& config) {
  panel.validate();
  if (panel.n() < 3) fail(ErrorCode::InvalidArgument, "weights need n >= 3");
  if (D.n() != panel.n()) fail(ErrorCode::InvalidArgument, "exposure length does not match panel rows");
  if (Z.size() != panel.T() || Psi.rows() != panel.T()) {
    fail(ErrorCode::InvalidArgument, "Z and Psi must have T rows");
  }
  if (!D.D.allFinite() || !Z.allFinite() || !Psi.allFinite()) fail(ErrorCode::NonFiniteValue, "inputs not finite");
  if (!(config.zeta > 0.0) || !std::isfinite(config.zeta)) {
    fail(ErrorCode::InvalidArgument, "zeta must be positive and finite");
  }
  if (config.T0 < Psi.cols() + 1 || config.T0 > panel.T()) {
    fail(ErrorCode::InvalidArgument, "T0 = " + std::to_string(config.T0) + " out of range");
  }
  if (config.covariate_constraints) {
    const Matrix& Xc = *config.covariate_constraints;
    if (Xc.rows() != panel.n()) fail(ErrorCode::InvalidArgument, "covariate constraints need n rows");
    if (Xc.cols() + 2 >= panel.n()) fail(ErrorCode::InvalidArgument, "too many covariate constraints for n");
    if (!Xc.allFinite()) fail(ErrorCode::NonFiniteValue, "covariate constraints not finite");
  }
}

// Drops redundant rows of E w = b, or throws when the system is inconsistent.
void reduce_constraints(Matrix& E, Vector& b) {
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(E);
  cod.setThreshold(1e-10);
  const Vector w0 = cod.solve(b);
  const double resid = (E * w0 - b).norm();
  if (!(resid <= 1e-8 * (1.0 + b.norm()))) {
    fail(ErrorCode::InfeasibleConstraints, "equality constraints are inconsistent");
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(E.transpose());
  qr.setThreshold(1e-10);
  const Index r = qr.rank();
  if (r == E.rows()) return;
  Matrix Er(r, E.cols());
  Vector br(r);
  for (Index k = 0; k < r; ++k) {
    const Index row = qr.colsPermutation().indices()(k);
    Er.row(k) = E.row(row);
    br(k) = b(row);
  }
  E = std::move(Er);
  b = std::move(br);
}

Problem build_problem(const BalancedPanel& panel, const ExposureVector& D, const Vector& Z, const Matrix& Psi,
                      const WeightConfig& config, double zeta) {
  Problem pr;
  pr.n = panel.n();
  pr.T0 = config.T0;
  const double n = static_cast<double>(pr.n);
  pr.Ypre = panel.Y.leftCols(pr.T0);
  pr.Wpre = panel.W.leftCols(pr.T0);
  const Matrix Psipre = Psi.topRows(pr.T0);
  pr.X = hcat(Psipre, Z.head(pr.T0));
  if (LeastSquares(Psipre).rank() < Psipre.cols()) {
    fail(ErrorCode::RankDeficientPsi, "Psi is rank deficient over the pre-period");
  }
  if (LeastSquares(pr.X).rank() < pr.X.cols()) {
    fail(ErrorCode::CollinearInstrumentPre, "Z lies in the span of Psi over the pre-period");
  }
  pr.scale = scaling_factors(panel, pr.T0);

  const LeastSquares ls(pr.X);
  const Matrix Ry = ls.row_residuals(pr.Ypre);
  const Matrix Rw = ls.row_residuals(pr.Wpre);
  pr.c = zeta * zeta * static_cast<double>(pr.T0) / (n * n);
  pr.Q = (Ry * Ry.transpose() / pr.scale.sigma2_y + Rw * Rw.transpose() / pr.scale.sigma2_w) / (n * n);
  pr.Q.diagonal().array() += pr.c;

  const Index q = config.covariate_constraints ? config.covariate_constraints->cols() : 0;
  pr.E.resize(2 + q, pr.n);
  pr.E.row(0).setOnes();
  pr.E.row(1) = D.D.transpose();
  if (q > 0) pr.E.bottomRows(q) = config.covariate_constraints->transpose();
  pr.b = Vector::Zero(2 + q);
  pr.b(1) = n;
  reduce_constraints(pr.E, pr.b);

  const double dbar = D.D.mean();
  pr.signs = D.D.unaryExpr([dbar](double d) { return d > dbar ? 1.0 : (d < dbar ? -1.0 : 0.0); });
  pr.bench = tsls_weights(D);
  return pr;
}

Eigen::LLT<Matrix> factor_q(const Problem& pr) {
  Eigen::LLT<Matrix> llt(pr.Q);
  if (llt.info() != Eigen::Success || !(llt.rcond() > kSingularRcond)) {
    fail(ErrorCode::SingularKKT, "quadratic form is numerically singular");
  }
  return llt;
}

// argmin w'Qw subject to A w = r.
Vector equality_solve(const Eigen::LLT<Matrix>& llt, const Matrix& A, const Vector& r) {
  const Matrix QiAt = llt.solve(A.transpose());
  const Matrix S = A * QiAt;
  Eigen::LLT<Matrix> s_llt(S);
  if (s_llt.info() != Eigen::Success || !(s_llt.rcond() > kSingularRcond)) {
    fail(ErrorCode::SingularKKT, "constraint Schur complement is numerically singular");
  }
  return QiAt * s_llt.solve(r);
}

// Moves w onto {A w = r} along the row space of A.
void project(Vector& w, const Matrix& A, const Vector& r) {
  const Matrix AAt = A * A.transpose();
  w += A.transpose() * AAt.ldlt().solve(r - A * w);
}

Matrix active_rows(const Problem& pr, const std::vector<Index>& active, Vector& rhs) {
  Matrix A(pr.E.rows() + static_cast<Index>(active.size()), pr.n);
  A.topRows(pr.E.rows()) = pr.E;
  rhs = Vector::Zero(A.rows());
  rhs.head(pr.E.rows()) = pr.b;
  for (std::size_t k = 0; k < active.size(); ++k) {
    const Index row = pr.E.rows() + static_cast<Index>(k);
    A.row(row).setZero();
    A(row, active[k]) = 1.0;
  }
  return A;
}

double stationarity_residual(const Problem& pr, const Vector& w, const Matrix& A, Index n_eq,
                             double* min_ineq_multiplier) {
  const Vector g = 2.0 * pr.Q * w;
  const Vector lambda = A.transpose().colPivHouseholderQr().solve(g);
  double worst = 0.0;
  for (Index k = n_eq; k < A.rows(); ++k) {
    // Multiplier of s_j w_j >= 0 is s_j times the multiplier of w_j = 0.
    Index j = 0;
    A.row(k).maxCoeff(&j);
    worst = std::min(worst, pr.signs(j) * lambda(k));
  }
  if (min_ineq_multiplier) *min_ineq_multiplier = worst;
  return (g - A.transpose() * lambda).norm() / (1.0 + g.norm());
}

WeightSolution finish(const Problem& pr, const Vector& w, double zeta, double rcond) {
  WeightSolution sol;
  sol.omega = w;
  sol.zeta = zeta;
  sol.sigma2_y = pr.scale.sigma2_y;
  sol.sigma2_w = pr.scale.sigma2_w;
  sol.q_rcond = rcond;
  const double n = static_cast<double>(pr.n);
  const LeastSquares ls(pr.X);
  const Vector agg_y = pr.Ypre.transpose() * w / n;
  const Vector agg_w = pr.Wpre.transpose() * w / n;
  sol.eta_y = ls.solve(agg_y);
  sol.eta_w = ls.solve(agg_w);
  sol.balance_y = agg_y - pr.X * sol.eta_y;
  sol.balance_w = agg_w - pr.X * sol.eta_w;
  sol.objective = pr.c * w.squaredNorm() + sol.balance_y.squaredNorm() / pr.scale.sigma2_y +
                  sol.balance_w.squaredNorm() / pr.scale.sigma2_w;
  sol.bench_balance_y = ls.residuals(pr.Ypre.transpose() * pr.bench / n);
  sol.bench_balance_w = ls.residuals(pr.Wpre.transpose() * pr.bench / n);
  return sol;
}

WeightSolution solve_equality(const Problem& pr, double zeta) {
  const auto llt = factor_q(pr);
  Vector w = equality_solve(llt, pr.E, pr.b);
  project(w, pr.E, pr.b);
  WeightSolution sol = finish(pr, w, zeta, llt.rcond());
  sol.kkt_residual = stationarity_residual(pr, w, pr.E, pr.E.rows(), nullptr);
  return sol;
}

// Goldfarb-Idnani dual active set on the sign constraints s_j w_j >= 0,
// with the equality rows always active.
WeightSolution solve_sign(const Problem& pr, double zeta) {
  const auto llt = factor_q(pr);
  const Index n = pr.n;
  const Index n_eq = pr.E.rows();
  const Matrix Qinv = llt.solve(Matrix::Identity(n, n));

  Vector w = equality_solve(llt, pr.E, pr.b);
  std::vector<Index> active;
  std::vector<double> u;  // multipliers of active inequalities
  int iterations = 0;
  const int max_iterations = static_cast<int>(10 * n);

  auto violation = [&](Index j) { return pr.signs(j) * w(j); };

  while (true) {
    const double tol = 1e-12 * (1.0 + w.cwiseAbs().maxCoeff());
    Index p = -1;
    double most = -tol;
    for (Index j = 0; j < n; ++j) {
      if (pr.signs(j) == 0.0 || std::find(active.begin(), active.end(), j) != active.end()) continue;
      if (violation(j) < most) {
        most = violation(j);
        p = j;
      }
    }
    if (p < 0) break;

    double up = 0.0;
    while (true) {
      if (++iterations > max_iterations) {
        WeightSolution best = finish(pr, w, zeta, llt.rcond());
        best.iterations = iterations - 1;
        best.active_set = active;
        const double resid = -violation(p);
        throw MaxIterationsError("sign-constrained solve hit " + std::to_string(max_iterations) +
                                     " iterations, max violation " + format_double(resid),
                                 std::move(best), resid);
      }
      const Index m = n_eq + static_cast<Index>(active.size());
      Matrix N(n, m);
      N.leftCols(n_eq) = pr.E.transpose();
      for (std::size_t k = 0; k < active.size(); ++k) {
        N.col(n_eq + static_cast<Index>(k)) = pr.signs(active[k]) * Vector::Unit(n, active[k]);
      }
      const Matrix QiN = Qinv * N;
      const Matrix NQiN = N.transpose() * QiN;
      const Vector Qinp = pr.signs(p) * Qinv.col(p);
      const Vector r = NQiN.ldlt().solve(QiN.transpose() * pr.signs(p) * Vector::Unit(n, p));
      const Vector z = Qinp - QiN * r;
      const double zn = pr.signs(p) * z(p);

      double t1 = std::numeric_limits<double>::infinity();
      std::size_t drop = active.size();
      for (std::size_t k = 0; k < active.size(); ++k) {
        const double rk = r(n_eq + static_cast<Index>(k));
        if (rk > 0.0 && u[k] / rk < t1) {
          t1 = u[k] / rk;
          drop = k;
        }
      }

      if (!(zn > 1e-14 * Qinv(p, p))) {
        if (drop == active.size()) {
          fail(ErrorCode::InfeasibleConstraints, "sign constraints cannot be met together with the equalities");
        }
        for (std::size_t k = 0; k < active.size(); ++k) u[k] -= t1 * r(n_eq + static_cast<Index>(k));
        up += t1;
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(drop));
        u.erase(u.begin() + static_cast<std::ptrdiff_t>(drop));
        continue;
      }

      const double t2 = -violation(p) / zn;
      const double t = std::min(t1, t2);
      w += t * z;
      for (std::size_t k = 0; k < active.size(); ++k) u[k] -= t * r(n_eq + static_cast<Index>(k));
      up += t;
      if (t2 <= t1) {
        active.push_back(p);
        u.push_back(up);
        break;
      }
      active.erase(active.begin() + static_cast<std::ptrdiff_t>(drop));
      u.erase(u.begin() + static_cast<std::ptrdiff_t>(drop));
    }
  }

  // Exact re-solve on the final active set.
  std::sort(active.begin(), active.end());
  Vector rhs;
  const Matrix A = active_rows(pr, active, rhs);
  w = equality_solve(llt, A, rhs);
  project(w, A, rhs);
  for (Index j : active) w(j) = 0.0;

  WeightSolution sol = finish(pr, w, zeta, llt.rcond());
  sol.iterations = iterations;
  sol.active_set = active;
  double min_mult = 0.0;
  const double stat = stationarity_residual(pr, w, A, n_eq, &min_mult);
  sol.kkt_residual = std::max(stat, -min_mult / (1.0 + (2.0 * pr.Q * w).norm()));
  return sol;
}

template <class Solve>
WeightSolution with_retry(const BalancedPanel& panel, const ExposureVector& D, const Vector& Z, const Matrix& Psi,
                          const WeightConfig& config, Solve solve) {
  check_inputs(panel, D, Z, Psi, config);
  try {
    return solve(build_problem(panel, D, Z, Psi, config, config.zeta), config.zeta);
  } catch (const MaxIterationsError&) {
    throw;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SingularKKT) throw;
  }
  const double zeta = 10.0 * config.zeta;
  WeightSolution sol = solve(build_problem(panel, D, Z, Psi, config, zeta), zeta);
  sol.zeta_inflated = true;
  return sol;
}

}  // namespace

double default_zeta(const BalancedPanel& panel, Index T0) {
  panel.validate();
  const Index n = panel.n();
  const Index T = panel.T();
  const Index k = T / 2;
  if (k < 1 || k > std::min(n, T)) fail(ErrorCode::DegenerateScale, "singular value index out of range");
  const ScaleFactors s = scaling_factors(panel, T0);
  auto kth = [k](const Matrix& M, double sd) {
    Eigen::BDCSVD<Matrix> svd(demean_two_way(M) / sd);
    const Vector& sv = svd.singularValues();
    const double top = sv(0);
    const double v = sv(k - 1);
    if (!(top > 0.0) || !(v > 1e-12 * top)) {
      fail(ErrorCode::DegenerateScale, "demeaned panel has rank below T/2");
    }
    return v;
  };
  const double sy = kth(panel.Y, std::sqrt(s.sigma2_y));
  const double sw = kth(panel.W, std::sqrt(s.sigma2_w));
  return std::min(sy, sw) / std::sqrt(static_cast<double>(n + T));
}

WeightSolution solve_weights(const BalancedPanel& panel, const ExposureVector& D, const Vector& Z,
                             const Matrix& Psi, const WeightConfig& config) {
  if (config.sign_constraint) return solve_weights_constrained(panel, D, Z, Psi, config);
  return with_retry(panel, D, Z, Psi, config, solve_equality);
}

WeightSolution solve_weights_constrained(const BalancedPanel& panel, const ExposureVector& D,
                                         const Vector& Z, const Matrix& Psi, const WeightConfig& config) {
  if (!config.sign_constraint) return with_retry(panel, D, Z, Psi, config, solve_equality);
  return with_retry(panel, D, Z, Psi, config, solve_sign);
}

BalanceReport balance_diagnostics(const WeightSolution& solution) {
  BalanceReport rep;
  rep.residual_y = solution.balance_y;
  rep.residual_w = solution.balance_w;
  const double T0 = static_cast<double>(std::max<Index>(1, solution.balance_y.size()));
  rep.rms_y = std::sqrt(solution.balance_y.squaredNorm() / T0);
  rep.rms_w = std::sqrt(solution.balance_w.squaredNorm() / T0);
  rep.bench_rms_y = std::sqrt(solution.bench_balance_y.squaredNorm() / T0);
  rep.bench_rms_w = std::sqrt(solution.bench_balance_w.squaredNorm() / T0);
  const double ours = solution.balance_y.squaredNorm() / solution.sigma2_y +
                      solution.balance_w.squaredNorm() / solution.sigma2_w;
  const double bench = solution.bench_balance_y.squaredNorm() / solution.sigma2_y +
                       solution.bench_balance_w.squaredNorm() / solution.sigma2_w;
  rep.ratio = bench > 0.0 ? std::sqrt(ours / bench) : (ours > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  return rep;
}

}  // namespace aggshock
