#include "aggshock/exposures.hpp"

#include "aggshock/error.hpp"
#include "aggshock/linalg.hpp"

#include <omp.h>

#include <cmath>

namespace aggshock {

ExposureFit construct_exposures(const BalancedPanel& panel, const Vector& Z, const Matrix& Psi, Index T0,
                                int threads) {
  panel.validate();
  if (Z.size() != panel.T() || Psi.rows() != panel.T()) fail(ErrorCode::InvalidArgument, "Z and Psi need T rows");
  const Index p = Psi.cols();
  if (T0 <= p + 1 || T0 > panel.T()) {
    fail(ErrorCode::InvalidArgument, "construct_exposures needs p + 1 < T0 <= T");
  }
  const Matrix X = hcat(Psi.topRows(T0), Z.head(T0));
  const LeastSquares ls(X);
  if (!ls.full_rank()) fail(ErrorCode::CollinearDesign, "pre-period design (Psi, Z) is rank deficient");
  const double var_z = ls.xtx_inverse()(p, p);
  const double dof = static_cast<double>(T0 - p - 1);

  const Index n = panel.n();
  // X is factored once and shared by every unit.
  const Matrix Wpre = panel.W.leftCols(T0);
  ExposureFit fit;
  fit.D.D.resize(n);
  fit.se.resize(n);
  fit.r2.resize(n);
  const int nt = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(static) num_threads(nt)
  for (Index i = 0; i < n; ++i) {
    const Vector w = Wpre.row(i).transpose();
    const Vector coef = ls.solve(w);
    const Vector e = w - X * coef;
    const double rss = e.squaredNorm();
    const double tss = (w.array() - w.mean()).square().sum();
    fit.D.D(i) = coef(p);
    fit.se(i) = std::sqrt(rss / dof * var_z);
    fit.r2(i) = tss > 0.0 ? 1.0 - rss / tss : 1.0;
  }
  return fit;
}

ExposureVector mean_exposures(const BalancedPanel& panel, Index T0) {
  if (T0 < 1 || T0 > panel.T()) fail(ErrorCode::InvalidArgument, "T0 out of range");
  return ExposureVector{panel.W.leftCols(T0).rowwise().mean()};
}

}  // namespace aggshock
