#include "aggshock/reference.hpp"

#include "aggshock/error.hpp"

#include <cmath>

namespace aggshock::reference {

std::vector<RepResult> simulate_replications(const DgpSpec& spec, const McOptions& options) {
  if (options.reps < 1) fail(ErrorCode::InvalidArgument, "reps must be >= 1");
  std::vector<RepResult> out;
  out.reserve(static_cast<std::size_t>(options.reps));
  for (int rep = 0; rep < options.reps; ++rep) out.push_back(run_replication(spec, options, rep));
  return out;
}

ConfidenceSet confidence_set(double delta, double pi, const Eigen::Matrix2d& sigma, double alpha,
                             const GridSpec& grid) {
  std::vector<unsigned char> accepted(static_cast<std::size_t>(grid.points));
  for (Index k = 0; k < grid.points; ++k) {
    accepted[static_cast<std::size_t>(k)] = ar_test(delta, pi, sigma, grid.at(k), alpha).reject ? 0 : 1;
  }
  return merge_accepted(accepted, grid, alpha);
}

ExposureFit construct_exposures(const BalancedPanel& panel, const Vector& Z, const Matrix& Psi, Index T0) {
  const Index p = Psi.cols();
  Matrix X(T0, p + 1);
  X << Psi.topRows(T0), Z.head(T0);
  const Matrix XtX = X.transpose() * X;
  const Eigen::LDLT<Matrix> ldlt(XtX);
  const Matrix XtXinv = ldlt.solve(Matrix::Identity(p + 1, p + 1));
  ExposureFit fit;
  fit.D.D.resize(panel.n());
  fit.se.resize(panel.n());
  fit.r2.resize(panel.n());
  for (Index i = 0; i < panel.n(); ++i) {
    const Vector w = panel.W.row(i).head(T0).transpose();
    const Vector coef = ldlt.solve(X.transpose() * w);
    const double rss = (w - X * coef).squaredNorm();
    const double tss = (w.array() - w.mean()).square().sum();
    fit.D.D(i) = coef(p);
    fit.se(i) = std::sqrt(rss / static_cast<double>(T0 - p - 1) * XtXinv(p, p));
    fit.r2(i) = tss > 0.0 ? 1.0 - rss / tss : 1.0;
  }
  return fit;
}

}  // namespace aggshock::reference
