#include "aggshock/sim.hpp"

#include "aggshock/aggregate.hpp"
#include "aggshock/error.hpp"
#include "aggshock/exposures.hpp"
#include "aggshock/inference.hpp"
#include "aggshock/linalg.hpp"
#include "aggshock/rng.hpp"
#include "aggshock/tsls.hpp"

#include <omp.h>

#include <array>
#include <cmath>
#include <limits>

namespace aggshock {

namespace {

enum Stream : std::uint64_t {
  kStreamZ = 1,
  kStreamZtilde = 2,
  kStreamNoise = 3,
  kStreamPi = 11,
  kStreamFixedEffects = 12,
  kStreamL = 13,
  kStreamXi = 14,
};

Vector normal_vector(NormalStream& rng, Index size, double mean = 0.0, double sd = 1.0) {
  Vector v(size);
  for (Index i = 0; i < size; ++i) v(i) = rng(mean, sd);
  return v;
}

Matrix normal_matrix(NormalStream& rng, Index rows, Index cols) {
  Matrix M(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) M(i, j) = rng();
  return M;
}

Vector draw_ma(const MaModel& model, Index T, NormalStream& rng) {
  const Index q = static_cast<Index>(model.coefs.size());
  const Vector nu = normal_vector(rng, T + q, 0.0, std::sqrt(model.innovation_var));
  Vector Z(T);
  for (Index t = 0; t < T; ++t) {
    double z = nu(t + q);
    for (Index k = 0; k < q; ++k) z += model.coefs[static_cast<std::size_t>(k)] * nu(t + q - k - 1);
    Z(t) = z;
  }
  return Z;
}

// Rank-r matrix with Frobenius norm `norm`.
Matrix random_low_rank(NormalStream& rng, Index n, Index T, Index r, double norm) {
  if (r == 0 || norm == 0.0) return Matrix::Zero(n, T);
  const Matrix L = normal_matrix(rng, n, r) * normal_matrix(rng, T, r).transpose();
  return L * (norm / L.norm());
}

void draw_loadings(DgpSpec& spec, std::uint64_t seed, std::uint64_t attempt) {
  NormalStream rng(derive_seed(seed, attempt, kStreamXi));
  const Vector xi_w = normal_vector(rng, spec.n);
  const Vector xi_y = normal_vector(rng, spec.n);
  spec.theta_w = 0.2 * spec.pi + std::sqrt(1.0 - 0.2 * 0.2) * xi_w;
  spec.theta_y = 0.45 * spec.pi + 1.5 * std::sqrt(1.0 - 0.3 * 0.3) * xi_y;
}

MaModel published_z_model() { return MaModel{{1.14, 0.52}, 0.43}; }

Matrix truncated_svd(const Matrix& E, int rank) {
  if (rank == 0) return Matrix::Zero(E.rows(), E.cols());
  Eigen::BDCSVD<Matrix> svd(E, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Index r = rank;
  return svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal() *
         svd.matrixV().leftCols(r).transpose();
}

// Neumaier compensated sum.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) carry += (sum - t) + x;
    else carry += (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + carry; }
};

struct Moments {
  CompensatedSum e, e2;
  void add(double err) {
    e.add(err);
    e2.add(err * err);
  }
  ErrorStats stats(double count) const {
    return ErrorStats{std::sqrt(e2.value() / count), e.value() / count};
  }
};

}  // namespace

double MaModel::autocovariance(int h) const {
  std::vector<double> th{1.0};
  th.insert(th.end(), coefs.begin(), coefs.end());
  const int q = static_cast<int>(th.size());
  h = std::abs(h);
  double g = 0.0;
  for (int j = 0; j + h < q; ++j) g += th[static_cast<std::size_t>(j)] * th[static_cast<std::size_t>(j + h)];
  return innovation_var * g;
}

double MaModel::variance() const { return autocovariance(0); }

DesignFlags design_flags(int design) {
  switch (design) {
    case 1: return {false, false};
    case 2: return {true, false};
    case 3: return {false, true};
    case 4: return {true, true};
    default: fail(ErrorCode::InvalidArgument, "design must be 1, 2, 3 or 4, got " + std::to_string(design));
  }
}

void DgpSpec::validate() const {
  if (n < 2 || T < 2) fail(ErrorCode::InvalidArgument, "spec needs n, T >= 2");
  auto check = [](bool ok, const char* what) {
    if (!ok) fail(ErrorCode::InvalidArgument, std::string("spec field ") + what + " has the wrong size");
  };
  check(pi.size() == n, "pi");
  check(beta_y.size() == n && beta_w.size() == n, "beta");
  check(theta_y.size() == n && theta_w.size() == n, "theta");
  check(mu_y.size() == T && mu_w.size() == T, "mu");
  check(L_y.rows() == n && L_y.cols() == T && L_w.rows() == n && L_w.cols() == T, "L");
  if (std::abs(noise_cov(0, 1) - noise_cov(1, 0)) > 1e-15 * (1.0 + noise_cov.cwiseAbs().maxCoeff()) ||
      noise_cov(0, 0) < 0.0 || noise_cov(1, 1) < 0.0 ||
      noise_cov(0, 0) * noise_cov(1, 1) - noise_cov(0, 1) * noise_cov(1, 0) < -1e-15) {
    fail(ErrorCode::InvalidArgument, "noise covariance must be symmetric positive semidefinite");
  }
  if (!(z_model.innovation_var >= 0.0)) fail(ErrorCode::InvalidArgument, "negative innovation variance");
}

double confounder_size_ratio(const DgpSpec& spec) {
  return spec.theta_w.norm() / spec.pi.norm() * std::sqrt(spec.h_a * spec.h_a + spec.h_b * spec.h_b);
}

DgpSpec synthetic_spec(Index n, Index T, std::uint64_t seed) {
  if (n < 10 || T < 10) fail(ErrorCode::InvalidArgument, "synthetic spec needs n, T >= 10");
  DgpSpec spec;
  spec.tau = 1.43;
  spec.n = n;
  spec.T = T;
  spec.noise_cov << 0.001, 0.0, 0.0, 0.003;
  spec.z_model = published_z_model();
  spec.h_a = 0.5;
  spec.h_b = 0.25;

  NormalStream pi_rng(derive_seed(seed, 0, kStreamPi));
  spec.pi = normal_vector(pi_rng, n, 1.0, 0.25);

  NormalStream fe_rng(derive_seed(seed, 0, kStreamFixedEffects));
  spec.beta_y = normal_vector(fe_rng, n);
  spec.beta_w = normal_vector(fe_rng, n);
  spec.mu_y = normal_vector(fe_rng, T);
  spec.mu_w = normal_vector(fe_rng, T);

  const Index rank = std::min<Index>(11, std::min(n, T) - 1);
  const double cells = static_cast<double>(n * T);
  NormalStream l_rng(derive_seed(seed, 0, kStreamL));
  spec.L_y = random_low_rank(l_rng, n, T, rank, 3.0 * std::sqrt(spec.noise_cov(0, 0) * cells));
  spec.L_w = random_low_rank(l_rng, n, T, rank, 3.0 * std::sqrt(spec.noise_cov(1, 1) * cells));

  for (std::uint64_t attempt = 0; attempt < 1000; ++attempt) {
    draw_loadings(spec, seed, attempt);
    const double ratio = confounder_size_ratio(spec);
    if (ratio >= 0.5 && ratio <= 2.0) return spec;
  }
  fail(ErrorCode::InvalidArgument, "could not draw loadings with a confounder of comparable size");
}

MaModel fit_ma2(const Vector& Z) {
  const Index T = Z.size();
  if (T < 4) fail(ErrorCode::DegenerateSeries, "MA(2) fit needs at least 4 observations");
  const Vector z = Z.array() - Z.mean();
  std::array<double, 3> g{};
  for (int h = 0; h < 3; ++h) g[static_cast<std::size_t>(h)] = z.head(T - h).dot(z.tail(T - h)) / static_cast<double>(T);
  if (!(g[0] > 0.0)) fail(ErrorCode::DegenerateSeries, "series has zero variance");

  auto residual = [&](const Eigen::Vector3d& x) {
    const double a = x(0), b = x(1), s = x(2);
    return Eigen::Vector3d((s * (1 + a * a + b * b) - g[0]) / g[0], (s * (a + a * b) - g[1]) / g[0],
                           (s * b - g[2]) / g[0]);
  };
  auto jacobian = [&](const Eigen::Vector3d& x) {
    const double a = x(0), b = x(1), s = x(2);
    Eigen::Matrix3d J;
    J << 2 * s * a, 2 * s * b, 1 + a * a + b * b,
         s * (1 + b), s * a, a + a * b,
         0.0, s, b;
    return Eigen::Matrix3d(J / g[0]);
  };
  auto invertible = [](const Eigen::Vector3d& x) {
    return std::abs(x(1)) < 1.0 && x(0) + x(1) > -1.0 && x(1) - x(0) > -1.0;
  };

  const std::array<std::array<double, 2>, 5> starts{{{0.0, 0.0}, {0.5, 0.2}, {1.0, 0.5}, {-0.5, 0.2}, {0.3, -0.3}}};
  Eigen::Vector3d best_inv, best_any;
  double cost_inv = std::numeric_limits<double>::infinity();
  double cost_any = std::numeric_limits<double>::infinity();
  for (const auto& st : starts) {
    Eigen::Vector3d x(st[0], st[1], g[0] / (1 + st[0] * st[0] + st[1] * st[1]));
    double lambda = 1e-3;
    double cost = residual(x).squaredNorm();
    for (int it = 0; it < 500 && cost > 1e-30; ++it) {
      const Eigen::Matrix3d J = jacobian(x);
      const Eigen::Vector3d F = residual(x);
      Eigen::Matrix3d A = J.transpose() * J;
      A.diagonal().array() += lambda * (1.0 + A.diagonal().array());
      const Eigen::Vector3d step = A.ldlt().solve(-J.transpose() * F);
      const Eigen::Vector3d next = x + step;
      const double next_cost = next(2) > 0.0 ? residual(next).squaredNorm() : std::numeric_limits<double>::infinity();
      if (next_cost < cost) {
        x = next;
        cost = next_cost;
        lambda = std::max(lambda * 0.3, 1e-12);
      } else {
        lambda *= 10.0;
        if (lambda > 1e12) break;
      }
    }
    if (cost < cost_any) {
      cost_any = cost;
      best_any = x;
    }
    if (invertible(x) && cost < cost_inv) {
      cost_inv = cost;
      best_inv = x;
    }
  }
  const Eigen::Vector3d& x = std::isfinite(cost_inv) && cost_inv <= cost_any + 1e-12 ? best_inv : best_any;
  return MaModel{{x(0), x(1)}, x(2)};
}

DgpSpec calibrate_from_panel(const BalancedPanel& panel, const Vector& Z, int rank, double tau,
                             std::uint64_t seed) {
  panel.validate();
  const Index n = panel.n();
  const Index T = panel.T();
  if (Z.size() != T) fail(ErrorCode::InvalidArgument, "Z length does not match panel");
  if (rank < 0 || rank >= std::min(n, T)) {
    fail(ErrorCode::RankTooLarge, "rank " + std::to_string(rank) + " must be below min(n, T) = " +
                                      std::to_string(std::min(n, T)));
  }
  Matrix Yt = panel.Y;
  Matrix Wt = panel.W;
  Yt.rowwise() -= panel.Y.colwise().mean();
  Wt.rowwise() -= panel.W.colwise().mean();

  Matrix X(T, 2);
  X.col(0).setOnes();
  X.col(1) = Z;
  const LeastSquares ls(X);
  if (!ls.full_rank()) fail(ErrorCode::CollinearDesign, "Z is constant");
  const Matrix Bw = ls.solve(Matrix(Wt.transpose()));
  const Matrix Ey = ls.row_residuals(Yt);
  const Matrix Ew = ls.row_residuals(Wt);

  DgpSpec spec;
  spec.tau = tau;
  spec.n = n;
  spec.T = T;
  spec.pi = Bw.row(1).transpose();
  spec.L_y = truncated_svd(Ey, rank);
  spec.L_w = truncated_svd(Ew, rank);
  const Matrix Ry = Ey - spec.L_y;
  const Matrix Rw = Ew - spec.L_w;
  const double cells = static_cast<double>(n * T);
  spec.noise_cov(0, 0) = Ry.squaredNorm() / cells;
  spec.noise_cov(1, 1) = Rw.squaredNorm() / cells;
  spec.noise_cov(0, 1) = spec.noise_cov(1, 0) = Ry.cwiseProduct(Rw).sum() / cells;
  spec.z_model = fit_ma2(Z);
  spec.h_a = 0.5;
  spec.h_b = 0.25;
  spec.beta_y = spec.beta_w = Vector::Zero(n);
  spec.mu_y = spec.mu_w = Vector::Zero(T);
  draw_loadings(spec, seed, 0);
  return spec;
}

SimDraw simulate_once(const DgpSpec& spec, std::uint64_t seed) {
  spec.validate();
  const Index n = spec.n;
  const Index T = spec.T;
  NormalStream z_rng(derive_seed(seed, 0, kStreamZ));
  NormalStream zt_rng(derive_seed(seed, 0, kStreamZtilde));
  NormalStream e_rng(derive_seed(seed, 0, kStreamNoise));

  SimDraw d;
  d.Z = draw_ma(spec.z_model, T, z_rng);
  const Vector Zt = draw_ma(spec.z_model, T, zt_rng);
  d.H = spec.h_a * d.Z + spec.h_b * Zt;

  const double l11 = std::sqrt(spec.noise_cov(0, 0));
  const double l21 = l11 > 0.0 ? spec.noise_cov(1, 0) / l11 : 0.0;
  const double l22 = std::sqrt(std::max(0.0, spec.noise_cov(1, 1) - l21 * l21));

  Matrix W = spec.beta_w.replicate(1, T);
  W.rowwise() += spec.mu_w.transpose();
  W += spec.pi * d.Z.transpose();
  Matrix Y = spec.beta_y.replicate(1, T);
  Y.rowwise() += spec.mu_y.transpose();
  if (spec.design.use_L) {
    W += spec.L_w;
    Y += spec.L_y;
  }
  if (spec.design.use_H) {
    W += spec.theta_w * d.H.transpose();
    Y += spec.theta_y * d.H.transpose();
  }
  for (Index t = 0; t < T; ++t) {
    for (Index i = 0; i < n; ++i) {
      const double u1 = e_rng();
      const double u2 = e_rng();
      Y(i, t) += l11 * u1;
      W(i, t) += l21 * u1 + l22 * u2;
    }
  }
  Y += spec.tau * W;

  d.panel.Y = std::move(Y);
  d.panel.W = std::move(W);
  for (Index i = 0; i < n; ++i) d.panel.unit_ids.push_back(std::to_string(i + 1));
  for (Index t = 0; t < T; ++t) d.panel.time_ids.push_back(std::to_string(t + 1));
  return d;
}

RepResult run_replication(const DgpSpec& spec, const McOptions& options, int rep) {
  RepResult r;
  try {
    DgpSpec s = spec;
    s.noise_cov *= options.noise_scale;
    const SimDraw draw = simulate_once(s, derive_seed(options.seed, static_cast<std::uint64_t>(rep), 0));
    const Index T = s.T;
    const Index T0 = T / 3;
    const Matrix Psi = Matrix::Ones(T, 1);
    const ExposureFit fit = construct_exposures(draw.panel, draw.Z, Psi, T0, 1);
    const double n = static_cast<double>(s.n);

    EstimateConfig cfg;
    cfg.t0 = T0;
    EstimateResult est = estimate(draw.panel, fit.D, draw.Z, Psi, cfg);
    if (est.weak_first_stage) fail(ErrorCode::DegenerateInstrument, "weak first stage in our estimator");
    r.pi_ours = est.pi;
    r.delta_ours = est.delta;
    r.tau_ours = est.tau;
    r.target_pi_ours = est.weights.omega.dot(s.pi) / n;

    const TslsResult ts = tsls_estimate(draw.panel, fit.D, draw.Z);
    if (ts.weak_first_stage) fail(ErrorCode::DegenerateInstrument, "weak first stage in TSLS");
    r.pi_tsls = ts.pi_fe;
    r.delta_tsls = ts.delta_fe;
    r.tau_tsls = ts.tau;
    r.target_pi_tsls = tsls_weights(fit.D).dot(s.pi) / n;

    if (options.run_tests) {
      attach_variance(est, draw.panel, draw.Z, Psi);
      r.reject = ar_test(est.delta, est.pi, *est.sigma_hat, options.tau0, options.alpha).reject;
    }
    r.ok = true;
  } catch (const Error& e) {
    r.ok = false;
    r.error = e.what();
  }
  return r;
}

std::vector<RepResult> simulate_replications(const DgpSpec& spec, const McOptions& options) {
  if (options.reps < 1) fail(ErrorCode::InvalidArgument, "reps must be >= 1");
  std::vector<RepResult> out(static_cast<std::size_t>(options.reps));
  const int nt = options.threads > 0 ? options.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(nt)
  for (int rep = 0; rep < options.reps; ++rep) {
    out[static_cast<std::size_t>(rep)] = run_replication(spec, options, rep);
  }
  return out;
}

McReport summarize(const std::vector<RepResult>& results, const DgpSpec& spec, const McOptions& options) {
  McReport rep;
  rep.reps = static_cast<int>(results.size());
  rep.seed = options.seed;
  Moments pi_o, de_o, ta_o, pi_t, de_t, ta_t;
  CompensatedSum rejections;
  int ok = 0;
  for (const auto& r : results) {
    if (!r.ok) {
      ++rep.failures;
      rep.failure_messages.push_back(r.error);
      continue;
    }
    ++ok;
    pi_o.add(r.pi_ours - r.target_pi_ours);
    de_o.add(r.delta_ours - spec.tau * r.target_pi_ours);
    ta_o.add(r.tau_ours - spec.tau);
    pi_t.add(r.pi_tsls - r.target_pi_tsls);
    de_t.add(r.delta_tsls - spec.tau * r.target_pi_tsls);
    ta_t.add(r.tau_tsls - spec.tau);
    rejections.add(r.reject ? 1.0 : 0.0);
    if (options.keep_errors) {
      rep.tau_errors_ours.push_back(r.tau_ours - spec.tau);
      rep.tau_errors_tsls.push_back(r.tau_tsls - spec.tau);
    }
  }
  if (rep.failures > 0 && 100 * rep.failures >= rep.reps) {
    fail(ErrorCode::MonteCarloUnstable, std::to_string(rep.failures) + " of " + std::to_string(rep.reps) +
                                            " replications failed; first: " + rep.failure_messages.front());
  }
  const double count = static_cast<double>(ok);
  rep.ours = EstimatorStats{pi_o.stats(count), de_o.stats(count), ta_o.stats(count)};
  rep.tsls = EstimatorStats{pi_t.stats(count), de_t.stats(count), ta_t.stats(count)};
  if (options.run_tests) rep.rejection_rate = rejections.value() / count;
  return rep;
}

McReport run_monte_carlo(const DgpSpec& spec, int design, const McOptions& options) {
  DgpSpec s = spec;
  s.design = design_flags(design);
  McReport rep = summarize(simulate_replications(s, options), s, options);
  rep.design = design;
  return rep;
}

double rejection_rates(const DgpSpec& spec, int design, const McOptions& options) {
  McOptions o = options;
  o.run_tests = true;
  return *run_monte_carlo(spec, design, o).rejection_rate;
}

}  // namespace aggshock
