// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include "support.hpp"

#include "aggshock/aggregate.hpp"
#include "aggshock/cli.hpp"
#include "aggshock/exposures.hpp"
#include "aggshock/inference.hpp"
#include "aggshock/sim.hpp"
#include "aggshock/tsls.hpp"
#include "aggshock/weights.hpp"

#include "json.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace aggshock;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(const char* id, const char* name, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!o.pass) ++failures;
  std::printf("[%s] %s %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double elapsed(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double max_abs(const Vector& v) { return v.cwiseAbs().maxCoeff(); }

double rel_gap(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

WeightConfig weight_config(Index T0, double zeta, bool sign = false) {
  WeightConfig c;
  c.T0 = T0;
  c.zeta = zeta;
  c.sign_constraint = sign;
  return c;
}

Outcome ac1() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 g(101);
  std::uniform_int_distribution<int> size(4, 30);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const auto in = support::random_instance(size(g), size(g), 10000 + static_cast<std::uint64_t>(k));
    const TslsResult r = tsls_estimate(in.panel, in.D, in.Z);
    worst = std::max({worst, rel_gap(r.delta_fe, r.delta_ts), rel_gap(r.pi_fe, r.pi_ts)});
  }
  const double secs = elapsed(start);
  return {worst <= 1e-8 && secs < 10.0, fmt("max relative gap %.2e", worst) + fmt(" in %.2f s", secs)};
}

Outcome ac2() {
  double worst = 0.0;
  for (std::uint64_t k = 0; k < 100; ++k) {
    const auto in = support::random_instance(14 + static_cast<Index>(k % 20), 24, 200 + k);
    const Index T0 = 8;
    const double zeta = 1e8 * default_zeta(in.panel, T0);
    const WeightSolution s = solve_weights(in.panel, in.D, in.Z, in.Psi, weight_config(T0, zeta));
    const Vector limit = tsls_weights(in.D);
    worst = std::max(worst, (s.omega - limit).norm() / limit.norm());
  }
  return {worst <= 1e-6, fmt("max relative distance %.2e", worst)};
}

Outcome ac3() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 g(303);
  std::uniform_int_distribution<int> nd(4, 12), t0d(4, 20);
  double worst_pg = 0.0, worst_stat = 0.0;
  for (std::uint64_t k = 0; k < 100; ++k) {
    const Index n = nd(g), T0 = t0d(g);
    const auto in = support::random_instance(n, T0 + 8, 300 + k, static_cast<int>(k % 2));
    const double zeta = std::exp(std::uniform_real_distribution<double>(-3.0, 1.0)(g));
    const WeightSolution s = solve_weights(in.panel, in.D, in.Z, in.Psi, weight_config(T0, zeta));
    const Matrix Q = oracle::profiled_q(in.panel, in.Z, in.Psi, T0, zeta);
    const auto [E, b] = oracle::constraints(in.D);
    const oracle::PgResult pg = oracle::projected_gradient(Q, E, b, 1e-10, 5000000);
    worst_stat = std::max(worst_stat, pg.stationarity);
    worst_pg = std::max(worst_pg, max_abs(s.omega - pg.w) / max_abs(pg.w));
  }
  double worst_enum = 0.0;
  for (std::uint64_t k = 0; k < 100; ++k) {
    const Index n = 4 + static_cast<Index>(k % 3);
    const auto in = support::random_instance(n, 14, 400 + k);
    const double zeta = 0.05 + 0.01 * static_cast<double>(k % 10);
    const WeightSolution s = solve_weights(in.panel, in.D, in.Z, in.Psi, weight_config(6, zeta, true));
    const Matrix Q = oracle::profiled_q(in.panel, in.Z, in.Psi, 6, zeta);
    const auto [E, b] = oracle::constraints(in.D);
    const Vector signs = (in.D.D.array() - in.D.D.mean()).sign().matrix();
    const Vector best = oracle::enumerate_sign(Q, E, b, signs);
    worst_enum = std::max(worst_enum, max_abs(s.omega - best) / max_abs(best));
  }
  const double secs = elapsed(start);
  const bool ok = worst_pg <= 1e-6 && worst_stat <= 1e-10 && worst_enum <= 1e-6 && secs < 60.0;
  return {ok, fmt("projected gradient gap %.2e", worst_pg) + fmt(" (oracle stationarity %.1e)", worst_stat) +
                  fmt(", enumeration gap %.2e", worst_enum) + fmt(" in %.1f s", secs)};
}

Outcome ac4() {
  double worst_eq = 0.0, worst_sign = 0.0;
  for (std::uint64_t k = 0; k < 200; ++k) {
    const Index n = 5 + static_cast<Index>(k % 40);
    const auto in = support::random_instance(n, 30, 500 + k, static_cast<int>(k % 3));
    const bool sign = k % 2 == 1;
    const double zeta = std::pow(10.0, static_cast<double>(k % 7) - 3.0);
    const WeightSolution s = solve_weights(in.panel, in.D, in.Z, in.Psi, weight_config(10, zeta, sign));
    const double nn = static_cast<double>(n);
    worst_eq = std::max({worst_eq, std::abs(s.omega.sum() / nn), std::abs(s.omega.dot(in.D.D) / nn - 1.0)});
    if (sign) {
      const double dbar = in.D.D.mean();
      for (Index i = 0; i < n; ++i) worst_sign = std::min(worst_sign, s.omega(i) * (in.D.D(i) - dbar));
    }
  }
  return {worst_eq <= 1e-10 && worst_sign >= -1e-10,
          fmt("max equality residual %.2e", worst_eq) + fmt(", min signed weight %.2e", worst_sign)};
}

Outcome ac5() {
  std::mt19937_64 g(505);
  double fe_gap = 0.0, scale_gap = 0.0;
  for (std::uint64_t k = 0; k < 50; ++k) {
    const auto in = support::random_instance(24, 30, 600 + k, static_cast<int>(k % 2));
    const EstimateResult base = estimate(in.panel, in.D, in.Z, in.Psi, {});

    BalancedPanel fx = in.panel;
    fx.Y = support::add_effects(fx.Y, support::normal_vector(24, g, 0, 5), support::normal_vector(30, g, 0, 5));
    fx.W = support::add_effects(fx.W, support::normal_vector(24, g, 0, 5), support::normal_vector(30, g, 0, 5));
    const EstimateResult f = estimate(fx, in.D, in.Z, in.Psi, {});
    fe_gap = std::max({fe_gap, rel_gap(f.delta, base.delta), rel_gap(f.pi, base.pi),
                       max_abs(f.weights.omega - base.weights.omega) / max_abs(base.weights.omega)});

    const double a = std::exp(std::normal_distribution<double>(0.0, 2.0)(g));
    const double b = -std::exp(std::normal_distribution<double>(0.0, 2.0)(g));
    BalancedPanel sc = in.panel;
    sc.Y *= a;
    sc.W *= b;
    const EstimateResult s = estimate(sc, in.D, in.Z, in.Psi, {});
    scale_gap = std::max({scale_gap, rel_gap(s.delta / a, base.delta), rel_gap(s.pi / b, base.pi),
                          rel_gap(s.tau * b / a, base.tau),
                          max_abs(s.weights.omega - base.weights.omega) / max_abs(base.weights.omega)});
  }
  return {fe_gap <= 1e-9 && scale_gap <= 1e-9,
          fmt("fixed-effect gap %.2e", fe_gap) + fmt(", scaling gap %.2e", scale_gap)};
}

Outcome ac6() {
  std::mt19937_64 g(606);
  double worst = 0.0;
  const double rhos[] = {0.0, 0.9, -0.9};
  for (std::uint64_t k = 0; k < 100; ++k) {
    const Index T = 15 + static_cast<Index>(k % 20);
    const auto in = support::random_instance(6 + static_cast<Index>(k % 15), T, 700 + k, static_cast<int>(k % 2));
    const SampleSplit split = make_split(T, T / 3, in.Psi.cols());
    const Vector omega = support::normal_vector(in.panel.n(), g);
    const double rho = k < 60 ? rhos[k % 3] : std::uniform_real_distribution<double>(-0.95, 0.95)(g);
    const VarianceEstimate v =
        estimate_variance(in.panel, omega, in.Z, in.Psi, build_lambda_post(rho, T, split.T0), split);
    const Eigen::Matrix2d o = oracle::toeplitz_variance(in.panel, omega, in.Z, in.Psi, rho, split.T0);
    worst = std::max(worst, (v.sigma - o).cwiseAbs().maxCoeff() / o.cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-10, fmt("max relative gap %.2e", worst)};
}

Outcome ac7() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 g(707);
  std::normal_distribution<double> N;
  Eigen::Matrix2d S;
  S << 0.04, 0.012, 0.012, 0.02;
  const Eigen::LLT<Eigen::Matrix2d> llt(S);
  const double tau0 = 1.43, pi = 0.8;
  const int draws = 100000;
  int rejects = 0;
  for (int k = 0; k < draws; ++k) {
    const Eigen::Vector2d e = llt.matrixL() * Eigen::Vector2d(N(g), N(g));
    if (ar_test(tau0 * pi + e(0), pi + e(1), S, tau0, 0.05).reject) ++rejects;
  }
  const double rate = static_cast<double>(rejects) / draws;
  const double secs = elapsed(start);
  return {std::abs(rate - 0.05) <= 0.005 && secs < 30.0, fmt("rejection rate %.4f", rate) + fmt(" in %.2f s", secs)};
}

Outcome ac8() {
  std::mt19937_64 g(808);
  std::normal_distribution<double> N;
  const GridSpec grid{-60.0, 60.0, 24001};
  const double step = grid.step();
  int weak = 0, mismatches = 0;
  for (int k = 0; k < 200; ++k) {
    const bool weak_case = k % 4 == 0;
    const double delta = N(g);
    const double pi = weak_case ? 0.05 * N(g) : 0.5 + std::abs(N(g));
    const double a = 0.05 * std::exp(N(g)), c = 0.05 * std::exp(N(g)), r = std::tanh(N(g));
    Eigen::Matrix2d S;
    S << a, r * std::sqrt(a * c), r * std::sqrt(a * c), c;
    const ConfidenceSet cs = confidence_set(delta, pi, S, 0.05, grid);
    const oracle::QuadraticSet q = oracle::ar_accepted_closed_form(delta, pi, S, 0.05);

    std::vector<double> want, got;
    bool below = false, above = false;
    for (const auto& [lo, hi] : q.pieces) {
      if (hi <= grid.lo || lo >= grid.hi) continue;
      if (lo <= grid.lo) below = true;
      else want.push_back(lo);
      if (hi >= grid.hi) above = true;
      else want.push_back(hi);
    }
    for (const auto& iv : cs.intervals) {
      if (!(iv.lo == grid.lo && cs.unbounded_below)) got.push_back(iv.lo);
      if (!(iv.hi == grid.hi && cs.unbounded_above)) got.push_back(iv.hi);
    }
    if (below != cs.unbounded_below || above != cs.unbounded_above) ++mismatches;
    if (below && above) ++weak;
    if (want.size() != got.size()) {
      ++mismatches;
      continue;
    }
    for (std::size_t i = 0; i < want.size(); ++i)
      if (std::abs(want[i] - got[i]) > step) ++mismatches;
  }
  return {mismatches == 0 && weak > 0,
          std::to_string(mismatches) + " mismatched triples, " + std::to_string(weak) + " unbounded on both sides"};
}

Outcome ac9() {
  DgpSpec spec = synthetic_spec(51, 39, 7);
  spec.design = design_flags(1);
  spec.noise_cov.setZero();
  const SimDraw d = simulate_once(spec, 1);
  const Matrix Psi = Matrix::Ones(39, 1);
  const ExposureFit ex = construct_exposures(d.panel, d.Z, Psi, 13, 1);
  EstimateConfig c;
  c.t0 = 13;
  c.zeta = 1.0;
  const EstimateResult r = estimate(d.panel, ex.D, d.Z, Psi, c);
  return {std::abs(r.tau - 1.43) <= 1e-8, fmt("tau %.12f", r.tau)};
}

std::string stats_line(const McReport& r) {
  std::ostringstream s;
  s.precision(4);
  s << "d" << r.design << " pi bias " << r.ours.pi.bias << "/" << r.tsls.pi.bias << ", tau rmse " << r.ours.tau.rmse
    << "/" << r.tsls.tau.rmse;
  return s.str();
}

Outcome ac10() {
  const auto start = std::chrono::steady_clock::now();
  const DgpSpec spec = synthetic_spec(51, 39, 7);
  McOptions o;
  o.reps = 200;
  o.seed = 1;
  o.run_tests = false;
  const McReport d1 = run_monte_carlo(spec, 1, o);
  const McReport d3 = run_monte_carlo(spec, 3, o);
  const McReport d4 = run_monte_carlo(spec, 4, o);
  const bool a = std::abs(d3.tsls.pi.bias) >= 5.0 * std::abs(d3.ours.pi.bias);
  const bool b = d4.ours.tau.rmse < d4.tsls.tau.rmse;
  const bool c = d1.tsls.tau.rmse <= d1.ours.tau.rmse;
  // (b) is close in this DGP; report how often it holds across other seeds.
  int b_holds = 0;
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    McOptions other = o;
    other.seed = seed;
    const McReport r = run_monte_carlo(spec, 4, other);
    if (r.ours.tau.rmse < r.tsls.tau.rmse) ++b_holds;
  }
  const double secs = elapsed(start);
  std::string detail = std::string("(a) ") + (a ? "ok" : "fails") + " (b) " + (b ? "ok" : "fails") + " (c) " +
                       (c ? "ok" : "fails") + "; ours/tsls " + stats_line(d1) + "; " + stats_line(d3) + "; " +
                       stats_line(d4) + "; (b) holds for " + std::to_string(b_holds) + " of seeds 1..8";
  return {a && b && c && secs < 600.0, detail};
}

Outcome ac11() {
  const DgpSpec spec = synthetic_spec(51, 39, 7);
  McOptions o;
  o.reps = 500;
  o.seed = 11;
  bool ok = true;
  std::ostringstream s;
  s.precision(3);
  s << "rates";
  for (int d = 1; d <= 4; ++d) {
    const double rate = rejection_rates(spec, d, o);
    ok = ok && rate <= 0.12;
    s << " d" << d << "=" << rate;
  }
  McOptions low = o;
  low.noise_scale = 0.01;
  s << "; low noise";
  for (int d = 3; d <= 4; ++d) {
    const double rate = rejection_rates(spec, d, low);
    ok = ok && std::abs(rate - 0.05) <= 0.04;
    s << " d" << d << "=" << rate;
  }
  return {ok, s.str()};
}

Outcome ac12() {
  const fs::path dir = fs::path(TEST_OUT) / "acceptance";
  fs::create_directories(dir);
  auto run = [&](const std::string& threads, const std::string& file) {
    const std::vector<std::string> args{"aggshock", "simulate", "--reps", "40", "--seed", "12", "--threads", threads,
                                        "--out", (dir / file).string()};
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    if (cli::run(static_cast<int>(argv.size()), argv.data(), out, err) != 0) throw std::runtime_error(err.str());
    std::ifstream f(dir / file);
    nlohmann::json j = nlohmann::json::parse(f);
    j.erase("timestamp");
    return j.dump(2);
  };
  const std::string one = run("1", "threads1.json");
  const std::string four = run("4", "threads4.json");
  const std::string again = run("4", "threads4b.json");
  return {one == four && four == again, one == four ? "identical reports for 1 and 4 threads" : "reports differ"};
}

}  // namespace

int main() {
  criterion("AC1", "fixed-effect and time-series coefficients agree", ac1);
  criterion("AC2", "large penalty limit", ac2);
  criterion("AC3", "weight solver against oracles", ac3);
  criterion("AC4", "constraint exactness", ac4);
  criterion("AC5", "invariance and equivariance", ac5);
  criterion("AC6", "variance against dense construction", ac6);
  criterion("AC7", "test size under the normal model", ac7);
  criterion("AC8", "confidence set against quadratic roots", ac8);
  criterion("AC9", "noiseless identification", ac9);
  criterion("AC10", "Monte Carlo orderings", ac10);
  criterion("AC11", "rejection rates", ac11);
  criterion("AC12", "thread-count determinism", ac12);
  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
