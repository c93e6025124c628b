#include "aggshock/cli.hpp"

#include "aggshock/aggregate.hpp"
#include "aggshock/exposures.hpp"
#include "aggshock/inference.hpp"
#include "aggshock/linalg.hpp"
#include "aggshock/panel.hpp"
#include "aggshock/report.hpp"
#include "aggshock/sim.hpp"
#include "aggshock/tsls.hpp"
#include "aggshock/tsmodel.hpp"
#include "aggshock/weights.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace aggshock::cli {

namespace {

struct PanelOptions {
  std::string panel;
  std::string psi_file;
  int trend_degree = 0;
  std::string t0 = "auto";
  int threads = 0;
};

struct EstimateOptions {
  PanelOptions in;
  bool d_col = false;
  bool construct = false;
  std::string zeta = "auto";
  bool sign_constraint = false;
  std::string covariates;
  double alpha = 0.05;
  std::vector<double> tau0;
  bool ci = false;
  std::string ci_grid;
  std::string out;
};

struct ExposureOptions {
  PanelOptions in;
  std::string out;
};

struct SimulateOptions {
  std::vector<int> designs{1, 2, 3, 4};
  int reps = 200;
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> dgp_seed;
  std::string calibrate;
  std::string synthetic = "51,39";
  int rank = 11;
  double noise_scale = 1.0;
  double alpha = 0.05;
  double tau0 = 1.43;
  bool skip_tests = false;
  int threads = 0;
  std::string out;
  std::string dump_errors;
};

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

long long parse_int(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::InvalidArgument, what + ": expected an integer, got '" + s + "'");
}

double parse_real(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::InvalidArgument, what + ": expected a number, got '" + s + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(item);
  return parts;
}

int resolve_threads(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("AGGSHOCK_THREADS"); env && *env) {
    const long long v = parse_int(env, "AGGSHOCK_THREADS");
    if (v < 1) fail(ErrorCode::InvalidArgument, "AGGSHOCK_THREADS must be positive");
    return static_cast<int>(v);
  }
  return 0;
}

GridSpec parse_grid(const std::string& s) {
  const auto parts = split(s, ':');
  if (parts.size() != 3) fail(ErrorCode::InvalidArgument, "--ci-grid expects lo:hi:n");
  GridSpec g;
  g.lo = parse_real(parts[0], "--ci-grid lo");
  g.hi = parse_real(parts[1], "--ci-grid hi");
  g.points = parse_int(parts[2], "--ci-grid n");
  if (!(g.lo < g.hi) || g.points < 2) fail(ErrorCode::InvalidArgument, "--ci-grid needs lo < hi and n >= 2");
  return g;
}

void write_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::InvalidArgument, "cannot write '" + path + "'");
  f << content;
}

struct Inputs {
  PanelData data;
  Matrix Psi;
  Index t0 = 0;
};

Inputs load_inputs(const PanelOptions& o) {
  Inputs in;
  in.data = load_panel_file(o.panel);
  const BalancedPanel& panel = in.data.panel;
  const Matrix& psi = in.data.aggregates.Psi;
  Matrix extra = psi.rightCols(psi.cols() - 1);
  if (!o.psi_file.empty()) {
    extra = hcat(extra, read_keyed_table_file(o.psi_file, "time").aligned(panel.time_ids));
  }
  if (o.trend_degree < 0) fail(ErrorCode::InvalidArgument, "--trend-degree must be non-negative");
  PsiSpec ps;
  ps.trend_degree = o.trend_degree;
  if (extra.cols() > 0) ps.extra = extra;
  in.Psi = build_psi(panel.T(), ps);
  in.t0 = o.t0 == "auto" ? default_t0(panel.T()) : parse_int(o.t0, "--t0");
  return in;
}

struct Exposures {
  ExposureVector D;
  std::string source;
};

Exposures pick_exposures(const Inputs& in, bool d_col, bool construct, int threads) {
  if (d_col && construct) fail(ErrorCode::InvalidArgument, "--d-col and --construct-exposures are exclusive");
  if (d_col && !in.data.exposures) fail(ErrorCode::MalformedInput, "--d-col given but the panel has no d column");
  if (!construct && in.data.exposures) return {*in.data.exposures, "d_column"};
  return {construct_exposures(in.data.panel, in.data.aggregates.Z, in.Psi, in.t0, threads).D, "constructed"};
}

EstimateConfig estimate_config(const EstimateOptions& o, const Inputs& in) {
  EstimateConfig c;
  c.t0 = in.t0;
  if (o.zeta != "auto") {
    c.zeta = parse_real(o.zeta, "--zeta");
    if (!(*c.zeta > 0.0)) fail(ErrorCode::InvalidArgument, "--zeta must be positive");
  }
  c.sign_constraint = o.sign_constraint;
  if (!o.covariates.empty()) {
    c.covariate_constraints = read_keyed_table_file(o.covariates, "unit").aligned(in.data.panel.unit_ids);
  }
  return c;
}

Json panel_json(const Inputs& in, const std::string& exposure_source) {
  return Json{{"n", in.data.panel.n()},
              {"T", in.data.panel.T()},
              {"p", in.Psi.cols()},
              {"exposures", exposure_source},
              {"unit_ids", in.data.panel.unit_ids},
              {"time_ids", in.data.panel.time_ids}};
}

// Everything that determines the numbers; thread counts and output paths
// are left out so reports compare equal across them.
Json panel_config(const PanelOptions& o) {
  return Json{{"panel", o.panel}, {"psi_file", o.psi_file}, {"trend_degree", o.trend_degree}, {"t0", o.t0}};
}

Json estimate_config_json(const EstimateOptions& o, const Inputs& in, const EstimateResult& r) {
  Json c = panel_config(o.in);
  c["t0_resolved"] = in.t0;
  c["exposures"] = o.d_col ? "d_col" : (o.construct ? "construct" : "auto");
  c["zeta"] = o.zeta;
  c["zeta_resolved"] = r.zeta;
  c["sign_constraint"] = o.sign_constraint;
  c["balance_covariates"] = o.covariates;
  c["alpha"] = o.alpha;
  c["tau0"] = o.tau0;
  c["ci"] = o.ci || !o.ci_grid.empty();
  c["ci_grid"] = o.ci_grid;
  return c;
}

void warn_flags(const EstimateResult& r, std::ostream& err) {
  if (r.weak_first_stage) err << "warning: WeakFirstStage: first-stage coefficient is numerically zero\n";
  if (r.weights.zeta_inflated) err << "warning: ZetaInflated: zeta raised to " << r.zeta << " after a singular solve\n";
}

std::string weights_csv(const BalancedPanel& panel, const Vector& omega) {
  std::ostringstream s;
  s << "unit,omega\n";
  for (Index i = 0; i < panel.n(); ++i) s << panel.unit_ids[static_cast<std::size_t>(i)] << ',' << format_double(omega(i)) << '\n';
  return s.str();
}

std::string balance_csv(const BalancedPanel& panel, const WeightSolution& w) {
  std::ostringstream s;
  s << "time,residual_y,residual_w,benchmark_y,benchmark_w\n";
  for (Index t = 0; t < w.balance_y.size(); ++t) {
    s << panel.time_ids[static_cast<std::size_t>(t)] << ',' << format_double(w.balance_y(t)) << ','
      << format_double(w.balance_w(t)) << ',' << format_double(w.bench_balance_y(t)) << ','
      << format_double(w.bench_balance_w(t)) << '\n';
  }
  return s.str();
}

std::string aggregates_csv(const BalancedPanel& panel, const Vector& Z, const Vector& omega, Index t0) {
  const AggregateSeries a = aggregate_series(panel, omega);
  std::ostringstream s;
  s << "time,post,y,w,z\n";
  for (Index t = 0; t < panel.T(); ++t) {
    s << panel.time_ids[static_cast<std::size_t>(t)] << ',' << (t >= t0 ? 1 : 0) << ',' << format_double(a.Y(t)) << ','
      << format_double(a.W(t)) << ',' << format_double(Z(t)) << '\n';
  }
  return s.str();
}

int cmd_estimate(const EstimateOptions& o, std::ostream& out, std::ostream& err) {
  const int threads = resolve_threads(o.in.threads);
  const Inputs in = load_inputs(o.in);
  if (!(o.alpha > 0.0 && o.alpha < 1.0)) fail(ErrorCode::InvalidArgument, "--alpha must lie in (0, 1)");
  const std::optional<GridSpec> grid = o.ci_grid.empty() ? std::nullopt : std::optional<GridSpec>(parse_grid(o.ci_grid));
  const Exposures ex = pick_exposures(in, o.d_col, o.construct, threads);
  const BalancedPanel& panel = in.data.panel;
  const Vector& Z = in.data.aggregates.Z;

  const EstimateResult r = estimate(panel, ex.D, Z, in.Psi, estimate_config(o, in));
  warn_flags(r, err);
  const SampleSplit split = make_split(panel.T(), r.t0, in.Psi.cols());
  const VarianceEstimate v = estimate_variance(panel, r.weights.omega, Z, in.Psi, split);

  Json inference{{"sigma", to_json(v.sigma)}, {"rho_hat", v.rho_hat}};
  Json tests = Json::array();
  for (double tau0 : o.tau0) tests.push_back(to_json(ar_test(r.delta, r.pi, v.sigma, tau0, o.alpha)));
  inference["tests"] = tests;
  if (o.ci || grid) {
    const GridSpec g = grid ? *grid : default_grid(r.delta, r.pi, v.sigma);
    inference["confidence_set"] = to_json(confidence_set(r.delta, r.pi, v.sigma, o.alpha, g, threads));
  } else {
    inference["confidence_set"] = nullptr;
  }

  Json report{{"command", "estimate"}, {"timestamp", timestamp()}, {"config", estimate_config_json(o, in, r)}};
  report["panel"] = panel_json(in, ex.source);
  report["estimate"] = to_json(r);
  report["inference"] = inference;
  report["tsls"] = to_json(tsls_estimate(panel, ex.D, Z));

  const std::filesystem::path dir(o.out);
  std::filesystem::create_directories(dir);
  write_file((dir / "estimate.json").string(), report.dump(2) + "\n");
  write_file((dir / "weights.csv").string(), weights_csv(panel, r.weights.omega));
  write_file((dir / "balance.csv").string(), balance_csv(panel, r.weights));
  write_file((dir / "aggregates.csv").string(), aggregates_csv(panel, Z, r.weights.omega, r.t0));
  out << "delta " << format_double(r.delta) << "\npi " << format_double(r.pi) << "\ntau "
      << (std::isfinite(r.tau) ? format_double(r.tau) : "nan") << '\n';
  return 0;
}

int cmd_exposures(const ExposureOptions& o, std::ostream& out) {
  const int threads = resolve_threads(o.in.threads);
  const Inputs in = load_inputs(o.in);
  const ExposureFit fit = construct_exposures(in.data.panel, in.data.aggregates.Z, in.Psi, in.t0, threads);
  std::ostringstream s;
  s << "unit,d,se,r2\n";
  for (Index i = 0; i < fit.D.n(); ++i) {
    s << in.data.panel.unit_ids[static_cast<std::size_t>(i)] << ',' << format_double(fit.D.D(i)) << ','
      << format_double(fit.se(i)) << ',' << format_double(fit.r2(i)) << '\n';
  }
  if (o.out.empty()) out << s.str();
  else write_file(o.out, s.str());
  return 0;
}

int cmd_diagnose(const EstimateOptions& o, std::ostream& out, std::ostream& err) {
  const int threads = resolve_threads(o.in.threads);
  const Inputs in = load_inputs(o.in);
  const Exposures ex = pick_exposures(in, o.d_col, o.construct, threads);
  const BalancedPanel& panel = in.data.panel;
  const Vector& Z = in.data.aggregates.Z;

  const EstimateResult r = estimate(panel, ex.D, Z, in.Psi, estimate_config(o, in));
  warn_flags(r, err);
  const SampleSplit split = make_split(panel.T(), r.t0, in.Psi.cols());
  const VarianceEstimate v = estimate_variance(panel, r.weights.omega, Z, in.Psi, split);
  const TslsResult tsls = tsls_estimate(panel, ex.D, Z);

  Matrix pre(split.T0, in.Psi.cols() + 1);
  pre << in.Psi.topRows(split.T0), Z.head(split.T0);
  Matrix post(split.T1, in.Psi.cols() + 1);
  post << in.Psi.bottomRows(split.T1), Z.tail(split.T1);

  Json report{{"command", "diagnose"}, {"timestamp", timestamp()}, {"config", estimate_config_json(o, in, r)}};
  report["panel"] = panel_json(in, ex.source);
  report["tsls_equivalence"] = to_json(tsls);
  report["t0"] = r.t0;
  report["zeta"] = r.zeta;
  report["zeta_auto"] = default_zeta(panel, r.t0);
  report["zeta_source"] = o.zeta == "auto" ? "auto" : "user";
  report["balance"] = to_json(balance_diagnostics(r.weights));
  report["rho_hat"] = v.rho_hat;
  report["sigma"] = to_json(v.sigma);
  report["condition_numbers"] = Json{{"weights_q_rcond", r.weights.q_rcond},
                                     {"psi", condition_number(in.Psi)},
                                     {"pre_design", condition_number(pre)},
                                     {"post_design", condition_number(post)}};
  const std::string text = report.dump(2) + "\n";
  if (o.out.empty()) out << text;
  else write_file(o.out, text);
  return 0;
}

std::string table_block(const McReport& r) {
  auto row = [](const char* name, const ErrorStats& s) {
    std::ostringstream l;
    l << std::left << std::setw(12) << name << std::right << std::fixed << std::setprecision(4) << std::setw(10)
      << s.rmse << std::setw(10) << s.bias << '\n';
    return l.str();
  };
  std::ostringstream s;
  s << "design " << r.design << "  reps " << r.reps << "  failures " << r.failures << '\n';
  s << std::left << std::setw(12) << "estimator" << std::right << std::setw(10) << "RMSE" << std::setw(10) << "Bias"
    << '\n';
  s << row("pi", r.ours.pi) << row("pi_tsls", r.tsls.pi) << row("delta", r.ours.delta)
    << row("delta_tsls", r.tsls.delta) << row("tau", r.ours.tau) << row("tau_tsls", r.tsls.tau);
  if (r.rejection_rate) s << "rejection rate " << std::fixed << std::setprecision(3) << *r.rejection_rate << '\n';
  return s.str();
}

int cmd_simulate(const SimulateOptions& o, std::ostream& out, std::ostream& err) {
  const int threads = resolve_threads(o.threads);
  if (o.reps < 1) fail(ErrorCode::InvalidArgument, "--reps must be positive");
  if (!(o.alpha > 0.0 && o.alpha < 1.0)) fail(ErrorCode::InvalidArgument, "--alpha must lie in (0, 1)");
  if (!(o.noise_scale >= 0.0)) fail(ErrorCode::InvalidArgument, "--noise-scale must be non-negative");
  for (int d : o.designs) design_flags(d);
  const std::uint64_t dgp_seed = o.dgp_seed ? *o.dgp_seed : o.seed;

  DgpSpec spec;
  Json dgp;
  if (!o.calibrate.empty()) {
    const PanelData data = load_panel_file(o.calibrate);
    spec = calibrate_from_panel(data.panel, data.aggregates.Z, o.rank, 1.43, dgp_seed);
    dgp = Json{{"source", "calibrated"}, {"panel", o.calibrate}, {"rank", o.rank}};
  } else {
    const auto parts = split(o.synthetic, ',');
    if (parts.size() != 2) fail(ErrorCode::InvalidArgument, "--synthetic expects n,T");
    spec = synthetic_spec(parse_int(parts[0], "--synthetic n"), parse_int(parts[1], "--synthetic T"), dgp_seed);
    dgp = Json{{"source", "synthetic"}};
  }
  dgp["n"] = spec.n;
  dgp["T"] = spec.T;
  dgp["tau"] = spec.tau;
  dgp["confounder_size_ratio"] = confounder_size_ratio(spec);

  McOptions mc;
  mc.reps = o.reps;
  mc.seed = o.seed;
  mc.noise_scale = o.noise_scale;
  mc.run_tests = !o.skip_tests;
  mc.tau0 = o.tau0;
  mc.alpha = o.alpha;
  mc.threads = threads;
  mc.keep_errors = !o.dump_errors.empty();

  Json config{{"designs", o.designs},   {"reps", o.reps},   {"seed", o.seed},
              {"dgp_seed", dgp_seed},   {"calibrate", o.calibrate}, {"synthetic", o.calibrate.empty() ? o.synthetic : ""},
              {"rank", o.rank},         {"noise_scale", o.noise_scale}, {"alpha", o.alpha},
              {"tau0", o.tau0},         {"tests", !o.skip_tests}};
  Json designs = Json::array();
  std::ostringstream dump;
  dump << "design,replication,error_ours,error_tsls\n";
  for (int d : o.designs) {
    const auto start = std::chrono::steady_clock::now();
    const McReport r = run_monte_carlo(spec, d, mc);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    err << "design " << d << ": " << r.reps << " replications in " << std::fixed << std::setprecision(1) << secs
        << " s\n";
    for (const auto& m : r.failure_messages) err << "warning: design " << d << " replication failed: " << m << '\n';
    out << table_block(r) << '\n';
    designs.push_back(to_json(r));
    for (std::size_t k = 0; k < r.tau_errors_ours.size(); ++k) {
      dump << d << ',' << k << ',' << format_double(r.tau_errors_ours[k]) << ',' << format_double(r.tau_errors_tsls[k])
           << '\n';
    }
  }

  Json report{{"command", "simulate"}, {"timestamp", timestamp()}, {"config", config}, {"dgp", dgp}, {"designs", designs}};
  if (!o.out.empty()) write_file(o.out, report.dump(2) + "\n");
  if (!o.dump_errors.empty()) write_file(o.dump_errors, dump.str());
  return 0;
}

void add_panel_flags(CLI::App* cmd, PanelOptions& o) {
  cmd->add_option("--panel", o.panel, "Long-format panel CSV (unit,time,y,w,z[,d][,psi_k])")->required();
  cmd->add_option("--psi-file", o.psi_file, "Extra aggregate regressors, CSV keyed by time");
  cmd->add_option("--trend-degree", o.trend_degree, "Polynomial time trend degree in Psi");
  cmd->add_option("--t0", o.t0, "Pre-period length, integer or auto");
  cmd->add_option("--threads", o.threads, "Worker threads (falls back to AGGSHOCK_THREADS)");
}

void add_estimate_flags(CLI::App* cmd, EstimateOptions& o) {
  add_panel_flags(cmd, o.in);
  cmd->add_flag("--d-col", o.d_col, "Use the d column as exposures");
  cmd->add_flag("--construct-exposures", o.construct, "Regress W on (Psi, Z) per unit over the pre-period");
  cmd->add_option("--zeta", o.zeta, "Ridge penalty, number or auto");
  cmd->add_flag("--sign-constraint", o.sign_constraint, "Require omega_i (D_i - mean D) >= 0");
  cmd->add_option("--balance-covariates", o.covariates, "Unit covariates to balance exactly, CSV keyed by unit");
}

void report_error(std::ostream& err, std::string_view code, const std::string& message, int exit) {
  err << "error: " << code << ": " << message << '\n';
  err << Json{{"error", code}, {"message", message}, {"exit_code", exit}}.dump() << '\n';
}

}  // namespace

int exit_code(const Error& e) { return is_data_error(e.code()) ? 2 : 3; }

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Aggregate-shock panel estimator", "aggshock"};
  app.set_config("--config", "", "TOML or INI file; options go in a section named after the subcommand");
  app.require_subcommand(1);

  EstimateOptions est;
  auto* estimate_cmd = app.add_subcommand("estimate", "Balancing-weight estimate, variance and tests");
  add_estimate_flags(estimate_cmd, est);
  estimate_cmd->add_option("--alpha", est.alpha, "Test level");
  estimate_cmd->add_option("--tau0", est.tau0, "Null value to test; repeatable");
  estimate_cmd->add_flag("--ci", est.ci, "Invert the test into a confidence set");
  estimate_cmd->add_option("--ci-grid", est.ci_grid, "Confidence-set grid lo:hi:n");
  estimate_cmd->add_option("--out", est.out, "Output directory")->required();

  ExposureOptions expo;
  auto* exposures_cmd = app.add_subcommand("exposures", "Per-unit exposure regressions");
  add_panel_flags(exposures_cmd, expo.in);
  exposures_cmd->add_option("--out", expo.out, "Output CSV (default standard output)");

  EstimateOptions diag;
  auto* diagnose_cmd = app.add_subcommand("diagnose", "Equivalence, balance and conditioning checks");
  add_estimate_flags(diagnose_cmd, diag);
  diagnose_cmd->add_option("--out", diag.out, "Output JSON (default standard output)");

  SimulateOptions sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo comparison with TSLS");
  simulate_cmd->add_option("--design", sim.designs, "Designs 1..4; repeatable");
  simulate_cmd->add_option("--reps", sim.reps, "Replications per design");
  simulate_cmd->add_option("--seed", sim.seed, "Master seed");
  simulate_cmd->add_option("--dgp-seed", sim.dgp_seed, "Seed for the drawn DGP parameters (default --seed)");
  auto* cal = simulate_cmd->add_option("--calibrate", sim.calibrate, "Calibrate the DGP to this panel");
  simulate_cmd->add_option("--synthetic", sim.synthetic, "Synthetic DGP size n,T")->excludes(cal);
  simulate_cmd->add_option("--rank", sim.rank, "Rank of the calibrated generalized fixed effects");
  simulate_cmd->add_option("--noise-scale", sim.noise_scale, "Multiplier on the noise covariance");
  simulate_cmd->add_option("--alpha", sim.alpha, "Test level");
  simulate_cmd->add_option("--tau0", sim.tau0, "Null value for the rejection rate");
  simulate_cmd->add_flag("--skip-tests", sim.skip_tests, "Do not compute variances and tests");
  simulate_cmd->add_option("--threads", sim.threads, "Worker threads (falls back to AGGSHOCK_THREADS)");
  simulate_cmd->add_option("--out", sim.out, "Report JSON path");
  simulate_cmd->add_option("--dump-errors", sim.dump_errors, "Per-replication tau errors CSV");

  // --config may follow the subcommand; move it ahead so the file is read
  // before the subcommand checks its required options.
  std::vector<std::string> args;
  std::vector<std::string> config;
  for (int k = 1; k < argc; ++k) {
    const std::string a = argv[k];
    if (a == "--config" && k + 1 < argc) {
      config = {a, argv[++k]};
    } else if (a.rfind("--config=", 0) == 0) {
      config = {a};
    } else {
      args.push_back(a);
    }
  }
  args.insert(args.begin(), config.begin(), config.end());
  std::reverse(args.begin(), args.end());

  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    report_error(err, error_name(ErrorCode::InvalidArgument), e.what(), 2);
    return 2;
  }

  try {
    if (*estimate_cmd) return cmd_estimate(est, out, err);
    if (*exposures_cmd) return cmd_exposures(expo, out);
    if (*diagnose_cmd) return cmd_diagnose(diag, out, err);
    return cmd_simulate(sim, out, err);
  } catch (const Error& e) {
    const int code = exit_code(e);
    report_error(err, error_name(e.code()), e.detail(), code);
    return code;
  } catch (const std::filesystem::filesystem_error& e) {
    report_error(err, error_name(ErrorCode::InvalidArgument), e.what(), 2);
    return 2;
  } catch (const std::exception& e) {
    report_error(err, "InternalError", e.what(), 3);
    return 3;
  }
}

}  // namespace aggshock::cli
