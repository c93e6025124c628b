#include "aggshock/report.hpp"

namespace aggshock {

Json to_json(const Vector& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Json to_json(const Eigen::Matrix2d& m) {
  return Json::array({Json::array({m(0, 0), m(0, 1)}), Json::array({m(1, 0), m(1, 1)})});
}

Json to_json(const TslsResult& r) {
  return Json{{"delta_fe", r.delta_fe}, {"pi_fe", r.pi_fe},     {"delta_ts", r.delta_ts},
              {"pi_ts", r.pi_ts},       {"tau", r.tau},         {"discrepancy", r.discrepancy()},
              {"weak_first_stage", r.weak_first_stage}};
}

Json to_json(const StageFit& f) {
  return Json{{"beta", f.beta}, {"eta_psi", to_json(f.eta_psi)}, {"coef_z", f.coef_z}, {"residuals", to_json(f.residuals)}};
}

Json to_json(const BalanceReport& b) {
  return Json{{"rms_y", b.rms_y},
              {"rms_w", b.rms_w},
              {"benchmark_rms_y", b.bench_rms_y},
              {"benchmark_rms_w", b.bench_rms_w},
              {"ratio", b.ratio}};
}

Json to_json(const EstimateResult& r) {
  Json flags = Json::array();
  if (r.weak_first_stage) flags.push_back("WeakFirstStage");
  if (r.weights.zeta_inflated) flags.push_back("ZetaInflated");
  Json j{{"delta", r.delta},
         {"pi", r.pi},
         {"tau", r.tau},
         {"t0", r.t0},
         {"zeta", r.zeta},
         {"weights_ref", "weights.csv"},
         {"flags", flags}};
  j["weights"] = Json{{"objective", r.weights.objective},
                      {"eta_y", to_json(r.weights.eta_y)},
                      {"eta_w", to_json(r.weights.eta_w)},
                      {"sigma2_y", r.weights.sigma2_y},
                      {"sigma2_w", r.weights.sigma2_w},
                      {"iterations", r.weights.iterations},
                      {"active_set_size", r.weights.active_set.size()},
                      {"kkt_residual", r.weights.kkt_residual},
                      {"balance", to_json(balance_diagnostics(r.weights))}};
  j["fits"] = Json{{"y", to_json(r.fit_y)}, {"w", to_json(r.fit_w)}};
  if (r.sigma_hat) j["sigma"] = to_json(*r.sigma_hat);
  if (r.rho_hat) j["rho_hat"] = *r.rho_hat;
  return j;
}

Json to_json(const TestResult& t) {
  return Json{{"tau0", t.tau0},       {"statistic", t.statistic}, {"critical", t.critical},
              {"reject", t.reject},   {"alpha", t.alpha},         {"zero_variance", t.zero_variance}};
}

Json to_json(const ConfidenceSet& cs) {
  Json iv = Json::array();
  for (const auto& i : cs.intervals) iv.push_back(Json::array({i.lo, i.hi}));
  return Json{{"alpha", cs.alpha},
              {"intervals", iv},
              {"grid", Json{{"lo", cs.grid.lo}, {"hi", cs.grid.hi}, {"points", cs.grid.points}}},
              {"unbounded_below", cs.unbounded_below},
              {"unbounded_above", cs.unbounded_above}};
}

Json to_json(const ErrorStats& s) { return Json{{"rmse", s.rmse}, {"bias", s.bias}}; }

Json to_json(const McReport& r) {
  auto est = [](const EstimatorStats& e) {
    return Json{{"pi", to_json(e.pi)}, {"delta", to_json(e.delta)}, {"tau", to_json(e.tau)}};
  };
  Json j{{"design", r.design},
         {"reps", r.reps},
         {"seed", r.seed},
         {"failures", r.failures},
         {"ours", est(r.ours)},
         {"tsls", est(r.tsls)}};
  j["rejection_rate"] = r.rejection_rate ? Json(*r.rejection_rate) : Json(nullptr);
  return j;
}

}  // namespace aggshock
