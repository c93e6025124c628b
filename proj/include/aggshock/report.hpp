#pragma once

#include "aggshock/aggregate.hpp"
#include "aggshock/inference.hpp"
#include "aggshock/sim.hpp"
#include "aggshock/tsls.hpp"
#include "aggshock/weights.hpp"

#include "json.hpp"

namespace aggshock {

using Json = nlohmann::ordered_json;

Json to_json(const Vector& v);
Json to_json(const Eigen::Matrix2d& m);
Json to_json(const TslsResult& r);
Json to_json(const StageFit& f);
Json to_json(const BalanceReport& b);
Json to_json(const EstimateResult& r);
Json to_json(const TestResult& t);
Json to_json(const ConfidenceSet& cs);
Json to_json(const ErrorStats& s);
Json to_json(const McReport& r);

}  // namespace aggshock
