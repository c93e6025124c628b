#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace aggshock {

enum class ErrorCode {
  // data errors (CLI exit code 2)
  UnbalancedPanel,
  DuplicateCell,
  InconsistentAggregate,
  NonFiniteValue,
  MalformedInput,
  InvalidArgument,
  RankTooLarge,
  // numerical errors (CLI exit code 3)
  DegenerateScale,
  CollinearInstrument,
  CollinearInstrumentPre,
  CollinearDesign,
  RankDeficientPsi,
  DegenerateSeries,
  DegenerateInstrument,
  InfeasibleConstraints,
  SingularKKT,
  MaxIterations,
  MonteCarloUnstable,
};

std::string_view error_name(ErrorCode code);

// True for errors caused by the input data rather than by the numerics.
bool is_data_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& detail);

}  // namespace aggshock
