#include "aggshock/error.hpp"

namespace aggshock {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnbalancedPanel: return "UnbalancedPanel";
    case ErrorCode::DuplicateCell: return "DuplicateCell";
    case ErrorCode::InconsistentAggregate: return "InconsistentAggregate";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::MalformedInput: return "MalformedInput";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::RankTooLarge: return "RankTooLarge";
    case ErrorCode::DegenerateScale: return "DegenerateScale";
    case ErrorCode::CollinearInstrument: return "CollinearInstrument";
    case ErrorCode::CollinearInstrumentPre: return "CollinearInstrumentPre";
    case ErrorCode::CollinearDesign: return "CollinearDesign";
    case ErrorCode::RankDeficientPsi: return "RankDeficientPsi";
    case ErrorCode::DegenerateSeries: return "DegenerateSeries";
    case ErrorCode::DegenerateInstrument: return "DegenerateInstrument";
    case ErrorCode::InfeasibleConstraints: return "InfeasibleConstraints";
    case ErrorCode::SingularKKT: return "SingularKKT";
    case ErrorCode::MaxIterations: return "MaxIterations";
    case ErrorCode::MonteCarloUnstable: return "MonteCarloUnstable";
  }
  return "Unknown";
}

bool is_data_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnbalancedPanel:
    case ErrorCode::DuplicateCell:
    case ErrorCode::InconsistentAggregate:
    case ErrorCode::NonFiniteValue:
    case ErrorCode::MalformedInput:
    case ErrorCode::InvalidArgument:
    case ErrorCode::RankTooLarge:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(error_name(code)) + ": " + detail),
      code_(code),
      detail_(detail) {}

void fail(ErrorCode code, const std::string& detail) { throw Error(code, detail); }

}  // namespace aggshock
