#include "mpmsim/errors.hpp"

namespace mpmsim {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NoTumourCells: return "NoTumourCells";
    case ErrorCode::BoxOutOfBounds: return "BoxOutOfBounds";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::RegionTooSmall: return "RegionTooSmall";
    case ErrorCode::NonPositiveDt: return "NonPositiveDt";
    case ErrorCode::SolverDiverged: return "SolverDiverged";
    case ErrorCode::ZeroDiagonal: return "ZeroDiagonal";
    case ErrorCode::MoreWorkersThanPlanes: return "MoreWorkersThanPlanes";
    case ErrorCode::CommTimeout: return "CommTimeout";
    case ErrorCode::CommAborted: return "CommAborted";
    case ErrorCode::NonPositiveTime: return "NonPositiveTime";
    case ErrorCode::DegenerateShell: return "DegenerateShell";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::StaleFile: return "StaleFile";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace mpmsim
