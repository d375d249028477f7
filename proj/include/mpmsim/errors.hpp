#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mpmsim {

enum class ErrorCode {
  InvalidArgument,
  NoTumourCells,
  BoxOutOfBounds,
  DimMismatch,
  RegionTooSmall,
  NonPositiveDt,
  SolverDiverged,
  ZeroDiagonal,
  MoreWorkersThanPlanes,
  CommTimeout,
  CommAborted,
  NonPositiveTime,
  DegenerateShell,
  IoFailure,
  StaleFile,
  ConfigError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so that
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix that what() carries.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace mpmsim
