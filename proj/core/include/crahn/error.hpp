#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace crahn {

enum class ErrorCode {
  SchedulingInPast,
  ConfigParse,
  ConfigInvalid,
  IoError,
  DimensionMismatch,
  EmptyDataset,
  TooFewReadings,
  NoIdleChannel,
  TraceTooShort,
  NegativeDuration,
  NotANeighbor,
  XmlMalformed,
  XmlInvalidStatus,
  PreconditionViolation,
};

std::string_view to_string(ErrorCode code);

// Process exit code for the CLI. Distinct per error family.
int exit_code_for(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace crahn
