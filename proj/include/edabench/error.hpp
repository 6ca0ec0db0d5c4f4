#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace edabench {

enum class ErrorCode {
  ContractViolation,
  NotInView,
  MissingView,
  ParseError,
  DuplicateId,
  BoundsError,
  InvalidCombo,
  InvalidRecord,
  IoError,
  ImageError,
  BackendUnavailable,
  TransientFailure,
  EmptyAnswer,
  GroundingParseError,
  ValidatorParseError,
  JudgeParseError,
  ConfidenceModeError,
  RouterFailure,
  AnswerScoreUnavailable,
  Undefined,
  DimensionMismatch,
  EmptyRun,
  ConfigError,
  UnknownRun,
};

std::string_view to_string(ErrorCode code);
ErrorCode error_code_from_string(std::string_view name);

// Every domain failure in the library is an Error; the code travels into
// persisted records, so keep the names stable.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace edabench
