#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace root {

enum class ErrorCode {
  DuplicateId,
  EmptyField,
  UnknownId,
  DuplicateLink,
  CycleDetected,
  SelfLink,
  InvalidLink,
  UnknownLink,
  NotPending,
  PathNotFound,
  NothingMatched,
  MalformedRow,
  MissingHeader,
  SchemaMismatch,
  ParseError,
  DuplicateDocId,
  ProviderUnavailable,
  UnknownType,
  EmptySource,
  EmptyProject,
  WrongType,
  DuplicateTerm,
  UnknownFinding,
  AlreadyClosed,
  InvalidAction,
  UnknownProject,
  DuplicateProject,
  InvalidParams,
  ProjectBusy,
  UnknownJob,
  AlreadyTerminal,
  EmptyQuestion,
  Cancelled,
  Internal,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure surfaced by the engine. `code()` is stable and is what the
/// REST layer and the CLI's JSON mode report; `detail()` carries optional
/// machine-readable context such as the offending line number or id.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::string detail = {})
      : std::runtime_error(std::move(message)), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace root
