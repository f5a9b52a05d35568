#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mlate {

enum class ErrorKind {
  InvalidArgument,
  EmptyCell,
  MonotonicityViolated,
  DegenerateCell,
  SingularSystem,
  NegativeDiscriminant,
  InvalidProbability,
  WeakFirstStage,
  DomainError,
  RankDeficient,
  StartFailure,
  NotOveridentified,
  ParseError,
  SchemaError,
  IoError,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so callers (the CLI in
// particular) can map it onto an exit status without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// True for failures that mean "the data do not identify the model" rather
// than "the input could not be read".
bool is_identification_failure(ErrorKind kind);

}  // namespace mlate
