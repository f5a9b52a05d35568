#include "mlate/errors.hpp"

namespace mlate {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::EmptyCell: return "EmptyCell";
    case ErrorKind::MonotonicityViolated: return "MonotonicityViolated";
    case ErrorKind::DegenerateCell: return "DegenerateCell";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::NegativeDiscriminant: return "NegativeDiscriminant";
    case ErrorKind::InvalidProbability: return "InvalidProbability";
    case ErrorKind::WeakFirstStage: return "WeakFirstStage";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::StartFailure: return "StartFailure";
    case ErrorKind::NotOveridentified: return "NotOveridentified";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

bool is_identification_failure(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptyCell:
    case ErrorKind::MonotonicityViolated:
    case ErrorKind::DegenerateCell:
    case ErrorKind::SingularSystem:
    case ErrorKind::NegativeDiscriminant:
    case ErrorKind::InvalidProbability:
    case ErrorKind::WeakFirstStage:
    case ErrorKind::DomainError:
    case ErrorKind::RankDeficient:
    case ErrorKind::StartFailure:
    case ErrorKind::NotOveridentified:
      return true;
    default:
      return false;
  }
}

}  // namespace mlate
