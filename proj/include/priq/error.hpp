#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace priq {

/// Failure categories. The CLI prints the category name as the first token
/// of its single-line error report so scripts can dispatch on it.
enum class ErrorKind {
  kParse,
  kMissingFile,
  kInvalidArgument,
  kInvariant,
  kNoEligiblePairs,
  kInfeasible,
  kIo,
  kNotTrained,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse: return "parse_error";
    case ErrorKind::kMissingFile: return "missing_file";
    case ErrorKind::kInvalidArgument: return "invalid_argument";
    case ErrorKind::kInvariant: return "invariant_violation";
    case ErrorKind::kNoEligiblePairs: return "no_eligible_pairs";
    case ErrorKind::kInfeasible: return "infeasible_protocol";
    case ErrorKind::kIo: return "io_error";
    case ErrorKind::kNotTrained: return "not_trained";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace priq
