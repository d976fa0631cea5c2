#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace softhgr {

enum class ErrorKind {
  invalid_input,         // non-finite or malformed numeric input
  invalid_argument,      // out-of-range parameter or shape mismatch
  invalid_distribution,  // pmf violates DiscreteJoint invariants
  singular_covariance,   // covariance cannot be inverted
  contract_violation,    // precondition on a flagged value (e.g. uncentered batch)
  insufficient_overlap,  // a modality pair has fewer than two co-present samples
  no_supervision,        // supervised term requested without labeled samples
  parse,                 // CSV / JSON syntax problem
  vocabulary,            // categorical value outside its vocabulary
  empty_dataset,
  schema,                // configuration schema violation
  io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Exception type thrown by every library operation. The kind is stable and
/// machine-readable; the message is for humans.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace softhgr
