#include "softhgr/error.hpp"

namespace softhgr {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::invalid_distribution: return "invalid-distribution";
    case ErrorKind::singular_covariance: return "singular-covariance";
    case ErrorKind::contract_violation: return "contract-violation";
    case ErrorKind::insufficient_overlap: return "insufficient-overlap";
    case ErrorKind::no_supervision: return "no-supervision";
    case ErrorKind::parse: return "parse";
    case ErrorKind::vocabulary: return "vocabulary";
    case ErrorKind::empty_dataset: return "empty-dataset";
    case ErrorKind::schema: return "schema";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace softhgr
