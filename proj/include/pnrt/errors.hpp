#pragma once

#include <stdexcept>
#include <string>

namespace pnrt {

// Malformed or inconsistent input: files, configs, parameter ranges.
// The CLI maps this family to exit code 2.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// A precondition of the statistical procedure is broken (observed assignment
// outside the design's support, invalid conditioning event, ...).
// The CLI maps this family to exit code 3.
class ContractViolation : public std::runtime_error {
 public:
  explicit ContractViolation(const std::string& msg) : std::runtime_error(msg) {}
};

// The proximity source cannot answer this query (label-form sources have no
// raw distances, and only resolve thresholds on their declared grid).
class UnsupportedQuery : public ContractViolation {
 public:
  explicit UnsupportedQuery(const std::string& msg) : ContractViolation(msg) {}
};

}  // namespace pnrt
