#pragma once

#include <stdexcept>
#include <string>

namespace sme {

// Exit codes used by the CLI. Library code throws the matching exception.
enum exit_code : int {
  exit_ok = 0,
  exit_validation = 2,
  exit_capacity = 3,
  exit_numeric = 4,
};

// Bad input: malformed files, out-of-range parameters, mismatched shapes.
class validation_error : public std::runtime_error {
 public:
  explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

// Request exceeds a configured size limit (e.g. dense APSP on a huge graph).
class capacity_error : public std::runtime_error {
 public:
  explicit capacity_error(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values encountered during numerical work.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sme
