#pragma once

#include <stdexcept>
#include <string>

namespace ergo {

// Bad inputs: malformed configs, violated preconditions, out-of-domain parameters.
// The CLI maps this to exit code 2.
class validation_error : public std::runtime_error {
 public:
  explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

// Runtime numeric failures: non-finite states, violated thinning bounds,
// eigensolver breakdowns. The CLI maps this to exit code 3.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ergo
