#pragma once

#include <stdexcept>
#include <string>

namespace ldgraph {

/// Bad user input: malformed files, out-of-range ids, inconsistent shapes.
/// CLI maps this to exit code 2.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure: NaN loss, non-convergence. CLI maps this to exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ldgraph
