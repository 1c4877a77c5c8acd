#pragma once

#include <stdexcept>
#include <string>

namespace randbin {

// Raised when an exact-enumeration or materialization guard is exceeded.
// The CLI maps this to exit code 3.
struct GuardError : std::runtime_error {
  explicit GuardError(const std::string& what) : std::runtime_error(what) {}
};

// Raised by config/JSON validation; carries the offending location.
// The CLI maps this to exit code 2.
struct SchemaError : std::runtime_error {
  SchemaError(const std::string& what, std::string where_arg)
      : std::runtime_error(where_arg.empty() ? what : what + " (at " + where_arg + ")"),
        where(std::move(where_arg)) {}
  std::string where;
};

}  // namespace randbin
