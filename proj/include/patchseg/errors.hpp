// Error types shared across the toolkit.

#pragma once

#include <stdexcept>
#include <string>

namespace patchseg {

// Malformed input, violated precondition, or broken file content.
// The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

// A remote model endpoint that stays unusable after retries.
// The CLI maps this to exit code 3.
class EndpointError : public std::runtime_error {
 public:
  explicit EndpointError(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

}  // namespace patchseg
