#pragma once

#include <stdexcept>
#include <string>

namespace spegarch {

// Invalid inputs: malformed panels, weight matrices, parameter fields, config values.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure: singular systems, non-stationary dynamics, diverged iterations.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem and parse failures.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace spegarch
