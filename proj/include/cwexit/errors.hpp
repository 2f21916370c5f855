#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cwexit {

// Argument outside the mathematical domain of a function (|m| > 1, beta <= 1 where
// a double well is required, r >= m_star, ...).
class domain_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Invalid simulation or CLI configuration.
class config_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// API misuse: empty sample, missing recorded path, degenerate regression input.
class usage_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical routine failed to reach its tolerance.
class numerical_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file (CSV row, manifest field).
class format_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File could not be opened, read or written.
class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A worker in a parallel ensemble threw. `completed()` counts trajectories that
// finished before the abort.
class ensemble_error : public std::runtime_error {
 public:
  ensemble_error(const std::string& what, std::size_t completed)
      : std::runtime_error(what), completed_(completed) {}

  std::size_t completed() const noexcept { return completed_; }

 private:
  std::size_t completed_;
};

}  // namespace cwexit
