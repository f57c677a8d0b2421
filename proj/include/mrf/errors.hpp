#pragma once

#include <stdexcept>
#include <string>

namespace mrf {

// Error taxonomy shared across the library. Every category is still a
// std::runtime_error so callers that do not care can catch one type.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IndexError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ContractError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CapabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OracleSizeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct QueryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, long line)
      : std::runtime_error(msg + " (line " + std::to_string(line) + ")"), line(line) {}
  explicit ParseError(const std::string& msg) : std::runtime_error(msg), line(-1) {}
  long line;
};

// Thrown when a training loop produces a non-finite loss. Carries the step
// index of the last checkpoint that was still finite.
struct DivergenceError : std::runtime_error {
  DivergenceError(const std::string& msg, long last_good)
      : std::runtime_error(msg), last_good_step(last_good) {}
  long last_good_step;
};

}  // namespace mrf
