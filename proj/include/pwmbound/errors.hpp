#pragma once

#include <stdexcept>

namespace pwmbound {

// Configuration / input-file problems; the CLI maps these to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A required SDP solve did not reach an optimal certificate; exit code 3.
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pwmbound
