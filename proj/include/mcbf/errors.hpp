// include/mcbf/errors.hpp

#pragma once

#include <stdexcept>
#include <string>

namespace mcbf {

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidInstance : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// The starting point handed to the SCA loop violates an SINR constraint.
struct InfeasibleStart : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An inner solver could not produce a usable iterate.
struct EngineFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Linearization point with v_i^H f_iik == 0: the convexified constraint
// reduces to gamma * sigma^2 <= 0 and has no solution.
struct DegenerateAnchor : EngineFailure {
  using EngineFailure::EngineFailure;
};

struct InfeasibleInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct BracketFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InternalError : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace mcbf
