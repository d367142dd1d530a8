#pragma once

#include <stdexcept>

namespace sdbench {

/// Input document violates the network or experiment schema.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The problem instance cannot support the requested stochastic procedure
/// (e.g. no worsening move exists when calibrating the annealing schedule).
struct DegenerateProblem : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Every enumerated configuration failed the power-flow solution.
struct NoFeasibleSolution : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Exhaustive enumeration was asked to produce more configurations than
/// the caller-supplied budget allows.
struct BudgetExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace sdbench
