#pragma once

#include <stdexcept>
#include <string>

namespace edmloc {

/// Malformed input: wrong shapes, non-finite values, out-of-range parameters.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A Gram matrix that cannot be realized as a point set in the requested dimension.
class DegenerateGeometry : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No grid point of the distance search yields non-negative source distances.
class InfeasibleCombination : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scenario constraints could not be met within the sampling retry budget.
class InfeasibleConfig : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace edmloc
