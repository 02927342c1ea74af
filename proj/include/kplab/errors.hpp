#pragma once

#include <stdexcept>
#include <string>

namespace kplab {

// Exit-code contract of the command line tool.
enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitBlowUp = 3, kExitConstraint = 4 };

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when a field violates a structural constraint (zero x-mean, band support).
struct ConstraintError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when a grid, window or lattice is too coarse for the requested quantity.
struct ResolutionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BlowUpError : std::runtime_error {
  BlowUpError(double t, double maxabs, const std::string& what)
      : std::runtime_error(what), time(t), max_abs(maxabs) {}
  double time;
  double max_abs;
};

// Parameter violates the band constraints of an inequality being checked.
struct ParameterError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace kplab
