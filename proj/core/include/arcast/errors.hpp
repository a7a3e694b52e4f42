#pragma once

#include <stdexcept>
#include <string>

namespace arcast {

/// Base class for every error this library raises on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeMismatch : Error {
  using Error::Error;
};

struct NonFiniteGradient : Error {
  using Error::Error;
};

/// Raised by the reference solver when an intermediate field blows up.
struct InstabilityDetected : Error {
  InstabilityDetected(long substep_, double max_abs_, const std::string& what_)
      : Error(what_), substep(substep_), max_abs(max_abs_) {}
  long substep;
  double max_abs;
};

struct FormatError : Error {
  using Error::Error;
};

struct TruncatedFile : Error {
  using Error::Error;
};

struct InsufficientLength : Error {
  using Error::Error;
};

struct IndexOutOfRange : Error {
  using Error::Error;
};

struct UninitializedHistory : Error {
  using Error::Error;
};

/// Raised by train() when a rollout loss stops being finite; carries the
/// diagnostics the sweep runner records for the cell.
struct NonFiniteLoss : Error {
  NonFiniteLoss(int epoch_, int step_, double max_abs_, const std::string& what_)
      : Error(what_), epoch(epoch_), step(step_), max_abs(max_abs_) {}
  int epoch;
  int step;
  double max_abs;
};

struct IoError : Error {
  using Error::Error;
};

struct NoResults : Error {
  using Error::Error;
};

struct SeriesTooShort : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace arcast
