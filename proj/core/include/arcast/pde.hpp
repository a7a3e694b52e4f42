#pragma once

#include <string>
#include <vector>

#include "arcast/grid.hpp"

namespace arcast {

enum class PdeKind { Advection, Heat, Burgers };

std::string to_string(PdeKind kind);
PdeKind pde_kind_from_string(const std::string& name);

/// Physical coefficients for one sample. Advection ignores nu (stored 0);
/// heat ignores the velocity (stored 0).
struct PdeParams {
  PdeKind kind = PdeKind::Advection;
  double c_x = 0.0;
  double c_y = 0.0;
  double nu = 0.0;
};

struct TemporalSpec {
  double t_start = 0.0;
  double t_end = 2.0;
  int n_snapshots = 500;

  double snapshot_dt() const { return (t_end - t_start) / (n_snapshots - 1); }

  bool operator==(const TemporalSpec&) const = default;
};

void validate(const TemporalSpec& temporal);

/// One simulated sample: snapshots of u on a shared grid.
struct Trajectory {
  GridSpec grid;
  TemporalSpec temporal;
  std::vector<std::vector<double>> snapshots;  // [n_snapshots][ny*nx]

  const std::vector<double>& snapshot(int t) const { return snapshots[t]; }
  int n_snapshots() const { return static_cast<int>(snapshots.size()); }
};

/// Right-hand side du/dt of the method-of-lines system:
///   advection: -(c . grad u)
///   heat:      nu lap u
///   burgers:   -u (c . grad u) + nu lap u
Field2D rhs(const PdeParams& params, const Field2D& u);

/// Explicit stability limit used to pick the internal sub-step:
/// 0.2 * min(dx/|c|_max, dx^2/(4 nu)), with absent terms dropped.
double stable_dt(const PdeParams& params, const GridSpec& grid);

/// Integrate with classical RK4 using sub-steps of
/// snapshot_dt / ceil(snapshot_dt / stable_dt); snapshot 0 is the initial
/// condition verbatim. `substep_refinement` multiplies the sub-step count
/// (used by the self-convergence checks). Throws InstabilityDetected if a
/// sub-step produces a non-finite field.
Trajectory simulate(const PdeParams& params, const Field2D& ic, const TemporalSpec& temporal,
                    int substep_refinement = 1);

}  // namespace arcast
