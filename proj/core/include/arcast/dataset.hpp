#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "arcast/grid.hpp"
#include "arcast/pde.hpp"
#include "arcast/rng.hpp"

namespace arcast {

/// One random initial condition: a sum of five sine waves
///   u0 = sum_j A_j sin(2 pi l_xj x / L + 2 pi l_yj y / L + phi_j)
/// with A_j ~ U[-0.5, 0.5], l_xj, l_yj in {1,2,3}, phi_j ~ U[0, 2pi).
struct InitialConditionSpec {
  static constexpr int n_waves = 5;
  double amplitude[n_waves];
  int l_x[n_waves];
  int l_y[n_waves];
  double phase[n_waves];
  double domain_length = 2.0;
};

/// Draw order per wave: amplitude, l_x, l_y, phase.
InitialConditionSpec sample_initial_condition_spec(Rng& rng);

Field2D evaluate_initial_condition(const InitialConditionSpec& spec, const GridSpec& grid);

/// Convenience: sample the spec and evaluate it on `grid`.
std::pair<InitialConditionSpec, Field2D> sample_initial_condition(Rng& rng, const GridSpec& grid);

/// Coefficient ranges per PDE kind:
///   advection: c_x, c_y in [0.1, 2.5]
///   heat:      nu in [2e-3, 2e-2]
///   burgers:   c_x, c_y in [0.5, 1.0], nu in [7.5e-3, 1.5e-2]
PdeParams sample_params(Rng& rng, PdeKind kind);

/// A batch of simulated trajectories sharing grid and temporal specs.
struct TrajectorySet {
  GridSpec grid;
  TemporalSpec temporal;
  std::uint64_t seed = 0;
  std::vector<PdeParams> params;          // one per sample
  std::vector<std::uint64_t> sample_seeds;  // seed ^ sample_index, recorded per sample
  std::vector<Trajectory> trajectories;

  int n_samples() const { return static_cast<int>(trajectories.size()); }
};

/// Generate `n_samples` trajectories. Sample i uses an Rng seeded with
/// seed ^ i; the spec and params drawn from it are recorded so any sample
/// can be regenerated on its own.
TrajectorySet generate_trajectory_set(PdeKind kind, int n_samples, const GridSpec& grid,
                                      const TemporalSpec& temporal, std::uint64_t seed);

struct WindowSpec {
  int history_len = 30;        // N
  double split_fraction = 0.8;
};

void validate(const WindowSpec& w, int n_snapshots);

/// Index of the first test snapshot: floor(split_fraction * n_snapshots).
int split_index(const WindowSpec& w, int n_snapshots);

/// One training window: the model input is the history ending at snapshot
/// `history_end` (inclusive), the targets are the next `n_targets`
/// snapshots. The test "window" uses the same shape: history ends at the
/// last training snapshot and the targets are every post-split snapshot.
struct Window {
  int history_end = 0;
  int n_targets = 0;
};

enum class Split { Train, Test };

/// Enumerate windows. Train: every history end h with a full history on
/// the left and all M targets before the split. Test: the single rollout
/// window over the post-split snapshots. Throws InsufficientLength when
/// nothing fits.
std::vector<Window> build_windows(int n_snapshots, const WindowSpec& w, int M, Split split);

/// Binary trajectory file, magic "ARTS". Little-endian layout:
///   magic[4], version u32=1, n_samples u32, n_snapshots u32, nx u32, ny u32,
///   t_start f64, t_end f64, then per sample:
///   pde_id u32 (0 advection, 1 heat, 2 burgers), c_x f64, c_y f64, nu f64,
///   seed u64, values f64[n_snapshots*ny*nx] in [snapshot][y][x] order.
/// The format implies the canonical [-1,1]^2 domain; writing a set on a
/// different domain is a FormatError so round trips stay lossless.
void write_trajectory_set(const TrajectorySet& set, const std::string& path);
TrajectorySet read_trajectory_set(const std::string& path);

}  // namespace arcast
