#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "arcast/config.hpp"
#include "arcast/metrics.hpp"
#include "arcast/rollout.hpp"
#include "arcast/schemes.hpp"

namespace arcast {

/// One sweep cell: a (scheme, strategy, M) combination trained per sample
/// and repeat.
struct Cell {
  SchemeKind scheme = SchemeKind::Direct;
  Strategy strategy = Strategy::Single;
  int M = 1;
};

/// Expansion rule for the requested axes: every scheme crosses every
/// rollout depth; depth 1 always pairs with the single-step strategy, and
/// deeper rollouts pair with each requested non-single strategy.
std::vector<Cell> expand_cells(const TrainingSection& training);

std::string cell_dir_name(const Cell& cell);

struct RunCoord {
  std::string pde;
  Cell cell;
  int sample = 0;
  int seed_index = 0;
};

std::string run_dir_name(const RunCoord& coord);

/// Persisted per run by cmd_train as run.json.
struct RunRecord {
  RunCoord coord;
  std::uint64_t seed = 0;
  bool train_failed = false;
  std::string error;
  double train_seconds = 0.0;
  double final_loss = 0.0;
};

struct EvalRunRecord {
  RunCoord coord;
  std::uint64_t seed = 0;
  bool train_failed = false;
  double train_seconds = 0.0;
  double aggregate_mse = 0.0;  // NaN for failed/diverged runs
  int divergence_step = -1;
  long model_evals = 0;
  std::optional<double> strouhal_st;
};

struct CellSummary {
  std::string pde;
  Cell cell;
  int n_runs = 0;
  int train_divergences = 0;
  int eval_divergences = 0;
  double mean_mse = 0.0;  // over runs that trained and stayed finite; NaN if none
  double std_mse = 0.0;
  double mean_train_seconds = 0.0;

  /// Per-sample mean MSE over seeds (finite runs only), indexed by sample.
  std::vector<double> sample_mean_mse;
};

struct SweepSummary {
  std::vector<CellSummary> cells;
  std::vector<EvalRunRecord> runs;
};

/// Run fn(0..n-1) on a bounded pool of `jobs` threads. Exceptions are
/// rethrown on the caller thread after the pool drains.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn);

/// Simulate the configured dataset and write `<pde>.arts` plus
/// `<pde>.manifest.json` (seeds and sampled coefficients) into out_dir.
void cmd_generate(const ExperimentConfig& config, const std::string& out_dir);

/// Train one model per (cell, sample, repeat). Per-run artifacts go to
/// runs_dir/<pde>/<cell>/<run>/: model.arpm, train_log.csv, run.json.
/// Training failures (non-finite losses) are recorded, not fatal.
void cmd_train(const ExperimentConfig& config, const std::string& data_dir,
               const std::string& runs_dir, int jobs, std::uint64_t master_seed);

/// Rollout-evaluate every trained run against the post-split snapshots.
/// Writes per-run EvalReport JSON, per-cell representative fields and train
/// logs, sweep_summary.csv (deterministic columns) and sweep_timings.csv
/// (wall-clock means) into results_dir.
SweepSummary cmd_evaluate(const ExperimentConfig& config, const std::string& runs_dir,
                          const std::string& results_dir, int jobs);

/// Render SVG/CSV artifacts from a results directory: per-cell final-field
/// heatmaps, adaptive-weight evolution curves, and per-PDE time-varying MSE
/// curves. Throws NoResults when the directory has nothing to report.
void cmd_report(const std::string& results_dir, const std::string& figs_dir);

/// The sweep_summary.csv column header (stable, documented interface).
std::string sweep_summary_csv_header();

}  // namespace arcast
