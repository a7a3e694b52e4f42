#pragma once

#include <optional>
#include <string>
#include <vector>

#include "arcast/schemes.hpp"

namespace arcast {

struct StrouhalConfig {
  double diameter = 0.074;
  double u_inf = 1.78;
  double dt = 0.01;
};

struct StrouhalResult {
  double st = 0.0;
  double f_d = 0.0;        // dominant frequency [Hz]
  double bin_width = 0.0;  // 1 / (len * dt)
  bool flat = false;       // no meaningful non-DC peak (degenerate series)
};

/// Dominant-frequency Strouhal estimate: mean removal, Hamming window,
/// power spectrum at the series' own length (no padding), peak excluding
/// DC. Throws SeriesTooShort below 16 samples.
StrouhalResult strouhal(const std::vector<double>& series, const StrouhalConfig& cfg);

/// One time series per probe index; duplicates allowed, empty list gives an
/// empty matrix. Throws IndexOutOfRange for probes outside the fields.
std::vector<std::vector<double>> extract_probes(const std::vector<std::vector<double>>& fields,
                                                const std::vector<int>& probe_indices);

struct EvalReport {
  double aggregate_mse = 0.0;          // NaN when the rollout diverged
  std::vector<double> per_step_mse;    // NaN entries from the divergence on
  std::vector<std::vector<double>> probe_series;
  std::optional<StrouhalResult> strouhal;
  long model_evals = 0;
  double runtime_seconds = 0.0;
  std::string config_fingerprint;
  int divergence_step = -1;  // first non-finite prediction step, -1 if none
  int horizon = 0;
  std::vector<double> final_prediction;  // last finite predicted field (not serialized)

  bool diverged() const { return divergence_step >= 0; }
};

/// Recursive rollout over the test horizon. `initial_history` is
/// chronological and must hold at least N true snapshots (pass N+1 for
/// adams_euler so the startup derivative is exact); `ground_truth` is only
/// used for scoring. A non-finite prediction is recorded as the divergence
/// step — evaluation never throws for it — and later per-step MSEs are NaN
/// sentinels.
EvalReport rollout_eval(const PointForecaster& model, SchemeKind scheme,
                        const std::vector<std::vector<double>>& initial_history,
                        const std::vector<std::vector<double>>& ground_truth, double dt,
                        const std::vector<int>& probe_indices = {},
                        const std::optional<StrouhalConfig>& strouhal_cfg = std::nullopt,
                        int strouhal_probe = 0);

/// JSON document (non-finite numbers appear as nulls).
std::string eval_report_to_json(const EvalReport& report);

/// Flat CSV forms for cross-run tables.
std::string eval_report_csv_header();
std::string eval_report_csv_row(const EvalReport& report);

}  // namespace arcast
