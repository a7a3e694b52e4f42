#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "arcast/dataset.hpp"
#include "arcast/metrics.hpp"
#include "arcast/mlp.hpp"
#include "arcast/pde.hpp"
#include "arcast/rollout.hpp"

namespace arcast {

struct OptimizerConfig {
  double lr = 1e-3;
  double decay_factor = 0.9;
  int decay_every = 50;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  bool operator==(const OptimizerConfig&) const = default;
};

struct DatasetSection {
  std::string pde = "advection";
  int n_samples = 10;  // desk-scale sweep default; the source study used 50
  int nx = 64;
  int ny = 64;
  double t_start = 0.0;
  double t_end = 2.0;
  int n_snapshots = 500;
  std::uint64_t seed = 42;

  bool operator==(const DatasetSection&) const = default;
};

struct ModelSection {
  std::vector<int> hidden_dims = {32, 32, 32, 32, 32};
  std::string activation = "tanh";
  OptimizerConfig optimizer;

  bool operator==(const ModelSection&) const = default;
};

struct TrainingSection {
  int epochs = 250;
  int history_len = 30;
  double split_fraction = 0.8;
  std::vector<std::string> schemes = {"direct", "forward_euler", "central2", "adams_euler"};
  std::vector<std::string> strategies = {"single"};
  std::vector<int> rollout_steps = {1};  // M values; M = 1 pairs with "single"
  double noise_std = 0.0;
  int repeats = 3;
  double k_init = 0.0;
  double sigmoid_scale = 10.0;
  double vanilla_first_weight = 1.0;
  double vanilla_rest_weight = 0.1;

  bool operator==(const TrainingSection&) const = default;
};

struct StrouhalSection {
  double diameter = 0.074;
  double u_inf = 1.78;
  double dt = 0.0;  // <= 0: use the dataset's snapshot dt

  bool operator==(const StrouhalSection&) const = default;
};

struct EvalSection {
  int horizon = 0;  // 0: every post-split snapshot
  std::vector<int> probes;
  std::optional<StrouhalSection> strouhal;

  bool operator==(const EvalSection&) const = default;
};

struct ExperimentConfig {
  int version = 1;
  DatasetSection dataset;
  ModelSection model;
  TrainingSection training;
  EvalSection eval;

  bool operator==(const ExperimentConfig&) const = default;

  GridSpec grid() const;
  TemporalSpec temporal() const;
  WindowSpec window_spec() const;
  MlpSpec mlp_spec() const;
  PdeKind pde_kind() const;
};

/// Strict parse: unknown keys are ConfigErrors so typos cannot silently
/// fall back to defaults. Serialization is canonical, so
/// parse(serialize(c)) == c and serialize is usable for fingerprints.
ExperimentConfig config_from_json(const std::string& json_text);
std::string config_to_json(const ExperimentConfig& config);

ExperimentConfig load_config(const std::string& path);
void save_config(const ExperimentConfig& config, const std::string& path);

/// Throws ConfigError when sections are inconsistent (bad names, strategy
/// and M mismatch, no training window, ...).
void validate(const ExperimentConfig& config);

/// FNV-1a over the canonical JSON form, as a hex string.
std::string config_fingerprint(const ExperimentConfig& config);

}  // namespace arcast
