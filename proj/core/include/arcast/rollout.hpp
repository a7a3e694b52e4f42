#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "arcast/dataset.hpp"
#include "arcast/mlp.hpp"
#include "arcast/schemes.hpp"

namespace arcast {

/// Loss weighting over the M rollout steps. `Single` is plain supervised
/// regression on the scheme's target (only valid with M = 1). `Vanilla`
/// uses the fixed weights w_1 = 1, w_i>1 = 0.1. The adaptive strategies set
/// weights from the per-step MSEs: AW1 normalizes them, AW2 sharpens them
/// with a learnable exponent, AW3 keeps only the first and last steps.
enum class Strategy { Single, Vanilla, AW1, AW2, AW3 };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& name);

/// Gaussian perturbation of history inputs during training; std = 0 turns
/// it off. Targets and inference inputs are never perturbed.
struct NoiseConfig {
  double std = 0.0;
};

/// Adds iid N(0, std^2) noise in place. std = 0 is the identity and draws
/// nothing from the generator.
void inject_noise(std::vector<double>& history_batch, const NoiseConfig& noise, Rng& rng);

struct RolloutPlan {
  int M = 1;
  Strategy strategy = Strategy::Single;
  double vanilla_first_weight = 1.0;
  double vanilla_rest_weight = 0.1;
  double sigmoid_scale = 10.0;  // s in k_e = 0.5 + 2.5 sigmoid(s k)
  double k_init = 0.0;
  NoiseConfig noise;
};

/// Strict plan check used at the config boundary: strategy == Single
/// exactly when M == 1. (The trainer itself also accepts weighted plans at
/// M = 1; with weight 1 they replicate single-step training.)
void validate_strict(const RolloutPlan& plan);

/// Learnable-exponent state for AW2/AW3. k_e stays inside (0.5, 3.0) for
/// every finite k.
struct AdaptiveWeightState {
  double k = 0.0;
  double sigmoid_scale = 10.0;

  double k_e() const;
};

/// Weights for one training iteration given the per-step MSEs. For the
/// adaptive strategies the weights are nonnegative and sum to 1; if every
/// per-step MSE is zero they fall back to uniform weights over the
/// strategy's support (any normalized choice is consistent with zero loss).
std::vector<double> compute_weights(const RolloutPlan& plan, const std::vector<double>& per_step_mse,
                                    const AdaptiveWeightState& state);

/// d(sum_i w_i(k) mse_i)/dk with the per-step MSEs treated as constants.
/// Zero for strategies without a learnable parameter.
double loss_k_gradient(const RolloutPlan& plan, const std::vector<double>& per_step_mse,
                       const AdaptiveWeightState& state);

struct EpochLog {
  int epoch = 0;
  double total_loss = 0.0;          // mean over window batches
  std::vector<double> weights;       // mean weights over window batches
  double k = 0.0;
  double k_e = 0.0;
  double lr = 0.0;
  double seconds = 0.0;
};

struct TrainLog {
  int M = 1;
  std::vector<EpochLog> epochs;
};

/// CSV columns: epoch,total_loss,w_1..w_M,k,k_e,lr,seconds
void write_train_log_csv(const TrainLog& log, const std::string& path);

struct TrainOptions {
  int epochs = 250;
};

struct WindowLoss {
  double total = 0.0;
  std::vector<double> per_step_mse;
  std::vector<double> weights;
};

/// Noise-free multi-step objective of a single window, with exact
/// parameter gradients accumulated into `grads` when given. This is the
/// same engine the trainer runs per batch. `fixed_weights` overrides the
/// strategy weighting; the finite-difference checks use it to probe the
/// weight-detached objective the model gradients are defined against.
WindowLoss window_rollout_loss(const ModelParams& model, SchemeKind scheme, const Trajectory& traj,
                               const Window& window, const RolloutPlan& plan,
                               const AdaptiveWeightState& aw, Gradients* grads = nullptr,
                               const std::vector<double>* fixed_weights = nullptr);

/// Train `model` in place over the given training windows, one Adam step
/// per window batch (all grid points of a window form the batch), windows
/// visited in chronological order each epoch.
///
/// Single-step plans regress on build_target outputs. Multi-step plans
/// roll the scheme out M steps feeding predictions back exactly as
/// inference does, score each step against the ground-truth snapshots and
/// weight the per-step MSEs by the plan's strategy; gradients reach the
/// model through the weighted sum (weights detached) and reach k (AW2/AW3)
/// through the weight expressions.
///
/// Throws NonFiniteLoss with diagnostics when a rollout loss stops being
/// finite, mirroring the divergent training runs reported for these
/// methods.
TrainLog train(ModelParams& model, OptimizerState& optimizer, SchemeKind scheme,
               const Trajectory& traj, const std::vector<Window>& windows, const RolloutPlan& plan,
               const TrainOptions& options, std::uint64_t noise_seed);

}  // namespace arcast
