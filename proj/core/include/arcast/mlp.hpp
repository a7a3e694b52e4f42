#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "arcast/rng.hpp"

namespace arcast {

enum class Activation { Tanh, Identity };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// Pointwise forecaster architecture: input is a length-N history vector,
/// output a single scalar. The output layer is always affine.
struct MlpSpec {
  int input_dim = 30;
  std::vector<int> hidden_dims = {32, 32, 32, 32, 32};
  int output_dim = 1;
  Activation hidden_activation = Activation::Tanh;
};

void validate(const MlpSpec& spec);

/// Weights are stored input-major, w[i*out + o], so the forward pass walks
/// contiguous rows per input feature.
struct DenseLayer {
  int in = 0;
  int out = 0;
  std::vector<double> w;
  std::vector<double> b;
};

struct ModelParams {
  MlpSpec spec;
  std::vector<DenseLayer> layers;

  std::size_t n_parameters() const;
};

/// Weights uniform in +-sqrt(6/(fan_in+fan_out)), biases zero.
ModelParams init_model(const MlpSpec& spec, Rng& rng);

/// Gradient buffers shaped like the parameters.
struct Gradients {
  std::vector<DenseLayer> layers;
  void zero();
};

Gradients make_gradients(const ModelParams& params);

/// Post-activation outputs per layer for one batch; the last entry is the
/// affine network output. Also owns the scratch the backward pass reuses.
struct ForwardCache {
  std::vector<std::vector<double>> activations;
  int batch = 0;
  std::vector<double> scratch_a;
  std::vector<double> scratch_b;
};

/// Batch is row-major batch x input_dim. Output row-major batch x output_dim.
void forward(const ModelParams& params, const double* x, int batch, double* y);

/// Checked convenience wrapper; throws ShapeMismatch on a bad batch width.
std::vector<double> forward(const ModelParams& params, const std::vector<double>& batch_rows,
                            int batch);

void forward_cached(const ModelParams& params, const double* x, int batch, ForwardCache& cache);

/// Reverse-mode gradient of sum_b upstream[b] . output[b], accumulated into
/// `grads` (callers zero between optimizer steps). `x` and `cache` must come
/// from the matching forward_cached call. If `dx` is non-null it receives
/// the gradient w.r.t. the input batch.
void backward(const ModelParams& params, const double* x, ForwardCache& cache,
              const double* upstream, Gradients& grads, double* dx = nullptr);

/// Adam with bias correction and a step-decay learning-rate schedule:
/// effective lr = base_lr * decay_factor^floor(epoch / decay_every).
struct OptimizerState {
  double base_lr = 1e-3;
  double decay_factor = 0.9;
  int decay_every = 50;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<DenseLayer> m;
  std::vector<DenseLayer> v;

  double effective_lr(int epoch) const;
};

OptimizerState make_optimizer(const ModelParams& params, double base_lr = 1e-3,
                              double decay_factor = 0.9, int decay_every = 50);

/// One Adam update. Throws NonFiniteGradient if any gradient entry is not
/// finite (the caller decides whether that aborts the run).
void adam_step(ModelParams& params, const Gradients& grads, OptimizerState& state, int epoch);

/// Flat views over every parameter array, in serialization order; used by
/// the finite-difference checks and the optimizer.
std::vector<std::pair<double*, std::size_t>> param_arrays(ModelParams& params);

/// Checkpoint file, magic "ARPM": version u32=1, input_dim u32,
/// output_dim u32, activation u32, n_hidden u32, hidden_dims u32[n_hidden],
/// then per layer w[] and b[] as f64 little-endian.
void write_model(const ModelParams& params, const std::string& path);
ModelParams read_model(const std::string& path);

}  // namespace arcast
