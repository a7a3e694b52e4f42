#include "arcast/rollout.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>

#include "arcast/errors.hpp"

namespace arcast {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::Single: return "single";
    case Strategy::Vanilla: return "vanilla";
    case Strategy::AW1: return "aw1";
    case Strategy::AW2: return "aw2";
    case Strategy::AW3: return "aw3";
  }
  return "?";
}

Strategy strategy_from_string(const std::string& name) {
  if (name == "single") return Strategy::Single;
  if (name == "vanilla") return Strategy::Vanilla;
  if (name == "aw1") return Strategy::AW1;
  if (name == "aw2") return Strategy::AW2;
  if (name == "aw3") return Strategy::AW3;
  throw ConfigError("unknown strategy: " + name);
}

void inject_noise(std::vector<double>& history_batch, const NoiseConfig& noise, Rng& rng) {
  if (noise.std < 0.0) throw ConfigError("noise std must be >= 0");
  if (noise.std == 0.0) return;
  for (auto& v : history_batch) v += noise.std * rng.gaussian();
}

void validate_strict(const RolloutPlan& plan) {
  if (plan.M < 1) throw ConfigError("M must be >= 1");
  if ((plan.strategy == Strategy::Single) != (plan.M == 1))
    throw ConfigError("strategy 'single' is exactly the M = 1 case");
  if (plan.noise.std < 0.0) throw ConfigError("noise std must be >= 0");
}

namespace {

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

double AdaptiveWeightState::k_e() const { return 0.5 + 2.5 * stable_sigmoid(sigmoid_scale * k); }

std::vector<double> compute_weights(const RolloutPlan& plan, const std::vector<double>& per_step_mse,
                                    const AdaptiveWeightState& state) {
  const int M = static_cast<int>(per_step_mse.size());
  if (M < 1) throw ConfigError("need at least one per-step MSE");
  for (double m : per_step_mse)
    if (m < 0.0) throw ConfigError("per-step MSE must be nonnegative");

  std::vector<double> w(M, 0.0);
  switch (plan.strategy) {
    case Strategy::Single:
      w[0] = 1.0;
      return w;
    case Strategy::Vanilla:
      w[0] = plan.vanilla_first_weight;
      for (int i = 1; i < M; ++i) w[i] = plan.vanilla_rest_weight;
      return w;
    case Strategy::AW1:
    case Strategy::AW2:
    case Strategy::AW3:
      break;
  }
  if (M < 2) throw ConfigError("adaptive strategies need M >= 2");

  std::vector<int> support;
  if (plan.strategy == Strategy::AW3) {
    support = {0, M - 1};
  } else {
    support.resize(M);
    for (int i = 0; i < M; ++i) support[i] = i;
  }

  double mse_sum = 0.0, mse_max = 0.0;
  for (int i : support) {
    mse_sum += per_step_mse[i];
    mse_max = std::max(mse_max, per_step_mse[i]);
  }
  if (mse_sum == 0.0) {
    // Degenerate loss: every step error vanished, any normalized choice is
    // consistent; fall back to uniform weights over the support.
    for (int i : support) w[i] = 1.0 / support.size();
    return w;
  }

  const double exponent = plan.strategy == Strategy::AW1 ? 1.0 : state.k_e();
  std::vector<double> p(support.size());
  double p_sum = 0.0;
  for (std::size_t j = 0; j < support.size(); ++j) {
    p[j] = std::pow(per_step_mse[support[j]], exponent);
    p_sum += p[j];
  }
  if (p_sum == 0.0 || !std::isfinite(p_sum)) {
    // Powers under- or overflowed; rescaling by the max leaves the
    // normalized weights unchanged in exact arithmetic.
    p_sum = 0.0;
    for (std::size_t j = 0; j < support.size(); ++j) {
      p[j] = std::pow(per_step_mse[support[j]] / mse_max, exponent);
      p_sum += p[j];
    }
  }
  for (std::size_t j = 0; j < support.size(); ++j) w[support[j]] = p[j] / p_sum;
  return w;
}

double loss_k_gradient(const RolloutPlan& plan, const std::vector<double>& per_step_mse,
                       const AdaptiveWeightState& state) {
  if (plan.strategy != Strategy::AW2 && plan.strategy != Strategy::AW3) return 0.0;
  const std::vector<double> w = compute_weights(plan, per_step_mse, state);

  double mse_sum = 0.0;
  for (double m : per_step_mse) mse_sum += m;
  if (mse_sum == 0.0) return 0.0;  // degenerate fallback has constant weights

  // L = sum_i w_i mse_i, w_i = mse_i^{k_e} / sum_j mse_j^{k_e}:
  // dw_i/dk_e = w_i (ln mse_i - sum_j w_j ln mse_j). Zero-MSE steps carry
  // zero weight and drop out in the limit.
  double lambda = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] > 0.0 && per_step_mse[i] > 0.0) lambda += w[i] * std::log(per_step_mse[i]);
  double dLdke = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] > 0.0 && per_step_mse[i] > 0.0)
      dLdke += per_step_mse[i] * w[i] * (std::log(per_step_mse[i]) - lambda);

  const double sig = stable_sigmoid(state.sigmoid_scale * state.k);
  const double dkedk = 2.5 * state.sigmoid_scale * sig * (1.0 - sig);
  return dLdke * dkedk;
}

void write_train_log_csv(const TrainLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path);
  out << "epoch,total_loss";
  for (int i = 1; i <= log.M; ++i) out << ",w_" << i;
  out << ",k,k_e,lr,seconds\n";
  out.precision(17);
  for (const auto& e : log.epochs) {
    out << e.epoch << ',' << e.total_loss;
    for (int i = 0; i < log.M; ++i)
      out << ',' << (i < static_cast<int>(e.weights.size()) ? e.weights[i] : 0.0);
    out << ',' << e.k << ',' << e.k_e << ',' << e.lr << ',' << e.seconds << '\n';
  }
  if (!out) throw IoError("write failed for " + path);
}

namespace {

struct ScalarAdam {
  double m = 0.0;
  double v = 0.0;
  long step = 0;

  void update(double& param, double grad, const OptimizerState& like, int epoch) {
    ++step;
    m = like.beta1 * m + (1.0 - like.beta1) * grad;
    v = like.beta2 * v + (1.0 - like.beta2) * grad * grad;
    const double mhat = m / (1.0 - std::pow(like.beta1, static_cast<double>(step)));
    const double vhat = v / (1.0 - std::pow(like.beta2, static_cast<double>(step)));
    param -= like.effective_lr(epoch) * mhat / (std::sqrt(vhat) + like.eps);
  }
};

double mse_between(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s / static_cast<double>(n);
}

// Forward/backward machinery of one multi-step window; owns every scratch
// buffer so callers can reuse it across windows and epochs.
class MultiStepEngine {
 public:
  // X is the (possibly noise-perturbed) history batch, P rows of `width`
  // columns with column j = u(t - j dt); width = N + 1 when the Adams-Euler
  // startup window is available, else N.
  WindowLoss compute(const ModelParams& model, SchemeKind scheme, const Trajectory& traj,
                     const Window& window, const RolloutPlan& plan, const AdaptiveWeightState& aw,
                     const double* X, int width, int epoch_for_error, Gradients* grads,
                     const std::vector<double>* fixed_weights) {
    const int M = window.n_targets;
    const int N = model.spec.input_dim;
    const std::size_t P = traj.grid.n_points();
    const double dt = traj.temporal.snapshot_dt();
    const bool adams = scheme == SchemeKind::AdamsEuler;
    const bool have_ext = width == N + 1;
    const bool bootstrap = adams && !have_ext;
    if (scheme == SchemeKind::Central2 && N < 2)
      throw ConfigError("central2 rollouts need a history of at least 2");

    H_.resize(M);
    S_.resize(M + 1);
    D_.resize(M + 1);
    caches_.resize(M);

    H_[0].resize(P * static_cast<std::size_t>(N));
    for (std::size_t p = 0; p < P; ++p)
      std::memcpy(&H_[0][p * N], &X[p * width], N * sizeof(double));
    if (adams && have_ext) {
      H_start_.resize(P * static_cast<std::size_t>(N));
      for (std::size_t p = 0; p < P; ++p)
        std::memcpy(&H_start_[p * N], &X[p * width + 1], N * sizeof(double));
    }

    S_[0].resize(P);
    S_m1_.assign(P, 0.0);
    for (std::size_t p = 0; p < P; ++p) S_[0][p] = X[p * width];
    if (N >= 2)
      for (std::size_t p = 0; p < P; ++p) S_m1_[p] = X[p * width + 1];

    if (adams && have_ext) {
      forward_cached(model, H_start_.data(), static_cast<int>(P), cache0_);
      D_[0] = cache0_.activations.back();
    }

    WindowLoss out;
    out.per_step_mse.resize(M);
    for (int k = 1; k <= M; ++k) {
      if (k > 1) {
        H_[k - 1].resize(P * static_cast<std::size_t>(N));
        for (std::size_t p = 0; p < P; ++p) {
          H_[k - 1][p * N] = S_[k - 1][p];
          std::memcpy(&H_[k - 1][p * N + 1], &H_[k - 2][p * N], (N - 1) * sizeof(double));
        }
      }
      forward_cached(model, H_[k - 1].data(), static_cast<int>(P), caches_[k - 1]);
      D_[k] = caches_[k - 1].activations.back();

      const double* d_prev = nullptr;
      if (adams) d_prev = (k == 1) ? (bootstrap ? D_[1].data() : D_[0].data()) : D_[k - 1].data();
      const double* s_prev = (k >= 2) ? S_[k - 2].data() : S_m1_.data();
      S_[k].resize(P);
      scheme_step(scheme, S_[k - 1].data(), s_prev, D_[k].data(), d_prev, dt, S_[k].data(), P);

      const auto& truth = traj.snapshot(window.history_end + k);
      out.per_step_mse[k - 1] = mse_between(S_[k].data(), truth.data(), P);
      if (!std::isfinite(out.per_step_mse[k - 1]))
        throw NonFiniteLoss(epoch_for_error, k, max_abs(S_[k]),
                            "non-finite rollout loss at step " + std::to_string(k));
    }

    out.weights = fixed_weights ? *fixed_weights : compute_weights(plan, out.per_step_mse, aw);
    if (static_cast<int>(out.weights.size()) != M) throw ShapeMismatch("weight vector length != M");
    out.total = 0.0;
    for (int i = 0; i < M; ++i) out.total += out.weights[i] * out.per_step_mse[i];
    if (!std::isfinite(out.total))
      throw NonFiniteLoss(epoch_for_error, M, max_abs(S_[M]), "non-finite total loss");

    if (grads) backward(model, scheme, traj, window, out.weights, *grads, bootstrap, have_ext);
    return out;
  }

 private:
  // Reverse pass over the unrolled rollout; weights are detached constants.
  void backward(const ModelParams& model, SchemeKind scheme, const Trajectory& traj,
                const Window& window, const std::vector<double>& weights, Gradients& grads,
                bool bootstrap, bool have_ext) {
    const int M = window.n_targets;
    const int N = model.spec.input_dim;
    const std::size_t P = traj.grid.n_points();
    const double dt = traj.temporal.snapshot_dt();

    A_S_.resize(M + 1);
    A_D_.resize(M + 1);
    for (int k = 0; k <= M; ++k) {
      A_S_[k].assign(P, 0.0);
      A_D_[k].assign(P, 0.0);
    }
    A_Sm1_.assign(P, 0.0);
    A_H_.resize(M);
    for (int k = 0; k < M; ++k) A_H_[k].assign(P * static_cast<std::size_t>(N), 0.0);
    dx_.resize(P * static_cast<std::size_t>(N));

    // Loss terms: d(w_k mse_k)/dS_k = w_k 2/P (S_k - truth_k).
    for (int k = 1; k <= M; ++k) {
      const auto& truth = traj.snapshot(window.history_end + k);
      const double c = weights[k - 1] * 2.0 / static_cast<double>(P);
      for (std::size_t p = 0; p < P; ++p) A_S_[k][p] = c * (S_[k][p] - truth[p]);
    }

    for (int k = M; k >= 1; --k) {
      // S_k also feeds later predictions through column 0 of H_k.
      if (k < M)
        for (std::size_t p = 0; p < P; ++p) A_S_[k][p] += A_H_[k][p * N];

      switch (scheme) {
        case SchemeKind::Direct:
          for (std::size_t p = 0; p < P; ++p) A_D_[k][p] += A_S_[k][p];
          break;
        case SchemeKind::ForwardEuler:
          for (std::size_t p = 0; p < P; ++p) {
            A_S_[k - 1][p] += A_S_[k][p];
            A_D_[k][p] += dt * A_S_[k][p];
          }
          break;
        case SchemeKind::Central2: {
          auto& prev = (k >= 2) ? A_S_[k - 2] : A_Sm1_;
          for (std::size_t p = 0; p < P; ++p) {
            prev[p] += A_S_[k][p];
            A_D_[k][p] += 2.0 * dt * A_S_[k][p];
          }
          break;
        }
        case SchemeKind::AdamsEuler: {
          auto& dprev = (k == 1) ? (bootstrap ? A_D_[1] : A_D_[0]) : A_D_[k - 1];
          for (std::size_t p = 0; p < P; ++p) {
            A_S_[k - 1][p] += A_S_[k][p];
            A_D_[k][p] += 1.5 * dt * A_S_[k][p];
            dprev[p] -= 0.5 * dt * A_S_[k][p];
          }
          break;
        }
      }

      // Shift the remaining columns of H_k's adjoint into H_{k-1}'s.
      if (k < M)
        for (std::size_t p = 0; p < P; ++p)
          for (int j = 0; j + 1 < N; ++j) A_H_[k - 1][p * N + j] += A_H_[k][p * N + j + 1];

      // Model evaluation D_k = f(H_{k-1}); for k = 1 the inputs are data.
      arcast::backward(model, H_[k - 1].data(), caches_[k - 1], A_D_[k].data(), grads,
                       (k >= 2) ? dx_.data() : nullptr);
      if (k >= 2)
        for (std::size_t i = 0; i < P * static_cast<std::size_t>(N); ++i)
          A_H_[k - 1][i] += dx_[i];
    }

    // Startup evaluation D_0 = f(shifted true window): parameter gradients
    // only, the inputs are data.
    if (have_ext) arcast::backward(model, H_start_.data(), cache0_, A_D_[0].data(), grads);
  }

  std::vector<std::vector<double>> H_, S_, D_, A_H_, A_S_, A_D_;
  std::vector<double> S_m1_, A_Sm1_, H_start_, dx_;
  std::vector<ForwardCache> caches_;
  ForwardCache cache0_;
};

class Trainer {
 public:
  Trainer(ModelParams& model, OptimizerState& optimizer, SchemeKind scheme, const Trajectory& traj,
          const std::vector<Window>& windows, const RolloutPlan& plan, const TrainOptions& options,
          std::uint64_t noise_seed)
      : model_(model),
        optimizer_(optimizer),
        scheme_(scheme),
        traj_(traj),
        windows_(windows),
        plan_(plan),
        options_(options),
        rng_(noise_seed),
        grads_(make_gradients(model)) {
    aw_.k = plan.k_init;
    aw_.sigmoid_scale = plan.sigmoid_scale;
    n_points_ = traj.grid.n_points();
    N_ = model.spec.input_dim;
    dt_ = traj.temporal.snapshot_dt();
    if (plan_.M < 1) throw ConfigError("M must be >= 1");
    for (const auto& w : windows_)
      if (w.n_targets != plan_.M) throw ConfigError("windows were built for a different M");
  }

  TrainLog run() {
    TrainLog log;
    log.M = plan_.M;
    const bool single = plan_.M == 1 && plan_.strategy == Strategy::Single;
    for (int epoch = 0; epoch < options_.epochs; ++epoch) {
      const auto t0 = std::chrono::steady_clock::now();
      double loss_sum = 0.0;
      std::vector<double> weight_sum(plan_.M, 0.0);
      for (const Window& w : windows_) {
        double loss;
        std::vector<double> weights;
        if (single) {
          loss = single_step_window(w, epoch);
          weights = {1.0};
        } else {
          loss = multi_step_window(w, epoch, weights);
        }
        loss_sum += loss;
        for (int i = 0; i < plan_.M; ++i) weight_sum[i] += weights[i];
      }
      EpochLog e;
      e.epoch = epoch;
      e.total_loss = loss_sum / windows_.size();
      e.weights.resize(plan_.M);
      for (int i = 0; i < plan_.M; ++i) e.weights[i] = weight_sum[i] / windows_.size();
      e.k = aw_.k;
      e.k_e = aw_.k_e();
      e.lr = optimizer_.effective_lr(epoch);
      e.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      log.epochs.push_back(std::move(e));
    }
    return log;
  }

 private:
  // Column j = u(t - j dt); perturbed in place when noise is on.
  void assemble_history(const Window& w, int width) {
    X_.resize(n_points_ * static_cast<std::size_t>(width));
    for (int j = 0; j < width; ++j) {
      const double* snap = traj_.snapshot(w.history_end - j).data();
      double* dst = X_.data() + j;
      for (std::size_t p = 0; p < n_points_; ++p) dst[p * width] = snap[p];
    }
    inject_noise(X_, plan_.noise, rng_);
  }

  double single_step_window(const Window& w, int epoch) {
    const int N = N_;
    assemble_history(w, N);
    target_ = build_target(scheme_, traj_, w.history_end, dt_);

    forward_cached(model_, X_.data(), static_cast<int>(n_points_), cache_);
    const auto& out = cache_.activations.back();
    const double loss = mse_between(out.data(), target_.data(), n_points_);
    if (!std::isfinite(loss))
      throw NonFiniteLoss(epoch, 1, max_abs(out), "non-finite single-step loss");

    upstream_.resize(n_points_);
    const double c = 2.0 / static_cast<double>(n_points_);
    for (std::size_t p = 0; p < n_points_; ++p) upstream_[p] = c * (out[p] - target_[p]);

    grads_.zero();
    backward(model_, X_.data(), cache_, upstream_.data(), grads_);
    adam_step(model_, grads_, optimizer_, epoch);
    return loss;
  }

  double multi_step_window(const Window& w, int epoch, std::vector<double>& weights_out) {
    const int N = N_;
    // The Adams-Euler startup derivative needs u(t - N dt); the earliest
    // window has no such snapshot, so only there the first step degrades to
    // a forward-Euler bootstrap.
    const bool have_ext = scheme_ == SchemeKind::AdamsEuler && w.history_end >= N;
    const int width = have_ext ? N + 1 : N;
    assemble_history(w, width);

    grads_.zero();
    const WindowLoss wl = engine_.compute(model_, scheme_, traj_, w, plan_, aw_, X_.data(), width,
                                          epoch, &grads_, nullptr);
    adam_step(model_, grads_, optimizer_, epoch);

    if (plan_.strategy == Strategy::AW2 || plan_.strategy == Strategy::AW3) {
      const double gk = loss_k_gradient(plan_, wl.per_step_mse, aw_);
      if (!std::isfinite(gk)) throw NonFiniteGradient("non-finite gradient for k");
      k_adam_.update(aw_.k, gk, optimizer_, epoch);
    }
    weights_out = wl.weights;
    return wl.total;
  }

  ModelParams& model_;
  OptimizerState& optimizer_;
  SchemeKind scheme_;
  const Trajectory& traj_;
  const std::vector<Window>& windows_;
  RolloutPlan plan_;
  TrainOptions options_;
  Rng rng_;
  Gradients grads_;
  AdaptiveWeightState aw_;
  ScalarAdam k_adam_;
  MultiStepEngine engine_;
  ForwardCache cache_;
  std::vector<double> X_, target_, upstream_;
  std::size_t n_points_ = 0;
  int N_ = 0;
  double dt_ = 0.0;
};

}  // namespace

WindowLoss window_rollout_loss(const ModelParams& model, SchemeKind scheme, const Trajectory& traj,
                               const Window& window, const RolloutPlan& plan,
                               const AdaptiveWeightState& aw, Gradients* grads,
                               const std::vector<double>* fixed_weights) {
  const int N = model.spec.input_dim;
  const std::size_t P = traj.grid.n_points();
  if (window.history_end < N - 1 || window.history_end + window.n_targets >= traj.n_snapshots())
    throw IndexOutOfRange("window does not fit the trajectory");
  const bool have_ext = scheme == SchemeKind::AdamsEuler && window.history_end >= N;
  const int width = have_ext ? N + 1 : N;

  std::vector<double> X(P * static_cast<std::size_t>(width));
  for (int j = 0; j < width; ++j) {
    const double* snap = traj.snapshot(window.history_end - j).data();
    double* dst = X.data() + j;
    for (std::size_t p = 0; p < P; ++p) dst[p * width] = snap[p];
  }

  MultiStepEngine engine;
  if (grads) grads->zero();
  return engine.compute(model, scheme, traj, window, plan, aw, X.data(), width, 0, grads,
                        fixed_weights);
}

TrainLog train(ModelParams& model, OptimizerState& optimizer, SchemeKind scheme,
               const Trajectory& traj, const std::vector<Window>& windows, const RolloutPlan& plan,
               const TrainOptions& options, std::uint64_t noise_seed) {
  if (windows.empty()) throw InsufficientLength("no training windows");
  Trainer trainer(model, optimizer, scheme, traj, windows, plan, options, noise_seed);
  return trainer.run();
}

}  // namespace arcast
