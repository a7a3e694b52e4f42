#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "arcast/mlp.hpp"
#include "arcast/pde.hpp"

namespace arcast {

/// How the forecaster's output is turned into the next state.
enum class SchemeKind { Direct, ForwardEuler, Central2, AdamsEuler };

std::string to_string(SchemeKind k);
SchemeKind scheme_from_string(const std::string& name);
inline constexpr SchemeKind kAllSchemes[] = {SchemeKind::Direct, SchemeKind::ForwardEuler,
                                             SchemeKind::Central2, SchemeKind::AdamsEuler};

/// Anything that maps batches of length-N history rows (most recent entry
/// first) to one scalar per row. Implemented by the MLP and by test stubs.
class PointForecaster {
 public:
  virtual ~PointForecaster() = default;
  virtual int history_len() const = 0;
  virtual void evaluate(const double* history_rows, int batch, double* out) const = 0;
};

class MlpForecaster final : public PointForecaster {
 public:
  explicit MlpForecaster(const ModelParams& params) : params_(&params) {}
  int history_len() const override { return params_->spec.input_dim; }
  void evaluate(const double* history_rows, int batch, double* out) const override {
    forward(*params_, history_rows, batch, out);
  }

 private:
  const ModelParams* params_;
};

/// Per-point supervised target for a history ending at snapshot `t_index`:
///   direct:        u(t+dt)
///   forward_euler, adams_euler: (u(t+dt) - u(t)) / dt
///   central2:      (u(t+dt) - u(t-dt)) / (2 dt)
/// Forward Euler and Adams-Euler share the target because both train the
/// model on forward-difference derivatives; they differ at inference.
std::vector<double> build_target(SchemeKind scheme, const Trajectory& traj, int t_index,
                                 double dt);

/// Next state from the current/previous state and derivative estimates;
/// shared by inference rollouts and the training rollout so both advance
/// identically. `s_prev` is only read by central2, `d_prev` only by
/// adams_euler.
void scheme_step(SchemeKind scheme, const double* s, const double* s_prev, const double* d,
                 const double* d_prev, double dt, double* out, std::size_t n);

/// Rolling state of one auto-regressive rollout. The model always sees the
/// N most recent states; one extra slot is retained so the Adams-Euler
/// startup can evaluate the shifted window (the derivative at t - dt) before
/// any cache exists.
class RolloutState {
 public:
  /// `history` is chronological (oldest first) with at least N rows of
  /// equal length; the most recent N+1 rows are kept. Pass N+1 rows when the
  /// scheme is adams_euler so the startup step stays exact.
  RolloutState(int history_len, const std::vector<std::vector<double>>& history, double dt);

  int history_len() const { return history_len_; }
  std::size_t n_points() const { return n_points_; }
  double dt() const { return dt_; }
  long steps_taken() const { return steps_taken_; }
  long model_evals() const { return model_evals_; }

  /// Disable to force the Eq-7-style recomputation of the previous
  /// derivative on every Adams-Euler step; results are bit-identical for a
  /// deterministic model (the cache is a pure optimization).
  void set_use_cache(bool enabled) { use_cache_ = enabled; }

  /// u(t - j dt); j = 0 is the newest state.
  const std::vector<double>& past(int j) const;

  /// Row-major batch of history rows, X[p*N + j] = u_p(t - j dt).
  void fill_history_rows(std::vector<double>& rows) const;

  /// Advance one step and return the new state.
  const std::vector<double>& advance(SchemeKind scheme, const PointForecaster& model);

 private:
  const std::vector<double>& ring(int j) const;  // j=0 newest, may reach N
  void push(std::vector<double> state);
  void eval_window(const PointForecaster& model, int shift, std::vector<double>& out);

  int history_len_ = 0;
  std::size_t n_points_ = 0;
  double dt_ = 0.0;
  long steps_taken_ = 0;
  long model_evals_ = 0;
  bool use_cache_ = true;
  int head_ = 0;
  int stored_ = 0;
  std::vector<std::vector<double>> buf_;  // capacity N+1
  std::optional<std::vector<double>> cached_prev_derivative_;
  std::vector<double> rows_scratch_;
  std::vector<double> d_scratch_;
  std::vector<double> d_prev_scratch_;
};

/// Model evaluations needed for an S-step rollout: total and steady-state
/// per step. Adams-Euler pays one warmup evaluation, then caching keeps it
/// at one per step.
struct SchemeCost {
  long total_evals = 0;
  int evals_per_step = 1;
};

SchemeCost scheme_cost(SchemeKind scheme, long horizon);

/// Documentation-only comparison row: a hypothetical RK4 wrapping would
/// need four model evaluations per step.
SchemeCost rk4_reference_cost(long horizon);

}  // namespace arcast
