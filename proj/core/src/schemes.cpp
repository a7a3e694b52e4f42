#include "arcast/schemes.hpp"

#include <cmath>

#include "arcast/errors.hpp"

namespace arcast {

std::string to_string(SchemeKind k) {
  switch (k) {
    case SchemeKind::Direct: return "direct";
    case SchemeKind::ForwardEuler: return "forward_euler";
    case SchemeKind::Central2: return "central2";
    case SchemeKind::AdamsEuler: return "adams_euler";
  }
  return "?";
}

SchemeKind scheme_from_string(const std::string& name) {
  if (name == "direct") return SchemeKind::Direct;
  if (name == "forward_euler") return SchemeKind::ForwardEuler;
  if (name == "central2") return SchemeKind::Central2;
  if (name == "adams_euler") return SchemeKind::AdamsEuler;
  throw ConfigError("unknown scheme: " + name);
}

std::vector<double> build_target(SchemeKind scheme, const Trajectory& traj, int t_index,
                                 double dt) {
  const int n = traj.n_snapshots();
  if (t_index < 0 || t_index + 1 >= n)
    throw IndexOutOfRange("build_target needs snapshot t+1 to exist");
  const auto& next = traj.snapshot(t_index + 1);
  switch (scheme) {
    case SchemeKind::Direct:
      return next;
    case SchemeKind::ForwardEuler:
    case SchemeKind::AdamsEuler: {
      const auto& cur = traj.snapshot(t_index);
      std::vector<double> target(next.size());
      const double inv = 1.0 / dt;
      for (std::size_t i = 0; i < next.size(); ++i) target[i] = (next[i] - cur[i]) * inv;
      return target;
    }
    case SchemeKind::Central2: {
      if (t_index < 1) throw IndexOutOfRange("central2 target needs snapshot t-1");
      const auto& prev = traj.snapshot(t_index - 1);
      std::vector<double> target(next.size());
      const double inv = 1.0 / (2.0 * dt);
      for (std::size_t i = 0; i < next.size(); ++i) target[i] = (next[i] - prev[i]) * inv;
      return target;
    }
  }
  throw IndexOutOfRange("unreachable");
}

void scheme_step(SchemeKind scheme, const double* s, const double* s_prev, const double* d,
                 const double* d_prev, double dt, double* out, std::size_t n) {
  switch (scheme) {
    case SchemeKind::Direct:
      for (std::size_t i = 0; i < n; ++i) out[i] = d[i];
      break;
    case SchemeKind::ForwardEuler:
      for (std::size_t i = 0; i < n; ++i) out[i] = s[i] + dt * d[i];
      break;
    case SchemeKind::Central2:
      for (std::size_t i = 0; i < n; ++i) out[i] = s_prev[i] + 2.0 * dt * d[i];
      break;
    case SchemeKind::AdamsEuler:
      for (std::size_t i = 0; i < n; ++i)
        out[i] = s[i] + dt * (1.5 * d[i] - 0.5 * d_prev[i]);
      break;
  }
}

RolloutState::RolloutState(int history_len, const std::vector<std::vector<double>>& history,
                           double dt)
    : history_len_(history_len), dt_(dt) {
  if (history_len < 1) throw UninitializedHistory("history_len must be positive");
  if (static_cast<int>(history.size()) < history_len)
    throw UninitializedHistory("need at least N seed snapshots");
  n_points_ = history.back().size();
  const int capacity = history_len + 1;
  buf_.assign(capacity, {});
  const int keep = std::min<int>(capacity, static_cast<int>(history.size()));
  // buf_[head_] is the newest entry; older entries follow cyclically.
  head_ = 0;
  stored_ = keep;
  for (int j = 0; j < keep; ++j) {
    const auto& src = history[history.size() - 1 - j];
    if (src.size() != n_points_) throw ShapeMismatch("seed snapshots differ in size");
    buf_[j] = src;
  }
}

const std::vector<double>& RolloutState::ring(int j) const {
  return buf_[(head_ + j) % buf_.size()];
}

const std::vector<double>& RolloutState::past(int j) const {
  if (j < 0 || j >= stored_) throw IndexOutOfRange("no stored state that far back");
  return ring(j);
}

void RolloutState::push(std::vector<double> state) {
  const int capacity = static_cast<int>(buf_.size());
  head_ = (head_ + capacity - 1) % capacity;
  buf_[head_] = std::move(state);
  stored_ = std::min(stored_ + 1, capacity);
}

void RolloutState::fill_history_rows(std::vector<double>& rows) const {
  const int N = history_len_;
  rows.resize(n_points_ * static_cast<std::size_t>(N));
  for (int j = 0; j < N; ++j) {
    const double* src = ring(j).data();
    double* dst = rows.data() + j;
    for (std::size_t p = 0; p < n_points_; ++p) dst[p * N] = src[p];
  }
}

void RolloutState::eval_window(const PointForecaster& model, int shift, std::vector<double>& out) {
  const int N = history_len_;
  rows_scratch_.resize(n_points_ * static_cast<std::size_t>(N));
  for (int j = 0; j < N; ++j) {
    const double* src = ring(j + shift).data();
    double* dst = rows_scratch_.data() + j;
    for (std::size_t p = 0; p < n_points_; ++p) dst[p * N] = src[p];
  }
  out.resize(n_points_);
  model.evaluate(rows_scratch_.data(), static_cast<int>(n_points_), out.data());
  ++model_evals_;
}

const std::vector<double>& RolloutState::advance(SchemeKind scheme, const PointForecaster& model) {
  if (model.history_len() != history_len_)
    throw ShapeMismatch("model history length differs from rollout state");
  const std::size_t n = n_points_;

  eval_window(model, 0, d_scratch_);

  std::vector<double> next(n);
  switch (scheme) {
    case SchemeKind::Direct:
    case SchemeKind::ForwardEuler:
      scheme_step(scheme, ring(0).data(), nullptr, d_scratch_.data(), nullptr, dt_, next.data(), n);
      break;
    case SchemeKind::Central2: {
      if (stored_ < 2) throw UninitializedHistory("central2 needs two seed snapshots");
      scheme_step(scheme, ring(0).data(), ring(1).data(), d_scratch_.data(), nullptr, dt_,
                  next.data(), n);
      break;
    }
    case SchemeKind::AdamsEuler: {
      const double* d_prev = nullptr;
      if (use_cache_ && cached_prev_derivative_) {
        d_prev = cached_prev_derivative_->data();
      } else {
        // Derivative at t - dt from the shifted window; needs the N+1-th
        // stored state.
        if (stored_ < history_len_ + 1)
          throw UninitializedHistory("adams_euler startup needs N+1 seed snapshots");
        eval_window(model, 1, d_prev_scratch_);
        d_prev = d_prev_scratch_.data();
      }
      scheme_step(scheme, ring(0).data(), nullptr, d_scratch_.data(), d_prev, dt_, next.data(), n);
      cached_prev_derivative_ = d_scratch_;
      break;
    }
  }

  push(std::move(next));
  ++steps_taken_;
  return ring(0);
}

SchemeCost scheme_cost(SchemeKind scheme, long horizon) {
  if (horizon < 2) throw ConfigError("scheme_cost expects a horizon of at least 2");
  if (scheme == SchemeKind::AdamsEuler) return {horizon + 1, 1};
  return {horizon, 1};
}

SchemeCost rk4_reference_cost(long horizon) { return {4 * horizon, 4}; }

}  // namespace arcast
