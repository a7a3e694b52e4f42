#include <cmath>

#include "arcast/errors.hpp"
#include "arcast/schemes.hpp"
#include "doctest.h"

using namespace arcast;

namespace {

// Uniform-valued trajectory on the smallest legal grid; per-point values
// are identical, so per-point expectations read like scalars.
Trajectory uniform_traj(std::initializer_list<double> levels, double t_end) {
  Trajectory traj;
  traj.grid.nx = 4;
  traj.grid.ny = 4;
  traj.temporal.t_start = 0.0;
  traj.temporal.t_end = t_end;
  traj.temporal.n_snapshots = static_cast<int>(levels.size());
  for (double v : levels) traj.snapshots.emplace_back(traj.grid.n_points(), v);
  return traj;
}

// Returns preset values per evaluate() call, in order.
class SequenceForecaster final : public PointForecaster {
 public:
  SequenceForecaster(int n, std::vector<double> outputs)
      : n_(n), outputs_(std::move(outputs)) {}
  int history_len() const override { return n_; }
  void evaluate(const double*, int batch, double* out) const override {
    const double v = outputs_[std::min(calls_++, outputs_.size() - 1)];
    for (int b = 0; b < batch; ++b) out[b] = v;
  }

 private:
  int n_;
  std::vector<double> outputs_;
  mutable std::size_t calls_ = 0;
};

class ConstantForecaster final : public PointForecaster {
 public:
  ConstantForecaster(int n, double v) : n_(n), v_(v) {}
  int history_len() const override { return n_; }
  void evaluate(const double*, int batch, double* out) const override {
    for (int b = 0; b < batch; ++b) out[b] = v_;
  }

 private:
  int n_;
  double v_;
};

// History rows hashed into the output, for cache-identity checks.
class MixingForecaster final : public PointForecaster {
 public:
  explicit MixingForecaster(int n) : n_(n) {}
  int history_len() const override { return n_; }
  void evaluate(const double* rows, int batch, double* out) const override {
    for (int b = 0; b < batch; ++b) {
      double acc = 0.1;
      for (int j = 0; j < n_; ++j) acc += std::sin(rows[b * n_ + j] * (j + 1));
      out[b] = acc;
    }
  }

 private:
  int n_;
};

std::vector<std::vector<double>> seed_history(const Trajectory& traj, int count) {
  std::vector<std::vector<double>> h;
  for (int t = 0; t < count; ++t) h.push_back(traj.snapshots[t]);
  return h;
}

}  // namespace

TEST_CASE("build_target arithmetic per scheme") {
  Trajectory traj = uniform_traj({0.8, 1.0, 1.2}, 0.008);
  const double dt = 0.004;

  SUBCASE("forward euler and adams share the forward difference") {
    const double expect = (1.2 - 1.0) / dt;
    for (SchemeKind s : {SchemeKind::ForwardEuler, SchemeKind::AdamsEuler}) {
      auto target = build_target(s, traj, 1, dt);
      for (double v : target) {
        CHECK(v == expect);
        CHECK(v == doctest::Approx(50.0).epsilon(1e-12));
      }
    }
  }
  SUBCASE("central difference skips the midpoint") {
    auto target = build_target(SchemeKind::Central2, traj, 1, dt);
    const double expect = (1.2 - 0.8) / (2.0 * dt);
    for (double v : target) {
      CHECK(v == expect);
      CHECK(v == doctest::Approx(50.0).epsilon(1e-12));
    }
  }
  SUBCASE("direct predicts the next snapshot verbatim") {
    auto target = build_target(SchemeKind::Direct, traj, 1, dt);
    CHECK(target == traj.snapshots[2]);
  }
  SUBCASE("missing neighbors raise IndexOutOfRange") {
    CHECK_THROWS_AS(build_target(SchemeKind::Direct, traj, 2, dt), IndexOutOfRange);
    CHECK_THROWS_AS(build_target(SchemeKind::Central2, traj, 0, dt), IndexOutOfRange);
  }
}

TEST_CASE("advance applies the scheme updates exactly") {
  const int N = 2;
  Trajectory traj = uniform_traj({1.0, 1.0, 1.0}, 0.2);

  SUBCASE("forward euler") {
    RolloutState state(N, seed_history(traj, 3), 0.1);
    ConstantForecaster model(N, 2.0);
    const auto& next = state.advance(SchemeKind::ForwardEuler, model);
    for (double v : next) CHECK(v == 1.2);
  }
  SUBCASE("adams-euler with distinct derivative history") {
    RolloutState state(N, seed_history(traj, 3), 0.1);
    SequenceForecaster model(N, {2.0, 0.0});  // d_t = 2, shifted-window d = 0
    const auto& next = state.advance(SchemeKind::AdamsEuler, model);
    for (double v : next) CHECK(v == doctest::Approx(1.3).epsilon(1e-15));
    CHECK(state.model_evals() == 2);
  }
  SUBCASE("adams-euler equals forward euler when derivatives agree") {
    RolloutState ae(N, seed_history(traj, 3), 0.1);
    RolloutState fe(N, seed_history(traj, 3), 0.1);
    ConstantForecaster model(N, 2.0);
    const auto a = ae.advance(SchemeKind::AdamsEuler, model);
    const auto f = fe.advance(SchemeKind::ForwardEuler, model);
    CHECK(a == f);
  }
  SUBCASE("direct passes the model output through") {
    RolloutState state(N, seed_history(traj, 3), 0.1);
    ConstantForecaster model(N, 0.42);
    const auto& next = state.advance(SchemeKind::Direct, model);
    for (double v : next) CHECK(v == 0.42);
  }
}

TEST_CASE("constant-derivative rollouts integrate linearly, adams matching euler") {
  const int N = 3;
  Trajectory traj = uniform_traj({2.0, 2.0, 2.0, 2.0}, 0.3);
  const double d = -0.7, dt = 0.05;
  ConstantForecaster model(N, d);

  RolloutState fe(N, seed_history(traj, 4), dt);
  RolloutState ae(N, seed_history(traj, 4), dt);
  for (int k = 1; k <= 12; ++k) {
    const auto f = fe.advance(SchemeKind::ForwardEuler, model);
    const auto a = ae.advance(SchemeKind::AdamsEuler, model);
    for (std::size_t p = 0; p < f.size(); ++p) {
      CHECK(f[p] == doctest::Approx(2.0 + k * dt * d).epsilon(1e-13));
      CHECK(a[p] == f[p]);
    }
  }
}

TEST_CASE("central2 with a zero model alternates between its two seeds") {
  const int N = 2;
  Trajectory traj = uniform_traj({3.0, 5.0, 5.0}, 0.2);
  RolloutState state(N, {traj.snapshots[0], traj.snapshots[1]}, 0.1);
  ConstantForecaster model(N, 0.0);
  for (int k = 1; k <= 8; ++k) {
    const auto& next = state.advance(SchemeKind::Central2, model);
    const double expect = (k % 2 == 1) ? 3.0 : 5.0;
    for (double v : next) CHECK(v == expect);
  }
}

TEST_CASE("adams-euler caching is a pure optimization") {
  const int N = 4;
  GridSpec g;
  g.nx = 4;
  g.ny = 4;
  Trajectory traj;
  traj.grid = g;
  traj.temporal = {0.0, 0.5, 6};
  for (int t = 0; t < 6; ++t) {
    std::vector<double> snap(g.n_points());
    for (std::size_t p = 0; p < snap.size(); ++p) snap[p] = std::sin(0.3 * t + 0.17 * p);
    traj.snapshots.push_back(std::move(snap));
  }

  MixingForecaster model(N);
  RolloutState cached(N, seed_history(traj, 5), 0.1);
  RolloutState uncached(N, seed_history(traj, 5), 0.1);
  uncached.set_use_cache(false);
  for (int k = 0; k < 10; ++k) {
    const auto a = cached.advance(SchemeKind::AdamsEuler, model);
    const auto b = uncached.advance(SchemeKind::AdamsEuler, model);
    CHECK(a == b);
  }
  CHECK(cached.model_evals() == 11);
  CHECK(uncached.model_evals() == 20);
}

TEST_CASE("adams-euler startup without the extra seed is rejected") {
  const int N = 3;
  Trajectory traj = uniform_traj({1.0, 1.0, 1.0}, 0.2);
  RolloutState state(N, seed_history(traj, 3), 0.1);  // exactly N seeds
  ConstantForecaster model(N, 1.0);
  CHECK_THROWS_AS(state.advance(SchemeKind::AdamsEuler, model), UninitializedHistory);
}

TEST_CASE("scheme_cost matches instrumented rollouts") {
  const int N = 3;
  Trajectory traj = uniform_traj({1.0, 1.0, 1.0, 1.0}, 0.3);
  ConstantForecaster model(N, 0.01);

  for (SchemeKind scheme : kAllSchemes) {
    for (long S : {2L, 10L, 350L}) {
      RolloutState state(N, seed_history(traj, 4), 0.1);
      for (long k = 0; k < S; ++k) state.advance(scheme, model);
      const SchemeCost cost = scheme_cost(scheme, S);
      CHECK(state.model_evals() == cost.total_evals);
      CHECK(cost.evals_per_step == 1);
    }
  }
  CHECK(scheme_cost(SchemeKind::AdamsEuler, 350).total_evals == 351);
  CHECK(scheme_cost(SchemeKind::ForwardEuler, 350).total_evals == 350);
  CHECK(rk4_reference_cost(10).total_evals == 40);
  CHECK(rk4_reference_cost(10).evals_per_step == 4);
  CHECK_THROWS_AS(scheme_cost(SchemeKind::Direct, 1), ConfigError);
}

TEST_CASE("scheme names round-trip") {
  for (SchemeKind s : kAllSchemes) CHECK(scheme_from_string(to_string(s)) == s);
  CHECK_THROWS_AS(scheme_from_string("rk4"), ConfigError);
}
