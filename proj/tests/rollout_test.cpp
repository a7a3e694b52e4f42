#include <cmath>

#include "arcast/dataset.hpp"
#include "arcast/errors.hpp"
#include "arcast/rollout.hpp"
#include "doctest.h"

using namespace arcast;

namespace {

RolloutPlan plan_for(Strategy s, int M) {
  RolloutPlan p;
  p.strategy = s;
  p.M = M;
  return p;
}

AdaptiveWeightState state_with_k(double k, double scale = 10.0) {
  AdaptiveWeightState st;
  st.k = k;
  st.sigmoid_scale = scale;
  return st;
}

// Small smooth trajectory for training/gradient tests.
Trajectory tiny_trajectory(int n_snapshots, std::uint64_t seed) {
  GridSpec g;
  g.nx = 4;
  g.ny = 4;
  TemporalSpec temporal{0.0, 0.1 * (n_snapshots - 1), n_snapshots};
  Trajectory traj;
  traj.grid = g;
  traj.temporal = temporal;
  Rng rng(seed);
  std::vector<double> phase(g.n_points()), amp(g.n_points());
  for (std::size_t p = 0; p < g.n_points(); ++p) {
    phase[p] = rng.uniform(0.0, 6.28);
    amp[p] = rng.uniform(0.5, 1.5);
  }
  for (int t = 0; t < n_snapshots; ++t) {
    std::vector<double> snap(g.n_points());
    for (std::size_t p = 0; p < g.n_points(); ++p)
      snap[p] = amp[p] * std::sin(0.4 * t + phase[p]);
    traj.snapshots.push_back(std::move(snap));
  }
  return traj;
}

ModelParams tiny_model(int N, std::uint64_t seed) {
  MlpSpec spec;
  spec.input_dim = N;
  spec.hidden_dims = {5, 4};
  Rng rng(seed);
  return init_model(spec, rng);
}

}  // namespace

TEST_CASE("aw1 normalizes the per-step errors") {
  auto w = compute_weights(plan_for(Strategy::AW1, 2), {1.0, 3.0}, state_with_k(0));
  CHECK(w[0] == 0.25);
  CHECK(w[1] == 0.75);
}

TEST_CASE("k_e arithmetic and bounds") {
  CHECK(state_with_k(0.0).k_e() == 1.75);  // sigmoid(0) = 1/2 exactly
  for (double k : {-3.5, -1.0, -0.01, 0.02, 1.0, 3.5}) {
    const double ke = state_with_k(k).k_e();
    CHECK(ke > 0.5);
    CHECK(ke < 3.0);
  }
  // Past |s k| ~ 40 the sigmoid saturates; k_e clamps to the open-interval
  // endpoints within 1e-12.
  for (double k : {55.0, 1e6, 1e9}) {
    CHECK(std::fabs(state_with_k(k).k_e() - 3.0) < 1e-12);
    CHECK(std::fabs(state_with_k(-k).k_e() - 0.5) < 1e-12);
  }
}

TEST_CASE("aw2 sharpens weights through k_e") {
  // k = 0 gives k_e = 1.75 exactly.
  auto w = compute_weights(plan_for(Strategy::AW2, 2), {0.1, 0.4}, state_with_k(0.0));
  CHECK(std::fabs(w[0] - 0.0812) < 1e-4);
  CHECK(std::fabs(w[1] - 0.9188) < 1e-4);
}

TEST_CASE("aw3 splits the weight between first and last step") {
  auto w = compute_weights(plan_for(Strategy::AW3, 4), {0.3, 9.0, 2.0, 0.3}, state_with_k(0.4));
  CHECK(w[0] == 0.5);
  CHECK(w[3] == 0.5);
  CHECK(w[1] == 0.0);
  CHECK(w[2] == 0.0);
}

TEST_CASE("vanilla weights are the fixed constants") {
  auto w = compute_weights(plan_for(Strategy::Vanilla, 4), {1.0, 1.0, 1.0, 1.0}, state_with_k(0));
  CHECK(w == std::vector<double>{1.0, 0.1, 0.1, 0.1});
}

TEST_CASE("adaptive weights are a probability vector") {
  Rng rng(31);
  for (int rep = 0; rep < 200; ++rep) {
    const int M = rng.uniform_int(2, 8);
    std::vector<double> mse(M);
    for (auto& m : mse) m = std::exp(rng.uniform(-12.0, 6.0));
    for (Strategy s : {Strategy::AW1, Strategy::AW2, Strategy::AW3}) {
      auto w = compute_weights(plan_for(s, M), mse, state_with_k(rng.uniform(-0.5, 0.5)));
      double sum = 0.0;
      for (double v : w) {
        CHECK(v >= 0.0);
        sum += v;
      }
      CHECK(std::fabs(sum - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("aw2 at k_e = 1 reproduces aw1") {
  // Solve sigmoid(s k) = 0.2 so k_e = 0.5 + 2.5 * 0.2 = 1.
  const double k = std::log(0.2 / 0.8) / 10.0;
  const AdaptiveWeightState st = state_with_k(k);
  CHECK(st.k_e() == doctest::Approx(1.0).epsilon(1e-15));
  Rng rng(32);
  for (int rep = 0; rep < 50; ++rep) {
    const int M = rng.uniform_int(2, 6);
    std::vector<double> mse(M);
    for (auto& m : mse) m = std::exp(rng.uniform(-6.0, 4.0));
    auto w1 = compute_weights(plan_for(Strategy::AW1, M), mse, st);
    auto w2 = compute_weights(plan_for(Strategy::AW2, M), mse, st);
    for (int i = 0; i < M; ++i) CHECK(w2[i] == doctest::Approx(w1[i]).epsilon(1e-12));
  }
}

TEST_CASE("weights are scale-equivariant in the per-step errors") {
  Rng rng(33);
  const AdaptiveWeightState st = state_with_k(0.13);
  for (int rep = 0; rep < 50; ++rep) {
    const int M = rng.uniform_int(2, 6);
    std::vector<double> mse(M), scaled(M);
    const double c = std::exp(rng.uniform(-3.0, 3.0));
    for (int i = 0; i < M; ++i) {
      mse[i] = std::exp(rng.uniform(-5.0, 3.0));
      scaled[i] = c * mse[i];
    }
    for (Strategy s : {Strategy::AW1, Strategy::AW2, Strategy::AW3}) {
      auto a = compute_weights(plan_for(s, M), mse, st);
      auto b = compute_weights(plan_for(s, M), scaled, st);
      for (int i = 0; i < M; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("degenerate zero losses fall back to uniform weights") {
  auto w2 = compute_weights(plan_for(Strategy::AW2, 4), {0, 0, 0, 0}, state_with_k(0.2));
  CHECK(w2 == std::vector<double>{0.25, 0.25, 0.25, 0.25});
  auto w3 = compute_weights(plan_for(Strategy::AW3, 4), {0, 0, 0, 0}, state_with_k(0.2));
  CHECK(w3 == std::vector<double>{0.5, 0.0, 0.0, 0.5});
}

TEST_CASE("extreme errors survive through the rescaled power path") {
  std::vector<double> tiny = {1e-300, 5e-301, 2e-300, 8e-301};
  auto w = compute_weights(plan_for(Strategy::AW2, 4), tiny, state_with_k(0.5));
  double sum = 0.0;
  for (double v : w) {
    CHECK(std::isfinite(v));
    sum += v;
  }
  CHECK(std::fabs(sum - 1.0) < 1e-12);
}

TEST_CASE("k gradient matches finite differences") {
  // Step errors within a couple of decades of each other (the regime the
  // weighting operates in); grossly saturated weights push the true
  // gradient below the FD cancellation floor and say nothing new.
  Rng rng(34);
  for (int rep = 0; rep < 100; ++rep) {
    const int M = rng.uniform_int(2, 7);
    std::vector<double> mse(M);
    for (auto& m : mse) m = std::exp(rng.uniform(-3.0, 3.0));
    const Strategy s = rep % 2 == 0 ? Strategy::AW2 : Strategy::AW3;
    const RolloutPlan plan = plan_for(s, M);
    const double k0 = rng.uniform(-0.3, 0.3);

    const double analytic = loss_k_gradient(plan, mse, state_with_k(k0));
    const double h = 1e-6;
    auto loss_at = [&](double k) {
      auto w = compute_weights(plan, mse, state_with_k(k));
      double L = 0.0;
      for (int i = 0; i < M; ++i) L += w[i] * mse[i];
      return L;
    };
    const double fd = (loss_at(k0 + h) - loss_at(k0 - h)) / (2.0 * h);
    const double denom = std::max({std::fabs(fd), std::fabs(analytic), 1e-10});
    CHECK(std::fabs(fd - analytic) / denom < 1e-5);
  }

  // Saturated spreads: the finite difference stays consistent once h
  // clears the cancellation floor.
  for (int rep = 0; rep < 30; ++rep) {
    const int M = rng.uniform_int(2, 7);
    std::vector<double> mse(M);
    for (auto& m : mse) m = std::exp(rng.uniform(-8.0, 4.0));
    const RolloutPlan plan = plan_for(rep % 2 ? Strategy::AW2 : Strategy::AW3, M);
    const double k0 = rng.uniform(-0.3, 0.3);
    const double analytic = loss_k_gradient(plan, mse, state_with_k(k0));
    auto loss_at = [&](double k) {
      auto w = compute_weights(plan, mse, state_with_k(k));
      double L = 0.0;
      for (int i = 0; i < M; ++i) L += w[i] * mse[i];
      return L;
    };
    const double h = 1e-4;
    const double fd = (loss_at(k0 + h) - loss_at(k0 - h)) / (2.0 * h);
    double scale = 0.0;
    for (double m : mse) scale += m;
    const double denom = std::max({std::fabs(fd), std::fabs(analytic), 1e-9 * scale});
    CHECK(std::fabs(fd - analytic) / denom < 1e-2);
  }
}

TEST_CASE("noise injection is the identity at std zero and reproducible otherwise") {
  std::vector<double> batch = {1.0, -2.0, 3.0};
  const std::vector<double> orig = batch;
  Rng rng(35);
  inject_noise(batch, NoiseConfig{0.0}, rng);
  CHECK(batch == orig);

  std::vector<double> a = orig, b = orig;
  Rng ra(36), rb(36);
  inject_noise(a, NoiseConfig{0.16}, ra);
  inject_noise(b, NoiseConfig{0.16}, rb);
  CHECK(a == b);
  CHECK(a != orig);
}

TEST_CASE("noise variance tracks the configured std") {
  const std::size_t n = 200000;
  std::vector<double> batch(n, 0.0);
  Rng rng(37);
  inject_noise(batch, NoiseConfig{0.16}, rng);
  double var = 0.0;
  for (double v : batch) var += v * v;
  var /= n;
  CHECK(std::fabs(var - 0.0256) < 0.05 * 0.0256);
}

TEST_CASE("multi-step gradients match finite differences for every scheme") {
  const int N = 3;
  Trajectory traj = tiny_trajectory(14, 900);

  // history_end = N exercises the exact Adams startup; N-1 the bootstrap.
  for (int history_end : {N - 1, N + 2}) {
    for (SchemeKind scheme : kAllSchemes) {
      for (Strategy strategy : {Strategy::Vanilla, Strategy::AW2}) {
        CAPTURE(history_end);
        CAPTURE(to_string(scheme));
        CAPTURE(to_string(strategy));

        ModelParams model = tiny_model(N, 1234 + history_end);
        const Window window{history_end, 3};
        RolloutPlan plan = plan_for(strategy, 3);
        const AdaptiveWeightState aw = state_with_k(0.11);

        Gradients grads = make_gradients(model);
        const WindowLoss base =
            window_rollout_loss(model, scheme, traj, window, plan, aw, &grads);

        // The model gradient is defined against detached weights, so the
        // finite differences probe the fixed-weight objective.
        const std::vector<double> frozen = base.weights;
        auto loss_at = [&]() {
          return window_rollout_loss(model, scheme, traj, window, plan, aw, nullptr, &frozen)
              .total;
        };

        const double h = 1e-6;
        auto params = param_arrays(model);
        std::vector<std::pair<double*, std::size_t>> grad_arrays;
        for (auto& l : grads.layers) {
          grad_arrays.emplace_back(l.w.data(), l.w.size());
          grad_arrays.emplace_back(l.b.data(), l.b.size());
        }
        for (std::size_t a = 0; a < params.size(); ++a) {
          for (std::size_t i = 0; i < params[a].second; ++i) {
            double& p = params[a].first[i];
            const double save = p;
            p = save + h;
            const double lp = loss_at();
            p = save - h;
            const double lm = loss_at();
            p = save;
            const double fd = (lp - lm) / (2.0 * h);
            const double an = grad_arrays[a].first[i];
            const double denom = std::max({std::fabs(fd), std::fabs(an), 1e-7});
            CHECK(std::fabs(fd - an) / denom < 2e-4);
          }
        }
      }
    }
  }
}

TEST_CASE("single-step training equals weighted M=1 training for direct prediction") {
  const int N = 4;
  Trajectory traj = tiny_trajectory(20, 42);
  WindowSpec wspec{N, 0.8};
  auto windows = build_windows(traj.n_snapshots(), wspec, 1, Split::Train);

  ModelParams m1 = tiny_model(N, 7);
  ModelParams m2 = m1;
  OptimizerState o1 = make_optimizer(m1);
  OptimizerState o2 = make_optimizer(m2);
  TrainOptions opts{4};

  TrainLog log1 =
      train(m1, o1, SchemeKind::Direct, traj, windows, plan_for(Strategy::Single, 1), opts, 5);
  TrainLog log2 =
      train(m2, o2, SchemeKind::Direct, traj, windows, plan_for(Strategy::Vanilla, 1), opts, 5);

  for (std::size_t e = 0; e < log1.epochs.size(); ++e)
    CHECK(log1.epochs[e].total_loss == log2.epochs[e].total_loss);
  for (std::size_t l = 0; l < m1.layers.size(); ++l) {
    CHECK(m1.layers[l].w == m2.layers[l].w);
    CHECK(m1.layers[l].b == m2.layers[l].b);
  }
}

TEST_CASE("zero learning rate trains to bit-identical parameters") {
  const int N = 3;
  Trajectory traj = tiny_trajectory(16, 8);
  WindowSpec wspec{N, 0.8};

  for (int M : {1, 3}) {
    auto windows = build_windows(traj.n_snapshots(), wspec, M, Split::Train);
    ModelParams model = tiny_model(N, 9);
    const auto saved = model.layers;
    OptimizerState opt = make_optimizer(model, 0.0);
    RolloutPlan plan = plan_for(M == 1 ? Strategy::Single : Strategy::AW1, M);
    train(model, opt, SchemeKind::ForwardEuler, traj, windows, plan, TrainOptions{3}, 5);
    for (std::size_t l = 0; l < saved.size(); ++l) {
      CHECK(model.layers[l].w == saved[l].w);
      CHECK(model.layers[l].b == saved[l].b);
    }
  }
}

TEST_CASE("training is deterministic given the seeds") {
  const int N = 3;
  Trajectory traj = tiny_trajectory(16, 10);
  WindowSpec wspec{N, 0.8};
  auto windows = build_windows(traj.n_snapshots(), wspec, 2, Split::Train);

  RolloutPlan plan = plan_for(Strategy::AW2, 2);
  plan.noise.std = 0.05;

  auto run_once = [&] {
    ModelParams model = tiny_model(N, 11);
    OptimizerState opt = make_optimizer(model);
    train(model, opt, SchemeKind::AdamsEuler, traj, windows, plan, TrainOptions{3}, 77);
    return model;
  };
  ModelParams a = run_once();
  ModelParams b = run_once();
  for (std::size_t l = 0; l < a.layers.size(); ++l) CHECK(a.layers[l].w == b.layers[l].w);
}

TEST_CASE("exploding losses raise NonFiniteLoss with diagnostics") {
  const int N = 3;
  Trajectory traj = tiny_trajectory(16, 12);
  WindowSpec wspec{N, 0.8};
  auto windows = build_windows(traj.n_snapshots(), wspec, 2, Split::Train);

  ModelParams model = tiny_model(N, 13);
  for (auto& w : model.layers.back().w) w = 1e200;
  OptimizerState opt = make_optimizer(model);

  try {
    train(model, opt, SchemeKind::Direct, traj, windows, plan_for(Strategy::Vanilla, 2),
          TrainOptions{1}, 5);
    FAIL("expected NonFiniteLoss");
  } catch (const NonFiniteLoss& e) {
    CHECK(e.epoch == 0);
    CHECK(e.step >= 1);
    CHECK(e.max_abs > 1e100);
  }
}

TEST_CASE("strict plan validation couples single with M=1") {
  CHECK_THROWS_AS(validate_strict(plan_for(Strategy::Single, 2)), ConfigError);
  CHECK_THROWS_AS(validate_strict(plan_for(Strategy::Vanilla, 1)), ConfigError);
  CHECK_NOTHROW(validate_strict(plan_for(Strategy::Single, 1)));
  CHECK_NOTHROW(validate_strict(plan_for(Strategy::AW3, 4)));
}

TEST_CASE("strategy names round-trip") {
  for (Strategy s :
       {Strategy::Single, Strategy::Vanilla, Strategy::AW1, Strategy::AW2, Strategy::AW3})
    CHECK(strategy_from_string(to_string(s)) == s);
  CHECK_THROWS_AS(strategy_from_string("aw4"), ConfigError);
}
