#include <cmath>
#include <filesystem>
#include <fstream>

#include "arcast/errors.hpp"
#include "arcast/mlp.hpp"
#include "doctest.h"

using namespace arcast;

namespace {

std::vector<double> random_batch(Rng& rng, int batch, int dim) {
  std::vector<double> x(static_cast<std::size_t>(batch) * dim);
  for (auto& v : x) v = rng.uniform(-1.0, 1.0);
  return x;
}

// Central finite differences of sum_b upstream_b * forward_b against the
// analytic backward pass; returns the worst relative mismatch.
double gradient_check(ModelParams& model, Rng& rng, int batch, double h = 1e-6) {
  const std::vector<double> x = random_batch(rng, batch, model.spec.input_dim);
  std::vector<double> upstream(batch);
  for (auto& u : upstream) u = rng.uniform(-1.0, 1.0);

  ForwardCache cache;
  forward_cached(model, x.data(), batch, cache);
  Gradients grads = make_gradients(model);
  backward(model, x.data(), cache, upstream.data(), grads);

  auto loss = [&] {
    std::vector<double> y(batch);
    forward(model, x.data(), batch, y.data());
    double s = 0.0;
    for (int b = 0; b < batch; ++b) s += upstream[b] * y[b];
    return s;
  };

  double worst = 0.0;
  auto params = param_arrays(model);
  auto grad_arrays = [&grads] {
    std::vector<std::pair<double*, std::size_t>> arrays;
    for (auto& l : grads.layers) {
      arrays.emplace_back(l.w.data(), l.w.size());
      arrays.emplace_back(l.b.data(), l.b.size());
    }
    return arrays;
  }();
  for (std::size_t a = 0; a < params.size(); ++a) {
    for (std::size_t i = 0; i < params[a].second; ++i) {
      double& p = params[a].first[i];
      const double save = p;
      p = save + h;
      const double lp = loss();
      p = save - h;
      const double lm = loss();
      p = save;
      const double fd = (lp - lm) / (2.0 * h);
      const double an = grad_arrays[a].first[i];
      const double denom = std::max({std::fabs(fd), std::fabs(an), 1e-8});
      worst = std::max(worst, std::fabs(fd - an) / denom);
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("zero parameters map any batch to zero") {
  MlpSpec spec;
  spec.input_dim = 6;
  spec.hidden_dims = {5, 4};
  Rng rng(1);
  ModelParams model = init_model(spec, rng);
  for (auto& l : model.layers) std::fill(l.w.begin(), l.w.end(), 0.0);
  std::vector<double> y = forward(model, random_batch(rng, 7, 6), 7);
  for (double v : y) CHECK(v == 0.0);
}

TEST_CASE("a bare affine layer reproduces hand arithmetic") {
  MlpSpec spec;
  spec.input_dim = 3;
  spec.hidden_dims = {};
  Rng rng(2);
  ModelParams model = init_model(spec, rng);
  std::fill(model.layers[0].w.begin(), model.layers[0].w.end(), 1.0);
  model.layers[0].b[0] = 0.25;
  std::vector<double> x = {1.0, 2.0, 3.0, -1.0, 0.5, 4.0};
  std::vector<double> y = forward(model, x, 2);
  CHECK(y[0] == 6.25);
  CHECK(y[1] == 3.75);
}

TEST_CASE("identical rows give identical outputs") {
  MlpSpec spec;
  spec.input_dim = 5;
  spec.hidden_dims = {8, 8};
  Rng rng(3);
  ModelParams model = init_model(spec, rng);
  std::vector<double> row = random_batch(rng, 1, 5);
  std::vector<double> batch;
  for (int b = 0; b < 9; ++b) batch.insert(batch.end(), row.begin(), row.end());
  std::vector<double> y = forward(model, batch, 9);
  for (int b = 1; b < 9; ++b) CHECK(y[b] == y[0]);
}

TEST_CASE("shape mismatches are rejected") {
  MlpSpec spec;
  spec.input_dim = 4;
  spec.hidden_dims = {3};
  Rng rng(4);
  ModelParams model = init_model(spec, rng);
  std::vector<double> bad(7);
  CHECK_THROWS_AS(forward(model, bad, 2), ShapeMismatch);
}

TEST_CASE("analytic gradients match finite differences on a small net") {
  MlpSpec spec;
  spec.input_dim = 4;
  spec.hidden_dims = {5, 3};
  Rng rng(42);
  ModelParams model = init_model(spec, rng);
  CHECK(gradient_check(model, rng, 6) < 1e-6);
}

TEST_CASE("zero upstream yields zero gradients") {
  MlpSpec spec;
  spec.input_dim = 4;
  spec.hidden_dims = {5};
  Rng rng(5);
  ModelParams model = init_model(spec, rng);
  std::vector<double> x = random_batch(rng, 3, 4);
  std::vector<double> upstream(3, 0.0);
  ForwardCache cache;
  forward_cached(model, x.data(), 3, cache);
  Gradients grads = make_gradients(model);
  backward(model, x.data(), cache, upstream.data(), grads);
  for (const auto& l : grads.layers) {
    for (double g : l.w) CHECK(g == 0.0);
    for (double g : l.b) CHECK(g == 0.0);
  }
}

TEST_CASE("linear model weight gradient is upstream^T batch") {
  MlpSpec spec;
  spec.input_dim = 3;
  spec.hidden_dims = {};
  Rng rng(6);
  ModelParams model = init_model(spec, rng);
  std::vector<double> x = random_batch(rng, 4, 3);
  std::vector<double> upstream = {0.5, -1.0, 2.0, 0.25};
  ForwardCache cache;
  forward_cached(model, x.data(), 4, cache);
  Gradients grads = make_gradients(model);
  backward(model, x.data(), cache, upstream.data(), grads);
  for (int i = 0; i < 3; ++i) {
    double expect = 0.0;
    for (int b = 0; b < 4; ++b) expect += upstream[b] * x[b * 3 + i];
    CHECK(grads.layers[0].w[i] == doctest::Approx(expect).epsilon(1e-14));
  }
}

TEST_CASE("first adam step has unit scale") {
  MlpSpec spec;
  spec.input_dim = 1;
  spec.hidden_dims = {};
  Rng rng(7);
  ModelParams model = init_model(spec, rng);
  OptimizerState opt = make_optimizer(model, 1e-3, 0.9, 50);
  const double before = model.layers[0].w[0];
  Gradients grads = make_gradients(model);
  grads.layers[0].w[0] = 0.5;
  adam_step(model, grads, opt, 0);
  const double delta = before - model.layers[0].w[0];
  CHECK(std::fabs(delta - 1e-3) < 1e-6 * 1e-3);
}

TEST_CASE("zero gradients leave parameters fixed while moments decay") {
  MlpSpec spec;
  spec.input_dim = 2;
  spec.hidden_dims = {};
  Rng rng(8);
  ModelParams model = init_model(spec, rng);
  OptimizerState opt = make_optimizer(model);
  const auto saved = model.layers;
  Gradients grads = make_gradients(model);
  adam_step(model, grads, opt, 0);
  CHECK(model.layers[0].w == saved[0].w);
  CHECK(model.layers[0].b == saved[0].b);

  // Push a nonzero gradient, then a zero one: the first moment must decay.
  grads.layers[0].w[0] = 1.0;
  adam_step(model, grads, opt, 0);
  const double m_after_grad = opt.m[0].w[0];
  grads.zero();
  adam_step(model, grads, opt, 0);
  CHECK(opt.m[0].w[0] == doctest::Approx(0.9 * m_after_grad).epsilon(1e-14));
}

TEST_CASE("learning-rate decay follows the epoch schedule") {
  MlpSpec spec;
  spec.input_dim = 2;
  spec.hidden_dims = {};
  Rng rng(9);
  ModelParams model = init_model(spec, rng);
  OptimizerState opt = make_optimizer(model, 1e-3, 0.9, 50);
  CHECK(opt.effective_lr(0) == 1e-3);
  CHECK(opt.effective_lr(49) == 1e-3);
  CHECK(opt.effective_lr(50) == doctest::Approx(9e-4).epsilon(1e-15));
  CHECK(opt.effective_lr(149) == doctest::Approx(1e-3 * 0.81).epsilon(1e-15));
}

TEST_CASE("zero learning rate leaves parameters bit-identical") {
  MlpSpec spec;
  spec.input_dim = 3;
  spec.hidden_dims = {4};
  Rng rng(10);
  ModelParams model = init_model(spec, rng);
  OptimizerState opt = make_optimizer(model, 0.0, 0.9, 50);
  const auto saved = model.layers;
  Gradients grads = make_gradients(model);
  for (auto& l : grads.layers)
    for (auto& g : l.w) g = 0.37;
  for (int i = 0; i < 5; ++i) adam_step(model, grads, opt, i);
  for (std::size_t l = 0; l < saved.size(); ++l) {
    CHECK(model.layers[l].w == saved[l].w);
    CHECK(model.layers[l].b == saved[l].b);
  }
}

TEST_CASE("non-finite gradients are rejected") {
  MlpSpec spec;
  spec.input_dim = 2;
  spec.hidden_dims = {};
  Rng rng(11);
  ModelParams model = init_model(spec, rng);
  OptimizerState opt = make_optimizer(model);
  Gradients grads = make_gradients(model);
  grads.layers[0].w[0] = std::nan("");
  CHECK_THROWS_AS(adam_step(model, grads, opt, 0), NonFiniteGradient);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  MlpSpec spec;
  spec.input_dim = 30;
  Rng rng(12);
  ModelParams model = init_model(spec, rng);
  const std::string path =
      (std::filesystem::temp_directory_path() / "arcast_model.arpm").string();
  write_model(model, path);
  ModelParams back = read_model(path);
  CHECK(back.spec.input_dim == model.spec.input_dim);
  CHECK(back.spec.hidden_dims == model.spec.hidden_dims);
  REQUIRE(back.layers.size() == model.layers.size());
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    CHECK(back.layers[l].w == model.layers[l].w);
    CHECK(back.layers[l].b == model.layers[l].b);
  }

  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.write("XXXX", 4);
  }
  CHECK_THROWS_AS(read_model(path), FormatError);

  write_model(model, path);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) / 2);
  CHECK_THROWS_AS(read_model(path), TruncatedFile);
  std::filesystem::remove(path);
}
