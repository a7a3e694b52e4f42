#include "arcast/mlp.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "arcast/errors.hpp"
#include "kernels.hpp"

namespace arcast {

std::string to_string(Activation a) { return a == Activation::Tanh ? "tanh" : "identity"; }

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "identity") return Activation::Identity;
  throw ConfigError("unknown activation: " + name);
}

void validate(const MlpSpec& spec) {
  if (spec.input_dim < 1) throw ConfigError("input_dim must be positive");
  if (spec.output_dim != 1) throw ConfigError("output_dim must be 1");
  for (int h : spec.hidden_dims)
    if (h < 1) throw ConfigError("hidden dims must be positive");
}

std::size_t ModelParams::n_parameters() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.w.size() + l.b.size();
  return n;
}

ModelParams init_model(const MlpSpec& spec, Rng& rng) {
  validate(spec);
  ModelParams params;
  params.spec = spec;
  std::vector<int> dims;
  dims.push_back(spec.input_dim);
  for (int h : spec.hidden_dims) dims.push_back(h);
  dims.push_back(spec.output_dim);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    DenseLayer layer;
    layer.in = dims[l];
    layer.out = dims[l + 1];
    layer.w.resize(static_cast<std::size_t>(layer.in) * layer.out);
    layer.b.assign(layer.out, 0.0);
    const double bound = std::sqrt(6.0 / (layer.in + layer.out));
    for (auto& w : layer.w) w = rng.uniform(-bound, bound);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

void Gradients::zero() {
  for (auto& l : layers) {
    std::fill(l.w.begin(), l.w.end(), 0.0);
    std::fill(l.b.begin(), l.b.end(), 0.0);
  }
}

Gradients make_gradients(const ModelParams& params) {
  Gradients g;
  g.layers = params.layers;
  g.zero();
  return g;
}

namespace {

void affine_forward(const DenseLayer& L, const double* x, int batch, double* y) {
  for (int b = 0; b < batch; ++b) {
    const double* xb = x + static_cast<std::size_t>(b) * L.in;
    double* yb = y + static_cast<std::size_t>(b) * L.out;
    std::memcpy(yb, L.b.data(), static_cast<std::size_t>(L.out) * sizeof(double));
    for (int i = 0; i < L.in; ++i) {
      const double xv = xb[i];
      const double* wi = &L.w[static_cast<std::size_t>(i) * L.out];
#pragma omp simd
      for (int o = 0; o < L.out; ++o) yb[o] += xv * wi[o];
    }
  }
}

// Accumulates dW/db from upstream dy; writes the input gradient when
// dx != nullptr.
void affine_backward(const DenseLayer& L, const double* x, const double* dy, int batch,
                     DenseLayer& grad, double* dx) {
  for (int b = 0; b < batch; ++b) {
    const double* xb = x + static_cast<std::size_t>(b) * L.in;
    const double* dyb = dy + static_cast<std::size_t>(b) * L.out;
    double* gb = grad.b.data();
#pragma omp simd
    for (int o = 0; o < L.out; ++o) gb[o] += dyb[o];
    for (int i = 0; i < L.in; ++i) {
      const double xv = xb[i];
      double* gwi = &grad.w[static_cast<std::size_t>(i) * L.out];
#pragma omp simd
      for (int o = 0; o < L.out; ++o) gwi[o] += xv * dyb[o];
    }
    if (dx) {
      double* dxb = dx + static_cast<std::size_t>(b) * L.in;
      for (int i = 0; i < L.in; ++i) {
        const double* wi = &L.w[static_cast<std::size_t>(i) * L.out];
        double s = 0.0;
#pragma omp simd reduction(+ : s)
        for (int o = 0; o < L.out; ++o) s += dyb[o] * wi[o];
        dxb[i] = s;
      }
    }
  }
}

}  // namespace

void forward_cached(const ModelParams& params, const double* x, int batch, ForwardCache& cache) {
  cache.batch = batch;
  cache.activations.resize(params.layers.size());
  const double* in = x;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const DenseLayer& L = params.layers[l];
    auto& act = cache.activations[l];
    act.resize(static_cast<std::size_t>(batch) * L.out);
    affine_forward(L, in, batch, act.data());
    const bool is_output = (l + 1 == params.layers.size());
    if (!is_output && params.spec.hidden_activation == Activation::Tanh)
      detail::tanh_array(act.data(), act.data(), act.size());
    in = act.data();
  }
}

void forward(const ModelParams& params, const double* x, int batch, double* y) {
  ForwardCache cache;
  forward_cached(params, x, batch, cache);
  const auto& out = cache.activations.back();
  std::memcpy(y, out.data(), out.size() * sizeof(double));
}

std::vector<double> forward(const ModelParams& params, const std::vector<double>& batch_rows,
                            int batch) {
  if (batch < 0 || batch_rows.size() != static_cast<std::size_t>(batch) * params.spec.input_dim)
    throw ShapeMismatch("batch size does not match input_dim");
  std::vector<double> y(static_cast<std::size_t>(batch) * params.spec.output_dim);
  if (batch > 0) forward(params, batch_rows.data(), batch, y.data());
  return y;
}

void backward(const ModelParams& params, const double* x, ForwardCache& cache,
              const double* upstream, Gradients& grads, double* dx) {
  const int batch = cache.batch;
  if (grads.layers.size() != params.layers.size())
    throw ShapeMismatch("gradient buffers do not match the model");

  std::size_t max_width = static_cast<std::size_t>(params.spec.input_dim);
  for (const auto& L : params.layers) max_width = std::max(max_width, static_cast<std::size_t>(L.out));
  cache.scratch_a.resize(static_cast<std::size_t>(batch) * max_width);
  cache.scratch_b.resize(static_cast<std::size_t>(batch) * max_width);

  // dY for the output layer is the upstream itself.
  double* cur = cache.scratch_a.data();
  double* next = cache.scratch_b.data();
  const int n_layers = static_cast<int>(params.layers.size());
  const std::size_t out_count = static_cast<std::size_t>(batch) * params.layers.back().out;
  std::memcpy(cur, upstream, out_count * sizeof(double));

  for (int l = n_layers - 1; l >= 0; --l) {
    const DenseLayer& L = params.layers[l];
    const double* layer_in = (l == 0) ? x : cache.activations[l - 1].data();
    const bool need_dx = (l > 0) || (dx != nullptr);
    double* dx_out = (l == 0) ? dx : next;
    affine_backward(L, layer_in, cur, batch, grads.layers[l], need_dx ? dx_out : nullptr);
    if (l > 0) {
      // Chain through the hidden activation of layer l-1.
      if (params.spec.hidden_activation == Activation::Tanh) {
        const auto& act = cache.activations[l - 1];
        const std::size_t n = act.size();
#pragma omp simd
        for (std::size_t i = 0; i < n; ++i) next[i] *= (1.0 - act[i] * act[i]);
      }
      std::swap(cur, next);
    }
  }
}

double OptimizerState::effective_lr(int epoch) const {
  const int k = (decay_every > 0 && epoch > 0) ? epoch / decay_every : 0;
  return base_lr * std::pow(decay_factor, k);
}

OptimizerState make_optimizer(const ModelParams& params, double base_lr, double decay_factor,
                              int decay_every) {
  OptimizerState s;
  s.base_lr = base_lr;
  s.decay_factor = decay_factor;
  s.decay_every = decay_every;
  s.m = params.layers;
  s.v = params.layers;
  for (auto* buf : {&s.m, &s.v})
    for (auto& l : *buf) {
      std::fill(l.w.begin(), l.w.end(), 0.0);
      std::fill(l.b.begin(), l.b.end(), 0.0);
    }
  return s;
}

namespace {

void adam_update(double* p, const double* g, double* m, double* v, std::size_t n, double lr,
                 double beta1, double beta2, double eps, double bc1, double bc2) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

}  // namespace

void adam_step(ModelParams& params, const Gradients& grads, OptimizerState& state, int epoch) {
  for (const auto& l : grads.layers) {
    for (double g : l.w)
      if (!std::isfinite(g)) throw NonFiniteGradient("non-finite weight gradient");
    for (double g : l.b)
      if (!std::isfinite(g)) throw NonFiniteGradient("non-finite bias gradient");
  }
  ++state.step;
  const double lr = state.effective_lr(epoch);
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& P = params.layers[l];
    const auto& G = grads.layers[l];
    adam_update(P.w.data(), G.w.data(), state.m[l].w.data(), state.v[l].w.data(), P.w.size(), lr,
                state.beta1, state.beta2, state.eps, bc1, bc2);
    adam_update(P.b.data(), G.b.data(), state.m[l].b.data(), state.v[l].b.data(), P.b.size(), lr,
                state.beta1, state.beta2, state.eps, bc1, bc2);
  }
}

std::vector<std::pair<double*, std::size_t>> param_arrays(ModelParams& params) {
  std::vector<std::pair<double*, std::size_t>> arrays;
  for (auto& l : params.layers) {
    arrays.emplace_back(l.w.data(), l.w.size());
    arrays.emplace_back(l.b.data(), l.b.size());
  }
  return arrays;
}

namespace {

constexpr char kMagic[4] = {'A', 'R', 'P', 'M'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f64(std::string& out, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

}  // namespace

void write_model(const ModelParams& params, const std::string& path) {
  std::string out;
  out.append(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(params.spec.input_dim));
  put_u32(out, static_cast<std::uint32_t>(params.spec.output_dim));
  put_u32(out, params.spec.hidden_activation == Activation::Tanh ? 0u : 1u);
  put_u32(out, static_cast<std::uint32_t>(params.spec.hidden_dims.size()));
  for (int h : params.spec.hidden_dims) put_u32(out, static_cast<std::uint32_t>(h));
  for (const auto& l : params.layers) {
    for (double w : l.w) put_f64(out, w);
    for (double b : l.b) put_f64(out, b);
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + tmp);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed for " + path + ": " + ec.message());
}

namespace {

struct Reader {
  std::ifstream in;
  explicit Reader(const std::string& path) : in(path, std::ios::binary) {
    if (!in) throw IoError("cannot open " + path);
  }
  void bytes(char* dst, std::size_t n) {
    in.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n)
      throw TruncatedFile("model file shorter than header promises");
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(reinterpret_cast<char*>(b), 4);
    return b[0] | (b[1] << 8) | (b[2] << 16) | (std::uint32_t(b[3]) << 24);
  }
  double f64() {
    unsigned char b[8];
    bytes(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    double d;
    std::memcpy(&d, &v, 8);
    return d;
  }
};

}  // namespace

ModelParams read_model(const std::string& path) {
  Reader r(path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("bad magic; not a model file");
  if (r.u32() != kVersion) throw FormatError("unsupported model version");
  MlpSpec spec;
  spec.input_dim = static_cast<int>(r.u32());
  spec.output_dim = static_cast<int>(r.u32());
  spec.hidden_activation = r.u32() == 0 ? Activation::Tanh : Activation::Identity;
  const std::uint32_t n_hidden = r.u32();
  spec.hidden_dims.clear();
  for (std::uint32_t i = 0; i < n_hidden; ++i) spec.hidden_dims.push_back(static_cast<int>(r.u32()));
  validate(spec);

  ModelParams params;
  params.spec = spec;
  std::vector<int> dims;
  dims.push_back(spec.input_dim);
  for (int h : spec.hidden_dims) dims.push_back(h);
  dims.push_back(spec.output_dim);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    DenseLayer layer;
    layer.in = dims[l];
    layer.out = dims[l + 1];
    layer.w.resize(static_cast<std::size_t>(layer.in) * layer.out);
    layer.b.resize(layer.out);
    for (auto& w : layer.w) w = r.f64();
    for (auto& b : layer.b) b = r.f64();
    params.layers.push_back(std::move(layer));
  }
  return params;
}

}  // namespace arcast
