#include "arcast/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "arcast/errors.hpp"
#include "json.hpp"

namespace arcast {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where, const std::set<std::string>& known) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

GridSpec ExperimentConfig::grid() const {
  GridSpec g;
  g.nx = dataset.nx;
  g.ny = dataset.ny;
  return g;
}

TemporalSpec ExperimentConfig::temporal() const {
  TemporalSpec t;
  t.t_start = dataset.t_start;
  t.t_end = dataset.t_end;
  t.n_snapshots = dataset.n_snapshots;
  return t;
}

WindowSpec ExperimentConfig::window_spec() const {
  WindowSpec w;
  w.history_len = training.history_len;
  w.split_fraction = training.split_fraction;
  return w;
}

MlpSpec ExperimentConfig::mlp_spec() const {
  MlpSpec spec;
  spec.input_dim = training.history_len;
  spec.hidden_dims = model.hidden_dims;
  spec.output_dim = 1;
  spec.hidden_activation = activation_from_string(model.activation);
  return spec;
}

PdeKind ExperimentConfig::pde_kind() const { return pde_kind_from_string(dataset.pde); }

ExperimentConfig config_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, "config", {"version", "dataset", "model", "training", "eval"});

  ExperimentConfig c;
  get_if(j, "version", c.version);
  if (c.version != 1) throw ConfigError("unsupported config version");

  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    check_keys(d, "dataset",
               {"pde", "n_samples", "nx", "ny", "t_start", "t_end", "n_snapshots", "seed"});
    get_if(d, "pde", c.dataset.pde);
    get_if(d, "n_samples", c.dataset.n_samples);
    get_if(d, "nx", c.dataset.nx);
    get_if(d, "ny", c.dataset.ny);
    get_if(d, "t_start", c.dataset.t_start);
    get_if(d, "t_end", c.dataset.t_end);
    get_if(d, "n_snapshots", c.dataset.n_snapshots);
    get_if(d, "seed", c.dataset.seed);
  }
  if (j.contains("model")) {
    const json& m = j.at("model");
    check_keys(m, "model", {"hidden_dims", "activation", "optimizer"});
    get_if(m, "hidden_dims", c.model.hidden_dims);
    get_if(m, "activation", c.model.activation);
    if (m.contains("optimizer")) {
      const json& o = m.at("optimizer");
      check_keys(o, "model.optimizer", {"lr", "decay_factor", "decay_every", "beta1", "beta2", "eps"});
      get_if(o, "lr", c.model.optimizer.lr);
      get_if(o, "decay_factor", c.model.optimizer.decay_factor);
      get_if(o, "decay_every", c.model.optimizer.decay_every);
      get_if(o, "beta1", c.model.optimizer.beta1);
      get_if(o, "beta2", c.model.optimizer.beta2);
      get_if(o, "eps", c.model.optimizer.eps);
    }
  }
  if (j.contains("training")) {
    const json& t = j.at("training");
    check_keys(t, "training",
               {"epochs", "history_len", "split_fraction", "schemes", "strategies", "rollout_steps",
                "noise_std", "repeats", "k_init", "sigmoid_scale", "vanilla_first_weight",
                "vanilla_rest_weight"});
    get_if(t, "epochs", c.training.epochs);
    get_if(t, "history_len", c.training.history_len);
    get_if(t, "split_fraction", c.training.split_fraction);
    get_if(t, "schemes", c.training.schemes);
    get_if(t, "strategies", c.training.strategies);
    get_if(t, "rollout_steps", c.training.rollout_steps);
    get_if(t, "noise_std", c.training.noise_std);
    get_if(t, "repeats", c.training.repeats);
    get_if(t, "k_init", c.training.k_init);
    get_if(t, "sigmoid_scale", c.training.sigmoid_scale);
    get_if(t, "vanilla_first_weight", c.training.vanilla_first_weight);
    get_if(t, "vanilla_rest_weight", c.training.vanilla_rest_weight);
  }
  if (j.contains("eval")) {
    const json& e = j.at("eval");
    check_keys(e, "eval", {"horizon", "probes", "strouhal"});
    get_if(e, "horizon", c.eval.horizon);
    get_if(e, "probes", c.eval.probes);
    if (e.contains("strouhal") && !e.at("strouhal").is_null()) {
      const json& s = e.at("strouhal");
      check_keys(s, "eval.strouhal", {"diameter", "u_inf", "dt"});
      StrouhalSection st;
      get_if(s, "diameter", st.diameter);
      get_if(s, "u_inf", st.u_inf);
      get_if(s, "dt", st.dt);
      c.eval.strouhal = st;
    }
  }
  return c;
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["version"] = c.version;
  j["dataset"] = {{"pde", c.dataset.pde},     {"n_samples", c.dataset.n_samples},
                  {"nx", c.dataset.nx},       {"ny", c.dataset.ny},
                  {"t_start", c.dataset.t_start}, {"t_end", c.dataset.t_end},
                  {"n_snapshots", c.dataset.n_snapshots}, {"seed", c.dataset.seed}};
  j["model"] = {{"hidden_dims", c.model.hidden_dims},
                {"activation", c.model.activation},
                {"optimizer",
                 {{"lr", c.model.optimizer.lr},
                  {"decay_factor", c.model.optimizer.decay_factor},
                  {"decay_every", c.model.optimizer.decay_every},
                  {"beta1", c.model.optimizer.beta1},
                  {"beta2", c.model.optimizer.beta2},
                  {"eps", c.model.optimizer.eps}}}};
  j["training"] = {{"epochs", c.training.epochs},
                   {"history_len", c.training.history_len},
                   {"split_fraction", c.training.split_fraction},
                   {"schemes", c.training.schemes},
                   {"strategies", c.training.strategies},
                   {"rollout_steps", c.training.rollout_steps},
                   {"noise_std", c.training.noise_std},
                   {"repeats", c.training.repeats},
                   {"k_init", c.training.k_init},
                   {"sigmoid_scale", c.training.sigmoid_scale},
                   {"vanilla_first_weight", c.training.vanilla_first_weight},
                   {"vanilla_rest_weight", c.training.vanilla_rest_weight}};
  j["eval"] = {{"horizon", c.eval.horizon}, {"probes", c.eval.probes}};
  if (c.eval.strouhal)
    j["eval"]["strouhal"] = {{"diameter", c.eval.strouhal->diameter},
                             {"u_inf", c.eval.strouhal->u_inf},
                             {"dt", c.eval.strouhal->dt}};
  else
    j["eval"]["strouhal"] = nullptr;
  return j.dump(2);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

void save_config(const ExperimentConfig& config, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path);
  out << config_to_json(config) << '\n';
  if (!out) throw IoError("write failed for " + path);
}

void validate(const ExperimentConfig& c) {
  pde_kind_from_string(c.dataset.pde);
  if (c.dataset.n_samples < 0) throw ConfigError("n_samples must be >= 0");
  validate(c.grid());
  validate(c.temporal());
  validate(c.window_spec(), c.dataset.n_snapshots);
  validate(c.mlp_spec());
  if (c.training.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (c.training.repeats < 1) throw ConfigError("repeats must be >= 1");
  if (c.training.noise_std < 0.0) throw ConfigError("noise_std must be >= 0");
  if (c.training.schemes.empty()) throw ConfigError("at least one scheme is required");
  for (const auto& s : c.training.schemes) scheme_from_string(s);
  if (c.training.strategies.empty()) throw ConfigError("at least one strategy is required");
  for (const auto& s : c.training.strategies) strategy_from_string(s);
  if (c.training.rollout_steps.empty()) throw ConfigError("at least one rollout depth is required");
  for (int m : c.training.rollout_steps) {
    if (m < 1) throw ConfigError("rollout_steps entries must be >= 1");
    for (const auto& s : c.training.strategies) {
      RolloutPlan plan;
      plan.M = m;
      plan.strategy = strategy_from_string(s);
      if (m == 1 && plan.strategy != Strategy::Single) continue;  // skipped cell, see sweep expansion
      if (m > 1 && plan.strategy == Strategy::Single) continue;
      validate_strict(plan);
    }
  }
  if (c.eval.horizon < 0) throw ConfigError("eval horizon must be >= 0");
  for (int p : c.eval.probes)
    if (p < 0 || p >= c.dataset.nx * c.dataset.ny) throw ConfigError("probe index outside the grid");
}

std::string config_fingerprint(const ExperimentConfig& config) {
  const std::uint64_t h = fnv1a64(config_to_json(config));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace arcast
