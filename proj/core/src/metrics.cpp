#include "arcast/metrics.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "arcast/errors.hpp"
#include "arcast/grid.hpp"
#include "json.hpp"

namespace arcast {

namespace {
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kTwoPi = 6.283185307179586476925286766559;
}  // namespace

StrouhalResult strouhal(const std::vector<double>& series, const StrouhalConfig& cfg) {
  const int n = static_cast<int>(series.size());
  if (n < 16) throw SeriesTooShort("strouhal needs at least 16 samples");
  if (!(cfg.dt > 0.0) || !(cfg.diameter > 0.0) || !(cfg.u_inf > 0.0))
    throw ConfigError("strouhal config entries must be positive");

  double mean_v = 0.0, ms = 0.0;
  for (double v : series) {
    mean_v += v;
    ms += v * v;
  }
  mean_v /= n;
  ms /= n;

  // Mean-removed, Hamming-windowed copy.
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) {
    const double w = 0.54 - 0.46 * std::cos(kTwoPi * i / (n - 1));
    x[i] = (series[i] - mean_v) * w;
  }

  // Direct DFT of the positive frequencies; the series here are a few
  // hundred samples, so O(n^2) is immaterial and keeps the length exact.
  const int n_bins = n / 2;
  int peak_bin = 1;
  double peak_power = -1.0;
  for (int k = 1; k <= n_bins; ++k) {
    double re = 0.0, im = 0.0;
    const double step = -kTwoPi * k / n;
    for (int i = 0; i < n; ++i) {
      const double a = step * i;
      re += x[i] * std::cos(a);
      im += x[i] * std::sin(a);
    }
    const double p = re * re + im * im;
    if (p > peak_power) {
      peak_power = p;
      peak_bin = k;
    }
  }

  StrouhalResult r;
  r.bin_width = 1.0 / (n * cfg.dt);
  r.f_d = peak_bin * r.bin_width;
  r.st = r.f_d * cfg.diameter / cfg.u_inf;
  r.flat = peak_power <= 1e-20 * n * std::max(1.0, ms);
  return r;
}

std::vector<std::vector<double>> extract_probes(const std::vector<std::vector<double>>& fields,
                                                const std::vector<int>& probe_indices) {
  std::vector<std::vector<double>> out;
  out.reserve(probe_indices.size());
  for (int p : probe_indices) {
    std::vector<double> series;
    series.reserve(fields.size());
    for (const auto& f : fields) {
      if (p < 0 || static_cast<std::size_t>(p) >= f.size())
        throw IndexOutOfRange("probe index " + std::to_string(p) + " outside the field");
      series.push_back(f[p]);
    }
    out.push_back(std::move(series));
  }
  return out;
}

EvalReport rollout_eval(const PointForecaster& model, SchemeKind scheme,
                        const std::vector<std::vector<double>>& initial_history,
                        const std::vector<std::vector<double>>& ground_truth, double dt,
                        const std::vector<int>& probe_indices,
                        const std::optional<StrouhalConfig>& strouhal_cfg, int strouhal_probe) {
  const auto t0 = std::chrono::steady_clock::now();
  const int S = static_cast<int>(ground_truth.size());
  EvalReport report;
  report.horizon = S;
  report.per_step_mse.assign(S, kNan);

  RolloutState state(model.history_len(), initial_history, dt);
  std::vector<std::vector<double>> predictions;
  predictions.reserve(S);

  for (int s = 0; s < S; ++s) {
    const auto& pred = state.advance(scheme, model);
    if (!all_finite(pred)) {
      report.divergence_step = s;
      break;
    }
    predictions.push_back(pred);
    const auto& truth = ground_truth[s];
    double acc = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const double d = pred[i] - truth[i];
      acc += d * d;
    }
    report.per_step_mse[s] = acc / static_cast<double>(truth.size());
  }
  report.model_evals = state.model_evals();

  if (report.diverged()) {
    report.aggregate_mse = kNan;
  } else {
    double acc = 0.0;
    for (double m : report.per_step_mse) acc += m;
    report.aggregate_mse = S > 0 ? acc / S : 0.0;
  }

  if (!predictions.empty()) report.final_prediction = predictions.back();

  if (!probe_indices.empty() && !predictions.empty())
    report.probe_series = extract_probes(predictions, probe_indices);

  if (strouhal_cfg && !report.diverged()) {
    std::vector<double> series;
    if (!report.probe_series.empty() && strouhal_probe < static_cast<int>(report.probe_series.size()))
      series = report.probe_series[strouhal_probe];
    else if (!predictions.empty())
      series = extract_probes(predictions, {0})[0];
    if (static_cast<int>(series.size()) >= 16) report.strouhal = strouhal(series, *strouhal_cfg);
  }

  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

namespace {

nlohmann::json number_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string eval_report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["aggregate_mse"] = number_or_null(report.aggregate_mse);
  nlohmann::json steps = nlohmann::json::array();
  for (double m : report.per_step_mse) steps.push_back(number_or_null(m));
  j["per_step_mse"] = steps;
  if (!report.probe_series.empty()) j["probe_series"] = report.probe_series;
  if (report.strouhal) {
    j["strouhal"] = {{"st", report.strouhal->st},
                     {"f_d", report.strouhal->f_d},
                     {"bin_width", report.strouhal->bin_width},
                     {"flat", report.strouhal->flat}};
  }
  j["model_evals"] = report.model_evals;
  j["runtime_seconds"] = report.runtime_seconds;
  j["config_fingerprint"] = report.config_fingerprint;
  j["divergence_step"] = report.divergence_step;
  j["horizon"] = report.horizon;
  return j.dump(2);
}

std::string eval_report_csv_header() {
  return "aggregate_mse,divergence_step,horizon,model_evals,strouhal,f_d,bin_width,runtime_seconds,"
         "config_fingerprint";
}

std::string eval_report_csv_row(const EvalReport& report) {
  std::ostringstream os;
  os << csv_number(report.aggregate_mse) << ',' << report.divergence_step << ',' << report.horizon
     << ',' << report.model_evals << ',';
  if (report.strouhal)
    os << csv_number(report.strouhal->st) << ',' << csv_number(report.strouhal->f_d) << ','
       << csv_number(report.strouhal->bin_width);
  else
    os << ",,";
  os << ',' << csv_number(report.runtime_seconds) << ',' << report.config_fingerprint;
  return os.str();
}

}  // namespace arcast
