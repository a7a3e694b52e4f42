#include "arcast/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "arcast/errors.hpp"
#include "arcast/svg.hpp"
#include "json.hpp"

namespace arcast {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
    if (!out) throw IoError("cannot open " + tmp);
    out << content;
    if (!out) throw IoError("write failed for " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed for " + path + ": " + ec.message());
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// Fingerprint over the sections that shape training artifacts; the eval
// section may legitimately differ between train and evaluate invocations.
std::string train_fingerprint(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  c.eval = EvalSection{};
  return config_fingerprint(c);
}

std::string field_csv(int nx, int ny, const std::vector<double>& values) {
  std::ostringstream os;
  os << "nx,ny\n" << nx << ',' << ny << '\n';
  os.precision(17);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      if (i) os << ',';
      os << values[static_cast<std::size_t>(j) * nx + i];
    }
    os << '\n';
  }
  return os.str();
}

struct FieldCsv {
  int nx = 0, ny = 0;
  std::vector<double> values;
};

FieldCsv parse_field_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "nx,ny") throw FormatError("bad field csv header in " + path);
  FieldCsv f;
  char comma;
  in >> f.nx >> comma >> f.ny;
  std::getline(in, line);
  f.values.reserve(static_cast<std::size_t>(f.nx) * f.ny);
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string tok;
    while (std::getline(row, tok, ',')) f.values.push_back(std::stod(tok));
  }
  if (f.values.size() != static_cast<std::size_t>(f.nx) * f.ny)
    throw FormatError("field csv size mismatch in " + path);
  return f;
}

}  // namespace

std::vector<Cell> expand_cells(const TrainingSection& training) {
  std::vector<Cell> cells;
  for (const auto& scheme_name : training.schemes) {
    const SchemeKind scheme = scheme_from_string(scheme_name);
    for (int M : training.rollout_steps) {
      if (M == 1) {
        cells.push_back({scheme, Strategy::Single, 1});
        continue;
      }
      for (const auto& strategy_name : training.strategies) {
        const Strategy strategy = strategy_from_string(strategy_name);
        if (strategy == Strategy::Single) continue;
        cells.push_back({scheme, strategy, M});
      }
    }
  }
  if (cells.empty()) throw ConfigError("the requested axes expand to no sweep cells");
  return cells;
}

std::string cell_dir_name(const Cell& cell) {
  return to_string(cell.scheme) + "-" + to_string(cell.strategy) + "-M" + std::to_string(cell.M);
}

std::string run_dir_name(const RunCoord& coord) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%03d_r%d", coord.sample, coord.seed_index);
  return buf;
}

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

void cmd_generate(const ExperimentConfig& config, const std::string& out_dir) {
  validate(config);
  fs::create_directories(out_dir);
  const TrajectorySet set = generate_trajectory_set(config.pde_kind(), config.dataset.n_samples,
                                                    config.grid(), config.temporal(),
                                                    config.dataset.seed);
  const std::string base = (fs::path(out_dir) / config.dataset.pde).string();
  write_trajectory_set(set, base + ".arts");

  json manifest;
  manifest["pde"] = config.dataset.pde;
  manifest["n_samples"] = set.n_samples();
  manifest["nx"] = set.grid.nx;
  manifest["ny"] = set.grid.ny;
  manifest["t_start"] = set.temporal.t_start;
  manifest["t_end"] = set.temporal.t_end;
  manifest["n_snapshots"] = set.temporal.n_snapshots;
  manifest["seed"] = set.seed;
  json samples = json::array();
  for (int i = 0; i < set.n_samples(); ++i) {
    samples.push_back({{"index", i},
                       {"seed", set.sample_seeds[i]},
                       {"c_x", set.params[i].c_x},
                       {"c_y", set.params[i].c_y},
                       {"nu", set.params[i].nu}});
  }
  manifest["samples"] = samples;
  write_text_atomic(base + ".manifest.json", manifest.dump(2));
}

namespace {

RolloutPlan plan_for_cell(const ExperimentConfig& config, const Cell& cell) {
  RolloutPlan plan;
  plan.M = cell.M;
  plan.strategy = cell.strategy;
  plan.vanilla_first_weight = config.training.vanilla_first_weight;
  plan.vanilla_rest_weight = config.training.vanilla_rest_weight;
  plan.sigmoid_scale = config.training.sigmoid_scale;
  plan.k_init = config.training.k_init;
  plan.noise.std = config.training.noise_std;
  return plan;
}

json run_record_to_json(const RunRecord& r) {
  json j;
  j["pde"] = r.coord.pde;
  j["scheme"] = to_string(r.coord.cell.scheme);
  j["strategy"] = to_string(r.coord.cell.strategy);
  j["M"] = r.coord.cell.M;
  j["sample"] = r.coord.sample;
  j["seed_index"] = r.coord.seed_index;
  j["seed"] = r.seed;
  j["train_failed"] = r.train_failed;
  j["error"] = r.error;
  j["train_seconds"] = r.train_seconds;
  j["final_loss"] = std::isfinite(r.final_loss) ? json(r.final_loss) : json(nullptr);
  return j;
}

RunRecord run_record_from_json(const json& j) {
  RunRecord r;
  r.coord.pde = j.at("pde").get<std::string>();
  r.coord.cell.scheme = scheme_from_string(j.at("scheme").get<std::string>());
  r.coord.cell.strategy = strategy_from_string(j.at("strategy").get<std::string>());
  r.coord.cell.M = j.at("M").get<int>();
  r.coord.sample = j.at("sample").get<int>();
  r.coord.seed_index = j.at("seed_index").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.train_failed = j.at("train_failed").get<bool>();
  r.error = j.at("error").get<std::string>();
  r.train_seconds = j.at("train_seconds").get<double>();
  r.final_loss = j.at("final_loss").is_null() ? kNan : j.at("final_loss").get<double>();
  return r;
}

}  // namespace

void cmd_train(const ExperimentConfig& config, const std::string& data_dir,
               const std::string& runs_dir, int jobs, std::uint64_t master_seed) {
  validate(config);
  const std::string data_file = (fs::path(data_dir) / (config.dataset.pde + ".arts")).string();
  const TrajectorySet set = read_trajectory_set(data_file);
  if (set.grid != config.grid())
    throw ConfigError("dataset grid does not match the config");
  if (set.temporal != config.temporal())
    throw ConfigError("dataset temporal spec does not match the config");
  if (set.n_samples() < config.dataset.n_samples)
    throw ConfigError("dataset holds fewer samples than the config requests");

  fs::create_directories(runs_dir);
  const std::vector<Cell> cells = expand_cells(config.training);

  std::vector<RunCoord> coords;
  for (const Cell& cell : cells)
    for (int sample = 0; sample < config.dataset.n_samples; ++sample)
      for (int rep = 0; rep < config.training.repeats; ++rep)
        coords.push_back({config.dataset.pde, cell, sample, rep});

  json manifest;
  manifest["data_file"] = data_file;
  manifest["master_seed"] = master_seed;
  manifest["train_fingerprint"] = train_fingerprint(config);
  manifest["config"] = json::parse(config_to_json(config));
  write_text_atomic((fs::path(runs_dir) / "run_manifest.json").string(), manifest.dump(2));

  const WindowSpec wspec = config.window_spec();
  const int n_snapshots = config.dataset.n_snapshots;

  parallel_for(static_cast<int>(coords.size()), jobs, [&](int idx) {
    const RunCoord& coord = coords[idx];
    const fs::path dir =
        fs::path(runs_dir) / coord.pde / cell_dir_name(coord.cell) / run_dir_name(coord);
    fs::create_directories(dir);

    RunRecord record;
    record.coord = coord;
    record.seed = run_seed(master_seed, coord.pde, coord.sample, to_string(coord.cell.scheme),
                           to_string(coord.cell.strategy), coord.seed_index);

    Rng rng(record.seed);
    ModelParams model = init_model(config.mlp_spec(), rng);
    const std::uint64_t noise_seed = rng.fork_seed();
    OptimizerState optimizer =
        make_optimizer(model, config.model.optimizer.lr, config.model.optimizer.decay_factor,
                       config.model.optimizer.decay_every);
    optimizer.beta1 = config.model.optimizer.beta1;
    optimizer.beta2 = config.model.optimizer.beta2;
    optimizer.eps = config.model.optimizer.eps;

    const auto t0 = std::chrono::steady_clock::now();
    try {
      const std::vector<Window> windows =
          build_windows(n_snapshots, wspec, coord.cell.M, Split::Train);
      const RolloutPlan plan = plan_for_cell(config, coord.cell);
      const TrainOptions options{config.training.epochs};
      const TrainLog log = train(model, optimizer, coord.cell.scheme,
                                 set.trajectories[coord.sample], windows, plan, options, noise_seed);
      record.final_loss = log.epochs.empty() ? kNan : log.epochs.back().total_loss;
      write_model(model, (dir / "model.arpm").string());
      write_train_log_csv(log, (dir / "train_log.csv").string());
    } catch (const Error& e) {
      record.train_failed = true;
      record.error = e.what();
    }
    record.train_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_text_atomic((dir / "run.json").string(), run_record_to_json(record).dump(2));
  });
}

std::string sweep_summary_csv_header() {
  return "pde,scheme,strategy,M,n_runs,mean_mse,std_mse,train_divergences,eval_divergences";
}

SweepSummary cmd_evaluate(const ExperimentConfig& config, const std::string& runs_dir,
                          const std::string& results_dir, int jobs) {
  validate(config);
  const std::string manifest_path = (fs::path(runs_dir) / "run_manifest.json").string();
  json manifest = json::parse(read_text(manifest_path));
  if (manifest.at("train_fingerprint").get<std::string>() != train_fingerprint(config))
    throw ConfigError("config does not match the one the runs were trained with");

  const TrajectorySet set = read_trajectory_set(manifest.at("data_file").get<std::string>());
  fs::create_directories(results_dir);

  const std::vector<Cell> cells = expand_cells(config.training);
  std::vector<RunCoord> coords;
  for (const Cell& cell : cells)
    for (int sample = 0; sample < config.dataset.n_samples; ++sample)
      for (int rep = 0; rep < config.training.repeats; ++rep)
        coords.push_back({config.dataset.pde, cell, sample, rep});

  const WindowSpec wspec = config.window_spec();
  const int n_snapshots = config.dataset.n_snapshots;
  const int split_idx = split_index(wspec, n_snapshots);
  const int N = config.training.history_len;
  const double dt = config.temporal().snapshot_dt();

  std::optional<StrouhalConfig> strouhal_cfg;
  if (config.eval.strouhal) {
    StrouhalConfig sc;
    sc.diameter = config.eval.strouhal->diameter;
    sc.u_inf = config.eval.strouhal->u_inf;
    sc.dt = config.eval.strouhal->dt > 0.0 ? config.eval.strouhal->dt : dt;
    strouhal_cfg = sc;
  }

  const std::string fingerprint = config_fingerprint(config);
  std::vector<EvalRunRecord> records(coords.size());

  parallel_for(static_cast<int>(coords.size()), jobs, [&](int idx) {
    const RunCoord& coord = coords[idx];
    const fs::path run_dir =
        fs::path(runs_dir) / coord.pde / cell_dir_name(coord.cell) / run_dir_name(coord);
    const fs::path out_dir =
        fs::path(results_dir) / coord.pde / cell_dir_name(coord.cell);
    fs::create_directories(out_dir);

    const RunRecord trained = run_record_from_json(json::parse(read_text((run_dir / "run.json").string())));
    EvalRunRecord rec;
    rec.coord = coord;
    rec.seed = trained.seed;
    rec.train_failed = trained.train_failed;
    rec.train_seconds = trained.train_seconds;
    rec.aggregate_mse = kNan;

    if (!trained.train_failed) {
      const ModelParams model = read_model((run_dir / "model.arpm").string());
      const MlpForecaster forecaster(model);
      const Trajectory& traj = set.trajectories[coord.sample];

      // Seed with N+1 true snapshots so the Adams-Euler startup derivative
      // is the exact shifted-window evaluation.
      const int n_seed = std::min(split_idx, N + 1);
      std::vector<std::vector<double>> history;
      history.reserve(n_seed);
      for (int t = split_idx - n_seed; t < split_idx; ++t) history.push_back(traj.snapshot(t));

      int S = n_snapshots - split_idx;
      if (config.eval.horizon > 0) S = std::min(S, config.eval.horizon);
      std::vector<std::vector<double>> truth(traj.snapshots.begin() + split_idx,
                                             traj.snapshots.begin() + split_idx + S);

      EvalReport report = rollout_eval(forecaster, coord.cell.scheme, history, truth, dt,
                                       config.eval.probes, strouhal_cfg);
      report.config_fingerprint = fingerprint;
      rec.aggregate_mse = report.aggregate_mse;
      rec.divergence_step = report.divergence_step;
      rec.model_evals = report.model_evals;
      if (report.strouhal) rec.strouhal_st = report.strouhal->st;

      write_text_atomic((out_dir / (run_dir_name(coord) + ".eval.json")).string(),
                        eval_report_to_json(report));

      // Representative artifacts for the report command: first run of the cell.
      if (coord.sample == 0 && coord.seed_index == 0) {
        if (!report.diverged() && !truth.empty()) {
          if (!report.final_prediction.empty())
            write_text_atomic((out_dir / "final_field.csv").string(),
                              field_csv(set.grid.nx, set.grid.ny, report.final_prediction));
          write_text_atomic((out_dir / "truth_final.csv").string(),
                            field_csv(set.grid.nx, set.grid.ny, truth.back()));
        }
        std::error_code ec;
        fs::copy_file(run_dir / "train_log.csv", out_dir / "train_log.csv",
                      fs::copy_options::overwrite_existing, ec);
      }
    }
    records[idx] = rec;
  });

  // Aggregate cells in a deterministic order.
  SweepSummary summary;
  summary.runs = records;
  for (const Cell& cell : cells) {
    CellSummary cs;
    cs.pde = config.dataset.pde;
    cs.cell = cell;
    cs.sample_mean_mse.assign(config.dataset.n_samples, kNan);
    std::vector<double> finite;
    double seconds = 0.0;
    int seconds_n = 0;
    for (int sample = 0; sample < config.dataset.n_samples; ++sample) {
      std::vector<double> sample_finite;
      for (const auto& rec : records) {
        if (rec.coord.cell.scheme != cell.scheme || rec.coord.cell.strategy != cell.strategy ||
            rec.coord.cell.M != cell.M || rec.coord.sample != sample)
          continue;
        ++cs.n_runs;
        if (rec.train_failed) {
          ++cs.train_divergences;
        } else {
          seconds += rec.train_seconds;
          ++seconds_n;
          if (rec.divergence_step >= 0) ++cs.eval_divergences;
        }
        if (!rec.train_failed && std::isfinite(rec.aggregate_mse)) {
          finite.push_back(rec.aggregate_mse);
          sample_finite.push_back(rec.aggregate_mse);
        }
      }
      if (!sample_finite.empty()) {
        double s = 0;
        for (double v : sample_finite) s += v;
        cs.sample_mean_mse[sample] = s / sample_finite.size();
      }
    }
    if (!finite.empty()) {
      double s = 0;
      for (double v : finite) s += v;
      cs.mean_mse = s / finite.size();
      double var = 0;
      for (double v : finite) var += (v - cs.mean_mse) * (v - cs.mean_mse);
      cs.std_mse = finite.size() > 1 ? std::sqrt(var / (finite.size() - 1)) : 0.0;
    } else {
      cs.mean_mse = kNan;
      cs.std_mse = kNan;
    }
    cs.mean_train_seconds = seconds_n > 0 ? seconds / seconds_n : 0.0;
    summary.cells.push_back(std::move(cs));
  }

  std::ostringstream table;
  table << sweep_summary_csv_header() << '\n';
  for (const auto& cs : summary.cells) {
    table << cs.pde << ',' << to_string(cs.cell.scheme) << ',' << to_string(cs.cell.strategy) << ','
          << cs.cell.M << ',' << cs.n_runs << ',' << csv_number(cs.mean_mse) << ','
          << csv_number(cs.std_mse) << ',' << cs.train_divergences << ',' << cs.eval_divergences
          << '\n';
  }
  write_text_atomic((fs::path(results_dir) / "sweep_summary.csv").string(), table.str());

  std::ostringstream timings;
  timings << "pde,scheme,strategy,M,mean_train_seconds\n";
  for (const auto& cs : summary.cells)
    timings << cs.pde << ',' << to_string(cs.cell.scheme) << ',' << to_string(cs.cell.strategy)
            << ',' << cs.cell.M << ',' << csv_number(cs.mean_train_seconds) << '\n';
  write_text_atomic((fs::path(results_dir) / "sweep_timings.csv").string(), timings.str());

  // One flat row per run for cross-run tables.
  std::ostringstream runs_csv;
  runs_csv << "pde,scheme,strategy,M,sample,seed_index,seed,train_failed,train_seconds,"
              "aggregate_mse,divergence_step,model_evals,strouhal\n";
  for (const auto& rec : summary.runs) {
    runs_csv << rec.coord.pde << ',' << to_string(rec.coord.cell.scheme) << ','
             << to_string(rec.coord.cell.strategy) << ',' << rec.coord.cell.M << ','
             << rec.coord.sample << ',' << rec.coord.seed_index << ',' << rec.seed << ','
             << (rec.train_failed ? 1 : 0) << ',' << csv_number(rec.train_seconds) << ','
             << csv_number(rec.aggregate_mse) << ',' << rec.divergence_step << ','
             << rec.model_evals << ',';
    if (rec.strouhal_st) runs_csv << csv_number(*rec.strouhal_st);
    runs_csv << '\n';
  }
  write_text_atomic((fs::path(results_dir) / "runs.csv").string(), runs_csv.str());

  return summary;
}

void cmd_report(const std::string& results_dir, const std::string& figs_dir) {
  if (!fs::exists(fs::path(results_dir) / "sweep_summary.csv"))
    throw NoResults("no sweep_summary.csv under " + results_dir);

  // pde -> cell dir name -> cell path
  std::map<std::string, std::vector<fs::path>> cells_by_pde;
  for (const auto& pde_entry : fs::directory_iterator(results_dir)) {
    if (!pde_entry.is_directory()) continue;
    for (const auto& cell_entry : fs::directory_iterator(pde_entry.path()))
      if (cell_entry.is_directory()) cells_by_pde[pde_entry.path().filename().string()].push_back(cell_entry.path());
  }
  if (cells_by_pde.empty()) throw NoResults("no per-run results under " + results_dir);
  for (auto& [pde, cell_dirs] : cells_by_pde) std::sort(cell_dirs.begin(), cell_dirs.end());

  fs::create_directories(figs_dir);

  for (const auto& [pde, cell_dirs] : cells_by_pde) {
    SvgLinePlot mse_plot("Time-varying rollout MSE: " + pde, "rollout step", "MSE");
    mse_plot.set_log_y(true);
    std::ostringstream mse_csv;
    mse_csv << "cell,step,mean_mse\n";
    bool mse_any = false;

    for (const fs::path& cell_dir : cell_dirs) {
      const std::string cell = cell_dir.filename().string();

      // (a) final-snapshot contours.
      if (fs::exists(cell_dir / "final_field.csv") && fs::exists(cell_dir / "truth_final.csv")) {
        const FieldCsv pred = parse_field_csv((cell_dir / "final_field.csv").string());
        const FieldCsv truth = parse_field_csv((cell_dir / "truth_final.csv").string());
        std::vector<double> err(pred.values.size());
        for (std::size_t i = 0; i < err.size(); ++i) err[i] = pred.values[i] - truth.values[i];
        write_heatmap_svg((fs::path(figs_dir) / ("fields_" + pde + "_" + cell + ".svg")).string(),
                          pde + " " + cell + ": final test snapshot", pred.nx, pred.ny,
                          {truth.values, pred.values, err}, {"ground truth", "prediction", "error"});
        write_text_atomic((fs::path(figs_dir) / ("fields_" + pde + "_" + cell + ".csv")).string(),
                          field_csv(pred.nx, pred.ny, pred.values));
      }

      // (b) adaptive-weight evolution from the representative train log.
      if (fs::exists(cell_dir / "train_log.csv")) {
        std::ifstream log((cell_dir / "train_log.csv").string());
        std::string header;
        std::getline(log, header);
        std::vector<std::string> cols;
        {
          std::istringstream hs(header);
          std::string tok;
          while (std::getline(hs, tok, ',')) cols.push_back(tok);
        }
        std::vector<std::vector<double>> data(cols.size());
        std::string line;
        while (std::getline(log, line)) {
          std::istringstream ls(line);
          std::string tok;
          std::size_t c = 0;
          while (std::getline(ls, tok, ',') && c < cols.size()) data[c++].push_back(std::stod(tok));
        }
        int m_cols = 0;
        for (const auto& name : cols)
          if (name.rfind("w_", 0) == 0) ++m_cols;
        if (!data.empty() && !data[0].empty() && m_cols >= 2) {
          SvgLinePlot wplot("Adaptive weight evolution: " + pde + " " + cell, "epoch", "value");
          std::ostringstream wcsv;
          wcsv << "epoch";
          for (int i = 0; i < m_cols; ++i) wcsv << ",w_" << (i + 1);
          wcsv << ",k_e\n";
          const auto& epochs = data[0];
          for (int i = 0; i < m_cols; ++i) wplot.add_series(cols[2 + i], epochs, data[2 + i]);
          // k_e column sits right after k.
          const int ke_col = 2 + m_cols + 1;
          wplot.add_series("k_e", epochs, data[ke_col]);
          for (std::size_t r = 0; r < epochs.size(); ++r) {
            wcsv << epochs[r];
            for (int i = 0; i < m_cols; ++i) wcsv << ',' << data[2 + i][r];
            wcsv << ',' << data[ke_col][r] << '\n';
          }
          wplot.write((fs::path(figs_dir) / ("weights_" + pde + "_" + cell + ".svg")).string());
          write_text_atomic((fs::path(figs_dir) / ("weights_" + pde + "_" + cell + ".csv")).string(),
                            wcsv.str());
        }
      }

      // (c) mean per-step MSE across the cell's finite runs.
      std::vector<double> step_sum;
      std::vector<long> step_count;
      for (const auto& entry : fs::directory_iterator(cell_dir)) {
        if (entry.path().extension() != ".json") continue;
        if (entry.path().filename().string().find(".eval.") == std::string::npos) continue;
        const json j = json::parse(read_text(entry.path().string()));
        if (j.at("divergence_step").get<int>() >= 0) continue;
        const auto& steps = j.at("per_step_mse");
        if (step_sum.size() < steps.size()) {
          step_sum.resize(steps.size(), 0.0);
          step_count.resize(steps.size(), 0);
        }
        for (std::size_t s = 0; s < steps.size(); ++s) {
          if (steps[s].is_null()) continue;
          step_sum[s] += steps[s].get<double>();
          ++step_count[s];
        }
      }
      if (!step_sum.empty()) {
        std::vector<double> xs, ys;
        for (std::size_t s = 0; s < step_sum.size(); ++s) {
          if (step_count[s] == 0) continue;
          xs.push_back(static_cast<double>(s + 1));
          ys.push_back(step_sum[s] / step_count[s]);
          mse_csv << cell << ',' << (s + 1) << ',' << csv_number(ys.back()) << '\n';
        }
        mse_plot.add_series(cell, xs, ys);
        mse_any = true;
      }
    }

    if (mse_any) {
      mse_plot.write((fs::path(figs_dir) / ("mse_" + pde + ".svg")).string());
      write_text_atomic((fs::path(figs_dir) / ("mse_" + pde + ".csv")).string(), mse_csv.str());
    }
  }
}

}  // namespace arcast
