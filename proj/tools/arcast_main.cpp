// arcast: dataset generation, training sweeps, rollout evaluation and
// report rendering for auto-regressive PDE forecasters.

#include <cstdio>
#include <exception>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "arcast/config.hpp"
#include "arcast/errors.hpp"
#include "arcast/experiment.hpp"

namespace {

int default_jobs() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"auto-regressive PDE surrogate experiments"};
  app.require_subcommand(1);

  int jobs = default_jobs();
  std::uint64_t master_seed = 1000003;
  app.add_option("--jobs", jobs, "max parallel runs")->capture_default_str();
  app.add_option("--master-seed", master_seed, "seed fanned out to every run")
      ->capture_default_str();

  std::string config_path, out_dir, data_dir, runs_dir, results_dir;
  bool full_scale = false;

  auto* generate = app.add_subcommand("generate", "simulate and store a trajectory set");
  generate->add_option("--config", config_path, "experiment config JSON")->required();
  generate->add_option("--out", out_dir, "output directory")->required();
  generate->add_flag("--full-scale", full_scale, "use 50 samples regardless of the config");

  auto* train = app.add_subcommand("train", "train one model per sample, seed and sweep cell");
  train->add_option("--config", config_path, "experiment config JSON")->required();
  train->add_option("--data", data_dir, "directory holding the generated dataset")->required();
  train->add_option("--out", runs_dir, "output directory for runs")->required();
  train->add_flag("--full-scale", full_scale, "use 50 samples regardless of the config");

  auto* evaluate = app.add_subcommand("evaluate", "rollout-evaluate trained runs");
  evaluate->add_option("--config", config_path, "experiment config JSON")->required();
  evaluate->add_option("--runs", runs_dir, "directory produced by train")->required();
  evaluate->add_option("--out", results_dir, "output directory for results")->required();
  evaluate->add_flag("--full-scale", full_scale, "use 50 samples regardless of the config");

  auto* report = app.add_subcommand("report", "render SVG/CSV artifacts from results");
  report->add_option("--results", results_dir, "directory produced by evaluate")->required();
  report->add_option("--out", out_dir, "output directory for figures")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (report->parsed()) {
      arcast::cmd_report(results_dir, out_dir);
      return 0;
    }
    arcast::ExperimentConfig config = arcast::load_config(config_path);
    if (full_scale) config.dataset.n_samples = 50;

    if (generate->parsed()) {
      arcast::cmd_generate(config, out_dir);
    } else if (train->parsed()) {
      arcast::cmd_train(config, data_dir, runs_dir, jobs, master_seed);
    } else if (evaluate->parsed()) {
      const arcast::SweepSummary summary =
          arcast::cmd_evaluate(config, runs_dir, results_dir, jobs);
      for (const auto& cell : summary.cells) {
        std::printf("%s %s %s M=%d: mean MSE %.6g (sd %.3g), %d/%d divergent\n", cell.pde.c_str(),
                    arcast::to_string(cell.cell.scheme).c_str(),
                    arcast::to_string(cell.cell.strategy).c_str(), cell.cell.M, cell.mean_mse,
                    cell.std_mse, cell.train_divergences + cell.eval_divergences, cell.n_runs);
      }
    }
  } catch (const arcast::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected error: %s\n", e.what());
    return 1;
  }
  return 0;
}
