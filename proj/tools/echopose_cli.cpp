// Experiment CLI: dataset generation, training runs, the variance-reduction
// sweep, the ablation grid, standalone evaluation and plot-data emission.
//
// Worker count for the OpenMP kernels comes from ECHOPOSE_WORKERS when set.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "echopose/harness.hpp"
#include "echopose/parallel.hpp"

using namespace echopose;

int main(int argc, char** argv) {
  init_workers_from_env();

  CLI::App app{"echopose: privileged-task pose-chain reconstruction at desk "
               "scale"};
  app.require_subcommand(1);

  // --- gen-data ---
  std::string gen_config_path, gen_out;
  uint64_t gen_seed = 0;
  bool gen_force = false;
  CLI::App* gen = app.add_subcommand("gen-data", "generate a phantom dataset");
  gen->add_option("--config", gen_config_path, "gen config JSON");
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--seed", gen_seed, "master data seed");
  gen->add_flag("--force", gen_force, "overwrite a non-empty directory");

  // --- train ---
  std::string train_config_path, train_out, train_data;
  uint64_t train_seed = 0;
  bool train_seed_set = false;
  CLI::App* train = app.add_subcommand("train", "single training run");
  train->add_option("--config", train_config_path, "run config JSON")
      ->required();
  train->add_option("--out", train_out, "output directory override");
  train->add_option("--data", train_data, "dataset directory override");
  train
      ->add_option_function<uint64_t>(
          "--seed",
          [&](uint64_t v) {
            train_seed = v;
            train_seed_set = true;
          },
          "seed override")
      ->expected(1);

  // --- eval ---
  std::string eval_ckpt, eval_data, eval_out;
  uint64_t eval_split_seed = 0;
  harness::EvalSettings eval_settings;
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--checkpoint", eval_ckpt)->required();
  eval->add_option("--data", eval_data)->required();
  eval->add_option("--split-seed", eval_split_seed, "scan split seed")
      ->required();
  eval->add_option("--out", eval_out, "report JSON path")->required();
  eval->add_option("--stride", eval_settings.pixel_stride);
  eval->add_option("--voxel", eval_settings.voxel_size_mm);

  // --- variance-sweep ---
  std::string sweep_plan_path, sweep_out;
  uint64_t sweep_seed = 0;
  CLI::App* sweep =
      app.add_subcommand("variance-sweep", "train/evaluate per variance mode");
  sweep->add_option("--config", sweep_plan_path, "sweep plan JSON")
      ->required();
  sweep->add_option("--out", sweep_out)->required();
  sweep->add_option("--seed", sweep_seed, "master seed");

  // --- ablation ---
  std::string abl_plan_path, abl_out;
  uint64_t abl_seed = 0;
  CLI::App* abl = app.add_subcommand(
      "ablation", "no-branch vs 3-class vs 6-class grid with t-tests");
  abl->add_option("--config", abl_plan_path, "ablation plan JSON")->required();
  abl->add_option("--out", abl_out)->required();
  abl->add_option("--seed", abl_seed, "master seed");

  // --- plot-data ---
  std::vector<std::string> plot_runs;
  std::string plot_out;
  CLI::App* plot =
      app.add_subcommand("plot-data", "emit plot-ready CSVs from run dirs");
  plot->add_option("--runs", plot_runs, "run directories")->required();
  plot->add_option("--out", plot_out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      harness::GenConfig cfg;
      if (!gen_config_path.empty())
        cfg = harness::gen_config_from_json_file(gen_config_path);
      harness::cmd_gen_data(cfg, gen_out, gen_seed, gen_force);
      std::cout << "wrote dataset to " << gen_out << "\n";
    } else if (train->parsed()) {
      training::RunConfig cfg =
          training::run_config_from_json_file(train_config_path);
      if (!train_out.empty()) cfg.out_dir = train_out;
      if (!train_data.empty()) cfg.dataset_dir = train_data;
      if (train_seed_set) cfg.seed = train_seed;
      harness::EvalSettings ev;
      const harness::RunOutcome outcome = harness::run_training(cfg, ev);
      std::cout << "run complete; summary at " << outcome.summary_path << "\n";
    } else if (eval->parsed()) {
      harness::run_eval(eval_ckpt, eval_data, eval_split_seed, eval_settings,
                        eval_out);
      std::cout << "report written to " << eval_out << "\n";
    } else if (sweep->parsed()) {
      const harness::SweepPlan plan =
          harness::sweep_plan_from_json_file(sweep_plan_path);
      const int failed =
          harness::cmd_variance_sweep(plan, sweep_out, sweep_seed);
      if (failed) {
        std::cerr << failed << " sweep cell(s) failed\n";
        return 1;
      }
    } else if (abl->parsed()) {
      const harness::AblationPlan plan =
          harness::ablation_plan_from_json_file(abl_plan_path);
      const int failed = harness::cmd_ablation(plan, abl_out, abl_seed);
      if (failed) {
        std::cerr << failed << " ablation cell(s) failed\n";
        return 1;
      }
    } else if (plot->parsed()) {
      harness::cmd_plot_data(plot_runs, plot_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
