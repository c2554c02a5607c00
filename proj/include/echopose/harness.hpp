#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "echopose/evaluation.hpp"
#include "echopose/training.hpp"

namespace echopose::harness {

// ---------------------------------------------------------------------------
// dataset generation
// ---------------------------------------------------------------------------

struct GenConfig {
  int n_subjects = 10;
  int forearms_per_subject = 2;  // fields per subject sharing the class label
  int image_h = 64, image_w = 64;
  double spacing_mm = 0.5;
  int n_frames_min = 28, n_frames_max = 56;
  double path_length_min_mm = 40.0, path_length_max_mm = 80.0;
  int k_blobs = 80;
  phantom::Box field_extent{{-60.0, -60.0, -25.0}, {60.0, 60.0, 105.0}};
  double speckle_sigma = 0.10;
  double wobble_rot_sigma = 0.004;
  double wobble_trans_sigma = 0.08;
  double c_turn_min_rad = 0.9, c_turn_max_rad = 1.3;    // C final tangent turn
  double s_turn_min_rad = 0.45, s_turn_max_rad = 0.65;  // S mid-path turn
  double start_translation_mm = 15.0;
  double start_tilt_rad = 0.1;
};

GenConfig gen_config_from_json_file(const std::string& path);
std::string gen_config_to_json(const GenConfig& cfg);

// Writes n_subjects * forearms_per_subject * 6 scan files plus manifest.json.
// Refuses a non-empty output directory unless force is set.
void cmd_gen_data(const GenConfig& cfg, const std::string& out_dir,
                  uint64_t seed, bool force);

// ---------------------------------------------------------------------------
// single run (train + evaluate): the unit the grids are made of
// ---------------------------------------------------------------------------

struct EvalSettings {
  int pixel_stride = 4;
  double voxel_size_mm = 1.0;
};

struct RunOutcome {
  training::TrainResult train;
  evaluation::MetricsReport soft;      // best soft-mixture checkpoint
  evaluation::MetricsReport headline;  // finalized (one-hot fine-tuned) model
  std::string summary_path;
};

// Trains per cfg, evaluates both checkpoints on the test split, and writes
// summary.json (deterministic content) into cfg.out_dir.
RunOutcome run_training(const training::RunConfig& cfg,
                        const EvalSettings& eval);

// Evaluate an existing checkpoint against a dataset's test split.
evaluation::MetricsReport run_eval(const std::string& checkpoint,
                                   const std::string& dataset_dir,
                                   uint64_t split_seed,
                                   const EvalSettings& eval,
                                   const std::string& report_json_out);

// ---------------------------------------------------------------------------
// study grids
// ---------------------------------------------------------------------------

struct SweepPlan {
  std::string dataset_dir;
  std::vector<std::string> modes;  // default: all eight variance modes
  std::vector<uint64_t> seeds{1, 2, 3};
  training::RunConfig base;  // no_branch is forced on per cell
  EvalSettings eval;
};

SweepPlan sweep_plan_from_json_file(const std::string& path);

// Trains one main-task-only model per (mode, seed), evaluates on the common
// test split, writes sweep_table.csv / sweep_summary.json / plot data.
// Returns the number of failed cells (training errors are recorded per cell
// and the remaining cells continue).
int cmd_variance_sweep(const SweepPlan& plan, const std::string& out_dir,
                       uint64_t master_seed);

struct AblationPlan {
  std::string dataset_dir;
  std::vector<std::string> cells{"no-branch", "3-class", "6-class"};
  std::vector<int> m_values{8};
  std::vector<uint64_t> seeds{1, 2, 3};
  training::RunConfig base;
  EvalSettings eval;
};

AblationPlan ablation_plan_from_json_file(const std::string& path);

// The ablation grid: {no-branch, 3-class, 6-class} x M x seeds, four metrics
// per cell plus unpaired t-tests vs the same-M no-branch baseline. Writes
// ablation_table.csv / ablation_summary.json. Returns failed cell count.
int cmd_ablation(const AblationPlan& plan, const std::string& out_dir,
                 uint64_t master_seed);

// Re-emits plot-ready CSVs (descriptor traces with the best-epoch marker,
// per-scan metric tables) from completed run directories.
void cmd_plot_data(const std::vector<std::string>& run_dirs,
                   const std::string& out_dir);

}  // namespace echopose::harness
