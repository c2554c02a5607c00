#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "echopose/dataset.hpp"
#include "echopose/geometry.hpp"
#include "echopose/model.hpp"
#include "echopose/nn.hpp"

namespace echopose::training {

using geometry::FrameGeometry;
using geometry::RigidTransform;
using nn::Tensor;

// ---------------------------------------------------------------------------
// losses
// ---------------------------------------------------------------------------

struct LossBundle {
  double rec = 0.0;  // mm
  double ce1 = 0.0;  // nats
  double ce2 = 0.0;  // nats
  // the three tasks are weighed equally
  double total() const { return rec + ce1 + ce2; }
};

inline constexpr double kProbFloor = 1e-12;

// -sum(t * log(y + eps)), averaged over the batch. probs rows must sum to 1
// within 1e-4 (ContractViolationError otherwise).
double loss_ce(const Tensor& probs, const std::vector<int>& target_class);
double loss_ce_grad(const Tensor& probs, const std::vector<int>& target_class,
                    Tensor& d_probs);

// Mean over transform pairs and over the 4 frame corners of the Euclidean
// distance between gt-transformed and prediction-transformed corners.
double loss_rec(const std::vector<RigidTransform>& pred_rels,
                const std::vector<RigidTransform>& gt_rels,
                const FrameGeometry& geometry);

// Differentiable form over raw head outputs y (batch x 6(M-1));
// gradients are written to dy (same shape, overwritten).
double loss_rec_grad(const Tensor& y,
                     const std::vector<std::vector<RigidTransform>>& gt_rels,
                     const FrameGeometry& geometry, Tensor* dy);

// ---------------------------------------------------------------------------
// batches
// ---------------------------------------------------------------------------

struct Batch {
  Tensor x;  // B, M, H, W (frame intensities shifted by -0.5)
  std::vector<std::vector<RigidTransform>> targets;  // B x (M-1)
  std::vector<int> subject_class;                    // B (t^a_1)
  std::vector<int> protocol_class;                   // B (t^a_2)
  FrameGeometry geometry;
  int size() const { return x.shape.empty() ? 0 : x.shape[0]; }
};

Batch make_batch(const std::vector<dataset::SequenceSample>& samples);

// Forward + losses + requested gradients in one pass (grads are zeroed
// first). Used by both bi-level steps, the gradient checks and the tests.
LossBundle compute_losses_and_grads(model::Model& net, const Batch& batch,
                                    bool with_aux, bool want_theta,
                                    bool want_alpha);

// ---------------------------------------------------------------------------
// bi-level optimisation
// ---------------------------------------------------------------------------

struct BiLevelConfig {
  nn::AdamConfig inner{};          // network parameters; lr default 1e-4
  nn::AdamConfig outer{.lr = 3e-4};  // task descriptors
  double xi = 0.0;                 // first-order only; nonzero is rejected
  int batch_size = 8;
  int max_epochs = 300;
  int validation_cadence = 1;
  double divergence_threshold = 1e6;
  void validate() const;
};

struct TrainState {
  model::Model net;
  nn::Adam inner_opt;
  nn::Adam outer_opt;
  bool aux_enabled = false;
  int epoch = 0;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  // z per epoch per task, for descriptor-trend traces
  std::vector<std::array<std::vector<double>, 2>> z_history;

  TrainState(model::Model m, const BiLevelConfig& cfg, bool aux);
};

struct StepResult {
  LossBundle train;
  double val_total = 0.0;  // monitored value from step (2); 0 when skipped
};

// Step (1): descend the network parameters on the training batch with the
// descriptors held constant. Step (2): descend the descriptors on the
// validation batch with the network parameters held constant (xi = 0).
// Throws DivergenceError (with no checkpoint path) on non-finite/blown loss.
StepResult bilevel_step(TrainState& state, const Batch& train_batch,
                        const Batch& val_batch, const BiLevelConfig& cfg);

// ---------------------------------------------------------------------------
// full training run
// ---------------------------------------------------------------------------

// Run config, read from JSON (see README for the schema). Desk-scale
// defaults; the optimizer fields override the BiLevelConfig defaults.
struct RunConfig {
  std::string dataset_dir;
  std::string out_dir;
  uint64_t seed = 0;
  uint64_t split_seed = 0;  // 0 -> derived from seed; shared across a grid
  int sequence_length = 8;  // M
  int n_protocol_classes = 6;
  std::string variance_mode = "All";
  bool no_branch = false;
  int batch_size = 8;
  int epochs = 240;
  int finetune_epochs = 60;  // one-hot fine-tune after branch finalisation
  double inner_lr = 1e-3;
  double outer_lr = 3e-3;
  std::vector<int> channels = {8, 16, 24, 32};
  std::string activation = "relu";
  double divergence_threshold = 1e6;
};

RunConfig run_config_from_json_file(const std::string& path);
RunConfig run_config_from_json_string(const std::string& text);
std::string run_config_to_json(const RunConfig& cfg);

struct TrainResult {
  std::string best_checkpoint;       // best-validation soft-mixture model
  std::string final_checkpoint;      // headline model (one-hot fine-tuned)
  int best_epoch = -1;
  double best_val = 0.0;
  double finetune_best_val = 0.0;
  std::array<int, 2> branch_taps{-1, -1};  // 0-based; -1 for no-branch
  int n_train_scans = 0, n_val_scans = 0, n_test_scans = 0;
  std::vector<std::string> skipped_scans;
  std::string log_csv;
  std::string summary_json;
};

// Full run: split, variance subset, epoch loop with per-epoch validation
// selection, checkpointing, branch finalisation and optional one-hot
// fine-tune. Writes log.csv and train_summary.json under cfg.out_dir.
// preloaded, when given, skips re-reading the dataset from disk.
TrainResult train(const RunConfig& cfg,
                  const std::vector<phantom::ScanRecord>* preloaded = nullptr);

uint64_t effective_split_seed(const RunConfig& cfg);

}  // namespace echopose::training
