#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "echopose/geometry.hpp"
#include "echopose/nn.hpp"

namespace echopose::model {

using nn::Activation;
using nn::ParamView;
using nn::Tensor;

// Shared backbone: a stack of stride-2 conv blocks. One tap point follows
// each block (global-average-pooled features); the main regression head
// consumes the last tap, and each auxiliary task owns one single-layer
// classification head per tap.
struct BackboneConfig {
  int input_frames = 8;  // M, stacked as input channels
  int image_h = 64;
  int image_w = 64;
  std::vector<int> channels = {8, 16, 24, 32};
  Activation activation = Activation::ReLU;
  bool with_branches = true;
  int n_subject_classes = 0;   // N_1 (task 1), required when with_branches
  int n_protocol_classes = 0;  // N_2 in {3, 6} (task 2)

  int n_blocks() const { return static_cast<int>(channels.size()); }
  int main_outputs() const { return 6 * (input_frames - 1); }
  int n_classes(int task) const {
    return task == 0 ? n_subject_classes : n_protocol_classes;
  }
  void validate() const;
};

struct ModelOutput {
  // main regression values, batch x 6(M-1)
  Tensor y;
  // per task: batch x I x N_j per-branch probabilities
  std::array<Tensor, 2> branch_probs;
  // per task: batch x N_j mixed probabilities (branch_probs · z)
  std::array<Tensor, 2> mixed;
  // location weights used for the mixture
  std::array<std::vector<double>, 2> z;
  bool has_aux = false;
};

// argmax of softmax(alpha) per task, ties toward the smaller tap index.
std::array<int, 2> finalize_branches(const std::vector<double>& alpha_1,
                                     const std::vector<double>& alpha_2);

// softmax with max subtraction
std::vector<double> descriptor_weights(const std::vector<double>& alpha);

class Model {
 public:
  Model(BackboneConfig cfg, uint64_t init_seed);

  const BackboneConfig& config() const { return cfg_; }

  // x: [B, M, H, W]. Caches activations for backward.
  ModelOutput forward(const Tensor& x, bool want_aux = true);

  // Accumulates parameter gradients from loss gradients. dy_main is
  // batch x 6(M-1); d_mixed[j] is batch x N_j (may be empty to skip a task).
  // want_theta covers backbone + heads; want_alpha covers the descriptors.
  void backward(const Tensor& dy_main, const std::array<Tensor, 2>& d_mixed,
                bool want_theta = true, bool want_alpha = true);

  // Mixture weights for one task: softmax(alpha) or the finalized one-hot.
  std::vector<double> z(int task) const;
  const std::vector<double>& alpha(int task) const { return alpha_[task]; }
  void set_alpha(int task, std::vector<double> a);

  // Switches the task descriptors to exact one-hot gating at the given taps.
  void finalize(const std::array<int, 2>& taps);
  std::optional<std::array<int, 2>> finalized() const { return finalized_; }

  std::vector<ParamView> theta_params();  // backbone + main + branch heads
  std::vector<ParamView> alpha_params();
  std::vector<ParamView> all_params();
  void zero_grads();

  // Inference path for the main task only: reshapes y into M-1 six-parameter
  // transforms per batch row. No auxiliary computation runs.
  std::vector<std::vector<geometry::RigidTransform>> predict_relative_poses(
      const Tensor& x);

  void save_checkpoint(const std::string& path, int epoch,
                       const std::string& extra_json = "") const;
  struct CheckpointMeta {
    int epoch = 0;
    std::optional<std::array<int, 2>> finalized;
    std::string extra_json;
  };
  static Model load_checkpoint(const std::string& path,
                               CheckpointMeta* meta = nullptr);

  // raw parameter access for tests
  Tensor& conv_w(int block) { return conv_w_[block].value; }
  Tensor& conv_b(int block) { return conv_b_[block].value; }
  Tensor& main_w() { return main_w_.value; }
  Tensor& main_b() { return main_b_.value; }
  Tensor& head_w(int task, int tap) { return head_w_[task][tap].value; }
  Tensor& head_b(int task, int tap) { return head_b_[task][tap].value; }

 private:
  struct Param {
    Tensor value, grad;
  };

  void init_params(uint64_t seed);
  nn::Conv2dShape block_shape(int block, int batch) const;

  BackboneConfig cfg_;
  std::vector<Param> conv_w_, conv_b_;
  Param main_w_, main_b_;
  std::array<std::vector<Param>, 2> head_w_, head_b_;
  std::array<std::vector<double>, 2> alpha_;
  std::array<std::vector<double>, 2> alpha_grad_;
  std::optional<std::array<int, 2>> finalized_;

  // forward cache
  struct Cache {
    int batch = 0;
    bool has_aux = false;
    Tensor input;                       // B,M,H,W
    std::vector<Tensor> pre_act;        // per block, B,C,H',W'
    std::vector<Tensor> post_act;       // per block
    std::vector<Tensor> pooled;         // per block, B,C
    std::vector<Tensor> pooled_norm;    // per block, B,C (aux head inputs)
    std::vector<Tensor> norm_inv_std;   // per block, B
    std::array<Tensor, 2> branch_probs; // B,I,N_j
    std::array<std::vector<double>, 2> z;
  } cache_;
};

}  // namespace echopose::model
