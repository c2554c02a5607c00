#include "echopose/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "echopose/errors.hpp"
#include "echopose/rng.hpp"

namespace echopose::model {

using json = nlohmann::json;
using nn::Conv2dShape;

void BackboneConfig::validate() const {
  if (input_frames < 2)
    throw InvalidParameterError("BackboneConfig: input_frames must be >= 2");
  if (image_h < 8 || image_w < 8)
    throw InvalidParameterError("BackboneConfig: image too small");
  if (channels.empty())
    throw InvalidParameterError("BackboneConfig: need at least one block");
  for (int c : channels)
    if (c < 1) throw InvalidParameterError("BackboneConfig: bad channel count");
  int side = std::min(image_h, image_w);
  for (size_t i = 0; i < channels.size(); ++i) side = (side + 1) / 2;
  if (side < 1)
    throw InvalidParameterError("BackboneConfig: too many blocks for image");
  if (with_branches) {
    if (n_subject_classes < 2)
      throw InvalidParameterError("BackboneConfig: n_subject_classes < 2");
    if (n_protocol_classes != 3 && n_protocol_classes != 6)
      throw InvalidParameterError(
          "BackboneConfig: n_protocol_classes must be 3 or 6");
  }
}

std::vector<double> descriptor_weights(const std::vector<double>& alpha) {
  for (double a : alpha)
    if (!std::isfinite(a))
      throw InvalidParameterError("descriptor_weights: non-finite logit");
  std::vector<double> z(alpha.size());
  nn::kernels::softmax_rows(alpha.data(), z.data(), 1,
                            static_cast<int>(alpha.size()));
  return z;
}

std::array<int, 2> finalize_branches(const std::vector<double>& alpha_1,
                                     const std::vector<double>& alpha_2) {
  auto pick = [](const std::vector<double>& alpha) {
    const std::vector<double> z = descriptor_weights(alpha);
    int best = 0;
    for (int i = 1; i < static_cast<int>(z.size()); ++i)
      if (z[i] > z[best]) best = i;  // strict: ties keep the smaller index
    return best;
  };
  return {pick(alpha_1), pick(alpha_2)};
}

// ---------------------------------------------------------------------------
// construction
// ---------------------------------------------------------------------------

Model::Model(BackboneConfig cfg, uint64_t init_seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const int blocks = cfg_.n_blocks();

  conv_w_.resize(blocks);
  conv_b_.resize(blocks);
  int c_prev = cfg_.input_frames;
  for (int i = 0; i < blocks; ++i) {
    conv_w_[i].value = Tensor{cfg_.channels[i], c_prev, 3, 3};
    conv_w_[i].grad = conv_w_[i].value;
    conv_b_[i].value = Tensor{cfg_.channels[i]};
    conv_b_[i].grad = conv_b_[i].value;
    c_prev = cfg_.channels[i];
  }
  main_w_.value = Tensor{cfg_.main_outputs(), cfg_.channels.back()};
  main_w_.grad = main_w_.value;
  main_b_.value = Tensor{cfg_.main_outputs()};
  main_b_.grad = main_b_.value;

  if (cfg_.with_branches) {
    for (int j = 0; j < 2; ++j) {
      head_w_[j].resize(blocks);
      head_b_[j].resize(blocks);
      for (int i = 0; i < blocks; ++i) {
        head_w_[j][i].value = Tensor{cfg_.n_classes(j), cfg_.channels[i]};
        head_w_[j][i].grad = head_w_[j][i].value;
        head_b_[j][i].value = Tensor{cfg_.n_classes(j)};
        head_b_[j][i].grad = head_b_[j][i].value;
      }
      alpha_[j].assign(blocks, 0.0);
      alpha_grad_[j].assign(blocks, 0.0);
    }
  }
  init_params(init_seed);
}

void Model::init_params(uint64_t seed) {
  RandomStream rng(sub_seed(seed, "model-init"));
  for (size_t i = 0; i < conv_w_.size(); ++i) {
    const int fan_in = conv_w_[i].value.shape[1] * 9;
    const double std = std::sqrt(2.0 / fan_in);
    for (double& w : conv_w_[i].value.v) w = rng.normal(0.0, std);
    // biases stay zero
  }
  {
    const double std = std::sqrt(1.0 / cfg_.channels.back());
    for (double& w : main_w_.value.v) w = rng.normal(0.0, std);
  }
  if (cfg_.with_branches) {
    for (int j = 0; j < 2; ++j) {
      for (size_t i = 0; i < head_w_[j].size(); ++i) {
        const double std = std::sqrt(1.0 / cfg_.channels[i]);
        for (double& w : head_w_[j][i].value.v) w = rng.normal(0.0, std);
      }
    }
  }
}

Conv2dShape Model::block_shape(int block, int batch) const {
  Conv2dShape s;
  s.batch = batch;
  s.c_in = block == 0 ? cfg_.input_frames : cfg_.channels[block - 1];
  s.c_out = cfg_.channels[block];
  int h = cfg_.image_h, w = cfg_.image_w;
  for (int i = 0; i < block; ++i) {
    Conv2dShape prev;
    prev.h = h;
    prev.w = w;
    h = prev.out_h();
    w = prev.out_w();
  }
  s.h = h;
  s.w = w;
  return s;
}

// ---------------------------------------------------------------------------
// forward
// ---------------------------------------------------------------------------

ModelOutput Model::forward(const Tensor& x, bool want_aux) {
  if (x.shape.size() != 4 || x.shape[1] != cfg_.input_frames ||
      x.shape[2] != cfg_.image_h || x.shape[3] != cfg_.image_w)
    throw InvalidInputError("Model::forward: input shape mismatch");
  const int batch = x.shape[0];
  if (batch < 1) throw InvalidInputError("Model::forward: empty batch");
  const int blocks = cfg_.n_blocks();
  const bool aux = want_aux && cfg_.with_branches;

  cache_.batch = batch;
  cache_.has_aux = aux;
  cache_.input = x;
  cache_.pre_act.resize(blocks);
  cache_.post_act.resize(blocks);
  cache_.pooled.resize(blocks);

  const Tensor* cur = &cache_.input;
  for (int i = 0; i < blocks; ++i) {
    const Conv2dShape s = block_shape(i, batch);
    Tensor& pre = cache_.pre_act[i];
    pre = Tensor{batch, s.c_out, s.out_h(), s.out_w()};
    nn::kernels::conv2d_forward(cur->data(), conv_w_[i].value.data(),
                                conv_b_[i].value.data(), pre.data(), s);
    Tensor& post = cache_.post_act[i];
    post = Tensor{batch, s.c_out, s.out_h(), s.out_w()};
    nn::kernels::activation_forward(cfg_.activation, pre.data(), post.data(),
                                    pre.numel());
    Tensor& pooled = cache_.pooled[i];
    pooled = Tensor{batch, s.c_out};
    nn::kernels::global_avg_pool_forward(post.data(), pooled.data(), batch,
                                         s.c_out, s.out_h() * s.out_w());
    cur = &post;
  }

  ModelOutput out;
  out.y = Tensor{batch, cfg_.main_outputs()};
  nn::kernels::affine_forward(cache_.pooled.back().data(),
                              main_w_.value.data(), main_b_.value.data(),
                              out.y.data(), batch, cfg_.channels.back(),
                              cfg_.main_outputs());

  if (aux) {
    // aux heads read layer-normalized pooled features: the deep taps'
    // spatial means concentrate tightly, normalization restores O(1) scale
    cache_.pooled_norm.resize(blocks);
    cache_.norm_inv_std.resize(blocks);
    for (int i = 0; i < blocks; ++i) {
      const int c = cfg_.channels[i];
      Tensor& xn = cache_.pooled_norm[i];
      xn = Tensor{batch, c};
      Tensor& inv = cache_.norm_inv_std[i];
      inv = Tensor{batch};
      for (int b = 0; b < batch; ++b) {
        const double* x = cache_.pooled[i].data() + int64_t(b) * c;
        double mu = 0.0;
        for (int k = 0; k < c; ++k) mu += x[k];
        mu /= c;
        double var = 0.0;
        for (int k = 0; k < c; ++k) var += (x[k] - mu) * (x[k] - mu);
        var /= c;
        const double is = 1.0 / std::sqrt(var + 1e-8);
        inv.v[b] = is;
        double* xo = xn.data() + int64_t(b) * c;
        for (int k = 0; k < c; ++k) xo[k] = (x[k] - mu) * is;
      }
    }
    for (int j = 0; j < 2; ++j) {
      const int n_cls = cfg_.n_classes(j);
      out.z[j] = z(j);
      Tensor& probs = out.branch_probs[j];
      probs = Tensor{batch, blocks, n_cls};
      Tensor logits{batch, n_cls};
      for (int i = 0; i < blocks; ++i) {
        nn::kernels::affine_forward(
            cache_.pooled_norm[i].data(), head_w_[j][i].value.data(),
            head_b_[j][i].value.data(), logits.data(), batch,
            cfg_.channels[i], n_cls);
        Tensor p{batch, n_cls};
        nn::kernels::softmax_rows(logits.data(), p.data(), batch, n_cls);
        for (int b = 0; b < batch; ++b)
          std::memcpy(probs.data() + (int64_t(b) * blocks + i) * n_cls,
                      p.data() + int64_t(b) * n_cls, n_cls * sizeof(double));
      }
      Tensor& mixed = out.mixed[j];
      mixed = Tensor{batch, n_cls};
      for (int b = 0; b < batch; ++b) {
        for (int c = 0; c < n_cls; ++c) {
          double acc = 0.0;
          for (int i = 0; i < blocks; ++i)
            acc += out.z[j][i] *
                   probs.v[(int64_t(b) * blocks + i) * n_cls + c];
          mixed.v[int64_t(b) * n_cls + c] = acc;
        }
      }
      cache_.branch_probs[j] = probs;
      cache_.z[j] = out.z[j];
    }
    out.has_aux = true;
  }
  return out;
}

// ---------------------------------------------------------------------------
// backward
// ---------------------------------------------------------------------------

namespace {

void add_into(Tensor& dst, const Tensor& src) {
  const int64_t n = dst.numel();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) dst.v[i] += src.v[i];
}

// dlogit = p .* (dp - sum(dp .* p)) per row
void softmax_backward_row(const double* p, const double* dp, double* dlogit,
                          int n) {
  double dot = 0.0;
  for (int c = 0; c < n; ++c) dot += dp[c] * p[c];
  for (int c = 0; c < n; ++c) dlogit[c] = p[c] * (dp[c] - dot);
}

}  // namespace

void Model::backward(const Tensor& dy_main,
                     const std::array<Tensor, 2>& d_mixed, bool want_theta,
                     bool want_alpha) {
  const int batch = cache_.batch;
  if (batch == 0)
    throw ContractViolationError("Model::backward: no cached forward pass");
  const int blocks = cfg_.n_blocks();

  const bool use_aux =
      cache_.has_aux && (d_mixed[0].numel() > 0 || d_mixed[1].numel() > 0);

  // descriptor gradients (first-order: through the mixture weights only)
  if (want_alpha && use_aux && !finalized_) {
    for (int j = 0; j < 2; ++j) {
      if (d_mixed[j].numel() == 0) continue;
      const int n_cls = cfg_.n_classes(j);
      const Tensor& probs = cache_.branch_probs[j];
      const std::vector<double>& zj = cache_.z[j];
      std::vector<double> dz(blocks, 0.0);
      for (int i = 0; i < blocks; ++i) {
        double acc = 0.0;
        for (int b = 0; b < batch; ++b)
          for (int c = 0; c < n_cls; ++c)
            acc += d_mixed[j].v[int64_t(b) * n_cls + c] *
                   probs.v[(int64_t(b) * blocks + i) * n_cls + c];
        dz[i] = acc;
      }
      double dot = 0.0;
      for (int i = 0; i < blocks; ++i) dot += dz[i] * zj[i];
      for (int i = 0; i < blocks; ++i)
        alpha_grad_[j][i] += zj[i] * (dz[i] - dot);
    }
  }

  if (!want_theta) return;

  // gradients w.r.t. pooled tap features
  std::vector<Tensor> d_pooled(blocks);
  for (int i = 0; i < blocks; ++i)
    d_pooled[i] = Tensor{batch, cfg_.channels[i]};

  if (dy_main.numel() > 0) {
    nn::kernels::affine_backward_params(
        cache_.pooled.back().data(), dy_main.data(), main_w_.grad.data(),
        main_b_.grad.data(), batch, cfg_.channels.back(), cfg_.main_outputs());
    Tensor dx{batch, cfg_.channels.back()};
    nn::kernels::affine_backward_input(dy_main.data(), main_w_.value.data(),
                                       dx.data(), batch, cfg_.channels.back(),
                                       cfg_.main_outputs());
    add_into(d_pooled.back(), dx);
  }

  if (use_aux) {
    // gradients w.r.t. the normalized head inputs, both tasks combined
    std::vector<Tensor> d_norm(blocks);
    for (int i = 0; i < blocks; ++i)
      d_norm[i] = Tensor{batch, cfg_.channels[i]};

    for (int j = 0; j < 2; ++j) {
      if (d_mixed[j].numel() == 0) continue;
      const int n_cls = cfg_.n_classes(j);
      const Tensor& probs = cache_.branch_probs[j];
      const std::vector<double>& zj = cache_.z[j];
      Tensor dlogits{batch, n_cls};
      std::vector<double> dp(n_cls);
      for (int i = 0; i < blocks; ++i) {
        if (zj[i] == 0.0) continue;  // branch fully gated off
        for (int b = 0; b < batch; ++b) {
          const double* pb = probs.data() + (int64_t(b) * blocks + i) * n_cls;
          for (int c = 0; c < n_cls; ++c)
            dp[c] = zj[i] * d_mixed[j].v[int64_t(b) * n_cls + c];
          softmax_backward_row(pb, dp.data(),
                               dlogits.data() + int64_t(b) * n_cls, n_cls);
        }
        nn::kernels::affine_backward_params(
            cache_.pooled_norm[i].data(), dlogits.data(),
            head_w_[j][i].grad.data(), head_b_[j][i].grad.data(), batch,
            cfg_.channels[i], n_cls);
        Tensor dx{batch, cfg_.channels[i]};
        nn::kernels::affine_backward_input(dlogits.data(),
                                           head_w_[j][i].value.data(),
                                           dx.data(), batch, cfg_.channels[i],
                                           n_cls);
        add_into(d_norm[i], dx);
      }
    }

    // layer-norm backward into the raw pooled features:
    // dx = inv_std * (dy - mean(dy) - xhat * mean(dy .* xhat))
    for (int i = 0; i < blocks; ++i) {
      const int c = cfg_.channels[i];
      for (int b = 0; b < batch; ++b) {
        const double* dy = d_norm[i].data() + int64_t(b) * c;
        const double* xh = cache_.pooled_norm[i].data() + int64_t(b) * c;
        const double is = cache_.norm_inv_std[i].v[b];
        double mean_dy = 0.0, mean_dyxh = 0.0;
        for (int k = 0; k < c; ++k) {
          mean_dy += dy[k];
          mean_dyxh += dy[k] * xh[k];
        }
        mean_dy /= c;
        mean_dyxh /= c;
        double* dst = d_pooled[i].data() + int64_t(b) * c;
        for (int k = 0; k < c; ++k)
          dst[k] += is * (dy[k] - mean_dy - xh[k] * mean_dyxh);
      }
    }
  }

  // conv chain, top block down
  Tensor d_post;
  {
    const Conv2dShape s = block_shape(blocks - 1, batch);
    d_post = Tensor{batch, s.c_out, s.out_h(), s.out_w()};
    nn::kernels::global_avg_pool_backward(d_pooled[blocks - 1].data(),
                                          d_post.data(), batch, s.c_out,
                                          s.out_h() * s.out_w());
  }
  for (int i = blocks - 1; i >= 0; --i) {
    const Conv2dShape s = block_shape(i, batch);
    Tensor d_pre{batch, s.c_out, s.out_h(), s.out_w()};
    nn::kernels::activation_backward(cfg_.activation, cache_.pre_act[i].data(),
                                     d_post.data(), d_pre.data(),
                                     d_pre.numel());
    const Tensor& input = i == 0 ? cache_.input : cache_.post_act[i - 1];
    nn::kernels::conv2d_backward_params(input.data(), d_pre.data(),
                                        conv_w_[i].grad.data(),
                                        conv_b_[i].grad.data(), s);
    if (i > 0) {
      d_post = Tensor{batch, s.c_in, s.h, s.w};
      nn::kernels::conv2d_backward_input(d_pre.data(), conv_w_[i].value.data(),
                                         d_post.data(), s);
      Tensor d_tap{batch, s.c_in, s.h, s.w};
      nn::kernels::global_avg_pool_backward(d_pooled[i - 1].data(),
                                            d_tap.data(), batch, s.c_in,
                                            s.h * s.w);
      add_into(d_post, d_tap);
    }
  }
}

// ---------------------------------------------------------------------------
// descriptors
// ---------------------------------------------------------------------------

std::vector<double> Model::z(int task) const {
  const int blocks = cfg_.n_blocks();
  if (!cfg_.with_branches)
    throw ContractViolationError("Model::z: model has no branches");
  if (finalized_) {
    std::vector<double> one_hot(blocks, 0.0);
    one_hot[(*finalized_)[task]] = 1.0;
    return one_hot;
  }
  return descriptor_weights(alpha_[task]);
}

void Model::set_alpha(int task, std::vector<double> a) {
  if (static_cast<int>(a.size()) != cfg_.n_blocks())
    throw InvalidInputError("set_alpha: wrong length");
  alpha_[task] = std::move(a);
}

void Model::finalize(const std::array<int, 2>& taps) {
  for (int t : taps)
    if (t < 0 || t >= cfg_.n_blocks())
      throw InvalidParameterError("finalize: tap index out of range");
  finalized_ = taps;
}

// ---------------------------------------------------------------------------
// parameter registry
// ---------------------------------------------------------------------------

std::vector<ParamView> Model::theta_params() {
  std::vector<ParamView> out;
  for (size_t i = 0; i < conv_w_.size(); ++i) {
    out.push_back({conv_w_[i].value.data(), conv_w_[i].grad.data(),
                   conv_w_[i].value.numel(),
                   "conv" + std::to_string(i) + ".w"});
    out.push_back({conv_b_[i].value.data(), conv_b_[i].grad.data(),
                   conv_b_[i].value.numel(),
                   "conv" + std::to_string(i) + ".b"});
  }
  out.push_back({main_w_.value.data(), main_w_.grad.data(),
                 main_w_.value.numel(), "main.w"});
  out.push_back({main_b_.value.data(), main_b_.grad.data(),
                 main_b_.value.numel(), "main.b"});
  if (cfg_.with_branches) {
    for (int j = 0; j < 2; ++j) {
      for (size_t i = 0; i < head_w_[j].size(); ++i) {
        const std::string base =
            "task" + std::to_string(j + 1) + ".tap" + std::to_string(i);
        out.push_back({head_w_[j][i].value.data(), head_w_[j][i].grad.data(),
                       head_w_[j][i].value.numel(), base + ".w"});
        out.push_back({head_b_[j][i].value.data(), head_b_[j][i].grad.data(),
                       head_b_[j][i].value.numel(), base + ".b"});
      }
    }
  }
  return out;
}

std::vector<ParamView> Model::alpha_params() {
  std::vector<ParamView> out;
  if (!cfg_.with_branches) return out;
  for (int j = 0; j < 2; ++j)
    out.push_back({alpha_[j].data(), alpha_grad_[j].data(),
                   static_cast<int64_t>(alpha_[j].size()),
                   "alpha" + std::to_string(j + 1)});
  return out;
}

std::vector<ParamView> Model::all_params() {
  std::vector<ParamView> out = theta_params();
  for (ParamView& p : alpha_params()) out.push_back(p);
  return out;
}

void Model::zero_grads() {
  for (Param* p : {&main_w_, &main_b_}) p->grad.zero();
  for (auto& p : conv_w_) p.grad.zero();
  for (auto& p : conv_b_) p.grad.zero();
  if (cfg_.with_branches) {
    for (int j = 0; j < 2; ++j) {
      for (auto& p : head_w_[j]) p.grad.zero();
      for (auto& p : head_b_[j]) p.grad.zero();
      std::fill(alpha_grad_[j].begin(), alpha_grad_[j].end(), 0.0);
    }
  }
}

// ---------------------------------------------------------------------------
// inference
// ---------------------------------------------------------------------------

std::vector<std::vector<geometry::RigidTransform>>
Model::predict_relative_poses(const Tensor& x) {
  const ModelOutput out = forward(x, /*want_aux=*/false);
  const int batch = x.shape[0];
  const int pairs = cfg_.input_frames - 1;
  std::vector<std::vector<geometry::RigidTransform>> rels(batch);
  for (int b = 0; b < batch; ++b) {
    rels[b].reserve(pairs);
    for (int k = 0; k < pairs; ++k)
      rels[b].push_back(geometry::RigidTransform::from_params(
          out.y.data() + int64_t(b) * cfg_.main_outputs() + 6 * k));
  }
  return rels;
}

// ---------------------------------------------------------------------------
// checkpoints
// ---------------------------------------------------------------------------

namespace {
constexpr char kCkptMagic[8] = {'E', 'P', 'C', 'K', 'P', 'T', '0', '1'};
}

void Model::save_checkpoint(const std::string& path, int epoch,
                            const std::string& extra_json) const {
  json meta{{"version", 1},
            {"epoch", epoch},
            {"config",
             {{"input_frames", cfg_.input_frames},
              {"image_h", cfg_.image_h},
              {"image_w", cfg_.image_w},
              {"channels", cfg_.channels},
              {"activation", nn::to_string(cfg_.activation)},
              {"with_branches", cfg_.with_branches},
              {"n_subject_classes", cfg_.n_subject_classes},
              {"n_protocol_classes", cfg_.n_protocol_classes}}}};
  if (finalized_)
    meta["finalized_taps"] = {(*finalized_)[0], (*finalized_)[1]};
  if (!extra_json.empty()) meta["extra"] = json::parse(extra_json);

  const std::string htext = meta.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out.write(kCkptMagic, sizeof(kCkptMagic));
  const uint64_t hlen = htext.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(htext.data(), static_cast<std::streamsize>(htext.size()));

  Model* self = const_cast<Model*>(this);
  uint64_t total = 0;
  for (const ParamView& p : self->all_params()) total += p.n;
  out.write(reinterpret_cast<const char*>(&total), sizeof(total));
  for (const ParamView& p : self->all_params())
    out.write(reinterpret_cast<const char*>(p.value),
              static_cast<std::streamsize>(p.n * sizeof(double)));
  if (!out) throw std::runtime_error("save_checkpoint: write failed " + path);
}

Model Model::load_checkpoint(const std::string& path, CheckpointMeta* meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCkptMagic, sizeof(kCkptMagic)) != 0)
    throw InvalidInputError("load_checkpoint: bad magic in " + path);
  uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string htext(hlen, '\0');
  in.read(htext.data(), static_cast<std::streamsize>(hlen));
  const json j = json::parse(htext);

  BackboneConfig cfg;
  const json& c = j.at("config");
  cfg.input_frames = c.at("input_frames").get<int>();
  cfg.image_h = c.at("image_h").get<int>();
  cfg.image_w = c.at("image_w").get<int>();
  cfg.channels = c.at("channels").get<std::vector<int>>();
  cfg.activation =
      nn::activation_from_string(c.at("activation").get<std::string>());
  cfg.with_branches = c.at("with_branches").get<bool>();
  cfg.n_subject_classes = c.at("n_subject_classes").get<int>();
  cfg.n_protocol_classes = c.at("n_protocol_classes").get<int>();

  Model model(cfg, /*init_seed=*/0);
  uint64_t total = 0;
  in.read(reinterpret_cast<char*>(&total), sizeof(total));
  uint64_t expect = 0;
  for (const ParamView& p : model.all_params()) expect += p.n;
  if (total != expect)
    throw InvalidInputError("load_checkpoint: parameter count mismatch");
  for (const ParamView& p : model.all_params())
    in.read(reinterpret_cast<char*>(p.value),
            static_cast<std::streamsize>(p.n * sizeof(double)));
  if (!in) throw InvalidInputError("load_checkpoint: truncated " + path);

  if (j.contains("finalized_taps")) {
    const auto taps = j.at("finalized_taps").get<std::vector<int>>();
    model.finalize({taps.at(0), taps.at(1)});
  }
  if (meta) {
    meta->epoch = j.at("epoch").get<int>();
    meta->finalized = model.finalized();
    meta->extra_json = j.contains("extra") ? j.at("extra").dump() : "";
  }
  return model;
}

}  // namespace echopose::model
