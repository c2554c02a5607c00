#include "echopose/training.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "echopose/errors.hpp"
#include "echopose/parallel.hpp"
#include "echopose/rng.hpp"

namespace echopose::training {

namespace fs = std::filesystem;
using json = nlohmann::json;
using geometry::Vec3;

// ---------------------------------------------------------------------------
// cross-entropy
// ---------------------------------------------------------------------------

namespace {

void check_probs(const Tensor& probs, const std::vector<int>& target) {
  if (probs.shape.size() != 2)
    throw InvalidInputError("loss_ce: probs must be batch x classes");
  const int batch = probs.shape[0];
  const int n_cls = probs.shape[1];
  if (static_cast<int>(target.size()) != batch)
    throw InvalidInputError("loss_ce: target size mismatch");
  for (int b = 0; b < batch; ++b) {
    if (target[b] < 0 || target[b] >= n_cls)
      throw ContractViolationError("loss_ce: target class out of range");
    double sum = 0.0;
    for (int c = 0; c < n_cls; ++c) sum += probs.v[int64_t(b) * n_cls + c];
    if (std::abs(sum - 1.0) > 1e-4)
      throw ContractViolationError(
          "loss_ce: probabilities not normalized (sum=" +
          std::to_string(sum) + ")");
  }
}

}  // namespace

double loss_ce(const Tensor& probs, const std::vector<int>& target_class) {
  check_probs(probs, target_class);
  const int batch = probs.shape[0];
  const int n_cls = probs.shape[1];
  double loss = 0.0;
  for (int b = 0; b < batch; ++b)
    loss -= std::log(probs.v[int64_t(b) * n_cls + target_class[b]] +
                     kProbFloor);
  return loss / batch;
}

double loss_ce_grad(const Tensor& probs, const std::vector<int>& target_class,
                    Tensor& d_probs) {
  check_probs(probs, target_class);
  const int batch = probs.shape[0];
  const int n_cls = probs.shape[1];
  d_probs = Tensor{batch, n_cls};
  double loss = 0.0;
  for (int b = 0; b < batch; ++b) {
    const double p = probs.v[int64_t(b) * n_cls + target_class[b]];
    loss -= std::log(p + kProbFloor);
    d_probs.v[int64_t(b) * n_cls + target_class[b]] =
        -1.0 / (batch * (p + kProbFloor));
  }
  return loss / batch;
}

// ---------------------------------------------------------------------------
// reconstruction loss
// ---------------------------------------------------------------------------

namespace {

struct Rot3 {
  double m[3][3];
  Vec3 apply(const Vec3& p) const {
    return {m[0][0] * p.x + m[0][1] * p.y + m[0][2] * p.z,
            m[1][0] * p.x + m[1][1] * p.y + m[1][2] * p.z,
            m[2][0] * p.x + m[2][1] * p.y + m[2][2] * p.z};
  }
};

Rot3 mul(const Rot3& a, const Rot3& b) {
  Rot3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += a.m[i][k] * b.m[k][j];
      r.m[i][j] = s;
    }
  return r;
}

// R = Rz(a) Ry(b) Rx(g) and its angle derivatives
struct RotWithDerivs {
  Rot3 r;
  Rot3 dr[3];  // d/da, d/db, d/dg
};

RotWithDerivs rotation_zyx(double a, double b, double g) {
  const double ca = std::cos(a), sa = std::sin(a);
  const double cb = std::cos(b), sb = std::sin(b);
  const double cg = std::cos(g), sg = std::sin(g);
  const Rot3 rz{{{ca, -sa, 0.0}, {sa, ca, 0.0}, {0.0, 0.0, 1.0}}};
  const Rot3 ry{{{cb, 0.0, sb}, {0.0, 1.0, 0.0}, {-sb, 0.0, cb}}};
  const Rot3 rx{{{1.0, 0.0, 0.0}, {0.0, cg, -sg}, {0.0, sg, cg}}};
  const Rot3 dz{{{-sa, -ca, 0.0}, {ca, -sa, 0.0}, {0.0, 0.0, 0.0}}};
  const Rot3 dy{{{-sb, 0.0, cb}, {0.0, 0.0, 0.0}, {-cb, 0.0, -sb}}};
  const Rot3 dx{{{0.0, 0.0, 0.0}, {0.0, -sg, -cg}, {0.0, cg, -sg}}};

  RotWithDerivs out;
  const Rot3 yx = mul(ry, rx);
  out.r = mul(rz, yx);
  out.dr[0] = mul(dz, yx);
  out.dr[1] = mul(rz, mul(dy, rx));
  out.dr[2] = mul(rz, mul(ry, dx));
  return out;
}

}  // namespace

double loss_rec(const std::vector<RigidTransform>& pred_rels,
                const std::vector<RigidTransform>& gt_rels,
                const FrameGeometry& geometry) {
  if (pred_rels.size() != gt_rels.size())
    throw InvalidInputError("loss_rec: length mismatch");
  if (pred_rels.empty()) return 0.0;
  const auto corners = geometry::frame_corners(geometry);
  double sum = 0.0;
  for (size_t k = 0; k < pred_rels.size(); ++k) {
    const geometry::Mat4 mp = geometry::to_matrix(pred_rels[k]);
    const geometry::Mat4 mg = geometry::to_matrix(gt_rels[k]);
    double pair = 0.0;
    for (const Vec3& c : corners) pair += (mp.apply(c) - mg.apply(c)).norm();
    sum += pair / 4.0;
  }
  return sum / static_cast<double>(pred_rels.size());
}

double loss_rec_grad(const Tensor& y,
                     const std::vector<std::vector<RigidTransform>>& gt_rels,
                     const FrameGeometry& geometry, Tensor* dy) {
  if (y.shape.size() != 2)
    throw InvalidInputError("loss_rec_grad: y must be batch x 6(M-1)");
  const int batch = y.shape[0];
  const int pairs = y.shape[1] / 6;
  if (static_cast<int>(gt_rels.size()) != batch)
    throw InvalidInputError("loss_rec_grad: batch mismatch");
  for (const auto& g : gt_rels)
    if (static_cast<int>(g.size()) != pairs)
      throw InvalidInputError("loss_rec_grad: pair count mismatch");

  const auto corners = geometry::frame_corners(geometry);
  if (dy) {
    *dy = Tensor{batch, pairs * 6};
  }
  const double scale = 1.0 / (static_cast<double>(batch) * pairs * 4.0);

  double loss = 0.0;
  for (int b = 0; b < batch; ++b) {
    for (int k = 0; k < pairs; ++k) {
      const double* p = y.data() + int64_t(b) * y.shape[1] + 6 * k;
      const RotWithDerivs rot = rotation_zyx(p[0], p[1], p[2]);
      const Vec3 t{p[3], p[4], p[5]};
      const geometry::Mat4 mg = geometry::to_matrix(gt_rels[b][k]);
      double* d = dy ? dy->data() + int64_t(b) * y.shape[1] + 6 * k : nullptr;
      for (const Vec3& c : corners) {
        const Vec3 u = rot.r.apply(c) + t - mg.apply(c);
        const double dist = u.norm();
        loss += dist;
        if (!d || dist < 1e-12) continue;
        const Vec3 un = u * (1.0 / dist);
        for (int m = 0; m < 3; ++m) d[m] += un.dot(rot.dr[m].apply(c)) * scale;
        d[3] += un.x * scale;
        d[4] += un.y * scale;
        d[5] += un.z * scale;
      }
    }
  }
  return loss * scale;
}

// ---------------------------------------------------------------------------
// batches
// ---------------------------------------------------------------------------

Batch make_batch(const std::vector<dataset::SequenceSample>& samples) {
  if (samples.empty()) throw InvalidInputError("make_batch: empty");
  const phantom::ScanRecord& first = *samples.front().scan;
  const int m = samples.front().length;
  const int h = first.geometry.height_px;
  const int w = first.geometry.width_px;

  Batch batch;
  batch.geometry = first.geometry;
  batch.x = Tensor{static_cast<int>(samples.size()), m, h, w};
  batch.targets.reserve(samples.size());
  for (size_t b = 0; b < samples.size(); ++b) {
    const dataset::SequenceSample& s = samples[b];
    if (s.length != m || s.scan->geometry.height_px != h ||
        s.scan->geometry.width_px != w)
      throw InvalidInputError("make_batch: inhomogeneous samples");
    for (int f = 0; f < m; ++f) {
      const std::vector<float>& frame = s.scan->frames[s.start + f];
      double* dst = batch.x.data() + ((int64_t(b) * m + f) * h) * w;
      for (int i = 0; i < h * w; ++i) dst[i] = double(frame[i]) - 0.5;
    }
    batch.targets.push_back(s.targets);
    batch.subject_class.push_back(s.subject_class);
    batch.protocol_class.push_back(s.protocol_class);
  }
  return batch;
}

LossBundle compute_losses_and_grads(model::Model& net, const Batch& batch,
                                    bool with_aux, bool want_theta,
                                    bool want_alpha) {
  net.zero_grads();
  const model::ModelOutput out = net.forward(batch.x, with_aux);

  LossBundle losses;
  Tensor dy_main;
  losses.rec = loss_rec_grad(out.y, batch.targets, batch.geometry,
                             want_theta ? &dy_main : nullptr);

  std::array<Tensor, 2> d_mixed;
  if (with_aux && out.has_aux) {
    Tensor d1, d2;
    losses.ce1 = loss_ce_grad(out.mixed[0], batch.subject_class, d1);
    losses.ce2 = loss_ce_grad(out.mixed[1], batch.protocol_class, d2);
    d_mixed[0] = std::move(d1);
    d_mixed[1] = std::move(d2);
  }
  if (want_theta || want_alpha)
    net.backward(dy_main, d_mixed, want_theta, want_alpha);
  return losses;
}

// ---------------------------------------------------------------------------
// bi-level step
// ---------------------------------------------------------------------------

void BiLevelConfig::validate() const {
  if (xi != 0.0)
    throw InvalidParameterError(
        "BiLevelConfig: only the first-order approximation (xi = 0) is "
        "supported");
  if (batch_size < 1 || max_epochs < 1)
    throw InvalidParameterError("BiLevelConfig: bad batch/epochs");
}

TrainState::TrainState(model::Model m, const BiLevelConfig& cfg, bool aux)
    : net(std::move(m)),
      inner_opt(cfg.inner, net.theta_params()),
      outer_opt(cfg.outer, net.alpha_params()),
      aux_enabled(aux && net.config().with_branches) {}

StepResult bilevel_step(TrainState& state, const Batch& train_batch,
                        const Batch& val_batch, const BiLevelConfig& cfg) {
  cfg.validate();
  StepResult result;

  // (1) network parameters on the training loss, descriptors constant
  result.train = compute_losses_and_grads(state.net, train_batch,
                                          state.aux_enabled,
                                          /*want_theta=*/true,
                                          /*want_alpha=*/false);
  if (!std::isfinite(result.train.total()) ||
      result.train.total() > cfg.divergence_threshold)
    throw DivergenceError("bilevel_step: training loss diverged (" +
                              std::to_string(result.train.total()) + ")",
                          "");
  state.inner_opt.step(state.net.theta_params());

  // (2) descriptors on the validation loss, network parameters constant
  if (state.aux_enabled && !state.net.finalized()) {
    const LossBundle val = compute_losses_and_grads(state.net, val_batch,
                                                    /*with_aux=*/true,
                                                    /*want_theta=*/false,
                                                    /*want_alpha=*/true);
    result.val_total = val.total();
    if (!std::isfinite(result.val_total))
      throw DivergenceError("bilevel_step: validation loss diverged", "");
    state.outer_opt.step(state.net.alpha_params());
  }
  return result;
}

// ---------------------------------------------------------------------------
// config I/O
// ---------------------------------------------------------------------------

RunConfig run_config_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("run_config_from_json_file: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return run_config_from_json_string(text);
}

RunConfig run_config_from_json_string(const std::string& text) {
  const json j = json::parse(text);

  RunConfig cfg;
  cfg.dataset_dir = j.value("dataset_dir", cfg.dataset_dir);
  cfg.out_dir = j.value("out_dir", cfg.out_dir);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.split_seed = j.value("split_seed", cfg.split_seed);
  cfg.sequence_length = j.value("sequence_length", cfg.sequence_length);
  cfg.n_protocol_classes =
      j.value("n_protocol_classes", cfg.n_protocol_classes);
  cfg.variance_mode = j.value("variance_mode", cfg.variance_mode);
  cfg.no_branch = j.value("no_branch", cfg.no_branch);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.finetune_epochs = j.value("finetune_epochs", cfg.finetune_epochs);
  cfg.inner_lr = j.value("inner_lr", cfg.inner_lr);
  cfg.outer_lr = j.value("outer_lr", cfg.outer_lr);
  cfg.channels = j.value("channels", cfg.channels);
  cfg.activation = j.value("activation", cfg.activation);
  cfg.divergence_threshold =
      j.value("divergence_threshold", cfg.divergence_threshold);
  return cfg;
}

std::string run_config_to_json(const RunConfig& cfg) {
  json j{{"dataset_dir", cfg.dataset_dir},
         {"out_dir", cfg.out_dir},
         {"seed", cfg.seed},
         {"split_seed", cfg.split_seed},
         {"sequence_length", cfg.sequence_length},
         {"n_protocol_classes", cfg.n_protocol_classes},
         {"variance_mode", cfg.variance_mode},
         {"no_branch", cfg.no_branch},
         {"batch_size", cfg.batch_size},
         {"epochs", cfg.epochs},
         {"finetune_epochs", cfg.finetune_epochs},
         {"inner_lr", cfg.inner_lr},
         {"outer_lr", cfg.outer_lr},
         {"channels", cfg.channels},
         {"activation", cfg.activation},
         {"divergence_threshold", cfg.divergence_threshold}};
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// full training run
// ---------------------------------------------------------------------------

namespace {

struct ValPool {
  std::vector<dataset::SequenceSample> windows;
};

// deterministic centre window per eligible validation scan
ValPool build_val_pool(const std::vector<phantom::ScanRecord>& scans,
                       const std::vector<int>& val_idx, int m,
                       const dataset::LabelMaps& labels) {
  ValPool pool;
  for (int idx : val_idx) {
    const phantom::ScanRecord& scan = scans[idx];
    if (scan.n_frames() < m) continue;
    dataset::SequenceSample s;
    s.scan = &scan;
    s.length = m;
    s.start = (scan.n_frames() - m) / 2;
    s.targets.reserve(m - 1);
    for (int k = 0; k < m - 1; ++k)
      s.targets.push_back(geometry::relative_pose(
          scan.world_poses[s.start + k], scan.world_poses[s.start + k + 1]));
    const auto it = labels.subject_class.find(scan.subject_id);
    s.subject_class = it == labels.subject_class.end() ? -1 : it->second;
    s.protocol_class =
        dataset::protocol_class(scan.protocol, labels.n_protocol_classes);
    pool.windows.push_back(std::move(s));
  }
  return pool;
}

// selection loss: validation L_rec only
double validation_selection_loss(model::Model& net, const ValPool& pool,
                                 int batch_size) {
  double sum = 0.0;
  int count = 0;
  for (size_t lo = 0; lo < pool.windows.size(); lo += batch_size) {
    const size_t hi = std::min(pool.windows.size(), lo + batch_size);
    std::vector<dataset::SequenceSample> chunk(pool.windows.begin() + lo,
                                               pool.windows.begin() + hi);
    const Batch batch = make_batch(chunk);
    const model::ModelOutput out = net.forward(batch.x, /*want_aux=*/false);
    sum += loss_rec_grad(out.y, batch.targets, batch.geometry, nullptr) *
           batch.size();
    count += batch.size();
  }
  return count ? sum / count : std::numeric_limits<double>::infinity();
}

std::string csv_join(const std::vector<std::string>& cells) {
  std::string row;
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) row += ",";
    row += cells[i];
  }
  return row;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

uint64_t effective_split_seed(const RunConfig& cfg) {
  return cfg.split_seed ? cfg.split_seed : sub_seed(cfg.seed, "split");
}

TrainResult train(const RunConfig& cfg,
                  const std::vector<phantom::ScanRecord>* preloaded) {
  BiLevelConfig bicfg;
  bicfg.inner.lr = cfg.inner_lr;
  bicfg.outer.lr = cfg.outer_lr;
  bicfg.batch_size = cfg.batch_size;
  bicfg.max_epochs = cfg.epochs;
  bicfg.divergence_threshold = cfg.divergence_threshold;
  bicfg.validate();

  fs::create_directories(cfg.out_dir);

  // data
  std::vector<phantom::ScanRecord> loaded;
  if (!preloaded) loaded = dataset::load_scans(cfg.dataset_dir);
  const std::vector<phantom::ScanRecord>& scans =
      preloaded ? *preloaded : loaded;
  const uint64_t split_seed = effective_split_seed(cfg);
  const dataset::Split split =
      dataset::split_scans(scans, dataset::SplitSpec{split_seed});

  std::vector<phantom::ScanRecord> train_scans;
  for (int idx : split.train) train_scans.push_back(scans[idx]);
  train_scans = dataset::apply_variance_mode(
      train_scans, dataset::variance_mode_from_string(cfg.variance_mode),
      sub_seed(cfg.seed, "variance-subset"));

  const dataset::LabelMaps labels =
      dataset::build_label_maps(train_scans, cfg.n_protocol_classes);

  const int m = cfg.sequence_length;
  const dataset::SamplingPool train_pool =
      dataset::build_sampling_pool(train_scans, m);
  if (static_cast<int>(train_pool.eligible.size()) < cfg.batch_size)
    throw InsufficientDataError("train: fewer eligible scans than batch size");
  const ValPool val_pool = build_val_pool(scans, split.val, m, labels);
  if (val_pool.windows.empty())
    throw InsufficientDataError("train: no eligible validation scans");

  // model
  model::BackboneConfig mcfg;
  mcfg.input_frames = m;
  mcfg.image_h = scans.front().geometry.height_px;
  mcfg.image_w = scans.front().geometry.width_px;
  mcfg.channels = cfg.channels;
  mcfg.activation = nn::activation_from_string(cfg.activation);
  mcfg.with_branches = !cfg.no_branch;
  if (mcfg.with_branches) {
    mcfg.n_subject_classes = labels.n_subject_classes;
    mcfg.n_protocol_classes = labels.n_protocol_classes;
  }
  TrainState state(model::Model(mcfg, sub_seed(cfg.seed, "init")), bicfg,
                   /*aux=*/!cfg.no_branch);

  RandomStream sampler(sub_seed(cfg.seed, "sampling"));
  const std::string best_path = (fs::path(cfg.out_dir) / "best.ckpt").string();
  const std::string final_path =
      (fs::path(cfg.out_dir) / "final.ckpt").string();
  const std::string log_path = (fs::path(cfg.out_dir) / "log.csv").string();

  std::ofstream log(log_path, std::ios::trunc);
  {
    std::vector<std::string> hdr{"epoch", "l_rec", "l_ce1", "l_ce2",
                                 "l_total", "val_selection"};
    if (!cfg.no_branch) {
      for (int j = 1; j <= 2; ++j)
        for (int i = 1; i <= state.net.config().n_blocks(); ++i)
          hdr.push_back("z" + std::to_string(j) + "_" + std::to_string(i));
    }
    log << csv_join(hdr) << "\n";
  }

  TrainResult result;
  result.n_train_scans = static_cast<int>(train_scans.size());
  result.n_val_scans = static_cast<int>(split.val.size());
  result.n_test_scans = static_cast<int>(split.test.size());
  result.skipped_scans = train_pool.skipped_scans;

  int val_cursor = 0;
  auto next_val_batch = [&]() {
    std::vector<dataset::SequenceSample> chunk;
    for (int i = 0; i < cfg.batch_size; ++i) {
      chunk.push_back(
          val_pool.windows[val_cursor % val_pool.windows.size()]);
      ++val_cursor;
    }
    return make_batch(chunk);
  };

  auto checkpoint_on_divergence = [&](const DivergenceError& e) {
    const std::string path =
        (fs::path(cfg.out_dir) / "diverged.ckpt").string();
    state.net.save_checkpoint(path, state.epoch);
    throw DivergenceError(e.what(), path);
  };

  // main loop
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    state.epoch = epoch;
    std::vector<int> order = train_pool.eligible;
    sampler.shuffle(order);
    const int steps = static_cast<int>(order.size()) / cfg.batch_size;

    LossBundle epoch_losses;
    for (int s = 0; s < steps; ++s) {
      std::vector<dataset::SequenceSample> samples;
      samples.reserve(cfg.batch_size);
      for (int b = 0; b < cfg.batch_size; ++b)
        samples.push_back(dataset::sample_subsequence(
            train_scans[order[s * cfg.batch_size + b]], m, sampler, labels));
      const Batch train_batch = make_batch(samples);
      const Batch val_batch =
          state.aux_enabled ? next_val_batch() : Batch{};
      try {
        const StepResult step =
            bilevel_step(state, train_batch, val_batch, bicfg);
        epoch_losses.rec += step.train.rec / steps;
        epoch_losses.ce1 += step.train.ce1 / steps;
        epoch_losses.ce2 += step.train.ce2 / steps;
      } catch (const DivergenceError& e) {
        checkpoint_on_divergence(e);
      }
    }

    const double val_sel =
        validation_selection_loss(state.net, val_pool, cfg.batch_size);
    if (val_sel < state.best_val) {
      state.best_val = val_sel;
      state.best_epoch = epoch;
      state.net.save_checkpoint(best_path, epoch);
    }

    std::array<std::vector<double>, 2> zs;
    if (!cfg.no_branch) {
      zs = {state.net.z(0), state.net.z(1)};
      state.z_history.push_back(zs);
    }

    std::vector<std::string> row{
        std::to_string(epoch), fmt(epoch_losses.rec), fmt(epoch_losses.ce1),
        fmt(epoch_losses.ce2), fmt(epoch_losses.total()), fmt(val_sel)};
    if (!cfg.no_branch)
      for (int j = 0; j < 2; ++j)
        for (double z : zs[j]) row.push_back(fmt(z));
    log << csv_join(row) << "\n";
  }

  result.best_epoch = state.best_epoch;
  result.best_val = state.best_val;

  // branch finalisation + optional one-hot fine-tune from the selected
  // checkpoint
  model::Model best = model::Model::load_checkpoint(best_path);
  std::array<int, 2> taps{-1, -1};
  if (!cfg.no_branch) {
    taps = model::finalize_branches(best.alpha(0), best.alpha(1));
    best.finalize(taps);
  }
  result.branch_taps = taps;

  if (!cfg.no_branch && cfg.finetune_epochs > 0) {
    TrainState ft(std::move(best), bicfg, /*aux=*/true);
    double ft_best = validation_selection_loss(ft.net, val_pool,
                                               cfg.batch_size);
    ft.net.save_checkpoint(final_path, cfg.epochs);
    for (int epoch = 0; epoch < cfg.finetune_epochs; ++epoch) {
      ft.epoch = cfg.epochs + epoch;
      std::vector<int> order = train_pool.eligible;
      sampler.shuffle(order);
      const int steps = static_cast<int>(order.size()) / cfg.batch_size;
      for (int s = 0; s < steps; ++s) {
        std::vector<dataset::SequenceSample> samples;
        samples.reserve(cfg.batch_size);
        for (int b = 0; b < cfg.batch_size; ++b)
          samples.push_back(dataset::sample_subsequence(
              train_scans[order[s * cfg.batch_size + b]], m, sampler,
              labels));
        const Batch train_batch = make_batch(samples);
        try {
          bilevel_step(ft, train_batch, Batch{}, bicfg);
        } catch (const DivergenceError& e) {
          checkpoint_on_divergence(e);
        }
      }
      const double val_sel =
          validation_selection_loss(ft.net, val_pool, cfg.batch_size);
      if (val_sel < ft_best) {
        ft_best = val_sel;
        ft.net.save_checkpoint(final_path, cfg.epochs + epoch);
      }
    }
    result.finetune_best_val = ft_best;
  } else {
    best.save_checkpoint(final_path, result.best_epoch);
    result.finetune_best_val = result.best_val;
  }

  result.best_checkpoint = best_path;
  result.final_checkpoint = final_path;
  result.log_csv = log_path;

  // summary
  json summary{
      {"config", json::parse(run_config_to_json(cfg))},
      {"split_seed", split_seed},
      {"n_train_scans", result.n_train_scans},
      {"n_val_scans", result.n_val_scans},
      {"n_test_scans", result.n_test_scans},
      {"skipped_scans", result.skipped_scans},
      {"best_epoch", result.best_epoch},
      {"best_val_selection", result.best_val},
      {"finetune_best_val_selection", result.finetune_best_val},
      {"best_checkpoint", "best.ckpt"},
      {"final_checkpoint", "final.ckpt"}};
  if (!cfg.no_branch)
    summary["branches"] = {{"protocol_tap", taps[1] + 1},
                           {"anatomy_tap", taps[0] + 1},
                           {"label", std::to_string(taps[1] + 1) + "*/" +
                                         std::to_string(taps[0] + 1) + "*"}};
  const std::string summary_path =
      (fs::path(cfg.out_dir) / "train_summary.json").string();
  std::ofstream out(summary_path, std::ios::trunc);
  out << summary.dump(2) << "\n";
  result.summary_json = summary_path;
  return result;
}

}  // namespace echopose::training
