#include "echopose/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "echopose/errors.hpp"
#include "echopose/rng.hpp"
#include "echopose/scan_io.hpp"
#include "echopose/stats.hpp"

namespace echopose::harness {

namespace fs = std::filesystem;
using json = nlohmann::json;
using phantom::Orientation;
using phantom::PathShape;
using phantom::ProtocolSpec;
using phantom::ScanRecord;

// ---------------------------------------------------------------------------
// gen config
// ---------------------------------------------------------------------------

std::string gen_config_to_json(const GenConfig& c) {
  json j{{"n_subjects", c.n_subjects},
         {"forearms_per_subject", c.forearms_per_subject},
         {"image",
          {{"height_px", c.image_h},
           {"width_px", c.image_w},
           {"spacing_mm", c.spacing_mm}}},
         {"n_frames_range", {c.n_frames_min, c.n_frames_max}},
         {"path_length_range_mm", {c.path_length_min_mm, c.path_length_max_mm}},
         {"k_blobs", c.k_blobs},
         {"field_extent",
          {{"lo", {c.field_extent.lo.x, c.field_extent.lo.y, c.field_extent.lo.z}},
           {"hi", {c.field_extent.hi.x, c.field_extent.hi.y, c.field_extent.hi.z}}}},
         {"speckle_sigma", c.speckle_sigma},
         {"wobble_rot_sigma", c.wobble_rot_sigma},
         {"wobble_trans_sigma", c.wobble_trans_sigma},
         {"c_turn_range_rad", {c.c_turn_min_rad, c.c_turn_max_rad}},
         {"s_turn_range_rad", {c.s_turn_min_rad, c.s_turn_max_rad}},
         {"start_translation_mm", c.start_translation_mm},
         {"start_tilt_rad", c.start_tilt_rad}};
  return j.dump(2);
}

GenConfig gen_config_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("gen_config_from_json_file: cannot open " + path);
  json j;
  in >> j;

  GenConfig c;
  c.n_subjects = j.value("n_subjects", c.n_subjects);
  c.forearms_per_subject =
      j.value("forearms_per_subject", c.forearms_per_subject);
  if (j.contains("image")) {
    c.image_h = j["image"].value("height_px", c.image_h);
    c.image_w = j["image"].value("width_px", c.image_w);
    c.spacing_mm = j["image"].value("spacing_mm", c.spacing_mm);
  }
  if (j.contains("n_frames_range")) {
    c.n_frames_min = j["n_frames_range"].at(0).get<int>();
    c.n_frames_max = j["n_frames_range"].at(1).get<int>();
  }
  if (j.contains("path_length_range_mm")) {
    c.path_length_min_mm = j["path_length_range_mm"].at(0).get<double>();
    c.path_length_max_mm = j["path_length_range_mm"].at(1).get<double>();
  }
  c.k_blobs = j.value("k_blobs", c.k_blobs);
  if (j.contains("field_extent")) {
    const auto& lo = j["field_extent"].at("lo");
    const auto& hi = j["field_extent"].at("hi");
    c.field_extent.lo = {lo.at(0).get<double>(), lo.at(1).get<double>(),
                         lo.at(2).get<double>()};
    c.field_extent.hi = {hi.at(0).get<double>(), hi.at(1).get<double>(),
                         hi.at(2).get<double>()};
  }
  c.speckle_sigma = j.value("speckle_sigma", c.speckle_sigma);
  c.wobble_rot_sigma = j.value("wobble_rot_sigma", c.wobble_rot_sigma);
  c.wobble_trans_sigma = j.value("wobble_trans_sigma", c.wobble_trans_sigma);
  if (j.contains("c_turn_range_rad")) {
    c.c_turn_min_rad = j["c_turn_range_rad"].at(0).get<double>();
    c.c_turn_max_rad = j["c_turn_range_rad"].at(1).get<double>();
  }
  if (j.contains("s_turn_range_rad")) {
    c.s_turn_min_rad = j["s_turn_range_rad"].at(0).get<double>();
    c.s_turn_max_rad = j["s_turn_range_rad"].at(1).get<double>();
  }
  c.start_translation_mm =
      j.value("start_translation_mm", c.start_translation_mm);
  c.start_tilt_rad = j.value("start_tilt_rad", c.start_tilt_rad);
  return c;
}

// ---------------------------------------------------------------------------
// gen-data
// ---------------------------------------------------------------------------

void cmd_gen_data(const GenConfig& cfg, const std::string& out_dir,
                  uint64_t seed, bool force) {
  if (fs::exists(out_dir) && !fs::is_empty(out_dir) && !force)
    throw std::runtime_error("gen-data: output directory " + out_dir +
                             " is not empty (use --force to overwrite)");
  fs::create_directories(out_dir);

  const geometry::FrameGeometry frame_geo{cfg.image_h, cfg.image_w,
                                          cfg.spacing_mm};
  json scans_meta = json::array();

  for (int s = 0; s < cfg.n_subjects; ++s) {
    for (int f = 0; f < cfg.forearms_per_subject; ++f) {
      const uint64_t field_seed = sub_seed(
          seed, "subject", uint64_t(s) * cfg.forearms_per_subject + f);
      const phantom::SubjectField field =
          phantom::make_subject(field_seed, cfg.k_blobs, cfg.field_extent);

      for (int p = 0; p < 6; ++p) {
        const uint64_t idx =
            (uint64_t(s) * cfg.forearms_per_subject + f) * 6 + p;
        RandomStream rng(sub_seed(seed, "scan", idx));

        const int n_frames = rng.integer(cfg.n_frames_min, cfg.n_frames_max);
        const double length =
            rng.uniform(cfg.path_length_min_mm, cfg.path_length_max_mm);

        ProtocolSpec spec;
        spec.shape = static_cast<PathShape>(p % 3);
        spec.orientation = static_cast<Orientation>(p / 3);
        spec.path_length_mm = length;
        if (spec.shape == PathShape::C)
          spec.curvature_per_mm =
              rng.uniform(cfg.c_turn_min_rad, cfg.c_turn_max_rad) / length;
        else if (spec.shape == PathShape::S)
          spec.curvature_per_mm =
              2.0 * rng.uniform(cfg.s_turn_min_rad, cfg.s_turn_max_rad) /
              length;

        geometry::RigidTransform start;
        start.rot = {rng.uniform(0.0, 6.283185307179586),
                     rng.uniform(-cfg.start_tilt_rad, cfg.start_tilt_rad),
                     rng.uniform(-cfg.start_tilt_rad, cfg.start_tilt_rad)};
        start.trans = {
            rng.uniform(-cfg.start_translation_mm, cfg.start_translation_mm),
            rng.uniform(-cfg.start_translation_mm, cfg.start_translation_mm),
            rng.uniform(-cfg.start_translation_mm, cfg.start_translation_mm)};

        phantom::RenderOptions opts;
        opts.speckle_sigma = cfg.speckle_sigma;
        opts.frame_seed = sub_seed(seed, "frames", idx);
        opts.start_offset = start;
        opts.wobble_rot_sigma = cfg.wobble_rot_sigma;
        opts.wobble_trans_sigma = cfg.wobble_trans_sigma;

        ScanRecord scan =
            phantom::render_scan(field, spec, n_frames, frame_geo, opts);
        scan.subject_id = s;
        char id[32];
        std::snprintf(id, sizeof(id), "s%02d_f%d_p%d", s, f, p);
        scan.scan_id = id;

        const std::string file = scan.scan_id + ".scan";
        scan_io::write_scan((fs::path(out_dir) / file).string(), scan);

        scans_meta.push_back({{"scan_id", scan.scan_id},
                              {"file", file},
                              {"subject_id", s},
                              {"forearm", f},
                              {"protocol",
                               {{"shape", phantom::to_string(spec.shape)},
                                {"orientation",
                                 phantom::to_string(spec.orientation)},
                                {"class_id3", spec.class_id3()},
                                {"class_id6", spec.class_id6()}}},
                              {"n_frames", n_frames},
                              {"path_length_mm", spec.path_length_mm}});
      }
    }
  }

  json manifest{{"config", json::parse(gen_config_to_json(cfg))},
                {"seed", seed},
                {"n_scans", scans_meta.size()},
                {"scans", scans_meta}};
  std::ofstream out(fs::path(out_dir) / "manifest.json", std::ios::trunc);
  out << manifest.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// single run
// ---------------------------------------------------------------------------

namespace {

std::vector<ScanRecord> test_scans_for(
    const std::vector<ScanRecord>& scans, uint64_t split_seed) {
  const dataset::Split split =
      dataset::split_scans(scans, dataset::SplitSpec{split_seed});
  std::vector<ScanRecord> out;
  out.reserve(split.test.size());
  for (int idx : split.test) out.push_back(scans[idx]);
  return out;
}

json branches_json(const training::TrainResult& tr) {
  if (tr.branch_taps[0] < 0) return nullptr;
  // reports are 1-based, protocol task printed first (task2/task1)
  return json{{"protocol_tap", tr.branch_taps[1] + 1},
              {"anatomy_tap", tr.branch_taps[0] + 1},
              {"label", std::to_string(tr.branch_taps[1] + 1) + "*/" +
                            std::to_string(tr.branch_taps[0] + 1) + "*"}};
}

}  // namespace

RunOutcome run_training(const training::RunConfig& cfg,
                        const EvalSettings& eval) {
  const std::vector<ScanRecord> scans = dataset::load_scans(cfg.dataset_dir);

  RunOutcome outcome;
  outcome.train = training::train(cfg, &scans);

  const std::vector<ScanRecord> test =
      test_scans_for(scans, training::effective_split_seed(cfg));

  evaluation::EvalConfig ecfg;
  ecfg.pixel_stride = eval.pixel_stride;
  ecfg.voxel_size_mm = eval.voxel_size_mm;

  model::Model best =
      model::Model::load_checkpoint(outcome.train.best_checkpoint);
  outcome.soft = evaluation::evaluate_model(best, test, ecfg);
  model::Model final_net =
      model::Model::load_checkpoint(outcome.train.final_checkpoint);
  outcome.headline = evaluation::evaluate_model(final_net, test, ecfg);

  json summary{
      {"config", json::parse(training::run_config_to_json(cfg))},
      {"split_seed", training::effective_split_seed(cfg)},
      {"best_epoch", outcome.train.best_epoch},
      {"best_val_selection", outcome.train.best_val},
      {"finetune_best_val_selection", outcome.train.finetune_best_val},
      {"branches", branches_json(outcome.train)},
      {"metrics",
       {{"soft", json::parse(evaluation::report_to_json_string(outcome.soft))},
        {"headline",
         json::parse(evaluation::report_to_json_string(outcome.headline))}}}};

  outcome.summary_path =
      (fs::path(cfg.out_dir) / "summary.json").string();
  std::ofstream out(outcome.summary_path, std::ios::trunc);
  out << summary.dump(2) << "\n";
  return outcome;
}

evaluation::MetricsReport run_eval(const std::string& checkpoint,
                                   const std::string& dataset_dir,
                                   uint64_t split_seed,
                                   const EvalSettings& eval,
                                   const std::string& report_json_out) {
  const std::vector<ScanRecord> scans = dataset::load_scans(dataset_dir);
  const std::vector<ScanRecord> test = test_scans_for(scans, split_seed);
  model::Model net = model::Model::load_checkpoint(checkpoint);
  evaluation::EvalConfig ecfg;
  ecfg.pixel_stride = eval.pixel_stride;
  ecfg.voxel_size_mm = eval.voxel_size_mm;
  evaluation::MetricsReport report =
      evaluation::evaluate_model(net, test, ecfg);
  if (!report_json_out.empty())
    evaluation::write_report_json(report, report_json_out);
  return report;
}

// ---------------------------------------------------------------------------
// plans
// ---------------------------------------------------------------------------

namespace {

EvalSettings eval_from_json(const json& j) {
  EvalSettings e;
  if (j.contains("eval")) {
    e.pixel_stride = j["eval"].value("pixel_stride", e.pixel_stride);
    e.voxel_size_mm = j["eval"].value("voxel_size_mm", e.voxel_size_mm);
  }
  return e;
}

training::RunConfig base_from_json(const json& j) {
  if (j.contains("train"))
    return training::run_config_from_json_string(j["train"].dump());
  return training::RunConfig{};
}

}  // namespace

SweepPlan sweep_plan_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("sweep_plan_from_json_file: cannot open " + path);
  json j;
  in >> j;

  SweepPlan plan;
  plan.dataset_dir = j.at("dataset_dir").get<std::string>();
  if (j.contains("modes"))
    plan.modes = j["modes"].get<std::vector<std::string>>();
  if (j.contains("seeds")) plan.seeds = j["seeds"].get<std::vector<uint64_t>>();
  plan.base = base_from_json(j);
  plan.eval = eval_from_json(j);
  return plan;
}

AblationPlan ablation_plan_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("ablation_plan_from_json_file: cannot open " +
                             path);
  json j;
  in >> j;

  AblationPlan plan;
  plan.dataset_dir = j.at("dataset_dir").get<std::string>();
  if (j.contains("cells"))
    plan.cells = j["cells"].get<std::vector<std::string>>();
  if (j.contains("M_values"))
    plan.m_values = j["M_values"].get<std::vector<int>>();
  if (j.contains("seeds")) plan.seeds = j["seeds"].get<std::vector<uint64_t>>();
  plan.base = base_from_json(j);
  plan.eval = eval_from_json(j);
  return plan;
}

// ---------------------------------------------------------------------------
// variance sweep
// ---------------------------------------------------------------------------

int cmd_variance_sweep(const SweepPlan& plan, const std::string& out_dir,
                       uint64_t master_seed) {
  fs::create_directories(out_dir);
  std::vector<std::string> modes = plan.modes;
  if (modes.empty())
    for (dataset::VarianceMode m : dataset::all_variance_modes())
      modes.push_back(dataset::to_string(m));

  const uint64_t split_seed = sub_seed(master_seed, "split");
  int failed = 0;

  json cells = json::array();
  std::ofstream per_scan_csv(fs::path(out_dir) / "sweep_per_scan.csv",
                             std::ios::trunc);
  per_scan_csv << "condition,scan_id,eps_frame,eps_acc,eps_dice,eps_drift\n";
  per_scan_csv.precision(10);

  std::map<std::string, std::vector<double>> mode_acc;  // per-seed means

  for (const std::string& mode : modes) {
    for (uint64_t seed : plan.seeds) {
      training::RunConfig cfg = plan.base;
      cfg.dataset_dir = plan.dataset_dir;
      cfg.variance_mode = mode;
      cfg.no_branch = true;  // the sweep trains main-task-only models
      cfg.finetune_epochs = 0;
      cfg.split_seed = split_seed;
      cfg.seed = sub_seed(master_seed, "sweep:" + mode, seed);
      const std::string cell_name =
          mode + "_s" + std::to_string(seed);
      cfg.out_dir = (fs::path(out_dir) / cell_name).string();

      json cell{{"mode", mode},
                {"plan_seed", seed},
                {"run_seed", cfg.seed},
                {"dir", cell_name}};
      try {
        const RunOutcome outcome = run_training(cfg, plan.eval);
        const evaluation::MetricsReport& rep = outcome.headline;
        cell["status"] = "ok";
        cell["eps_frame"] = {{"mean", rep.frame.mean}, {"std", rep.frame.stddev}};
        cell["eps_acc"] = {{"mean", rep.acc.mean}, {"std", rep.acc.stddev}};
        cell["eps_dice"] = {{"mean", rep.dice.mean}, {"std", rep.dice.stddev}};
        cell["eps_drift"] = {{"mean", rep.drift.mean}, {"std", rep.drift.stddev}};
        mode_acc[mode].push_back(rep.acc.mean);
        for (const evaluation::ScanMetrics& s : rep.per_scan)
          per_scan_csv << cell_name << "," << s.scan_id << "," << s.eps_frame
                       << "," << s.eps_acc << "," << s.eps_dice << ","
                       << s.eps_drift << "\n";
      } catch (const std::exception& e) {
        ++failed;
        cell["status"] = "failed";
        cell["error"] = e.what();
        std::cerr << "[sweep] cell " << cell_name << " failed: " << e.what()
                  << "\n";
      }
      cells.push_back(cell);
    }
  }

  // mode-level table (Fig. 2b analogue data)
  std::ofstream table(fs::path(out_dir) / "sweep_table.csv", std::ios::trunc);
  table << "mode,seed,run_seed,eps_frame_mean,eps_frame_std,eps_acc_mean,"
           "eps_acc_std,eps_dice_mean,eps_dice_std,eps_drift_mean,"
           "eps_drift_std,status\n";
  table.precision(10);
  for (const json& cell : cells) {
    table << cell["mode"].get<std::string>() << ","
          << cell["plan_seed"].get<uint64_t>() << ","
          << cell["run_seed"].get<uint64_t>() << ",";
    if (cell["status"] == "ok") {
      table << cell["eps_frame"]["mean"].get<double>() << ","
            << cell["eps_frame"]["std"].get<double>() << ","
            << cell["eps_acc"]["mean"].get<double>() << ","
            << cell["eps_acc"]["std"].get<double>() << ","
            << cell["eps_dice"]["mean"].get<double>() << ","
            << cell["eps_dice"]["std"].get<double>() << ","
            << cell["eps_drift"]["mean"].get<double>() << ","
            << cell["eps_drift"]["std"].get<double>() << ",ok\n";
    } else {
      table << ",,,,,,,,failed\n";
    }
  }

  json medians;
  for (const auto& [mode, values] : mode_acc)
    medians[mode] = stats::median(values);

  json summary{{"split_seed", split_seed},
               {"modes", modes},
               {"seeds", plan.seeds},
               {"cells", cells},
               {"median_eps_acc_by_mode", medians},
               {"failed_cells", failed}};
  std::ofstream out(fs::path(out_dir) / "sweep_summary.json", std::ios::trunc);
  out << summary.dump(2) << "\n";
  return failed;
}

// ---------------------------------------------------------------------------
// ablation grid
// ---------------------------------------------------------------------------

namespace {

struct CellKey {
  int m;
  std::string cell;
  bool operator<(const CellKey& o) const {
    return m != o.m ? m < o.m : cell < o.cell;
  }
};

struct CellData {
  // pooled per-scan metric values across seeds
  std::vector<double> frame, acc, dice, drift;
  std::vector<std::string> branch_labels;  // per seed, "p*/a*"
  std::vector<uint64_t> run_seeds;
  int n_ok = 0;
};

std::string fmt_mean_std(const std::vector<double>& v) {
  std::ostringstream os;
  os.precision(6);
  os << stats::mean(v) << "," << (v.size() > 1 ? stats::sample_std(v) : 0.0);
  return os.str();
}

}  // namespace

int cmd_ablation(const AblationPlan& plan, const std::string& out_dir,
                 uint64_t master_seed) {
  fs::create_directories(out_dir);
  const uint64_t split_seed = sub_seed(master_seed, "split");
  int failed = 0;

  std::map<CellKey, CellData> grid;
  json cells = json::array();

  for (int m : plan.m_values) {
    for (const std::string& cell_kind : plan.cells) {
      for (uint64_t seed : plan.seeds) {
        training::RunConfig cfg = plan.base;
        cfg.dataset_dir = plan.dataset_dir;
        cfg.sequence_length = m;
        cfg.split_seed = split_seed;
        cfg.seed = sub_seed(
            master_seed, "ablation:" + cell_kind + ":M" + std::to_string(m),
            seed);
        if (cell_kind == "no-branch") {
          cfg.no_branch = true;
          cfg.finetune_epochs = 0;
        } else if (cell_kind == "3-class") {
          cfg.no_branch = false;
          cfg.n_protocol_classes = 3;
        } else if (cell_kind == "6-class") {
          cfg.no_branch = false;
          cfg.n_protocol_classes = 6;
        } else {
          throw InvalidParameterError("ablation: unknown cell " + cell_kind);
        }
        const std::string cell_name = cell_kind + "_M" + std::to_string(m) +
                                      "_s" + std::to_string(seed);
        cfg.out_dir = (fs::path(out_dir) / cell_name).string();

        json cell{{"cell", cell_kind},
                  {"M", m},
                  {"plan_seed", seed},
                  {"run_seed", cfg.seed},
                  {"dir", cell_name}};
        try {
          const RunOutcome outcome = run_training(cfg, plan.eval);
          const evaluation::MetricsReport& rep = outcome.headline;
          CellData& data = grid[{m, cell_kind}];
          for (const evaluation::ScanMetrics& s : rep.per_scan) {
            data.frame.push_back(s.eps_frame);
            data.acc.push_back(s.eps_acc);
            data.dice.push_back(s.eps_dice);
            data.drift.push_back(s.eps_drift);
          }
          data.run_seeds.push_back(cfg.seed);
          ++data.n_ok;
          cell["status"] = "ok";
          if (outcome.train.branch_taps[0] >= 0) {
            const std::string label =
                std::to_string(outcome.train.branch_taps[1] + 1) + "*/" +
                std::to_string(outcome.train.branch_taps[0] + 1) + "*";
            data.branch_labels.push_back(label);
            cell["branches"] = label;
          }
          cell["eps_drift_mean"] = rep.drift.mean;
        } catch (const std::exception& e) {
          ++failed;
          cell["status"] = "failed";
          cell["error"] = e.what();
          std::cerr << "[ablation] cell " << cell_name
                    << " failed: " << e.what() << "\n";
        }
        cells.push_back(cell);
      }
    }
  }

  // Table rows per (M, cell) pooled across seeds, t-tests vs same-M no-branch
  std::ofstream table(fs::path(out_dir) / "ablation_table.csv",
                      std::ios::trunc);
  table << "M,num_protocols,branches,eps_frame_mean,eps_frame_std,"
           "eps_acc_mean,eps_acc_std,eps_dice_mean,eps_dice_std,"
           "eps_drift_mean,eps_drift_std,p_frame,p_acc,p_dice,p_drift\n";

  json table_rows = json::array();
  for (const auto& [key, data] : grid) {
    if (data.n_ok == 0) continue;
    const bool is_baseline = key.cell == "no-branch";
    const std::string protocols =
        is_baseline ? "n/a" : (key.cell == "3-class" ? "3" : "6");
    std::string branches = "No-branch";
    if (!is_baseline) {
      branches.clear();
      for (size_t i = 0; i < data.branch_labels.size(); ++i)
        branches += (i ? ";" : "") + data.branch_labels[i];
    }

    std::string pvals = ",,,";
    json pjson = nullptr;
    const auto base_it = grid.find({key.m, "no-branch"});
    if (!is_baseline && base_it != grid.end() && base_it->second.n_ok > 0) {
      const CellData& base = base_it->second;
      const double pf = stats::welch_t_test(data.frame, base.frame).p_value;
      const double pa = stats::welch_t_test(data.acc, base.acc).p_value;
      const double pd = stats::welch_t_test(data.dice, base.dice).p_value;
      const double pr = stats::welch_t_test(data.drift, base.drift).p_value;
      std::ostringstream os;
      os.precision(6);
      os << pf << "," << pa << "," << pd << "," << pr;
      pvals = os.str();
      pjson = {{"eps_frame", pf}, {"eps_acc", pa}, {"eps_dice", pd},
               {"eps_drift", pr}};
    }

    table << key.m << "," << protocols << "," << branches << ","
          << fmt_mean_std(data.frame) << "," << fmt_mean_std(data.acc) << ","
          << fmt_mean_std(data.dice) << "," << fmt_mean_std(data.drift) << ","
          << pvals << "\n";

    table_rows.push_back(
        {{"M", key.m},
         {"num_protocols", protocols},
         {"branches", branches},
         {"eps_frame", {{"mean", stats::mean(data.frame)},
                        {"std", data.frame.size() > 1
                                    ? stats::sample_std(data.frame)
                                    : 0.0}}},
         {"eps_acc", {{"mean", stats::mean(data.acc)},
                      {"std", data.acc.size() > 1 ? stats::sample_std(data.acc)
                                                  : 0.0}}},
         {"eps_dice", {{"mean", stats::mean(data.dice)},
                       {"std", data.dice.size() > 1
                                   ? stats::sample_std(data.dice)
                                   : 0.0}}},
         {"eps_drift", {{"mean", stats::mean(data.drift)},
                        {"std", data.drift.size() > 1
                                    ? stats::sample_std(data.drift)
                                    : 0.0}}},
         {"p_values_vs_no_branch", pjson}});
  }

  json summary{{"split_seed", split_seed},
               {"cells", cells},
               {"table", table_rows},
               {"failed_cells", failed},
               {"significance_level", 0.05}};
  std::ofstream out(fs::path(out_dir) / "ablation_summary.json",
                    std::ios::trunc);
  out << summary.dump(2) << "\n";
  return failed;
}

// ---------------------------------------------------------------------------
// plot data
// ---------------------------------------------------------------------------

void cmd_plot_data(const std::vector<std::string>& run_dirs,
                   const std::string& out_dir) {
  fs::create_directories(out_dir);
  for (const std::string& run_dir : run_dirs) {
    const std::string name = fs::path(run_dir).filename().string();
    const fs::path dst = fs::path(out_dir) / name;
    fs::create_directories(dst);

    json train_summary;
    {
      std::ifstream in(fs::path(run_dir) / "train_summary.json");
      if (!in) {
        std::cerr << "[plot-data] " << run_dir
                  << ": missing train_summary.json, skipping\n";
        continue;
      }
      in >> train_summary;
    }
    const int best_epoch = train_summary.value("best_epoch", -1);
    const bool no_branch =
        train_summary["config"].value("no_branch", false);

    std::ifstream log(fs::path(run_dir) / "log.csv");
    if (!log) {
      std::cerr << "[plot-data] " << run_dir << ": missing log.csv\n";
      continue;
    }
    std::string header;
    std::getline(log, header);
    std::vector<std::string> cols;
    {
      std::stringstream ss(header);
      std::string c;
      while (std::getline(ss, c, ',')) cols.push_back(c);
    }

    std::vector<int> z_cols[2];
    int val_col = -1, rec_col = -1;
    for (int i = 0; i < static_cast<int>(cols.size()); ++i) {
      if (cols[i].rfind("z1_", 0) == 0) z_cols[0].push_back(i);
      if (cols[i].rfind("z2_", 0) == 0) z_cols[1].push_back(i);
      if (cols[i] == "val_selection") val_col = i;
      if (cols[i] == "l_rec") rec_col = i;
    }

    std::ofstream trace1(dst / "descriptor_trace_task1.csv", std::ios::trunc);
    std::ofstream trace2(dst / "descriptor_trace_task2.csv", std::ios::trunc);
    std::ofstream losses(dst / "losses.csv", std::ios::trunc);
    auto write_trace_header = [&](std::ofstream& f, int task) {
      f << "epoch";
      for (size_t i = 1; i <= z_cols[task].size(); ++i)
        f << ",z_" << i;
      f << "\n";
    };
    write_trace_header(trace1, 0);
    write_trace_header(trace2, 1);
    losses << "epoch,l_rec,val_selection\n";

    std::string line;
    while (std::getline(log, line)) {
      std::vector<std::string> cells;
      std::stringstream ss(line);
      std::string c;
      while (std::getline(ss, c, ',')) cells.push_back(c);
      if (cells.empty()) continue;
      const std::string& epoch = cells[0];
      auto emit = [&](std::ofstream& f, int task) {
        f << epoch;
        for (int idx : z_cols[task]) f << "," << cells[idx];
        f << "\n";
      };
      if (!z_cols[0].empty()) emit(trace1, 0);
      if (!z_cols[1].empty()) emit(trace2, 1);
      losses << epoch << "," << (rec_col >= 0 ? cells[rec_col] : "") << ","
             << (val_col >= 0 ? cells[val_col] : "") << "\n";
    }

    json marker{{"best_epoch", best_epoch},
                {"branches", train_summary.contains("branches")
                                 ? train_summary["branches"]
                                 : json(nullptr)}};
    std::ofstream mk(dst / "marker.json", std::ios::trunc);
    mk << marker.dump(2) << "\n";

    if (no_branch)
      std::cerr << "[plot-data] " << name
                << ": no-branch run, descriptor traces are empty\n";
  }
}

}  // namespace echopose::harness
