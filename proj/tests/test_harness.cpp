#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "echopose/errors.hpp"
#include "echopose/harness.hpp"
#include "echopose/scan_io.hpp"

using namespace echopose;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

harness::GenConfig tiny_gen() {
  harness::GenConfig gen;
  gen.n_subjects = 2;
  gen.forearms_per_subject = 2;
  gen.image_h = 16;
  gen.image_w = 16;
  gen.k_blobs = 10;
  gen.n_frames_min = 8;
  gen.n_frames_max = 12;
  gen.path_length_min_mm = 20.0;
  gen.path_length_max_mm = 30.0;
  return gen;
}

training::RunConfig tiny_train() {
  training::RunConfig cfg;
  cfg.sequence_length = 4;
  cfg.batch_size = 4;
  cfg.epochs = 3;
  cfg.finetune_epochs = 1;
  cfg.channels = {4, 6};
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("gen-data writes the full grid plus a manifest") {
  TempDir tmp("echopose_gen_test");
  const std::string out = (tmp.path / "data").string();
  harness::cmd_gen_data(tiny_gen(), out, 11, false);

  // 2 subjects x 2 forearms x 6 protocols
  int count = 0;
  for (const auto& e : fs::directory_iterator(out))
    if (e.path().extension() == ".scan") ++count;
  CHECK(count == 24);

  const json manifest = json::parse(slurp(fs::path(out) / "manifest.json"));
  CHECK(manifest["n_scans"] == 24);
  std::set<int> class6;
  for (const auto& s : manifest["scans"])
    class6.insert(s["protocol"]["class_id6"].get<int>());
  CHECK(class6.size() == 6);  // all six protocol classes present

  // scans load and carry consistent labels
  const auto scans = dataset::load_scans(out);
  CHECK(scans.size() == 24);
  for (const auto& s : scans) {
    CHECK(s.subject_id >= 0);
    CHECK(s.subject_id < 2);
    CHECK(s.n_frames() >= 8);
    CHECK(s.n_frames() <= 12);
  }
}

TEST_CASE("gen-data refuses a non-empty directory without force") {
  TempDir tmp("echopose_gen_refuse");
  const std::string out = (tmp.path / "data").string();
  fs::create_directories(out);
  std::ofstream(fs::path(out) / "existing.txt") << "x";
  CHECK_THROWS(harness::cmd_gen_data(tiny_gen(), out, 1, false));
  harness::cmd_gen_data(tiny_gen(), out, 1, true);  // force succeeds
  CHECK(fs::exists(fs::path(out) / "manifest.json"));
}

TEST_CASE("gen-data is byte-identical under the same seed") {
  TempDir tmp("echopose_gen_det");
  const std::string a = (tmp.path / "a").string();
  const std::string b = (tmp.path / "b").string();
  harness::cmd_gen_data(tiny_gen(), a, 7, false);
  harness::cmd_gen_data(tiny_gen(), b, 7, false);
  int checked = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    const fs::path other = fs::path(b) / e.path().filename();
    REQUIRE(fs::exists(other));
    CHECK(slurp(e.path()) == slurp(other));
    ++checked;
  }
  CHECK(checked == 25);  // 24 scans + manifest

  const std::string c = (tmp.path / "c").string();
  harness::cmd_gen_data(tiny_gen(), c, 8, false);
  CHECK(slurp(fs::path(a) / "s00_f0_p0.scan") !=
        slurp(fs::path(c) / "s00_f0_p0.scan"));
}

TEST_CASE("variance sweep: table rows, medians, per-cell reproducibility") {
  TempDir tmp("echopose_sweep_test");
  const std::string data = (tmp.path / "data").string();
  harness::GenConfig gen = tiny_gen();
  gen.n_subjects = 4;  // enough subjects for Sub50 to bite
  harness::cmd_gen_data(gen, data, 21, false);

  harness::SweepPlan plan;
  plan.dataset_dir = data;
  plan.modes = {"All", "Straight"};
  plan.seeds = {1};
  plan.base = tiny_train();
  plan.eval.pixel_stride = 4;

  const std::string out = (tmp.path / "sweep").string();
  const int failed = harness::cmd_variance_sweep(plan, out, 99);
  CHECK(failed == 0);

  const json summary = json::parse(slurp(fs::path(out) / "sweep_summary.json"));
  CHECK(summary["cells"].size() == 2);
  CHECK(summary["median_eps_acc_by_mode"].contains("All"));
  CHECK(summary["failed_cells"] == 0);

  // table: header + one row per cell
  std::stringstream table(slurp(fs::path(out) / "sweep_table.csv"));
  std::string line;
  int rows = 0;
  std::getline(table, line);
  CHECK(line.rfind("mode,seed,run_seed", 0) == 0);
  while (std::getline(table, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 2);

  // per-cell isolation: re-running one cell with its recorded seed
  // reproduces the same headline metrics
  const json cell = summary["cells"][0];
  training::RunConfig rerun = tiny_train();
  rerun.dataset_dir = data;
  rerun.variance_mode = cell["mode"];
  rerun.no_branch = true;
  rerun.finetune_epochs = 0;
  rerun.seed = cell["run_seed"].get<uint64_t>();
  rerun.split_seed = summary["split_seed"].get<uint64_t>();
  rerun.out_dir = (tmp.path / "rerun").string();
  const harness::RunOutcome outcome = harness::run_training(rerun, plan.eval);
  CHECK(outcome.headline.acc.mean ==
        doctest::Approx(cell["eps_acc"]["mean"].get<double>())
            .epsilon(1e-12));
}

TEST_CASE("ablation: schema, branch indices, t-tests, plot data") {
  TempDir tmp("echopose_ablation_test");
  const std::string data = (tmp.path / "data").string();
  harness::cmd_gen_data(tiny_gen(), data, 31, false);

  harness::AblationPlan plan;
  plan.dataset_dir = data;
  plan.cells = {"no-branch", "6-class"};
  plan.m_values = {4};
  plan.seeds = {1, 2};
  plan.base = tiny_train();

  const std::string out = (tmp.path / "ablation").string();
  const int failed = harness::cmd_ablation(plan, out, 77);
  CHECK(failed == 0);

  const std::string table = slurp(fs::path(out) / "ablation_table.csv");
  std::stringstream ss(table);
  std::string header;
  std::getline(ss, header);
  CHECK(header ==
        "M,num_protocols,branches,eps_frame_mean,eps_frame_std,eps_acc_mean,"
        "eps_acc_std,eps_dice_mean,eps_dice_std,eps_drift_mean,eps_drift_std,"
        "p_frame,p_acc,p_dice,p_drift");

  bool saw_baseline = false, saw_branch = false;
  std::string line;
  while (std::getline(ss, line)) {
    if (line.find(",n/a,No-branch,") != std::string::npos) saw_baseline = true;
    if (line.find(",6,") != std::string::npos &&
        line.find("*") != std::string::npos)
      saw_branch = true;
  }
  CHECK(saw_baseline);
  CHECK(saw_branch);

  const json summary =
      json::parse(slurp(fs::path(out) / "ablation_summary.json"));
  for (const auto& cell : summary["cells"]) {
    CHECK(cell["status"] == "ok");
    if (cell.contains("branches")) {
      // indices are 1-based: "p*/a*" with p, a in [1, I]
      const std::string label = cell["branches"].get<std::string>();
      const int p = label[0] - '0';
      const int a = label[3] - '0';
      CHECK(p >= 1);
      CHECK(p <= 2);
      CHECK(a >= 1);
      CHECK(a <= 2);
    }
  }
  // p-values present on the branch row
  bool has_p = false;
  for (const auto& row : summary["table"]) {
    if (row["num_protocols"] == "6") {
      REQUIRE_FALSE(row["p_values_vs_no_branch"].is_null());
      const double p = row["p_values_vs_no_branch"]["eps_drift"].get<double>();
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
      has_p = true;
    }
  }
  CHECK(has_p);

  SUBCASE("plot-data traces reconstruct the finalized branches") {
    std::vector<std::string> run_dirs;
    for (const auto& cell : summary["cells"])
      run_dirs.push_back(
          (fs::path(out) / cell["dir"].get<std::string>()).string());
    const std::string plots = (tmp.path / "plots").string();
    harness::cmd_plot_data(run_dirs, plots);

    for (const auto& cell : summary["cells"]) {
      const fs::path dir = fs::path(plots) / cell["dir"].get<std::string>();
      REQUIRE(fs::exists(dir / "descriptor_trace_task1.csv"));
      REQUIRE(fs::exists(dir / "marker.json"));
      const json marker = json::parse(slurp(dir / "marker.json"));

      std::stringstream trace(slurp(dir / "descriptor_trace_task2.csv"));
      std::string tline;
      std::getline(trace, tline);  // header
      std::vector<std::vector<double>> rows;
      while (std::getline(trace, tline)) {
        if (tline.empty()) continue;
        std::vector<double> vals;
        std::stringstream cs(tline);
        std::string cell_text;
        while (std::getline(cs, cell_text, ','))
          vals.push_back(std::stod(cell_text));
        rows.push_back(vals);
      }
      if (cell["cell"] == "no-branch") {
        CHECK(rows.empty());  // no descriptor traces for the baseline
        continue;
      }
      // every epoch row: z sums to 1
      for (const auto& row : rows) {
        double sum = 0.0;
        for (size_t i = 1; i < row.size(); ++i) sum += row[i];
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
      }
      // argmax at the marker epoch equals the reported protocol branch
      const int best_epoch = marker["best_epoch"].get<int>();
      REQUIRE(best_epoch >= 0);
      REQUIRE(best_epoch < static_cast<int>(rows.size()));
      const auto& row = rows[best_epoch];
      int arg = 1;
      for (size_t i = 2; i < row.size(); ++i)
        if (row[i] > row[arg]) arg = static_cast<int>(i);
      const int reported = marker["branches"]["protocol_tap"].get<int>();
      CHECK(arg == reported);  // both 1-based over taps
    }
  }
}

TEST_CASE("full pipeline determinism: identical JSON summaries") {
  TempDir tmp("echopose_determinism");
  const uint64_t master = 12345;

  auto run_pipeline = [&](const std::string& tag) {
    const std::string data = (tmp.path / (tag + "_data")).string();
    harness::cmd_gen_data(tiny_gen(), data, sub_seed(master, "data"), false);
    training::RunConfig cfg = tiny_train();
    cfg.dataset_dir = data;
    cfg.out_dir = (tmp.path / (tag + "_run")).string();
    cfg.seed = sub_seed(master, "run");
    cfg.split_seed = sub_seed(master, "split");
    harness::EvalSettings eval;
    const harness::RunOutcome outcome = harness::run_training(cfg, eval);
    // strip the directory-dependent fields before comparing
    json j = json::parse(slurp(outcome.summary_path));
    j["config"].erase("dataset_dir");
    j["config"].erase("out_dir");
    return j.dump();
  };

  CHECK(run_pipeline("a") == run_pipeline("b"));
}
