#include "echopose/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "echopose/errors.hpp"
#include "echopose/parallel.hpp"

namespace echopose::evaluation {

using geometry::Mat4;
using geometry::Vec3;
using json = nlohmann::json;

namespace {

// gt world poses re-expressed relative to frame 0 (frame 0 exactly identity)
std::vector<Mat4> gt_relative_chain(const std::vector<RigidTransform>& world) {
  std::vector<Mat4> out(world.size());
  if (world.empty()) return out;
  out[0] = Mat4::identity();
  const RigidTransform inv0 = geometry::invert(world[0]);
  const Mat4 m0 = geometry::to_matrix(inv0);
  for (size_t k = 1; k < world.size(); ++k)
    out[k] = m0 * geometry::to_matrix(world[k]);
  return out;
}

double mean_corner_gap(const Mat4& a, const Mat4& b,
                       const std::array<Vec3, 4>& corners) {
  double sum = 0.0;
  for (const Vec3& c : corners) sum += (a.apply(c) - b.apply(c)).norm();
  return sum / 4.0;
}

}  // namespace

double eps_frame(const std::vector<RigidTransform>& pred_rels,
                 const std::vector<RigidTransform>& gt_rels,
                 const FrameGeometry& geometry) {
  if (pred_rels.size() != gt_rels.size())
    throw InvalidInputError("eps_frame: length mismatch");
  if (pred_rels.empty()) return 0.0;
  const auto corners = geometry::frame_corners(geometry);
  double sum = 0.0;
  for (size_t k = 0; k < pred_rels.size(); ++k)
    sum += mean_corner_gap(geometry::to_matrix(pred_rels[k]),
                           geometry::to_matrix(gt_rels[k]), corners);
  return sum / static_cast<double>(pred_rels.size());
}

double eps_acc(const std::vector<RigidTransform>& pred_rels,
               const std::vector<RigidTransform>& gt_world,
               const FrameGeometry& geometry, int stride) {
  if (pred_rels.size() + 1 != gt_world.size())
    throw InvalidInputError("eps_acc: rels/world length mismatch");
  if (pred_rels.empty()) return 0.0;
  const std::vector<Mat4> pred = geometry::accumulate_matrices(pred_rels);
  const std::vector<Mat4> gt = gt_relative_chain(gt_world);
  const std::vector<Vec3> grid = geometry::frame_pixel_grid(geometry, stride);

  const int64_t n_pts = static_cast<int64_t>(grid.size());
  double sum = 0.0;
  for (size_t k = 1; k < pred.size(); ++k) {
    const Mat4& mp = pred[k];
    const Mat4& mg = gt[k];
    sum += block_sum(n_pts, [&](int64_t i) {
      return (mp.apply(grid[i]) - mg.apply(grid[i])).norm();
    });
  }
  return sum / (static_cast<double>(pred_rels.size()) * n_pts);
}

double eps_dice(const std::vector<RigidTransform>& pred_rels,
                const std::vector<RigidTransform>& gt_world,
                const FrameGeometry& geometry, double voxel_size_mm,
                int stride) {
  if (pred_rels.size() + 1 != gt_world.size())
    throw InvalidInputError("eps_dice: rels/world length mismatch");
  if (!(voxel_size_mm > 0.0))
    throw InvalidParameterError("eps_dice: voxel size must be positive");
  const std::vector<Mat4> pred = geometry::accumulate_matrices(pred_rels);
  const std::vector<Mat4> gt = gt_relative_chain(gt_world);
  const std::vector<Vec3> grid = geometry::frame_pixel_grid(geometry, stride);

  using Voxel = std::array<int64_t, 3>;
  // the reconstructed volume: frames k >= 1 (frame 0 is the shared reference
  // and carries no prediction)
  auto voxelize = [&](const std::vector<Mat4>& chain) {
    std::set<Voxel> vox;
    for (size_t k = 1; k < chain.size(); ++k) {
      const Mat4& m = chain[k];
      for (const Vec3& p : grid) {
        const Vec3 q = m.apply(p);
        vox.insert({static_cast<int64_t>(std::floor(q.x / voxel_size_mm)),
                    static_cast<int64_t>(std::floor(q.y / voxel_size_mm)),
                    static_cast<int64_t>(std::floor(q.z / voxel_size_mm))});
      }
    }
    return vox;
  };

  const std::set<Voxel> a = voxelize(gt);
  const std::set<Voxel> b = voxelize(pred);
  if (a.empty() || b.empty())
    throw ContractViolationError("eps_dice: empty voxel set");
  int64_t inter = 0;
  for (const Voxel& v : a) inter += b.count(v);
  return 2.0 * static_cast<double>(inter) /
         static_cast<double>(a.size() + b.size());
}

double eps_drift(const std::vector<RigidTransform>& pred_rels,
                 const std::vector<RigidTransform>& gt_world,
                 const FrameGeometry& geometry) {
  if (pred_rels.size() + 1 != gt_world.size())
    throw InvalidInputError("eps_drift: rels/world length mismatch");
  if (pred_rels.empty()) return 0.0;
  const std::vector<Mat4> pred = geometry::accumulate_matrices(pred_rels);
  const std::vector<Mat4> gt = gt_relative_chain(gt_world);
  return mean_corner_gap(pred.back(), gt.back(),
                         geometry::frame_corners(geometry));
}

void MetricsReport::finalize_aggregates() {
  auto agg = [&](auto field) {
    Aggregate a;
    const int n = static_cast<int>(per_scan.size());
    if (n == 0) return a;
    double sum = 0.0;
    for (const ScanMetrics& s : per_scan) sum += field(s);
    a.mean = sum / n;
    if (n > 1) {
      double ss = 0.0;
      for (const ScanMetrics& s : per_scan) {
        const double d = field(s) - a.mean;
        ss += d * d;
      }
      a.stddev = std::sqrt(ss / (n - 1));
    }
    return a;
  };
  frame = agg([](const ScanMetrics& s) { return s.eps_frame; });
  acc = agg([](const ScanMetrics& s) { return s.eps_acc; });
  dice = agg([](const ScanMetrics& s) { return s.eps_dice; });
  drift = agg([](const ScanMetrics& s) { return s.eps_drift; });
}

std::vector<Window> plan_windows(int n_frames, int m) {
  if (m < 2 || n_frames < m)
    throw InsufficientDataError("plan_windows: scan shorter than M");
  std::vector<Window> plan;
  int next_pair = 0;
  while (next_pair < n_frames - 1) {
    const int start = std::min(next_pair, n_frames - m);
    plan.push_back({start, next_pair});
    next_pair = start + m - 1;
  }
  return plan;
}

std::vector<RigidTransform> predict_scan_rels(
    model::Model& net, const phantom::ScanRecord& scan) {
  const int m = net.config().input_frames;
  const int n = scan.n_frames();
  const int h = scan.geometry.height_px;
  const int w = scan.geometry.width_px;

  std::vector<RigidTransform> rels(n - 1);
  for (const Window& win : plan_windows(n, m)) {
    nn::Tensor x{1, m, h, w};
    for (int f = 0; f < m; ++f) {
      const std::vector<float>& frame = scan.frames[win.start + f];
      double* dst = x.data() + int64_t(f) * h * w;
      for (int i = 0; i < h * w; ++i) dst[i] = double(frame[i]) - 0.5;
    }
    const auto pred = net.predict_relative_poses(x);
    for (int k = win.first_pair - win.start; k < m - 1; ++k)
      rels[win.start + k] = pred[0][k];
  }
  return rels;
}

ScanMetrics evaluate_rels(const std::vector<RigidTransform>& pred_rels,
                          const phantom::ScanRecord& scan,
                          const EvalConfig& cfg) {
  std::vector<RigidTransform> gt_rels;
  gt_rels.reserve(scan.world_poses.size() - 1);
  for (size_t k = 0; k + 1 < scan.world_poses.size(); ++k)
    gt_rels.push_back(geometry::relative_pose(scan.world_poses[k],
                                              scan.world_poses[k + 1]));
  ScanMetrics sm;
  sm.scan_id = scan.scan_id;
  sm.eps_frame = eps_frame(pred_rels, gt_rels, scan.geometry);
  sm.eps_acc = eps_acc(pred_rels, scan.world_poses, scan.geometry,
                       cfg.pixel_stride);
  sm.eps_dice = eps_dice(pred_rels, scan.world_poses, scan.geometry,
                         cfg.voxel_size_mm, cfg.pixel_stride);
  sm.eps_drift = eps_drift(pred_rels, scan.world_poses, scan.geometry);
  return sm;
}

MetricsReport evaluate_model(model::Model& net,
                             const std::vector<phantom::ScanRecord>& scans,
                             const EvalConfig& cfg) {
  MetricsReport report;
  report.pixel_stride = cfg.pixel_stride;
  report.voxel_size_mm = cfg.voxel_size_mm;
  const int m = net.config().input_frames;
  for (const phantom::ScanRecord& scan : scans) {
    if (scan.n_frames() < m) {
      report.skipped_scans.push_back(scan.scan_id);
      continue;
    }
    const std::vector<RigidTransform> rels = predict_scan_rels(net, scan);
    report.per_scan.push_back(evaluate_rels(rels, scan, cfg));
  }
  if (report.per_scan.empty())
    throw InsufficientDataError("evaluate_model: no evaluable scans");
  report.finalize_aggregates();
  return report;
}

std::string report_to_json_string(const MetricsReport& report) {
  json per_scan = json::array();
  for (const ScanMetrics& s : report.per_scan)
    per_scan.push_back({{"scan_id", s.scan_id},
                        {"eps_frame", s.eps_frame},
                        {"eps_acc", s.eps_acc},
                        {"eps_dice", s.eps_dice},
                        {"eps_drift", s.eps_drift}});
  json j{{"per_scan", per_scan},
         {"aggregate",
          {{"eps_frame", {{"mean", report.frame.mean}, {"std", report.frame.stddev}}},
           {"eps_acc", {{"mean", report.acc.mean}, {"std", report.acc.stddev}}},
           {"eps_dice", {{"mean", report.dice.mean}, {"std", report.dice.stddev}}},
           {"eps_drift", {{"mean", report.drift.mean}, {"std", report.drift.stddev}}}}},
         {"skipped_scans", report.skipped_scans},
         {"pixel_stride", report.pixel_stride},
         {"voxel_size_mm", report.voxel_size_mm}};
  return j.dump(2);
}

void write_report_json(const MetricsReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_report_json: cannot open " + path);
  out << report_to_json_string(report) << "\n";
}

void write_report_csv(const MetricsReport& report, const std::string& path,
                      const std::string& condition) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_report_csv: cannot open " + path);
  out << "condition,scan_id,eps_frame,eps_acc,eps_dice,eps_drift\n";
  out.precision(10);
  for (const ScanMetrics& s : report.per_scan)
    out << condition << "," << s.scan_id << "," << s.eps_frame << ","
        << s.eps_acc << "," << s.eps_dice << "," << s.eps_drift << "\n";
}

}  // namespace echopose::evaluation
