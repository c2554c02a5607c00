#pragma once

#include <string>
#include <vector>

#include "echopose/geometry.hpp"
#include "echopose/model.hpp"
#include "echopose/phantom.hpp"

namespace echopose::evaluation {

using geometry::FrameGeometry;
using geometry::RigidTransform;

struct EvalConfig {
  int pixel_stride = 4;       // eps_acc / eps_dice grids
  double voxel_size_mm = 1.0;
};

// Mean over adjacent pairs of the mean corner-point distance between the
// gt-transformed and prediction-transformed frame corners (local errors, no
// accumulation).
double eps_frame(const std::vector<RigidTransform>& pred_rels,
                 const std::vector<RigidTransform>& gt_rels,
                 const FrameGeometry& geometry);

// Accumulated tracking error: mean distance over all grid pixels of frames
// k >= 1 between the predicted and ground-truth chains, both expressed
// relative to frame 0.
double eps_acc(const std::vector<RigidTransform>& pred_rels,
               const std::vector<RigidTransform>& gt_world,
               const FrameGeometry& geometry, int stride);

// Dice overlap of the voxelized point sets (voxel = floor(p / size)).
double eps_dice(const std::vector<RigidTransform>& pred_rels,
                const std::vector<RigidTransform>& gt_world,
                const FrameGeometry& geometry, double voxel_size_mm,
                int stride);

// Corner error of the final frame under the accumulated transforms.
double eps_drift(const std::vector<RigidTransform>& pred_rels,
                 const std::vector<RigidTransform>& gt_world,
                 const FrameGeometry& geometry);

struct ScanMetrics {
  std::string scan_id;
  double eps_frame = 0.0;
  double eps_acc = 0.0;
  double eps_dice = 0.0;
  double eps_drift = 0.0;
};

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;  // sample std over scans
};

struct MetricsReport {
  std::vector<ScanMetrics> per_scan;
  Aggregate frame, acc, dice, drift;
  std::vector<std::string> skipped_scans;  // shorter than the model's M
  int pixel_stride = 0;
  double voxel_size_mm = 0.0;

  void finalize_aggregates();
};

// Window plan for scan-wide prediction: windows advance by M-1 frames so
// each adjacent pair is predicted exactly once; the final partial window is
// right-aligned and contributes only its missing tail pairs.
struct Window {
  int start = 0;       // first frame of the window
  int first_pair = 0;  // first pair index (within the window: first_pair-start)
};
std::vector<Window> plan_windows(int n_frames, int m);

std::vector<RigidTransform> predict_scan_rels(model::Model& net,
                                              const phantom::ScanRecord& scan);

// All four metrics over every evaluable scan. Throws InsufficientDataError
// when no scan is long enough.
MetricsReport evaluate_model(model::Model& net,
                             const std::vector<phantom::ScanRecord>& scans,
                             const EvalConfig& cfg);

// an oracle hook for tests: evaluate precomputed rels instead of a model
ScanMetrics evaluate_rels(const std::vector<RigidTransform>& pred_rels,
                          const phantom::ScanRecord& scan,
                          const EvalConfig& cfg);

std::string report_to_json_string(const MetricsReport& report);
void write_report_json(const MetricsReport& report, const std::string& path);
void write_report_csv(const MetricsReport& report, const std::string& path,
                      const std::string& condition);

}  // namespace echopose::evaluation
