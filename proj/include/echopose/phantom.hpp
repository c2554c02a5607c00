#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "echopose/geometry.hpp"
#include "echopose/rng.hpp"

namespace echopose::phantom {

using geometry::FrameGeometry;
using geometry::RigidTransform;
using geometry::Vec3;

// ---------------------------------------------------------------------------
// Subject volumes
// ---------------------------------------------------------------------------

struct GaussianBlob {
  Vec3 center;       // mm
  Vec3 axes;         // per-axis sigma, mm
  double amplitude;  // peak contribution
};

struct Box {
  Vec3 lo, hi;
};

// Procedural anatomy stand-in: a sum of Gaussian ellipsoids over a weak
// linear intensity ramp, evaluated analytically (no stored voxel grid) and
// clamped to [0, 1].
struct SubjectField {
  uint64_t seed = 0;
  std::vector<GaussianBlob> blobs;
  double background_offset = 0.0;
  Vec3 background_slope;  // per mm

  double value(const Vec3& p) const;
};

SubjectField make_subject(uint64_t seed, int k_blobs, const Box& extent);

// ---------------------------------------------------------------------------
// Scanning protocols
// ---------------------------------------------------------------------------

enum class PathShape { Straight = 0, C = 1, S = 2 };
enum class Orientation { Perpendicular = 0, Parallel = 1 };

const char* to_string(PathShape s);
const char* to_string(Orientation o);
PathShape path_shape_from_string(const std::string& s);
Orientation orientation_from_string(const std::string& s);

struct ProtocolSpec {
  PathShape shape = PathShape::Straight;
  Orientation orientation = Orientation::Perpendicular;
  double path_length_mm = 0.0;
  double curvature_per_mm = 0.0;  // 0 iff shape == Straight

  int class_id3() const { return static_cast<int>(shape); }
  int class_id6() const {
    return static_cast<int>(shape) + 3 * static_cast<int>(orientation);
  }
  void validate() const;  // throws InvalidParameterError
};

// World poses of the canonical protocol path: frame 0 at the origin, initial
// tangent +z, curvature bending in the x-z plane, arc length step
// path_length/(n_frames-1). Perpendicular frames have the image plane normal
// along the tangent; parallel frames are the perpendicular ones rotated 90
// degrees about the tangent.
std::vector<RigidTransform> protocol_trajectory(const ProtocolSpec& spec,
                                                int n_frames);

// Mean |turn angle per mm| and signed first/second-half split; separates
// straight/C/S trajectories exactly in the noise-free case.
struct CurvatureStats {
  double mean_abs = 0.0;
  double first_half = 0.0;
  double second_half = 0.0;
};
CurvatureStats trajectory_curvature_stats(
    const std::vector<RigidTransform>& world_poses);

// world'_k = offset o world_k; relative poses are unchanged.
std::vector<RigidTransform> offset_trajectory(
    const std::vector<RigidTransform>& poses, const RigidTransform& offset);

// Tracked freehand wobble: each pose is perturbed independently by a small
// right-multiplied transform. Ground truth stays exact (the wobble is part of
// the recorded poses).
std::vector<RigidTransform> perturb_trajectory(
    const std::vector<RigidTransform>& poses, double rot_sigma,
    double trans_sigma, RandomStream& rng);

// ---------------------------------------------------------------------------
// Scans
// ---------------------------------------------------------------------------

struct ScanRecord {
  std::string scan_id;
  int subject_id = -1;
  ProtocolSpec protocol;
  FrameGeometry geometry;
  std::vector<std::vector<float>> frames;    // N x (H*W), row-major, [0,1]
  std::vector<RigidTransform> world_poses;   // N
  uint64_t subject_seed = 0;
  uint64_t frame_seed = 0;

  int n_frames() const { return static_cast<int>(frames.size()); }
};

struct RenderOptions {
  double speckle_sigma = 0.0;  // per-pixel log-normal, mean 1
  uint64_t frame_seed = 0;
  RigidTransform start_offset = RigidTransform::identity();
  double wobble_rot_sigma = 0.0;    // radians, per frame
  double wobble_trans_sigma = 0.0;  // mm, per frame
};

// Renders frame k by sampling the subject field on frame k's pixel grid
// mapped through world pose k, multiplying by speckle and clamping to [0,1].
// Deterministic in (subject.seed, options.frame_seed).
ScanRecord render_scan(const SubjectField& subject, const ProtocolSpec& spec,
                       int n_frames, const FrameGeometry& geometry,
                       const RenderOptions& options);

// Rendering core for an arbitrary pose list.
std::vector<std::vector<float>> render_frames(
    const SubjectField& subject, const std::vector<RigidTransform>& poses,
    const FrameGeometry& geometry, double speckle_sigma, uint64_t frame_seed);

}  // namespace echopose::phantom
