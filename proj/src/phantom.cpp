#include "echopose/phantom.hpp"

#include <algorithm>
#include <cmath>

#include "echopose/errors.hpp"

namespace echopose::phantom {

using geometry::Mat4;
using geometry::compose;
using geometry::to_matrix;

// ---------------------------------------------------------------------------
// Subject volumes
// ---------------------------------------------------------------------------

double SubjectField::value(const Vec3& p) const {
  double v = background_offset + background_slope.dot(p);
  for (const GaussianBlob& b : blobs) {
    const double dx = (p.x - b.center.x) / b.axes.x;
    const double dy = (p.y - b.center.y) / b.axes.y;
    const double dz = (p.z - b.center.z) / b.axes.z;
    v += b.amplitude * std::exp(-0.5 * (dx * dx + dy * dy + dz * dz));
  }
  return std::clamp(v, 0.0, 1.0);
}

SubjectField make_subject(uint64_t seed, int k_blobs, const Box& extent) {
  if (k_blobs < 1)
    throw InvalidParameterError("make_subject: k_blobs must be >= 1");
  RandomStream rng(sub_seed(seed, "subject-field"));
  SubjectField f;
  f.seed = seed;

  // Subject-level texture priors: each subject gets its own characteristic
  // blob scale, in-plane anisotropy and brightness, so any window of the
  // volume carries an identity signature (the stand-in for per-subject
  // anatomical appearance).
  const double size_scale = rng.uniform(0.55, 1.7);
  const double elong_x = rng.uniform(0.6, 1.8);
  const double elong_y = rng.uniform(0.6, 1.8);
  const double brightness = rng.uniform(0.55, 1.0);

  f.blobs.reserve(k_blobs);
  for (int k = 0; k < k_blobs; ++k) {
    GaussianBlob b;
    b.center = {rng.uniform(extent.lo.x, extent.hi.x),
                rng.uniform(extent.lo.y, extent.hi.y),
                rng.uniform(extent.lo.z, extent.hi.z)};
    b.axes = {size_scale * elong_x * rng.uniform(2.5, 9.0),
              size_scale * elong_y * rng.uniform(2.5, 9.0),
              size_scale * rng.uniform(2.5, 9.0)};
    b.amplitude = brightness * rng.uniform(0.35, 1.0);
    f.blobs.push_back(b);
  }
  f.background_offset = rng.uniform(0.02, 0.22);
  f.background_slope = {rng.uniform(-0.002, 0.002),
                        rng.uniform(-0.002, 0.002),
                        rng.uniform(-0.002, 0.002)};
  return f;
}

// ---------------------------------------------------------------------------
// Scanning protocols
// ---------------------------------------------------------------------------

const char* to_string(PathShape s) {
  switch (s) {
    case PathShape::Straight: return "straight";
    case PathShape::C: return "C";
    case PathShape::S: return "S";
  }
  return "?";
}

const char* to_string(Orientation o) {
  return o == Orientation::Perpendicular ? "perpendicular" : "parallel";
}

PathShape path_shape_from_string(const std::string& s) {
  if (s == "straight") return PathShape::Straight;
  if (s == "C") return PathShape::C;
  if (s == "S") return PathShape::S;
  throw InvalidParameterError("unknown path shape: " + s);
}

Orientation orientation_from_string(const std::string& s) {
  if (s == "perpendicular") return Orientation::Perpendicular;
  if (s == "parallel") return Orientation::Parallel;
  throw InvalidParameterError("unknown orientation: " + s);
}

void ProtocolSpec::validate() const {
  if (!(path_length_mm > 0.0) || !std::isfinite(path_length_mm))
    throw InvalidParameterError("ProtocolSpec: path_length must be > 0");
  if (!std::isfinite(curvature_per_mm))
    throw InvalidParameterError("ProtocolSpec: non-finite curvature");
  const bool straight = shape == PathShape::Straight;
  if (straight != (curvature_per_mm == 0.0))
    throw InvalidParameterError(
        "ProtocolSpec: curvature must be 0 exactly for straight shapes and "
        "nonzero otherwise");
}

namespace {

// Tangent angle in the x-z bending plane at arc length s.
double tangent_angle(const ProtocolSpec& spec, double s) {
  switch (spec.shape) {
    case PathShape::Straight:
      return 0.0;
    case PathShape::C:
      return spec.curvature_per_mm * s;
    case PathShape::S: {
      const double half = 0.5 * spec.path_length_mm;
      if (s <= half) return spec.curvature_per_mm * s;
      return spec.curvature_per_mm * (spec.path_length_mm - s);
    }
  }
  return 0.0;
}

Vec3 path_position(const ProtocolSpec& spec, double s) {
  const double k = spec.curvature_per_mm;
  switch (spec.shape) {
    case PathShape::Straight:
      return {0.0, 0.0, s};
    case PathShape::C:
      return {(1.0 - std::cos(k * s)) / k, 0.0, std::sin(k * s) / k};
    case PathShape::S: {
      const double L = spec.path_length_mm;
      const double half = 0.5 * L;
      if (s <= half)
        return {(1.0 - std::cos(k * s)) / k, 0.0, std::sin(k * s) / k};
      const Vec3 mid = {(1.0 - std::cos(k * half)) / k, 0.0,
                        std::sin(k * half) / k};
      // second half: theta(u) = k*(L - u)
      const double x = mid.x + (std::cos(k * (L - s)) - std::cos(k * half)) / k;
      const double z = mid.z - (std::sin(k * (L - s)) - std::sin(k * half)) / k;
      return {x, 0.0, z};
    }
  }
  return {};
}

Mat4 rot_y(double a) {
  Mat4 r = Mat4::identity();
  r.m[0][0] = std::cos(a);
  r.m[0][2] = std::sin(a);
  r.m[2][0] = -std::sin(a);
  r.m[2][2] = std::cos(a);
  return r;
}

Mat4 rot_z(double a) {
  Mat4 r = Mat4::identity();
  r.m[0][0] = std::cos(a);
  r.m[0][1] = -std::sin(a);
  r.m[1][0] = std::sin(a);
  r.m[1][1] = std::cos(a);
  return r;
}

constexpr double kPi = 3.14159265358979323846;
constexpr double kMaxPitch = kPi / 2.0 - 0.1;  // gimbal clearance

}  // namespace

std::vector<RigidTransform> protocol_trajectory(const ProtocolSpec& spec,
                                                int n_frames) {
  spec.validate();
  if (n_frames < 2)
    throw InvalidParameterError("protocol_trajectory: n_frames must be >= 2");

  const double max_angle =
      std::abs(spec.curvature_per_mm) * spec.path_length_mm *
      (spec.shape == PathShape::S ? 0.5 : 1.0);
  if (max_angle >= kMaxPitch)
    throw InvalidParameterError(
        "protocol_trajectory: path bends past the gimbal clearance");

  const double step = spec.path_length_mm / (n_frames - 1);
  std::vector<RigidTransform> poses;
  poses.reserve(n_frames);
  for (int k = 0; k < n_frames; ++k) {
    const double s = step * k;
    const double theta = tangent_angle(spec, s);
    Mat4 r = rot_y(theta);
    if (spec.orientation == Orientation::Parallel) r = r * rot_z(kPi / 2.0);
    const Vec3 p = path_position(spec, s);
    r.m[0][3] = p.x;
    r.m[1][3] = p.y;
    r.m[2][3] = p.z;
    poses.push_back(geometry::from_matrix(r));
  }
  return poses;
}

CurvatureStats trajectory_curvature_stats(
    const std::vector<RigidTransform>& world_poses) {
  CurvatureStats stats;
  const int n = static_cast<int>(world_poses.size());
  if (n < 3) return stats;

  std::vector<Vec3> tangent(n);
  std::vector<Vec3> pos(n);
  for (int k = 0; k < n; ++k) {
    const Mat4 m = to_matrix(world_poses[k]);
    tangent[k] = {m.m[0][2], m.m[1][2], m.m[2][2]};  // local z axis
    pos[k] = {m.m[0][3], m.m[1][3], m.m[2][3]};
  }

  // turn axis from the first non-degenerate pair, so the sign convention
  // survives arbitrary rigid offsets of the whole path
  Vec3 axis{0.0, 0.0, 0.0};
  for (int k = 0; k + 1 < n && axis.norm() < 1e-12; ++k) {
    const Vec3& a = tangent[k];
    const Vec3& b = tangent[k + 1];
    axis = {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z,
            a.x * b.y - a.y * b.x};
  }
  const double axis_norm = axis.norm();
  const bool has_axis = axis_norm > 1e-12;
  if (has_axis) axis = axis * (1.0 / axis_norm);

  double abs_sum = 0.0, len_sum = 0.0;
  double first = 0.0, second = 0.0, first_len = 0.0, second_len = 0.0;
  for (int k = 0; k + 1 < n; ++k) {
    const Vec3& a = tangent[k];
    const Vec3& b = tangent[k + 1];
    const double cos_ang = std::clamp(a.dot(b), -1.0, 1.0);
    double ang = std::acos(cos_ang);
    if (has_axis) {
      const Vec3 cr = {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z,
                       a.x * b.y - a.y * b.x};
      if (cr.dot(axis) < 0.0) ang = -ang;
    }
    const double seg = (pos[k + 1] - pos[k]).norm();
    abs_sum += std::abs(ang);
    len_sum += seg;
    if (2 * k < n - 1) {
      first += ang;
      first_len += seg;
    } else {
      second += ang;
      second_len += seg;
    }
  }
  if (len_sum > 0.0) stats.mean_abs = abs_sum / len_sum;
  if (first_len > 0.0) stats.first_half = first / first_len;
  if (second_len > 0.0) stats.second_half = second / second_len;
  return stats;
}

std::vector<RigidTransform> offset_trajectory(
    const std::vector<RigidTransform>& poses, const RigidTransform& offset) {
  std::vector<RigidTransform> out;
  out.reserve(poses.size());
  for (const RigidTransform& p : poses) out.push_back(compose(offset, p));
  return out;
}

std::vector<RigidTransform> perturb_trajectory(
    const std::vector<RigidTransform>& poses, double rot_sigma,
    double trans_sigma, RandomStream& rng) {
  std::vector<RigidTransform> out;
  out.reserve(poses.size());
  for (const RigidTransform& p : poses) {
    RigidTransform wobble;
    wobble.rot = {rng.normal(0.0, rot_sigma), rng.normal(0.0, rot_sigma),
                  rng.normal(0.0, rot_sigma)};
    wobble.trans = {rng.normal(0.0, trans_sigma), rng.normal(0.0, trans_sigma),
                    rng.normal(0.0, trans_sigma)};
    out.push_back(compose(p, wobble));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scans
// ---------------------------------------------------------------------------

std::vector<std::vector<float>> render_frames(
    const SubjectField& subject, const std::vector<RigidTransform>& poses,
    const FrameGeometry& geometry, double speckle_sigma, uint64_t frame_seed) {
  const int h = geometry.height_px;
  const int w = geometry.width_px;
  const int hw = h * w;
  std::vector<std::vector<float>> frames(poses.size());
  std::vector<double> speckle(hw);

  for (size_t k = 0; k < poses.size(); ++k) {
    if (speckle_sigma > 0.0) {
      RandomStream rng(sub_seed(frame_seed, "speckle", k));
      const double half_var = 0.5 * speckle_sigma * speckle_sigma;
      for (int i = 0; i < hw; ++i)
        speckle[i] = std::exp(speckle_sigma * rng.normal() - half_var);
    } else {
      std::fill(speckle.begin(), speckle.end(), 1.0);
    }

    const Mat4 m = to_matrix(poses[k]);
    std::vector<float>& img = frames[k];
    img.resize(hw);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < hw; ++i) {
      const int r = i / w;
      const int c = i % w;
      const Vec3 local{c * geometry.spacing_mm, r * geometry.spacing_mm, 0.0};
      const double v = subject.value(m.apply(local)) * speckle[i];
      img[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  return frames;
}

ScanRecord render_scan(const SubjectField& subject, const ProtocolSpec& spec,
                       int n_frames, const FrameGeometry& geometry,
                       const RenderOptions& options) {
  std::vector<RigidTransform> poses = protocol_trajectory(spec, n_frames);
  poses = offset_trajectory(poses, options.start_offset);
  if (options.wobble_rot_sigma > 0.0 || options.wobble_trans_sigma > 0.0) {
    RandomStream rng(sub_seed(options.frame_seed, "wobble"));
    poses = perturb_trajectory(poses, options.wobble_rot_sigma,
                               options.wobble_trans_sigma, rng);
  }

  ScanRecord scan;
  scan.protocol = spec;
  scan.geometry = geometry;
  scan.world_poses = std::move(poses);
  scan.frames = render_frames(subject, scan.world_poses, geometry,
                              options.speckle_sigma, options.frame_seed);
  scan.subject_seed = subject.seed;
  scan.frame_seed = options.frame_seed;
  return scan;
}

}  // namespace echopose::phantom
