#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace echopose::geometry {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const;
};

// Row-major 4x4 homogeneous transform.
struct Mat4 {
  std::array<std::array<double, 4>, 4> m{};

  static Mat4 identity();
  Mat4 operator*(const Mat4& o) const;
  Vec3 apply(const Vec3& p) const;
  double maxAbsDiff(const Mat4& o) const;
};

// Six-parameter rigid transform: three rotation angles (radians, intrinsic
// Z-Y-X order, i.e. R = Rz(rot[0]) * Ry(rot[1]) * Rx(rot[2])) and three
// translations in millimetres.
struct RigidTransform {
  std::array<double, 3> rot{0.0, 0.0, 0.0};    // [z, y, x] angles
  std::array<double, 3> trans{0.0, 0.0, 0.0};  // [x, y, z] mm

  static RigidTransform identity() { return {}; }
  static RigidTransform translation(double tx, double ty, double tz) {
    return {{0.0, 0.0, 0.0}, {tx, ty, tz}};
  }

  // packed [rz, ry, rx, tx, ty, tz]
  std::array<double, 6> params() const {
    return {rot[0], rot[1], rot[2], trans[0], trans[1], trans[2]};
  }
  static RigidTransform from_params(const double* p) {
    return {{p[0], p[1], p[2]}, {p[3], p[4], p[5]}};
  }
};

// Throws InvalidParameterError on non-finite params.
Mat4 to_matrix(const RigidTransform& t);

// Z-Y-X Euler extraction; valid away from |pitch| = pi/2 (the simulator keeps
// all poses clear of gimbal lock by construction).
RigidTransform from_matrix(const Mat4& m);

RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform invert(const RigidTransform& a);

// invert(world_i) o world_j, so compose(world_i, result) == world_j.
RigidTransform relative_pose(const RigidTransform& world_i,
                             const RigidTransform& world_j);

Vec3 apply(const RigidTransform& t, const Vec3& p);

// Frame-local pose chain: rel[k] takes frame (k+1) coordinates into frame k;
// world[k] takes frame k coordinates into frame-0 coordinates.
struct PoseChain {
  std::vector<RigidTransform> rel;    // N-1
  std::vector<RigidTransform> world;  // N, world[0] == identity
};

PoseChain accumulate(const std::vector<RigidTransform>& rels);

// Matrix form of the accumulated chain (world[0] = I), kept exact by chaining
// 4x4 products instead of round-tripping through Euler angles each step.
std::vector<Mat4> accumulate_matrices(const std::vector<RigidTransform>& rels);

struct FrameGeometry {
  int height_px = 0;
  int width_px = 0;
  double spacing_mm = 1.0;  // isotropic in-plane mm per pixel
};

// The image plane is z = 0 of the frame's local coordinates; pixel (row r,
// col c) sits at (c * spacing, r * spacing, 0).
std::array<Vec3, 4> frame_corners(const FrameGeometry& g);

// ceil(H/stride) * ceil(W/stride) in-plane points, z = 0, row-major.
std::vector<Vec3> frame_pixel_grid(const FrameGeometry& g, int stride);

}  // namespace echopose::geometry
