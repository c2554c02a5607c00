#include "echopose/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "echopose/errors.hpp"

namespace echopose::geometry {

double Vec3::norm() const { return std::sqrt(x * x + y * y + z * z); }

Mat4 Mat4::identity() {
  Mat4 r;
  for (int i = 0; i < 4; ++i) r.m[i][i] = 1.0;
  return r;
}

Mat4 Mat4::operator*(const Mat4& o) const {
  Mat4 r;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      double s = 0.0;
      for (int k = 0; k < 4; ++k) s += m[i][k] * o.m[k][j];
      r.m[i][j] = s;
    }
  }
  return r;
}

Vec3 Mat4::apply(const Vec3& p) const {
  return {m[0][0] * p.x + m[0][1] * p.y + m[0][2] * p.z + m[0][3],
          m[1][0] * p.x + m[1][1] * p.y + m[1][2] * p.z + m[1][3],
          m[2][0] * p.x + m[2][1] * p.y + m[2][2] * p.z + m[2][3]};
}

double Mat4::maxAbsDiff(const Mat4& o) const {
  double d = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      d = std::max(d, std::abs(m[i][j] - o.m[i][j]));
  return d;
}

Mat4 to_matrix(const RigidTransform& t) {
  for (double a : t.rot)
    if (!std::isfinite(a))
      throw InvalidParameterError("to_matrix: non-finite rotation angle");
  for (double v : t.trans)
    if (!std::isfinite(v))
      throw InvalidParameterError("to_matrix: non-finite translation");

  const double ca = std::cos(t.rot[0]), sa = std::sin(t.rot[0]);  // z
  const double cb = std::cos(t.rot[1]), sb = std::sin(t.rot[1]);  // y
  const double cg = std::cos(t.rot[2]), sg = std::sin(t.rot[2]);  // x

  Mat4 r = Mat4::identity();
  // R = Rz(a) * Ry(b) * Rx(g)
  r.m[0][0] = ca * cb;
  r.m[0][1] = ca * sb * sg - sa * cg;
  r.m[0][2] = ca * sb * cg + sa * sg;
  r.m[1][0] = sa * cb;
  r.m[1][1] = sa * sb * sg + ca * cg;
  r.m[1][2] = sa * sb * cg - ca * sg;
  r.m[2][0] = -sb;
  r.m[2][1] = cb * sg;
  r.m[2][2] = cb * cg;
  r.m[0][3] = t.trans[0];
  r.m[1][3] = t.trans[1];
  r.m[2][3] = t.trans[2];
  return r;
}

RigidTransform from_matrix(const Mat4& m) {
  RigidTransform t;
  const double s = std::clamp(-m.m[2][0], -1.0, 1.0);
  t.rot[1] = std::asin(s);
  t.rot[0] = std::atan2(m.m[1][0], m.m[0][0]);
  t.rot[2] = std::atan2(m.m[2][1], m.m[2][2]);
  t.trans = {m.m[0][3], m.m[1][3], m.m[2][3]};
  return t;
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  return from_matrix(to_matrix(a) * to_matrix(b));
}

RigidTransform invert(const RigidTransform& a) {
  const Mat4 m = to_matrix(a);
  Mat4 inv = Mat4::identity();
  // rigid inverse: R^T, -R^T t
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) inv.m[i][j] = m.m[j][i];
  for (int i = 0; i < 3; ++i) {
    inv.m[i][3] =
        -(inv.m[i][0] * m.m[0][3] + inv.m[i][1] * m.m[1][3] +
          inv.m[i][2] * m.m[2][3]);
  }
  return from_matrix(inv);
}

RigidTransform relative_pose(const RigidTransform& world_i,
                             const RigidTransform& world_j) {
  return compose(invert(world_i), world_j);
}

Vec3 apply(const RigidTransform& t, const Vec3& p) {
  return to_matrix(t).apply(p);
}

std::vector<Mat4> accumulate_matrices(
    const std::vector<RigidTransform>& rels) {
  std::vector<Mat4> world(rels.size() + 1);
  world[0] = Mat4::identity();
  for (size_t k = 0; k < rels.size(); ++k)
    world[k + 1] = world[k] * to_matrix(rels[k]);
  return world;
}

PoseChain accumulate(const std::vector<RigidTransform>& rels) {
  PoseChain chain;
  chain.rel = rels;
  const std::vector<Mat4> world = accumulate_matrices(rels);
  chain.world.reserve(world.size());
  for (const Mat4& m : world) chain.world.push_back(from_matrix(m));
  return chain;
}

std::array<Vec3, 4> frame_corners(const FrameGeometry& g) {
  if (g.height_px < 1 || g.width_px < 1 || !(g.spacing_mm > 0.0))
    throw InvalidParameterError("frame_corners: bad geometry");
  const double X = (g.width_px - 1) * g.spacing_mm;
  const double Y = (g.height_px - 1) * g.spacing_mm;
  return {Vec3{0.0, 0.0, 0.0}, Vec3{X, 0.0, 0.0}, Vec3{0.0, Y, 0.0},
          Vec3{X, Y, 0.0}};
}

std::vector<Vec3> frame_pixel_grid(const FrameGeometry& g, int stride) {
  if (stride < 1) throw InvalidParameterError("frame_pixel_grid: stride < 1");
  if (g.height_px < 1 || g.width_px < 1 || !(g.spacing_mm > 0.0))
    throw InvalidParameterError("frame_pixel_grid: bad geometry");
  std::vector<Vec3> pts;
  pts.reserve(((g.height_px + stride - 1) / stride) *
              ((g.width_px + stride - 1) / stride));
  for (int r = 0; r < g.height_px; r += stride)
    for (int c = 0; c < g.width_px; c += stride)
      pts.push_back({c * g.spacing_mm, r * g.spacing_mm, 0.0});
  return pts;
}

}  // namespace echopose::geometry
