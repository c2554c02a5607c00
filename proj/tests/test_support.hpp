#pragma once

// Shared helpers for the unit tests: bounded random transforms (the
// simulator keeps pitch clear of gimbal lock, tests do the same) and an
// independent 4x4 matrix path used as the oracle side of geometry checks.

#include <array>
#include <cmath>
#include <vector>

#include "echopose/geometry.hpp"
#include "echopose/rng.hpp"

namespace test_support {

using echopose::RandomStream;
using echopose::geometry::RigidTransform;

inline RigidTransform random_transform(RandomStream& rng,
                                       double max_angle = 0.4,
                                       double max_trans = 20.0) {
  RigidTransform t;
  for (double& a : t.rot) a = rng.uniform(-max_angle, max_angle);
  for (double& v : t.trans) v = rng.uniform(-max_trans, max_trans);
  return t;
}

// independent dense 4x4 math (no echopose::geometry::Mat4 involved)
using Mat = std::array<std::array<double, 4>, 4>;

inline Mat oracle_matrix(const RigidTransform& t) {
  const double ca = std::cos(t.rot[0]), sa = std::sin(t.rot[0]);
  const double cb = std::cos(t.rot[1]), sb = std::sin(t.rot[1]);
  const double cg = std::cos(t.rot[2]), sg = std::sin(t.rot[2]);
  Mat m{};
  m[0] = {ca * cb, ca * sb * sg - sa * cg, ca * sb * cg + sa * sg, t.trans[0]};
  m[1] = {sa * cb, sa * sb * sg + ca * cg, sa * sb * cg - ca * sg, t.trans[1]};
  m[2] = {-sb, cb * sg, cb * cg, t.trans[2]};
  m[3] = {0.0, 0.0, 0.0, 1.0};
  return m;
}

inline Mat oracle_mul(const Mat& a, const Mat& b) {
  Mat r{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      double s = 0.0;
      for (int k = 0; k < 4; ++k) s += a[i][k] * b[k][j];
      r[i][j] = s;
    }
  return r;
}

// general 4x4 inverse by Gauss-Jordan elimination
inline Mat oracle_inverse(Mat a) {
  Mat inv{};
  for (int i = 0; i < 4; ++i) inv[i][i] = 1.0;
  for (int col = 0; col < 4; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 4; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    std::swap(a[col], a[pivot]);
    std::swap(inv[col], inv[pivot]);
    const double d = a[col][col];
    for (int j = 0; j < 4; ++j) {
      a[col][j] /= d;
      inv[col][j] /= d;
    }
    for (int r = 0; r < 4; ++r) {
      if (r == col) continue;
      const double f = a[r][col];
      for (int j = 0; j < 4; ++j) {
        a[r][j] -= f * a[col][j];
        inv[r][j] -= f * inv[col][j];
      }
    }
  }
  return inv;
}

inline double oracle_max_diff(const Mat& a,
                              const echopose::geometry::Mat4& b) {
  double d = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      d = std::max(d, std::abs(a[i][j] - b.m[i][j]));
  return d;
}

inline std::array<double, 3> oracle_apply(const Mat& m, double x, double y,
                                          double z) {
  return {m[0][0] * x + m[0][1] * y + m[0][2] * z + m[0][3],
          m[1][0] * x + m[1][1] * y + m[1][2] * z + m[1][3],
          m[2][0] * x + m[2][1] * y + m[2][2] * z + m[2][3]};
}

}  // namespace test_support
