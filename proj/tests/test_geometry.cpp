#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "echopose/errors.hpp"
#include "echopose/geometry.hpp"
#include "test_support.hpp"

using namespace echopose;
using namespace echopose::geometry;
using test_support::oracle_apply;
using test_support::oracle_inverse;
using test_support::oracle_matrix;
using test_support::oracle_max_diff;
using test_support::oracle_mul;
using test_support::random_transform;

TEST_CASE("to_matrix: identity and quarter turn") {
  const Mat4 id = to_matrix(RigidTransform::identity());
  CHECK(id.maxAbsDiff(Mat4::identity()) == 0.0);

  RigidTransform quarter;
  quarter.rot = {M_PI / 2.0, 0.0, 0.0};
  const Vec3 p = to_matrix(quarter).apply({1.0, 0.0, 0.0});
  CHECK(std::abs(p.x - 0.0) < 1e-15);
  CHECK(std::abs(p.y - 1.0) < 1e-15);
  CHECK(std::abs(p.z) < 1e-15);
}

TEST_CASE("to_matrix: last row and orthonormal rotation block") {
  RandomStream rng(11);
  for (int i = 0; i < 100; ++i) {
    const Mat4 m = to_matrix(random_transform(rng));
    CHECK(m.m[3][0] == 0.0);
    CHECK(m.m[3][1] == 0.0);
    CHECK(m.m[3][2] == 0.0);
    CHECK(m.m[3][3] == 1.0);
    // R^T R = I
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        double dot = 0.0;
        for (int k = 0; k < 3; ++k) dot += m.m[k][a] * m.m[k][b];
        CHECK(std::abs(dot - (a == b ? 1.0 : 0.0)) < 1e-9);
      }
    }
    // det(R) = +1
    const double det =
        m.m[0][0] * (m.m[1][1] * m.m[2][2] - m.m[1][2] * m.m[2][1]) -
        m.m[0][1] * (m.m[1][0] * m.m[2][2] - m.m[1][2] * m.m[2][0]) +
        m.m[0][2] * (m.m[1][0] * m.m[2][1] - m.m[1][1] * m.m[2][0]);
    CHECK(std::abs(det - 1.0) < 1e-9);
  }
}

TEST_CASE("to_matrix rejects non-finite parameters") {
  RigidTransform t;
  t.rot[1] = std::nan("");
  CHECK_THROWS_AS(to_matrix(t), InvalidParameterError);
  RigidTransform u;
  u.trans[2] = INFINITY;
  CHECK_THROWS_AS(to_matrix(u), InvalidParameterError);
}

TEST_CASE("from_matrix round-trips 1000 seeded random transforms") {
  RandomStream rng(42);
  for (int i = 0; i < 1000; ++i) {
    const RigidTransform t = random_transform(rng, 1.2);
    const RigidTransform back = from_matrix(to_matrix(t));
    for (int k = 0; k < 3; ++k) {
      CHECK(std::abs(back.rot[k] - t.rot[k]) < 1e-7);
      CHECK(std::abs(back.trans[k] - t.trans[k]) < 1e-7);
    }
  }
}

TEST_CASE("compose matches the direct 4x4 product oracle") {
  RandomStream rng(43);
  for (int i = 0; i < 1000; ++i) {
    const RigidTransform a = random_transform(rng);
    const RigidTransform b = random_transform(rng);
    const auto expect = oracle_mul(oracle_matrix(a), oracle_matrix(b));
    CHECK(oracle_max_diff(expect, to_matrix(compose(a, b))) < 1e-9);
  }
}

TEST_CASE("compose: inverse and commuting translations") {
  RandomStream rng(44);
  const RigidTransform t = random_transform(rng);
  CHECK(to_matrix(compose(t, invert(t))).maxAbsDiff(Mat4::identity()) < 1e-9);

  const auto t1 = RigidTransform::translation(1.0, -2.0, 3.0);
  const auto t2 = RigidTransform::translation(0.5, 4.0, -1.0);
  const RigidTransform sum = compose(t1, t2);
  CHECK(sum.trans[0] == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(sum.trans[1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(sum.trans[2] == doctest::Approx(2.0).epsilon(1e-12));
  for (double r : sum.rot) CHECK(std::abs(r) < 1e-12);
}

TEST_CASE("invert matches the matrix-inverse oracle") {
  RandomStream rng(45);
  SUBCASE("identity") {
    const RigidTransform inv = invert(RigidTransform::identity());
    CHECK(to_matrix(inv).maxAbsDiff(Mat4::identity()) < 1e-15);
  }
  SUBCASE("pure translation negates") {
    const RigidTransform inv = invert(RigidTransform::translation(3, -4, 5));
    CHECK(inv.trans[0] == doctest::Approx(-3.0));
    CHECK(inv.trans[1] == doctest::Approx(4.0));
    CHECK(inv.trans[2] == doctest::Approx(-5.0));
  }
  SUBCASE("random vs Gauss-Jordan oracle") {
    for (int i = 0; i < 1000; ++i) {
      const RigidTransform a = random_transform(rng);
      const auto expect = oracle_inverse(oracle_matrix(a));
      CHECK(oracle_max_diff(expect, to_matrix(invert(a))) < 1e-9);
    }
  }
}

TEST_CASE("relative_pose recomposes to world_j") {
  RandomStream rng(46);
  SUBCASE("equal worlds give identity") {
    const RigidTransform w = random_transform(rng);
    const RigidTransform rel = relative_pose(w, w);
    CHECK(to_matrix(rel).maxAbsDiff(Mat4::identity()) < 1e-12);
  }
  SUBCASE("identity world_i returns world_j") {
    const RigidTransform w = random_transform(rng);
    const RigidTransform rel = relative_pose(RigidTransform::identity(), w);
    CHECK(to_matrix(rel).maxAbsDiff(to_matrix(w)) < 1e-12);
  }
  SUBCASE("random pairs") {
    for (int i = 0; i < 500; ++i) {
      const RigidTransform wi = random_transform(rng);
      const RigidTransform wj = random_transform(rng);
      const RigidTransform rel = relative_pose(wi, wj);
      CHECK(to_matrix(compose(wi, rel)).maxAbsDiff(to_matrix(wj)) < 1e-9);
    }
  }
}

TEST_CASE("accumulate") {
  SUBCASE("empty list gives a single identity world pose") {
    const PoseChain chain = accumulate({});
    REQUIRE(chain.world.size() == 1);
    CHECK(to_matrix(chain.world[0]).maxAbsDiff(Mat4::identity()) == 0.0);
  }
  SUBCASE("telescoping translations") {
    const auto step = RigidTransform::translation(0.0, 0.0, 2.5);
    const PoseChain chain = accumulate(std::vector<RigidTransform>(7, step));
    REQUIRE(chain.world.size() == 8);
    CHECK(chain.world[7].trans[2] == doctest::Approx(17.5).epsilon(1e-12));
  }
  SUBCASE("random chains match the left-to-right product oracle") {
    RandomStream rng(47);
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<RigidTransform> rels;
      for (int k = 0; k < 50; ++k)
        rels.push_back(random_transform(rng, 0.02, 2.0));
      const PoseChain chain = accumulate(rels);
      test_support::Mat acc{};
      for (int i = 0; i < 4; ++i) acc[i][i] = 1.0;
      for (size_t k = 0; k < rels.size(); ++k) {
        acc = oracle_mul(acc, oracle_matrix(rels[k]));
        CHECK(oracle_max_diff(acc, to_matrix(chain.world[k + 1])) < 1e-8);
      }
    }
  }
}

TEST_CASE("frame_corners") {
  SUBCASE("unit square") {
    const auto corners = frame_corners({2, 2, 1.0});
    CHECK(corners[0].x == 0.0);
    CHECK(corners[1].x == 1.0);
    CHECK(corners[2].y == 1.0);
    CHECK(corners[3].x == 1.0);
    CHECK(corners[3].y == 1.0);
    for (const Vec3& c : corners) CHECK(c.z == 0.0);
  }
  SUBCASE("doubling the spacing doubles every coordinate") {
    const auto a = frame_corners({480, 640, 0.2});
    const auto b = frame_corners({480, 640, 0.4});
    for (int i = 0; i < 4; ++i) {
      CHECK(b[i].x == doctest::Approx(2.0 * a[i].x));
      CHECK(b[i].y == doctest::Approx(2.0 * a[i].y));
    }
  }
  SUBCASE("480x640 at 0.2 mm/px") {
    const auto corners = frame_corners({480, 640, 0.2});
    CHECK(corners[3].x == doctest::Approx(127.8).epsilon(1e-12));
    CHECK(corners[3].y == doctest::Approx(95.8).epsilon(1e-12));
    CHECK(corners[3].z == 0.0);
  }
}

TEST_CASE("frame_pixel_grid") {
  SUBCASE("2x2 stride 1 gives the corner points") {
    const auto grid = frame_pixel_grid({2, 2, 1.0}, 1);
    REQUIRE(grid.size() == 4);
    CHECK(grid[3].x == 1.0);
    CHECK(grid[3].y == 1.0);
  }
  SUBCASE("stride equal to the side gives a single origin point") {
    const auto grid = frame_pixel_grid({8, 8, 0.5}, 8);
    REQUIRE(grid.size() == 1);
    CHECK(grid[0].x == 0.0);
    CHECK(grid[0].y == 0.0);
  }
  SUBCASE("4x6 stride 2 enumerated by brute force") {
    const auto grid = frame_pixel_grid({4, 6, 0.5}, 2);
    std::vector<Vec3> expect;
    for (int r = 0; r < 4; r += 2)
      for (int c = 0; c < 6; c += 2) expect.push_back({c * 0.5, r * 0.5, 0.0});
    REQUIRE(grid.size() == expect.size());
    REQUIRE(grid.size() == 6);
    for (size_t i = 0; i < expect.size(); ++i) {
      CHECK(grid[i].x == expect[i].x);
      CHECK(grid[i].y == expect[i].y);
    }
  }
  SUBCASE("stride < 1 rejected") {
    CHECK_THROWS_AS(frame_pixel_grid({4, 4, 1.0}, 0), InvalidParameterError);
  }
}

TEST_CASE("property: associativity of compose") {
  RandomStream rng(48);
  for (int i = 0; i < 300; ++i) {
    const RigidTransform a = random_transform(rng);
    const RigidTransform b = random_transform(rng);
    const RigidTransform c = random_transform(rng);
    const Mat4 left = to_matrix(compose(compose(a, b), c));
    const Mat4 right = to_matrix(compose(a, compose(b, c)));
    CHECK(left.maxAbsDiff(right) < 1e-8);
  }
}

TEST_CASE("property: rigid transforms preserve pairwise distances") {
  RandomStream rng(49);
  for (int i = 0; i < 100; ++i) {
    const RigidTransform t = random_transform(rng, 1.2, 50.0);
    std::vector<Vec3> pts;
    for (int k = 0; k < 6; ++k)
      pts.push_back({rng.uniform(-30, 30), rng.uniform(-30, 30),
                     rng.uniform(-30, 30)});
    for (size_t a = 0; a < pts.size(); ++a) {
      for (size_t b = a + 1; b < pts.size(); ++b) {
        const double before = (pts[a] - pts[b]).norm();
        const double after =
            (apply(t, pts[a]) - apply(t, pts[b])).norm();
        CHECK(std::abs(before - after) < 1e-9);
      }
    }
  }
}

TEST_CASE("property: chain consistency of relative poses") {
  RandomStream rng(50);
  // a ground-truth-like world sequence
  std::vector<RigidTransform> world;
  world.push_back(random_transform(rng, 0.3));
  for (int k = 0; k < 60; ++k)
    world.push_back(compose(world.back(), random_transform(rng, 0.015, 1.5)));

  std::vector<RigidTransform> rels;
  for (size_t k = 0; k + 1 < world.size(); ++k)
    rels.push_back(relative_pose(world[k], world[k + 1]));
  const PoseChain chain = accumulate(rels);

  // chain is expressed relative to frame 0
  for (size_t k = 0; k < world.size(); ++k) {
    const Mat4 expect = to_matrix(relative_pose(world[0], world[k]));
    CHECK(to_matrix(chain.world[k]).maxAbsDiff(expect) < 1e-8);
  }
}
