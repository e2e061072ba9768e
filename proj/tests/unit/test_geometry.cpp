#include "doctest.h"
#include "fixtures.hpp"
#include "nnrk/geometry.hpp"

using namespace nnrk;

TEST_CASE("polygon area and centroid of a unit square") {
  const Polygon sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  CHECK(signed_area(sq) == doctest::Approx(1.0));
  CHECK(is_ccw(sq));
  CHECK(is_convex(sq));
  CHECK((centroid(sq) - Vec2(0.5, 0.5)).norm() < 1e-15);
}

TEST_CASE("half-plane clipping keeps the lower half") {
  const Polygon sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const Polygon half = clip_halfplane(sq, Vec2(0, 1), 0.25);
  CHECK(area(half) == doctest::Approx(0.25));
  CHECK(fixture::shoelace(half) == doctest::Approx(0.25));
}

TEST_CASE("subtracting a slit leaves convex pieces of the remaining area") {
  const Polygon sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const Polygon slit{{-0.5, 0.45}, {0.5, 0.45}, {0.5, 0.55}, {-0.5, 0.55}};
  const auto pieces = subtract_convex(sq, slit, 1e-14);
  double total = 0.0;
  for (const auto& p : pieces) {
    CHECK(is_convex(p));
    total += fixture::shoelace(p);
  }
  CHECK(total == doctest::Approx(1.0 - 0.05).epsilon(1e-12));
}

TEST_CASE("segment crossing test ignores touching") {
  const Polygon box{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  CHECK(segment_crosses_convex_interior(Vec2(-1, 0.5), Vec2(2, 0.5), box, 1e-12));
  CHECK_FALSE(segment_crosses_convex_interior(Vec2(-1, 1), Vec2(2, 1), box, 1e-12));
  CHECK_FALSE(segment_crosses_convex_interior(Vec2(-1, 2), Vec2(2, 2), box, 1e-12));
}

TEST_CASE("overlap of two offset squares") {
  const Polygon a{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const Polygon b{{0.5, 0.5}, {1.5, 0.5}, {1.5, 1.5}, {0.5, 1.5}};
  CHECK(overlap_area(a, b) == doctest::Approx(0.25));
}
