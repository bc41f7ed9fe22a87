#include "pmapp/error.hpp"
#include "pmapp/geometry.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace pmapp;
using namespace pmapp::testing;

namespace {

// Distance to the boundary by sampling every edge densely.
double sampled_boundary_distance(const Environment& env, const Point& x, int samples = 4000) {
  const auto& poly = env.polygon();
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < poly.size(); ++i) {
    const Point& a = poly[i];
    const Point& b = poly[(i + 1) % poly.size()];
    for (int s = 0; s <= samples; ++s) {
      best = std::min(best, (a + (b - a) * (double(s) / samples) - x).norm());
    }
  }
  return best;
}

double polyline_length(const std::vector<Point>& v) {
  double len = 0.0;
  for (size_t i = 0; i + 1 < v.size(); ++i) len += (v[i + 1] - v[i]).norm();
  return len;
}

}  // namespace

TEST_CASE("point in polygon on the cross scene") {
  const Environment env = builtin_environment('a');
  CHECK(point_in_polygon(env.polygon(), Point(0, 0)));
  CHECK(point_in_polygon(env.polygon(), Point(-5, 0)));
  CHECK_FALSE(point_in_polygon(env.polygon(), Point(3, 3)));
  CHECK_FALSE(point_in_polygon(env.polygon(), Point(20, 0)));
}

TEST_CASE("reflex vertices of the cross are its four inner corners") {
  const Environment env = builtin_environment('a');
  REQUIRE(env.reflex_vertices().size() == 4);
  for (const Point& v : env.reflex_vertices()) {
    CHECK(std::abs(v.x()) == doctest::Approx(1.5));
    CHECK(std::abs(v.y()) == doctest::Approx(1.5));
  }
}

TEST_CASE("signed distance matches dense boundary sampling") {
  Rng rng(11);
  for (char name : std::string("af")) {
    const Environment env = builtin_environment(name);
    for (int i = 0; i < 200; ++i) {
      const Point x(uniform(rng, -8, 8), uniform(rng, -8, 8));
      const double d = distance_to_boundary(env, x);
      const double sampled = sampled_boundary_distance(env, x);
      CHECK(std::abs(d) == doctest::Approx(sampled).epsilon(1e-3).scale(1));
      CHECK((d >= 0) == point_in_polygon(env.polygon(), x));
    }
  }
}

TEST_CASE("boundary gradient matches finite differences away from the medial axis") {
  Rng rng(12);
  const Environment env = builtin_environment('a');
  int checked = 0;
  for (int i = 0; i < 300; ++i) {
    const Point x(uniform(rng, -6, 6), uniform(rng, -1.4, 1.4));
    const BoundaryQuery q = query_boundary(env, x);
    const double h = 1e-6;
    const Point fd((distance_to_boundary(env, x + Point(h, 0)) - distance_to_boundary(env, x - Point(h, 0))) / (2 * h),
                   (distance_to_boundary(env, x + Point(0, h)) - distance_to_boundary(env, x - Point(0, h))) / (2 * h));
    if (std::abs(fd.norm() - 1.0) > 1e-4) continue;  // kink
    CHECK((fd - q.gradient).norm() < 1e-5);
    ++checked;
  }
  CHECK(checked > 100);
}

TEST_CASE("segment clearance is the minimum over dense samples") {
  Rng rng(13);
  const Environment env = builtin_environment('d');
  for (int i = 0; i < 100; ++i) {
    const Point a(uniform(rng, -7, 7), uniform(rng, -1.9, 1.9));
    const Point b(uniform(rng, -1.9, 1.9), uniform(rng, -7, 7));
    const double c = segment_clearance(env, a, b);
    double sampled = std::numeric_limits<double>::infinity();
    for (int s = 0; s <= 400; ++s) sampled = std::min(sampled, distance_to_boundary(env, a + (b - a) * (s / 400.0)));
    if (sampled >= 0) {
      CHECK(sampled - c < 2e-2);
      CHECK(c <= sampled + 1e-9);
      CHECK(segment_visible(env, a, b));
    } else {
      CHECK(c < 0);
      CHECK_FALSE(segment_visible(env, a, b));
    }
  }
}

TEST_CASE("shortest path is visible and no longer than sampled detours") {
  Rng rng(14);
  for (char name : std::string("abcdef")) {
    const Environment env = builtin_environment(name);
    for (int n = 0; n < env.streams(); ++n) {
      const ReferencePath path = shortest_path(env, n);
      REQUIRE(path.vertices.size() >= 2);
      CHECK((path.vertices.front() - env.endpoints()[n].start).norm() == 0.0);
      CHECK((path.vertices.back() - env.endpoints()[n].goal).norm() == 0.0);
      CHECK(path.length == doctest::Approx(polyline_length(path.vertices)));
      for (size_t i = 0; i + 1 < path.vertices.size(); ++i) {
        CHECK(segment_visible(env, path.vertices[i], path.vertices[i + 1]));
      }
      const Point& s = env.endpoints()[n].start;
      const Point& g = env.endpoints()[n].goal;
      CHECK(path.length >= (g - s).norm() - 1e-12);
      int tried = 0;
      while (tried < 200) {
        std::vector<Point> alt{s};
        const int vias = uniform_int(rng, 1, 2);
        for (int v = 0; v < vias; ++v) alt.emplace_back(uniform(rng, -8, 8), uniform(rng, -8, 8));
        alt.push_back(g);
        bool ok = true;
        for (size_t i = 0; ok && i + 1 < alt.size(); ++i) ok = segment_visible(env, alt[i], alt[i + 1]);
        if (!ok) continue;
        ++tried;
        CHECK(path.length <= polyline_length(alt) + 1e-9);
      }
    }
  }
}

TEST_CASE("straight line when the goal is visible") {
  const Environment env = builtin_environment('a');
  const ReferencePath p = shortest_path(env, 0);
  CHECK(p.vertices.size() == 2);
  CHECK(p.length == doctest::Approx(11.0));
}

TEST_CASE("left turn wraps the inner corner") {
  const Environment env = builtin_environment('e');
  const ReferencePath p = shortest_path(env, 2);
  CHECK(p.vertices.size() == 3);
  bool corner = false;
  for (const Point& v : env.reflex_vertices()) corner = corner || (v - p.vertices[1]).norm() < 1e-12;
  CHECK(corner);
}

TEST_CASE("offset corners keeps the path feasible and away from the wall") {
  for (char name : std::string("ef")) {
    const Environment env = builtin_environment(name);
    for (const ReferencePath& p : shortest_paths(env)) {
      const ReferencePath q = offset_corners(env, p, 0.5);
      CHECK(q.vertices.size() == p.vertices.size());
      CHECK(q.length >= p.length - 1e-12);
      CHECK(q.length == doctest::Approx(polyline_length(q.vertices)));
      for (size_t i = 0; i + 1 < q.vertices.size(); ++i) {
        CHECK(segment_visible(env, q.vertices[i], q.vertices[i + 1]));
      }
      for (size_t i = 1; i + 1 < q.vertices.size(); ++i) {
        CHECK(distance_to_boundary(env, q.vertices[i]) > 0.0);
      }
    }
  }
}

TEST_CASE("crossing of the two one-way roads sits at the origin") {
  const Environment env = builtin_environment('a');
  const auto xs = path_intersections(shortest_paths(env));
  REQUIRE(xs.size() == 1);
  CHECK(xs[0].point.norm() < 1e-12);
  CHECK(xs[0].arc_a == doctest::Approx(5.5));
  CHECK(xs[0].arc_b == doctest::Approx(5.5));
}

TEST_CASE("intersections agree with a direct segment test") {
  Rng rng(15);
  for (int trial = 0; trial < 200; ++trial) {
    const CrossingInstance inst = random_crossings(rng, 2);
    const Point a0 = inst.paths[0].vertices[0], a1 = inst.paths[0].vertices[1];
    const Point b0 = inst.paths[1].vertices[0], b1 = inst.paths[1].vertices[1];
    const double d = segment_segment_distance(a0, a1, b0, b1);
    if (d < 1e-9) {
      REQUIRE(inst.crossings.size() == 1);
      const auto& x = inst.crossings[0];
      CHECK(point_segment_distance(x.point, a0, a1) < 1e-9);
      CHECK(point_segment_distance(x.point, b0, b1) < 1e-9);
      CHECK(x.arc_a == doctest::Approx((x.point - a0).norm()));
    } else {
      CHECK(inst.crossings.empty());
    }
  }
}

TEST_CASE("environment rejects endpoints outside the free space") {
  std::vector<Point> square{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  CHECK_THROWS_AS(Environment("bad", square, {{Point(2, 2), Point(0.5, 0.5)}}), Error);
  CHECK_THROWS_AS(Environment("bad", square, {}), Error);
}

TEST_CASE("scene spec validation") {
  SceneSpec s;
  s.lane_offset = 2.0;
  CHECK_THROWS_AS(build_environment(s), Error);
  CHECK_THROWS_AS(builtin_environment('z'), Error);
}
