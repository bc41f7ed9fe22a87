#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

namespace pmapp {

using Point = Eigen::Vector2d;

struct Endpoints {
  Point start;
  Point goal;
};

/// Free space given by a simple polygon plus the start/goal pair of every
/// agent stream. Immutable once built; the constructor enforces the
/// invariants (endpoints strictly inside, pairwise distinct, N >= 1).
class Environment {
 public:
  Environment(std::string name, std::vector<Point> polygon, std::vector<Endpoints> endpoints);

  const std::string& name() const { return name_; }
  const std::vector<Point>& polygon() const { return polygon_; }
  const std::vector<Endpoints>& endpoints() const { return endpoints_; }
  int streams() const { return static_cast<int>(endpoints_.size()); }

  /// Polygon vertices whose interior angle exceeds 180 degrees. Only these can
  /// be the closest boundary feature to a segment that stays inside.
  const std::vector<Point>& reflex_vertices() const { return reflex_; }

  bool operator==(const Environment& other) const;

 private:
  std::string name_;
  std::vector<Point> polygon_;  // counter-clockwise
  std::vector<Endpoints> endpoints_;
  std::vector<Point> reflex_;
};

enum class SceneKind {
  kTwoOneWayCrossing,
  kOneWayTwoWayCrossing,
  kTwoWayCrossingSmall,
  kTwoWayCrossingLarge,
  kTJunctionSmall,
  kTJunctionLarge,
};

/// Parametric road layout. Arms extend `arm_length` beyond the central
/// square of half-size `road_half_width`; lanes of two-way roads sit at
/// +-`lane_offset` from the road axis; endpoints are placed `endpoint_inset`
/// in from the far end of each arm.
struct SceneSpec {
  SceneKind kind = SceneKind::kTwoOneWayCrossing;
  double road_half_width = 1.5;
  double arm_length = 5.0;
  double lane_offset = 0.75;
  double endpoint_inset = 1.0;
  double agent_radius = 0.5;
};

/// Specs for the six built-in scenes "a".."f".
SceneSpec builtin_scene_spec(char name);
bool is_builtin_scene(const std::string& name);

Environment build_environment(const SceneSpec& spec, const std::string& name = "");
Environment builtin_environment(char name);

struct BoundaryQuery {
  double signed_distance = 0.0;  // negative outside
  Point closest;                 // nearest boundary point
  Point gradient;                // d(signed_distance)/dx, zero if undefined
};

bool point_in_polygon(const std::vector<Point>& polygon, const Point& x);
double distance_to_boundary(const Environment& env, const Point& x);
BoundaryQuery query_boundary(const Environment& env, const Point& x);

/// Minimum signed clearance along the segment [a, b]: negative if any part of
/// it leaves the free space, otherwise the exact segment-to-boundary distance.
double segment_clearance(const Environment& env, const Point& a, const Point& b);

double point_segment_distance(const Point& x, const Point& a, const Point& b);
double segment_segment_distance(const Point& a0, const Point& a1, const Point& b0, const Point& b1);

struct ReferencePath {
  std::vector<Point> vertices;
  double length = 0.0;

  /// Arc length of the point `p` lying on segment `segment`.
  double arc_at(int segment, const Point& p) const;
  Point point_at_arc(double s) const;
};

/// True if the closed segment [a, b] stays inside the closed free space.
bool segment_visible(const Environment& env, const Point& a, const Point& b);

ReferencePath shortest_path(const Environment& env, int stream);
std::vector<ReferencePath> shortest_paths(const Environment& env);

/// Moves interior path vertices closer than `offset` to the boundary away
/// from it (along the bisector at a polygon corner), shrinking the move when
/// the adjacent legs would leave the free space.
ReferencePath offset_corners(const Environment& env, const ReferencePath& path, double offset);

struct PathIntersection {
  int stream_a = 0;
  int stream_b = 0;
  Point point;
  double arc_a = 0.0;
  double arc_b = 0.0;
};

/// Transversal crossings between distinct paths, one entry per crossing with
/// stream_a < stream_b, sorted by (stream_a, arc_a).
std::vector<PathIntersection> path_intersections(const std::vector<ReferencePath>& paths);

}  // namespace pmapp
