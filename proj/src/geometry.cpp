#include "pmapp/geometry.hpp"

#include "pmapp/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace pmapp {

namespace {

constexpr double kEps = 1e-9;

double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

double signed_area(const std::vector<Point>& polygon) {
  double area = 0.0;
  for (size_t i = 0; i < polygon.size(); ++i) {
    area += cross(polygon[i], polygon[(i + 1) % polygon.size()]);
  }
  return 0.5 * area;
}

Point closest_on_segment(const Point& x, const Point& a, const Point& b) {
  const Point ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 <= 0.0) return a;
  const double u = std::clamp((x - a).dot(ab) / len2, 0.0, 1.0);
  return a + u * ab;
}

int orientation(const Point& a, const Point& b, const Point& c) {
  const double v = cross(b - a, c - a);
  const double scale = std::max({1.0, (b - a).norm(), (c - a).norm()});
  if (v > kEps * scale) return 1;
  if (v < -kEps * scale) return -1;
  return 0;
}

bool segments_cross_properly(const Point& a, const Point& b, const Point& c, const Point& d) {
  const int o1 = orientation(a, b, c);
  const int o2 = orientation(a, b, d);
  const int o3 = orientation(c, d, a);
  const int o4 = orientation(c, d, b);
  return o1 * o2 < 0 && o3 * o4 < 0;
}

bool lex_less(const Point& a, const Point& b) {
  if (a.x() != b.x()) return a.x() < b.x();
  return a.y() < b.y();
}

}  // namespace

Environment::Environment(std::string name, std::vector<Point> polygon,
                         std::vector<Endpoints> endpoints)
    : name_(std::move(name)), polygon_(std::move(polygon)), endpoints_(std::move(endpoints)) {
  if (polygon_.size() < 3) {
    throw Error(ErrorKind::kInvalidSpec, "polygon needs at least 3 vertices");
  }
  if (endpoints_.empty()) {
    throw Error(ErrorKind::kInvalidSpec, "environment needs at least one start/goal pair");
  }
  if (signed_area(polygon_) < 0.0) std::reverse(polygon_.begin(), polygon_.end());

  const size_t nv = polygon_.size();
  for (size_t i = 0; i < nv; ++i) {
    const Point& prev = polygon_[(i + nv - 1) % nv];
    const Point& cur = polygon_[i];
    const Point& next = polygon_[(i + 1) % nv];
    if (cross(cur - prev, next - cur) < -kEps) reflex_.push_back(cur);
  }

  for (size_t i = 0; i < endpoints_.size(); ++i) {
    for (const Point* p : {&endpoints_[i].start, &endpoints_[i].goal}) {
      if (distance_to_boundary(*this, *p) <= 0.0) {
        std::ostringstream msg;
        msg << "endpoint of stream " << i << " is not strictly inside the free space";
        throw Error(ErrorKind::kInvalidSpec, msg.str());
      }
    }
    for (size_t j = 0; j < i; ++j) {
      if ((endpoints_[i].start - endpoints_[j].start).norm() <= kEps ||
          (endpoints_[i].goal - endpoints_[j].goal).norm() <= kEps) {
        throw Error(ErrorKind::kInvalidSpec, "starts and goals must be pairwise distinct");
      }
    }
  }
}

bool Environment::operator==(const Environment& other) const {
  if (name_ != other.name_ || polygon_.size() != other.polygon_.size() ||
      endpoints_.size() != other.endpoints_.size()) {
    return false;
  }
  for (size_t i = 0; i < polygon_.size(); ++i) {
    if (polygon_[i] != other.polygon_[i]) return false;
  }
  for (size_t i = 0; i < endpoints_.size(); ++i) {
    if (endpoints_[i].start != other.endpoints_[i].start ||
        endpoints_[i].goal != other.endpoints_[i].goal) {
      return false;
    }
  }
  return true;
}

bool point_in_polygon(const std::vector<Point>& polygon, const Point& x) {
  bool inside = false;
  const size_t n = polygon.size();
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point& a = polygon[i];
    const Point& b = polygon[j];
    if ((a.y() > x.y()) != (b.y() > x.y())) {
      const double xi = a.x() + (x.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (x.x() < xi) inside = !inside;
    }
  }
  return inside;
}

BoundaryQuery query_boundary(const Environment& env, const Point& x) {
  const auto& poly = env.polygon();
  BoundaryQuery q;
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < poly.size(); ++i) {
    const Point c = closest_on_segment(x, poly[i], poly[(i + 1) % poly.size()]);
    const double d = (x - c).norm();
    if (d < best) {
      best = d;
      q.closest = c;
    }
  }
  const bool inside = point_in_polygon(poly, x);
  q.signed_distance = inside ? best : -best;
  if (best > 0.0) {
    q.gradient = (x - q.closest) / best;
    if (!inside) q.gradient = -q.gradient;
  } else {
    // On the boundary: inward normal of the touching edges (a bisector at a
    // vertex), so the point can still be pushed into the interior.
    Point sum = Point::Zero();
    for (size_t i = 0; i < poly.size(); ++i) {
      const Point& a = poly[i];
      const Point& b = poly[(i + 1) % poly.size()];
      if ((x - closest_on_segment(x, a, b)).norm() > 0.0) continue;
      const Point e = (b - a).normalized();
      sum += Point(-e.y(), e.x());
    }
    q.gradient = sum.norm() > 0.0 ? Point(sum.normalized()) : Point(Point::Zero());
  }
  return q;
}

double distance_to_boundary(const Environment& env, const Point& x) {
  return query_boundary(env, x).signed_distance;
}

double point_segment_distance(const Point& x, const Point& a, const Point& b) {
  return (x - closest_on_segment(x, a, b)).norm();
}

double segment_segment_distance(const Point& a0, const Point& a1, const Point& b0,
                                const Point& b1) {
  if (segments_cross_properly(a0, a1, b0, b1)) return 0.0;
  return std::min({point_segment_distance(a0, b0, b1), point_segment_distance(a1, b0, b1),
                   point_segment_distance(b0, a0, a1), point_segment_distance(b1, a0, a1)});
}

double segment_clearance(const Environment& env, const Point& a, const Point& b) {
  const double da = distance_to_boundary(env, a);
  const double db = distance_to_boundary(env, b);
  if (da < 0.0 || db < 0.0) return std::min(da, db);
  if (!segment_visible(env, a, b)) {
    // Leaves the free space; the depth is only informative, so sample it.
    double worst = 0.0;
    for (const Point& v : env.reflex_vertices()) {
      worst = std::min(worst, distance_to_boundary(env, closest_on_segment(v, a, b)));
    }
    constexpr int kSamples = 64;
    for (int i = 1; i < kSamples; ++i) {
      worst = std::min(worst, distance_to_boundary(env, a + (b - a) * (double(i) / kSamples)));
    }
    return worst;
  }
  const auto& poly = env.polygon();
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < poly.size(); ++i) {
    best = std::min(best, segment_segment_distance(a, b, poly[i], poly[(i + 1) % poly.size()]));
  }
  return best;
}

bool segment_visible(const Environment& env, const Point& a, const Point& b) {
  const auto& poly = env.polygon();
  if (distance_to_boundary(env, a) < -kEps || distance_to_boundary(env, b) < -kEps) return false;
  const size_t n = poly.size();
  const Point ab = b - a;
  const double len2 = ab.squaredNorm();
  std::vector<double> params{0.0, 1.0};
  for (size_t i = 0; i < n; ++i) {
    const Point& p = poly[i];
    const Point& q = poly[(i + 1) % n];
    if (segments_cross_properly(a, b, p, q)) return false;
    if (len2 > 0.0 && point_segment_distance(p, a, b) <= kEps) {
      params.push_back(std::clamp((p - a).dot(ab) / len2, 0.0, 1.0));
    }
  }
  std::sort(params.begin(), params.end());
  for (size_t i = 0; i + 1 < params.size(); ++i) {
    if (params[i + 1] - params[i] <= kEps) continue;
    const Point mid = a + 0.5 * (params[i] + params[i + 1]) * ab;
    if (distance_to_boundary(env, mid) < -kEps) return false;
  }
  return true;
}

double ReferencePath::arc_at(int segment, const Point& p) const {
  double s = 0.0;
  for (int i = 0; i < segment; ++i) s += (vertices[i + 1] - vertices[i]).norm();
  return s + (p - vertices[segment]).norm();
}

Point ReferencePath::point_at_arc(double s) const {
  if (s <= 0.0) return vertices.front();
  for (size_t i = 0; i + 1 < vertices.size(); ++i) {
    const double seg = (vertices[i + 1] - vertices[i]).norm();
    if (s <= seg && seg > 0.0) return vertices[i] + (s / seg) * (vertices[i + 1] - vertices[i]);
    s -= seg;
  }
  return vertices.back();
}

ReferencePath shortest_path(const Environment& env, int stream) {
  if (stream < 0 || stream >= env.streams()) {
    throw Error(ErrorKind::kInvalidArgument, "stream index out of range");
  }
  const Endpoints& ep = env.endpoints()[stream];
  if (distance_to_boundary(env, ep.start) < 0.0 || distance_to_boundary(env, ep.goal) < 0.0) {
    throw Error(ErrorKind::kUnreachable, "start or goal lies outside the free space");
  }

  // Node 0 = start, node 1 = goal, then polygon vertices.
  std::vector<Point> nodes{ep.start, ep.goal};
  nodes.insert(nodes.end(), env.polygon().begin(), env.polygon().end());
  const size_t n = nodes.size();

  std::vector<std::vector<double>> weight(n, std::vector<double>(n, -1.0));
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      if (segment_visible(env, nodes[i], nodes[j])) {
        weight[i][j] = weight[j][i] = (nodes[i] - nodes[j]).norm();
      }
    }
  }

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n, inf);
  std::vector<std::vector<size_t>> route(n);
  std::vector<bool> done(n, false);
  dist[0] = 0.0;
  route[0] = {0};

  auto route_less = [&](const std::vector<size_t>& x, const std::vector<size_t>& y) {
    return std::lexicographical_compare(
        x.begin(), x.end(), y.begin(), y.end(),
        [&](size_t u, size_t v) { return lex_less(nodes[u], nodes[v]); });
  };

  for (size_t iter = 0; iter < n; ++iter) {
    size_t u = n;
    for (size_t i = 0; i < n; ++i) {
      if (done[i] || dist[i] == inf) continue;
      if (u == n || dist[i] < dist[u] - kEps ||
          (std::abs(dist[i] - dist[u]) <= kEps && route_less(route[i], route[u]))) {
        u = i;
      }
    }
    if (u == n) break;
    done[u] = true;
    if (u == 1) break;
    for (size_t v = 0; v < n; ++v) {
      if (done[v] || weight[u][v] < 0.0) continue;
      const double cand = dist[u] + weight[u][v];
      std::vector<size_t> cand_route = route[u];
      cand_route.push_back(v);
      if (cand < dist[v] - kEps ||
          (std::abs(cand - dist[v]) <= kEps && route_less(cand_route, route[v]))) {
        dist[v] = cand;
        route[v] = std::move(cand_route);
      }
    }
  }
  if (dist[1] == inf) throw Error(ErrorKind::kUnreachable, "no path from start to goal");

  ReferencePath path;
  for (size_t id : route[1]) path.vertices.push_back(nodes[id]);
  for (size_t i = 0; i + 1 < path.vertices.size(); ++i) {
    path.length += (path.vertices[i + 1] - path.vertices[i]).norm();
  }
  return path;
}

std::vector<ReferencePath> shortest_paths(const Environment& env) {
  std::vector<ReferencePath> out;
  for (int n = 0; n < env.streams(); ++n) out.push_back(shortest_path(env, n));
  return out;
}

ReferencePath offset_corners(const Environment& env, const ReferencePath& path, double offset) {
  if (!(offset >= 0.0)) throw Error(ErrorKind::kInvalidArgument, "corner offset must be >= 0");
  ReferencePath out = path;
  const int nv = static_cast<int>(path.vertices.size());
  for (int i = 1; i + 1 < nv; ++i) {
    const Point v = path.vertices[i];
    const BoundaryQuery q = query_boundary(env, v);
    if (q.signed_distance >= offset || q.gradient.norm() == 0.0) continue;
    double step = offset - q.signed_distance;
    for (int tries = 0; tries < 30; ++tries, step *= 0.5) {
      const Point moved = v + step * q.gradient;
      if (distance_to_boundary(env, moved) > 0.0 && segment_visible(env, out.vertices[i - 1], moved) &&
          segment_visible(env, moved, path.vertices[i + 1])) {
        out.vertices[i] = moved;
        break;
      }
    }
  }
  out.length = 0.0;
  for (int i = 0; i + 1 < nv; ++i) out.length += (out.vertices[i + 1] - out.vertices[i]).norm();
  return out;
}

std::vector<PathIntersection> path_intersections(const std::vector<ReferencePath>& paths) {
  std::vector<PathIntersection> out;
  for (size_t i = 0; i < paths.size(); ++i) {
    for (size_t j = i + 1; j < paths.size(); ++j) {
      const auto& pa = paths[i].vertices;
      const auto& pb = paths[j].vertices;
      std::vector<PathIntersection> found;
      for (size_t sa = 0; sa + 1 < pa.size(); ++sa) {
        for (size_t sb = 0; sb + 1 < pb.size(); ++sb) {
          const Point& a0 = pa[sa];
          const Point& a1 = pa[sa + 1];
          const Point& b0 = pb[sb];
          const Point& b1 = pb[sb + 1];
          const Point da = a1 - a0;
          const Point db = b1 - b0;
          const double denom = cross(da, db);
          const double scale = da.norm() * db.norm();
          if (std::abs(denom) <= kEps * std::max(1.0, scale)) {
            // Parallel: only collinear overlaps matter.
            if (std::abs(cross(da, b0 - a0)) > kEps * std::max(1.0, da.norm())) continue;
            const double len2 = da.squaredNorm();
            if (len2 <= 0.0) continue;
            const double t0 = (b0 - a0).dot(da) / len2;
            const double t1 = (b1 - a0).dot(da) / len2;
            const double lo = std::max(0.0, std::min(t0, t1));
            const double hi = std::min(1.0, std::max(t0, t1));
            if ((hi - lo) * std::sqrt(len2) > kEps) {
              std::ostringstream msg;
              msg << "paths " << i << " and " << j << " share a segment";
              throw Error(ErrorKind::kDegenerateOverlap, msg.str());
            }
            if (hi >= lo) {
              const Point p = a0 + lo * da;
              found.push_back({static_cast<int>(i), static_cast<int>(j), p,
                               paths[i].arc_at(static_cast<int>(sa), p),
                               paths[j].arc_at(static_cast<int>(sb), p)});
            }
            continue;
          }
          const double t = cross(b0 - a0, db) / denom;
          const double u = cross(b0 - a0, da) / denom;
          const double ta = kEps / std::max(da.norm(), kEps);
          const double tb = kEps / std::max(db.norm(), kEps);
          if (t < -ta || t > 1.0 + ta || u < -tb || u > 1.0 + tb) continue;
          const Point p = a0 + std::clamp(t, 0.0, 1.0) * da;
          found.push_back({static_cast<int>(i), static_cast<int>(j), p,
                           paths[i].arc_at(static_cast<int>(sa), p),
                           paths[j].arc_at(static_cast<int>(sb), p)});
        }
      }
      // A crossing at a shared path vertex is reported by both adjacent segments.
      for (const auto& cand : found) {
        const bool dup = std::any_of(out.begin(), out.end(), [&](const PathIntersection& e) {
          return e.stream_a == cand.stream_a && e.stream_b == cand.stream_b &&
                 (e.point - cand.point).norm() <= 1e-7;
        });
        if (!dup) out.push_back(cand);
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const PathIntersection& x, const PathIntersection& y) {
    if (x.stream_a != y.stream_a) return x.stream_a < y.stream_a;
    if (x.arc_a != y.arc_a) return x.arc_a < y.arc_a;
    return x.stream_b < y.stream_b;
  });
  return out;
}

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidSpec: return "invalid-spec";
    case ErrorKind::kInvalidArgument: return "invalid-argument";
    case ErrorKind::kOutOfDomain: return "out-of-domain";
    case ErrorKind::kUnreachable: return "unreachable";
    case ErrorKind::kDegenerateOverlap: return "degenerate-overlap";
    case ErrorKind::kCyclicConstraints: return "cyclic-constraints";
    case ErrorKind::kPeriodTooSmall: return "period-too-small";
    case ErrorKind::kNonfiniteResidual: return "nonfinite-residual";
    case ErrorKind::kDiverged: return "diverged";
    case ErrorKind::kInvalidPlan: return "invalid-plan";
    case ErrorKind::kUnstableQueue: return "unstable-queue";
    case ErrorKind::kParse: return "parse";
  }
  return "unknown";
}

}  // namespace pmapp
