#include "pmapp/error.hpp"
#include "pmapp/geometry.hpp"

#include <string>

namespace pmapp {

namespace {

// Cross: arms W, S, E, N around the central square [-w, w]^2.
std::vector<Point> cross_polygon(double w, double arm) {
  const double e = w + arm;
  return {{-e, -w}, {-w, -w}, {-w, -e}, {w, -e}, {w, -w}, {e, -w},
          {e, w},   {w, w},   {w, e},   {-w, e}, {-w, w}, {-e, w}};
}

// T-junction: arms W, S, E; the north side is a straight wall.
std::vector<Point> tee_polygon(double w, double arm) {
  const double e = w + arm;
  return {{-e, -w}, {-w, -w}, {-w, -e}, {w, -e}, {w, -w}, {e, -w}, {e, w}, {-e, w}};
}

const char* default_name(SceneKind kind) {
  switch (kind) {
    case SceneKind::kTwoOneWayCrossing: return "a";
    case SceneKind::kOneWayTwoWayCrossing: return "b";
    case SceneKind::kTwoWayCrossingSmall: return "c";
    case SceneKind::kTwoWayCrossingLarge: return "d";
    case SceneKind::kTJunctionSmall: return "e";
    case SceneKind::kTJunctionLarge: return "f";
  }
  return "?";
}

}  // namespace

SceneSpec builtin_scene_spec(char name) {
  SceneSpec spec;
  switch (name) {
    case 'a': spec.kind = SceneKind::kTwoOneWayCrossing; break;
    case 'b': spec.kind = SceneKind::kOneWayTwoWayCrossing; break;
    case 'c': spec.kind = SceneKind::kTwoWayCrossingSmall; break;
    case 'd':
      spec.kind = SceneKind::kTwoWayCrossingLarge;
      spec.road_half_width = 2.0;
      spec.arm_length = 6.0;
      spec.lane_offset = 1.0;
      break;
    case 'e': spec.kind = SceneKind::kTJunctionSmall; break;
    case 'f':
      spec.kind = SceneKind::kTJunctionLarge;
      spec.road_half_width = 2.0;
      spec.arm_length = 6.0;
      spec.lane_offset = 1.0;
      break;
    default:
      throw Error(ErrorKind::kInvalidArgument, std::string("unknown built-in scene '") + name + "'");
  }
  return spec;
}

bool is_builtin_scene(const std::string& name) {
  return name.size() == 1 && name[0] >= 'a' && name[0] <= 'f';
}

Environment builtin_environment(char name) {
  return build_environment(builtin_scene_spec(name), std::string(1, name));
}

Environment build_environment(const SceneSpec& spec, const std::string& name) {
  const double w = spec.road_half_width;
  const double o = spec.lane_offset;
  if (!(spec.arm_length > 0.0)) throw Error(ErrorKind::kInvalidSpec, "arm_length must be positive");
  if (w < spec.agent_radius) {
    throw Error(ErrorKind::kInvalidSpec, "road_half_width must be at least the agent radius");
  }
  if (o < 0.0 || o >= w) {
    throw Error(ErrorKind::kInvalidSpec, "lane_offset must lie in [0, road_half_width)");
  }
  if (!(spec.endpoint_inset > 0.0) || spec.endpoint_inset >= spec.arm_length) {
    throw Error(ErrorKind::kInvalidSpec, "endpoint_inset must lie in (0, arm_length)");
  }

  const double e = w + spec.arm_length - spec.endpoint_inset;
  std::vector<Endpoints> ends;
  std::vector<Point> polygon;
  switch (spec.kind) {
    case SceneKind::kTwoOneWayCrossing:
      polygon = cross_polygon(w, spec.arm_length);
      ends = {{{-e, 0.0}, {e, 0.0}}, {{0.0, -e}, {0.0, e}}};
      break;
    case SceneKind::kOneWayTwoWayCrossing:
      polygon = cross_polygon(w, spec.arm_length);
      ends = {{{-e, -o}, {e, -o}}, {{0.0, -e}, {0.0, e}}, {{e, o}, {-e, o}}};
      break;
    case SceneKind::kTwoWayCrossingSmall:
    case SceneKind::kTwoWayCrossingLarge:
      polygon = cross_polygon(w, spec.arm_length);
      ends = {{{-e, -o}, {e, -o}}, {{o, -e}, {o, e}}, {{e, o}, {-e, o}}, {{-o, e}, {-o, -e}}};
      break;
    case SceneKind::kTJunctionSmall:
    case SceneKind::kTJunctionLarge:
      // Right-hand traffic: through traffic W->E plus the two left turns.
      polygon = tee_polygon(w, spec.arm_length);
      ends = {{{-e, -o}, {e, -o}}, {{e, o}, {-o, -e}}, {{o, -e}, {-e, o}}};
      break;
  }
  return Environment(name.empty() ? default_name(spec.kind) : name, std::move(polygon),
                     std::move(ends));
}

}  // namespace pmapp
