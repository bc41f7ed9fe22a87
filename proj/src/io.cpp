#include "pmapp/io.hpp"

#include "pmapp/error.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace pmapp {

using nlohmann::json;

namespace {

constexpr int kPlanVersion = 1;

json point_json(const Point& p) { return json::array({p.x(), p.y()}); }

Point point_from(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw Error(ErrorKind::kParse, "expected a point [x, y]");
  }
  return Point(j[0].get<double>(), j[1].get<double>());
}

json env_json(const Environment& env) {
  json poly = json::array();
  for (const Point& p : env.polygon()) poly.push_back(point_json(p));
  json streams = json::array();
  for (const Endpoints& e : env.endpoints()) {
    streams.push_back({{"start", point_json(e.start)}, {"goal", point_json(e.goal)}});
  }
  return {{"name", env.name()}, {"polygon", poly}, {"streams", streams}};
}

Environment env_from(const json& j) {
  if (j.is_string()) {
    const std::string name = j.get<std::string>();
    if (!is_builtin_scene(name)) throw Error(ErrorKind::kParse, "unknown scene '" + name + "'");
    return builtin_environment(name[0]);
  }
  if (!j.is_object() || !j.contains("polygon") || !j.contains("streams")) {
    throw Error(ErrorKind::kParse, "environment needs polygon and streams");
  }
  std::vector<Point> poly;
  for (const auto& p : j.at("polygon")) poly.push_back(point_from(p));
  std::vector<Endpoints> ends;
  for (const auto& s : j.at("streams")) ends.push_back({point_from(s.at("start")), point_from(s.at("goal"))});
  return Environment(j.value("name", std::string("custom")), std::move(poly), std::move(ends));
}

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, e.what());
  }
}

template <typename F>
auto guarded(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, e.what());
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::string environment_to_json(const Environment& env) { return dump(env_json(env)); }

Environment environment_from_json(const std::string& text) {
  const json j = parse(text);
  return guarded([&] { return env_from(j); });
}

Environment load_environment(const std::string& name_or_path) {
  if (is_builtin_scene(name_or_path)) return builtin_environment(name_or_path[0]);
  return environment_from_json(read_file(name_or_path));
}

std::string plan_to_json(const PeriodicPlan& plan, const PlanMeta& meta) {
  json j;
  j["version"] = kPlanVersion;
  const std::string& name = plan.env.name();
  if (is_builtin_scene(name) && builtin_environment(name[0]) == plan.env) {
    j["env"] = name;
  } else {
    j["env"] = env_json(plan.env);
  }
  j["cycle"] = plan.cycle;
  j["streams"] = plan.streams();
  j["steps"] = plan.steps();
  j["tau"] = plan.tau;
  j["radius"] = plan.radius;
  j["target_radius"] = plan.target_radius;
  j["v_max"] = plan.v_max;
  if (plan.tau0) j["tau0"] = *plan.tau0;
  if (meta.optimized_radius) j["optimized_radius"] = *meta.optimized_radius;
  if (meta.status) j["status"] = *meta.status;
  json trajs = json::array();
  for (const Trajectory& tr : plan.trajectories) {
    json pts = json::array();
    for (const Point& p : tr.points) pts.push_back(point_json(p));
    trajs.push_back({{"stream", tr.stream}, {"slot", tr.slot}, {"dt", tr.dt}, {"points", pts}});
  }
  j["trajectories"] = trajs;
  return dump(j);
}

PeriodicPlan plan_from_json(const std::string& text, PlanMeta* meta) {
  const json j = parse(text);
  return guarded([&] {
    if (!j.is_object()) throw Error(ErrorKind::kParse, "plan file must be a JSON object");
    if (j.value("version", 0) != kPlanVersion) {
      throw Error(ErrorKind::kParse, "unsupported plan version");
    }
    PeriodicPlan plan{env_from(j.at("env")),
                      j.at("cycle").get<int>(),
                      j.at("tau").get<double>(),
                      j.at("radius").get<double>(),
                      j.value("target_radius", 0.5),
                      j.value("v_max", 1.0),
                      std::nullopt,
                      {}};
    if (j.contains("tau0")) plan.tau0 = j.at("tau0").get<double>();
    for (const auto& t : j.at("trajectories")) {
      Trajectory tr{t.at("stream").get<int>(), t.at("slot").get<int>(), t.at("dt").get<double>(), {}};
      for (const auto& p : t.at("points")) tr.points.push_back(point_from(p));
      plan.trajectories.push_back(std::move(tr));
    }
    if (j.contains("streams") && j.at("streams").get<int>() != plan.streams()) {
      throw Error(ErrorKind::kParse, "stream count does not match the environment");
    }
    if (j.contains("steps") && j.at("steps").get<int>() != plan.steps()) {
      throw Error(ErrorKind::kParse, "step count does not match the trajectories");
    }
    try {
      plan.check_invariants();
    } catch (const Error& e) {
      throw Error(ErrorKind::kParse, e.what());
    }
    if (meta) {
      *meta = {};
      if (j.contains("optimized_radius")) meta->optimized_radius = j.at("optimized_radius").get<double>();
      if (j.contains("status")) meta->status = j.at("status").get<std::string>();
    }
    return plan;
  });
}

std::string trace_to_json(const StreamTrace& trace) {
  json j;
  j["seed"] = trace.model.seed;
  j["lambda"] = trace.model.lambda;
  j["c"] = trace.model.c;
  j["horizon"] = trace.model.horizon;
  j["streams"] = trace.streams;
  return dump(j);
}

StreamTrace trace_from_json(const std::string& text) {
  const json j = parse(text);
  return guarded([&] {
    StreamTrace trace;
    trace.model.seed = j.at("seed").get<std::uint64_t>();
    trace.model.lambda = j.at("lambda").get<double>();
    trace.model.c = j.at("c").get<double>();
    trace.model.horizon = j.at("horizon").get<double>();
    trace.model.check();
    trace.streams = j.at("streams").get<std::vector<std::vector<double>>>();
    for (const auto& s : trace.streams) {
      for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] < 0.0 || (i > 0 && !(s[i] > s[i - 1]))) {
          throw Error(ErrorKind::kParse, "arrival times must be nonnegative and increasing");
        }
      }
    }
    return trace;
  });
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kParse, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << contents)) throw Error(ErrorKind::kInvalidArgument, "cannot write '" + path + "'");
}

std::string render_svg(const PeriodicPlan& plan) {
  const auto& poly = plan.env.polygon();
  double xmin = poly[0].x(), xmax = xmin, ymin = poly[0].y(), ymax = ymin;
  for (const Point& p : poly) {
    xmin = std::min(xmin, p.x());
    xmax = std::max(xmax, p.x());
    ymin = std::min(ymin, p.y());
    ymax = std::max(ymax, p.y());
  }
  const double margin = 0.5;
  const double scale = 40.0;
  auto sx = [&](double x) { return (x - xmin + margin) * scale; };
  auto sy = [&](double y) { return (ymax - y + margin) * scale; };

  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << (xmax - xmin + 2 * margin) * scale
      << "\" height=\"" << (ymax - ymin + 2 * margin) * scale << "\">\n";
  out << "<polygon fill=\"#f4f4f4\" stroke=\"#222\" stroke-width=\"2\" points=\"";
  for (size_t i = 0; i < poly.size(); ++i) out << (i ? " " : "") << sx(poly[i].x()) << "," << sy(poly[i].y());
  out << "\"/>\n";

  const int streams = std::max(1, plan.streams());
  const int cycle = std::max(1, plan.cycle);
  for (const Trajectory& tr : plan.trajectories) {
    const int hue = 360 * tr.stream / streams;
    const int light = 35 + (cycle > 1 ? 30 * tr.slot / (cycle - 1) : 0);
    std::ostringstream color;
    color << "hsl(" << hue << ",70%," << light << "%)";
    out << "<polyline fill=\"none\" stroke=\"" << color.str()
        << "\" stroke-width=\"2\" data-stream=\"" << tr.stream << "\" data-slot=\"" << tr.slot
        << "\" points=\"";
    for (size_t k = 0; k < tr.points.size(); ++k) {
      out << (k ? " " : "") << sx(tr.points[k].x()) << "," << sy(tr.points[k].y());
    }
    out << "\"/>\n";
    if (plan.tau > 0.0 && tr.dt > 0.0) {
      for (int j = 1; j * plan.tau <= tr.duration(); ++j) {
        const Point p = tr.position_at(j * plan.tau);
        out << "<circle class=\"tick\" cx=\"" << sx(p.x()) << "\" cy=\"" << sy(p.y())
            << "\" r=\"3\" fill=\"" << color.str() << "\"/>\n";
      }
    }
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace pmapp
