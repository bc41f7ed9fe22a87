#include "pmapp/seed_plan.hpp"

#include "pmapp/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>

namespace pmapp {

PassOrder build_pass_order(const std::vector<ReferencePath>& paths,
                           const std::vector<PathIntersection>& intersections, int cycle,
                           double v_max, double slack) {
  if (cycle < 1) throw Error(ErrorKind::kInvalidArgument, "cycle must be >= 1");
  if (!(v_max > 0.0)) throw Error(ErrorKind::kInvalidArgument, "v_max must be positive");
  const int streams = static_cast<int>(paths.size());

  // Crossing arcs per stream, remembering which intersection each came from.
  struct Mark {
    double arc;
    int crossing;
    Point point;
  };
  std::vector<std::vector<Mark>> marks(streams);
  for (size_t c = 0; c < intersections.size(); ++c) {
    const auto& x = intersections[c];
    marks[x.stream_a].push_back({x.arc_a, static_cast<int>(c), x.point});
    marks[x.stream_b].push_back({x.arc_b, static_cast<int>(c), x.point});
  }

  PassOrder order;
  order.cycle = cycle;
  order.events.resize(streams);
  // event index of crossing c on stream n
  std::vector<std::vector<int>> index_of(intersections.size(), std::vector<int>(2, -1));
  for (int n = 0; n < streams; ++n) {
    auto& mk = marks[n];
    std::stable_sort(mk.begin(), mk.end(), [](const Mark& x, const Mark& y) { return x.arc < y.arc; });
    auto& ev = order.events[n];
    ev.push_back({n, 0, paths[n].vertices.front(), 0.0, 0.0});
    for (const Mark& m : mk) {
      const int idx = static_cast<int>(ev.size());
      ev.push_back({n, idx, m.point, m.arc, 0.0});
      const auto& x = intersections[m.crossing];
      index_of[m.crossing][x.stream_a == n ? 0 : 1] = idx;
    }
    ev.push_back({n, static_cast<int>(ev.size()), paths[n].vertices.back(), paths[n].length, 0.0});
    for (size_t k = 0; k + 1 < ev.size(); ++k) {
      ev[k].min_leg_time = std::max(0.0, ev[k + 1].arc - ev[k].arc) / v_max;
    }
  }

  for (size_t c = 0; c < intersections.size(); ++c) {
    const auto& x = intersections[c];
    // The stream with the shorter approach goes first; ties to the lower index.
    const bool a_first = x.arc_a <= x.arc_b;
    const int first = a_first ? x.stream_a : x.stream_b;
    const int second = a_first ? x.stream_b : x.stream_a;
    const int kf = index_of[c][a_first ? 0 : 1];
    const int ks = index_of[c][a_first ? 1 : 0];
    for (int m = 0; m + 1 < cycle; ++m) {
      order.constraints.push_back(
          {ConstraintKind::kWithinCycle, {first, m, kf}, {first, m + 1, kf}, slack});
    }
    order.constraints.push_back(
        {ConstraintKind::kWithinCycle, {first, cycle - 1, kf}, {second, 0, ks}, slack});
    for (int m = 0; m + 1 < cycle; ++m) {
      order.constraints.push_back(
          {ConstraintKind::kWithinCycle, {second, m, ks}, {second, m + 1, ks}, slack});
    }
    order.constraints.push_back(
        {ConstraintKind::kWraparound, {second, cycle - 1, ks}, {first, 0, kf}, slack});
  }
  return order;
}

int TimedSchedule::vertex(const EventId& id) const {
  int offset = 0;
  for (int n = 0; n < id.stream; ++n) offset += events_per_stream[n] * cycle;
  return offset + id.slot * events_per_stream[id.stream] + id.index;
}

double TimedSchedule::time(const EventId& id, double tau) const {
  const int v = vertex(id);
  return static_cast<double>(a[v]) * tau + b[v];
}

namespace {

struct Edge {
  int from;
  int to;
  long da;
  double db;
};

struct Graph {
  std::vector<Edge> edges;
  std::vector<EventId> ids;
};

Graph build_graph(const PassOrder& order, const TimedSchedule& layout) {
  Graph g;
  const int streams = static_cast<int>(order.events.size());
  for (int n = 0; n < streams; ++n) {
    for (int m = 0; m < order.cycle; ++m) {
      const auto& ev = order.events[n];
      for (size_t k = 0; k < ev.size(); ++k) {
        g.ids.push_back({n, m, static_cast<int>(k)});
        if (k + 1 < ev.size()) {
          g.edges.push_back({layout.vertex({n, m, static_cast<int>(k)}),
                             layout.vertex({n, m, static_cast<int>(k + 1)}), 0,
                             ev[k].min_leg_time});
        }
      }
    }
  }
  for (const auto& c : order.constraints) {
    if (c.kind != ConstraintKind::kWithinCycle) continue;
    g.edges.push_back({layout.vertex(c.from), layout.vertex(c.to), c.from.slot - c.to.slot, c.slack});
  }
  return g;
}

std::string describe(const EventId& id) {
  std::ostringstream s;
  s << "(" << id.stream << "," << id.slot << "," << id.index << ")";
  return s.str();
}

}  // namespace

TimedSchedule schedule_dp(const PassOrder& order, const ScheduleOptions& options) {
  TimedSchedule sched;
  sched.cycle = order.cycle;
  for (const auto& ev : order.events) sched.events_per_stream.push_back(static_cast<int>(ev.size()));
  const int count =
      std::accumulate(sched.events_per_stream.begin(), sched.events_per_stream.end(), 0) *
      order.cycle;
  for (const auto& c : order.constraints) {
    for (const EventId* id : {&c.from, &c.to}) {
      if (id->stream < 0 || id->stream >= static_cast<int>(order.events.size()) || id->slot < 0 ||
          id->slot >= order.cycle || id->index < 0 ||
          id->index >= sched.events_per_stream[id->stream]) {
        throw Error(ErrorKind::kInvalidArgument, "constraint refers to unknown event " + describe(*id));
      }
    }
    if (c.kind == ConstraintKind::kWithinCycle && c.to.index == 0) {
      throw Error(ErrorKind::kCyclicConstraints,
                  "start event " + describe(c.to) + " must not have incoming order constraints");
    }
  }

  const Graph g = build_graph(order, sched);
  std::vector<std::vector<int>> out(count);
  std::vector<int> indegree(count, 0);
  for (size_t e = 0; e < g.edges.size(); ++e) {
    out[g.edges[e].from].push_back(static_cast<int>(e));
    ++indegree[g.edges[e].to];
  }

  // Kahn's algorithm; smallest vertex id first keeps the order deterministic.
  std::vector<int> topo;
  std::deque<int> ready;
  for (int v = 0; v < count; ++v) {
    if (indegree[v] == 0) ready.push_back(v);
  }
  std::vector<int> remaining = indegree;
  while (!ready.empty()) {
    const int v = ready.front();
    ready.pop_front();
    topo.push_back(v);
    for (int e : out[v]) {
      if (--remaining[g.edges[e].to] == 0) ready.push_back(g.edges[e].to);
    }
  }
  if (static_cast<int>(topo.size()) != count) {
    throw Error(ErrorKind::kCyclicConstraints, "ordering constraints form a cycle");
  }

  sched.a.assign(count, 0);
  sched.b.assign(count, 0.0);
  std::vector<bool> seen(count, false);
  for (int v : topo) {
    if (g.ids[v].index == 0) seen[v] = true;  // (0, 0) at the start
    for (int e : out[v]) {
      const Edge& edge = g.edges[e];
      const long ca = sched.a[v] + edge.da;
      const double cb = sched.b[v] + edge.db;
      const int w = edge.to;
      if (!seen[w] || ca > sched.a[w] || (ca == sched.a[w] && cb > sched.b[w])) {
        sched.a[w] = ca;
        sched.b[w] = cb;
        seen[w] = true;
      }
    }
  }

  // Smallest tau with every constraint satisfied by t = a tau + b.
  double tau0 = 0.0;
  auto bound = [&](long coeff, double rhs, const std::string& what) {
    if (coeff > 0) {
      tau0 = std::max(tau0, rhs / static_cast<double>(coeff));
    } else if (coeff == 0) {
      if (rhs > options.tolerance) {
        throw Error(ErrorKind::kCyclicConstraints, "constraint " + what + " cannot be satisfied");
      }
    } else {
      throw Error(ErrorKind::kCyclicConstraints, "constraint " + what + " bounds tau from above");
    }
  };
  for (const Edge& e : g.edges) {
    bound(sched.a[e.to] - sched.a[e.from] - e.da, sched.b[e.from] + e.db - sched.b[e.to],
          describe(g.ids[e.from]) + "->" + describe(g.ids[e.to]));
  }
  for (const auto& c : order.constraints) {
    if (c.kind != ConstraintKind::kWraparound) continue;
    const int u = sched.vertex(c.from);
    const int v = sched.vertex(c.to);
    bound(sched.a[v] + 1 - sched.a[u], sched.b[u] + c.slack - sched.b[v],
          describe(c.from) + "=>" + describe(c.to));
  }
  sched.tau0 = std::max(tau0, options.tau_floor);
  return sched;
}

bool schedule_satisfied(const PassOrder& order, const TimedSchedule& schedule, double tau,
                        double tol) {
  for (size_t n = 0; n < order.events.size(); ++n) {
    const auto& ev = order.events[n];
    for (int m = 0; m < order.cycle; ++m) {
      const int s = static_cast<int>(n);
      if (std::abs(schedule.time({s, m, 0}, tau)) > tol) return false;
      for (size_t k = 0; k + 1 < ev.size(); ++k) {
        const int i = static_cast<int>(k);
        if (schedule.time({s, m, i}, tau) + ev[k].min_leg_time >
            schedule.time({s, m, i + 1}, tau) + tol) {
          return false;
        }
      }
    }
  }
  for (const auto& c : order.constraints) {
    const double lhs = c.kind == ConstraintKind::kWithinCycle
                           ? c.from.slot * tau + schedule.time(c.from, tau) + c.slack
                           : (order.cycle - 1) * tau + schedule.time(c.from, tau) + c.slack;
    const double rhs = c.kind == ConstraintKind::kWithinCycle
                           ? c.to.slot * tau + schedule.time(c.to, tau)
                           : order.cycle * tau + schedule.time(c.to, tau);
    if (lhs > rhs + tol) return false;
  }
  return true;
}

PeriodicPlan synthesize_initial_plan(const Environment& env,
                                     const std::vector<ReferencePath>& paths,
                                     const PassOrder& order, const TimedSchedule& schedule,
                                     int steps, double tau_init, double target_radius,
                                     double v_max) {
  if (steps < 2) throw Error(ErrorKind::kInvalidArgument, "K must be at least 2");
  if (tau_init < schedule.tau0) {
    std::ostringstream msg;
    msg << "tau_init " << tau_init << " is below the minimal period " << schedule.tau0;
    throw Error(ErrorKind::kPeriodTooSmall, msg.str());
  }
  PeriodicPlan plan{env, order.cycle, tau_init, 0.0, target_radius, v_max, schedule.tau0, {}};
  for (int n = 0; n < env.streams(); ++n) {
    const auto& ev = order.events[n];
    for (int m = 0; m < order.cycle; ++m) {
      std::vector<double> times;
      for (size_t k = 0; k < ev.size(); ++k) {
        times.push_back(schedule.time({n, m, static_cast<int>(k)}, tau_init));
      }
      const double total = times.back();
      Trajectory tr{n, m, total / steps, {}};
      size_t leg = 0;
      for (int k = 0; k <= steps; ++k) {
        const double t = k == steps ? total : k * tr.dt;
        while (leg + 2 < times.size() && t > times[leg + 1]) ++leg;
        const double span = times[leg + 1] - times[leg];
        const double u = span > 0.0 ? std::clamp((t - times[leg]) / span, 0.0, 1.0) : 1.0;
        const double arc = ev[leg].arc + u * (ev[leg + 1].arc - ev[leg].arc);
        tr.points.push_back(paths[n].point_at_arc(arc));
      }
      tr.points.front() = env.endpoints()[n].start;
      tr.points.back() = env.endpoints()[n].goal;
      plan.trajectories.push_back(std::move(tr));
    }
  }
  return plan;
}

SeedResult generate_seed_plan(const Environment& env, const SeedOptions& options) {
  std::vector<ReferencePath> paths;
  for (const ReferencePath& p : shortest_paths(env)) {
    paths.push_back(offset_corners(env, p, options.corner_offset));
  }
  const auto crossings = path_intersections(paths);
  PassOrder order = build_pass_order(paths, crossings, options.cycle, options.v_max, options.slack);
  TimedSchedule schedule = schedule_dp(order);
  const double tau_init = options.tau_init.value_or(
      std::max(schedule.tau0, 2.0 * options.target_radius / options.v_max));
  PeriodicPlan plan = synthesize_initial_plan(env, paths, order, schedule, options.steps, tau_init,
                                              options.target_radius, options.v_max);
  SeedResult out{std::move(order), std::move(schedule), std::move(plan)};
  return out;
}

std::string dag_edge_list(const PassOrder& order) {
  TimedSchedule layout;
  layout.cycle = order.cycle;
  for (const auto& ev : order.events) layout.events_per_stream.push_back(static_cast<int>(ev.size()));
  const Graph g = build_graph(order, layout);
  std::ostringstream s;
  for (const Edge& e : g.edges) {
    s << describe(g.ids[e.from]) << " -> " << describe(g.ids[e.to]) << " " << e.da << " " << e.db
      << "\n";
  }
  for (const auto& c : order.constraints) {
    if (c.kind == ConstraintKind::kWraparound) {
      s << describe(c.from) << " => " << describe(c.to) << " wrap " << c.slack << "\n";
    }
  }
  return s.str();
}

}  // namespace pmapp
