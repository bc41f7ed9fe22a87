#pragma once

#include "pmapp/geometry.hpp"
#include "pmapp/plan.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pmapp {

/// Point k along the reference path of a stream: the start, every crossing
/// with another path in arc order, then the goal. `min_leg_time` is the
/// free-flight time to the next event (0 for the goal).
struct PassEvent {
  int stream = 0;
  int index = 0;
  Point point;
  double arc = 0.0;
  double min_leg_time = 0.0;
};

/// Vertex (stream, slot, event index) of the ordering graph.
struct EventId {
  int stream = 0;
  int slot = 0;
  int index = 0;

  bool operator==(const EventId&) const = default;
};

enum class ConstraintKind { kWithinCycle, kWraparound };

/// kWithinCycle: from.slot*tau + t(from) + slack <= to.slot*tau + t(to).
/// kWraparound:  (M-1)*tau + t(from) + slack <= M*tau + t(to), with
/// from.slot = M-1 and to.slot = 0.
struct OrderConstraint {
  ConstraintKind kind = ConstraintKind::kWithinCycle;
  EventId from;
  EventId to;
  double slack = 1.0;
};

struct PassOrder {
  int cycle = 1;
  std::vector<std::vector<PassEvent>> events;  // per stream
  std::vector<OrderConstraint> constraints;
};

/// Passing order at every crossing: the stream reaching the crossing first
/// (ties to the lower index) sends its M slot agents through, then the
/// other stream's M agents, alternating cycle by cycle.
PassOrder build_pass_order(const std::vector<ReferencePath>& paths,
                           const std::vector<PathIntersection>& intersections, int cycle,
                           double v_max = 1.0, double slack = 1.0);

/// Pass times t = a*tau + b for every (stream, slot, event).
struct TimedSchedule {
  int cycle = 1;
  std::vector<int> events_per_stream;
  std::vector<long> a;
  std::vector<double> b;
  double tau0 = 0.0;

  int vertex(const EventId& id) const;
  double time(const EventId& id, double tau) const;
};

struct ScheduleOptions {
  double tau_floor = 0.1;
  double tolerance = 1e-9;
};

/// Lexicographically minimal (a, b) under the start, leg and within-cycle
/// constraints, then the smallest tau making every constraint hold.
TimedSchedule schedule_dp(const PassOrder& order, const ScheduleOptions& options = {});

/// True if evaluating the schedule at `tau` satisfies every leg and order
/// constraint within `tol`.
bool schedule_satisfied(const PassOrder& order, const TimedSchedule& schedule, double tau,
                        double tol = 1e-9);

/// Relaxed plan (radius 0) following the schedule at constant speed between
/// pass events, resampled into K equal time steps.
PeriodicPlan synthesize_initial_plan(const Environment& env,
                                     const std::vector<ReferencePath>& paths,
                                     const PassOrder& order, const TimedSchedule& schedule,
                                     int steps, double tau_init, double target_radius = 0.5,
                                     double v_max = 1.0);

struct SeedOptions {
  int cycle = 1;
  int steps = 32;
  double slack = 1.0;
  double target_radius = 0.5;
  double v_max = 1.0;
  double corner_offset = 0.5;      // see offset_corners
  std::optional<double> tau_init;  // defaults to max(tau0, 2 r0 / v_max)
};

struct SeedResult {
  PassOrder order;
  TimedSchedule schedule;
  PeriodicPlan plan;
};

SeedResult generate_seed_plan(const Environment& env, const SeedOptions& options = {});

/// Ordering graph as "from -> to a_shift b_weight" lines.
std::string dag_edge_list(const PassOrder& order);

}  // namespace pmapp
