#pragma once

#include "pmapp/geometry.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pmapp {

/// One discretized trajectory: K+1 waypoints visited every `dt`, moving in a
/// straight line at constant velocity between consecutive waypoints.
struct Trajectory {
  int stream = 0;
  int slot = 0;
  double dt = 1.0;
  std::vector<Point> points;

  int steps() const { return static_cast<int>(points.size()) - 1; }
  double duration() const { return dt * steps(); }

  /// Throws out-of-domain unless 0 <= t <= duration().
  Point position_at(double t) const;
  /// Velocity on the segment active at time t (right-continuous).
  Point velocity_at(double t) const;
};

/// M x N trajectories reused every M periods of length tau. `radius` is the
/// radius the plan is claimed feasible for (0 for a relaxed seed plan);
/// `target_radius` is the physical agent radius the optimizer must reach.
struct PeriodicPlan {
  Environment env;
  int cycle = 1;
  double tau = 1.0;
  double radius = 0.5;
  double target_radius = 0.5;
  double v_max = 1.0;
  std::optional<double> tau0;
  std::vector<Trajectory> trajectories;  // index = stream * cycle + slot

  int streams() const { return env.streams(); }
  int steps() const { return trajectories.empty() ? 0 : trajectories.front().steps(); }

  int index(int stream, int slot) const { return stream * cycle + slot; }
  const Trajectory& at(int stream, int slot) const { return trajectories[index(stream, slot)]; }
  Trajectory& at(int stream, int slot) { return trajectories[index(stream, slot)]; }

  /// Throws invalid-plan if the grid, K, or scalar invariants are broken.
  void check_invariants() const;
};

/// t reduced into [0, q) with floor semantics.
double residue(double t, double q);

/// One element of the collision-pair set: waypoint k of (stream, slot) is
/// checked against segment k2 of (stream2, slot2) at interpolation fraction
/// alpha. `wrap` is the floor count removed by the residue; holding it fixed
/// keeps alpha a smooth function of the timing between refreshes.
struct CollisionPair {
  int stream, slot, k;
  int stream2, slot2, k2;
  double alpha;
  long wrap;

  bool same_indices(const CollisionPair& o) const {
    return stream == o.stream && slot == o.slot && k == o.k && stream2 == o.stream2 &&
           slot2 == o.slot2 && k2 == o.k2;
  }
};

using CollisionPairSet = std::vector<CollisionPair>;

/// The membership predicate for one index tuple. Returns the residue when
/// the tuple belongs to the set.
std::optional<double> collision_residue(const PeriodicPlan& plan, int n, int m, int k, int n2,
                                        int m2, int k2);

/// All tuples satisfying the membership predicate, ordered by
/// (stream, slot, k, stream2, slot2, k2).
CollisionPairSet collision_pairs(const PeriodicPlan& plan);

/// Same predicate for the goal waypoint k = K, which the pair set leaves out:
/// an agent arriving at its goal against the other copy's segment.
CollisionPairSet arrival_pairs(const PeriodicPlan& plan);

/// Time offset of alpha measured in segment units, recomputed from the
/// current timing with the pair's wrap count held fixed.
double pair_alpha(const PeriodicPlan& plan, const CollisionPair& pair);

struct PairDistance {
  double distance;
  double alpha;
};

PairDistance pair_distance(const PeriodicPlan& plan, const CollisionPair& pair);

enum class ViolationKind { kEndpoint, kVelocity, kClearance, kCollision };

const char* to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::vector<int> ids;  // (n, m) or (n, m, n2, m2, cycle_shift)
  double worst_margin;   // negative: amount by which the constraint fails
};

struct ValidationReport {
  bool ok = true;
  std::vector<Violation> violations;
  double min_velocity_margin = 0.0;
  double min_clearance_margin = 0.0;
  double min_collision_margin = 0.0;
};

/// Exact continuous-time check of endpoints, speed limit, boundary clearance
/// and periodic collision-freeness at radius `radius` (plan.radius if unset).
ValidationReport validate_plan(const PeriodicPlan& plan, double tol = 1e-6,
                               std::optional<double> radius = std::nullopt);

/// Closest approach over t in [t0, t1] of two points moving linearly,
/// p(t) = p0 + (t - t0) vp and q(t) = q0 + (t - t0) vq.
double closest_approach(const Point& p0, const Point& vp, const Point& q0, const Point& vq,
                        double duration);

}  // namespace pmapp
