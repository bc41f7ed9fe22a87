#include "pmapp/plan.hpp"

#include "pmapp/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pmapp {

Point Trajectory::position_at(double t) const {
  const double total = duration();
  if (!(t >= 0.0 && t <= total)) {
    std::ostringstream msg;
    msg << "time " << t << " outside [0, " << total << "]";
    throw Error(ErrorKind::kOutOfDomain, msg.str());
  }
  const int k = std::min(static_cast<int>(std::floor(t / dt)), steps() - 1);
  const double u = t / dt - k;
  return points[k] + u * (points[k + 1] - points[k]);
}

Point Trajectory::velocity_at(double t) const {
  const double total = duration();
  if (!(t >= 0.0 && t <= total)) throw Error(ErrorKind::kOutOfDomain, "time outside trajectory");
  const int k = std::clamp(static_cast<int>(std::floor(t / dt)), 0, steps() - 1);
  return (points[k + 1] - points[k]) / dt;
}

void PeriodicPlan::check_invariants() const {
  if (cycle < 1) throw Error(ErrorKind::kInvalidPlan, "cycle must be >= 1");
  if (!(tau > 0.0)) throw Error(ErrorKind::kInvalidPlan, "tau must be positive");
  if (!(radius >= 0.0) || !(target_radius > 0.0)) {
    throw Error(ErrorKind::kInvalidPlan, "radius must be nonnegative and target radius positive");
  }
  if (!(v_max > 0.0)) throw Error(ErrorKind::kInvalidPlan, "v_max must be positive");
  if (static_cast<int>(trajectories.size()) != streams() * cycle) {
    throw Error(ErrorKind::kInvalidPlan, "expected exactly one trajectory per (stream, slot)");
  }
  const int k = steps();
  if (k < 1) throw Error(ErrorKind::kInvalidPlan, "trajectories need at least one segment");
  for (int n = 0; n < streams(); ++n) {
    for (int m = 0; m < cycle; ++m) {
      const Trajectory& tr = at(n, m);
      if (tr.stream != n || tr.slot != m) {
        throw Error(ErrorKind::kInvalidPlan, "trajectory grid is not ordered by (stream, slot)");
      }
      if (tr.steps() != k) throw Error(ErrorKind::kInvalidPlan, "all trajectories must share K");
      if (!(tr.dt > 0.0)) throw Error(ErrorKind::kInvalidPlan, "dt must be positive");
    }
  }
}

double residue(double t, double q) { return t - std::floor(t / q) * q; }

namespace {

// (m - m') tau + k dt - k' dt'. With equal timesteps the waypoint terms are
// combined first so that (k - k') dt is exact.
double pair_offset(double tau, int slot_diff, int k, double dt, int k2, double dt2) {
  const double steps = dt == dt2 ? (k - k2) * dt : k * dt - k2 * dt2;
  return slot_diff * tau + steps;
}

}  // namespace

std::optional<double> collision_residue(const PeriodicPlan& plan, int n, int m, int k, int n2,
                                        int m2, int k2) {
  if (n == n2 && m == m2 && k == k2) return std::nullopt;
  const double dt = plan.at(n, m).dt;
  const double dt2 = plan.at(n2, m2).dt;
  const double x = pair_offset(plan.tau, m - m2, k, dt, k2, dt2);
  const double res = residue(x, plan.cycle * plan.tau);
  if (0.0 <= res && res < dt2) return res;
  return std::nullopt;
}

namespace {

CollisionPairSet pairs_for_waypoints(const PeriodicPlan& plan, int k_first, int k_last) {
  CollisionPairSet out;
  const int streams = plan.streams();
  const int cycle = plan.cycle;
  const int steps = plan.steps();
  const double period = cycle * plan.tau;
  std::vector<int> candidates;
  for (int n = 0; n < streams; ++n) {
    for (int m = 0; m < cycle; ++m) {
      const double dt = plan.at(n, m).dt;
      for (int k = k_first; k <= k_last; ++k) {
        for (int n2 = 0; n2 < streams; ++n2) {
          for (int m2 = 0; m2 < cycle; ++m2) {
            const double dt2 = plan.at(n2, m2).dt;
            const double base = (m - m2) * plan.tau + k * dt;
            // base - k2*dt2 must land in [0, dt2) modulo the cycle length;
            // one candidate k2 per wrap, confirmed with the exact predicate.
            const long j_lo = static_cast<long>(std::floor((base - steps * dt2) / period)) - 1;
            const long j_hi = static_cast<long>(std::floor(base / period)) + 1;
            candidates.clear();
            for (long j = j_lo; j <= j_hi; ++j) {
              const long k2 = static_cast<long>(std::floor((base - j * period) / dt2));
              for (long c = k2 - 1; c <= k2 + 1; ++c) {
                if (c >= 0 && c < steps) candidates.push_back(static_cast<int>(c));
              }
            }
            std::sort(candidates.begin(), candidates.end());
            candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
            for (int k2 : candidates) {
              if (auto res = collision_residue(plan, n, m, k, n2, m2, k2)) {
                const double x = pair_offset(plan.tau, m - m2, k, dt, k2, dt2);
                const long wrap = static_cast<long>(std::floor(x / period));
                // The same agent within one cycle only matches itself; rounding
                // at alpha = 1 can otherwise pair neighbouring waypoints.
                if (n == n2 && m == m2 && wrap == 0) continue;
                out.push_back({n, m, k, n2, m2, k2, *res / dt2, wrap});
              }
            }
          }
        }
      }
    }
  }
  return out;
}

}  // namespace

CollisionPairSet collision_pairs(const PeriodicPlan& plan) {
  return pairs_for_waypoints(plan, 0, plan.steps() - 1);
}

CollisionPairSet arrival_pairs(const PeriodicPlan& plan) {
  return pairs_for_waypoints(plan, plan.steps(), plan.steps());
}

double pair_alpha(const PeriodicPlan& plan, const CollisionPair& p) {
  const double dt = plan.at(p.stream, p.slot).dt;
  const double dt2 = plan.at(p.stream2, p.slot2).dt;
  const double x = (p.slot - p.slot2 - p.wrap * plan.cycle) * plan.tau + p.k * dt;
  return x / dt2 - p.k2;
}

PairDistance pair_distance(const PeriodicPlan& plan, const CollisionPair& p) {
  const double alpha = pair_alpha(plan, p);
  const Trajectory& a = plan.at(p.stream, p.slot);
  const Trajectory& b = plan.at(p.stream2, p.slot2);
  const Point other = (1.0 - alpha) * b.points[p.k2] + alpha * b.points[p.k2 + 1];
  return {(a.points[p.k] - other).norm(), alpha};
}

const char* to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kEndpoint: return "endpoint";
    case ViolationKind::kVelocity: return "velocity";
    case ViolationKind::kClearance: return "clearance";
    case ViolationKind::kCollision: return "collision";
  }
  return "unknown";
}

}  // namespace pmapp
