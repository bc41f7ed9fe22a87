#include "pmapp/plan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pmapp {

double closest_approach(const Point& p0, const Point& vp, const Point& q0, const Point& vq,
                        double duration) {
  const Point d0 = p0 - q0;
  const Point dv = vp - vq;
  const double vv = dv.squaredNorm();
  double s = 0.0;
  if (vv > 0.0) s = std::clamp(-d0.dot(dv) / vv, 0.0, std::max(duration, 0.0));
  // Endpoints are checked explicitly so clamping round-off never hides them.
  return std::min({(d0 + s * dv).norm(), d0.norm(), (d0 + std::max(duration, 0.0) * dv).norm()});
}

namespace {

// Minimum distance between two trajectory copies that start moving at global
// times `start_a` and `start_b`, over their common lifetime.
double copy_pair_distance(const Trajectory& a, double start_a, const Trajectory& b,
                          double start_b) {
  const double lo = std::max(start_a, start_b);
  const double hi = std::min(start_a + a.duration(), start_b + b.duration());
  if (lo > hi) return std::numeric_limits<double>::infinity();

  std::vector<double> cuts{lo, hi};
  for (int i = 1; i < a.steps(); ++i) {
    const double t = start_a + i * a.dt;
    if (t > lo && t < hi) cuts.push_back(t);
  }
  for (int j = 1; j < b.steps(); ++j) {
    const double t = start_b + j * b.dt;
    if (t > lo && t < hi) cuts.push_back(t);
  }
  std::sort(cuts.begin(), cuts.end());

  double best = std::numeric_limits<double>::infinity();
  for (size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double t0 = cuts[c];
    const double t1 = cuts[c + 1];
    const double mid = 0.5 * (t0 + t1);
    const double la = std::clamp(t0 - start_a, 0.0, a.duration());
    const double lb = std::clamp(t0 - start_b, 0.0, b.duration());
    // Segment choice from the window midpoint avoids boundary ambiguity.
    const int sa = std::clamp(static_cast<int>(std::floor((mid - start_a) / a.dt)), 0, a.steps() - 1);
    const int sb = std::clamp(static_cast<int>(std::floor((mid - start_b) / b.dt)), 0, b.steps() - 1);
    const Point va = (a.points[sa + 1] - a.points[sa]) / a.dt;
    const Point vb = (b.points[sb + 1] - b.points[sb]) / b.dt;
    const Point pa = a.points[sa] + (la - sa * a.dt) * va;
    const Point pb = b.points[sb] + (lb - sb * b.dt) * vb;
    best = std::min(best, closest_approach(pa, va, pb, vb, t1 - t0));
  }
  return best;
}

}  // namespace

ValidationReport validate_plan(const PeriodicPlan& plan, double tol, std::optional<double> radius) {
  plan.check_invariants();
  const double r = radius.value_or(plan.radius);
  ValidationReport report;
  report.min_velocity_margin = std::numeric_limits<double>::infinity();
  report.min_clearance_margin = std::numeric_limits<double>::infinity();
  report.min_collision_margin = std::numeric_limits<double>::infinity();

  for (const Trajectory& tr : plan.trajectories) {
    const Endpoints& ep = plan.env.endpoints()[tr.stream];
    const double end_err =
        std::max((tr.points.front() - ep.start).norm(), (tr.points.back() - ep.goal).norm());
    if (end_err > tol) {
      report.violations.push_back({ViolationKind::kEndpoint, {tr.stream, tr.slot}, -end_err});
    }

    double speed_margin = std::numeric_limits<double>::infinity();
    double clear_margin = std::numeric_limits<double>::infinity();
    for (int k = 0; k < tr.steps(); ++k) {
      const Point& a = tr.points[k];
      const Point& b = tr.points[k + 1];
      speed_margin = std::min(speed_margin, plan.v_max - (b - a).norm() / tr.dt);
      clear_margin = std::min(clear_margin, segment_clearance(plan.env, a, b) - r);
    }
    report.min_velocity_margin = std::min(report.min_velocity_margin, speed_margin);
    report.min_clearance_margin = std::min(report.min_clearance_margin, clear_margin);
    if (speed_margin < -tol) {
      report.violations.push_back({ViolationKind::kVelocity, {tr.stream, tr.slot}, speed_margin});
    }
    if (clear_margin < -tol) {
      report.violations.push_back({ViolationKind::kClearance, {tr.stream, tr.slot}, clear_margin});
    }
  }

  // Copy of (n, m) shifted by a cycles appears at (m + a M) tau. Windows of
  // copies further apart than the longest trajectory never overlap.
  double longest = 0.0;
  for (const Trajectory& tr : plan.trajectories) longest = std::max(longest, tr.duration());
  const double period = plan.cycle * plan.tau;
  const long shifts = static_cast<long>(std::ceil(longest / period)) + 1;
  const int count = static_cast<int>(plan.trajectories.size());
  for (int ia = 0; ia < count; ++ia) {
    for (int ib = ia; ib < count; ++ib) {
      const Trajectory& a = plan.trajectories[ia];
      const Trajectory& b = plan.trajectories[ib];
      for (long shift = -shifts; shift <= shifts; ++shift) {
        if (ia == ib && shift <= 0) continue;
        const double start_a = a.slot * plan.tau;
        const double start_b = (b.slot + shift * plan.cycle) * plan.tau;
        const double d = copy_pair_distance(a, start_a, b, start_b);
        if (!std::isfinite(d)) continue;
        const double margin = d - 2.0 * r;
        report.min_collision_margin = std::min(report.min_collision_margin, margin);
        if (margin < -tol) {
          report.violations.push_back({ViolationKind::kCollision,
                                       {a.stream, a.slot, b.stream, b.slot, static_cast<int>(shift)},
                                       margin});
        }
      }
    }
  }
  report.ok = report.violations.empty();
  return report;
}

}  // namespace pmapp
