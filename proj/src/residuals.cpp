#include "objective.hpp"

#include "pmapp/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pmapp {

VariableLayout::VariableLayout(const PeriodicPlan& plan)
    : trajectories_(static_cast<int>(plan.trajectories.size())), steps_(plan.steps()) {
  dt_offset_ = 2 * trajectories_ * (steps_ - 1);
  size_ = dt_offset_ + trajectories_ + 2;
}

int VariableLayout::point(int traj, int k) const {
  if (k <= 0 || k >= steps_) return -1;
  return 2 * (traj * (steps_ - 1) + (k - 1));
}

Eigen::VectorXd VariableLayout::pack(const PeriodicPlan& plan) const {
  Eigen::VectorXd x(size_);
  for (int t = 0; t < trajectories_; ++t) {
    const Trajectory& tr = plan.trajectories[t];
    for (int k = 1; k < steps_; ++k) x.segment<2>(point(t, k)) = tr.points[k];
    x[log_dt(t)] = std::log(tr.dt);
  }
  x[log_tau()] = std::log(plan.tau);
  x[radius()] = plan.radius;
  return x;
}

void VariableLayout::unpack(const Eigen::VectorXd& x, PeriodicPlan& plan) const {
  for (int t = 0; t < trajectories_; ++t) {
    Trajectory& tr = plan.trajectories[t];
    for (int k = 1; k < steps_; ++k) tr.points[k] = x.segment<2>(point(t, k));
    tr.dt = std::exp(x[log_dt(t)]);
  }
  plan.tau = std::exp(x[log_tau()]);
  plan.radius = x[radius()];
}

namespace detail {

struct InverseGap {
  double value;  // 1/d, continued linearly below the floor
  double slope;  // d(value)/dd
  bool floored;
};

InverseGap inverse_gap(double d, double floor, const char* term) {
  if (d >= floor && d > 0.0) return {1.0 / d, -1.0 / (d * d), false};
  if (!(floor > 0.0)) {
    throw Error(ErrorKind::kNonfiniteResidual, std::string("zero distance in ") + term + " term");
  }
  return {1.0 / floor - (d - floor) / (floor * floor), -1.0 / (floor * floor), true};
}

class Builder {
 public:
  Builder(bool with_jacobian, Evaluation& out) : jac_(with_jacobian), out_(out) {}

  int row(double value) {
    values_.push_back(value);
    return static_cast<int>(values_.size()) - 1;
  }
  void add(int r, int col, double v) {
    if (jac_ && col >= 0 && v != 0.0) out_.triplets.emplace_back(r, col, v);
  }
  void add2(int r, int col, const Point& g) {
    if (col < 0) return;
    add(r, col, g.x());
    add(r, col + 1, g.y());
  }
  void finish() { out_.residuals = Eigen::Map<Eigen::VectorXd>(values_.data(), values_.size()); }

 private:
  bool jac_;
  Evaluation& out_;
  std::vector<double> values_;
};

// Position of a trajectory at local time t, extrapolating segment `seg`
// linearly, plus the derivative of that position w.r.t. log dt.
struct SegmentSample {
  Point position;
  double u;
  Point d_log_dt;
};

SegmentSample sample_segment(const Trajectory& tr, int seg, double t) {
  const Point delta = tr.points[seg + 1] - tr.points[seg];
  const double u = t / tr.dt - seg;
  return {tr.points[seg] + u * delta, u, -(t / tr.dt) * delta};
}

struct WindowGeometry {
  double lo, hi, t_star, delta;
};

WindowGeometry window_geometry(const PeriodicPlan& plan, const WindowTerm& w) {
  const Trajectory& a = plan.trajectories[w.traj_a];
  const Trajectory& b = plan.trajectories[w.traj_b];
  const double delta = (a.slot - b.slot - static_cast<double>(w.shift) * plan.cycle) * plan.tau;
  WindowGeometry g{std::max(w.seg_a * a.dt, w.seg_b * b.dt - delta),
                   std::min((w.seg_a + 1) * a.dt, (w.seg_b + 1) * b.dt - delta), 0.0, delta};
  const Point va = (a.points[w.seg_a + 1] - a.points[w.seg_a]) / a.dt;
  const Point vb = (b.points[w.seg_b + 1] - b.points[w.seg_b]) / b.dt;
  const Point rel_v = va - vb;
  const Point d0 = sample_segment(a, w.seg_a, g.lo).position -
                   sample_segment(b, w.seg_b, g.lo + delta).position;
  const double vv = rel_v.squaredNorm();
  double t = g.lo;
  if (vv > 0.0) t = g.lo - d0.dot(rel_v) / vv;
  if (g.lo <= g.hi) {
    t = std::clamp(t, g.lo, g.hi);
  } else {
    t = 0.5 * (g.lo + g.hi);
  }
  g.t_star = t;
  return g;
}

Evaluation evaluate(const PeriodicPlan& plan, const VariableLayout& layout,
                    const PenaltyWeights& weights, const ActiveSet& active,
                    const ObjectiveOptions& options, bool with_jacobian) {
  Evaluation out;
  Builder b(with_jacobian, out);
  const int steps = plan.steps();
  const double inv_k = 1.0 / steps;
  const double r = plan.radius;
  const double tau = plan.tau;
  const double floor = options.inverse_floor;
  const int col_tau = layout.log_tau();
  const int col_r = layout.radius();

  {
    const int row = b.row(tau - 2.0 * r / plan.v_max);
    b.add(row, col_tau, tau);
    b.add(row, col_r, -2.0 / plan.v_max);
  }

  const double w_time = std::sqrt(weights.time * inv_k);
  const double w_vel = std::sqrt(weights.velocity * inv_k);
  const double w_obs = std::sqrt(weights.obstacle * inv_k);
  const double w_col = std::sqrt(weights.collision * inv_k);
  const int ntraj = static_cast<int>(plan.trajectories.size());

  auto segment_terms = [&](bool speed) {
    for (int t = 0; t < ntraj; ++t) {
      const Trajectory& tr = plan.trajectories[t];
      for (int k = 0; k < steps; ++k) {
        const Point dx = tr.points[k + 1] - tr.points[k];
        const double len = dx.norm();
        const double v = len / tr.dt;
        const double w = speed ? w_vel : w_time;
        const bool active_row = !speed || v > plan.v_max;
        const int row = b.row(active_row ? w * (speed ? v - plan.v_max : v) : 0.0);
        if (!active_row) continue;
        if (len > 0.0) {
          const Point g = (w / (len * tr.dt)) * dx;
          b.add2(row, layout.point(t, k + 1), g);
          b.add2(row, layout.point(t, k), -g);
        }
        b.add(row, layout.log_dt(t), -w * v);
      }
    }
  };
  segment_terms(false);

  {
    const double sr = std::sqrt(weights.radius);
    const int row = b.row(sr * (r - plan.target_radius));
    b.add(row, col_r, sr);
  }

  segment_terms(true);

  for (int t = 0; t < ntraj; ++t) {
    const Trajectory& tr = plan.trajectories[t];
    for (int k = 0; k <= steps; ++k) {
      const BoundaryQuery q = query_boundary(plan.env, tr.points[k]);
      const InverseGap h = inverse_gap(q.signed_distance, floor, "clearance");
      out.floor_events += h.floored;
      const double gap = h.value - 1.0 / r;
      const int row = b.row(gap > 0.0 ? w_obs * gap : 0.0);
      if (gap <= 0.0) continue;
      b.add2(row, layout.point(t, k), (w_obs * h.slope) * q.gradient);
      b.add(row, col_r, w_obs / (r * r));
    }
  }

  const double period = plan.cycle * tau;
  auto pair_terms = [&](const CollisionPairSet& pairs) {
    for (const CollisionPair& p : pairs) {
      const int ta = plan.index(p.stream, p.slot);
      const int tb = plan.index(p.stream2, p.slot2);
      const Trajectory& a = plan.trajectories[ta];
      const Trajectory& o = plan.trajectories[tb];
      const double alpha = pair_alpha(plan, p);
      const Point seg = o.points[p.k2 + 1] - o.points[p.k2];
      const Point e = a.points[p.k] - (o.points[p.k2] + alpha * seg);
      const double d = e.norm();
      const InverseGap h = inverse_gap(d, floor, "collision");
      out.floor_events += h.floored;
      const double gap = h.value - 0.5 / r;
      const int row = b.row(gap > 0.0 ? w_col * gap : 0.0);
      if (gap <= 0.0 || !with_jacobian) continue;
      const Point unit = d > 0.0 ? Point(e / d) : Point::Zero();
      const double s = w_col * h.slope;
      b.add2(row, layout.point(ta, p.k), s * unit);
      b.add2(row, layout.point(tb, p.k2), -s * (1.0 - alpha) * unit);
      b.add2(row, layout.point(tb, p.k2 + 1), -s * alpha * unit);
      const double dd_alpha = -unit.dot(seg);
      const double lead = (p.slot - p.slot2) * tau - static_cast<double>(p.wrap) * period;
      b.add(row, col_tau, s * dd_alpha * lead / o.dt);
      b.add(row, layout.log_dt(ta), s * dd_alpha * p.k * a.dt / o.dt);
      b.add(row, layout.log_dt(tb), -s * dd_alpha * (alpha + p.k2));
      b.add(row, col_r, w_col * 0.5 / (r * r));
    }
  };
  pair_terms(active.pairs);

  if (options.exact_terms) {
    pair_terms(active.exact.arrivals);

    for (const CornerTerm& c : active.exact.corners) {
      const Trajectory& tr = plan.trajectories[c.traj];
      const Point& p0 = tr.points[c.segment];
      const Point& p1 = tr.points[c.segment + 1];
      const Point ab = p1 - p0;
      const double len2 = ab.squaredNorm();
      const double u = len2 > 0.0 ? std::clamp((c.vertex - p0).dot(ab) / len2, 0.0, 1.0) : 0.0;
      const Point closest = p0 + u * ab;
      const Point diff = closest - c.vertex;
      const double dist = diff.norm();
      const double sign = point_in_polygon(plan.env.polygon(), closest) ? 1.0 : -1.0;
      const InverseGap h = inverse_gap(sign * dist, floor, "corner clearance");
      out.floor_events += h.floored;
      const double gap = h.value - 1.0 / r;
      const int row = b.row(gap > 0.0 ? w_obs * gap : 0.0);
      if (gap <= 0.0 || !with_jacobian) continue;
      const Point grad = dist > 0.0 ? Point(sign * diff / dist) : Point::Zero();
      const double s = w_obs * h.slope;
      b.add2(row, layout.point(c.traj, c.segment), s * (1.0 - u) * grad);
      b.add2(row, layout.point(c.traj, c.segment + 1), s * u * grad);
      b.add(row, col_r, w_obs / (r * r));
    }

    for (const WindowTerm& w : active.exact.windows) {
      const Trajectory& a = plan.trajectories[w.traj_a];
      const Trajectory& o = plan.trajectories[w.traj_b];
      const WindowGeometry g = window_geometry(plan, w);
      const SegmentSample sa = sample_segment(a, w.seg_a, g.t_star);
      const SegmentSample sb = sample_segment(o, w.seg_b, g.t_star + g.delta);
      const Point e = sa.position - sb.position;
      const double d = e.norm();
      const InverseGap h = inverse_gap(d, floor, "window collision");
      out.floor_events += h.floored;
      const double gap = h.value - 0.5 / r;
      const int row = b.row(gap > 0.0 ? w_col * gap : 0.0);
      if (gap <= 0.0 || !with_jacobian) continue;
      const Point unit = d > 0.0 ? Point(e / d) : Point::Zero();
      const double s = w_col * h.slope;
      b.add2(row, layout.point(w.traj_a, w.seg_a), s * (1.0 - sa.u) * unit);
      b.add2(row, layout.point(w.traj_a, w.seg_a + 1), s * sa.u * unit);
      b.add2(row, layout.point(w.traj_b, w.seg_b), -s * (1.0 - sb.u) * unit);
      b.add2(row, layout.point(w.traj_b, w.seg_b + 1), -s * sb.u * unit);
      b.add(row, layout.log_dt(w.traj_a), s * unit.dot(sa.d_log_dt));
      b.add(row, layout.log_dt(w.traj_b), -s * unit.dot(sb.d_log_dt));
      const Point seg_b = o.points[w.seg_b + 1] - o.points[w.seg_b];
      b.add(row, col_tau, -s * unit.dot(seg_b) * g.delta / o.dt);
      b.add(row, col_r, w_col * 0.5 / (r * r));
    }
  }

  b.finish();
  for (Eigen::Index i = 0; i < out.residuals.size(); ++i) {
    if (!std::isfinite(out.residuals[i])) {
      std::ostringstream msg;
      msg << "residual row " << i << " is not finite";
      throw Error(ErrorKind::kNonfiniteResidual, msg.str());
    }
  }
  return out;
}

}  // namespace detail

Eigen::VectorXd residual_vector(const PeriodicPlan& plan, const PenaltyWeights& weights,
                                const ActiveSet& active, const ObjectiveOptions& options) {
  return detail::evaluate(plan, VariableLayout(plan), weights, active, options, false).residuals;
}

Eigen::SparseMatrix<double> jacobian(const PeriodicPlan& plan, const PenaltyWeights& weights,
                                     const ActiveSet& active, const ObjectiveOptions& options) {
  const VariableLayout layout(plan);
  const auto eval = detail::evaluate(plan, layout, weights, active, options, true);
  Eigen::SparseMatrix<double> j(eval.residuals.size(), layout.size());
  j.setFromTriplets(eval.triplets.begin(), eval.triplets.end());
  return j;
}

ActiveSet refresh_pairs(const PeriodicPlan& plan, bool exact_terms) {
  ActiveSet set;
  set.pairs = collision_pairs(plan);
  if (!exact_terms) return set;

  const double corner_cutoff = 2.0 * plan.target_radius;
  const double window_cutoff = 4.0 * plan.target_radius;
  const int ntraj = static_cast<int>(plan.trajectories.size());
  const int steps = plan.steps();

  for (const CollisionPair& p : arrival_pairs(plan)) {
    if (pair_distance(plan, p).distance < window_cutoff) set.exact.arrivals.push_back(p);
  }

  for (int t = 0; t < ntraj; ++t) {
    const Trajectory& tr = plan.trajectories[t];
    for (int k = 0; k < steps; ++k) {
      const Point& p0 = tr.points[k];
      const Point ab = tr.points[k + 1] - p0;
      const double len2 = ab.squaredNorm();
      if (len2 <= 0.0) continue;
      for (const Point& v : plan.env.reflex_vertices()) {
        const double u = (v - p0).dot(ab) / len2;
        if (u <= 0.0 || u >= 1.0) continue;
        if ((p0 + u * ab - v).norm() < corner_cutoff) set.exact.corners.push_back({t, k, v});
      }
    }
  }

  double longest = 0.0;
  for (const Trajectory& tr : plan.trajectories) longest = std::max(longest, tr.duration());
  const double period = plan.cycle * plan.tau;
  const int shifts = static_cast<int>(std::ceil(longest / period)) + 1;
  for (int ta = 0; ta < ntraj; ++ta) {
    for (int tb = ta; tb < ntraj; ++tb) {
      const Trajectory& a = plan.trajectories[ta];
      const Trajectory& o = plan.trajectories[tb];
      for (int shift = -shifts; shift <= shifts; ++shift) {
        if (ta == tb && shift <= 0) continue;
        const double delta = (a.slot - o.slot - static_cast<double>(shift) * plan.cycle) * plan.tau;
        // Overlap of [0, Ta] with [-delta, To - delta] in A's local time.
        if (std::max(0.0, -delta) >= std::min(a.duration(), o.duration() - delta)) continue;
        for (int i = 0; i < steps; ++i) {
          const int j_lo = std::max(0, static_cast<int>(std::floor((i * a.dt + delta) / o.dt)));
          const int j_hi =
              std::min(steps - 1, static_cast<int>(std::floor(((i + 1) * a.dt + delta) / o.dt)));
          for (int j = j_lo; j <= j_hi; ++j) {
            const WindowTerm w{ta, tb, shift, i, j};
            const detail::WindowGeometry g = detail::window_geometry(plan, w);
            if (!(g.hi > g.lo) || !(g.t_star > g.lo) || !(g.t_star < g.hi)) continue;
            const Point e = detail::sample_segment(a, i, g.t_star).position -
                            detail::sample_segment(o, j, g.t_star + delta).position;
            if (e.norm() < window_cutoff) set.exact.windows.push_back(w);
          }
        }
      }
    }
  }
  return set;
}

}  // namespace pmapp
