#pragma once

// Generators and reference implementations shared by the unit tests and the
// acceptance runner. The oracles deliberately avoid the library's own code
// paths: exact rationals for the pair predicate, relaxation on absolute
// times for the schedule, a Lindley recursion for the queue.

#include "pmapp/geometry.hpp"
#include "pmapp/plan.hpp"
#include "pmapp/seed_plan.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <tuple>
#include <vector>

namespace pmapp::testing {

using Rng = std::mt19937_64;
using Rational = boost::multiprecision::cpp_rational;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

// Square room [-size, size]^2 with `streams` random start/goal pairs.
inline Environment random_room(Rng& rng, int streams, double size = 10.0) {
  std::vector<Point> poly{{-size, -size}, {size, -size}, {size, size}, {-size, size}};
  std::vector<Endpoints> ends;
  while (static_cast<int>(ends.size()) < streams) {
    Endpoints e{Point(uniform(rng, -0.8 * size, 0.8 * size), uniform(rng, -0.8 * size, 0.8 * size)),
                Point(uniform(rng, -0.8 * size, 0.8 * size), uniform(rng, -0.8 * size, 0.8 * size))};
    bool distinct = (e.start - e.goal).norm() > 1.0;
    for (const auto& o : ends) {
      for (const Point& p : {o.start, o.goal}) {
        distinct = distinct && (p - e.start).norm() > 1e-3 && (p - e.goal).norm() > 1e-3;
      }
    }
    if (distinct) ends.push_back(e);
  }
  return Environment("room", std::move(poly), std::move(ends));
}

// Small random plan. With `dyadic` every time quantity is a multiple of 1/8,
// so the pair predicate often lands exactly on its boundaries.
inline PeriodicPlan random_plan(Rng& rng, int streams, int cycle, int steps, bool dyadic) {
  auto timing = [&](double lo, double hi) {
    const double v = uniform(rng, lo, hi);
    return dyadic ? std::max(0.125, std::round(v * 8.0) / 8.0) : v;
  };
  PeriodicPlan plan{random_room(rng, streams), cycle, timing(0.5, 3.0), 0.5, 0.5, 1.0, std::nullopt, {}};
  const bool shared_dt = dyadic && uniform_int(rng, 0, 1) == 0;
  const double common = timing(0.25, 1.5);
  for (int n = 0; n < streams; ++n) {
    for (int m = 0; m < cycle; ++m) {
      Trajectory tr{n, m, shared_dt ? common : timing(0.25, 1.5), {}};
      const auto& e = plan.env.endpoints()[n];
      for (int k = 0; k <= steps; ++k) {
        const double u = static_cast<double>(k) / steps;
        Point p = (1.0 - u) * e.start + u * e.goal;
        if (k > 0 && k < steps) p += Point(uniform(rng, -0.3, 0.3), uniform(rng, -0.3, 0.3));
        tr.points.push_back(p);
      }
      plan.trajectories.push_back(std::move(tr));
    }
  }
  return plan;
}

// Exact membership test for one index tuple, in rational arithmetic on the
// doubles stored in the plan.
inline bool pair_member_exact(const PeriodicPlan& plan, int n, int m, int k, int n2, int m2, int k2) {
  if (n == n2 && m == m2 && k == k2) return false;
  const Rational tau(plan.tau);
  const Rational dt(plan.at(n, m).dt);
  const Rational dt2(plan.at(n2, m2).dt);
  const Rational x = Rational(m - m2) * tau + Rational(k) * dt - Rational(k2) * dt2;
  const Rational q = Rational(plan.cycle) * tau;
  // floor(x / q) on rationals
  const Rational ratio = x / q;
  boost::multiprecision::cpp_int fl =
      boost::multiprecision::numerator(ratio) / boost::multiprecision::denominator(ratio);
  if (ratio < 0 && Rational(fl) != ratio) fl -= 1;
  const Rational res = x - Rational(fl) * q;
  return res >= 0 && res < dt2;
}

using PairKey = std::tuple<int, int, int, int, int, int>;

// Every tuple with k in [0, K) satisfying the predicate.
inline std::vector<PairKey> brute_force_pairs(const PeriodicPlan& plan) {
  std::vector<PairKey> out;
  const int steps = plan.steps();
  for (int n = 0; n < plan.streams(); ++n)
    for (int m = 0; m < plan.cycle; ++m)
      for (int k = 0; k < steps; ++k)
        for (int n2 = 0; n2 < plan.streams(); ++n2)
          for (int m2 = 0; m2 < plan.cycle; ++m2)
            for (int k2 = 0; k2 < steps; ++k2)
              if (pair_member_exact(plan, n, m, k, n2, m2, k2)) out.emplace_back(n, m, k, n2, m2, k2);
  return out;
}

// Random straight-line crossing instance for the ordering/DP stage.
struct CrossingInstance {
  std::vector<ReferencePath> paths;
  std::vector<PathIntersection> crossings;
};

inline CrossingInstance random_crossings(Rng& rng, int streams) {
  CrossingInstance inst;
  for (int n = 0; n < streams; ++n) {
    ReferencePath p;
    p.vertices = {Point(uniform(rng, -8, 8), uniform(rng, -8, 8)),
                  Point(uniform(rng, -8, 8), uniform(rng, -8, 8))};
    p.length = (p.vertices[1] - p.vertices[0]).norm();
    inst.paths.push_back(p);
  }
  inst.crossings = path_intersections(inst.paths);
  return inst;
}

// Longest-path times at fixed tau on absolute clock values: starts pinned at
// slot * tau, then leg and within-cycle edges relaxed to a fixed point.
// Returns nullopt when a wraparound constraint fails at those earliest times
// or the within-cycle edges contain a cycle.
inline std::optional<std::vector<std::vector<std::vector<double>>>> bellman_times(
    const PassOrder& order, double tau, double tol = 1e-9) {
  const int streams = static_cast<int>(order.events.size());
  const int cycle = order.cycle;
  std::vector<int> offset(streams + 1, 0);
  for (int n = 0; n < streams; ++n) offset[n + 1] = offset[n] + cycle * static_cast<int>(order.events[n].size());
  auto id = [&](const EventId& e) {
    return offset[e.stream] + e.slot * static_cast<int>(order.events[e.stream].size()) + e.index;
  };
  struct E {
    int u, v;
    double w;
  };
  std::vector<E> edges;
  for (int n = 0; n < streams; ++n) {
    const auto& ev = order.events[n];
    for (int m = 0; m < cycle; ++m) {
      for (size_t k = 0; k + 1 < ev.size(); ++k) {
        edges.push_back({id({n, m, static_cast<int>(k)}), id({n, m, static_cast<int>(k + 1)}),
                         ev[k].min_leg_time});
      }
    }
  }
  for (const auto& c : order.constraints) {
    if (c.kind == ConstraintKind::kWithinCycle) edges.push_back({id(c.from), id(c.to), c.slack});
  }
  const int count = offset[streams];
  const double ninf = -std::numeric_limits<double>::infinity();
  std::vector<double> t(count, ninf);
  for (int n = 0; n < streams; ++n)
    for (int m = 0; m < cycle; ++m) t[id({n, m, 0})] = m * tau;
  bool changed = true;
  for (int round = 0; round <= count && changed; ++round) {
    changed = false;
    for (const E& e : edges) {
      if (t[e.u] == ninf) continue;
      if (t[e.u] + e.w > t[e.v]) {
        t[e.v] = t[e.u] + e.w;
        changed = true;
      }
    }
  }
  if (changed) return std::nullopt;
  for (const auto& c : order.constraints) {
    if (c.kind != ConstraintKind::kWraparound) continue;
    // Agent of the last slot, then the first slot of the next cycle.
    if (t[id(c.from)] + c.slack > t[id(c.to)] + cycle * tau + tol) return std::nullopt;
  }
  std::vector<std::vector<std::vector<double>>> out(streams);
  for (int n = 0; n < streams; ++n) {
    const int events = static_cast<int>(order.events[n].size());
    out[n].assign(cycle, std::vector<double>(events));
    for (int m = 0; m < cycle; ++m) {
      if (t[id({n, m, 0})] > m * tau + tol) return std::nullopt;
      for (int k = 0; k < events; ++k) out[n][m][k] = t[id({n, m, k})] - m * tau;
    }
  }
  return out;
}

// G/D/1 queue: interarrival c + Exp(lambda), service tau. Returns the mean
// time from arrival to leaving service and its standard error from batch
// means (successive sojourns are strongly correlated near saturation).
struct LindleyStats {
  double mean;
  double stderr_;
};

inline LindleyStats lindley_sojourn(double lambda, double c, double tau, int arrivals,
                                    std::uint64_t seed, int batches = 50) {
  Rng rng(seed);
  std::exponential_distribution<double> gap(lambda);
  const int per_batch = arrivals / batches;
  std::vector<double> means(batches, 0.0);
  double wait = 0.0;
  for (int i = 0; i < per_batch * batches; ++i) {
    if (i > 0) wait = std::max(0.0, wait + tau - (c + gap(rng)));
    means[i / per_batch] += (wait + tau) / per_batch;
  }
  double mean = 0.0, var = 0.0;
  for (double m : means) mean += m / batches;
  for (double m : means) var += (m - mean) * (m - mean) / (batches - 1);
  return {mean, std::sqrt(var / batches)};
}

}  // namespace pmapp::testing
