#include "pmapp/error.hpp"
#include "pmapp/optimizer.hpp"
#include "pmapp/seed_plan.hpp"
#include "support.hpp"

#include <doctest.h>

#include <sstream>

using namespace pmapp;
using namespace pmapp::testing;

namespace {

PeriodicPlan perturbed_seed(Rng& rng, char env, int cycle, int steps) {
  SeedOptions opts;
  opts.cycle = cycle;
  opts.steps = steps;
  PeriodicPlan plan = generate_seed_plan(builtin_environment(env), opts).plan;
  for (auto& tr : plan.trajectories) {
    for (int k = 1; k < tr.steps(); ++k) tr.points[k] += Point(uniform(rng, -0.2, 0.2), uniform(rng, -0.2, 0.2));
    tr.dt *= uniform(rng, 0.6, 1.0);
  }
  plan.tau *= uniform(rng, 0.3, 0.8);
  plan.radius = uniform(rng, 0.2, 0.5);
  return plan;
}

}  // namespace

TEST_CASE("layout pack and unpack are inverse") {
  Rng rng(31);
  PeriodicPlan plan = perturbed_seed(rng, 'b', 2, 6);
  const VariableLayout layout(plan);
  CHECK(layout.size() == 2 * 6 * 5 + 6 + 2);
  const Eigen::VectorXd x = layout.pack(plan);
  PeriodicPlan copy = plan;
  for (auto& tr : copy.trajectories) tr.dt = 1;
  copy.tau = 1;
  layout.unpack(x, copy);
  CHECK(copy.tau == doctest::Approx(plan.tau).epsilon(1e-14));
  for (size_t t = 0; t < plan.trajectories.size(); ++t) {
    CHECK(copy.trajectories[t].dt == doctest::Approx(plan.trajectories[t].dt).epsilon(1e-14));
    CHECK(copy.trajectories[t].points == plan.trajectories[t].points);
  }
  CHECK(layout.point(0, 0) == -1);
  CHECK(layout.point(0, 6) == -1);
}

TEST_CASE("residual rows add up to the penalty objective") {
  Rng rng(32);
  for (int trial = 0; trial < 5; ++trial) {
    PeriodicPlan plan = perturbed_seed(rng, "acf"[trial % 3], 1 + trial % 2, 8);
    PenaltyWeights w{0.7, 3e3, 2e3, 5e2, 4e2};
    const ActiveSet active = refresh_pairs(plan);
    const Eigen::VectorXd res = residual_vector(plan, w, active);
    const double r = plan.radius, K = plan.steps();

    double v = std::pow(plan.tau - 2 * r / plan.v_max, 2) + w.radius * std::pow(r - plan.target_radius, 2);
    for (const auto& tr : plan.trajectories) {
      for (int k = 0; k < tr.steps(); ++k) {
        const double speed = (tr.points[k + 1] - tr.points[k]).norm() / tr.dt;
        v += w.time / K * speed * speed;
        v += w.velocity / K * std::pow(std::max(0.0, speed - plan.v_max), 2);
      }
      for (int k = 0; k <= tr.steps(); ++k) {
        v += w.obstacle / K * std::pow(std::max(0.0, 1 / distance_to_boundary(plan.env, tr.points[k]) - 1 / r), 2);
      }
    }
    for (const auto& p : collision_pairs(plan)) {
      const Trajectory& b = plan.at(p.stream2, p.slot2);
      const Point q = b.points[p.k2] + p.alpha * (b.points[p.k2 + 1] - b.points[p.k2]);
      const double d = (plan.at(p.stream, p.slot).points[p.k] - q).norm();
      v += w.collision / K * std::pow(std::max(0.0, 1 / d - 1 / (2 * r)), 2);
    }
    CHECK(res.squaredNorm() == doctest::Approx(v).epsilon(1e-10));
  }
}

TEST_CASE("analytic jacobian matches central differences") {
  Rng rng(33);
  const double h = 1e-6;
  for (int trial = 0; trial < 6; ++trial) {
    const PeriodicPlan plan = perturbed_seed(rng, "af"[trial % 2], 1 + trial % 2, 6);
    const PenaltyWeights w;
    const ActiveSet active = refresh_pairs(plan, true);
    const ObjectiveOptions opts{1e-9, true};
    const VariableLayout layout(plan);
    const Eigen::MatrixXd jac = Eigen::MatrixXd(jacobian(plan, w, active, opts));
    const Eigen::VectorXd x = layout.pack(plan);
    const Eigen::VectorXd f0 = residual_vector(plan, w, active, opts);
    int compared = 0;
    for (int c = 0; c < layout.size(); ++c) {
      PeriodicPlan p = plan;
      Eigen::VectorXd xp = x, xm = x;
      xp[c] += h;
      xm[c] -= h;
      layout.unpack(xp, p);
      const Eigen::VectorXd fp = residual_vector(p, w, active, opts);
      layout.unpack(xm, p);
      const Eigen::VectorXd fm = residual_vector(p, w, active, opts);
      for (int r = 0; r < f0.size(); ++r) {
        // Skip entries whose stencil crosses a hinge or a kink.
        if ((fp[r] == 0.0) != (f0[r] == 0.0) || (fm[r] == 0.0) != (f0[r] == 0.0)) continue;
        const double fd = (fp[r] - fm[r]) / (2 * h);
        const double fwd = (fp[r] - f0[r]) / h, bwd = (f0[r] - fm[r]) / h;
        const double scale = std::max({1.0, std::abs(fd), std::abs(jac(r, c))});
        if (std::abs(fwd - bwd) > 1e-3 * scale) continue;
        CHECK_MESSAGE(std::abs(fd - jac(r, c)) / scale < 1e-5, "row " << r << " col " << c);
        ++compared;
      }
    }
    CHECK(compared > 100);
  }
}

TEST_CASE("inverse floor continues linearly instead of blowing up") {
  Rng rng(34);
  PeriodicPlan plan = perturbed_seed(rng, 'a', 1, 4);
  plan.trajectories[0].points[1] = plan.env.reflex_vertices()[0];
  const ActiveSet active = refresh_pairs(plan);
  const Eigen::VectorXd res = residual_vector(plan, PenaltyWeights{}, active, {1e-3, false});
  CHECK(res.allFinite());
  // d = 0 sits one floor below the floor: 1/f + f/f^2 = 2/f.
  const double w = std::sqrt(PenaltyWeights{}.obstacle / plan.steps());
  CHECK(res.maxCoeff() == doctest::Approx(w * (2e3 - 1 / plan.radius)));
}

TEST_CASE("short run lowers the cost and the period") {
  SeedOptions opts;
  opts.steps = 12;
  const PeriodicPlan seed = generate_seed_plan(builtin_environment('a'), opts).plan;
  OptimizerConfig cfg;
  cfg.schedule.phase1_iters = 50;
  cfg.schedule.phase2_iters = 300;
  cfg.schedule.phase3_iters = 50;
  cfg.max_iterations = 500;
  int calls = 0;
  cfg.on_iteration = [&](const IterationRecord&) { ++calls; };
  const OptimizeResult res = lm_minimize(seed, cfg);
  REQUIRE(res.trace.size() >= 2);
  CHECK(res.trace.back().cost < res.trace.front().cost);
  CHECK(res.trace.back().radius > res.trace.front().radius);
  CHECK(res.plan.radius == seed.target_radius);
  CHECK(res.optimized_radius > 0.3);
  CHECK(calls == static_cast<int>(res.trace.size()));
  const std::string csv = trace_csv(res.trace);
  CHECK(csv.rfind("iteration,cost,tau,r,active_pairs", 0) == 0);
}

TEST_CASE("optimizer is deterministic") {
  SeedOptions opts;
  opts.steps = 8;
  opts.cycle = 2;
  const PeriodicPlan seed = generate_seed_plan(builtin_environment('a'), opts).plan;
  OptimizerConfig cfg;
  cfg.schedule.phase1_iters = 20;
  cfg.schedule.phase2_iters = 60;
  cfg.schedule.phase3_iters = 20;
  cfg.max_iterations = 150;
  const auto a = lm_minimize(seed, cfg);
  const auto b = lm_minimize(seed, cfg);
  CHECK(trace_csv(a.trace) == trace_csv(b.trace));
  CHECK(a.plan.tau == b.plan.tau);
}

TEST_CASE("iteration cap of one reports max-iterations") {
  SeedOptions opts;
  opts.steps = 6;
  const PeriodicPlan seed = generate_seed_plan(builtin_environment('a'), opts).plan;
  OptimizerConfig cfg;
  cfg.max_iterations = 1;
  CHECK(lm_minimize(seed, cfg).status == OptimizeStatus::kMaxIterations);
}

TEST_CASE("invalid schedule is rejected") {
  SeedOptions opts;
  opts.steps = 6;
  const PeriodicPlan seed = generate_seed_plan(builtin_environment('a'), opts).plan;
  OptimizerConfig cfg;
  cfg.schedule.anneal_factor = 1.0;
  CHECK_THROWS_AS(lm_minimize(seed, cfg), Error);
}
