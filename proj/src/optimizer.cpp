#include "objective.hpp"

#include "pmapp/error.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace pmapp {

namespace {

constexpr double kMinDamping = 1e-15;
constexpr double kMaxDamping = 1e15;

int phase_of(const AnnealSchedule& s, int it) {
  if (it < s.phase1_iters) return 1;
  if (it < s.phase1_iters + s.phase2_iters) return 2;
  if (it < s.phase1_iters + s.phase2_iters + s.phase3_iters) return 3;
  return 4;
}

bool refresh_due(const AnnealSchedule& s, int it) {
  if (phase_of(s, it) != 2) return true;
  return (it - s.phase1_iters) % std::max(1, s.phase2_refresh_stride) == 0;
}

int count_active(const Eigen::VectorXd& residuals, int first, int count) {
  int active = 0;
  for (int i = first; i < first + count; ++i) active += residuals[i] != 0.0;
  return active;
}

}  // namespace

OptimizeResult lm_minimize(const PeriodicPlan& initial, const OptimizerConfig& config) {
  initial.check_invariants();
  const AnnealSchedule& sched = config.schedule;
  if (sched.phase1_iters < 0 || sched.phase2_iters < 0 || sched.phase3_iters < 0 ||
      sched.phase2_refresh_stride < 1 || sched.convergence_window < 1 ||
      !(sched.anneal_factor > 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "invalid annealing schedule");
  }

  PeriodicPlan plan = initial;
  if (!(plan.radius > 0.0)) plan.radius = config.initial_radius;
  const VariableLayout layout(plan);
  Eigen::VectorXd x = layout.pack(plan);

  OptimizeResult result{initial, 0.0, OptimizeStatus::kMaxIterations, {}, sched.initial, 0, 0};
  PenaltyWeights weights = sched.initial;
  double damping = config.initial_damping;
  ActiveSet active;
  // Residual rows before the collision block: period, K*T smoothness,
  // radius, K*T speed, (K+1)*T clearance.
  const int ntraj = static_cast<int>(plan.trajectories.size());
  const int pair_row0 = 2 + ntraj * (3 * plan.steps() + 1);

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  std::vector<double> costs;

  for (int it = 0; it < config.max_iterations; ++it) {
    const int phase = phase_of(sched, it);
    ObjectiveOptions options{config.inverse_floor,
                             config.exact_terms && phase >= config.exact_terms_from_phase};
    if (refresh_due(sched, it) ||
        (options.exact_terms && active.exact.corners.empty() && active.exact.windows.empty() &&
         phase == config.exact_terms_from_phase && it == 0)) {
      active = refresh_pairs(plan, options.exact_terms);
      ++result.refreshes;
    }

    detail::Evaluation eval;
    try {
      eval = detail::evaluate(plan, layout, weights, active, options, true);
    } catch (const Error& e) {
      throw Error(ErrorKind::kDiverged, e.what());
    }
    result.floor_events += eval.floor_events;
    if (eval.floor_events > 0 && config.log) {
      *config.log << "iteration " << it << ": " << eval.floor_events
                  << " distances floored at " << config.inverse_floor << "\n";
    }
    const double cost = eval.residuals.squaredNorm();
    if (!std::isfinite(cost)) throw Error(ErrorKind::kDiverged, "cost is not finite");

    Eigen::SparseMatrix<double> jac(eval.residuals.size(), layout.size());
    jac.setFromTriplets(eval.triplets.begin(), eval.triplets.end());
    const Eigen::SparseMatrix<double> jt = jac.transpose();
    Eigen::SparseMatrix<double> hessian = jt * jac;
    const Eigen::VectorXd gradient = jt * eval.residuals;
    Eigen::VectorXd diag = hessian.diagonal();
    for (Eigen::Index i = 0; i < diag.size(); ++i) {
      diag[i] = config.diagonal_scaling ? std::max(diag[i], 1e-12) : 1.0;
    }

    double new_cost = cost;
    bool accepted = false;
    if (gradient.lpNorm<Eigen::Infinity>() > 0.0) {
      for (int attempt = 0; attempt < config.max_damping_retries && !accepted; ++attempt) {
        Eigen::SparseMatrix<double> system = hessian;
        for (Eigen::Index i = 0; i < diag.size(); ++i) system.coeffRef(i, i) += damping * diag[i];
        solver.compute(system);
        Eigen::VectorXd step;
        if (solver.info() == Eigen::Success) step = solver.solve(-gradient);
        if (solver.info() != Eigen::Success || !step.allFinite()) {
          damping = std::min(damping * config.damping_factor, kMaxDamping);
          continue;
        }
        PeriodicPlan trial = plan;
        layout.unpack(x + step, trial);
        double trial_cost = std::numeric_limits<double>::infinity();
        // The hinges flip sign with r, so a step through r = 0 is rejected.
        if (trial.radius > 0.0) try {
          trial_cost = detail::evaluate(trial, layout, weights, active, options, false)
                           .residuals.squaredNorm();
        } catch (const Error&) {
        }
        if (std::isfinite(trial_cost) && trial_cost < cost) {
          plan = std::move(trial);
          x += step;
          new_cost = trial_cost;
          accepted = true;
          damping = std::max(damping / config.damping_factor, kMinDamping);
        } else {
          damping = std::min(damping * config.damping_factor, kMaxDamping);
        }
      }
    }

    const IterationRecord rec{it,
                              phase,
                              new_cost,
                              plan.tau,
                              plan.radius,
                              count_active(eval.residuals, pair_row0,
                                           static_cast<int>(active.pairs.size())),
                              accepted};
    result.trace.push_back(rec);
    if (config.on_iteration) config.on_iteration(rec);
    costs.push_back(new_cost);

    if (phase == 3) {
      weights.radius *= sched.anneal_factor;
      weights.velocity *= sched.anneal_factor;
      weights.obstacle *= sched.anneal_factor;
      weights.collision *= sched.anneal_factor;
      weights.time /= sched.anneal_factor;
    }
    if (phase == 4) {
      const int phase4_start = sched.phase1_iters + sched.phase2_iters + sched.phase3_iters;
      const int window = sched.convergence_window;
      if (it - phase4_start >= window &&
          std::abs(costs[it] - costs[it - window]) < sched.convergence_eps) {
        result.status = OptimizeStatus::kConverged;
        break;
      }
    }
  }

  result.optimized_radius = plan.radius;
  result.final_weights = weights;
  plan.radius = plan.target_radius;
  result.plan = std::move(plan);
  return result;
}

std::string trace_csv(const std::vector<IterationRecord>& trace) {
  std::ostringstream out;
  out.precision(17);
  out << "iteration,cost,tau,r,active_pairs\n";
  for (const auto& rec : trace) {
    out << rec.iteration << "," << rec.cost << "," << rec.tau << "," << rec.radius << ","
        << rec.active_pairs << "\n";
  }
  return out.str();
}

}  // namespace pmapp
