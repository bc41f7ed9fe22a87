#pragma once

#include "pmapp/plan.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace pmapp {

/// Weights of the penalty objective: smoothness (time), radius, speed,
/// boundary clearance (obstacle) and pairwise collision.
struct PenaltyWeights {
  double time = 1.0;
  double radius = 1e4;
  double velocity = 1e4;
  double obstacle = 1e4;
  double collision = 1e4;
};

/// Four phases: plain LM with the pair set refreshed every iteration, a long
/// phase refreshing every `phase2_refresh_stride` iterations, an annealing
/// phase that scales the hard-constraint weights up and the smoothness weight
/// down by `anneal_factor` per iteration, and a final phase that runs until
/// the cost changes by less than `convergence_eps` over `convergence_window`
/// iterations.
struct AnnealSchedule {
  int phase1_iters = 500;
  int phase2_iters = 39500;
  int phase2_refresh_stride = 10;
  int phase3_iters = 1000;
  double anneal_factor = 1.01;
  int convergence_window = 100;
  double convergence_eps = 1e-6;
  PenaltyWeights initial;
};

/// Segment k of trajectory `traj` passing a reflex corner of the boundary.
struct CornerTerm {
  int traj;
  int segment;
  Point vertex;
};

/// Segment `seg_a` of copy A against segment `seg_b` of copy B, where copy B
/// is shifted by `shift` cycles. Evaluated at the closest approach inside
/// the common time window.
struct WindowTerm {
  int traj_a;
  int traj_b;
  int shift;
  int seg_a;
  int seg_b;
};

/// Continuous-time supplements to the waypoint terms: the sampled terms alone
/// leave gaps between waypoints where a segment may cut a corner or two
/// agents may pass closer than at any sample.
struct ExactTerms {
  CollisionPairSet arrivals;  // see arrival_pairs
  std::vector<CornerTerm> corners;
  std::vector<WindowTerm> windows;
};

/// Everything the objective holds fixed between refreshes.
struct ActiveSet {
  CollisionPairSet pairs;
  ExactTerms exact;
};

struct ObjectiveOptions {
  double inverse_floor = 1e-9;
  bool exact_terms = false;
};

/// Decision vector: interior waypoints (x, y) per trajectory, log dt per
/// trajectory, log tau, r.
class VariableLayout {
 public:
  explicit VariableLayout(const PeriodicPlan& plan);

  int size() const { return size_; }
  int point(int traj, int k) const;  // -1 for fixed endpoints
  int log_dt(int traj) const { return dt_offset_ + traj; }
  int log_tau() const { return dt_offset_ + trajectories_; }
  int radius() const { return log_tau() + 1; }

  Eigen::VectorXd pack(const PeriodicPlan& plan) const;
  /// Writes the vector back; plan.radius receives r.
  void unpack(const Eigen::VectorXd& x, PeriodicPlan& plan) const;

 private:
  int trajectories_;
  int steps_;
  int dt_offset_;
  int size_;
};

/// Residuals whose squared sum is the penalty objective. The current
/// optimized radius is plan.radius; plan.target_radius is r0.
Eigen::VectorXd residual_vector(const PeriodicPlan& plan, const PenaltyWeights& weights,
                                const ActiveSet& active, const ObjectiveOptions& options = {});

Eigen::SparseMatrix<double> jacobian(const PeriodicPlan& plan, const PenaltyWeights& weights,
                                     const ActiveSet& active, const ObjectiveOptions& options = {});

/// Recomputes the pair set and, if requested, the continuous supplements.
ActiveSet refresh_pairs(const PeriodicPlan& plan, bool exact_terms = false);

struct IterationRecord {
  int iteration;
  int phase;
  double cost;
  double tau;
  double radius;
  int active_pairs;
  bool accepted;
};

struct OptimizerConfig {
  AnnealSchedule schedule;
  int max_iterations = 50000;
  double initial_damping = 1e-3;
  double damping_factor = 10.0;
  int max_damping_retries = 10;
  // Damp with lambda * diag(J^T J) instead of lambda * I. The radius column
  // is then damped about sigma_r times harder than log tau, and tau runs
  // ahead of r.
  bool diagonal_scaling = false;
  double initial_radius = 1e-3;
  double inverse_floor = 1e-9;
  bool exact_terms = true;
  int exact_terms_from_phase = 2;
  std::ostream* log = nullptr;
  std::function<void(const IterationRecord&)> on_iteration;
};

enum class OptimizeStatus { kConverged, kMaxIterations };

struct OptimizeResult {
  PeriodicPlan plan;  // radius reset to the target radius
  double optimized_radius = 0.0;
  OptimizeStatus status = OptimizeStatus::kMaxIterations;
  std::vector<IterationRecord> trace;
  PenaltyWeights final_weights;
  int refreshes = 0;
  int floor_events = 0;
};

/// Levenberg-Marquardt over the annealing schedule. Throws diverged if the
/// cost becomes nonfinite.
OptimizeResult lm_minimize(const PeriodicPlan& initial, const OptimizerConfig& config = {});

std::string trace_csv(const std::vector<IterationRecord>& trace);

}  // namespace pmapp
