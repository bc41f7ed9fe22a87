#pragma once

#include "pmapp/optimizer.hpp"

#include <Eigen/SparseCore>

#include <vector>

namespace pmapp::detail {

struct Evaluation {
  Eigen::VectorXd residuals;
  std::vector<Eigen::Triplet<double>> triplets;
  int floor_events = 0;
};

Evaluation evaluate(const PeriodicPlan& plan, const VariableLayout& layout,
                    const PenaltyWeights& weights, const ActiveSet& active,
                    const ObjectiveOptions& options, bool with_jacobian);

}  // namespace pmapp::detail
