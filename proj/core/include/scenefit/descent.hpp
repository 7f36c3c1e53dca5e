#pragma once

#include <functional>

#include <Eigen/Core>

namespace scenefit {

struct DescentOptions {
  double learning_rate = 1e-2;  // starting step, shrunk by backtracking
  int max_iterations = 500;
  double tolerance = 1e-7;  // relative decrease per accepted step
  int max_backtracks = 40;
};

struct DescentResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Objective callback: returns the value at x; fills *grad when non-null.
/// May return +infinity to mark x infeasible; must never return NaN.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>;

/// Optional feasible-set projection applied to every candidate point.
using Projection = std::function<void(Eigen::VectorXd&)>;

/// Projected gradient descent with backtracking: each iteration starts from
/// `learning_rate` and halves the step until the objective decreases (an
/// infinite candidate value counts as an increase). Stops when the relative
/// decrease drops below `tolerance` or no decreasing step exists. Throws
/// Error (with the iteration index) on NaN or on an infeasible start.
DescentResult minimize(const Objective& objective, Eigen::VectorXd x0,
                       const DescentOptions& options, const Projection& projection = nullptr);

}  // namespace scenefit
