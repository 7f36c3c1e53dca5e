#include "scenefit/descent.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "scenefit/error.hpp"

namespace scenefit {

namespace {

void check_not_nan(double v, int iteration, const char* where) {
  if (std::isnan(v))
    throw Error("descent: NaN objective value at iteration " + std::to_string(iteration) + " (" +
                where + ")");
}

}  // namespace

DescentResult minimize(const Objective& objective, Eigen::VectorXd x0,
                       const DescentOptions& options, const Projection& projection) {
  if (!(options.learning_rate > 0.0) || options.max_iterations < 0 ||
      !(options.tolerance >= 0.0) || options.max_backtracks < 1)
    throw InputError("descent: invalid options");
  if (projection) projection(x0);

  DescentResult res;
  res.x = std::move(x0);
  Eigen::VectorXd grad(res.x.size());
  res.value = objective(res.x, &grad);
  check_not_nan(res.value, 0, "start");
  if (!std::isfinite(res.value)) throw Error("descent: infeasible starting point");

  for (int it = 0; it < options.max_iterations; ++it) {
    if (!grad.allFinite())
      throw Error("descent: non-finite gradient at iteration " + std::to_string(it));
    double step = options.learning_rate;
    bool accepted = false;
    Eigen::VectorXd candidate;
    double cand_value = 0.0;
    for (int bt = 0; bt < options.max_backtracks; ++bt) {
      candidate = res.x - step * grad;
      if (projection) projection(candidate);
      cand_value = objective(candidate, nullptr);
      check_not_nan(cand_value, it, "backtracking probe");
      if (cand_value < res.value) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {  // no descending step at any scale: treat as converged
      res.converged = true;
      res.iterations = it;
      return res;
    }
    const double drop = res.value - cand_value;
    res.x = std::move(candidate);
    res.value = objective(res.x, &grad);  // re-evaluate for the fresh gradient
    check_not_nan(res.value, it, "accepted step");
    res.iterations = it + 1;
    if (drop <= options.tolerance * std::max(1.0, std::abs(res.value))) {
      res.converged = true;
      return res;
    }
  }
  return res;
}

}  // namespace scenefit
