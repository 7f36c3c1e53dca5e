#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "scenefit/descent.hpp"
#include "scenefit/error.hpp"

using namespace scenefit;

namespace {

/// f(x) = |x - c|^2 with analytic gradient.
Objective bowl(const Eigen::VectorXd& center) {
  return [center](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    if (grad) *grad = 2.0 * (x - center);
    return (x - center).squaredNorm();
  };
}

}  // namespace

TEST_SUITE("descent") {

TEST_CASE("a quadratic bowl is minimized to its center") {
  Eigen::VectorXd center(3);
  center << 1.0, -2.0, 0.5;
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(3);
  DescentOptions opt;
  opt.learning_rate = 0.25;
  opt.max_iterations = 200;
  const DescentResult res = minimize(bowl(center), x0, opt);
  CHECK(res.converged);
  CHECK((res.x - center).norm() < 1e-3);
  CHECK(res.value < 1e-6);
  CHECK(res.iterations <= 200);
}

TEST_CASE("backtracking handles an oversized starting step") {
  Eigen::VectorXd center = Eigen::VectorXd::Constant(2, 3.0);
  DescentOptions opt;
  opt.learning_rate = 100.0;  // a full step at this rate overshoots wildly
  opt.max_iterations = 300;
  const DescentResult res = minimize(bowl(center), Eigen::VectorXd::Zero(2), opt);
  CHECK((res.x - center).norm() < 1e-3);
}

TEST_CASE("the rosenbrock valley is descended to the global minimum") {
  const auto rosenbrock = [](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    if (grad) {
      (*grad)[0] = -2.0 * a - 400.0 * x[0] * b;
      (*grad)[1] = 200.0 * b;
    }
    return a * a + 100.0 * b * b;
  };
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  DescentOptions opt;
  opt.learning_rate = 0.05;
  opt.max_iterations = 20000;
  opt.tolerance = 1e-14;
  const DescentResult res = minimize(rosenbrock, x0, opt);
  CHECK(res.value < 1e-5);
  CHECK((res.x - Eigen::VectorXd::Ones(2)).norm() < 5e-3);
}

TEST_CASE("a projection pins iterates to the feasible set") {
  // Minimize (x - 0)^2 subject to x >= 1: the answer is the boundary.
  const auto clamp = [](Eigen::VectorXd& x) { x[0] = std::max(x[0], 1.0); };
  DescentOptions opt;
  opt.learning_rate = 0.3;
  const DescentResult res =
      minimize(bowl(Eigen::VectorXd::Zero(1)), Eigen::VectorXd::Constant(1, 4.0), opt, clamp);
  CHECK(res.x[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(res.value == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("an infeasible starting point is an error") {
  const auto gated = [](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    if (x[0] < 0.0) return std::numeric_limits<double>::infinity();
    if (grad) *grad = 2.0 * x;
    return x.squaredNorm();
  };
  CHECK_THROWS_AS(minimize(gated, Eigen::VectorXd::Constant(1, -1.0), DescentOptions{}), Error);
}

TEST_CASE("an infinite wall is never crossed") {
  // Feasible region x >= 0.5; the unconstrained minimum at 0 is behind the
  // wall, so descent must stall at a feasible point.
  const auto walled = [](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    if (x[0] < 0.5) return std::numeric_limits<double>::infinity();
    if (grad) *grad = 2.0 * x;
    return x.squaredNorm();
  };
  DescentOptions opt;
  opt.learning_rate = 1.0;
  opt.max_iterations = 200;
  const DescentResult res = minimize(walled, Eigen::VectorXd::Constant(1, 2.0), opt);
  CHECK(res.x[0] >= 0.5);
  CHECK(res.x[0] < 0.75);  // got close to the wall
}

TEST_CASE("a NaN objective value is an error") {
  const auto nan_at_step = [](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    if (x[0] < 0.9) return std::numeric_limits<double>::quiet_NaN();
    if (grad) *grad = 2.0 * x;
    return x.squaredNorm();
  };
  DescentOptions opt;
  opt.learning_rate = 10.0;
  CHECK_THROWS_AS(minimize(nan_at_step, Eigen::VectorXd::Ones(1), opt), Error);
}

TEST_CASE("accepted values decrease monotonically") {
  std::vector<double> accepted;
  const Eigen::VectorXd center = Eigen::VectorXd::Constant(4, 2.0);
  const auto recording = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    const double v = (x - center).squaredNorm();
    if (grad) {
      *grad = 2.0 * (x - center);
      accepted.push_back(v);  // gradient evaluations happen at accepted points
    }
    return v;
  };
  DescentOptions opt;
  opt.learning_rate = 0.4;
  opt.max_iterations = 50;
  minimize(recording, Eigen::VectorXd::Zero(4), opt);
  REQUIRE(accepted.size() > 2);
  for (std::size_t i = 1; i < accepted.size(); ++i) CHECK(accepted[i] <= accepted[i - 1]);
}

TEST_CASE("tolerance stops iteration early") {
  DescentOptions strict;
  strict.tolerance = 1e-2;  // coarse: quit as soon as progress slows
  strict.learning_rate = 0.25;
  strict.max_iterations = 1000;
  const DescentResult coarse =
      minimize(bowl(Eigen::VectorXd::Ones(2)), Eigen::VectorXd::Zero(2), strict);
  DescentOptions fine = strict;
  fine.tolerance = 1e-12;
  const DescentResult exact =
      minimize(bowl(Eigen::VectorXd::Ones(2)), Eigen::VectorXd::Zero(2), fine);
  CHECK(coarse.converged);
  CHECK(coarse.iterations < exact.iterations);
  CHECK(exact.value <= coarse.value);
}

}  // TEST_SUITE
