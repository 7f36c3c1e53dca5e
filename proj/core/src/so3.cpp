#include "scenefit/so3.hpp"

#include <cmath>

namespace scenefit {

Eigen::Matrix3d rotation_from_axis_angle(const Eigen::Vector3d& v) {
  const double a2 = v.squaredNorm();
  double c1, c2;  // sin(a)/a, (1-cos a)/a^2
  if (a2 < 1e-16) {
    c1 = 1.0 - a2 / 6.0;
    c2 = 0.5 - a2 / 24.0;
  } else {
    const double a = std::sqrt(a2);
    c1 = std::sin(a) / a;
    c2 = (1.0 - std::cos(a)) / a2;
  }
  Eigen::Matrix3d k;
  k << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return Eigen::Matrix3d::Identity() + c1 * k + c2 * (k * k);
}

Eigen::Vector3d wrap_axis_angle(const Eigen::Vector3d& v) {
  constexpr double two_pi = 2.0 * M_PI;
  const double a = v.norm();
  if (a <= M_PI) return v;
  double r = std::fmod(a, two_pi);
  if (r > M_PI) r -= two_pi;  // flips the axis
  return v * (r / a);
}

}  // namespace scenefit
