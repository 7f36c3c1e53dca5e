#pragma once

#include <Eigen/Core>

namespace scenefit {

/// Rodrigues rotation from an axis-angle vector. Uses the series expansion of
/// sin(a)/a and (1-cos a)/a^2 below 1e-8 so the map stays smooth at zero,
/// which matters for finite-difference probes of the kinematics.
Eigen::Matrix3d rotation_from_axis_angle(const Eigen::Vector3d& v);

/// Wraps an axis-angle vector to magnitude <= pi (same rotation, canonical
/// representative).
Eigen::Vector3d wrap_axis_angle(const Eigen::Vector3d& v);

}  // namespace scenefit
