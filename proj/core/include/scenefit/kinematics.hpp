#pragma once

#include <vector>

#include <Eigen/Core>

#include "scenefit/skeleton.hpp"
#include "scenefit/types.hpp"

namespace scenefit {

class SceneIndex;

/// Posed body: world joint positions (rows) and global joint rotations.
struct BodyPose {
  MatrixX3d joints;
  std::vector<Eigen::Matrix3d> rotations;
};

/// Forward kinematics. The root joint sits at `state.tau` with orientation
/// R(phi)*R(theta_0); every child k adds the scaled rest offset rotated by the
/// parent's global rotation: p_k = p_par + G_par * (h * offset_k),
/// G_k = G_par * R(theta_k). Smooth in all inputs.
BodyPose compute_pose(const SkeletonTemplate& tmpl, const KinematicState& state, double h);

/// Same body posed with tau = 0, h = 1. Because FK is affine in (tau, h) at
/// fixed angles, any posed point equals tau + h * (its unit-pose position).
BodyPose compute_unit_pose(const SkeletonTemplate& tmpl, const KinematicState& state);

/// World positions of all template surface points for a posed body.
MatrixX3d body_surface(const SkeletonTemplate& tmpl, const BodyPose& pose, double h);

/// World positions for a subset of surface point indices, in the given order.
MatrixX3d body_surface_subset(const SkeletonTemplate& tmpl, const BodyPose& pose, double h,
                              const std::vector<int>& indices);

/// Pinhole projection to pixel coordinates. Throws PointBehindCamera at the
/// first row with z <= z_min.
MatrixX2d project(const MatrixX3d& points, const CameraIntrinsics& cam,
                  double z_min = kDefaultZMin);

/// Number of scene points strictly inside any body capsule (each point counted
/// at most once). Capsule b spans joint b's parent to joint b with radius
/// h * capsule_radius.
int inside_body_count(const SkeletonTemplate& tmpl, const BodyPose& pose, double h,
                      const MatrixX3d& points);

/// Accelerated variant: prunes with a body bounding sphere and the scene's
/// spatial index before exact capsule tests. Result matches the brute force.
int inside_body_count(const SkeletonTemplate& tmpl, const BodyPose& pose, double h,
                      const SceneIndex& index);

/// Squared distance from point p to segment [a, b].
double point_segment_sq_dist(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                             const Eigen::Vector3d& b);

}  // namespace scenefit
