#include "scenefit/kinematics.hpp"

#include <cmath>
#include <string>

#include "scenefit/error.hpp"
#include "scenefit/scene.hpp"
#include "scenefit/so3.hpp"

namespace scenefit {

BodyPose compute_pose(const SkeletonTemplate& tmpl, const KinematicState& state, double h) {
  const int k = tmpl.joint_count();
  if (state.theta.size() != 3 * k)
    throw InputError("state has " + std::to_string(state.theta.size() / 3) +
                     " joint angles, template has " + std::to_string(k) + " joints");
  if (!std::isfinite(h) || h <= 0.0)
    throw InputError("body scale must be positive and finite, got " + std::to_string(h));

  BodyPose pose;
  pose.joints.resize(k, 3);
  pose.rotations.resize(k);
  pose.joints.row(0) = state.tau;
  pose.rotations[0] =
      rotation_from_axis_angle(state.phi) * rotation_from_axis_angle(state.theta.head<3>());
  for (int i = 1; i < k; ++i) {
    const Joint& j = tmpl.joints()[i];
    const Eigen::Matrix3d& g_par = pose.rotations[j.parent];
    pose.joints.row(i) = pose.joints.row(j.parent) + (g_par * (h * j.offset)).transpose();
    pose.rotations[i] = g_par * rotation_from_axis_angle(state.theta.segment<3>(3 * i));
  }
  return pose;
}

BodyPose compute_unit_pose(const SkeletonTemplate& tmpl, const KinematicState& state) {
  KinematicState unit = state;
  unit.tau.setZero();
  return compute_pose(tmpl, unit, 1.0);
}

MatrixX3d body_surface(const SkeletonTemplate& tmpl, const BodyPose& pose, double h) {
  const int n = tmpl.surface_count();
  MatrixX3d out(n, 3);
  for (int i = 0; i < n; ++i) {
    const int par = tmpl.surface_parent(i);
    out.row(i) =
        pose.joints.row(par) + (pose.rotations[par] * (h * tmpl.surface_local(i))).transpose();
  }
  return out;
}

MatrixX3d body_surface_subset(const SkeletonTemplate& tmpl, const BodyPose& pose, double h,
                              const std::vector<int>& indices) {
  MatrixX3d out(static_cast<Eigen::Index>(indices.size()), 3);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const int i = indices[r];
    if (i < 0 || i >= tmpl.surface_count())
      throw InputError("surface index " + std::to_string(i) + " out of range [0, " +
                       std::to_string(tmpl.surface_count()) + ")");
    const int par = tmpl.surface_parent(i);
    out.row(static_cast<Eigen::Index>(r)) =
        pose.joints.row(par) + (pose.rotations[par] * (h * tmpl.surface_local(i))).transpose();
  }
  return out;
}

MatrixX2d project(const MatrixX3d& points, const CameraIntrinsics& cam, double z_min) {
  cam.validate();
  MatrixX2d out(points.rows(), 2);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const double z = points(i, 2);
    if (!(z > z_min)) throw PointBehindCamera(static_cast<std::size_t>(i), z, z_min);
    out(i, 0) = cam.fx * points(i, 0) / z + cam.cx;
    out(i, 1) = cam.fy * points(i, 1) / z + cam.cy;
  }
  return out;
}

double point_segment_sq_dist(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                             const Eigen::Vector3d& b) {
  const Eigen::Vector3d ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::min(1.0, std::max(0.0, t));
  return (p - (a + t * ab)).squaredNorm();
}

namespace {

bool point_inside_body(const SkeletonTemplate& tmpl, const BodyPose& pose, double h,
                       const Eigen::Vector3d& p) {
  for (int b = 1; b < tmpl.joint_count(); ++b) {
    const Joint& j = tmpl.joints()[b];
    const double r = h * j.capsule_radius;
    const double d2 =
        point_segment_sq_dist(p, pose.joints.row(j.parent).transpose(), pose.joints.row(b).transpose());
    if (d2 < r * r) return true;
  }
  return false;
}

}  // namespace

int inside_body_count(const SkeletonTemplate& tmpl, const BodyPose& pose, double h,
                      const MatrixX3d& points) {
  int count = 0;
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    if (point_inside_body(tmpl, pose, h, points.row(i).transpose())) ++count;
  return count;
}

int inside_body_count(const SkeletonTemplate& tmpl, const BodyPose& pose, double h,
                      const SceneIndex& index) {
  // Bounding sphere around the joint centroid covering every capsule.
  const Eigen::Vector3d center = pose.joints.colwise().mean().transpose();
  double radius = 0.0;
  for (int b = 1; b < tmpl.joint_count(); ++b) {
    const Joint& j = tmpl.joints()[b];
    const double reach =
        std::max((pose.joints.row(b).transpose() - center).norm(),
                 (pose.joints.row(j.parent).transpose() - center).norm()) +
        h * j.capsule_radius;
    radius = std::max(radius, reach);
  }
  const std::vector<int>& candidates = index.query_radius(center, radius);
  int count = 0;
  for (int i : candidates)
    if (point_inside_body(tmpl, pose, h, index.points().row(i).transpose())) ++count;
  return count;
}

}  // namespace scenefit
