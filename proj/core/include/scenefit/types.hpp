#pragma once

#include <Eigen/Core>

namespace scenefit {

using MatrixX3d = Eigen::Matrix<double, Eigen::Dynamic, 3>;
using MatrixX2d = Eigen::Matrix<double, Eigen::Dynamic, 2>;

/// Near-plane guard for perspective projection.
inline constexpr double kDefaultZMin = 0.05;

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  double image_w = 0.0;  // pixels
  double image_h = 0.0;

  /// Throws InputError unless fx,fy > 0 and the principal point lies inside
  /// the image bounds.
  void validate() const;
};

/// Per-frame kinematic state: root translation tau (meters, camera frame),
/// root orientation phi and relative joint rotations theta, all axis-angle in
/// radians. Axis-angle blocks are wrapped to magnitude <= pi on construction.
struct KinematicState {
  Eigen::Vector3d tau = Eigen::Vector3d::Zero();
  Eigen::Vector3d phi = Eigen::Vector3d::Zero();
  Eigen::VectorXd theta;  // 3K entries, joint-major

  KinematicState() = default;
  KinematicState(const Eigen::Vector3d& tau_in, const Eigen::Vector3d& phi_in,
                 const Eigen::VectorXd& theta_in);

  int dof() const { return 6 + static_cast<int>(theta.size()); }
};

/// Flattened (tau, phi, theta) view used by the optimizer and the data loss.
Eigen::VectorXd state_to_vector(const KinematicState& s);
KinematicState state_from_vector(const Eigen::VectorXd& x);

/// Scalar multiplier on template bone lengths and capsule radii. Values are
/// clamped into [0.5, 2.0] on construction.
struct BodyScale {
  static constexpr double kMin = 0.5;
  static constexpr double kMax = 2.0;

  double h = 1.0;

  BodyScale() = default;
  explicit BodyScale(double value);
};

/// One frame of simulated 2D detections: pixel keypoints plus confidences.
struct Observation2D {
  MatrixX2d keypoints;         // K x 2, pixels
  Eigen::VectorXd confidence;  // K entries in [0, 1]

  void validate(int joint_count) const;
};

struct LossWeights {
  double lambda_2d = 1.0;
  double lambda_smooth = 0.01;
  double lambda_con = 0.01;
  double lambda_sli = 0.05;
  double lambda_data = 0.1;

  void validate() const;  // all non-negative
};

}  // namespace scenefit
