#include "scenefit/types.hpp"

#include <cmath>
#include <string>

#include "scenefit/error.hpp"
#include "scenefit/so3.hpp"

namespace scenefit {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0))
    throw InputError("camera focal lengths must be positive, got fx=" + std::to_string(fx) +
                     " fy=" + std::to_string(fy));
  if (!(image_w > 0.0) || !(image_h > 0.0))
    throw InputError("camera image size must be positive");
  if (!(cx >= 0.0 && cx < image_w && cy >= 0.0 && cy < image_h))
    throw InputError("principal point (" + std::to_string(cx) + ", " + std::to_string(cy) +
                     ") outside image bounds");
}

KinematicState::KinematicState(const Eigen::Vector3d& tau_in, const Eigen::Vector3d& phi_in,
                               const Eigen::VectorXd& theta_in)
    : tau(tau_in), phi(phi_in), theta(theta_in) {
  if (!tau.allFinite() || !phi.allFinite() || !theta.allFinite())
    throw InputError("kinematic state contains non-finite values");
  if (theta.size() % 3 != 0)
    throw InputError("theta size " + std::to_string(theta.size()) + " is not a multiple of 3");
  phi = wrap_axis_angle(phi);
  for (Eigen::Index j = 0; j < theta.size(); j += 3)
    theta.segment<3>(j) = wrap_axis_angle(theta.segment<3>(j));
}

Eigen::VectorXd state_to_vector(const KinematicState& s) {
  Eigen::VectorXd x(s.dof());
  x.segment<3>(0) = s.tau;
  x.segment<3>(3) = s.phi;
  x.tail(s.theta.size()) = s.theta;
  return x;
}

KinematicState state_from_vector(const Eigen::VectorXd& x) {
  if (x.size() < 6) throw InputError("state vector must have at least 6 entries");
  return KinematicState(x.segment<3>(0), x.segment<3>(3), x.tail(x.size() - 6));
}

BodyScale::BodyScale(double value) {
  if (!std::isfinite(value)) throw InputError("body scale must be finite");
  h = std::min(kMax, std::max(kMin, value));
}

void Observation2D::validate(int joint_count) const {
  if (keypoints.rows() != joint_count || confidence.size() != joint_count)
    throw InputError("observation has " + std::to_string(keypoints.rows()) + " keypoints and " +
                     std::to_string(confidence.size()) + " confidences, expected " +
                     std::to_string(joint_count));
  if (!keypoints.allFinite()) throw InputError("observation keypoints contain non-finite values");
  if ((confidence.array() < 0.0).any() || (confidence.array() > 1.0).any())
    throw InputError("observation confidences must lie in [0, 1]");
}

void LossWeights::validate() const {
  for (double w : {lambda_2d, lambda_smooth, lambda_con, lambda_sli, lambda_data})
    if (!(w >= 0.0)) throw InputError("loss weights must be non-negative");
}

}  // namespace scenefit
