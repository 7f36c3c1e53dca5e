#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "scenefit/rng.hpp"
#include "scenefit/skeleton.hpp"

namespace scenefit {

/// Linear latent pose space fitted by PCA: orthonormal basis columns plus
/// per-dimension scales (corpus standard deviations). Decode is exactly
/// smooth and 1-Lipschitz up to the largest scale.
class PoseManifold {
public:
  PoseManifold() = default;
  PoseManifold(Eigen::VectorXd mean, Eigen::MatrixXd basis, Eigen::VectorXd scales);

  int pose_dim() const { return static_cast<int>(mean_.size()); }
  int latent_dim() const { return static_cast<int>(scales_.size()); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& basis() const { return basis_; }
  const Eigen::VectorXd& scales() const { return scales_; }

  /// z_c = basis_c . (theta - mean) / scale_c
  Eigen::VectorXd encode(const Eigen::VectorXd& theta) const;
  /// theta = mean + sum_c z_c * scale_c * basis_c
  Eigen::VectorXd decode(const Eigen::VectorXd& z) const;

private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd basis_;  // pose_dim x latent_dim, orthonormal columns
  Eigen::VectorXd scales_;
};

/// PCA fit of a pose corpus (rows are poses). Throws when the centered corpus
/// has rank below `dim`, naming the achieved rank.
PoseManifold fit_manifold(const Eigen::MatrixXd& corpus, int dim);

PoseManifold load_manifold(const std::filesystem::path& path);
void save_manifold(const PoseManifold& manifold, const std::filesystem::path& path);

/// One pose sample around theta_opt: latent z ~ N(encode(theta_opt), sigma)
/// per dimension, merged per degree of freedom as
/// w * theta_opt + (1 - w) * decode(z). `weights` has one entry per dof.
Eigen::VectorXd sample_pose(const PoseManifold& manifold, const Eigen::VectorXd& theta_opt,
                            const Eigen::VectorXd& weights, double sigma, Rng& rng);

/// Kinematic-space baseline: theta_opt + psi * U[-0.26, 0.26] per dof.
Eigen::VectorXd sample_pose_naive(const Eigen::VectorXd& theta_opt, double psi, Rng& rng);

struct RootPerturbation {
  Eigen::Vector3d dtau = Eigen::Vector3d::Zero();
  Eigen::Vector3d dphi = Eigen::Vector3d::Zero();
};

/// Root search steps: dtau in psi * U[-0.03, 0.03]^3 meters and dphi in
/// psi * U[-0.01, 0.01]^3 radians.
RootPerturbation sample_root(double psi, Rng& rng);

/// Smooth procedural motion built from sinusoidal joint-angle modes whose
/// combined swing stays inside the template joint limits. Doubles as the
/// corpus generator for the manifold fit and as ground-truth motion for
/// synthetic scenes.
struct MotionModel {
  Eigen::VectorXd mean;       // rest-to-neutral pose, 3K
  Eigen::MatrixXd modes;      // 3K x J unit columns
  Eigen::VectorXd amplitude;  // J, radians
  Eigen::VectorXd frequency;  // J, Hz
  Eigen::VectorXd phase;      // J

  int mode_count() const { return static_cast<int>(amplitude.size()); }
  /// Pose at `time_s` seconds along the deterministic trajectory.
  Eigen::VectorXd pose_at(double time_s) const;
};

MotionModel make_motion_model(const SkeletonTemplate& tmpl, std::uint64_t seed, int modes = 16);

/// `count` poses with independently random mode phases; rows fit within joint
/// limits by construction and span exactly the mode subspace.
Eigen::MatrixXd make_pose_corpus(const MotionModel& model, int count, std::uint64_t seed);

}  // namespace scenefit
