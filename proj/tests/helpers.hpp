// Shared fixtures for the unit suites: cached template/manifold, random state
// and point generators, and a self-cleaning temp directory.
#pragma once

#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include <Eigen/Core>

#include "scenefit/manifold.hpp"
#include "scenefit/rng.hpp"
#include "scenefit/scenario.hpp"
#include "scenefit/skeleton.hpp"
#include "scenefit/types.hpp"

namespace scenefit::testing {

inline const SkeletonTemplate& test_skeleton() {
  static const SkeletonTemplate tmpl = default_skeleton();
  return tmpl;
}

/// Manifold fitted on a fresh corpus from the shared motion model; spans the
/// same mode subspace as scenario ground-truth poses.
inline const PoseManifold& test_manifold() {
  static const PoseManifold manifold = [] {
    const MotionModel model = make_motion_model(test_skeleton(), kDefaultMotionSeed);
    return fit_manifold(make_pose_corpus(model, 500, kDefaultMotionSeed), 16);
  }();
  return manifold;
}

/// The synthetic-scenario camera; principal point inside a 960x720 image.
inline CameraIntrinsics test_camera() {
  CameraIntrinsics cam;
  cam.fx = 800.0;
  cam.fy = 800.0;
  cam.cx = 480.0;
  cam.cy = 360.0;
  cam.image_w = 960.0;
  cam.image_h = 720.0;
  return cam;
}

/// Random but in-front-of-camera state with bounded joint angles.
inline KinematicState random_state(Rng& rng, int joint_count, double angle_spread = 0.3) {
  std::uniform_real_distribution<double> lat(-0.5, 0.5);
  std::uniform_real_distribution<double> depth(2.0, 4.0);
  std::uniform_real_distribution<double> ang(-angle_spread, angle_spread);
  Eigen::Vector3d tau(lat(rng), lat(rng), depth(rng));
  Eigen::Vector3d phi(ang(rng), ang(rng), ang(rng));
  Eigen::VectorXd theta(3 * joint_count);
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] = ang(rng);
  return KinematicState(tau, phi, theta);
}

inline MatrixX3d random_points(Rng& rng, int n, const Eigen::Vector3d& lo,
                               const Eigen::Vector3d& hi) {
  MatrixX3d pts(n, 3);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) {
      std::uniform_real_distribution<double> u(lo[c], hi[c]);
      pts(i, c) = u(rng);
    }
  return pts;
}

/// Unique directory under the system temp root, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("scenefit_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace scenefit::testing
