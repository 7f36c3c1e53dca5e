#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "scenefit/contacts.hpp"
#include "scenefit/manifold.hpp"
#include "scenefit/scene.hpp"
#include "scenefit/skeleton.hpp"
#include "scenefit/types.hpp"

namespace scenefit {

/// Seed for the shared procedural motion model: the manifold asset, the pose
/// corpus, and scenario ground-truth motion all derive from it so that
/// ground-truth poses lie in the span the manifold was fitted on.
inline constexpr std::uint64_t kDefaultMotionSeed = 7120322ULL;

enum class SceneKind { kFloor, kWall, kSeat, kCombo };

std::string to_string(SceneKind kind);
SceneKind scene_kind_from_string(const std::string& name);

/// Axis-aligned solid used both to sample scene points (exposed faces) and as
/// exact geometry for the penetration metric.
struct Solid {
  Eigen::Vector3d lo = Eigen::Vector3d::Zero();
  Eigen::Vector3d hi = Eigen::Vector3d::Zero();

  bool contains(const Eigen::Vector3d& p) const {
    return p.x() > lo.x() && p.x() < hi.x() && p.y() > lo.y() && p.y() < hi.y() &&
           p.z() > lo.z() && p.z() < hi.z();
  }
};

struct ScenarioParams {
  SceneKind kind = SceneKind::kFloor;
  int frames = 5;
  double fps = 10.0;
  double keypoint_noise_px = 2.0;   // visible-joint detection noise
  double occlusion_rate = 0.0;      // fraction of joints occluded for the sequence
  double occluded_noise_px = 20.0;  // detection noise on occluded joints
  double point_spacing = 0.04;      // scene sampling grid pitch, meters
  std::uint64_t seed = 0;

  void validate() const;
};

/// Fully synthetic test sequence: scene points sampled from solids, smooth
/// in-manifold ground-truth motion standing on the floor, oracle contact
/// labels, and simulated 2D detections.
struct Scenario {
  SceneKind kind = SceneKind::kFloor;
  ScenePointCloud scene;
  std::vector<Solid> solids;
  CameraIntrinsics cam;
  std::vector<KinematicState> gt_states;
  BodyScale gt_scale;
  ContactsFile gt_contacts;  // oracle body + environment labels per frame
  std::vector<Observation2D> obs;
  std::vector<int> occluded_joints;  // ascending
  double fps = 10.0;
  std::uint64_t seed = 0;
};

/// Deterministic in `params.seed`. Ground truth clears the scene solids (zero
/// scene points inside the body) and the feet stay in floor-contact range.
/// With zero noise and zero occlusion the observations are exact projections
/// with confidence 1.
Scenario make_scenario(const SkeletonTemplate& tmpl, const ScenarioParams& params);

struct InitParams {
  double depth_offset_m = 1.0;   // pushes tau along the camera ray
  double lateral_noise_m = 0.02;
  double phi_noise = 0.02;       // radians, root orientation
  double theta_noise_vis = 0.03; // radians, per visible joint axis
  double theta_noise_occ = 0.25; // radians, per occluded joint axis
  std::uint64_t seed = 0;
};

/// Noisy per-frame initialization: ground-truth translations scaled along the
/// camera ray by the depth offset, plus seeded pose/orientation noise that is
/// larger on occluded joints.
std::vector<KinematicState> make_initial_states(const Scenario& scenario, const InitParams& params);

}  // namespace scenefit
