#include "scenefit/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "scenefit/error.hpp"
#include "scenefit/kinematics.hpp"

namespace scenefit {

std::string to_string(SceneKind kind) {
  switch (kind) {
    case SceneKind::kFloor: return "floor";
    case SceneKind::kWall: return "wall";
    case SceneKind::kSeat: return "seat";
    case SceneKind::kCombo: return "combo";
  }
  throw InputError("invalid scene kind");
}

SceneKind scene_kind_from_string(const std::string& name) {
  if (name == "floor") return SceneKind::kFloor;
  if (name == "wall") return SceneKind::kWall;
  if (name == "seat") return SceneKind::kSeat;
  if (name == "combo") return SceneKind::kCombo;
  throw InputError("unknown scene kind \"" + name + "\" (floor|wall|seat|combo)");
}

void ScenarioParams::validate() const {
  if (frames < 1) throw InputError("scenario needs at least one frame");
  if (!(fps > 0.0)) throw InputError("scenario fps must be positive");
  if (!(keypoint_noise_px >= 0.0) || !(occluded_noise_px >= 0.0))
    throw InputError("keypoint noise must be >= 0");
  if (!(occlusion_rate >= 0.0 && occlusion_rate <= 1.0))
    throw InputError("occlusion rate must be in [0, 1]");
  if (!(point_spacing > 0.0)) throw InputError("point spacing must be positive");
}

namespace {

constexpr double kFloorY = 1.0;       // camera frame, +y down
constexpr double kGroundClear = 0.003; // gap between feet and floor
constexpr double kWallGap = 0.02;
constexpr double kMotionSlowdown = 0.1;  // playback factor for ground-truth motion

/// Extreme capsule extent of a posed body along `axis`; sign +1 takes the
/// maximum face, -1 the minimum. Exact for the capsule geometry, independent
/// of surface sampling.
double capsule_extent(const SkeletonTemplate& tmpl, const BodyPose& pose, double h, int axis,
                      double sign) {
  double best = -std::numeric_limits<double>::infinity();
  for (int b = 1; b < tmpl.joint_count(); ++b) {
    const Joint& j = tmpl.joints()[b];
    const double ends =
        std::max(sign * pose.joints(j.parent, axis), sign * pose.joints(b, axis));
    best = std::max(best, ends + h * j.capsule_radius);
  }
  return sign * best;
}

/// Points on an axis-aligned rectangle with `axis` pinned to `value`; the two
/// free axes follow ascending coordinate order. Jitter stays within a cell so
/// points remain on the face.
void sample_face(std::vector<Eigen::Vector3d>& pts, int axis, double value, double u_lo,
                 double u_hi, double w_lo, double w_hi, double spacing, Rng& rng) {
  std::uniform_real_distribution<double> jitter(-0.4, 0.4);
  const int nu = std::max(1, static_cast<int>(std::floor((u_hi - u_lo) / spacing)));
  const int nw = std::max(1, static_cast<int>(std::floor((w_hi - w_lo) / spacing)));
  const double du = (u_hi - u_lo) / nu;
  const double dw = (w_hi - w_lo) / nw;
  for (int i = 0; i < nu; ++i) {
    for (int j = 0; j < nw; ++j) {
      const double u = u_lo + (i + 0.5) * du + jitter(rng) * spacing;
      const double w = w_lo + (j + 0.5) * dw + jitter(rng) * spacing;
      Eigen::Vector3d p;
      switch (axis) {
        case 0: p = {value, u, w}; break;
        case 1: p = {u, value, w}; break;
        default: p = {u, w, value}; break;
      }
      pts.push_back(p);
    }
  }
}

}  // namespace

Scenario make_scenario(const SkeletonTemplate& tmpl, const ScenarioParams& params) {
  params.validate();
  const int k = tmpl.joint_count();
  const int frames = params.frames;

  Scenario sc;
  sc.kind = params.kind;
  sc.fps = params.fps;
  sc.seed = params.seed;
  sc.cam.fx = 800.0;
  sc.cam.fy = 800.0;
  sc.cam.cx = 480.0;
  sc.cam.cy = 360.0;
  sc.cam.image_w = 960.0;
  sc.cam.image_h = 720.0;

  // --- ground-truth motion ------------------------------------------------
  Rng motion_rng = make_rng(derive_seed(params.seed, 0x4d4f5449ULL));
  std::uniform_real_distribution<double> scale_draw(0.85, 1.2);
  std::uniform_real_distribution<double> phase_draw(0.0, 30.0);
  std::uniform_real_distribution<double> yaw_draw(-0.3, 0.3);
  std::uniform_real_distribution<double> x_draw(-0.25, 0.25);
  std::uniform_real_distribution<double> z_draw(2.2, 2.8);
  std::uniform_real_distribution<double> vel_draw(-0.02, 0.02);
  const double h = scale_draw(motion_rng);
  sc.gt_scale = BodyScale(h);
  const double t0 = phase_draw(motion_rng);
  const Eigen::Vector3d phi(0.0, yaw_draw(motion_rng), 0.0);
  const double x0 = x_draw(motion_rng);
  const double z0 = z_draw(motion_rng);
  const double vx = vel_draw(motion_rng);
  const double vz = vel_draw(motion_rng);

  const MotionModel motion = make_motion_model(tmpl, kDefaultMotionSeed);
  std::vector<BodyPose> unit_poses;
  sc.gt_states.reserve(frames);
  for (int t = 0; t < frames; ++t) {
    const double time_s = t / params.fps;
    // The motion model swings limbs too fast for foot vertices to pass the
    // stationarity half of the contact test, so ground truth plays it slowed
    // down; poses still come from the exact mode subspace.
    KinematicState s(Eigen::Vector3d::Zero(), phi, motion.pose_at(t0 + kMotionSlowdown * time_s));
    const BodyPose unit = compute_pose(tmpl, s, 1.0);
    // Keep the lowest capsule point a fixed clearance above the floor.
    const double low_unit = capsule_extent(tmpl, unit, 1.0, 1, +1.0);
    s.tau = Eigen::Vector3d(x0 + vx * time_s, kFloorY - kGroundClear - h * low_unit,
                            z0 + vz * time_s);
    unit_poses.push_back(unit);
    sc.gt_states.push_back(std::move(s));
  }

  // --- solids -------------------------------------------------------------
  const double zc = z0 + vz * 0.5 * (frames - 1) / params.fps;
  sc.solids.push_back({{x0 - 1.2, kFloorY, zc - 1.2}, {x0 + 1.2, kFloorY + 0.3, zc + 1.2}});
  const bool wants_wall = params.kind == SceneKind::kWall || params.kind == SceneKind::kCombo;
  const bool wants_seat = params.kind == SceneKind::kSeat || params.kind == SceneKind::kCombo;
  if (wants_wall) {
    double ext = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < frames; ++t)
      ext = std::max(ext, sc.gt_states[t].tau.x() + h * capsule_extent(tmpl, unit_poses[t],
                                                                       1.0, 0, +1.0));
    const double wx = ext + kWallGap;
    sc.solids.push_back({{wx, kFloorY - 2.2, zc - 1.2}, {wx + 0.3, kFloorY, zc + 1.2}});
  }
  if (wants_seat) {
    double ext = std::numeric_limits<double>::infinity();
    for (int t = 0; t < frames; ++t)
      ext = std::min(ext, sc.gt_states[t].tau.x() + h * capsule_extent(tmpl, unit_poses[t],
                                                                       1.0, 0, -1.0));
    sc.solids.push_back({{ext - 0.55, kFloorY - 0.45, zc - 0.25}, {ext - 0.10, kFloorY, zc + 0.25}});
  }

  // --- scene points on the exposed faces ----------------------------------
  Rng scene_rng = make_rng(derive_seed(params.seed, 0x5343454eULL));
  std::vector<Eigen::Vector3d> pts;
  const Solid& floor = sc.solids[0];
  sample_face(pts, 1, kFloorY, floor.lo.x(), floor.hi.x(), floor.lo.z(), floor.hi.z(),
              params.point_spacing, scene_rng);
  if (wants_wall) {
    const Solid& wall = sc.solids[1];
    sample_face(pts, 0, wall.lo.x(), wall.lo.y(), wall.hi.y(), wall.lo.z(), wall.hi.z(),
                params.point_spacing, scene_rng);
  }
  if (wants_seat) {
    const Solid& seat = sc.solids.back();
    sample_face(pts, 1, seat.lo.y(), seat.lo.x(), seat.hi.x(), seat.lo.z(), seat.hi.z(),
                params.point_spacing, scene_rng);
    sample_face(pts, 0, seat.hi.x(), seat.lo.y(), seat.hi.y(), seat.lo.z(), seat.hi.z(),
                params.point_spacing, scene_rng);
  }
  sc.scene.points.resize(static_cast<Eigen::Index>(pts.size()), 3);
  for (std::size_t i = 0; i < pts.size(); ++i)
    sc.scene.points.row(static_cast<Eigen::Index>(i)) = pts[i];

  // --- oracle contacts ----------------------------------------------------
  const SceneIndex index(sc.scene);
  std::vector<MatrixX3d> surfaces;
  surfaces.reserve(frames);
  for (int t = 0; t < frames; ++t) {
    const BodyPose pose = compute_pose(tmpl, sc.gt_states[t], h);
    const int inside = inside_body_count(tmpl, pose, h, index);
    if (inside > 0)
      throw Error("scenario construction: ground truth intersects the scene (" +
                  std::to_string(inside) + " points inside at frame " + std::to_string(t) + ")");
    surfaces.push_back(body_surface(tmpl, pose, h));
  }
  ContactParams cparams;
  cparams.fps = params.fps;
  sc.gt_contacts.body = annotate_body_contacts(surfaces, index, cparams);
  sc.gt_contacts.env = transfer_env_contacts(sc.gt_contacts.body, surfaces, index);

  // --- occlusion and simulated detections ---------------------------------
  Rng obs_rng = make_rng(derive_seed(params.seed, 0x4f425345ULL));
  const int n_occ = static_cast<int>(std::llround(params.occlusion_rate * k));
  if (n_occ > 0) {
    std::uniform_real_distribution<double> key(0.0, 1.0);
    std::vector<std::pair<double, int>> keys;
    for (int j = 0; j < k; ++j) keys.emplace_back(key(obs_rng), j);
    std::sort(keys.begin(), keys.end());
    for (int j = 0; j < n_occ; ++j) sc.occluded_joints.push_back(keys[j].second);
    std::sort(sc.occluded_joints.begin(), sc.occluded_joints.end());
  }
  const bool exact = params.keypoint_noise_px == 0.0 && n_occ == 0;
  sc.obs.reserve(frames);
  for (int t = 0; t < frames; ++t) {
    const BodyPose pose = compute_pose(tmpl, sc.gt_states[t], h);
    Observation2D ob;
    ob.keypoints = project(pose.joints, sc.cam);
    ob.confidence = Eigen::VectorXd::Ones(k);
    if (!exact) {
      std::uniform_real_distribution<double> conf_lo(0.05, 0.3);
      std::uniform_real_distribution<double> conf_hi(0.7, 1.0);
      for (int j = 0; j < k; ++j) {
        const bool occluded = std::binary_search(sc.occluded_joints.begin(),
                                                 sc.occluded_joints.end(), j);
        const double sigma = occluded ? params.occluded_noise_px : params.keypoint_noise_px;
        for (int c = 0; c < 2; ++c) {
          std::normal_distribution<double> noise(0.0, sigma);
          if (sigma > 0.0) ob.keypoints(j, c) += noise(obs_rng);
        }
        ob.confidence[j] = occluded ? conf_lo(obs_rng) : conf_hi(obs_rng);
      }
    }
    ob.validate(k);
    sc.obs.push_back(std::move(ob));
  }
  return sc;
}

std::vector<KinematicState> make_initial_states(const Scenario& scenario,
                                                const InitParams& params) {
  Rng rng = make_rng(derive_seed(params.seed, 0x494e4954ULL));
  std::vector<KinematicState> out;
  out.reserve(scenario.gt_states.size());
  for (const KinematicState& gt : scenario.gt_states) {
    const double alpha = (gt.tau.z() + params.depth_offset_m) / gt.tau.z();
    Eigen::Vector3d tau = alpha * gt.tau;
    Eigen::Vector3d phi = gt.phi;
    Eigen::VectorXd theta = gt.theta;
    std::uniform_real_distribution<double> lat(-params.lateral_noise_m, params.lateral_noise_m);
    tau.x() += lat(rng);
    tau.y() += lat(rng);
    for (int c = 0; c < 3; ++c) {
      std::normal_distribution<double> g(0.0, params.phi_noise);
      phi[c] += g(rng);
    }
    const int joints = static_cast<int>(theta.size()) / 3;
    for (int j = 0; j < joints; ++j) {
      const bool occluded = std::binary_search(scenario.occluded_joints.begin(),
                                               scenario.occluded_joints.end(), j);
      const double sigma = occluded ? params.theta_noise_occ : params.theta_noise_vis;
      for (int c = 0; c < 3; ++c) {
        std::normal_distribution<double> g(0.0, sigma);
        theta[3 * j + c] += g(rng);
      }
    }
    out.emplace_back(tau, phi, theta);
  }
  return out;
}

}  // namespace scenefit
