#include <doctest.h>

#include <cmath>
#include <vector>

#include <Eigen/Core>

#include "helpers.hpp"
#include "scenefit/error.hpp"
#include "scenefit/kinematics.hpp"
#include "scenefit/scenario.hpp"

using namespace scenefit;
using scenefit::testing::test_skeleton;

namespace {

Scenario quick(SceneKind kind, std::uint64_t seed, int frames = 3, double noise = 0.0,
               double occlusion = 0.0) {
  ScenarioParams params;
  params.kind = kind;
  params.frames = frames;
  params.seed = seed;
  params.keypoint_noise_px = noise;
  params.occlusion_rate = occlusion;
  return make_scenario(test_skeleton(), params);
}

bool scenarios_equal(const Scenario& a, const Scenario& b) {
  if (a.scene.points != b.scene.points) return false;
  if (a.gt_scale.h != b.gt_scale.h) return false;
  if (a.gt_states.size() != b.gt_states.size()) return false;
  for (std::size_t t = 0; t < a.gt_states.size(); ++t) {
    if (a.gt_states[t].tau != b.gt_states[t].tau) return false;
    if (a.gt_states[t].theta != b.gt_states[t].theta) return false;
    if (a.obs[t].keypoints != b.obs[t].keypoints) return false;
    if (a.obs[t].confidence != b.obs[t].confidence) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("scenario") {

TEST_CASE("every scene kind builds a populated consistent scenario") {
  for (const SceneKind kind :
       {SceneKind::kFloor, SceneKind::kWall, SceneKind::kSeat, SceneKind::kCombo}) {
    const Scenario s = quick(kind, 137);
    CHECK(s.kind == kind);
    CHECK(s.scene.size() > 500);
    CHECK(!s.solids.empty());
    CHECK_NOTHROW(s.cam.validate());
    REQUIRE(s.gt_states.size() == 3);
    REQUIRE(s.obs.size() == 3);
    REQUIRE(s.gt_contacts.body.size() == 3);
    REQUIRE(s.gt_contacts.env.size() == 3);
    CHECK(s.gt_scale.h >= 0.85);
    CHECK(s.gt_scale.h <= 1.2);
    // All ground truth in front of the camera at desk-scale depth.
    for (const auto& st : s.gt_states) {
      CHECK(st.tau.z() > 1.0);
      CHECK(st.tau.z() < 4.0);
    }
  }
}

TEST_CASE("scenarios are reproducible by seed") {
  const Scenario a = quick(SceneKind::kCombo, 555, 4, 2.0, 0.2);
  const Scenario b = quick(SceneKind::kCombo, 555, 4, 2.0, 0.2);
  CHECK(scenarios_equal(a, b));
  const Scenario c = quick(SceneKind::kCombo, 556, 4, 2.0, 0.2);
  CHECK(!scenarios_equal(a, c));
}

TEST_CASE("clean observations are exact projections at full confidence") {
  const Scenario s = quick(SceneKind::kFloor, 201);
  const SkeletonTemplate& tmpl = test_skeleton();
  for (std::size_t t = 0; t < s.gt_states.size(); ++t) {
    const MatrixX2d expect =
        project(compute_pose(tmpl, s.gt_states[t], s.gt_scale.h).joints, s.cam);
    CHECK(s.obs[t].keypoints == expect);
    CHECK((s.obs[t].confidence.array() == 1.0).all());
  }
  CHECK(s.occluded_joints.empty());
}

TEST_CASE("noisy observations move keypoints but keep confidence high") {
  const Scenario s = quick(SceneKind::kFloor, 202, 3, 3.0, 0.0);
  const SkeletonTemplate& tmpl = test_skeleton();
  double max_shift = 0.0;
  for (std::size_t t = 0; t < s.gt_states.size(); ++t) {
    const MatrixX2d expect =
        project(compute_pose(tmpl, s.gt_states[t], s.gt_scale.h).joints, s.cam);
    max_shift = std::max(max_shift, (s.obs[t].keypoints - expect).cwiseAbs().maxCoeff());
    CHECK((s.obs[t].confidence.array() >= 0.7).all());
    CHECK((s.obs[t].confidence.array() <= 1.0).all());
  }
  CHECK(max_shift > 0.1);   // the noise actually happened
  CHECK(max_shift < 30.0);  // but stayed at a plausible magnitude
}

TEST_CASE("occlusion marks a joint subset with low confidence") {
  const Scenario s = quick(SceneKind::kFloor, 203, 3, 2.0, 0.3);
  const int K = test_skeleton().joint_count();
  CHECK(s.occluded_joints.size() == static_cast<std::size_t>(std::llround(0.3 * K)));
  for (std::size_t i = 1; i < s.occluded_joints.size(); ++i)
    CHECK(s.occluded_joints[i] > s.occluded_joints[i - 1]);
  for (const auto& o : s.obs) {
    for (int j : s.occluded_joints) CHECK(o.confidence[j] <= 0.3);
    for (int j = 0; j < K; ++j) {
      const bool occluded =
          std::find(s.occluded_joints.begin(), s.occluded_joints.end(), j) !=
          s.occluded_joints.end();
      if (!occluded) CHECK(o.confidence[j] >= 0.7);
    }
  }
}

TEST_CASE("full occlusion drops every confidence below a third") {
  const Scenario s = quick(SceneKind::kFloor, 204, 2, 2.0, 1.0);
  CHECK(s.occluded_joints.size() == static_cast<std::size_t>(test_skeleton().joint_count()));
  for (const auto& o : s.obs) CHECK((o.confidence.array() <= 0.3).all());
}

TEST_CASE("ground truth never swallows scene points") {
  const SkeletonTemplate& tmpl = test_skeleton();
  for (const SceneKind kind :
       {SceneKind::kFloor, SceneKind::kWall, SceneKind::kSeat, SceneKind::kCombo}) {
    const Scenario s = quick(kind, 77, 4);
    for (const auto& st : s.gt_states) {
      const BodyPose pose = compute_pose(tmpl, st, s.gt_scale.h);
      CHECK(inside_body_count(tmpl, pose, s.gt_scale.h, s.scene.points) == 0);
    }
  }
}

TEST_CASE("oracle body contacts exist and sit near the scene") {
  const Scenario s = quick(SceneKind::kFloor, 205, 3);
  const SkeletonTemplate& tmpl = test_skeleton();
  const SceneIndex scene(s.scene);
  for (std::size_t t = 0; t < s.gt_contacts.body.size(); ++t) {
    const auto idx = effective_contacts(s.gt_contacts.body[t]);
    CHECK(!idx.empty());  // standing on the floor leaves footprints
    const BodyPose pose = compute_pose(tmpl, s.gt_states[t], s.gt_scale.h);
    const MatrixX3d pts = body_surface_subset(tmpl, pose, s.gt_scale.h, idx);
    for (int i = 0; i < pts.rows(); ++i) {
      double d2 = 0.0;
      scene.nearest(pts.row(i).transpose(), &d2);
      CHECK(std::sqrt(d2) < 0.05);
    }
  }
}

TEST_CASE("environment labels are the transfer of the body labels") {
  const Scenario s = quick(SceneKind::kSeat, 206, 3);
  const SkeletonTemplate& tmpl = test_skeleton();
  const SceneIndex scene(s.scene);
  std::vector<MatrixX3d> surfaces;
  for (const auto& st : s.gt_states)
    surfaces.push_back(
        body_surface(tmpl, compute_pose(tmpl, st, s.gt_scale.h), s.gt_scale.h));
  const auto expect = transfer_env_contacts(s.gt_contacts.body, surfaces, scene);
  REQUIRE(expect.size() == s.gt_contacts.env.size());
  for (std::size_t t = 0; t < expect.size(); ++t) CHECK(s.gt_contacts.env[t] == expect[t]);
}

TEST_CASE("initial states ride the camera ray out by the depth offset") {
  const Scenario s = quick(SceneKind::kFloor, 207, 3);
  InitParams init;
  init.depth_offset_m = 1.0;
  init.lateral_noise_m = 0.0;
  init.phi_noise = 0.0;
  init.theta_noise_vis = 0.0;
  init.theta_noise_occ = 0.0;
  init.seed = 99;
  const auto states = make_initial_states(s, init);
  REQUIRE(states.size() == 3);
  for (std::size_t t = 0; t < states.size(); ++t) {
    const Eigen::Vector3d gt = s.gt_states[t].tau;
    const double alpha = (gt.z() + 1.0) / gt.z();
    CHECK((states[t].tau - alpha * gt).norm() < 1e-12);
    // Noise-free pose initialization keeps the ground-truth angles.
    CHECK(states[t].theta == s.gt_states[t].theta);
  }
}

TEST_CASE("initialization noise is seeded and scales with occlusion") {
  const Scenario s = quick(SceneKind::kFloor, 208, 3, 2.0, 0.3);
  InitParams init;
  init.seed = 5;
  const auto a = make_initial_states(s, init);
  const auto b = make_initial_states(s, init);
  for (std::size_t t = 0; t < a.size(); ++t) {
    CHECK(a[t].tau == b[t].tau);
    CHECK(a[t].theta == b[t].theta);
  }
  init.seed = 6;
  const auto c = make_initial_states(s, init);
  CHECK(a[0].theta != c[0].theta);

  // Occluded joints get substantially more angle noise than visible ones.
  double occ_err = 0.0, vis_err = 0.0;
  int occ_n = 0, vis_n = 0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    const Eigen::VectorXd diff = (a[t].theta - s.gt_states[t].theta).cwiseAbs();
    for (int j = 0; j < test_skeleton().joint_count(); ++j) {
      const bool occluded =
          std::find(s.occluded_joints.begin(), s.occluded_joints.end(), j) !=
          s.occluded_joints.end();
      const double e = diff.segment<3>(3 * j).sum();
      (occluded ? occ_err : vis_err) += e;
      (occluded ? occ_n : vis_n) += 3;
    }
  }
  CHECK(occ_err / occ_n > 3.0 * (vis_err / vis_n));
}

TEST_CASE("scenario parameters reject nonsense") {
  ScenarioParams p;
  p.frames = 0;
  CHECK_THROWS_AS(p.validate(), InputError);
  p = ScenarioParams{};
  p.fps = 0.0;
  CHECK_THROWS_AS(p.validate(), InputError);
  p = ScenarioParams{};
  p.occlusion_rate = 1.5;
  CHECK_THROWS_AS(p.validate(), InputError);
  p = ScenarioParams{};
  p.keypoint_noise_px = -1.0;
  CHECK_THROWS_AS(p.validate(), InputError);
}

TEST_CASE("scene kinds round-trip through their names") {
  for (const SceneKind kind :
       {SceneKind::kFloor, SceneKind::kWall, SceneKind::kSeat, SceneKind::kCombo})
    CHECK(scene_kind_from_string(to_string(kind)) == kind);
  CHECK_THROWS_AS(scene_kind_from_string("garden"), InputError);
}

TEST_CASE("scene points lie on the solids that generated them") {
  const Scenario s = quick(SceneKind::kCombo, 209, 2);
  // Every sampled point sits on (not inside) some solid: within a hair of the
  // union boundary and never strictly interior.
  for (int i = 0; i < s.scene.size(); i += 7) {
    const Eigen::Vector3d p = s.scene.points.row(i).transpose();
    bool near_some = false;
    for (const Solid& solid : s.solids) {
      if (solid.contains(p)) {
        // Interior hits would defeat the penetration metric.
        const double margin =
            std::min((p - solid.lo).minCoeff(), (solid.hi - p).minCoeff());
        CHECK(margin < 1e-9);
      }
      const Eigen::Vector3d clamped = p.cwiseMax(solid.lo).cwiseMin(solid.hi);
      if ((clamped - p).norm() < 1e-9) near_some = true;
    }
    CHECK(near_some);
  }
}

}  // TEST_SUITE
