#include <doctest.h>

#include <cmath>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "helpers.hpp"
#include "scenefit/error.hpp"
#include "scenefit/metrics.hpp"
#include "scenefit/pipeline.hpp"
#include "scenefit/rng.hpp"
#include "scenefit/scenario.hpp"

using namespace scenefit;
using scenefit::testing::random_state;
using scenefit::testing::test_manifold;
using scenefit::testing::test_skeleton;

namespace {

/// A scenario plus everything run_pipeline needs, with owned storage.
struct Fixture {
  Scenario scenario;
  std::unique_ptr<SceneIndex> scene;
  PipelineInputs in;
};

Fixture make_fixture(SceneKind kind, int frames, std::uint64_t seed, double depth_offset,
                     double noise_px = 0.0, double occlusion = 0.0) {
  Fixture f;
  ScenarioParams params;
  params.kind = kind;
  params.frames = frames;
  params.seed = seed;
  params.keypoint_noise_px = noise_px;
  params.occlusion_rate = occlusion;
  f.scenario = make_scenario(test_skeleton(), params);
  f.scene = std::make_unique<SceneIndex>(f.scenario.scene);
  InitParams init;
  init.depth_offset_m = depth_offset;
  init.seed = seed + 1;
  f.in.tmpl = &test_skeleton();
  f.in.manifold = &test_manifold();
  f.in.scene = f.scene.get();
  f.in.cam = f.scenario.cam;
  f.in.phi0 = make_initial_states(f.scenario, init);
  f.in.obs = f.scenario.obs;
  f.in.contacts =
      frame_contacts_from_labels(f.scenario.gt_contacts.body, f.scenario.gt_contacts.env);
  return f;
}

StageConfig small_config() {
  StageConfig cfg;
  cfg.T = 3;
  cfg.n_sam = 60;
  cfg.iterations = 1;
  cfg.optimizer.learning_rate = 1.0;
  cfg.optimizer.max_iterations = 2000;
  return cfg;
}

bool states_equal(const std::vector<KinematicState>& a, const std::vector<KinematicState>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].tau != b[i].tau || a[i].phi != b[i].phi || a[i].theta != b[i].theta) return false;
  return true;
}

/// Direct reflect-boundary convolution of one scalar track.
std::vector<double> convolve_reflect(const std::vector<double>& track,
                                     const std::vector<double>& taps) {
  const int n = static_cast<int>(track.size());
  const int r = (static_cast<int>(taps.size()) - 1) / 2;
  std::vector<double> out(track.size());
  for (int t = 0; t < n; ++t) {
    double acc = 0.0;
    for (int j = -r; j <= r; ++j) acc += taps[j + r] * track[reflect_index(t + j, n)];
    out[t] = acc;
  }
  return out;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("gaussian kernels are normalized and symmetric") {
  for (const double sigma : {0.5, 1.0, 2.3}) {
    const std::vector<double> taps = gaussian_kernel(sigma);
    const int r = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    REQUIRE(taps.size() == static_cast<std::size_t>(2 * r + 1));
    double sum = 0.0;
    for (double t : taps) sum += t;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    for (int j = 0; j < r; ++j) CHECK(taps[j] == doctest::Approx(taps[2 * r - j]).epsilon(1e-15));
    CHECK(taps[r] == *std::max_element(taps.begin(), taps.end()));
    // Ratio between center and neighbour follows the Gaussian falloff.
    CHECK(taps[r + 1] / taps[r] == doctest::Approx(std::exp(-0.5 / (sigma * sigma))).epsilon(1e-12));
  }
}

TEST_CASE("index reflection mirrors over the array edges") {
  CHECK(reflect_index(0, 5) == 0);
  CHECK(reflect_index(4, 5) == 4);
  CHECK(reflect_index(-1, 5) == 0);
  CHECK(reflect_index(-2, 5) == 1);
  CHECK(reflect_index(5, 5) == 4);
  CHECK(reflect_index(6, 5) == 3);
  CHECK(reflect_index(-1, 1) == 0);
  CHECK(reflect_index(3, 1) == 0);
}

TEST_CASE("smoothing passes constant trajectories through unchanged") {
  Rng rng = make_rng(81);
  const KinematicState s = random_state(rng, 21);
  const std::vector<KinematicState> constant(6, s);
  const auto out = gaussian_smooth_trajectory(constant, 1.0);
  REQUIRE(out.size() == 6);
  for (const auto& o : out) {
    CHECK((o.tau - s.tau).norm() < 1e-12);
    CHECK((o.phi - s.phi).norm() < 1e-12);
    CHECK((o.theta - s.theta).norm() < 1e-12);
  }
}

TEST_CASE("an interior impulse smears into the kernel taps") {
  std::vector<KinematicState> states(9);
  for (auto& s : states) s.theta = Eigen::VectorXd::Zero(6);
  states[4].tau.x() = 1.0;
  const double sigma = 1.0;
  const auto out = gaussian_smooth_trajectory(states, sigma);
  const std::vector<double> taps = gaussian_kernel(sigma);
  const int r = (static_cast<int>(taps.size()) - 1) / 2;
  for (int t = 0; t < 9; ++t) {
    const int j = t - 4;
    const double expect = (std::abs(j) <= r) ? taps[j + r] : 0.0;
    CHECK(out[t].tau.x() == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("smoothing matches a direct per-dof convolution") {
  Rng rng = make_rng(82);
  std::vector<KinematicState> states;
  for (int t = 0; t < 7; ++t) states.push_back(random_state(rng, 5));
  const double sigma = 1.4;
  const auto fast = gaussian_smooth_trajectory(states, sigma);
  const std::vector<double> taps = gaussian_kernel(sigma);
  const int dof = states[0].dof();
  for (int d = 0; d < dof; ++d) {
    std::vector<double> track;
    for (const auto& s : states) track.push_back(state_to_vector(s)[d]);
    const std::vector<double> expect = convolve_reflect(track, taps);
    for (int t = 0; t < 7; ++t)
      CHECK(state_to_vector(fast[t])[d] == doctest::Approx(expect[t]).epsilon(1e-12));
  }
}

TEST_CASE("zero-bandwidth smoothing is the identity") {
  Rng rng = make_rng(83);
  std::vector<KinematicState> states{random_state(rng, 8), random_state(rng, 8),
                                     random_state(rng, 8)};
  const auto out = gaussian_smooth_trajectory(states, 0.0);
  CHECK(states_equal(out, states));
}

TEST_CASE("label thresholding builds the per-frame contact sets") {
  Eigen::VectorXd body(4), env(3);
  body << 0.9, 0.2, 0.51, 0.5;
  env << 0.0, 1.0, 0.7;
  const auto frames = frame_contacts_from_labels({body}, {env});
  REQUIRE(frames.size() == 1);
  CHECK(frames[0].body == std::vector<int>{0, 2});
  CHECK(frames[0].env == std::vector<int>{1, 2});
  // env may be absent entirely
  const auto no_env = frame_contacts_from_labels({body}, {});
  CHECK(no_env[0].env.empty());
}

TEST_CASE("stage one with no contacts reduces to reprojection and flags it") {
  Fixture f = make_fixture(SceneKind::kFloor, 3, 901, 0.0);
  for (auto& c : f.in.contacts) c = FrameContacts{};  // drop all contact info
  f.in.phi0 = f.scenario.gt_states;  // start at the truth
  StageConfig cfg = small_config();
  const Stage1Result res = stage1_contact_opt(f.in, LossWeights{}, cfg);
  CHECK(res.contact_warning);
  // With no contact term the problem is scale-depth ambiguous: the optimizer
  // may slide along the ray (alpha tau*, alpha h*), so only the reprojection
  // residual and the ray itself are pinned down.
  CHECK(res.final_loss < 1e-6);
  for (int t = 0; t < 3; ++t)
    CHECK((res.states[t].tau / res.h - f.scenario.gt_states[t].tau / f.scenario.gt_scale.h)
              .norm() < 0.02);
}

TEST_CASE("stage one recovers depth and scale from an offset start") {
  Fixture f = make_fixture(SceneKind::kFloor, 3, 902, 1.0);
  StageConfig cfg = small_config();
  const Stage1Result res = stage1_contact_opt(f.in, LossWeights{}, cfg);
  CHECK(res.final_loss < res.initial_loss);
  CHECK(!res.contact_warning);
  double tau_err = 0.0;
  for (int t = 0; t < 3; ++t)
    tau_err = std::max(tau_err, (res.states[t].tau - f.scenario.gt_states[t].tau).norm());
  CHECK(tau_err < 0.05);
  CHECK(std::abs(res.h - f.scenario.gt_scale.h) < 0.05);
  // Scale stays in its physical range no matter what.
  CHECK(res.h >= BodyScale::kMin);
  CHECK(res.h <= BodyScale::kMax);
}

TEST_CASE("stage two is deterministic and thread-invariant") {
  Fixture f = make_fixture(SceneKind::kFloor, 3, 903, 0.5);
  StageConfig cfg = small_config();
  const Stage1Result s1 = stage1_contact_opt(f.in, LossWeights{}, cfg);
  const Stage2Result a = stage2_sampling(f.in, s1.states, s1.h, LossWeights{}, cfg, 5, 1);
  const Stage2Result b = stage2_sampling(f.in, s1.states, s1.h, LossWeights{}, cfg, 5, 1);
  const Stage2Result c = stage2_sampling(f.in, s1.states, s1.h, LossWeights{}, cfg, 5, 4);
  CHECK(states_equal(a.presmooth, b.presmooth));
  CHECK(states_equal(a.smoothed, b.smoothed));
  CHECK(states_equal(a.presmooth, c.presmooth));
  CHECK(states_equal(a.smoothed, c.smoothed));
  const Stage2Result d = stage2_sampling(f.in, s1.states, s1.h, LossWeights{}, cfg, 6, 1);
  CHECK(!states_equal(a.presmooth, d.presmooth));  // the seed matters
}

TEST_CASE("stage two statistics stay within their contracts") {
  Fixture f = make_fixture(SceneKind::kCombo, 4, 904, 0.5);
  StageConfig cfg = small_config();
  cfg.T = 4;
  cfg.n_sam = 40;
  const Stage1Result s1 = stage1_contact_opt(f.in, LossWeights{}, cfg);
  const Stage2Result res = stage2_sampling(f.in, s1.states, s1.h, LossWeights{}, cfg, 11, 2);
  REQUIRE(res.stats.size() == 4);
  for (const auto& st : res.stats) {
    CHECK(st.generated >= cfg.n_sam);
    CHECK(st.psi >= 1.0);
    CHECK(st.psi <= cfg.psi_max);
    CHECK(st.collision_count >= 0);
    if (!st.psi_exhausted) {
      CHECK(st.collision_count <= cfg.gamma);
      CHECK(st.survivor_count >= 1);
    }
    CHECK(std::isfinite(st.best_cost));
  }
  // The smoothed output is exactly the Gaussian filter of the raw picks.
  const auto expect = gaussian_smooth_trajectory(res.presmooth, cfg.smoothing_sigma_frames);
  CHECK(states_equal(res.smoothed, expect));
}

TEST_CASE("full-confidence merging keeps sampled poses anchored") {
  // With every joint at confidence 1 the merge w*theta + (1-w)*decode(z)
  // returns theta exactly, so stage two can only move the root.
  Fixture f = make_fixture(SceneKind::kFloor, 3, 905, 0.3);
  for (auto& o : f.in.obs) o.confidence.setOnes();
  StageConfig cfg = small_config();
  cfg.n_sam = 30;
  const Stage1Result s1 = stage1_contact_opt(f.in, LossWeights{}, cfg);
  const Stage2Result res = stage2_sampling(f.in, s1.states, s1.h, LossWeights{}, cfg, 3, 1);
  for (std::size_t t = 0; t < res.presmooth.size(); ++t)
    CHECK((res.presmooth[t].theta - s1.states[t].theta).norm() < 1e-12);
}

TEST_CASE("stage three never increases the per-frame cost") {
  Fixture f = make_fixture(SceneKind::kFloor, 3, 906, 0.5, 1.0);
  StageConfig cfg = small_config();
  const Stage1Result s1 = stage1_contact_opt(f.in, LossWeights{}, cfg);
  const Stage2Result s2 = stage2_sampling(f.in, s1.states, s1.h, LossWeights{}, cfg, 7, 1);
  const Stage3Result s3 = stage3_refine(f.in, s2.smoothed, s1.h, LossWeights{}, cfg);
  REQUIRE(s3.states.size() == 3);
  REQUIRE(s3.final_loss.size() == 3);
  for (int t = 0; t < 3; ++t) {
    CHECK(s3.final_loss[t] <= s3.initial_loss[t] + 1e-12);
    CHECK(s3.iterations[t] >= 0);
  }
}

TEST_CASE("the full pipeline returns consistent shapes and diagnostics") {
  Fixture f = make_fixture(SceneKind::kFloor, 4, 907, 0.5, 1.0);
  StageConfig cfg = small_config();
  cfg.T = 4;
  cfg.n_sam = 40;
  const TrajectoryResult res = run_pipeline(f.in, LossWeights{}, cfg, 123, 2);
  CHECK(res.phi0.size() == 4);
  CHECK(res.phi_opt.size() == 4);
  CHECK(res.phi_sam_hat.size() == 4);
  CHECK(res.phi_ref.size() == 4);
  CHECK(res.h >= BodyScale::kMin);
  CHECK(res.h <= BodyScale::kMax);
  CHECK(res.diagnostics.stage2.size() == 4);
  CHECK(res.diagnostics.stage2_presmooth.size() == 4);
  CHECK(res.diagnostics.stage3_final_loss.size() == 4);
  CHECK(res.diagnostics.gamma == cfg.gamma);
  CHECK(res.diagnostics.stage1_final_loss <= res.diagnostics.stage1_initial_loss);
  CHECK(states_equal(res.phi0, f.in.phi0));
}

TEST_CASE("the full pipeline is reproducible field for field") {
  Fixture f = make_fixture(SceneKind::kWall, 3, 908, 0.5, 1.0);
  StageConfig cfg = small_config();
  cfg.n_sam = 40;
  const TrajectoryResult a = run_pipeline(f.in, LossWeights{}, cfg, 55, 1);
  const TrajectoryResult b = run_pipeline(f.in, LossWeights{}, cfg, 55, 3);
  CHECK(a.h == b.h);
  CHECK(states_equal(a.phi_opt, b.phi_opt));
  CHECK(states_equal(a.phi_sam_hat, b.phi_sam_hat));
  CHECK(states_equal(a.phi_ref, b.phi_ref));
  for (std::size_t t = 0; t < a.diagnostics.stage2.size(); ++t) {
    CHECK(a.diagnostics.stage2[t].best_cost == b.diagnostics.stage2[t].best_cost);
    CHECK(a.diagnostics.stage2[t].generated == b.diagnostics.stage2[t].generated);
  }
}

TEST_CASE("disabling stages passes their inputs through") {
  Fixture f = make_fixture(SceneKind::kFloor, 3, 909, 0.5);
  StageConfig cfg = small_config();
  cfg.n_sam = 30;
  cfg.enable_sampling = false;
  cfg.enable_refinement = false;
  const TrajectoryResult res = run_pipeline(f.in, LossWeights{}, cfg, 9, 1);
  CHECK(states_equal(res.phi_sam_hat, res.phi_opt));
  CHECK(states_equal(res.phi_ref, res.phi_sam_hat));
  CHECK(res.diagnostics.stage2.empty());
  CHECK(res.diagnostics.stage3_final_loss.empty());
}

TEST_CASE("stage configs reject malformed values") {
  StageConfig cfg;
  cfg.T = 0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = StageConfig{};
  cfg.U = cfg.n_sam + 1;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = StageConfig{};
  cfg.iterations = -1;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = StageConfig{};
  cfg.psi_max = 0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = StageConfig{};
  cfg.gamma = -2;
  CHECK_THROWS_AS(cfg.validate(), InputError);
}

TEST_CASE("sampler kinds round-trip through their names") {
  CHECK(to_string(SamplerKind::kManifold) == "manifold");
  CHECK(to_string(SamplerKind::kNaive) == "naive");
  CHECK(sampler_kind_from_string("manifold") == SamplerKind::kManifold);
  CHECK(sampler_kind_from_string("naive") == SamplerKind::kNaive);
  CHECK_THROWS_AS(sampler_kind_from_string("other"), InputError);
}

}  // TEST_SUITE
