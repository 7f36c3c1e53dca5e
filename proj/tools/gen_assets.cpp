// Regenerates the committed data assets: the skeleton template, the pose
// manifold fitted to the procedural motion corpus, and a ready-to-run example
// scenario (scene cloud, observations with initial states, oracle contacts,
// ground-truth trajectory, and a config wired to those files).

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "scenefit/config.hpp"
#include "scenefit/contacts.hpp"
#include "scenefit/error.hpp"
#include "scenefit/io.hpp"
#include "scenefit/manifold.hpp"
#include "scenefit/rng.hpp"
#include "scenefit/scenario.hpp"
#include "scenefit/scene.hpp"
#include "scenefit/skeleton.hpp"

namespace {

using namespace scenefit;

constexpr int kCorpusSize = 2000;
constexpr int kManifoldDim = 16;
constexpr std::uint64_t kExampleSeed = 20240915ULL;

void write_example(const SkeletonTemplate& tmpl, const std::filesystem::path& root) {
  const std::filesystem::path dir = root / "example";

  ScenarioParams params;
  params.kind = SceneKind::kCombo;
  params.frames = 5;
  params.keypoint_noise_px = 2.0;
  params.seed = kExampleSeed;
  const Scenario sc = make_scenario(tmpl, params);

  save_ply(sc.scene, dir / "scene.ply");
  save_contacts(sc.gt_contacts, dir / "contacts.json");

  TrajectoryFile gt;
  gt.h = sc.gt_scale.h;
  gt.states = sc.gt_states;
  save_trajectory(gt, dir / "gt_trajectory.json");

  ObservationsFile obs;
  obs.cam = sc.cam;
  obs.fps = sc.fps;
  obs.obs = sc.obs;
  InitParams init;
  init.seed = derive_seed(kExampleSeed, 0x696e6974ULL);
  obs.init = make_initial_states(sc, init);
  save_observations(obs, dir / "observations.json");

  RunConfig cfg;
  // The default descent step is sized for refinement-scale corrections; the
  // meter-scale initialization error of the synthetic scenes needs a larger
  // starting step (backtracking shrinks it as the fit tightens).
  cfg.stage.optimizer.learning_rate = 1.0;
  cfg.stage.optimizer.max_iterations = 2000;
  cfg.paths.skeleton = (root / "skeleton_template.json").generic_string();
  cfg.paths.manifold = (root / "pose_manifold.json").generic_string();
  cfg.paths.scene = (dir / "scene.ply").generic_string();
  cfg.paths.observations = (dir / "observations.json").generic_string();
  cfg.paths.contacts = (dir / "contacts.json").generic_string();
  cfg.paths.trajectory = (dir / "gt_trajectory.json").generic_string();
  cfg.seed = kExampleSeed;
  cfg.out = "out";
  save_run_config(cfg, dir / "config.json");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"regenerate the data assets"};
  std::string out = "data";
  app.add_option("--out", out, "asset directory");
  CLI11_PARSE(app, argc, argv);

  try {
    const std::filesystem::path root(out);
    const SkeletonTemplate tmpl = default_skeleton();
    save_skeleton(tmpl, root / "skeleton_template.json");
    std::cout << "wrote " << (root / "skeleton_template.json").string() << "\n";

    const MotionModel model = make_motion_model(tmpl, kDefaultMotionSeed);
    const Eigen::MatrixXd corpus = make_pose_corpus(model, kCorpusSize, kDefaultMotionSeed);
    const PoseManifold manifold = fit_manifold(corpus, kManifoldDim);
    save_manifold(manifold, root / "pose_manifold.json");
    std::cout << "wrote " << (root / "pose_manifold.json").string() << " (dim "
              << manifold.latent_dim() << ")\n";

    write_example(tmpl, root);
    std::cout << "wrote " << (root / "example").string() << "/\n";
    return 0;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
