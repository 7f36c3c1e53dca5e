#include <doctest.h>

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "helpers.hpp"
#include "scenefit/config.hpp"
#include "scenefit/error.hpp"

using namespace scenefit;
using nlohmann::json;
using scenefit::testing::TempDir;

namespace {

RunConfig sample_config() {
  RunConfig cfg;
  cfg.paths.skeleton = "data/skeleton_template.json";
  cfg.paths.manifold = "data/pose_manifold.json";
  cfg.paths.scene = "data/example/scene.ply";
  cfg.paths.observations = "data/example/observations.json";
  cfg.paths.contacts = "data/example/contacts.json";
  cfg.paths.trajectory = "data/example/gt_trajectory.json";
  cfg.seed = 42;
  cfg.out = "results";
  cfg.threads = 2;
  cfg.stage.n_sam = 250;
  cfg.stage.optimizer.learning_rate = 1.0;
  cfg.weights.lambda_con = 0.02;
  cfg.annotate.smooth_sigma = 0.05;
  cfg.bench.scenarios = 7;
  cfg.bench.suite = "no_Lsli";
  cfg.dump_surfaces = true;
  return cfg;
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("configs round-trip through json untouched") {
  const RunConfig cfg = sample_config();
  const json doc = run_config_to_json(cfg);
  const RunConfig back = run_config_from_json(doc, "<test>");
  CHECK(back.paths.scene == cfg.paths.scene);
  CHECK(back.paths.trajectory == cfg.paths.trajectory);
  CHECK(back.seed == cfg.seed);
  CHECK(back.out == cfg.out);
  CHECK(back.threads == cfg.threads);
  CHECK(back.dump_surfaces == cfg.dump_surfaces);
  CHECK(back.stage.n_sam == cfg.stage.n_sam);
  CHECK(back.stage.optimizer.learning_rate == cfg.stage.optimizer.learning_rate);
  CHECK(back.weights.lambda_con == cfg.weights.lambda_con);
  CHECK(back.annotate.smooth_sigma == cfg.annotate.smooth_sigma);
  CHECK(back.bench.scenarios == cfg.bench.scenarios);
  CHECK(back.bench.suite == cfg.bench.suite);
}

TEST_CASE("defaults carry the documented values") {
  const RunConfig cfg;
  CHECK(cfg.stage.T == 5);
  CHECK(cfg.stage.n_sam == 1000);
  CHECK(cfg.stage.U == 3);
  CHECK(cfg.stage.iterations == 1);
  CHECK(cfg.stage.gamma == 5);
  CHECK(cfg.stage.smoothing_sigma_frames == 1.0);
  CHECK(cfg.stage.sigma_latent == 0.1);
  CHECK(cfg.stage.psi_max == 10);
  CHECK(cfg.stage.sampler == SamplerKind::kManifold);
  CHECK(cfg.stage.confidence_merge);
  CHECK(cfg.weights.lambda_2d == 1.0);
  CHECK(cfg.weights.lambda_smooth == 0.01);
  CHECK(cfg.weights.lambda_con == 0.01);
  CHECK(cfg.weights.lambda_sli == 0.05);
  CHECK(cfg.weights.lambda_data == 0.1);
  CHECK(cfg.threads == 1);
  CHECK(!cfg.seed.has_value());
  CHECK(!cfg.dump_surfaces);
}

TEST_CASE("unknown keys are rejected at every level") {
  json doc = run_config_to_json(RunConfig{});
  doc["surprise"] = 1;
  CHECK_THROWS_AS(run_config_from_json(doc, "<t>"), InputError);
  doc = run_config_to_json(RunConfig{});
  doc["stage"]["surprise"] = 1;
  CHECK_THROWS_AS(run_config_from_json(doc, "<t>"), InputError);
  doc = run_config_to_json(RunConfig{});
  doc["weights"]["lambda_extra"] = 1;
  CHECK_THROWS_AS(run_config_from_json(doc, "<t>"), InputError);
  doc = run_config_to_json(RunConfig{});
  doc["paths"]["shader"] = "x";
  CHECK_THROWS_AS(run_config_from_json(doc, "<t>"), InputError);
}

TEST_CASE("foreign formats and versions are rejected") {
  json doc = run_config_to_json(RunConfig{});
  doc["version"] = 99;
  CHECK_THROWS_AS(run_config_from_json(doc, "<t>"), InputError);
  doc = run_config_to_json(RunConfig{});
  doc["format"] = "scenefit.scene";
  CHECK_THROWS_AS(run_config_from_json(doc, "<t>"), InputError);
}

TEST_CASE("dotted overrides reach into nested sections") {
  json doc = run_config_to_json(RunConfig{});
  apply_override(doc, "stage.n_sam=200");
  apply_override(doc, "weights.lambda_con=0");
  apply_override(doc, "paths.scene=other.ply");
  apply_override(doc, "stage.confidence_merge=false");
  apply_override(doc, "threads=8");
  const RunConfig cfg = run_config_from_json(doc, "<t>");
  CHECK(cfg.stage.n_sam == 200);
  CHECK(cfg.weights.lambda_con == 0.0);
  CHECK(cfg.paths.scene == "other.ply");
  CHECK(!cfg.stage.confidence_merge);
  CHECK(cfg.threads == 8);
}

TEST_CASE("override values parse as json with a string fallback") {
  json doc = run_config_to_json(RunConfig{});
  apply_override(doc, "bench.suite=no_Lcon");  // bare word stays a string
  CHECK(doc["bench"]["suite"] == "no_Lcon");
  apply_override(doc, R"(bench.suite="quoted")");  // valid json string
  CHECK(doc["bench"]["suite"] == "quoted");
  apply_override(doc, "stage.sigma_latent=0.25");
  CHECK(doc["stage"]["sigma_latent"] == 0.25);
  // Only the first '=' splits; the rest belongs to the value.
  apply_override(doc, "paths.scene=a=b.ply");
  CHECK(doc["paths"]["scene"] == "a=b.ply");
}

TEST_CASE("malformed overrides are input errors") {
  json doc = run_config_to_json(RunConfig{});
  CHECK_THROWS_AS(apply_override(doc, "stage.no_such_knob=3"), InputError);
  CHECK_THROWS_AS(apply_override(doc, "no_equals_sign"), InputError);
  CHECK_THROWS_AS(apply_override(doc, "nonexistent.section.deep=1"), InputError);
}

TEST_CASE("config files load with overrides applied on top") {
  TempDir dir("config");
  const RunConfig cfg = sample_config();
  save_run_config(cfg, dir / "run.json");
  const RunConfig loaded =
      load_run_config(dir / "run.json", {"stage.n_sam=64", "seed=7"});
  CHECK(loaded.stage.n_sam == 64);
  CHECK(loaded.seed == 7);
  CHECK(loaded.paths.scene == cfg.paths.scene);  // untouched fields persist
  CHECK_THROWS_AS(load_run_config(dir / "missing.json"), InputError);
  CHECK_THROWS_AS(load_run_config(dir / "run.json", {"bad.key=1"}), InputError);
}

TEST_CASE("validation rejects unusable run settings") {
  RunConfig cfg = sample_config();
  cfg.threads = 0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = sample_config();
  cfg.weights.lambda_2d = -0.5;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = sample_config();
  cfg.bench.scenarios = 0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = sample_config();
  cfg.bench.runs = 0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = sample_config();
  cfg.stage.T = 0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = sample_config();
  cfg.annotate.fp_rate = 1.5;
  CHECK_THROWS_AS(cfg.validate(), InputError);
}

TEST_CASE("an absent seed survives the round trip as absent") {
  RunConfig cfg;
  cfg.seed.reset();
  const json doc = run_config_to_json(cfg);
  const RunConfig back = run_config_from_json(doc, "<t>");
  CHECK(!back.seed.has_value());
}

TEST_CASE("saving creates parent directories as needed") {
  TempDir dir("confignest");
  const std::filesystem::path nested = dir / "a" / "b" / "run.json";
  save_run_config(sample_config(), nested);
  CHECK(std::filesystem::exists(nested));
  const RunConfig back = load_run_config(nested);
  CHECK(back.threads == 2);
}

}  // TEST_SUITE
