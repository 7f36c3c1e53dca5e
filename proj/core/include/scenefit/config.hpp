#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "scenefit/contacts.hpp"
#include "scenefit/pipeline.hpp"
#include "scenefit/scenario.hpp"
#include "scenefit/scene.hpp"
#include "scenefit/types.hpp"

namespace scenefit {

/// Input artifact locations; which ones a command requires depends on the
/// command (annotate needs scene + template + trajectory, optimize adds the
/// manifold, observations and contacts, bench/ablate only need assets).
struct PathsConfig {
  std::filesystem::path skeleton;      // template JSON
  std::filesystem::path manifold;      // pose manifold JSON
  std::filesystem::path scene;         // point cloud (.ply / .csv)
  std::filesystem::path observations;  // detections + initial states JSON
  std::filesystem::path contacts;      // contact labels JSON
  std::filesystem::path trajectory;    // state sequence JSON (annotate input)
};

/// Contact annotation settings.
struct AnnotateConfig {
  ContactParams params;
  bool transfer_env = true;   // also project labels onto the scene points
  double smooth_sigma = 0.0;  // spatial blur of environment labels, meters
  double fp_rate = 0.0;       // seeded false-positive flip probability
  double fn_rate = 0.0;       // seeded false-negative flip probability
  bool grid = false;          // additionally dump the frustum occupancy grid
  GridSpec grid_spec;

  void validate() const;
};

/// Synthetic evaluation settings shared by bench and ablate.
struct BenchConfig {
  SceneKind kind = SceneKind::kCombo;
  int scenarios = 3;       // distinct synthetic scenes
  int runs = 3;            // optimizer seeds per scenario
  int frames = 5;
  double fps = 10.0;
  double keypoint_noise_px = 2.0;
  double occlusion_rate = 0.0;
  double point_spacing = 0.04;
  double depth_offset_m = 1.0;  // initialization error along the camera ray
  bool export_inputs = false;   // write per-scenario scene/observations/contacts
  std::string suite = "no_Lcon";  // ablate only

  void validate() const;
};

/// Everything a CLI run needs; serialized as the "scenefit.config" schema.
struct RunConfig {
  PathsConfig paths;
  StageConfig stage;
  LossWeights weights;
  AnnotateConfig annotate;
  BenchConfig bench;
  std::optional<std::uint64_t> seed;  // mandatory at run time (file or --seed)
  std::filesystem::path out = "out";
  int threads = 1;
  bool dump_surfaces = false;  // optimize also writes per-frame surface PLYs

  void validate() const;
};

nlohmann::json run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& doc, const std::string& origin);

void save_run_config(const RunConfig& cfg, const std::filesystem::path& path);

/// Parses the config file and applies `key=value` overrides where the key is
/// a dotted path into the document (e.g. "stage.n_sam=200",
/// "weights.lambda_con=0", "paths.scene=other.ply"). Values parse as JSON
/// first and fall back to strings. Unknown keys throw InputError.
RunConfig load_run_config(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides = {});

/// Applies one dotted-key override to a config document in place.
void apply_override(nlohmann::json& doc, const std::string& assignment);

}  // namespace scenefit
