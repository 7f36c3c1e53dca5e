#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "scenefit/atomic_file.hpp"
#include "scenefit/pipeline.hpp"
#include "scenefit/types.hpp"

namespace scenefit {

/// Validates the "format"/"version" envelope every JSON artifact carries;
/// throws InputError naming `origin` on mismatch or unsupported version.
void check_format(const nlohmann::json& doc, const std::string& expected_format,
                  int supported_version, const std::string& origin);

nlohmann::json state_to_json(const KinematicState& state);
KinematicState state_from_json(const nlohmann::json& j);

/// Run input: camera, per-frame simulated detections, and the per-frame
/// initial states the optimizer starts from.
struct ObservationsFile {
  CameraIntrinsics cam;
  double fps = 10.0;
  std::vector<Observation2D> obs;
  std::vector<KinematicState> init;
};

void save_observations(const ObservationsFile& file, const std::filesystem::path& path);
ObservationsFile load_observations(const std::filesystem::path& path);

/// Stand-alone state sequence with its body scale (annotation input, surface
/// dump source).
struct TrajectoryFile {
  double h = 1.0;
  std::vector<KinematicState> states;
};

void save_trajectory(const TrajectoryFile& file, const std::filesystem::path& path);
TrajectoryFile load_trajectory(const std::filesystem::path& path);

/// Full optimizer output (all stages plus diagnostics), versioned schema.
void save_result(const TrajectoryResult& result, std::uint64_t seed,
                 const std::filesystem::path& path);

}  // namespace scenefit
