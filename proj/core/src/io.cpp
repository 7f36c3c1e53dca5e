#include "scenefit/io.hpp"

#include <fstream>

#include "scenefit/error.hpp"

namespace scenefit {
namespace {

constexpr const char* kObservationsFormat = "scenefit.observations";
constexpr const char* kTrajectoryFormat = "scenefit.trajectory";
constexpr const char* kResultFormat = "scenefit.result";
constexpr int kSchemaVersion = 1;

nlohmann::json vec_to_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vec_from_json(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array()) throw InputError(what + " must be an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const auto& e = j[static_cast<std::size_t>(i)];
    if (!e.is_number()) throw InputError(what + "[" + std::to_string(i) + "] is not a number");
    v[i] = e.get<double>();
  }
  return v;
}

Eigen::Vector3d vec3_from_json(const nlohmann::json& j, const std::string& what) {
  const Eigen::VectorXd v = vec_from_json(j, what);
  if (v.size() != 3) throw InputError(what + " must have exactly 3 entries");
  return v.head<3>();
}

nlohmann::json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

nlohmann::json states_to_json(const std::vector<KinematicState>& states) {
  nlohmann::json arr = nlohmann::json::array();
  for (const KinematicState& s : states) arr.push_back(state_to_json(s));
  return arr;
}

std::vector<KinematicState> states_from_json(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array()) throw InputError(what + " must be an array of states");
  std::vector<KinematicState> states;
  states.reserve(j.size());
  for (const auto& e : j) states.push_back(state_from_json(e));
  return states;
}

}  // namespace

void check_format(const nlohmann::json& doc, const std::string& expected_format,
                  int supported_version, const std::string& origin) {
  if (!doc.is_object()) throw InputError(origin + ": top level must be a JSON object");
  if (doc.value("format", std::string()) != expected_format)
    throw InputError(origin + ": missing or wrong \"format\" (expected \"" + expected_format +
                     "\")");
  if (!doc.contains("version") || !doc["version"].is_number_integer())
    throw InputError(origin + ": missing integer \"version\"");
  const int version = doc["version"].get<int>();
  if (version != supported_version)
    throw InputError(origin + ": unsupported " + expected_format + " version " +
                     std::to_string(version) + " (supported: " +
                     std::to_string(supported_version) + ")");
}

nlohmann::json state_to_json(const KinematicState& state) {
  nlohmann::json j;
  j["tau"] = vec_to_json(state.tau);
  j["phi"] = vec_to_json(state.phi);
  j["theta"] = vec_to_json(state.theta);
  return j;
}

KinematicState state_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("state must be a JSON object");
  for (const char* key : {"tau", "phi", "theta"})
    if (!j.contains(key)) throw InputError(std::string("state lacks \"") + key + "\"");
  return KinematicState(vec3_from_json(j["tau"], "tau"), vec3_from_json(j["phi"], "phi"),
                        vec_from_json(j["theta"], "theta"));
}

void save_observations(const ObservationsFile& file, const std::filesystem::path& path) {
  file.cam.validate();
  if (file.init.size() != file.obs.size() && !file.init.empty())
    throw InputError("observations need one initial state per frame (or none)");
  nlohmann::json doc;
  doc["format"] = kObservationsFormat;
  doc["version"] = kSchemaVersion;
  doc["camera"] = {{"fx", file.cam.fx},           {"fy", file.cam.fy}, {"cx", file.cam.cx},
                   {"cy", file.cam.cy},           {"image_w", file.cam.image_w},
                   {"image_h", file.cam.image_h}};
  doc["fps"] = file.fps;
  nlohmann::json frames = nlohmann::json::array();
  for (std::size_t t = 0; t < file.obs.size(); ++t) {
    const Observation2D& o = file.obs[t];
    nlohmann::json frame;
    nlohmann::json kps = nlohmann::json::array();
    for (Eigen::Index k = 0; k < o.keypoints.rows(); ++k)
      kps.push_back({o.keypoints(k, 0), o.keypoints(k, 1)});
    frame["keypoints"] = std::move(kps);
    frame["confidence"] = vec_to_json(o.confidence);
    if (!file.init.empty()) frame["init"] = state_to_json(file.init[t]);
    frames.push_back(std::move(frame));
  }
  doc["frames"] = std::move(frames);
  atomic_write_text(path, doc.dump(2) + "\n");
}

ObservationsFile load_observations(const std::filesystem::path& path) {
  const nlohmann::json doc = load_json_file(path);
  const std::string origin = path.string();
  check_format(doc, kObservationsFormat, kSchemaVersion, origin);
  try {
    ObservationsFile file;
    const nlohmann::json& cam = doc.at("camera");
    file.cam.fx = cam.at("fx").get<double>();
    file.cam.fy = cam.at("fy").get<double>();
    file.cam.cx = cam.at("cx").get<double>();
    file.cam.cy = cam.at("cy").get<double>();
    file.cam.image_w = cam.at("image_w").get<double>();
    file.cam.image_h = cam.at("image_h").get<double>();
    file.cam.validate();
    file.fps = doc.value("fps", 10.0);
    if (!(file.fps > 0.0)) throw InputError("fps must be > 0");
    const nlohmann::json& frames = doc.at("frames");
    if (!frames.is_array()) throw InputError("\"frames\" must be an array");
    for (const auto& frame : frames) {
      const nlohmann::json& kps = frame.at("keypoints");
      if (!kps.is_array()) throw InputError("\"keypoints\" must be an array");
      Observation2D o;
      o.keypoints.resize(static_cast<Eigen::Index>(kps.size()), 2);
      for (Eigen::Index k = 0; k < o.keypoints.rows(); ++k) {
        const auto& row = kps[static_cast<std::size_t>(k)];
        if (!row.is_array() || row.size() != 2)
          throw InputError("keypoint " + std::to_string(k) + " must be [u, v]");
        o.keypoints(k, 0) = row[0].get<double>();
        o.keypoints(k, 1) = row[1].get<double>();
      }
      o.confidence = vec_from_json(frame.at("confidence"), "confidence");
      o.validate(static_cast<int>(o.keypoints.rows()));
      file.obs.push_back(std::move(o));
      if (frame.contains("init")) file.init.push_back(state_from_json(frame["init"]));
    }
    if (!file.init.empty() && file.init.size() != file.obs.size())
      throw InputError("either every frame carries \"init\" or none does");
    return file;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(origin + ": " + e.what());
  } catch (const InputError& e) {
    throw InputError(origin + ": " + std::string(e.what()));
  }
}

void save_trajectory(const TrajectoryFile& file, const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["format"] = kTrajectoryFormat;
  doc["version"] = kSchemaVersion;
  doc["h"] = file.h;
  doc["states"] = states_to_json(file.states);
  atomic_write_text(path, doc.dump(2) + "\n");
}

TrajectoryFile load_trajectory(const std::filesystem::path& path) {
  const nlohmann::json doc = load_json_file(path);
  const std::string origin = path.string();
  check_format(doc, kTrajectoryFormat, kSchemaVersion, origin);
  try {
    TrajectoryFile file;
    file.h = doc.at("h").get<double>();
    if (!(file.h > 0.0)) throw InputError("body scale h must be > 0");
    file.states = states_from_json(doc.at("states"), "states");
    return file;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(origin + ": " + e.what());
  } catch (const InputError& e) {
    throw InputError(origin + ": " + std::string(e.what()));
  }
}

void save_result(const TrajectoryResult& result, std::uint64_t seed,
                 const std::filesystem::path& path) {
  const PipelineDiagnostics& d = result.diagnostics;
  nlohmann::json diag;
  diag["stage1"] = {{"initial_loss", d.stage1_initial_loss},
                    {"final_loss", d.stage1_final_loss},
                    {"iterations", d.stage1_iterations},
                    {"converged", d.stage1_converged},
                    {"contact_warning", d.stage1_contact_warning}};
  nlohmann::json frames = nlohmann::json::array();
  for (const FrameSampleStats& s : d.stage2)
    frames.push_back({{"psi", s.psi},
                      {"psi_exhausted", s.psi_exhausted},
                      {"collision_count", s.collision_count},
                      {"survivor_count", s.survivor_count},
                      {"generated", s.generated},
                      {"best_cost", s.best_cost}});
  diag["stage2"] = {{"frames", std::move(frames)},
                    {"presmooth", states_to_json(d.stage2_presmooth)}};
  diag["stage3"] = {{"initial_loss", d.stage3_initial_loss},
                    {"final_loss", d.stage3_final_loss},
                    {"iterations", d.stage3_iterations}};
  diag["gamma"] = d.gamma;

  nlohmann::json doc;
  doc["format"] = kResultFormat;
  doc["version"] = kSchemaVersion;
  doc["seed"] = seed;
  doc["h"] = result.h;
  doc["states"] = {{"phi0", states_to_json(result.phi0)},
                   {"phi_opt", states_to_json(result.phi_opt)},
                   {"phi_sam_hat", states_to_json(result.phi_sam_hat)},
                   {"phi_ref", states_to_json(result.phi_ref)}};
  doc["diagnostics"] = std::move(diag);
  atomic_write_text(path, doc.dump(2) + "\n");
}

}  // namespace scenefit
