#include "scenefit/config.hpp"

#include <fstream>
#include <initializer_list>

#include "scenefit/error.hpp"
#include "scenefit/io.hpp"

namespace scenefit {
namespace {

constexpr const char* kConfigFormat = "scenefit.config";
constexpr int kSchemaVersion = 1;

/// Rejects keys outside the allowed set so config typos fail loudly instead
/// of silently keeping a default.
void expect_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                 const std::string& origin) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) {
        known = true;
        break;
      }
    if (!known) throw InputError(origin + ": unknown key \"" + item.key() + "\"");
  }
}

template <typename T>
void read_field(const nlohmann::json& obj, const char* key, T& out, const std::string& origin) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(origin + "." + key + ": " + e.what());
  }
}

void read_path(const nlohmann::json& obj, const char* key, std::filesystem::path& out,
               const std::string& origin) {
  std::string s = out.string();
  read_field(obj, key, s, origin);
  out = s;
}

nlohmann::json paths_to_json(const PathsConfig& p) {
  return {{"skeleton", p.skeleton.string()},     {"manifold", p.manifold.string()},
          {"scene", p.scene.string()},           {"observations", p.observations.string()},
          {"contacts", p.contacts.string()},     {"trajectory", p.trajectory.string()}};
}

void paths_from_json(const nlohmann::json& obj, PathsConfig& p, const std::string& origin) {
  expect_keys(obj, {"skeleton", "manifold", "scene", "observations", "contacts", "trajectory"},
              origin);
  read_path(obj, "skeleton", p.skeleton, origin);
  read_path(obj, "manifold", p.manifold, origin);
  read_path(obj, "scene", p.scene, origin);
  read_path(obj, "observations", p.observations, origin);
  read_path(obj, "contacts", p.contacts, origin);
  read_path(obj, "trajectory", p.trajectory, origin);
}

nlohmann::json stage_to_json(const StageConfig& s) {
  return {{"T", s.T},
          {"n_sam", s.n_sam},
          {"U", s.U},
          {"iterations", s.iterations},
          {"gamma", s.gamma},
          {"smoothing_sigma_frames", s.smoothing_sigma_frames},
          {"sigma_latent", s.sigma_latent},
          {"psi_max", s.psi_max},
          {"sampler", to_string(s.sampler)},
          {"confidence_merge", s.confidence_merge},
          {"enable_sampling", s.enable_sampling},
          {"enable_refinement", s.enable_refinement},
          {"optimizer",
           {{"learning_rate", s.optimizer.learning_rate},
            {"max_iterations", s.optimizer.max_iterations},
            {"tolerance", s.optimizer.tolerance},
            {"max_backtracks", s.optimizer.max_backtracks}}}};
}

void stage_from_json(const nlohmann::json& obj, StageConfig& s, const std::string& origin) {
  expect_keys(obj,
              {"T", "n_sam", "U", "iterations", "gamma", "smoothing_sigma_frames", "sigma_latent",
               "psi_max", "sampler", "confidence_merge", "enable_sampling", "enable_refinement",
               "optimizer"},
              origin);
  read_field(obj, "T", s.T, origin);
  read_field(obj, "n_sam", s.n_sam, origin);
  read_field(obj, "U", s.U, origin);
  read_field(obj, "iterations", s.iterations, origin);
  read_field(obj, "gamma", s.gamma, origin);
  read_field(obj, "smoothing_sigma_frames", s.smoothing_sigma_frames, origin);
  read_field(obj, "sigma_latent", s.sigma_latent, origin);
  read_field(obj, "psi_max", s.psi_max, origin);
  if (obj.contains("sampler")) s.sampler = sampler_kind_from_string(obj.at("sampler").get<std::string>());
  read_field(obj, "confidence_merge", s.confidence_merge, origin);
  read_field(obj, "enable_sampling", s.enable_sampling, origin);
  read_field(obj, "enable_refinement", s.enable_refinement, origin);
  if (obj.contains("optimizer")) {
    const nlohmann::json& opt = obj.at("optimizer");
    const std::string sub = origin + ".optimizer";
    expect_keys(opt, {"learning_rate", "max_iterations", "tolerance", "max_backtracks"}, sub);
    read_field(opt, "learning_rate", s.optimizer.learning_rate, sub);
    read_field(opt, "max_iterations", s.optimizer.max_iterations, sub);
    read_field(opt, "tolerance", s.optimizer.tolerance, sub);
    read_field(opt, "max_backtracks", s.optimizer.max_backtracks, sub);
  }
}

nlohmann::json weights_to_json(const LossWeights& w) {
  return {{"lambda_2d", w.lambda_2d},
          {"lambda_smooth", w.lambda_smooth},
          {"lambda_con", w.lambda_con},
          {"lambda_sli", w.lambda_sli},
          {"lambda_data", w.lambda_data}};
}

void weights_from_json(const nlohmann::json& obj, LossWeights& w, const std::string& origin) {
  expect_keys(obj, {"lambda_2d", "lambda_smooth", "lambda_con", "lambda_sli", "lambda_data"},
              origin);
  read_field(obj, "lambda_2d", w.lambda_2d, origin);
  read_field(obj, "lambda_smooth", w.lambda_smooth, origin);
  read_field(obj, "lambda_con", w.lambda_con, origin);
  read_field(obj, "lambda_sli", w.lambda_sli, origin);
  read_field(obj, "lambda_data", w.lambda_data, origin);
}

nlohmann::json annotate_to_json(const AnnotateConfig& a) {
  return {{"dist_threshold", a.params.dist_threshold},
          {"vel_threshold", a.params.vel_threshold},
          {"fps", a.params.fps},
          {"transfer_env", a.transfer_env},
          {"smooth_sigma", a.smooth_sigma},
          {"fp_rate", a.fp_rate},
          {"fn_rate", a.fn_rate},
          {"grid", a.grid},
          {"grid_spec",
           {{"nx", a.grid_spec.nx},
            {"ny", a.grid_spec.ny},
            {"nz", a.grid_spec.nz},
            {"z_near", a.grid_spec.z_near},
            {"z_far", a.grid_spec.z_far}}}};
}

void annotate_from_json(const nlohmann::json& obj, AnnotateConfig& a, const std::string& origin) {
  expect_keys(obj,
              {"dist_threshold", "vel_threshold", "fps", "transfer_env", "smooth_sigma", "fp_rate",
               "fn_rate", "grid", "grid_spec"},
              origin);
  read_field(obj, "dist_threshold", a.params.dist_threshold, origin);
  read_field(obj, "vel_threshold", a.params.vel_threshold, origin);
  read_field(obj, "fps", a.params.fps, origin);
  read_field(obj, "transfer_env", a.transfer_env, origin);
  read_field(obj, "smooth_sigma", a.smooth_sigma, origin);
  read_field(obj, "fp_rate", a.fp_rate, origin);
  read_field(obj, "fn_rate", a.fn_rate, origin);
  read_field(obj, "grid", a.grid, origin);
  if (obj.contains("grid_spec")) {
    const nlohmann::json& g = obj.at("grid_spec");
    const std::string sub = origin + ".grid_spec";
    expect_keys(g, {"nx", "ny", "nz", "z_near", "z_far"}, sub);
    read_field(g, "nx", a.grid_spec.nx, sub);
    read_field(g, "ny", a.grid_spec.ny, sub);
    read_field(g, "nz", a.grid_spec.nz, sub);
    read_field(g, "z_near", a.grid_spec.z_near, sub);
    read_field(g, "z_far", a.grid_spec.z_far, sub);
  }
}

nlohmann::json bench_to_json(const BenchConfig& b) {
  return {{"kind", to_string(b.kind)},
          {"scenarios", b.scenarios},
          {"runs", b.runs},
          {"frames", b.frames},
          {"fps", b.fps},
          {"keypoint_noise_px", b.keypoint_noise_px},
          {"occlusion_rate", b.occlusion_rate},
          {"point_spacing", b.point_spacing},
          {"depth_offset_m", b.depth_offset_m},
          {"export_inputs", b.export_inputs},
          {"suite", b.suite}};
}

void bench_from_json(const nlohmann::json& obj, BenchConfig& b, const std::string& origin) {
  expect_keys(obj,
              {"kind", "scenarios", "runs", "frames", "fps", "keypoint_noise_px", "occlusion_rate",
               "point_spacing", "depth_offset_m", "export_inputs", "suite"},
              origin);
  if (obj.contains("kind")) b.kind = scene_kind_from_string(obj.at("kind").get<std::string>());
  read_field(obj, "scenarios", b.scenarios, origin);
  read_field(obj, "runs", b.runs, origin);
  read_field(obj, "frames", b.frames, origin);
  read_field(obj, "fps", b.fps, origin);
  read_field(obj, "keypoint_noise_px", b.keypoint_noise_px, origin);
  read_field(obj, "occlusion_rate", b.occlusion_rate, origin);
  read_field(obj, "point_spacing", b.point_spacing, origin);
  read_field(obj, "depth_offset_m", b.depth_offset_m, origin);
  read_field(obj, "export_inputs", b.export_inputs, origin);
  read_field(obj, "suite", b.suite, origin);
}

}  // namespace

void AnnotateConfig::validate() const {
  params.validate();
  if (!(smooth_sigma >= 0.0)) throw InputError("annotate.smooth_sigma must be >= 0");
  if (fp_rate < 0.0 || fp_rate > 1.0 || fn_rate < 0.0 || fn_rate > 1.0)
    throw InputError("annotate corruption rates must be in [0, 1]");
  if (grid) grid_spec.validate();
}

void BenchConfig::validate() const {
  if (scenarios < 1) throw InputError("bench.scenarios must be >= 1");
  if (runs < 1) throw InputError("bench.runs must be >= 1");
  if (frames < 1) throw InputError("bench.frames must be >= 1");
  if (!(fps > 0.0)) throw InputError("bench.fps must be > 0");
  if (!(keypoint_noise_px >= 0.0)) throw InputError("bench.keypoint_noise_px must be >= 0");
  if (occlusion_rate < 0.0 || occlusion_rate > 1.0)
    throw InputError("bench.occlusion_rate must be in [0, 1]");
  if (!(point_spacing > 0.0)) throw InputError("bench.point_spacing must be > 0");
  if (!(depth_offset_m >= 0.0)) throw InputError("bench.depth_offset_m must be >= 0");
}

void RunConfig::validate() const {
  stage.validate();
  weights.validate();
  annotate.validate();
  bench.validate();
  if (threads < 1) throw InputError("threads must be >= 1");
}

nlohmann::json run_config_to_json(const RunConfig& cfg) {
  nlohmann::json doc;
  doc["format"] = kConfigFormat;
  doc["version"] = kSchemaVersion;
  doc["paths"] = paths_to_json(cfg.paths);
  doc["stage"] = stage_to_json(cfg.stage);
  doc["weights"] = weights_to_json(cfg.weights);
  doc["annotate"] = annotate_to_json(cfg.annotate);
  doc["bench"] = bench_to_json(cfg.bench);
  if (cfg.seed) doc["seed"] = *cfg.seed;
  doc["out"] = cfg.out.string();
  doc["threads"] = cfg.threads;
  doc["dump_surfaces"] = cfg.dump_surfaces;
  return doc;
}

RunConfig run_config_from_json(const nlohmann::json& doc, const std::string& origin) {
  check_format(doc, kConfigFormat, kSchemaVersion, origin);
  expect_keys(doc,
              {"format", "version", "paths", "stage", "weights", "annotate", "bench", "seed",
               "out", "threads", "dump_surfaces"},
              origin);
  RunConfig cfg;
  if (doc.contains("paths")) paths_from_json(doc.at("paths"), cfg.paths, origin + ".paths");
  if (doc.contains("stage")) stage_from_json(doc.at("stage"), cfg.stage, origin + ".stage");
  if (doc.contains("weights"))
    weights_from_json(doc.at("weights"), cfg.weights, origin + ".weights");
  if (doc.contains("annotate"))
    annotate_from_json(doc.at("annotate"), cfg.annotate, origin + ".annotate");
  if (doc.contains("bench")) bench_from_json(doc.at("bench"), cfg.bench, origin + ".bench");
  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned())
      throw InputError(origin + ".seed must be a non-negative integer");
    cfg.seed = doc.at("seed").get<std::uint64_t>();
  }
  read_path(doc, "out", cfg.out, origin);
  read_field(doc, "threads", cfg.threads, origin);
  read_field(doc, "dump_surfaces", cfg.dump_surfaces, origin);
  cfg.validate();
  return cfg;
}

void save_run_config(const RunConfig& cfg, const std::filesystem::path& path) {
  atomic_write_text(path, run_config_to_json(cfg).dump(2) + "\n");
}

RunConfig load_run_config(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  for (const std::string& assignment : overrides) apply_override(doc, assignment);
  return run_config_from_json(doc, path.string());
}

void apply_override(nlohmann::json& doc, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw InputError("override must look like key=value, got \"" + assignment + "\"");
  const std::string key = assignment.substr(0, eq);
  const std::string value_str = assignment.substr(eq + 1);

  std::vector<std::string> segments;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    segments.push_back(key.substr(start, dot == std::string::npos ? dot : dot - start));
    if (segments.back().empty()) throw InputError("empty segment in override key \"" + key + "\"");
    if (dot == std::string::npos) break;
    start = dot + 1;
  }

  // Validate the path against the full schema so typos cannot introduce keys
  // the parser would reject (or worse, silently ignore).
  RunConfig defaults;
  defaults.seed = 0;  // so the schema contains the optional "seed" key
  const nlohmann::json schema = run_config_to_json(defaults);
  const nlohmann::json* node = &schema;
  for (const std::string& seg : segments) {
    if (!node->is_object() || !node->contains(seg))
      throw InputError("unknown config key \"" + key + "\"");
    node = &node->at(seg);
  }

  nlohmann::json value = nlohmann::json::parse(value_str, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = value_str;

  nlohmann::json* cur = &doc;
  for (std::size_t i = 0; i + 1 < segments.size(); ++i) cur = &(*cur)[segments[i]];
  (*cur)[segments.back()] = std::move(value);
}

}  // namespace scenefit
