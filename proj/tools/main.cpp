// Command-line front end: contact annotation, trajectory optimization, and
// synthetic benchmarking / ablation over generated scenes. All subcommands
// read one JSON config (overridable per flag) and write their artifacts
// atomically under the output directory.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scenefit/ablation.hpp"
#include "scenefit/config.hpp"
#include "scenefit/contacts.hpp"
#include "scenefit/error.hpp"
#include "scenefit/io.hpp"
#include "scenefit/kinematics.hpp"
#include "scenefit/manifold.hpp"
#include "scenefit/metrics.hpp"
#include "scenefit/pipeline.hpp"
#include "scenefit/rng.hpp"
#include "scenefit/scenario.hpp"
#include "scenefit/scene.hpp"
#include "scenefit/skeleton.hpp"

namespace {

using namespace scenefit;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitInput = 2;

struct CliOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
};

/// Config file -> dotted-key overrides -> dedicated flags, in that order.
RunConfig resolve_config(const CliOptions& opt) {
  RunConfig cfg = load_run_config(opt.config_path, opt.overrides);
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.out) cfg.out = *opt.out;
  if (opt.threads) cfg.threads = *opt.threads;
  cfg.validate();
  return cfg;
}

std::uint64_t require_seed(const RunConfig& cfg) {
  if (!cfg.seed) throw InputError("no seed given: set \"seed\" in the config or pass --seed");
  return *cfg.seed;
}

std::filesystem::path require_path(const std::filesystem::path& p, const char* what) {
  if (p.empty()) throw InputError(std::string("config lacks paths.") + what);
  return p;
}

// ---------------------------------------------------------------------------
// annotate: trajectory + scene -> contact labels (+ optional frustum grid)

int cmd_annotate(const CliOptions& opt) {
  const RunConfig cfg = resolve_config(opt);
  const std::uint64_t seed = require_seed(cfg);

  const SkeletonTemplate tmpl = load_skeleton(require_path(cfg.paths.skeleton, "skeleton"));
  const TrajectoryFile traj = load_trajectory(require_path(cfg.paths.trajectory, "trajectory"));
  const ScenePointCloud cloud = load_point_cloud(require_path(cfg.paths.scene, "scene"));
  const SceneIndex scene(cloud);

  std::vector<MatrixX3d> surfaces;
  surfaces.reserve(traj.states.size());
  for (const KinematicState& s : traj.states)
    surfaces.push_back(body_surface(tmpl, compute_pose(tmpl, s, traj.h), traj.h));

  ContactsFile contacts;
  contacts.body = annotate_body_contacts(surfaces, scene, cfg.annotate.params);
  if (cfg.annotate.transfer_env) {
    contacts.env = transfer_env_contacts(contacts.body, surfaces, scene);
    if (cfg.annotate.smooth_sigma > 0.0)
      for (Eigen::VectorXd& labels : contacts.env)
        labels = smooth_point_labels(labels, scene, cfg.annotate.smooth_sigma);
  }
  if (cfg.annotate.fp_rate > 0.0 || cfg.annotate.fn_rate > 0.0) {
    contacts.body = corrupt_labels(contacts.body, cfg.annotate.fp_rate, cfg.annotate.fn_rate,
                                   derive_seed(seed, 0x626f6479ULL));
    if (!contacts.env.empty())
      contacts.env = corrupt_labels(contacts.env, cfg.annotate.fp_rate, cfg.annotate.fn_rate,
                                    derive_seed(seed, 0x656e76ULL));
  }

  const std::filesystem::path contacts_path = cfg.out / "contacts.json";
  save_contacts(contacts, contacts_path);

  std::size_t body_hits = 0;
  for (const Eigen::VectorXd& labels : contacts.body)
    body_hits += effective_contacts(labels).size();
  std::cout << "annotated " << traj.states.size() << " frames, " << body_hits
            << " body contact labels -> " << contacts_path.string() << "\n";

  if (cfg.annotate.grid) {
    // The grid needs intrinsics; take them from the observations file.
    const ObservationsFile obs =
        load_observations(require_path(cfg.paths.observations, "observations"));
    int dropped = 0;
    const FrustumGrid grid = voxelize(cloud.points, obs.cam, cfg.annotate.grid_spec, &dropped);
    const std::filesystem::path grid_path = cfg.out / "scene_grid.bin";
    save_grid(grid, grid_path);
    std::cout << "voxelized " << grid.total() << " points (" << dropped
              << " outside the frustum) -> " << grid_path.string() << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// optimize: observations + scene + contacts -> trajectory result

int cmd_optimize(const CliOptions& opt) {
  const RunConfig cfg = resolve_config(opt);
  const std::uint64_t seed = require_seed(cfg);

  const SkeletonTemplate tmpl = load_skeleton(require_path(cfg.paths.skeleton, "skeleton"));
  const PoseManifold manifold = load_manifold(require_path(cfg.paths.manifold, "manifold"));
  const ScenePointCloud cloud = load_point_cloud(require_path(cfg.paths.scene, "scene"));
  const SceneIndex scene(cloud);
  const ObservationsFile obs =
      load_observations(require_path(cfg.paths.observations, "observations"));
  if (obs.init.empty())
    throw InputError("observations file carries no per-frame \"init\" states to start from");
  const ContactsFile contacts = load_contacts(require_path(cfg.paths.contacts, "contacts"));
  if (contacts.body.size() != obs.obs.size())
    throw InputError("contacts cover " + std::to_string(contacts.body.size()) + " frames, " +
                     "observations " + std::to_string(obs.obs.size()));

  PipelineInputs in;
  in.tmpl = &tmpl;
  in.manifold = &manifold;
  in.scene = &scene;
  in.cam = obs.cam;
  in.phi0 = obs.init;
  in.obs = obs.obs;
  in.contacts = frame_contacts_from_labels(contacts.body, contacts.env);

  StageConfig stage = cfg.stage;
  stage.T = static_cast<int>(obs.obs.size());  // the window is the sequence

  const auto t0 = std::chrono::steady_clock::now();
  const TrajectoryResult result = run_pipeline(in, cfg.weights, stage, seed, cfg.threads);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const std::filesystem::path result_path = cfg.out / "result.json";
  save_result(result, seed, result_path);

  if (cfg.dump_surfaces) {
    char name[32];
    for (std::size_t t = 0; t < result.phi_ref.size(); ++t) {
      std::snprintf(name, sizeof name, "surface_%03zu.ply", t);
      const BodyPose pose = compute_pose(tmpl, result.phi_ref[t], result.h);
      save_ply(ScenePointCloud{body_surface(tmpl, pose, result.h)}, cfg.out / name);
    }
    std::cout << "wrote " << result.phi_ref.size() << " surface dumps under " << cfg.out.string()
              << "\n";
  }

  bool any_exhausted = false;
  for (const FrameSampleStats& s : result.diagnostics.stage2) any_exhausted |= s.psi_exhausted;
  std::cout << "optimized " << obs.obs.size() << " frames in " << elapsed << " s: h = " << result.h
            << ", stage-1 loss " << result.diagnostics.stage1_initial_loss << " -> "
            << result.diagnostics.stage1_final_loss
            << (any_exhausted ? " (sampling fallback on some frames)" : "") << " -> "
            << result_path.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// bench: synthetic scenarios -> metric table

std::vector<Scenario> build_scenarios(const SkeletonTemplate& tmpl, const BenchConfig& bench,
                                      std::uint64_t seed) {
  std::vector<Scenario> scenarios;
  scenarios.reserve(static_cast<std::size_t>(bench.scenarios));
  for (int s = 0; s < bench.scenarios; ++s) {
    ScenarioParams params;
    params.kind = bench.kind;
    params.frames = bench.frames;
    params.fps = bench.fps;
    params.keypoint_noise_px = bench.keypoint_noise_px;
    params.occlusion_rate = bench.occlusion_rate;
    params.point_spacing = bench.point_spacing;
    params.seed = derive_seed(seed, 0x7363656eULL, static_cast<std::uint64_t>(s));
    scenarios.push_back(make_scenario(tmpl, params));
  }
  return scenarios;
}

void export_scenario_inputs(const Scenario& sc, int index, const std::filesystem::path& dir) {
  const std::filesystem::path sub = dir / ("scenario_" + std::to_string(index));
  save_ply(sc.scene, sub / "scene.ply");
  save_contacts(sc.gt_contacts, sub / "contacts.json");
  TrajectoryFile gt;
  gt.h = sc.gt_scale.h;
  gt.states = sc.gt_states;
  save_trajectory(gt, sub / "gt_trajectory.json");

  ObservationsFile obs;
  obs.cam = sc.cam;
  obs.fps = sc.fps;
  obs.obs = sc.obs;
  InitParams init;
  init.seed = derive_seed(sc.seed, 0x696e6974ULL);
  obs.init = make_initial_states(sc, init);
  save_observations(obs, sub / "observations.json");
}

struct BenchRow {
  std::string scenario;
  std::uint64_t seed = 0;
  double h_pred = 1.0;
  double h_err = 0.0;
  double runtime_s = 0.0;
  bool any_psi_exhausted = false;
  MetricReport metrics;
};

// Timings go to the console only; the CSV and summary must be byte-identical
// when the same config and seed are run twice.
void write_bench_csv(const std::vector<BenchRow>& rows, const std::filesystem::path& path) {
  std::string text = "scenario,seed,h_pred,h_err,psi_exhausted," + metric_csv_header() + "\n";
  char buf[128];
  for (const BenchRow& r : rows) {
    std::snprintf(buf, sizeof(buf), ",%.9g,%.9g,%d,", r.h_pred, r.h_err,
                  r.any_psi_exhausted ? 1 : 0);
    text += r.scenario + "," + std::to_string(r.seed) + buf + metric_csv_row(r.metrics) + "\n";
  }
  atomic_write_text(path, text);
}

void write_bench_summary(const std::vector<BenchRow>& rows, const std::filesystem::path& path) {
  struct Stat {
    double sum = 0.0, sq = 0.0;
    int n = 0;
    void add(double v) { sum += v; sq += v * v; ++n; }
    double mean() const { return n ? sum / n : 0.0; }
    double stdev() const {
      if (n < 2) return 0.0;
      const double m = mean();
      return std::sqrt(std::max(0.0, sq / n - m * m));
    }
  };
  const std::vector<std::pair<std::string, double BenchRow::*>> scalar_fields = {
      {"h_err", &BenchRow::h_err}};
  const std::vector<std::pair<std::string, double MetricReport::*>> metric_fields = {
      {"mpjpe_mm", &MetricReport::mpjpe_mm},       {"pa_mpjpe_mm", &MetricReport::pa_mpjpe_mm},
      {"pck_pct", &MetricReport::pck_pct},         {"pa_pck_pct", &MetricReport::pa_pck_pct},
      {"pve_mm", &MetricReport::pve_mm},           {"pa_pve_mm", &MetricReport::pa_pve_mm},
      {"trans_err_m", &MetricReport::trans_err_m}, {"bone_len_err_m", &MetricReport::bone_len_err_m},
      {"non_penet_pct", &MetricReport::non_penet_pct}, {"e_smooth_mm", &MetricReport::e_smooth_mm},
      {"sliding_err_mm", &MetricReport::sliding_err_mm}};

  nlohmann::json metrics;
  for (const auto& [name, member] : scalar_fields) {
    Stat st;
    for (const BenchRow& r : rows) st.add(r.*member);
    metrics[name] = {{"mean", st.mean()}, {"std", st.stdev()}, {"n", st.n}};
  }
  for (const auto& [name, member] : metric_fields) {
    Stat st;
    for (const BenchRow& r : rows) st.add(r.metrics.*member);
    metrics[name] = {{"mean", st.mean()}, {"std", st.stdev()}, {"n", st.n}};
  }
  nlohmann::json doc;
  doc["format"] = "scenefit.bench_summary";
  doc["version"] = 1;
  doc["rows"] = rows.size();
  doc["metrics"] = std::move(metrics);
  atomic_write_text(path, doc.dump(2) + "\n");
}

int cmd_bench(const CliOptions& opt) {
  const RunConfig cfg = resolve_config(opt);
  const std::uint64_t seed = require_seed(cfg);

  const SkeletonTemplate tmpl = load_skeleton(require_path(cfg.paths.skeleton, "skeleton"));
  const PoseManifold manifold = load_manifold(require_path(cfg.paths.manifold, "manifold"));
  const std::vector<Scenario> scenarios = build_scenarios(tmpl, cfg.bench, seed);

  std::vector<BenchRow> rows;
  for (std::size_t si = 0; si < scenarios.size(); ++si) {
    const Scenario& sc = scenarios[si];
    if (cfg.bench.export_inputs) export_scenario_inputs(sc, static_cast<int>(si), cfg.out);
    const SceneIndex scene(sc.scene);
    const std::vector<FrameContacts> contacts =
        frame_contacts_from_labels(sc.gt_contacts.body, sc.gt_contacts.env);

    for (int run = 0; run < cfg.bench.runs; ++run) {
      const std::uint64_t run_seed =
          derive_seed(seed, static_cast<std::uint64_t>(si), static_cast<std::uint64_t>(run));
      InitParams init;
      init.depth_offset_m = cfg.bench.depth_offset_m;
      init.seed = derive_seed(run_seed, 0x696e6974ULL);

      PipelineInputs in;
      in.tmpl = &tmpl;
      in.manifold = &manifold;
      in.scene = &scene;
      in.cam = sc.cam;
      in.phi0 = make_initial_states(sc, init);
      in.obs = sc.obs;
      in.contacts = contacts;

      StageConfig stage = cfg.stage;
      stage.T = static_cast<int>(sc.obs.size());

      const auto t0 = std::chrono::steady_clock::now();
      const TrajectoryResult result = run_pipeline(in, cfg.weights, stage, run_seed, cfg.threads);
      const auto t1 = std::chrono::steady_clock::now();

      BenchRow row;
      row.scenario = to_string(sc.kind) + "#" + std::to_string(si);
      row.seed = run_seed;
      row.h_pred = result.h;
      row.h_err = std::abs(result.h - sc.gt_scale.h);
      row.runtime_s = std::chrono::duration<double>(t1 - t0).count();
      for (const FrameSampleStats& s : result.diagnostics.stage2)
        row.any_psi_exhausted |= s.psi_exhausted;
      row.metrics = compute_metrics(tmpl, result.phi_ref, result.h, sc);
      rows.push_back(std::move(row));
      std::cout << "bench " << rows.back().scenario << " seed " << run_seed << ": mpjpe "
                << rows.back().metrics.mpjpe_mm << " mm, h_err " << rows.back().h_err << " ("
                << rows.back().runtime_s << " s)\n";
    }
  }

  write_bench_csv(rows, cfg.out / "bench.csv");
  write_bench_summary(rows, cfg.out / "bench_summary.json");
  std::cout << rows.size() << " runs -> " << (cfg.out / "bench.csv").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// ablate: variant sweep over the same synthetic scenarios

int cmd_ablate(const CliOptions& opt) {
  const RunConfig cfg = resolve_config(opt);
  const std::uint64_t seed = require_seed(cfg);

  const SkeletonTemplate tmpl = load_skeleton(require_path(cfg.paths.skeleton, "skeleton"));
  const PoseManifold manifold = load_manifold(require_path(cfg.paths.manifold, "manifold"));
  const std::vector<Scenario> scenarios = build_scenarios(tmpl, cfg.bench, seed);

  std::vector<std::uint64_t> seeds;
  for (int run = 0; run < cfg.bench.runs; ++run)
    seeds.push_back(derive_seed(seed, 0x61626c8aULL, static_cast<std::uint64_t>(run)));

  const std::vector<AblationRow> rows = run_ablation(cfg.bench.suite, tmpl, manifold, scenarios,
                                                     seeds, cfg.stage, cfg.weights, cfg.threads);
  write_ablation_csv(rows, cfg.out / "ablation.csv");
  write_ablation_summary(rows, cfg.out / "ablation_summary.json");
  std::cout << "suite " << cfg.bench.suite << ": " << rows.size() << " runs -> "
            << (cfg.out / "ablation.csv").string() << "\n";
  return kExitOk;
}

void add_common_flags(CLI::App* cmd, CliOptions& opt) {
  cmd->add_option("-c,--config", opt.config_path, "JSON run configuration")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--set", opt.overrides,
                  "dotted-key config override (e.g. --set stage.n_sam=200), repeatable");
  cmd->add_option("--seed", opt.seed, "RNG seed (overrides the config)");
  cmd->add_option("--out", opt.out, "output directory (overrides the config)");
  cmd->add_option("--threads", opt.threads, "worker threads (overrides the config)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scene-aware monocular trajectory optimizer"};
  app.require_subcommand(1);

  CliOptions opt;
  int (*handler)(const CliOptions&) = nullptr;

  CLI::App* annotate =
      app.add_subcommand("annotate", "label body/scene contacts along a trajectory");
  add_common_flags(annotate, opt);
  annotate->callback([&] { handler = cmd_annotate; });

  CLI::App* optimize = app.add_subcommand("optimize", "recover trajectory, scale and poses");
  add_common_flags(optimize, opt);
  optimize->callback([&] { handler = cmd_optimize; });

  CLI::App* bench = app.add_subcommand("bench", "score the pipeline on synthetic scenes");
  add_common_flags(bench, opt);
  bench->callback([&] { handler = cmd_bench; });

  CLI::App* ablate = app.add_subcommand("ablate", "run an ablation suite on synthetic scenes");
  add_common_flags(ablate, opt);
  ablate->callback([&] { handler = cmd_ablate; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    return handler(opt);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
