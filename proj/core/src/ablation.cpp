#include "scenefit/ablation.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include <json.hpp>

#include "scenefit/atomic_file.hpp"
#include "scenefit/error.hpp"
#include "scenefit/rng.hpp"

namespace scenefit {

std::vector<std::string> ablation_suite_names() {
  return {"sampling_count", "iterations", "naive_vs_manifold", "no_S",   "no_R",
          "no_SR",          "no_Lcon",    "no_Lsli",           "confidence_merge"};
}

std::vector<AblationVariant> ablation_variants(const std::string& suite,
                                               const StageConfig& base_cfg,
                                               const LossWeights& base_weights) {
  std::vector<AblationVariant> out;
  auto add = [&](const std::string& name) -> AblationVariant& {
    out.push_back({name, base_cfg, base_weights});
    return out.back();
  };
  if (suite == "sampling_count") {
    for (int n : {50, 200, 1000, 2000}) add("n" + std::to_string(n)).cfg.n_sam = n;
  } else if (suite == "iterations") {
    for (int it : {0, 1, 2, 3})
      add("iter" + std::to_string(it)).cfg.iterations = it;
  } else if (suite == "naive_vs_manifold") {
    add("manifold").cfg.sampler = SamplerKind::kManifold;
    add("naive").cfg.sampler = SamplerKind::kNaive;
  } else if (suite == "no_S") {
    add("full");
    add("no_S").cfg.enable_sampling = false;
  } else if (suite == "no_R") {
    add("full");
    add("no_R").cfg.enable_refinement = false;
  } else if (suite == "no_SR") {
    add("full");
    AblationVariant& v = add("no_SR");
    v.cfg.enable_sampling = false;
    v.cfg.enable_refinement = false;
  } else if (suite == "no_Lcon") {
    add("full");
    add("no_Lcon").weights.lambda_con = 0.0;
  } else if (suite == "no_Lsli") {
    add("full");
    add("no_Lsli").weights.lambda_sli = 0.0;
  } else if (suite == "confidence_merge") {
    add("merge").cfg.confidence_merge = true;
    add("no_merge").cfg.confidence_merge = false;
  } else {
    throw InputError("unknown ablation suite \"" + suite + "\"");
  }
  return out;
}

std::vector<AblationRow> run_ablation(const std::string& suite, const SkeletonTemplate& tmpl,
                                      const PoseManifold& manifold,
                                      const std::vector<Scenario>& scenarios,
                                      const std::vector<std::uint64_t>& seeds,
                                      const StageConfig& base_cfg,
                                      const LossWeights& base_weights, int threads) {
  const std::vector<AblationVariant> variants = ablation_variants(suite, base_cfg, base_weights);
  std::vector<AblationRow> rows;
  for (std::size_t si = 0; si < scenarios.size(); ++si) {
    const Scenario& sc = scenarios[si];
    const SceneIndex index(sc.scene);
    const std::vector<FrameContacts> contacts =
        frame_contacts_from_labels(sc.gt_contacts.body, sc.gt_contacts.env);
    for (std::uint64_t seed : seeds) {
      InitParams init;
      init.seed = derive_seed(seed, 0x696e6974ULL, sc.seed);
      const std::vector<KinematicState> phi0 = make_initial_states(sc, init);
      PipelineInputs in;
      in.tmpl = &tmpl;
      in.manifold = &manifold;
      in.scene = &index;
      in.cam = sc.cam;
      in.phi0 = phi0;
      in.obs = sc.obs;
      in.contacts = contacts;
      for (const AblationVariant& v : variants) {
        StageConfig cfg = v.cfg;
        cfg.T = static_cast<int>(sc.gt_states.size());
        const auto start = std::chrono::steady_clock::now();
        const TrajectoryResult res = run_pipeline(in, v.weights, cfg, seed, threads);
        const auto stop = std::chrono::steady_clock::now();
        AblationRow row;
        row.suite = suite;
        row.variant = v.name;
        row.scenario = to_string(sc.kind) + "#" + std::to_string(si);
        row.seed = seed;
        row.h_pred = res.h;
        row.h_err = std::abs(res.h - sc.gt_scale.h);
        row.runtime_s = std::chrono::duration<double>(stop - start).count();
        for (const FrameSampleStats& s : res.diagnostics.stage2)
          row.any_psi_exhausted = row.any_psi_exhausted || s.psi_exhausted;
        row.metrics = compute_metrics(tmpl, res.phi_ref, res.h, sc);
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

// Wall-clock timings stay out of the CSV and summary so that reruns with the
// same config and seed produce byte-identical files; `runtime_s` is only for
// console reporting.
void write_ablation_csv(const std::vector<AblationRow>& rows, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "suite,variant,scenario,seed,h_pred,h_err,psi_exhausted," << metric_csv_header() << '\n';
  char buf[128];
  for (const AblationRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g", r.h_pred, r.h_err);
    out << r.suite << ',' << r.variant << ',' << r.scenario << ',' << r.seed << ',' << buf << ','
        << (r.any_psi_exhausted ? 1 : 0) << ',' << metric_csv_row(r.metrics) << '\n';
  }
  atomic_write_text(path, out.str());
}

namespace {

struct Stat {
  double sum = 0.0, sq = 0.0;
  long n = 0;
  void add(double v) {
    sum += v;
    sq += v * v;
    ++n;
  }
  double mean() const { return n ? sum / n : 0.0; }
  double stdev() const {
    if (n < 2) return 0.0;
    const double m = mean();
    return std::sqrt(std::max(0.0, sq / n - m * m));
  }
};

}  // namespace

void write_ablation_summary(const std::vector<AblationRow>& rows,
                            const std::filesystem::path& path) {
  using nlohmann::json;
  std::map<std::string, std::map<std::string, Stat>> agg;  // variant -> metric -> stat
  for (const AblationRow& r : rows) {
    auto& m = agg[r.variant];
    m["mpjpe_mm"].add(r.metrics.mpjpe_mm);
    m["pa_mpjpe_mm"].add(r.metrics.pa_mpjpe_mm);
    m["pck_pct"].add(r.metrics.pck_pct);
    m["pve_mm"].add(r.metrics.pve_mm);
    m["trans_err_m"].add(r.metrics.trans_err_m);
    m["bone_len_err_m"].add(r.metrics.bone_len_err_m);
    m["non_penet_pct"].add(r.metrics.non_penet_pct);
    m["e_smooth_mm"].add(r.metrics.e_smooth_mm);
    m["sliding_err_mm"].add(r.metrics.sliding_err_mm);
    m["h_err"].add(r.h_err);
  }
  json doc;
  doc["suite"] = rows.empty() ? "" : rows.front().suite;
  doc["runs"] = rows.size();
  json variants;
  for (const auto& [variant, metrics] : agg) {
    json vj;
    for (const auto& [name, stat] : metrics) {
      vj[name] = {{"mean", stat.mean()}, {"std", stat.stdev()}, {"n", stat.n}};
    }
    variants[variant] = std::move(vj);
  }
  doc["variants"] = std::move(variants);
  atomic_write_text(path, doc.dump(2) + "\n");
}

}  // namespace scenefit
