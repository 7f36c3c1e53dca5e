#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "scenefit/manifold.hpp"
#include "scenefit/metrics.hpp"
#include "scenefit/pipeline.hpp"
#include "scenefit/scenario.hpp"

namespace scenefit {

/// One pipeline configuration within an ablation suite.
struct AblationVariant {
  std::string name;
  StageConfig cfg;
  LossWeights weights;
};

/// Variants for a named suite: stage toggles (no_S, no_R, no_SR), loss
/// toggles (no_Lcon, no_Lsli), sampler comparisons (naive_vs_manifold,
/// sampling_count, iterations), and confidence_merge on/off. Unknown suite
/// names throw.
std::vector<AblationVariant> ablation_variants(const std::string& suite,
                                               const StageConfig& base_cfg,
                                               const LossWeights& base_weights);

std::vector<std::string> ablation_suite_names();

struct AblationRow {
  std::string suite;
  std::string variant;
  std::string scenario;  // kind plus ordinal
  std::uint64_t seed = 0;
  double h_pred = 1.0;
  double h_err = 0.0;
  double runtime_s = 0.0;  // console reporting only, never serialized
  bool any_psi_exhausted = false;
  MetricReport metrics;
};

/// Runs every variant on every (scenario, seed) pair: builds a noisy
/// initialization from the seed, runs the pipeline, and scores the final
/// trajectory against ground truth.
std::vector<AblationRow> run_ablation(const std::string& suite, const SkeletonTemplate& tmpl,
                                      const PoseManifold& manifold,
                                      const std::vector<Scenario>& scenarios,
                                      const std::vector<std::uint64_t>& seeds,
                                      const StageConfig& base_cfg,
                                      const LossWeights& base_weights, int threads);

void write_ablation_csv(const std::vector<AblationRow>& rows, const std::filesystem::path& path);

/// Per-variant mean/std aggregation of the headline metrics as JSON.
void write_ablation_summary(const std::vector<AblationRow>& rows,
                            const std::filesystem::path& path);

}  // namespace scenefit
