#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "scenefit/descent.hpp"
#include "scenefit/manifold.hpp"
#include "scenefit/objective.hpp"
#include "scenefit/scene.hpp"
#include "scenefit/skeleton.hpp"
#include "scenefit/types.hpp"

namespace scenefit {

enum class SamplerKind { kManifold, kNaive };

std::string to_string(SamplerKind kind);
SamplerKind sampler_kind_from_string(const std::string& name);

struct StageConfig {
  int T = 5;                            // window length (frames)
  int n_sam = 1000;                     // samples per generation
  int U = 3;                            // elite count
  int iterations = 1;                   // elite resampling rounds
  int gamma = 5;                        // max scene points inside the body
  double smoothing_sigma_frames = 1.0;  // temporal Gaussian bandwidth
  double sigma_latent = 0.1;            // latent sampling std around encode(theta)
  int psi_max = 10;                     // search-radius escalation cap
  DescentOptions optimizer;             // stages one and three
  SamplerKind sampler = SamplerKind::kManifold;
  bool confidence_merge = true;   // blend decoded pose with theta_opt by confidence
  bool enable_sampling = true;    // stage two on/off (ablations)
  bool enable_refinement = true;  // stage three on/off (ablations)

  void validate() const;
};

/// Per-frame statistics from the sampling stage.
struct FrameSampleStats {
  double psi = 1.0;            // search-radius factor in effect for the final pick
  bool psi_exhausted = false;  // no collision-free sample found at psi_max
  int collision_count = 0;     // inside_body_count of the chosen (pre-smoothing) state
  int survivor_count = 0;      // collision-passing candidates in the final generation
  int generated = 0;           // total samples drawn for this frame
  double best_cost = 0.0;      // loss_sam of the chosen state
};

struct PipelineDiagnostics {
  // stage one
  double stage1_initial_loss = 0.0;
  double stage1_final_loss = 0.0;
  int stage1_iterations = 0;
  bool stage1_converged = false;
  bool stage1_contact_warning = false;
  // stage two
  std::vector<FrameSampleStats> stage2;
  std::vector<KinematicState> stage2_presmooth;  // before temporal filtering
  // stage three
  std::vector<double> stage3_initial_loss;
  std::vector<double> stage3_final_loss;
  std::vector<int> stage3_iterations;
  int gamma = 0;  // threshold actually applied
};

struct TrajectoryResult {
  std::vector<KinematicState> phi0;
  std::vector<KinematicState> phi_opt;      // stage one
  std::vector<KinematicState> phi_sam_hat;  // stage two, temporally smoothed
  std::vector<KinematicState> phi_ref;      // stage three
  double h = 1.0;                           // shared body scale from stage one
  PipelineDiagnostics diagnostics;
};

/// Everything the optimizer consumes; pointers stay owned by the caller and
/// must outlive the run.
struct PipelineInputs {
  const SkeletonTemplate* tmpl = nullptr;
  const PoseManifold* manifold = nullptr;
  const SceneIndex* scene = nullptr;
  CameraIntrinsics cam;
  std::vector<KinematicState> phi0;
  std::vector<Observation2D> obs;
  std::vector<FrameContacts> contacts;

  void validate(int expected_frames) const;
};

struct Stage1Result {
  std::vector<KinematicState> states;
  double h = 1.0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  int iterations = 0;
  bool converged = false;
  bool contact_warning = false;
};

/// Contact-based window optimization: descends on the 2D + smoothness +
/// contact objective over per-frame translations and one shared scale, with
/// pose and orientation frozen at phi0 and the scale clamped to [0.5, 2].
Stage1Result stage1_contact_opt(const PipelineInputs& in, const LossWeights& weights,
                                const StageConfig& cfg);

struct Stage2Result {
  std::vector<KinematicState> presmooth;
  std::vector<KinematicState> smoothed;
  std::vector<FrameSampleStats> stats;
};

/// Sampling-based trajectory optimization. Frames run sequentially; the
/// candidates of one frame are scored in parallel with one derived RNG stream
/// per sample index, so results do not depend on the thread count.
Stage2Result stage2_sampling(const PipelineInputs& in, const std::vector<KinematicState>& phi_opt,
                             double h, const LossWeights& weights, const StageConfig& cfg,
                             std::uint64_t seed, int threads);

struct Stage3Result {
  std::vector<KinematicState> states;
  std::vector<double> initial_loss;
  std::vector<double> final_loss;
  std::vector<int> iterations;
};

/// Per-frame gradient refinement of the sample cost (data term re-anchored to
/// the stage-two output with weight 1), scale fixed.
Stage3Result stage3_refine(const PipelineInputs& in, const std::vector<KinematicState>& phi_sam_hat,
                           double h, const LossWeights& weights, const StageConfig& cfg);

TrajectoryResult run_pipeline(const PipelineInputs& in, const LossWeights& weights,
                              const StageConfig& cfg, std::uint64_t seed, int threads = 1);

/// Effective contact index sets (labels strictly above 0.5) per frame.
std::vector<FrameContacts> frame_contacts_from_labels(const std::vector<Eigen::VectorXd>& body,
                                                      const std::vector<Eigen::VectorXd>& env);

/// Normalized 1D Gaussian taps over [-r, r] with r = max(1, ceil(3 sigma)).
std::vector<double> gaussian_kernel(double sigma);

/// Reflects an out-of-range index back into [0, n) (edge sample repeated).
int reflect_index(int i, int n);

/// Per-DoF Gaussian convolution along time with reflective boundaries;
/// constant trajectories pass through unchanged. sigma = 0 is the identity.
std::vector<KinematicState> gaussian_smooth_trajectory(const std::vector<KinematicState>& states,
                                                       double sigma_frames);

}  // namespace scenefit
