#include "scenefit/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "scenefit/contacts.hpp"
#include "scenefit/error.hpp"
#include "scenefit/kinematics.hpp"
#include "scenefit/parallel.hpp"
#include "scenefit/rng.hpp"

namespace scenefit {

std::string to_string(SamplerKind kind) {
  return kind == SamplerKind::kManifold ? "manifold" : "naive";
}

SamplerKind sampler_kind_from_string(const std::string& name) {
  if (name == "manifold") return SamplerKind::kManifold;
  if (name == "naive") return SamplerKind::kNaive;
  throw InputError("unknown sampler \"" + name + "\" (expected \"manifold\" or \"naive\")");
}

void StageConfig::validate() const {
  if (T < 1) throw InputError("window length T must be >= 1");
  if (U < 1 || n_sam < U)
    throw InputError("need n_sam >= U >= 1, got n_sam=" + std::to_string(n_sam) +
                     " U=" + std::to_string(U));
  if (iterations < 0) throw InputError("resampling iterations must be >= 0");
  if (gamma < 0) throw InputError("collision threshold gamma must be >= 0");
  if (!(smoothing_sigma_frames >= 0.0)) throw InputError("smoothing sigma must be >= 0");
  if (!(sigma_latent >= 0.0)) throw InputError("latent sigma must be >= 0");
  if (psi_max < 1) throw InputError("psi_max must be >= 1");
}

void PipelineInputs::validate(int expected_frames) const {
  if (!tmpl || !manifold || !scene) throw InputError("pipeline inputs missing template/manifold/scene");
  cam.validate();
  const std::size_t n = static_cast<std::size_t>(expected_frames);
  if (phi0.size() != n || obs.size() != n || contacts.size() != n)
    throw InputError("pipeline inputs need " + std::to_string(expected_frames) +
                     " frames of states/observations/contacts, got " +
                     std::to_string(phi0.size()) + "/" + std::to_string(obs.size()) + "/" +
                     std::to_string(contacts.size()));
  for (std::size_t t = 0; t < n; ++t) {
    if (phi0[t].theta.size() != 3 * tmpl->joint_count())
      throw InputError("frame " + std::to_string(t) + ": state does not match template joints");
    obs[t].validate(tmpl->joint_count());
  }
  if (manifold->pose_dim() != 3 * tmpl->joint_count())
    throw InputError("pose manifold dimensionality does not match the template");
}

// ---------------------------------------------------------------------------
// Stage one

Stage1Result stage1_contact_opt(const PipelineInputs& in, const LossWeights& weights,
                                const StageConfig& cfg) {
  cfg.validate();
  in.validate(cfg.T);
  ContactWindowObjective obj(*in.tmpl, in.phi0, in.obs, in.cam, in.contacts, *in.scene, weights);
  const Objective fn = [&obj](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    return grad ? obj.value_and_gradient(x, *grad) : obj.value(x);
  };
  const Projection clamp_scale = [](Eigen::VectorXd& x) {
    double& h = x[x.size() - 1];
    h = std::min(BodyScale::kMax, std::max(BodyScale::kMin, h));
  };
  const Eigen::VectorXd x0 = obj.initial();
  Stage1Result out;
  out.initial_loss = obj.value(x0);
  const DescentResult res = minimize(fn, x0, cfg.optimizer, clamp_scale);
  out.states = obj.apply(res.x);
  out.h = ContactWindowObjective::scale_of(res.x);
  out.final_loss = res.value;
  out.iterations = res.iterations;
  out.converged = res.converged;
  out.contact_warning = obj.contact_warning();
  return out;
}

// ---------------------------------------------------------------------------
// Stage two

namespace {

struct Candidate {
  KinematicState state;
  double cost = std::numeric_limits<double>::infinity();
  int collisions = std::numeric_limits<int>::max();
};

struct FrameContext {
  const PipelineInputs* in = nullptr;
  const LossWeights* weights = nullptr;
  const StageConfig* cfg = nullptr;
  int frame = 0;
  double h = 1.0;
  const KinematicState* reference = nullptr;  // data-term anchor (phi_opt)
  Eigen::VectorXd merge_weights;              // 3K confidence blend
  PrevFrame prev;                             // zeroed for the first frame
};

/// Draws the candidate at global index `idx` of generation (round, attempt)
/// around `center` and scores it. Every candidate owns an RNG stream derived
/// from its logical position, so evaluation order and thread count do not
/// matter.
Candidate make_candidate(const FrameContext& ctx, const KinematicState& center, double psi,
                         int round, int attempt, int idx, std::uint64_t seed) {
  Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(ctx.frame),
                                 static_cast<std::uint64_t>(round),
                                 static_cast<std::uint64_t>(attempt),
                                 static_cast<std::uint64_t>(idx)));
  Eigen::VectorXd theta;
  if (ctx.cfg->sampler == SamplerKind::kManifold)
    theta = sample_pose(*ctx.in->manifold, center.theta, ctx.merge_weights,
                        ctx.cfg->sigma_latent, rng);
  else
    theta = sample_pose_naive(center.theta, psi, rng);
  const RootPerturbation root = sample_root(psi, rng);

  Candidate c;
  c.state = KinematicState(center.tau + root.dtau, center.phi + root.dphi, theta);
  try {
    const BodyPose pose = compute_pose(*ctx.in->tmpl, c.state, ctx.h);
    c.collisions = inside_body_count(*ctx.in->tmpl, pose, ctx.h, *ctx.in->scene);
    c.cost = loss_sam(*ctx.in->tmpl, c.state, *ctx.reference, ctx.h, ctx.in->obs[ctx.frame],
                      ctx.in->cam, ctx.in->contacts[ctx.frame], *ctx.in->scene, *ctx.weights,
                      ctx.prev.state ? &ctx.prev : nullptr);
  } catch (const PointBehindCamera&) {
    // Wild sample projected behind the camera: infeasible, never selected.
  }
  return c;
}

std::vector<Candidate> generate(const FrameContext& ctx, const std::vector<KinematicState>& centers,
                                int per_center, double psi, int round, int attempt,
                                std::uint64_t seed, int threads) {
  const std::size_t total = centers.size() * static_cast<std::size_t>(per_center);
  std::vector<Candidate> pool(total);
  parallel_for(total, threads, [&](std::size_t i) {
    const KinematicState& center = centers[i / static_cast<std::size_t>(per_center)];
    pool[i] = make_candidate(ctx, center, psi, round, attempt, static_cast<int>(i), seed);
  });
  return pool;
}

/// First strict minimum by cost in scan order (deterministic under ties).
const Candidate* best_of(const std::vector<Candidate>& pool) {
  const Candidate* best = nullptr;
  for (const Candidate& c : pool)
    if (!best || c.cost < best->cost) best = &c;
  return best;
}

const Candidate* least_colliding(const std::vector<Candidate>& pool) {
  const Candidate* best = nullptr;
  for (const Candidate& c : pool)
    if (!best || c.collisions < best->collisions ||
        (c.collisions == best->collisions && c.cost < best->cost))
      best = &c;
  return best;
}

}  // namespace

Stage2Result stage2_sampling(const PipelineInputs& in, const std::vector<KinematicState>& phi_opt,
                             double h, const LossWeights& weights, const StageConfig& cfg,
                             std::uint64_t seed, int threads) {
  cfg.validate();
  in.validate(cfg.T);
  weights.validate();
  if (phi_opt.size() != static_cast<std::size_t>(cfg.T))
    throw InputError("stage two needs one stage-one state per frame");

  Stage2Result out;
  out.presmooth.reserve(phi_opt.size());
  out.stats.resize(phi_opt.size());
  MatrixX3d prev_surface;

  for (int t = 0; t < cfg.T; ++t) {
    FrameContext ctx;
    ctx.in = &in;
    ctx.weights = &weights;
    ctx.cfg = &cfg;
    ctx.frame = t;
    ctx.h = h;
    ctx.reference = &phi_opt[t];
    ctx.merge_weights = Eigen::VectorXd::Zero(3 * in.tmpl->joint_count());
    if (cfg.confidence_merge)
      for (int k = 0; k < in.tmpl->joint_count(); ++k)
        ctx.merge_weights.segment<3>(3 * k).setConstant(in.obs[t].confidence[k]);
    if (t > 0) {
      const KinematicState& prev_state = out.presmooth[t - 1];
      prev_surface = body_surface(*in.tmpl, compute_pose(*in.tmpl, prev_state, h), h);
      ctx.prev.state = &prev_state;
      ctx.prev.surface = &prev_surface;
      ctx.prev.body_contacts = &in.contacts[t - 1].body;
    }

    FrameSampleStats& stats = out.stats[t];
    double psi = 1.0;
    int attempt = 0;
    std::vector<Candidate> pool;
    std::vector<Candidate> survivors;
    bool exhausted = false;
    for (;;) {
      pool = generate(ctx, {phi_opt[t]}, cfg.n_sam, psi, /*round=*/0, attempt, seed, threads);
      stats.generated += static_cast<int>(pool.size());
      survivors.clear();
      for (const Candidate& c : pool)
        if (c.collisions <= cfg.gamma) survivors.push_back(c);
      if (!survivors.empty()) break;
      if (psi >= static_cast<double>(cfg.psi_max)) {
        exhausted = true;
        break;
      }
      psi += 1.0;  // widen the root search and retry
      ++attempt;
    }

    const Candidate* chosen = nullptr;
    if (exhausted) {
      chosen = least_colliding(pool);
    } else {
      for (int round = 1; round <= cfg.iterations; ++round) {
        std::stable_sort(survivors.begin(), survivors.end(),
                         [](const Candidate& a, const Candidate& b) { return a.cost < b.cost; });
        const int elite_count = std::min<int>(cfg.U, static_cast<int>(survivors.size()));
        std::vector<KinematicState> centers;
        std::vector<Candidate> elites(survivors.begin(), survivors.begin() + elite_count);
        for (const Candidate& e : elites) centers.push_back(e.state);
        pool = generate(ctx, centers, cfg.n_sam / cfg.U, psi, round, /*attempt=*/0, seed, threads);
        stats.generated += static_cast<int>(pool.size());
        survivors = std::move(elites);  // elites always stay in contention
        for (const Candidate& c : pool)
          if (c.collisions <= cfg.gamma) survivors.push_back(c);
      }
      chosen = best_of(survivors);
      stats.survivor_count = static_cast<int>(survivors.size());
    }

    stats.psi = psi;
    stats.psi_exhausted = exhausted;
    stats.collision_count = chosen->collisions;
    stats.best_cost = chosen->cost;
    out.presmooth.push_back(chosen->state);
  }

  out.smoothed = gaussian_smooth_trajectory(out.presmooth, cfg.smoothing_sigma_frames);
  return out;
}

// ---------------------------------------------------------------------------
// Stage three

Stage3Result stage3_refine(const PipelineInputs& in, const std::vector<KinematicState>& phi_sam_hat,
                           double h, const LossWeights& weights, const StageConfig& cfg) {
  cfg.validate();
  in.validate(cfg.T);
  if (phi_sam_hat.size() != static_cast<std::size_t>(cfg.T))
    throw InputError("stage three needs one state per frame");
  LossWeights w = weights;
  w.lambda_data = 1.0;  // refinement re-weights the data anchor

  Stage3Result out;
  out.states.reserve(phi_sam_hat.size());
  MatrixX3d prev_surface;
  for (int t = 0; t < cfg.T; ++t) {
    PrevFrame prev;
    if (t > 0) {
      prev_surface = body_surface(*in.tmpl, compute_pose(*in.tmpl, out.states[t - 1], h), h);
      prev.state = &out.states[t - 1];
      prev.surface = &prev_surface;
      prev.body_contacts = &in.contacts[t - 1].body;
    }
    const KinematicState& anchor = phi_sam_hat[t];
    const auto eval = [&](const Eigen::VectorXd& x) {
      try {
        return loss_sam(*in.tmpl, state_from_vector(x), anchor, h, in.obs[t], in.cam,
                        in.contacts[t], *in.scene, w, t > 0 ? &prev : nullptr);
      } catch (const PointBehindCamera&) {
        return std::numeric_limits<double>::infinity();
      }
    };
    const Objective fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
      const double v = eval(x);
      if (grad && std::isfinite(v)) *grad = finite_diff_gradient(eval, x);
      return v;
    };
    out.initial_loss.push_back(eval(state_to_vector(anchor)));
    const DescentResult res = minimize(fn, state_to_vector(anchor), cfg.optimizer);
    out.states.push_back(state_from_vector(res.x));
    out.final_loss.push_back(res.value);
    out.iterations.push_back(res.iterations);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Orchestration

TrajectoryResult run_pipeline(const PipelineInputs& in, const LossWeights& weights,
                              const StageConfig& cfg, std::uint64_t seed, int threads) {
  cfg.validate();
  weights.validate();
  in.validate(cfg.T);

  TrajectoryResult result;
  result.phi0 = in.phi0;
  result.diagnostics.gamma = cfg.gamma;

  Stage1Result s1 = stage1_contact_opt(in, weights, cfg);
  result.phi_opt = s1.states;
  result.h = s1.h;
  result.diagnostics.stage1_initial_loss = s1.initial_loss;
  result.diagnostics.stage1_final_loss = s1.final_loss;
  result.diagnostics.stage1_iterations = s1.iterations;
  result.diagnostics.stage1_converged = s1.converged;
  result.diagnostics.stage1_contact_warning = s1.contact_warning;

  if (cfg.enable_sampling) {
    Stage2Result s2 = stage2_sampling(in, result.phi_opt, result.h, weights, cfg, seed, threads);
    result.phi_sam_hat = s2.smoothed;
    result.diagnostics.stage2 = std::move(s2.stats);
    result.diagnostics.stage2_presmooth = std::move(s2.presmooth);
  } else {
    result.phi_sam_hat = result.phi_opt;
  }

  if (cfg.enable_refinement) {
    Stage3Result s3 = stage3_refine(in, result.phi_sam_hat, result.h, weights, cfg);
    result.phi_ref = std::move(s3.states);
    result.diagnostics.stage3_initial_loss = std::move(s3.initial_loss);
    result.diagnostics.stage3_final_loss = std::move(s3.final_loss);
    result.diagnostics.stage3_iterations = std::move(s3.iterations);
  } else {
    result.phi_ref = result.phi_sam_hat;
  }
  return result;
}

std::vector<FrameContacts> frame_contacts_from_labels(const std::vector<Eigen::VectorXd>& body,
                                                      const std::vector<Eigen::VectorXd>& env) {
  if (!env.empty() && env.size() != body.size())
    throw InputError("environment labels must be empty or match the body frame count");
  std::vector<FrameContacts> out(body.size());
  for (std::size_t t = 0; t < body.size(); ++t) {
    out[t].body = effective_contacts(body[t]);
    if (!env.empty()) out[t].env = effective_contacts(env[t]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Temporal smoothing

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) throw InputError("gaussian_kernel needs sigma > 0");
  const int r = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> taps(2 * r + 1);
  double sum = 0.0;
  for (int j = -r; j <= r; ++j) {
    taps[j + r] = std::exp(-0.5 * j * j / (sigma * sigma));
    sum += taps[j + r];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return i;
}

std::vector<KinematicState> gaussian_smooth_trajectory(const std::vector<KinematicState>& states,
                                                       double sigma_frames) {
  if (!(sigma_frames >= 0.0)) throw InputError("smoothing sigma must be >= 0");
  if (sigma_frames == 0.0 || states.size() < 2) return states;
  const int n = static_cast<int>(states.size());
  const std::vector<double> taps = gaussian_kernel(sigma_frames);
  const int r = static_cast<int>(taps.size() / 2);

  std::vector<Eigen::VectorXd> flat(states.size());
  for (int t = 0; t < n; ++t) flat[t] = state_to_vector(states[t]);
  std::vector<KinematicState> out;
  out.reserve(states.size());
  for (int t = 0; t < n; ++t) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(flat[0].size());
    for (int j = -r; j <= r; ++j) acc += taps[j + r] * flat[reflect_index(t + j, n)];
    out.push_back(state_from_vector(acc));
  }
  return out;
}

}  // namespace scenefit
