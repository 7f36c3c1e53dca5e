#include "scenefit/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "scenefit/error.hpp"

namespace scenefit {

namespace {

double loss_2d_from_joints(const MatrixX3d& joints, const Observation2D& obs,
                           const CameraIntrinsics& cam) {
  const Eigen::Index k = joints.rows();
  const MatrixX2d pixels = project(joints, cam);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    const double ru = (pixels(i, 0) - obs.keypoints(i, 0)) / cam.image_w;
    const double rv = (pixels(i, 1) - obs.keypoints(i, 1)) / cam.image_h;
    sum += obs.confidence[i] * (ru * ru + rv * rv);
  }
  return sum / static_cast<double>(k);
}

MatrixX3d gather_rows(const MatrixX3d& points, const std::vector<int>& indices,
                      const char* what) {
  MatrixX3d out(static_cast<Eigen::Index>(indices.size()), 3);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] < 0 || indices[r] >= points.rows())
      throw InputError(std::string(what) + " index " + std::to_string(indices[r]) +
                       " out of range [0, " + std::to_string(points.rows()) + ")");
    out.row(static_cast<Eigen::Index>(r)) = points.row(indices[r]);
  }
  return out;
}

}  // namespace

double loss_2d(const SkeletonTemplate& tmpl, const KinematicState& state, double h,
               const Observation2D& obs, const CameraIntrinsics& cam) {
  obs.validate(tmpl.joint_count());
  const BodyPose pose = compute_pose(tmpl, state, h);
  return loss_2d_from_joints(pose.joints, obs, cam);
}

double loss_smooth(const Eigen::VectorXd& value, const Eigen::VectorXd& previous) {
  if (value.size() != previous.size())
    throw InputError("loss_smooth needs equal-length vectors");
  return (value - previous).squaredNorm();
}

double loss_smooth(const Eigen::Vector3d& tau, const Eigen::Vector3d& tau_prev) {
  return (tau - tau_prev).squaredNorm();
}

double loss_contact_points(const MatrixX3d& body_points, const MatrixX3d& env_points,
                           bool* warned) {
  if (body_points.rows() == 0 || env_points.rows() == 0) {
    if (warned) *warned = true;
    return 0.0;
  }
  double sum = 0.0;
  for (Eigen::Index n = 0; n < body_points.rows(); ++n) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index m = 0; m < env_points.rows(); ++m)
      best = std::min(best, (body_points.row(n) - env_points.row(m)).squaredNorm());
    sum += best;
  }
  return sum;
}

double loss_contact(const SkeletonTemplate& tmpl, const BodyPose& pose, double h,
                    const FrameContacts& contacts, const SceneIndex& scene, bool* warned) {
  if (contacts.body.empty() || contacts.env.empty()) {
    if (warned) *warned = true;
    return 0.0;
  }
  const MatrixX3d body = body_surface_subset(tmpl, pose, h, contacts.body);
  const MatrixX3d env = gather_rows(scene.points(), contacts.env, "environment contact");
  return loss_contact_points(body, env, warned);
}

double loss_sliding(const MatrixX3d& contact_now, const MatrixX3d& contact_prev) {
  if (contact_now.rows() != contact_prev.rows())
    throw InputError("loss_sliding needs matched vertex rows");
  return (contact_now - contact_prev).squaredNorm();
}

double loss_data(const KinematicState& state, const KinematicState& reference) {
  if (state.theta.size() != reference.theta.size())
    throw InputError("loss_data: states have different joint counts");
  return (state_to_vector(state) - state_to_vector(reference)).squaredNorm();
}

double loss_opt(const SkeletonTemplate& tmpl, const std::vector<KinematicState>& window, double h,
                const std::vector<Observation2D>& obs, const CameraIntrinsics& cam,
                const std::vector<FrameContacts>& contacts, const SceneIndex& scene,
                const LossWeights& weights, const Eigen::Vector3d* tau_prev,
                bool* contact_warning) {
  weights.validate();
  if (obs.size() != window.size() || contacts.size() != window.size())
    throw InputError("loss_opt needs one observation and contact set per frame");
  double total = 0.0;
  for (std::size_t t = 0; t < window.size(); ++t) {
    const BodyPose pose = compute_pose(tmpl, window[t], h);
    obs[t].validate(tmpl.joint_count());
    total += weights.lambda_2d * loss_2d_from_joints(pose.joints, obs[t], cam);
    total += weights.lambda_con * loss_contact(tmpl, pose, h, contacts[t], scene, contact_warning);
    if (t > 0)
      total += weights.lambda_smooth * loss_smooth(window[t].tau, window[t - 1].tau);
    else if (tau_prev)
      total += weights.lambda_smooth * loss_smooth(window[0].tau, *tau_prev);
  }
  return total;
}

double loss_sam(const SkeletonTemplate& tmpl, const KinematicState& state,
                const KinematicState& reference, double h, const Observation2D& obs,
                const CameraIntrinsics& cam, const FrameContacts& contacts,
                const SceneIndex& scene, const LossWeights& weights, const PrevFrame* prev,
                bool* contact_warning) {
  weights.validate();
  obs.validate(tmpl.joint_count());
  const BodyPose pose = compute_pose(tmpl, state, h);
  double total = weights.lambda_2d * loss_2d_from_joints(pose.joints, obs, cam);
  total += weights.lambda_con * loss_contact(tmpl, pose, h, contacts, scene, contact_warning);
  total += weights.lambda_data * loss_data(state, reference);
  if (prev && prev->state)
    total += weights.lambda_smooth *
             loss_smooth(state_to_vector(state), state_to_vector(*prev->state));
  if (prev && prev->surface && prev->body_contacts && !contacts.body.empty()) {
    std::vector<int> both;
    std::vector<int> now_sorted = contacts.body;
    std::vector<int> prev_sorted = *prev->body_contacts;
    std::sort(now_sorted.begin(), now_sorted.end());
    std::sort(prev_sorted.begin(), prev_sorted.end());
    std::set_intersection(now_sorted.begin(), now_sorted.end(), prev_sorted.begin(),
                          prev_sorted.end(), std::back_inserter(both));
    if (!both.empty()) {
      const MatrixX3d now_pts = body_surface_subset(tmpl, pose, h, both);
      const MatrixX3d prev_pts = gather_rows(*prev->surface, both, "previous surface");
      total += weights.lambda_sli * loss_sliding(now_pts, prev_pts);
    }
  }
  return total;
}

Eigen::VectorXd finite_diff_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                     const Eigen::VectorXd& x, double step) {
  if (!(step > 0.0)) throw InputError("finite difference step must be positive");
  Eigen::VectorXd grad(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + step;
    const double hi = f(probe);
    probe[i] = x[i] - step;
    const double lo = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(hi) || !std::isfinite(lo))
      throw Error("non-finite loss at finite-difference probe for coordinate " +
                  std::to_string(i));
    grad[i] = (hi - lo) / (2.0 * step);
  }
  return grad;
}

// ---------------------------------------------------------------------------
// ContactWindowObjective

ContactWindowObjective::ContactWindowObjective(const SkeletonTemplate& tmpl,
                                               std::vector<KinematicState> window,
                                               std::vector<Observation2D> obs,
                                               const CameraIntrinsics& cam,
                                               std::vector<FrameContacts> contacts,
                                               const SceneIndex& scene,
                                               const LossWeights& weights,
                                               const Eigen::Vector3d* tau_prev)
    : tmpl_(tmpl), window_(std::move(window)), cam_(cam), weights_(weights) {
  cam_.validate();
  weights_.validate();
  if (window_.empty()) throw InputError("stage-one window must contain at least one frame");
  if (obs.size() != window_.size() || contacts.size() != window_.size())
    throw InputError("stage-one window needs one observation and contact set per frame");
  if (tau_prev) {
    has_tau_prev_ = true;
    tau_prev_ = *tau_prev;
  }
  frames_.resize(window_.size());
  for (std::size_t t = 0; t < window_.size(); ++t) {
    obs[t].validate(tmpl.joint_count());
    const BodyPose unit = compute_unit_pose(tmpl, window_[t]);
    Frame& f = frames_[t];
    f.unit_joints = unit.joints;
    f.unit_contact = body_surface_subset(tmpl, unit, 1.0, contacts[t].body);
    f.env_points = gather_rows(scene.points(), contacts[t].env, "environment contact");
    if (contacts[t].body.empty() || contacts[t].env.empty()) contact_warning_ = true;
    f.target.resize(tmpl.joint_count(), 2);
    for (int k = 0; k < tmpl.joint_count(); ++k) {
      f.target(k, 0) = obs[t].keypoints(k, 0) / cam_.image_w;
      f.target(k, 1) = obs[t].keypoints(k, 1) / cam_.image_h;
    }
    f.confidence = obs[t].confidence;
  }
}

Eigen::VectorXd ContactWindowObjective::pack(const std::vector<Eigen::Vector3d>& taus,
                                             double h) const {
  if (taus.size() != window_.size())
    throw InputError("pack needs one translation per window frame");
  Eigen::VectorXd x(dim());
  for (std::size_t t = 0; t < taus.size(); ++t) x.segment<3>(3 * static_cast<int>(t)) = taus[t];
  x[x.size() - 1] = h;
  return x;
}

Eigen::VectorXd ContactWindowObjective::initial() const {
  std::vector<Eigen::Vector3d> taus;
  taus.reserve(window_.size());
  for (const KinematicState& s : window_) taus.push_back(s.tau);
  return pack(taus, 1.0);
}

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double ContactWindowObjective::value(const Eigen::VectorXd& x) const {
  return value_and_gradient_impl(x, nullptr);
}

double ContactWindowObjective::value_and_gradient(const Eigen::VectorXd& x,
                                                  Eigen::VectorXd& grad) const {
  grad.setZero(dim());
  return value_and_gradient_impl(x, &grad);
}

std::vector<KinematicState> ContactWindowObjective::apply(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) throw InputError("window objective: wrong variable count");
  std::vector<KinematicState> out = window_;
  for (std::size_t t = 0; t < out.size(); ++t) out[t].tau = x.segment<3>(3 * static_cast<int>(t));
  return out;
}

double ContactWindowObjective::value_and_gradient_impl(const Eigen::VectorXd& x,
                                                       Eigen::VectorXd* grad) const {
  if (x.size() != dim()) throw InputError("window objective: wrong variable count");
  const int frames = frame_count();
  const double h = x[x.size() - 1];
  const Eigen::Index hslot = x.size() - 1;
  const int joints = tmpl_.joint_count();
  double total = 0.0;
  for (int t = 0; t < frames; ++t) {
    const Frame& f = frames_[t];
    const Eigen::Vector3d tau = x.segment<3>(3 * t);
    // 2D reprojection, normalized pixels.
    const double c2d = weights_.lambda_2d / joints;
    for (int k = 0; k < joints; ++k) {
      const Eigen::Vector3d p = tau + h * f.unit_joints.row(k).transpose();
      if (!(p.z() > kDefaultZMin)) return kInf;  // infeasible; caller backtracks
      const double invz = 1.0 / p.z();
      const double u = (cam_.fx * p.x() * invz + cam_.cx) / cam_.image_w;
      const double v = (cam_.fy * p.y() * invz + cam_.cy) / cam_.image_h;
      const double ru = u - f.target(k, 0);
      const double rv = v - f.target(k, 1);
      total += c2d * f.confidence[k] * (ru * ru + rv * rv);
      if (grad) {
        const double s = 2.0 * c2d * f.confidence[k];
        Eigen::Vector3d gp;
        gp.x() = s * ru * cam_.fx * invz / cam_.image_w;
        gp.y() = s * rv * cam_.fy * invz / cam_.image_h;
        gp.z() = -invz * (gp.x() * p.x() + gp.y() * p.y());
        grad->segment<3>(3 * t) += gp;
        (*grad)[hslot] += gp.dot(f.unit_joints.row(k).transpose());
      }
    }
    // Contact: directed squared distance to the nearest env contact point.
    if (f.env_points.rows() > 0) {
      for (Eigen::Index n = 0; n < f.unit_contact.rows(); ++n) {
        const Eigen::Vector3d v = tau + h * f.unit_contact.row(n).transpose();
        double best = kInf;
        Eigen::Index arg = 0;
        for (Eigen::Index m = 0; m < f.env_points.rows(); ++m) {
          const double d2 = (v - f.env_points.row(m).transpose()).squaredNorm();
          if (d2 < best) {
            best = d2;
            arg = m;
          }
        }
        total += weights_.lambda_con * best;
        if (grad) {
          const Eigen::Vector3d diff =
              2.0 * weights_.lambda_con * (v - f.env_points.row(arg).transpose());
          grad->segment<3>(3 * t) += diff;
          (*grad)[hslot] += diff.dot(f.unit_contact.row(n).transpose());
        }
      }
    }
    // Root smoothness against the previous frame (or the pre-window anchor).
    const bool anchored = t > 0 || has_tau_prev_;
    if (anchored) {
      const Eigen::Vector3d prev = t > 0 ? Eigen::Vector3d(x.segment<3>(3 * (t - 1))) : tau_prev_;
      const Eigen::Vector3d d = tau - prev;
      total += weights_.lambda_smooth * d.squaredNorm();
      if (grad) {
        grad->segment<3>(3 * t) += 2.0 * weights_.lambda_smooth * d;
        if (t > 0) grad->segment<3>(3 * (t - 1)) -= 2.0 * weights_.lambda_smooth * d;
      }
    }
  }
  return total;
}

}  // namespace scenefit
