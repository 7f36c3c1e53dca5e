#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "scenefit/kinematics.hpp"
#include "scenefit/scene.hpp"
#include "scenefit/skeleton.hpp"
#include "scenefit/types.hpp"

namespace scenefit {

/// Effective contact index sets for one frame: `body` indexes template
/// surface points, `env` indexes scene points.
struct FrameContacts {
  std::vector<int> body;
  std::vector<int> env;
};

/// Confidence-weighted mean squared reprojection error over joints, with
/// pixel coordinates normalized by the image size. Projection failures
/// (joint behind the camera) propagate as PointBehindCamera.
double loss_2d(const SkeletonTemplate& tmpl, const KinematicState& state, double h,
               const Observation2D& obs, const CameraIntrinsics& cam);

/// Squared distance between consecutive quantities; used on root translations
/// in stage one and on whole state vectors afterwards.
double loss_smooth(const Eigen::VectorXd& value, const Eigen::VectorXd& previous);
double loss_smooth(const Eigen::Vector3d& tau, const Eigen::Vector3d& tau_prev);

/// Directed squared-distance sum from each body contact point to its nearest
/// environment contact point (exhaustive inner minimum). Either side empty
/// gives 0 and sets *warned when provided.
double loss_contact_points(const MatrixX3d& body_points, const MatrixX3d& env_points,
                           bool* warned = nullptr);

/// Same, gathering positions from a posed body and the scene cloud.
double loss_contact(const SkeletonTemplate& tmpl, const BodyPose& pose, double h,
                    const FrameContacts& contacts, const SceneIndex& scene,
                    bool* warned = nullptr);

/// Squared drift of vertices in contact during both frames (rows correspond).
double loss_sliding(const MatrixX3d& contact_now, const MatrixX3d& contact_prev);

/// Squared distance between two states over the concatenated (tau, phi,
/// theta) vector.
double loss_data(const KinematicState& state, const KinematicState& reference);

/// Stage-one window objective value: sum over frames of the weighted 2D and
/// contact terms plus root-translation smoothness between consecutive frames
/// (and against *tau_prev for the first frame when given).
double loss_opt(const SkeletonTemplate& tmpl, const std::vector<KinematicState>& window, double h,
                const std::vector<Observation2D>& obs, const CameraIntrinsics& cam,
                const std::vector<FrameContacts>& contacts, const SceneIndex& scene,
                const LossWeights& weights, const Eigen::Vector3d* tau_prev = nullptr,
                bool* contact_warning = nullptr);

/// Previous-frame context for the per-frame sample cost.
struct PrevFrame {
  const KinematicState* state = nullptr;        // whole-state smoothness anchor
  const MatrixX3d* surface = nullptr;           // full template surface at that state
  const std::vector<int>* body_contacts = nullptr;
};

/// Per-frame sample cost: weighted 2D + whole-state smoothness + contact +
/// sliding + data terms. Sliding pairs vertices contacting in both frames by
/// template index; first frames pass prev = nullptr and skip the smoothness
/// and sliding terms.
double loss_sam(const SkeletonTemplate& tmpl, const KinematicState& state,
                const KinematicState& reference, double h, const Observation2D& obs,
                const CameraIntrinsics& cam, const FrameContacts& contacts,
                const SceneIndex& scene, const LossWeights& weights,
                const PrevFrame* prev = nullptr, bool* contact_warning = nullptr);

/// Central finite differences with per-coordinate step. Throws when the loss
/// is non-finite at any probe.
Eigen::VectorXd finite_diff_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                     const Eigen::VectorXd& x, double step = 1e-5);

/// Stage-one objective over a T-frame window in the variables
/// x = [tau_0, ..., tau_{T-1}, h] with pose and orientation frozen at the
/// initial states. Joint and surface positions are affine in (tau, h) at
/// fixed angles, which makes the analytic gradient cheap and exact.
class ContactWindowObjective {
public:
  ContactWindowObjective(const SkeletonTemplate& tmpl, std::vector<KinematicState> window,
                         std::vector<Observation2D> obs, const CameraIntrinsics& cam,
                         std::vector<FrameContacts> contacts, const SceneIndex& scene,
                         const LossWeights& weights, const Eigen::Vector3d* tau_prev = nullptr);

  int frame_count() const { return static_cast<int>(window_.size()); }
  int dim() const { return 3 * frame_count() + 1; }

  Eigen::VectorXd pack(const std::vector<Eigen::Vector3d>& taus, double h) const;
  Eigen::VectorXd initial() const;  // taus from the window states, h = 1

  double value(const Eigen::VectorXd& x) const;
  double value_and_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const;

  /// Window states with optimized translations written back.
  std::vector<KinematicState> apply(const Eigen::VectorXd& x) const;
  static double scale_of(const Eigen::VectorXd& x) { return x[x.size() - 1]; }

  bool contact_warning() const { return contact_warning_; }

private:
  double value_and_gradient_impl(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const;

  struct Frame {
    MatrixX3d unit_joints;        // K x 3 at tau = 0, h = 1
    MatrixX3d unit_contact;       // body contact surface points at tau = 0, h = 1
    MatrixX3d env_points;         // env contact positions
    MatrixX2d target;             // observed keypoints normalized by image size
    Eigen::VectorXd confidence;
  };

  const SkeletonTemplate& tmpl_;
  std::vector<KinematicState> window_;
  CameraIntrinsics cam_;
  LossWeights weights_;
  std::vector<Frame> frames_;
  bool has_tau_prev_ = false;
  Eigen::Vector3d tau_prev_ = Eigen::Vector3d::Zero();
  bool contact_warning_ = false;
};

}  // namespace scenefit
