#include "scenefit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include "scenefit/error.hpp"
#include "scenefit/kinematics.hpp"

namespace scenefit {

namespace {

void check_pair(const std::vector<MatrixX3d>& pred, const std::vector<MatrixX3d>& gt) {
  if (pred.size() != gt.size() || pred.empty())
    throw InputError("metric needs matching non-empty frame lists");
  for (std::size_t t = 0; t < pred.size(); ++t)
    if (pred[t].rows() != gt[t].rows())
      throw InputError("metric frame " + std::to_string(t) + " has mismatched point counts");
}

double mean_norm_mm(const std::vector<MatrixX3d>& pred, const std::vector<MatrixX3d>& gt,
                    bool procrustes) {
  check_pair(pred, gt);
  double sum = 0.0;
  long count = 0;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    const MatrixX3d p = procrustes ? procrustes_align(pred[t], gt[t]) : pred[t];
    sum += (p - gt[t]).rowwise().norm().sum();
    count += p.rows();
  }
  return 1000.0 * sum / static_cast<double>(count);
}

}  // namespace

MatrixX3d procrustes_align(const MatrixX3d& pred, const MatrixX3d& gt) {
  if (pred.rows() != gt.rows() || pred.rows() < 3)
    throw InputError("procrustes_align needs matching point sets of size >= 3");
  const Eigen::MatrixXd src = pred.transpose();
  const Eigen::MatrixXd dst = gt.transpose();
  const Eigen::Matrix4d tf = Eigen::umeyama(src, dst, true);
  const Eigen::Matrix3d sr = tf.topLeftCorner<3, 3>();
  const Eigen::Vector3d tr = tf.topRightCorner<3, 1>();
  MatrixX3d out(pred.rows(), 3);
  for (Eigen::Index i = 0; i < pred.rows(); ++i)
    out.row(i) = (sr * pred.row(i).transpose() + tr).transpose();
  return out;
}

double mpjpe_mm(const std::vector<MatrixX3d>& pred, const std::vector<MatrixX3d>& gt,
                bool procrustes) {
  return mean_norm_mm(pred, gt, procrustes);
}

double pck_pct(const std::vector<MatrixX3d>& pred, const std::vector<MatrixX3d>& gt,
               double threshold_mm, bool procrustes) {
  check_pair(pred, gt);
  long hit = 0, total = 0;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    const MatrixX3d p = procrustes ? procrustes_align(pred[t], gt[t]) : pred[t];
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      hit += 1000.0 * (p.row(i) - gt[t].row(i)).norm() <= threshold_mm;
      ++total;
    }
  }
  return 100.0 * static_cast<double>(hit) / static_cast<double>(total);
}

double pve_mm(const std::vector<MatrixX3d>& pred, const std::vector<MatrixX3d>& gt,
              bool procrustes) {
  return mean_norm_mm(pred, gt, procrustes);
}

double translation_error_m(const std::vector<KinematicState>& pred,
                           const std::vector<KinematicState>& gt) {
  if (pred.size() != gt.size() || pred.empty())
    throw InputError("translation error needs matching non-empty state lists");
  double sum = 0.0;
  for (std::size_t t = 0; t < pred.size(); ++t) sum += (pred[t].tau - gt[t].tau).norm();
  return sum / static_cast<double>(pred.size());
}

double bone_length_error_m(const SkeletonTemplate& tmpl, const std::vector<KinematicState>& pred,
                           double pred_h, const std::vector<KinematicState>& gt, double gt_h) {
  if (pred.size() != gt.size() || pred.empty())
    throw InputError("bone length error needs matching non-empty state lists");
  auto total_length = [&tmpl](const KinematicState& s, double h) {
    const BodyPose pose = compute_pose(tmpl, s, h);
    double sum = 0.0;
    for (int b = 1; b < tmpl.joint_count(); ++b)
      sum += (pose.joints.row(b) - pose.joints.row(tmpl.joints()[b].parent)).norm();
    return sum;
  };
  double sum = 0.0;
  for (std::size_t t = 0; t < pred.size(); ++t)
    sum += std::abs(total_length(pred[t], pred_h) - total_length(gt[t], gt_h));
  return sum / static_cast<double>(pred.size());
}

double non_penetration_pct(const std::vector<MatrixX3d>& surface_frames,
                           const std::vector<Solid>& solids) {
  if (surface_frames.empty()) throw InputError("non_penetration_pct needs at least one frame");
  if (solids.empty()) return 100.0;
  double acc = 0.0;
  for (const MatrixX3d& surf : surface_frames) {
    long inside = 0;
    for (Eigen::Index i = 0; i < surf.rows(); ++i) {
      const Eigen::Vector3d p = surf.row(i).transpose();
      for (const Solid& s : solids)
        if (s.contains(p)) {
          ++inside;
          break;
        }
    }
    acc += 1.0 - static_cast<double>(inside) / static_cast<double>(surf.rows());
  }
  return 100.0 * acc / static_cast<double>(surface_frames.size());
}

double non_penetration_pct(const std::vector<MatrixX3d>& surface_frames, const SceneIndex& scene,
                           double eps) {
  if (surface_frames.empty()) throw InputError("non_penetration_pct needs at least one frame");
  double acc = 0.0;
  for (const MatrixX3d& surf : surface_frames) {
    long inside = 0;
    for (Eigen::Index i = 0; i < surf.rows(); ++i) {
      const Eigen::Vector3d v = surf.row(i).transpose();
      const std::vector<int> nn = scene.nearest_k(v, 8);
      Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
      for (int j : nn) centroid += scene.points().row(j).transpose();
      centroid /= static_cast<double>(nn.size());
      Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
      for (int j : nn) {
        const Eigen::Vector3d d = scene.points().row(j).transpose() - centroid;
        cov += d * d.transpose();
      }
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
      Eigen::Vector3d normal = eig.eigenvectors().col(0);  // smallest eigenvalue
      if (normal.dot(-centroid) < 0.0) normal = -normal;   // free space faces the camera
      if (normal.dot(v - centroid) < -eps) ++inside;
    }
    acc += 1.0 - static_cast<double>(inside) / static_cast<double>(surf.rows());
  }
  return 100.0 * acc / static_cast<double>(surface_frames.size());
}

double e_smooth_mm(const std::vector<MatrixX3d>& joint_frames) {
  if (joint_frames.size() < 3) return 0.0;
  double sum = 0.0;
  long count = 0;
  for (std::size_t t = 1; t + 1 < joint_frames.size(); ++t) {
    const MatrixX3d second =
        joint_frames[t + 1] - 2.0 * joint_frames[t] + joint_frames[t - 1];
    sum += second.rowwise().norm().sum();
    count += second.rows();
  }
  return 1000.0 * sum / static_cast<double>(count);
}

double sliding_error_mm(const std::vector<MatrixX3d>& surface_frames,
                        const std::vector<Eigen::VectorXd>& contact_labels) {
  if (surface_frames.size() != contact_labels.size())
    throw InputError("sliding error needs one label vector per frame");
  double sum = 0.0;
  long count = 0;
  for (std::size_t t = 0; t + 1 < surface_frames.size(); ++t) {
    for (Eigen::Index i = 0; i < surface_frames[t].rows(); ++i) {
      if (contact_labels[t][i] > 0.5 && contact_labels[t + 1][i] > 0.5) {
        sum += (surface_frames[t + 1].row(i) - surface_frames[t].row(i)).norm();
        ++count;
      }
    }
  }
  return count == 0 ? 0.0 : 1000.0 * sum / static_cast<double>(count);
}

double sliding_error_mm(const std::vector<MatrixX3d>& surface_frames, const SceneIndex& scene,
                        double dist_threshold) {
  std::vector<Eigen::VectorXd> labels(surface_frames.size());
  const double d2 = dist_threshold * dist_threshold;
  for (std::size_t t = 0; t < surface_frames.size(); ++t) {
    labels[t] = Eigen::VectorXd::Zero(surface_frames[t].rows());
    for (Eigen::Index i = 0; i < surface_frames[t].rows(); ++i) {
      double sq = 0.0;
      scene.nearest(surface_frames[t].row(i).transpose(), &sq);
      if (sq < d2) labels[t][i] = 1.0;
    }
  }
  return sliding_error_mm(surface_frames, labels);
}

MetricReport compute_metrics(const SkeletonTemplate& tmpl,
                             const std::vector<KinematicState>& pred, double pred_h,
                             const Scenario& scenario) {
  if (pred.size() != scenario.gt_states.size() || pred.empty())
    throw InputError("compute_metrics needs one predicted state per ground-truth frame");

  // Full-rate joints for the temporal metric, downsampled indices for the rest.
  std::vector<MatrixX3d> pred_joints_full;
  pred_joints_full.reserve(pred.size());
  for (const KinematicState& s : pred)
    pred_joints_full.push_back(compute_pose(tmpl, s, pred_h).joints);

  const int stride = std::max(1, static_cast<int>(std::llround(scenario.fps / 10.0)));
  std::vector<KinematicState> pred_ds, gt_ds;
  std::vector<MatrixX3d> pj, gj, pv, gv;
  for (std::size_t t = 0; t < pred.size(); t += stride) {
    pred_ds.push_back(pred[t]);
    gt_ds.push_back(scenario.gt_states[t]);
    const BodyPose pp = compute_pose(tmpl, pred[t], pred_h);
    const BodyPose gp = compute_pose(tmpl, scenario.gt_states[t], scenario.gt_scale.h);
    pj.push_back(pp.joints);
    gj.push_back(gp.joints);
    pv.push_back(body_surface(tmpl, pp, pred_h));
    gv.push_back(body_surface(tmpl, gp, scenario.gt_scale.h));
  }

  MetricReport m;
  m.mpjpe_mm = mpjpe_mm(pj, gj, false);
  m.pa_mpjpe_mm = mpjpe_mm(pj, gj, true);
  m.pck_pct = pck_pct(pj, gj, kPckThresholdMm, false);
  m.pa_pck_pct = pck_pct(pj, gj, kPckThresholdMm, true);
  m.pve_mm = pve_mm(pv, gv, false);
  m.pa_pve_mm = pve_mm(pv, gv, true);
  m.trans_err_m = translation_error_m(pred_ds, gt_ds);
  m.bone_len_err_m = bone_length_error_m(tmpl, pred_ds, pred_h, gt_ds, scenario.gt_scale.h);
  const SceneIndex index(scenario.scene);
  m.non_penet_pct = scenario.solids.empty() ? non_penetration_pct(pv, index)
                                            : non_penetration_pct(pv, scenario.solids);
  m.e_smooth_mm = e_smooth_mm(pred_joints_full);
  m.sliding_err_mm = sliding_error_mm(pv, index);
  return m;
}

std::string metric_csv_header() {
  return "mpjpe_mm,pa_mpjpe_mm,pck_pct,pa_pck_pct,pve_mm,pa_pve_mm,trans_err_m,"
         "bone_len_err_m,non_penet_pct,e_smooth_mm,sliding_err_mm";
}

std::string metric_csv_row(const MetricReport& m) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g",
                m.mpjpe_mm, m.pa_mpjpe_mm, m.pck_pct, m.pa_pck_pct, m.pve_mm, m.pa_pve_mm,
                m.trans_err_m, m.bone_len_err_m, m.non_penet_pct, m.e_smooth_mm,
                m.sliding_err_mm);
  return buf;
}

}  // namespace scenefit
