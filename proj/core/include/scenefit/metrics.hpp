#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "scenefit/scenario.hpp"
#include "scenefit/skeleton.hpp"
#include "scenefit/types.hpp"

namespace scenefit {

struct MetricReport {
  double mpjpe_mm = 0.0;
  double pa_mpjpe_mm = 0.0;  // per-frame Procrustes-aligned
  double pck_pct = 100.0;    // joints within 150 mm
  double pa_pck_pct = 100.0;
  double pve_mm = 0.0;       // surface vertex error
  double pa_pve_mm = 0.0;
  double trans_err_m = 0.0;
  double bone_len_err_m = 0.0;
  double non_penet_pct = 100.0;
  double e_smooth_mm = 0.0;  // mean second-difference magnitude, mm/frame^2
  double sliding_err_mm = 0.0;
};

inline constexpr double kPckThresholdMm = 150.0;

/// Per-frame similarity (Procrustes) alignment of pred onto gt; returns the
/// aligned copy. Rows are points.
MatrixX3d procrustes_align(const MatrixX3d& pred, const MatrixX3d& gt);

/// Mean joint position error in millimeters over frames and joints.
double mpjpe_mm(const std::vector<MatrixX3d>& pred, const std::vector<MatrixX3d>& gt,
                bool procrustes = false);

/// Percentage of joints within `threshold_mm` across all frames.
double pck_pct(const std::vector<MatrixX3d>& pred, const std::vector<MatrixX3d>& gt,
               double threshold_mm = kPckThresholdMm, bool procrustes = false);

/// Mean surface vertex error in millimeters (same formula as mpjpe on
/// vertices; kept separate for reporting).
double pve_mm(const std::vector<MatrixX3d>& pred, const std::vector<MatrixX3d>& gt,
              bool procrustes = false);

/// Mean root translation error in meters.
double translation_error_m(const std::vector<KinematicState>& pred,
                           const std::vector<KinematicState>& gt);

/// Mean absolute difference of per-frame summed bone lengths, meters.
double bone_length_error_m(const SkeletonTemplate& tmpl, const std::vector<KinematicState>& pred,
                           double pred_h, const std::vector<KinematicState>& gt, double gt_h);

/// Percentage of surface vertices outside all scene solids, averaged over
/// frames. 100 when there are no solids.
double non_penetration_pct(const std::vector<MatrixX3d>& surface_frames,
                           const std::vector<Solid>& solids);

/// Raw point-cloud variant: a vertex penetrates when it lies more than `eps`
/// behind the local plane fitted to its 8 nearest scene points, with plane
/// normals oriented toward the camera at the origin.
double non_penetration_pct(const std::vector<MatrixX3d>& surface_frames, const SceneIndex& scene,
                           double eps = 0.01);

/// Mean magnitude of second-order finite differences of joint positions,
/// mm per frame^2; zero for fewer than three frames. Uses the full frame
/// rate (never downsampled).
double e_smooth_mm(const std::vector<MatrixX3d>& joint_frames);

/// Mean drift (mm) between consecutive frames of vertices labeled in contact
/// in both frames; labels > 0.5 count, rows correspond across frames.
double sliding_error_mm(const std::vector<MatrixX3d>& surface_frames,
                        const std::vector<Eigen::VectorXd>& contact_labels);

/// Distance-only contact labeling against the scene (within `dist_threshold`
/// in both frames), then drift as above.
double sliding_error_mm(const std::vector<MatrixX3d>& surface_frames, const SceneIndex& scene,
                        double dist_threshold = 0.05);

/// Full report for a predicted trajectory against scenario ground truth.
/// All metrics except e_smooth are computed on frames downsampled to 10 fps.
MetricReport compute_metrics(const SkeletonTemplate& tmpl,
                             const std::vector<KinematicState>& pred, double pred_h,
                             const Scenario& scenario);

std::string metric_csv_header();
std::string metric_csv_row(const MetricReport& m);

}  // namespace scenefit
