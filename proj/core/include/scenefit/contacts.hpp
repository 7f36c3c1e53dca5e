#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "scenefit/scene.hpp"
#include "scenefit/types.hpp"

namespace scenefit {

struct ContactParams {
  double dist_threshold = 0.05;  // meters to the nearest scene point
  double vel_threshold = 0.1;    // meters/second
  double fps = 10.0;

  void validate() const;
};

/// Labels each surface vertex per frame: 1.0 when it is both within
/// `dist_threshold` of the scene and moving slower than `vel_threshold`.
/// Velocity uses the forward difference, backward on the final frame. A
/// single-frame sequence has no velocity, so only the distance criterion
/// applies and a warning goes to stderr.
std::vector<Eigen::VectorXd> annotate_body_contacts(const std::vector<MatrixX3d>& surface_frames,
                                                    const SceneIndex& scene,
                                                    const ContactParams& params = {});

/// Projects body contact labels onto the scene: the nearest scene point of
/// every contact vertex gets label 1.0. Output is one vector of scene-point
/// labels per frame.
std::vector<Eigen::VectorXd> transfer_env_contacts(const std::vector<Eigen::VectorXd>& body_labels,
                                                   const std::vector<MatrixX3d>& surface_frames,
                                                   const SceneIndex& scene);

/// Contact probabilities over a camera-frustum grid; same cell layout as
/// FrustumGrid (x fastest, then y, then z).
struct LabelGrid {
  GridSpec spec;
  std::vector<double> values;

  double at(int ix, int iy, int iz) const {
    return values[(static_cast<std::size_t>(iz) * spec.ny + iy) * spec.nx + ix];
  }
};

/// Separable 3D Gaussian blur of a label grid with zero padding at the
/// borders. Taps are exp(-i^2 / (2 sigma^2)) for |i| <= max(1, ceil(3 sigma)),
/// peak one, so an isolated unit cell keeps value 1 at its source and spreads
/// total mass equal to the 3D kernel sum. If overlap pushes a unit-peak input
/// above 1 the whole grid is rescaled back to peak 1. sigma = 0 returns the
/// input unchanged.
LabelGrid smooth_env_labels(const LabelGrid& grid, double sigma_bins);

/// Spatial blur over an unstructured point cloud with the same peak-one
/// Gaussian, measured in meters instead of grid bins; used to soften
/// per-scene-point labels without voxelizing. sigma = 0 returns the input.
Eigen::VectorXd smooth_point_labels(const Eigen::VectorXd& labels, const SceneIndex& scene,
                                    double sigma);

/// Seeded label noise: entries <= 0.5 flip to 1 with probability `fp_rate`,
/// entries > 0.5 flip to 0 with probability `fn_rate`.
std::vector<Eigen::VectorXd> corrupt_labels(const std::vector<Eigen::VectorXd>& labels,
                                            double fp_rate, double fn_rate, std::uint64_t seed);

/// Indices with label strictly greater than 0.5, ascending.
std::vector<int> effective_contacts(const Eigen::VectorXd& labels);

struct PrecisionRecall {
  double precision = 1.0;
  double recall = 1.0;
};

/// Treats labels > 0.5 as positive. An empty predicted (resp. true) set gives
/// precision (resp. recall) 1.
PrecisionRecall precision_recall(const Eigen::VectorXd& predicted, const Eigen::VectorXd& truth);

/// Per-frame body and (optional, possibly empty) environment labels. The file
/// stores body labels as dense probability arrays and environment labels as
/// index sets (entries > 0.5), so fractional env probabilities reload as 1.
struct ContactsFile {
  std::vector<Eigen::VectorXd> body;
  std::vector<Eigen::VectorXd> env;
};

void save_contacts(const ContactsFile& contacts, const std::filesystem::path& path);
ContactsFile load_contacts(const std::filesystem::path& path);

}  // namespace scenefit
