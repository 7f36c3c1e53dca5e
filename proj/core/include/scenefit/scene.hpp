#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "scenefit/types.hpp"

namespace scenefit {

/// Static scene geometry as a bag of 3D points in camera coordinates.
struct ScenePointCloud {
  MatrixX3d points;

  int size() const { return static_cast<int>(points.rows()); }
};

/// Reads .ply (ASCII) or .csv by extension.
ScenePointCloud load_point_cloud(const std::filesystem::path& path);
ScenePointCloud load_ply(const std::filesystem::path& path);
ScenePointCloud load_csv(const std::filesystem::path& path);
void save_ply(const ScenePointCloud& cloud, const std::filesystem::path& path);
void save_csv(const ScenePointCloud& cloud, const std::filesystem::path& path);

/// Exact nearest-neighbour index over a fixed point set (median-split kd-tree).
/// Ties on distance resolve to the smallest point index, so queries are
/// deterministic regardless of build order.
class SceneIndex {
public:
  explicit SceneIndex(MatrixX3d points);
  explicit SceneIndex(const ScenePointCloud& cloud) : SceneIndex(cloud.points) {}

  const MatrixX3d& points() const { return points_; }
  int size() const { return static_cast<int>(points_.rows()); }

  /// Index of the closest point; optionally reports its squared distance.
  int nearest(const Eigen::Vector3d& query, double* sq_dist = nullptr) const;

  /// All indices within `radius` (inclusive), ascending.
  std::vector<int> query_radius(const Eigen::Vector3d& query, double radius) const;

  /// The k closest points ordered by (distance, index); k is capped at size().
  std::vector<int> nearest_k(const Eigen::Vector3d& query, int k) const;

private:
  struct Node {
    int axis = -1;        // -1 marks a leaf
    double split = 0.0;
    int left = -1, right = -1;
    int begin = 0, end = 0;  // leaf range into order_
  };

  int build(int begin, int end);
  void nearest_rec(int node, const Eigen::Vector3d& q, double& best_d2, int& best_idx) const;
  void radius_rec(int node, const Eigen::Vector3d& q, double r2, std::vector<int>& out) const;

  MatrixX3d points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

/// Camera-frustum voxelization parameters: lateral bins follow pixel
/// coordinates, depth bins are linear in z over [z_near, z_far).
struct GridSpec {
  int nx = 32;
  int ny = 32;
  int nz = 256;
  double z_near = 0.5;
  double z_far = 8.0;

  void validate() const;
};

/// Occupancy counts over the camera frustum. Cell (ix, iy, iz) covers pixels
/// [ix, ix+1) * W/nx by [iy, iy+1) * H/ny and depth z_near + [iz, iz+1) * dz.
struct FrustumGrid {
  GridSpec spec;
  CameraIntrinsics cam;
  std::vector<std::int32_t> counts;  // x fastest, then y, then z

  std::int32_t at(int ix, int iy, int iz) const {
    return counts[(static_cast<std::size_t>(iz) * spec.ny + iy) * spec.nx + ix];
  }
  std::int64_t total() const;
};

/// Perspective normalization (fx*x/z, fy*y/z, z); throws PointBehindCamera
/// when any z <= z_min.
MatrixX3d frustum_normalize(const MatrixX3d& points, const CameraIntrinsics& cam,
                            double z_min = kDefaultZMin);

/// Bins points into the frustum grid; points outside the image or the depth
/// range are counted in `dropped` (may be null) instead of throwing.
FrustumGrid voxelize(const MatrixX3d& points, const CameraIntrinsics& cam, const GridSpec& spec,
                     int* dropped = nullptr);

/// Little-endian binary dump ("SFGRID01" magic). Round-trips exactly.
void save_grid(const FrustumGrid& grid, const std::filesystem::path& path);
FrustumGrid load_grid(const std::filesystem::path& path);

}  // namespace scenefit
