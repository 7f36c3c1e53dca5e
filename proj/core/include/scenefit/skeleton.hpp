#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace scenefit {

/// One node of the kinematic tree. The bone from parent to this joint carries
/// a capsule of radius `capsule_radius` (unused on the root). `limit_lo/hi`
/// bound the per-axis rotation range used by the procedural pose corpus.
struct Joint {
  std::string name;
  int parent = -1;
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();  // rest translation from parent, meters
  double capsule_radius = 0.0;
  Eigen::Vector3d limit_lo = Eigen::Vector3d::Zero();
  Eigen::Vector3d limit_hi = Eigen::Vector3d::Zero();
};

/// Surface sample in cylindrical coordinates on one bone capsule: `bone` is
/// the child joint index of the bone, `t` in [0,1] the axial fraction and
/// `azimuth` the angle around the bone axis.
struct SurfacePoint {
  int bone = 0;
  double t = 0.0;
  double azimuth = 0.0;
};

class SkeletonTemplate {
public:
  SkeletonTemplate() = default;
  SkeletonTemplate(std::vector<Joint> joints, std::vector<SurfacePoint> surface);

  int joint_count() const { return static_cast<int>(joints_.size()); }
  int surface_count() const { return static_cast<int>(surface_.size()); }
  const std::vector<Joint>& joints() const { return joints_; }
  const std::vector<SurfacePoint>& surface() const { return surface_; }

  /// Parent joint of the bone carrying surface point i.
  int surface_parent(int i) const { return surface_parent_[i]; }
  /// Surface point position at h=1 in the frame of its bone's parent joint.
  const Eigen::Vector3d& surface_local(int i) const { return surface_local_[i]; }

  /// Sum of rest bone lengths at h=1, meters.
  double total_bone_length() const { return total_bone_length_; }

private:
  void validate_and_build();

  std::vector<Joint> joints_;
  std::vector<SurfacePoint> surface_;
  std::vector<int> surface_parent_;
  std::vector<Eigen::Vector3d> surface_local_;
  double total_bone_length_ = 0.0;
};

/// Built-in 21-joint body with 655 surface samples; identical to the template
/// shipped in data/skeleton_template.json.
SkeletonTemplate default_skeleton();

SkeletonTemplate load_skeleton(const std::filesystem::path& path);
SkeletonTemplate read_skeleton(std::istream& in, const std::string& origin = "<stream>");
void save_skeleton(const SkeletonTemplate& tmpl, const std::filesystem::path& path);
void write_skeleton(const SkeletonTemplate& tmpl, std::ostream& out);

}  // namespace scenefit
