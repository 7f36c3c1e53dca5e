#include "scenefit/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <Eigen/Geometry>
#include <json.hpp>

#include "scenefit/atomic_file.hpp"
#include "scenefit/error.hpp"

namespace scenefit {
namespace {

bool finite(const Eigen::Vector3d& v) { return v.allFinite(); }

// Deterministic orthonormal frame (e1, e2) perpendicular to unit axis u:
// seed from the world axis least aligned with u, then Gram-Schmidt.
void bone_frame(const Eigen::Vector3d& u, Eigen::Vector3d& e1, Eigen::Vector3d& e2) {
  int k = 0;
  double best = std::abs(u.x());
  if (std::abs(u.y()) < best) { best = std::abs(u.y()); k = 1; }
  if (std::abs(u.z()) < best) { k = 2; }
  Eigen::Vector3d seed = Eigen::Vector3d::Unit(k);
  e1 = (seed - seed.dot(u) * u).normalized();
  e2 = u.cross(e1);
}

}  // namespace

SkeletonTemplate::SkeletonTemplate(std::vector<Joint> joints, std::vector<SurfacePoint> surface)
    : joints_(std::move(joints)), surface_(std::move(surface)) {
  validate_and_build();
}

void SkeletonTemplate::validate_and_build() {
  const int k = static_cast<int>(joints_.size());
  if (k < 2) throw InputError("skeleton needs at least 2 joints, got " + std::to_string(k));
  if (joints_[0].parent != -1)
    throw InputError("joint 0 must be the root (parent -1), got parent " +
                     std::to_string(joints_[0].parent));
  total_bone_length_ = 0.0;
  for (int i = 0; i < k; ++i) {
    const Joint& j = joints_[i];
    if (!finite(j.offset) || !finite(j.limit_lo) || !finite(j.limit_hi) ||
        !std::isfinite(j.capsule_radius))
      throw InputError("joint " + std::to_string(i) + " (" + j.name + ") has non-finite fields");
    if ((j.limit_hi - j.limit_lo).minCoeff() < 0.0)
      throw InputError("joint " + std::to_string(i) + " (" + j.name + ") has limit_lo > limit_hi");
    if (i == 0) continue;
    if (j.parent < 0 || j.parent >= i)
      throw InputError("joint " + std::to_string(i) + " (" + j.name +
                       ") needs parent in [0, " + std::to_string(i) + "), got " +
                       std::to_string(j.parent));
    const double len = j.offset.norm();
    if (len <= 0.0)
      throw InputError("joint " + std::to_string(i) + " (" + j.name + ") has zero-length bone");
    if (j.capsule_radius <= 0.0)
      throw InputError("joint " + std::to_string(i) + " (" + j.name +
                       ") needs capsule_radius > 0, got " + std::to_string(j.capsule_radius));
    total_bone_length_ += len;
  }

  const int n = static_cast<int>(surface_.size());
  surface_parent_.resize(n);
  surface_local_.resize(n);
  for (int i = 0; i < n; ++i) {
    const SurfacePoint& s = surface_[i];
    if (s.bone < 1 || s.bone >= k)
      throw InputError("surface point " + std::to_string(i) + " references bone " +
                       std::to_string(s.bone) + ", valid range [1, " + std::to_string(k) + ")");
    if (!(s.t >= 0.0 && s.t <= 1.0) || !std::isfinite(s.azimuth))
      throw InputError("surface point " + std::to_string(i) + " has invalid (t, azimuth)");
    const Joint& j = joints_[s.bone];
    const Eigen::Vector3d axis = j.offset;
    const Eigen::Vector3d u = axis.normalized();
    Eigen::Vector3d e1, e2;
    bone_frame(u, e1, e2);
    surface_parent_[i] = j.parent;
    surface_local_[i] =
        s.t * axis + j.capsule_radius * (std::cos(s.azimuth) * e1 + std::sin(s.azimuth) * e2);
  }
}

namespace {

Joint make_joint(std::string name, int parent, Eigen::Vector3d offset, double radius,
                 Eigen::Vector3d lo, Eigen::Vector3d hi) {
  Joint j;
  j.name = std::move(name);
  j.parent = parent;
  j.offset = std::move(offset);
  j.capsule_radius = radius;
  j.limit_lo = std::move(lo);
  j.limit_hi = std::move(hi);
  return j;
}

std::vector<Joint> default_joints() {
  using V = Eigen::Vector3d;
  // Camera-style frame: +y down, subject roughly facing -z; "l_" joints on +x.
  // Rest pose is a T-pose; the pose prior supplies an arms-down mean pose.
  const V spine_lo(-0.30, -0.30, -0.30), spine_hi(0.30, 0.30, 0.30);
  const V neck_lo(-0.40, -0.40, -0.40), neck_hi(0.40, 0.40, 0.40);
  const V head_lo(-0.45, -0.45, -0.45), head_hi(0.45, 0.45, 0.45);
  const V cap_lo(-0.10, -0.10, -0.10), cap_hi(0.10, 0.10, 0.10);
  const V hip_lo(-1.60, -0.50, -0.50), hip_hi(0.40, 0.50, 0.50);
  const V knee_lo(-0.10, -0.08, -0.08), knee_hi(2.20, 0.08, 0.08);
  const V ankle_lo(-0.50, -0.30, -0.30), ankle_hi(0.50, 0.30, 0.30);
  const V foot_lo(-0.30, -0.30, -0.30), foot_hi(0.30, 0.30, 0.30);
  const V shoulder_lo(-1.20, -1.20, -1.40), shoulder_hi(1.20, 1.20, 1.40);
  const V elbow_lo(-0.30, -1.50, -1.50), elbow_hi(0.30, 1.50, 1.50);
  const V wrist_lo(-0.50, -0.50, -0.50), wrist_hi(0.50, 0.50, 0.50);
  const V root_lo(-0.25, -0.25, -0.25), root_hi(0.25, 0.25, 0.25);

  std::vector<Joint> j;
  j.reserve(21);
  j.push_back(make_joint("pelvis", -1, V(0, 0, 0), 0.0, root_lo, root_hi));          // 0
  j.push_back(make_joint("spine1", 0, V(0, -0.12, 0), 0.110, spine_lo, spine_hi));  // 1
  j.push_back(make_joint("spine2", 1, V(0, -0.14, 0), 0.105, spine_lo, spine_hi));  // 2
  j.push_back(make_joint("chest", 2, V(0, -0.14, 0), 0.105, spine_lo, spine_hi));   // 3
  j.push_back(make_joint("neck", 3, V(0, -0.13, 0), 0.050, neck_lo, neck_hi));      // 4
  j.push_back(make_joint("head", 4, V(0, -0.11, 0), 0.075, head_lo, head_hi));      // 5
  j.push_back(make_joint("head_top", 5, V(0, -0.12, 0), 0.085, cap_lo, cap_hi));    // 6
  j.push_back(make_joint("l_hip", 0, V(0.09, 0.05, 0), 0.075, hip_lo, hip_hi));     // 7
  j.push_back(make_joint("l_knee", 7, V(0, 0.42, 0), 0.065, knee_lo, knee_hi));     // 8
  j.push_back(make_joint("l_ankle", 8, V(0, 0.42, 0), 0.050, ankle_lo, ankle_hi));  // 9
  j.push_back(make_joint("l_foot", 9, V(0, 0.05, -0.15), 0.035, foot_lo, foot_hi)); // 10
  j.push_back(make_joint("r_hip", 0, V(-0.09, 0.05, 0), 0.075, hip_lo, hip_hi));    // 11
  j.push_back(make_joint("r_knee", 11, V(0, 0.42, 0), 0.065, knee_lo, knee_hi));    // 12
  j.push_back(make_joint("r_ankle", 12, V(0, 0.42, 0), 0.050, ankle_lo, ankle_hi)); // 13
  j.push_back(make_joint("r_foot", 13, V(0, 0.05, -0.15), 0.035, foot_lo, foot_hi));// 14
  j.push_back(make_joint("l_shoulder", 3, V(0.18, -0.02, 0), 0.060, shoulder_lo, shoulder_hi)); // 15
  j.push_back(make_joint("l_elbow", 15, V(0.26, 0, 0), 0.045, elbow_lo, elbow_hi)); // 16
  j.push_back(make_joint("l_wrist", 16, V(0.25, 0, 0), 0.040, wrist_lo, wrist_hi)); // 17
  j.push_back(make_joint("r_shoulder", 3, V(-0.18, -0.02, 0), 0.060, shoulder_lo, shoulder_hi)); // 18
  j.push_back(make_joint("r_elbow", 18, V(-0.26, 0, 0), 0.045, elbow_lo, elbow_hi)); // 19
  j.push_back(make_joint("r_wrist", 19, V(-0.25, 0, 0), 0.040, wrist_lo, wrist_hi)); // 20
  return j;
}

// Distribute `total` surface samples over bones proportionally to the lateral
// capsule area proxy r*(L+r), using largest-remainder rounding so the counts
// are exact and deterministic.
std::vector<int> apportion_surface(const std::vector<Joint>& joints, int total) {
  const int k = static_cast<int>(joints.size());
  std::vector<double> weight(k, 0.0);
  double sum = 0.0;
  for (int i = 1; i < k; ++i) {
    weight[i] = joints[i].capsule_radius * (joints[i].offset.norm() + joints[i].capsule_radius);
    sum += weight[i];
  }
  std::vector<int> count(k, 0);
  std::vector<std::pair<double, int>> remainder;  // (-frac, bone): sort ascending
  int assigned = 0;
  for (int i = 1; i < k; ++i) {
    const double exact = total * weight[i] / sum;
    count[i] = static_cast<int>(std::floor(exact));
    assigned += count[i];
    remainder.emplace_back(-(exact - count[i]), i);
  }
  std::stable_sort(remainder.begin(), remainder.end());
  for (int r = 0; r < total - assigned; ++r) ++count[remainder[r].second];
  return count;
}

std::vector<SurfacePoint> default_surface(const std::vector<Joint>& joints, int total) {
  const std::vector<int> count = apportion_surface(joints, total);
  // Low-discrepancy azimuth lattice: golden-ratio rotation decorrelates the
  // angle from the axial position so rings do not line up across t.
  constexpr double kGolden = 0.618033988749895;
  constexpr double kTwoPi = 6.283185307179586;
  std::vector<SurfacePoint> pts;
  pts.reserve(total);
  for (int b = 1; b < static_cast<int>(joints.size()); ++b) {
    for (int j = 0; j < count[b]; ++j) {
      SurfacePoint p;
      p.bone = b;
      p.t = (j + 0.5) / count[b];
      p.azimuth = kTwoPi * std::fmod(j * kGolden, 1.0);
      pts.push_back(p);
    }
  }
  return pts;
}

}  // namespace

SkeletonTemplate default_skeleton() {
  std::vector<Joint> joints = default_joints();
  std::vector<SurfacePoint> surface = default_surface(joints, 655);
  return SkeletonTemplate(std::move(joints), std::move(surface));
}

namespace {

using nlohmann::json;

json vec_to_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::Vector3d vec_from_json(const json& a, const char* what) {
  if (!a.is_array() || a.size() != 3)
    throw InputError(std::string(what) + " must be an array of 3 numbers");
  return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

}  // namespace

SkeletonTemplate read_skeleton(std::istream& in, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(origin + ": " + e.what());
  }
  try {
    if (doc.value("format", "") != "scenefit.skeleton")
      throw InputError("missing or wrong \"format\" (expected \"scenefit.skeleton\")");
    std::vector<Joint> joints;
    for (const json& jj : doc.at("joints")) {
      Joint j;
      j.name = jj.at("name").get<std::string>();
      j.parent = jj.at("parent").get<int>();
      j.offset = vec_from_json(jj.at("offset"), "offset");
      j.capsule_radius = jj.at("capsule_radius").get<double>();
      j.limit_lo = vec_from_json(jj.at("limit_lo"), "limit_lo");
      j.limit_hi = vec_from_json(jj.at("limit_hi"), "limit_hi");
      joints.push_back(std::move(j));
    }
    std::vector<SurfacePoint> surface;
    for (const json& sj : doc.at("surface")) {
      SurfacePoint s;
      s.bone = sj.at("bone").get<int>();
      s.t = sj.at("t").get<double>();
      s.azimuth = sj.at("azimuth").get<double>();
      surface.push_back(s);
    }
    return SkeletonTemplate(std::move(joints), std::move(surface));
  } catch (const json::exception& e) {
    throw InputError(origin + ": " + e.what());
  } catch (const InputError& e) {
    throw InputError(origin + ": " + e.what());
  }
}

SkeletonTemplate load_skeleton(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open skeleton file " + path.string());
  return read_skeleton(in, path.string());
}

void write_skeleton(const SkeletonTemplate& tmpl, std::ostream& out) {
  json doc;
  doc["format"] = "scenefit.skeleton";
  doc["version"] = 1;
  json joints = json::array();
  for (const Joint& j : tmpl.joints()) {
    json jj;
    jj["name"] = j.name;
    jj["parent"] = j.parent;
    jj["offset"] = vec_to_json(j.offset);
    jj["capsule_radius"] = j.capsule_radius;
    jj["limit_lo"] = vec_to_json(j.limit_lo);
    jj["limit_hi"] = vec_to_json(j.limit_hi);
    joints.push_back(std::move(jj));
  }
  doc["joints"] = std::move(joints);
  json surface = json::array();
  for (const SurfacePoint& s : tmpl.surface()) {
    json sj;
    sj["bone"] = s.bone;
    sj["t"] = s.t;
    sj["azimuth"] = s.azimuth;
    surface.push_back(std::move(sj));
  }
  doc["surface"] = std::move(surface);
  out << doc.dump(2) << '\n';
}

void save_skeleton(const SkeletonTemplate& tmpl, const std::filesystem::path& path) {
  std::ostringstream out;
  write_skeleton(tmpl, out);
  atomic_write_text(path, out.str());
}

}  // namespace scenefit
