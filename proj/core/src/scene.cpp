#include "scenefit/scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "scenefit/atomic_file.hpp"
#include "scenefit/error.hpp"

namespace scenefit {

// ---------------------------------------------------------------------------
// Point cloud IO

namespace {

ScenePointCloud make_cloud(std::vector<Eigen::Vector3d>&& pts, const std::string& origin) {
  ScenePointCloud cloud;
  cloud.points.resize(static_cast<Eigen::Index>(pts.size()), 3);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!pts[i].allFinite())
      throw InputError(origin + ": point " + std::to_string(i) + " is not finite");
    cloud.points.row(static_cast<Eigen::Index>(i)) = pts[i];
  }
  return cloud;
}

}  // namespace

ScenePointCloud load_ply(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open point cloud " + path.string());
  const std::string origin = path.string();

  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0)
    throw InputError(origin + ": not a PLY file (missing \"ply\" magic)");

  // Header: only ascii 1.0; record per-element counts and the x/y/z property
  // columns of the vertex element.
  struct Element {
    std::string name;
    long count = 0;
    int props = 0;
    int ix = -1, iy = -1, iz = -1;
  };
  std::vector<Element> elements;
  bool ascii = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "comment" || tok.empty()) continue;
    if (tok == "format") {
      std::string fmt;
      ls >> fmt;
      ascii = (fmt == "ascii");
      if (!ascii) throw InputError(origin + ": unsupported PLY format \"" + fmt + "\" (need ascii)");
    } else if (tok == "element") {
      Element e;
      ls >> e.name >> e.count;
      elements.push_back(e);
    } else if (tok == "property") {
      if (elements.empty()) throw InputError(origin + ": property before any element");
      Element& e = elements.back();
      std::string type, name;
      ls >> type >> name;
      if (type == "list") throw InputError(origin + ": list properties are not supported");
      if (name == "x") e.ix = e.props;
      if (name == "y") e.iy = e.props;
      if (name == "z") e.iz = e.props;
      ++e.props;
    } else if (tok == "end_header") {
      break;
    } else {
      throw InputError(origin + ": unsupported header line \"" + line + "\"");
    }
  }
  if (!ascii) throw InputError(origin + ": missing format line");

  std::vector<Eigen::Vector3d> pts;
  for (const Element& e : elements) {
    const bool is_vertex = (e.name == "vertex");
    if (is_vertex && (e.ix < 0 || e.iy < 0 || e.iz < 0))
      throw InputError(origin + ": vertex element lacks x/y/z properties");
    for (long r = 0; r < e.count; ++r) {
      if (!std::getline(in, line))
        throw InputError(origin + ": truncated data (element \"" + e.name + "\" row " +
                         std::to_string(r) + ")");
      if (!is_vertex) continue;
      std::istringstream ls(line);
      Eigen::Vector3d p;
      double v;
      for (int c = 0; c < e.props; ++c) {
        if (!(ls >> v))
          throw InputError(origin + ": bad vertex row " + std::to_string(r) + ": \"" + line + "\"");
        if (c == e.ix) p.x() = v;
        if (c == e.iy) p.y() = v;
        if (c == e.iz) p.z() = v;
      }
      pts.push_back(p);
    }
  }
  return make_cloud(std::move(pts), origin);
}

ScenePointCloud load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open point cloud " + path.string());
  const std::string origin = path.string();

  std::vector<Eigen::Vector3d> pts;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    Eigen::Vector3d p;
    char comma;
    if (ls >> p.x() >> comma >> p.y() >> comma >> p.z()) {
      pts.push_back(p);
    } else if (pts.empty() && lineno == 1) {
      continue;  // header row like "x,y,z"
    } else {
      throw InputError(origin + ":" + std::to_string(lineno) + ": expected \"x,y,z\", got \"" +
                       line + "\"");
    }
  }
  return make_cloud(std::move(pts), origin);
}

ScenePointCloud load_point_cloud(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".ply") return load_ply(path);
  if (ext == ".csv") return load_csv(path);
  throw InputError("unknown point cloud extension \"" + ext + "\" for " + path.string() +
                   " (expected .ply or .csv)");
}

void save_ply(const ScenePointCloud& cloud, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size()
      << "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
  out.precision(17);
  for (Eigen::Index i = 0; i < cloud.points.rows(); ++i)
    out << cloud.points(i, 0) << ' ' << cloud.points(i, 1) << ' ' << cloud.points(i, 2) << '\n';
  atomic_write_text(path, out.str());
}

void save_csv(const ScenePointCloud& cloud, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "x,y,z\n";
  out.precision(17);
  for (Eigen::Index i = 0; i < cloud.points.rows(); ++i)
    out << cloud.points(i, 0) << ',' << cloud.points(i, 1) << ',' << cloud.points(i, 2) << '\n';
  atomic_write_text(path, out.str());
}

// ---------------------------------------------------------------------------
// SceneIndex

namespace {
constexpr int kLeafSize = 8;
}

SceneIndex::SceneIndex(MatrixX3d points) : points_(std::move(points)) {
  if (points_.rows() == 0) throw InputError("scene index needs at least one point");
  if (!points_.allFinite()) throw InputError("scene points must be finite");
  order_.resize(points_.rows());
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.reserve(2 * order_.size() / kLeafSize + 2);
  root_ = build(0, static_cast<int>(order_.size()));
}

int SceneIndex::build(int begin, int end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  if (end - begin <= kLeafSize) {
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    return id;
  }
  // Split along the axis with the largest spread in this range.
  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = -lo;
  for (int i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_.row(order_[i]).transpose());
    hi = hi.cwiseMax(points_.row(order_[i]).transpose());
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  const int mid = begin + (end - begin) / 2;
  // (coordinate, index) ordering makes the partition deterministic under ties.
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) {
                     const double ca = points_(a, axis), cb = points_(b, axis);
                     return ca < cb || (ca == cb && a < b);
                   });
  const double split = points_(order_[mid], axis);
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void SceneIndex::nearest_rec(int node, const Eigen::Vector3d& q, double& best_d2,
                             int& best_idx) const {
  const Node& n = nodes_[node];
  if (n.axis < 0) {
    for (int i = n.begin; i < n.end; ++i) {
      const int idx = order_[i];
      const double d2 = (points_.row(idx).transpose() - q).squaredNorm();
      if (d2 < best_d2 || (d2 == best_d2 && idx < best_idx)) {
        best_d2 = d2;
        best_idx = idx;
      }
    }
    return;
  }
  const double diff = q[n.axis] - n.split;
  const int near = diff < 0.0 ? n.left : n.right;
  const int far = diff < 0.0 ? n.right : n.left;
  nearest_rec(near, q, best_d2, best_idx);
  // Equal plane distance may still hide an equal-distance point with a
  // smaller index, so prune only on strict excess.
  if (diff * diff <= best_d2) nearest_rec(far, q, best_d2, best_idx);
}

int SceneIndex::nearest(const Eigen::Vector3d& query, double* sq_dist) const {
  double best_d2 = std::numeric_limits<double>::infinity();
  int best_idx = std::numeric_limits<int>::max();
  nearest_rec(root_, query, best_d2, best_idx);
  if (sq_dist) *sq_dist = best_d2;
  return best_idx;
}

void SceneIndex::radius_rec(int node, const Eigen::Vector3d& q, double r2,
                            std::vector<int>& out) const {
  const Node& n = nodes_[node];
  if (n.axis < 0) {
    for (int i = n.begin; i < n.end; ++i) {
      const int idx = order_[i];
      if ((points_.row(idx).transpose() - q).squaredNorm() <= r2) out.push_back(idx);
    }
    return;
  }
  const double diff = q[n.axis] - n.split;
  if (diff <= 0.0 || diff * diff <= r2) radius_rec(n.left, q, r2, out);
  if (diff >= 0.0 || diff * diff <= r2) radius_rec(n.right, q, r2, out);
}

std::vector<int> SceneIndex::query_radius(const Eigen::Vector3d& query, double radius) const {
  if (!(radius >= 0.0)) throw InputError("query_radius needs radius >= 0");
  std::vector<int> out;
  radius_rec(root_, query, radius * radius, out);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> SceneIndex::nearest_k(const Eigen::Vector3d& query, int k) const {
  if (k < 1) throw InputError("nearest_k needs k >= 1");
  k = std::min(k, size());
  // Grow the search radius until at least k points fall inside, then rank by
  // (distance, index). Exact because the radius query is exact.
  double r = 0.05;
  std::vector<int> hits;
  for (;;) {
    hits = query_radius(query, r);
    if (static_cast<int>(hits.size()) >= k) break;
    r *= 2.0;
  }
  std::vector<std::pair<double, int>> ranked;
  ranked.reserve(hits.size());
  for (int i : hits)
    ranked.emplace_back((points_.row(i).transpose() - query).squaredNorm(), i);
  std::sort(ranked.begin(), ranked.end());
  std::vector<int> out(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) out[static_cast<std::size_t>(i)] = ranked[i].second;
  return out;
}

// ---------------------------------------------------------------------------
// Frustum grid

void GridSpec::validate() const {
  if (nx < 1 || ny < 1 || nz < 1)
    throw InputError("grid dimensions must be >= 1, got " + std::to_string(nx) + "x" +
                     std::to_string(ny) + "x" + std::to_string(nz));
  if (!(z_near > 0.0) || !(z_far > z_near))
    throw InputError("grid depth range needs 0 < z_near < z_far, got [" +
                     std::to_string(z_near) + ", " + std::to_string(z_far) + "]");
}

std::int64_t FrustumGrid::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

MatrixX3d frustum_normalize(const MatrixX3d& points, const CameraIntrinsics& cam, double z_min) {
  cam.validate();
  MatrixX3d out(points.rows(), 3);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const double z = points(i, 2);
    if (!(z > z_min)) throw PointBehindCamera(static_cast<std::size_t>(i), z, z_min);
    out(i, 0) = cam.fx * points(i, 0) / z;
    out(i, 1) = cam.fy * points(i, 1) / z;
    out(i, 2) = z;
  }
  return out;
}

FrustumGrid voxelize(const MatrixX3d& points, const CameraIntrinsics& cam, const GridSpec& spec,
                     int* dropped) {
  cam.validate();
  spec.validate();
  FrustumGrid grid;
  grid.spec = spec;
  grid.cam = cam;
  grid.counts.assign(static_cast<std::size_t>(spec.nx) * spec.ny * spec.nz, 0);
  int outside = 0;
  const double dz = spec.z_far - spec.z_near;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const double z = points(i, 2);
    if (!(z >= spec.z_near) || !(z < spec.z_far)) {
      ++outside;
      continue;
    }
    const double u = cam.fx * points(i, 0) / z + cam.cx;
    const double v = cam.fy * points(i, 1) / z + cam.cy;
    if (!(u >= 0.0) || !(u < cam.image_w) || !(v >= 0.0) || !(v < cam.image_h)) {
      ++outside;
      continue;
    }
    const int ix = std::min(spec.nx - 1, static_cast<int>(u / cam.image_w * spec.nx));
    const int iy = std::min(spec.ny - 1, static_cast<int>(v / cam.image_h * spec.ny));
    const int iz = std::min(spec.nz - 1, static_cast<int>((z - spec.z_near) / dz * spec.nz));
    ++grid.counts[(static_cast<std::size_t>(iz) * spec.ny + iy) * spec.nx + ix];
  }
  if (dropped) *dropped = outside;
  return grid;
}

namespace {

constexpr char kGridMagic[8] = {'S', 'F', 'G', 'R', 'I', 'D', '0', '1'};

template <typename T>
void write_raw(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in, const std::string& origin) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw InputError(origin + ": truncated grid file");
  return v;
}

}  // namespace

void save_grid(const FrustumGrid& grid, const std::filesystem::path& path) {
  std::ostringstream out;
  out.write(kGridMagic, sizeof(kGridMagic));
  write_raw<std::int32_t>(out, grid.spec.nx);
  write_raw<std::int32_t>(out, grid.spec.ny);
  write_raw<std::int32_t>(out, grid.spec.nz);
  write_raw<double>(out, grid.spec.z_near);
  write_raw<double>(out, grid.spec.z_far);
  write_raw<double>(out, grid.cam.fx);
  write_raw<double>(out, grid.cam.fy);
  write_raw<double>(out, grid.cam.cx);
  write_raw<double>(out, grid.cam.cy);
  write_raw<double>(out, grid.cam.image_w);
  write_raw<double>(out, grid.cam.image_h);
  out.write(reinterpret_cast<const char*>(grid.counts.data()),
            static_cast<std::streamsize>(grid.counts.size() * sizeof(std::int32_t)));
  atomic_write_text(path, out.str());
}

FrustumGrid load_grid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open grid file " + path.string());
  const std::string origin = path.string();
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kGridMagic, sizeof(magic)) != 0)
    throw InputError(origin + ": not a frustum grid dump (bad magic)");
  FrustumGrid grid;
  grid.spec.nx = read_raw<std::int32_t>(in, origin);
  grid.spec.ny = read_raw<std::int32_t>(in, origin);
  grid.spec.nz = read_raw<std::int32_t>(in, origin);
  grid.spec.z_near = read_raw<double>(in, origin);
  grid.spec.z_far = read_raw<double>(in, origin);
  grid.cam.fx = read_raw<double>(in, origin);
  grid.cam.fy = read_raw<double>(in, origin);
  grid.cam.cx = read_raw<double>(in, origin);
  grid.cam.cy = read_raw<double>(in, origin);
  grid.cam.image_w = read_raw<double>(in, origin);
  grid.cam.image_h = read_raw<double>(in, origin);
  grid.spec.validate();
  grid.cam.validate();
  grid.counts.resize(static_cast<std::size_t>(grid.spec.nx) * grid.spec.ny * grid.spec.nz);
  if (!in.read(reinterpret_cast<char*>(grid.counts.data()),
               static_cast<std::streamsize>(grid.counts.size() * sizeof(std::int32_t))))
    throw InputError(origin + ": truncated grid file");
  return grid;
}

}  // namespace scenefit
