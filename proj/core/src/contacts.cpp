#include "scenefit/contacts.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <string>

#include <json.hpp>

#include "scenefit/atomic_file.hpp"
#include "scenefit/error.hpp"
#include "scenefit/io.hpp"
#include "scenefit/rng.hpp"

namespace scenefit {

void ContactParams::validate() const {
  if (!(dist_threshold > 0.0) || !(vel_threshold > 0.0) || !(fps > 0.0))
    throw InputError("contact parameters must be positive");
}

std::vector<Eigen::VectorXd> annotate_body_contacts(const std::vector<MatrixX3d>& surface_frames,
                                                    const SceneIndex& scene,
                                                    const ContactParams& params) {
  params.validate();
  const int frames = static_cast<int>(surface_frames.size());
  if (frames == 1)
    std::cerr << "warning: single-frame annotation has no velocities; "
                 "labelling by distance only\n";
  std::vector<Eigen::VectorXd> labels(frames);
  const double d2_max = params.dist_threshold * params.dist_threshold;
  for (int t = 0; t < frames; ++t) {
    const MatrixX3d& surf = surface_frames[t];
    if (surf.rows() != surface_frames[0].rows())
      throw InputError("frame " + std::to_string(t) + " has " + std::to_string(surf.rows()) +
                       " surface points, frame 0 has " + std::to_string(surface_frames[0].rows()));
    labels[t] = Eigen::VectorXd::Zero(surf.rows());
    for (Eigen::Index i = 0; i < surf.rows(); ++i) {
      double d2 = 0.0;
      scene.nearest(surf.row(i).transpose(), &d2);
      if (d2 >= d2_max) continue;
      double speed = 0.0;
      if (frames > 1) {
        const int a = (t + 1 < frames) ? t : t - 1;  // forward diff, backward on last frame
        const int b = a + 1;
        speed = (surface_frames[b].row(i) - surface_frames[a].row(i)).norm() * params.fps;
      }
      if (speed < params.vel_threshold) labels[t][i] = 1.0;
    }
  }
  return labels;
}

std::vector<Eigen::VectorXd> transfer_env_contacts(const std::vector<Eigen::VectorXd>& body_labels,
                                                   const std::vector<MatrixX3d>& surface_frames,
                                                   const SceneIndex& scene) {
  if (body_labels.size() != surface_frames.size())
    throw InputError("contact transfer needs one label vector per surface frame");
  std::vector<Eigen::VectorXd> env(body_labels.size());
  for (std::size_t t = 0; t < body_labels.size(); ++t) {
    if (body_labels[t].size() != surface_frames[t].rows())
      throw InputError("frame " + std::to_string(t) + ": label/surface size mismatch");
    env[t] = Eigen::VectorXd::Zero(scene.size());
    for (Eigen::Index i = 0; i < body_labels[t].size(); ++i) {
      if (body_labels[t][i] <= 0.5) continue;
      env[t][scene.nearest(surface_frames[t].row(i).transpose())] = 1.0;
    }
  }
  return env;
}

namespace {

/// One blur pass along `axis` (0 = x, 1 = y, 2 = z) with zero padding:
/// dst[c] = sum_o taps[|o|] * src[c shifted by o along axis].
std::vector<double> blur_pass(const std::vector<double>& src, const GridSpec& spec, int axis,
                              const std::vector<double>& taps) {
  const int n[3] = {spec.nx, spec.ny, spec.nz};
  const int radius = static_cast<int>(taps.size()) - 1;
  std::vector<double> dst(src.size(), 0.0);
  for (int z = 0; z < spec.nz; ++z)
    for (int y = 0; y < spec.ny; ++y)
      for (int x = 0; x < spec.nx; ++x) {
        double acc = 0.0;
        for (int o = -radius; o <= radius; ++o) {
          int q[3] = {x, y, z};
          q[axis] += o;
          if (q[axis] < 0 || q[axis] >= n[axis]) continue;
          acc += taps[std::abs(o)] *
                 src[(static_cast<std::size_t>(q[2]) * spec.ny + q[1]) * spec.nx + q[0]];
        }
        dst[(static_cast<std::size_t>(z) * spec.ny + y) * spec.nx + x] = acc;
      }
  return dst;
}

}  // namespace

LabelGrid smooth_env_labels(const LabelGrid& grid, double sigma_bins) {
  grid.spec.validate();
  const std::size_t cells = static_cast<std::size_t>(grid.spec.nx) * grid.spec.ny * grid.spec.nz;
  if (grid.values.size() != cells)
    throw InputError("label grid has " + std::to_string(grid.values.size()) + " values for " +
                     std::to_string(cells) + " cells");
  if (!(sigma_bins >= 0.0)) throw InputError("smoothing sigma must be >= 0");
  if (sigma_bins == 0.0) return grid;

  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma_bins)));
  std::vector<double> taps(radius + 1);
  for (int i = 0; i <= radius; ++i)
    taps[i] = std::exp(-static_cast<double>(i) * i / (2.0 * sigma_bins * sigma_bins));

  LabelGrid out = grid;
  for (int axis = 0; axis < 3; ++axis) out.values = blur_pass(out.values, grid.spec, axis, taps);

  // A probability grid (peak 1) stays a probability grid: overlapping bumps
  // can exceed 1, in which case the whole field is rescaled back to peak 1.
  const double in_peak = *std::max_element(grid.values.begin(), grid.values.end());
  const double out_peak = *std::max_element(out.values.begin(), out.values.end());
  if (in_peak == 1.0 && out_peak > 1.0)
    for (double& v : out.values) v /= out_peak;
  return out;
}

Eigen::VectorXd smooth_point_labels(const Eigen::VectorXd& labels, const SceneIndex& scene,
                                    double sigma) {
  if (labels.size() != scene.size())
    throw InputError("label count " + std::to_string(labels.size()) +
                     " does not match scene size " + std::to_string(scene.size()));
  if (!(sigma >= 0.0)) throw InputError("smoothing sigma must be >= 0");
  if (sigma == 0.0) return labels;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(labels.size());
  const double inv = 1.0 / (2.0 * sigma * sigma);
  // 7-sigma cutoff: the dropped tail is < 1e-10 per point, far below the
  // 1e-6 mass tolerance this routine is held to.
  const double cutoff = 7.0 * sigma;
  for (Eigen::Index j = 0; j < labels.size(); ++j) {
    if (labels[j] == 0.0) continue;
    const Eigen::Vector3d src = scene.points().row(j).transpose();
    for (int i : scene.query_radius(src, cutoff)) {
      const double d2 = (scene.points().row(i).transpose() - src).squaredNorm();
      out[i] += labels[j] * std::exp(-d2 * inv);
    }
  }
  const double peak = out.maxCoeff();
  if (peak > 1.0) out /= peak;
  return out;
}

std::vector<Eigen::VectorXd> corrupt_labels(const std::vector<Eigen::VectorXd>& labels,
                                            double fp_rate, double fn_rate, std::uint64_t seed) {
  if (!(fp_rate >= 0.0 && fp_rate <= 1.0) || !(fn_rate >= 0.0 && fn_rate <= 1.0))
    throw InputError("corruption rates must be in [0, 1]");
  std::vector<Eigen::VectorXd> out(labels.size());
  for (std::size_t t = 0; t < labels.size(); ++t) {
    Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    out[t] = labels[t];
    for (Eigen::Index i = 0; i < out[t].size(); ++i) {
      const double u = uni(rng);  // one draw per entry keeps the stream aligned
      if (out[t][i] > 0.5) {
        if (u < fn_rate) out[t][i] = 0.0;
      } else {
        if (u < fp_rate) out[t][i] = 1.0;
      }
    }
  }
  return out;
}

std::vector<int> effective_contacts(const Eigen::VectorXd& labels) {
  std::vector<int> out;
  for (Eigen::Index i = 0; i < labels.size(); ++i)
    if (labels[i] > 0.5) out.push_back(static_cast<int>(i));
  return out;
}

PrecisionRecall precision_recall(const Eigen::VectorXd& predicted, const Eigen::VectorXd& truth) {
  if (predicted.size() != truth.size())
    throw InputError("precision_recall needs equal-length label vectors");
  int tp = 0, fp = 0, fn = 0;
  for (Eigen::Index i = 0; i < predicted.size(); ++i) {
    const bool p = predicted[i] > 0.5;
    const bool t = truth[i] > 0.5;
    tp += p && t;
    fp += p && !t;
    fn += !p && t;
  }
  PrecisionRecall pr;
  if (tp + fp > 0) pr.precision = static_cast<double>(tp) / (tp + fp);
  if (tp + fn > 0) pr.recall = static_cast<double>(tp) / (tp + fn);
  return pr;
}

namespace {

using nlohmann::json;

json labels_to_json(const std::vector<Eigen::VectorXd>& labels) {
  json arr = json::array();
  for (const Eigen::VectorXd& frame : labels) {
    json row = json::array();
    for (Eigen::Index i = 0; i < frame.size(); ++i) row.push_back(frame[i]);
    arr.push_back(std::move(row));
  }
  return arr;
}

std::vector<Eigen::VectorXd> labels_from_json(const json& arr, const std::string& what) {
  if (!arr.is_array()) throw InputError(what + " must be an array of per-frame label arrays");
  std::vector<Eigen::VectorXd> out;
  for (const json& row : arr) {
    Eigen::VectorXd frame(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) frame[static_cast<Eigen::Index>(i)] = row[i].get<double>();
    out.push_back(std::move(frame));
  }
  return out;
}

}  // namespace

void save_contacts(const ContactsFile& contacts, const std::filesystem::path& path) {
  if (!contacts.env.empty() && contacts.env.size() != contacts.body.size())
    throw InputError("environment labels must be empty or match the body frame count");
  json doc;
  doc["format"] = "scenefit.contacts";
  doc["version"] = 1;
  doc["body"] = labels_to_json(contacts.body);
  Eigen::Index env_points = 0;
  json env = json::array();
  for (const Eigen::VectorXd& frame : contacts.env) {
    if (env_points == 0) env_points = frame.size();
    if (frame.size() != env_points)
      throw InputError("environment label frames disagree on scene size");
    env.push_back(effective_contacts(frame));
  }
  doc["env_points"] = env_points;
  doc["env"] = std::move(env);
  atomic_write_text(path, doc.dump() + "\n");
}

ContactsFile load_contacts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open contacts file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  try {
    check_format(doc, "scenefit.contacts", 1, path.string());
    ContactsFile contacts;
    contacts.body = labels_from_json(doc.at("body"), "\"body\"");
    const Eigen::Index env_points = doc.value("env_points", 0);
    for (const json& row : doc.value("env", json::array())) {
      Eigen::VectorXd frame = Eigen::VectorXd::Zero(env_points);
      int prev = -1;
      for (const json& entry : row) {
        const int idx = entry.get<int>();
        if (idx <= prev || idx >= env_points)
          throw InputError(path.string() + ": env indices must be ascending and < env_points");
        frame[idx] = 1.0;
        prev = idx;
      }
      contacts.env.push_back(std::move(frame));
    }
    if (!contacts.env.empty() && contacts.env.size() != contacts.body.size())
      throw InputError(path.string() + ": env frame count does not match body");
    return contacts;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

}  // namespace scenefit
