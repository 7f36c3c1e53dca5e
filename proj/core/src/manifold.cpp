#include "scenefit/manifold.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <string>

#include <Eigen/SVD>
#include <json.hpp>

#include "scenefit/atomic_file.hpp"
#include "scenefit/error.hpp"

namespace scenefit {

PoseManifold::PoseManifold(Eigen::VectorXd mean, Eigen::MatrixXd basis, Eigen::VectorXd scales)
    : mean_(std::move(mean)), basis_(std::move(basis)), scales_(std::move(scales)) {
  if (basis_.rows() != mean_.size() || basis_.cols() != scales_.size())
    throw InputError("pose manifold shapes disagree: mean " + std::to_string(mean_.size()) +
                     ", basis " + std::to_string(basis_.rows()) + "x" +
                     std::to_string(basis_.cols()) + ", scales " + std::to_string(scales_.size()));
  if (scales_.size() == 0 || scales_.minCoeff() <= 0.0)
    throw InputError("pose manifold needs positive latent scales");
  if (!mean_.allFinite() || !basis_.allFinite())
    throw InputError("pose manifold has non-finite entries");
}

Eigen::VectorXd PoseManifold::encode(const Eigen::VectorXd& theta) const {
  if (theta.size() != mean_.size())
    throw InputError("encode: pose has " + std::to_string(theta.size()) + " dofs, manifold has " +
                     std::to_string(mean_.size()));
  return (basis_.transpose() * (theta - mean_)).cwiseQuotient(scales_);
}

Eigen::VectorXd PoseManifold::decode(const Eigen::VectorXd& z) const {
  if (z.size() != scales_.size())
    throw InputError("decode: latent has " + std::to_string(z.size()) + " dims, manifold has " +
                     std::to_string(scales_.size()));
  return mean_ + basis_ * z.cwiseProduct(scales_);
}

PoseManifold fit_manifold(const Eigen::MatrixXd& corpus, int dim) {
  const Eigen::Index rows = corpus.rows();
  if (dim < 1) throw InputError("manifold dimension must be >= 1");
  if (rows <= dim)
    throw InputError("corpus of " + std::to_string(rows) + " poses cannot support " +
                     std::to_string(dim) + " latent dims");
  const Eigen::VectorXd mean = corpus.colwise().mean().transpose();
  const Eigen::MatrixXd centered = corpus.rowwise() - mean.transpose();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double tol = sv[0] * 1e-10;
  int rank = 0;
  while (rank < sv.size() && sv[rank] > tol) ++rank;
  if (rank < dim)
    throw Error("pose corpus has rank " + std::to_string(rank) + ", need at least " +
                std::to_string(dim) + " for the requested latent dims");
  Eigen::MatrixXd basis = svd.matrixV().leftCols(dim);
  // Canonical sign: the largest-magnitude coefficient of each column is
  // positive, so serialized manifolds do not depend on SVD sign choices.
  for (int c = 0; c < dim; ++c) {
    int arg = 0;
    basis.col(c).cwiseAbs().maxCoeff(&arg);
    if (basis(arg, c) < 0.0) basis.col(c) = -basis.col(c);
  }
  const Eigen::VectorXd scales = sv.head(dim) / std::sqrt(static_cast<double>(rows - 1));
  return PoseManifold(mean, std::move(basis), scales);
}

Eigen::VectorXd sample_pose(const PoseManifold& manifold, const Eigen::VectorXd& theta_opt,
                            const Eigen::VectorXd& weights, double sigma, Rng& rng) {
  if (weights.size() != theta_opt.size())
    throw InputError("sample_pose: weights must have one entry per dof");
  if (!(sigma >= 0.0)) throw InputError("sample_pose: sigma must be >= 0");
  const Eigen::VectorXd center = manifold.encode(theta_opt);
  Eigen::VectorXd z(center.size());
  for (Eigen::Index c = 0; c < z.size(); ++c) {
    // Fresh distribution per draw: normal_distribution caches a second
    // variate, which would leak state across samples.
    std::normal_distribution<double> gauss(center[c], sigma);
    z[c] = gauss(rng);
  }
  const Eigen::VectorXd decoded = manifold.decode(z);
  return weights.cwiseProduct(theta_opt) +
         (Eigen::VectorXd::Ones(weights.size()) - weights).cwiseProduct(decoded);
}

Eigen::VectorXd sample_pose_naive(const Eigen::VectorXd& theta_opt, double psi, Rng& rng) {
  std::uniform_real_distribution<double> uni(-0.26, 0.26);
  Eigen::VectorXd out(theta_opt.size());
  for (Eigen::Index c = 0; c < out.size(); ++c) out[c] = theta_opt[c] + psi * uni(rng);
  return out;
}

RootPerturbation sample_root(double psi, Rng& rng) {
  std::uniform_real_distribution<double> tau_uni(-0.03, 0.03);
  std::uniform_real_distribution<double> phi_uni(-0.01, 0.01);
  RootPerturbation p;
  for (int c = 0; c < 3; ++c) p.dtau[c] = psi * tau_uni(rng);
  for (int c = 0; c < 3; ++c) p.dphi[c] = psi * phi_uni(rng);
  return p;
}

namespace {

using nlohmann::json;

json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vector_from_json(const json& a, const char* what) {
  if (!a.is_array()) throw InputError(std::string(what) + " must be an array");
  Eigen::VectorXd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

}  // namespace

void save_manifold(const PoseManifold& manifold, const std::filesystem::path& path) {
  json doc;
  doc["format"] = "scenefit.pose_manifold";
  doc["version"] = 1;
  doc["mean"] = vector_to_json(manifold.mean());
  doc["scales"] = vector_to_json(manifold.scales());
  json rows = json::array();
  for (Eigen::Index r = 0; r < manifold.basis().rows(); ++r)
    rows.push_back(vector_to_json(manifold.basis().row(r).transpose()));
  doc["basis"] = std::move(rows);
  atomic_write_text(path, doc.dump() + "\n");
}

PoseManifold load_manifold(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open manifold file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  try {
    if (doc.value("format", "") != "scenefit.pose_manifold")
      throw InputError(path.string() + ": missing or wrong \"format\"");
    const Eigen::VectorXd mean = vector_from_json(doc.at("mean"), "mean");
    const Eigen::VectorXd scales = vector_from_json(doc.at("scales"), "scales");
    const json& rows = doc.at("basis");
    Eigen::MatrixXd basis(rows.size(), scales.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const Eigen::VectorXd row = vector_from_json(rows[r], "basis row");
      if (row.size() != scales.size())
        throw InputError(path.string() + ": basis row " + std::to_string(r) + " has " +
                         std::to_string(row.size()) + " entries, expected " +
                         std::to_string(scales.size()));
      basis.row(static_cast<Eigen::Index>(r)) = row.transpose();
    }
    return PoseManifold(mean, std::move(basis), scales);
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

Eigen::VectorXd MotionModel::pose_at(double time_s) const {
  Eigen::VectorXd pose = mean;
  constexpr double kTwoPi = 6.283185307179586;
  for (int j = 0; j < mode_count(); ++j)
    pose += amplitude[j] * std::sin(kTwoPi * frequency[j] * time_s + phase[j]) * modes.col(j);
  return pose;
}

MotionModel make_motion_model(const SkeletonTemplate& tmpl, std::uint64_t seed, int mode_count) {
  if (mode_count < 1) throw InputError("motion model needs at least one mode");
  const int k = tmpl.joint_count();
  const int dofs = 3 * k;

  // Neutral standing pose: T-pose rest with the arms rotated down and a hint
  // of elbow bend. Joint indices follow the default template layout;
  // templates with different trees still get a valid (all-zero) mean.
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dofs);
  auto set_if = [&](const char* name, int axis, double value) {
    for (int i = 0; i < k; ++i)
      if (tmpl.joints()[i].name == name) mean[3 * i + axis] = value;
  };
  set_if("l_shoulder", 2, 1.10);
  set_if("r_shoulder", 2, -1.10);
  set_if("l_elbow", 2, 0.15);
  set_if("r_elbow", 2, -0.15);

  // Slack between the mean pose and each limit bounds the total swing any
  // combination of modes may put on that dof.
  Eigen::VectorXd slack(dofs);
  for (int i = 0; i < k; ++i) {
    const Joint& j = tmpl.joints()[i];
    for (int a = 0; a < 3; ++a) {
      const double c = mean[3 * i + a];
      slack[3 * i + a] = std::min(c - j.limit_lo[a], j.limit_hi[a] - c);
      if (slack[3 * i + a] < 0.0)
        throw Error("mean pose violates limits of joint " + j.name);
    }
  }

  MotionModel model;
  model.mean = std::move(mean);
  model.modes.resize(dofs, mode_count);
  model.amplitude.resize(mode_count);
  model.frequency.resize(mode_count);
  model.phase.resize(mode_count);

  Rng rng = make_rng(derive_seed(seed, 0x6d6f74696f6eULL));  // "motion"
  std::uniform_real_distribution<double> freq(0.15, 0.65);
  std::uniform_real_distribution<double> phase(0.0, 6.283185307179586);
  for (int j = 0; j < mode_count; ++j) {
    Eigen::VectorXd dir(dofs);
    for (int c = 0; c < dofs; ++c) {
      std::normal_distribution<double> gauss(0.0, 1.0);
      dir[c] = gauss(rng) * slack[c];  // bias modes toward loose joints
    }
    model.modes.col(j) = dir.normalized();
    model.frequency[j] = freq(rng);
    model.phase[j] = phase(rng);
    model.amplitude[j] = 1.0 / (1.0 + 0.15 * j);  // distinct variances per mode
  }

  // Shrink all amplitudes together until the worst-case per-dof swing
  // sum_j a_j |d_j[c]| fits in 90% of the slack.
  const Eigen::VectorXd load = model.modes.cwiseAbs() * model.amplitude;
  double shrink = std::numeric_limits<double>::infinity();
  for (int c = 0; c < dofs; ++c)
    if (load[c] > 0.0) shrink = std::min(shrink, 0.9 * slack[c] / load[c]);
  if (!std::isfinite(shrink)) throw Error("motion modes are all zero");
  model.amplitude *= shrink;
  return model;
}

Eigen::MatrixXd make_pose_corpus(const MotionModel& model, int count, std::uint64_t seed) {
  if (count < 1) throw InputError("corpus size must be >= 1");
  Rng rng = make_rng(derive_seed(seed, 0x636f72707573ULL));  // "corpus"
  std::uniform_real_distribution<double> phase(0.0, 6.283185307179586);
  Eigen::MatrixXd corpus(count, model.mean.size());
  for (int i = 0; i < count; ++i) {
    Eigen::VectorXd pose = model.mean;
    for (int j = 0; j < model.mode_count(); ++j)
      pose += model.amplitude[j] * std::sin(phase(rng)) * model.modes.col(j);
    corpus.row(i) = pose.transpose();
  }
  return corpus;
}

}  // namespace scenefit
