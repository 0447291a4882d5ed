#include "anchorloc/rotation_averaging.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include <Eigen/Dense>

#include "anchorloc/error.h"

namespace anchorloc {
namespace {

// Column block of an edge endpoint, or -1 when the endpoint is fixed.
struct EdgeColumns {
  int source = -1;
  int target = -1;
};

std::map<ImageId, int> FrameIndex(const RotationProblem& problem) {
  std::map<ImageId, int> index;
  for (size_t i = 0; i < problem.unknown_ids().size(); ++i) {
    index[problem.unknown_ids()[i]] = static_cast<int>(i);
  }
  return index;
}

EdgeColumns Columns(const RotationProblem& problem,
                    const std::map<ImageId, int>& index,
                    const RelativePoseMeasurement& edge) {
  EdgeColumns cols;
  if (!problem.IsFixed(edge.source)) {
    cols.source = index.at(problem.FrameOf(edge.source));
  }
  if (!problem.IsFixed(edge.target)) {
    cols.target = index.at(problem.FrameOf(edge.target));
  }
  return cols;
}

// Edges whose endpoints sit on the same frame carry no rotation information.
bool Informative(const EdgeColumns& cols) {
  return cols.source != cols.target || cols.source < 0;
}

Eigen::Vector3d EdgeLog(const RotationProblem& problem,
                        const RelativePoseMeasurement& edge,
                        const std::map<ImageId, Rotation3d>& frames) {
  const Rotation3d rs = problem.ImageRotation(edge.source, frames);
  const Rotation3d rt = problem.ImageRotation(edge.target, frames);
  return LogSO3(rt.inverse() * edge.rotation * rs);
}

double InlierWeight(const RelativePoseMeasurement& edge, int cap) {
  return static_cast<double>(std::min(edge.num_inliers, cap)) / cap;
}

// Solves min sum_e w_e |omega_e + A_e delta|^2 with A_e = +I at the source
// column and -I at the target column.
Eigen::VectorXd SolveWeighted(const std::vector<EdgeColumns>& cols,
                              const std::vector<Eigen::Vector3d>& omegas,
                              const std::vector<double>& weights,
                              int num_unknowns) {
  const int n = 3 * num_unknowns;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  for (size_t e = 0; e < cols.size(); ++e) {
    const double w = weights[e];
    if (w <= 0.0) continue;
    const int s = cols[e].source;
    const int t = cols[e].target;
    if (s >= 0) {
      h.block<3, 3>(3 * s, 3 * s).diagonal().array() += w;
      g.segment<3>(3 * s) -= w * omegas[e];
    }
    if (t >= 0) {
      h.block<3, 3>(3 * t, 3 * t).diagonal().array() += w;
      g.segment<3>(3 * t) += w * omegas[e];
    }
    if (s >= 0 && t >= 0) {
      h.block<3, 3>(3 * s, 3 * t).diagonal().array() -= w;
      h.block<3, 3>(3 * t, 3 * s).diagonal().array() -= w;
    }
  }
  // Keeps unknowns with no weighted edge at zero update.
  const double floor = 1e-12 * std::max(1.0, h.diagonal().maxCoeff());
  h.diagonal().array() += floor;
  return h.ldlt().solve(g);
}

Eigen::Vector3d RowResidual(const EdgeColumns& cols, const Eigen::Vector3d& omega,
                            const Eigen::VectorXd& delta) {
  Eigen::Vector3d r = omega;
  if (cols.source >= 0) r += delta.segment<3>(3 * cols.source);
  if (cols.target >= 0) r -= delta.segment<3>(3 * cols.target);
  return r;
}

std::map<ImageId, Rotation3d> Apply(const RotationProblem& problem,
                                    const std::map<ImageId, Rotation3d>& frames,
                                    const Eigen::VectorXd& delta) {
  std::map<ImageId, Rotation3d> out = frames;
  for (size_t i = 0; i < problem.unknown_ids().size(); ++i) {
    Rotation3d& r = out.at(problem.unknown_ids()[i]);
    r = r * ExpSO3<double>(delta.segment<3>(3 * i));
  }
  return out;
}

}  // namespace

RotationProblem::RotationProblem(std::map<ImageId, Rotation3d> fixed_rotations,
                                 std::vector<ImageId> unknown_ids,
                                 std::vector<RelativePoseMeasurement> edges,
                                 std::map<ImageId, Mount> mounts)
    : fixed_rotations_(std::move(fixed_rotations)),
      unknown_ids_(std::move(unknown_ids)),
      edges_(std::move(edges)),
      mounts_(std::move(mounts)) {
  std::sort(unknown_ids_.begin(), unknown_ids_.end());
  const std::set<ImageId> unknown(unknown_ids_.begin(), unknown_ids_.end());
  for (const ImageId id : unknown_ids_) {
    if (IsFixed(id)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "image " + std::to_string(id) + " is both fixed and unknown");
    }
  }
  std::set<ImageId> covered;
  for (const auto& edge : edges_) {
    const bool fs = IsFixed(edge.source);
    const bool ft = IsFixed(edge.target);
    if (fs && ft) {
      throw Error(ErrorCode::kInvalidArgument,
                  "edge " + std::to_string(edge.source) + "-" +
                      std::to_string(edge.target) + " joins two fixed images");
    }
    for (const ImageId id : {edge.source, edge.target}) {
      if (IsFixed(id)) continue;
      if (!unknown.count(FrameOf(id))) {
        throw Error(ErrorCode::kInvalidArgument,
                    "edge references unknown image " + std::to_string(id));
      }
    }
    if (!fs && !ft && FrameOf(edge.source) == FrameOf(edge.target)) continue;
    if (!fs) covered.insert(FrameOf(edge.source));
    if (!ft) covered.insert(FrameOf(edge.target));
  }
  for (const ImageId id : unknown_ids_) {
    if (!covered.count(id)) {
      throw Error(ErrorCode::kDisconnectedQuery,
                  "query " + std::to_string(id) + " has no edges");
    }
  }
}

ImageId RotationProblem::FrameOf(ImageId image) const {
  const auto it = mounts_.find(image);
  return it == mounts_.end() ? image : it->second.frame;
}

Rotation3d RotationProblem::CamFromFrame(ImageId image) const {
  const auto it = mounts_.find(image);
  return it == mounts_.end() ? Rotation3d::Identity()
                             : it->second.cam_from_frame.rotation;
}

Rotation3d RotationProblem::ImageRotation(
    ImageId image, const std::map<ImageId, Rotation3d>& frames) const {
  const auto fixed = fixed_rotations_.find(image);
  if (fixed != fixed_rotations_.end()) return fixed->second;
  return CamFromFrame(image) * frames.at(FrameOf(image));
}

Rotation3d RotationProposal(const RelativePoseMeasurement& edge,
                            const Rotation3d& database_rotation) {
  return edge.rotation.inverse() * database_rotation;
}

std::map<ImageId, Rotation3d> InitializeRotations(const RotationProblem& problem) {
  std::map<ImageId, Rotation3d> frames;
  const auto& edges = problem.edges();

  // Frame rotation implied by an edge whose `known` endpoint has a rotation.
  auto propose = [&](const RelativePoseMeasurement& edge, bool source_known) {
    Rotation3d image_rotation;
    ImageId image;
    if (source_known) {
      image = edge.target;
      image_rotation = edge.rotation * problem.ImageRotation(edge.source, frames);
    } else {
      image = edge.source;
      image_rotation =
          edge.rotation.inverse() * problem.ImageRotation(edge.target, frames);
    }
    return problem.CamFromFrame(image).inverse() * image_rotation;
  };

  // Directly anchored frames.
  for (const ImageId frame : problem.unknown_ids()) {
    const RelativePoseMeasurement* best = nullptr;
    ImageId best_fixed = 0;
    for (const auto& edge : edges) {
      const bool fs = problem.IsFixed(edge.source);
      const bool ft = problem.IsFixed(edge.target);
      if (fs == ft) continue;
      const ImageId other = fs ? edge.target : edge.source;
      if (problem.FrameOf(other) != frame) continue;
      const ImageId fixed = fs ? edge.source : edge.target;
      if (best == nullptr || edge.num_inliers > best->num_inliers ||
          (edge.num_inliers == best->num_inliers && fixed < best_fixed)) {
        best = &edge;
        best_fixed = fixed;
      }
    }
    if (best != nullptr) {
      frames[frame] = propose(*best, problem.IsFixed(best->source));
    }
  }

  // Chain the rest along max-inlier edges from initialized frames.
  auto known = [&](ImageId image) {
    return problem.IsFixed(image) || frames.count(problem.FrameOf(image)) > 0;
  };
  while (frames.size() < problem.unknown_ids().size()) {
    const RelativePoseMeasurement* best = nullptr;
    std::tuple<int, ImageId, ImageId> best_key;
    for (const auto& edge : edges) {
      const bool ks = known(edge.source);
      const bool kt = known(edge.target);
      if (ks == kt) continue;
      const ImageId fresh = ks ? edge.target : edge.source;
      const ImageId anchor = ks ? edge.source : edge.target;
      const std::tuple<int, ImageId, ImageId> key{-edge.num_inliers, fresh,
                                                  anchor};
      if (best == nullptr || key < best_key) {
        best = &edge;
        best_key = key;
      }
    }
    if (best == nullptr) {
      for (const ImageId frame : problem.unknown_ids()) {
        if (!frames.count(frame)) {
          throw Error(ErrorCode::kDisconnectedQuery,
                      "query " + std::to_string(frame) +
                          " is not connected to the database");
        }
      }
    }
    const bool source_known = known(best->source);
    const ImageId fresh = source_known ? best->target : best->source;
    frames[problem.FrameOf(fresh)] = propose(*best, source_known);
  }
  return frames;
}

double EdgeRotationResidual(const RotationProblem& problem,
                            const RelativePoseMeasurement& edge,
                            const std::map<ImageId, Rotation3d>& frames) {
  const Rotation3d rs = problem.ImageRotation(edge.source, frames);
  const Rotation3d rt = problem.ImageRotation(edge.target, frames);
  return GeodesicAngle(edge.rotation * rs, rt);
}

double RotationObjective(const RotationProblem& problem,
                         const std::map<ImageId, Rotation3d>& frames,
                         const RotationAveragingOptions& options) {
  const double sigma_sq = options.irls_sigma * options.irls_sigma;
  const double cutoff_sq = options.irls_cutoff * options.irls_cutoff;
  const std::map<ImageId, int> index = FrameIndex(problem);
  double total = 0.0;
  for (const auto& edge : problem.edges()) {
    if (!Informative(Columns(problem, index, edge))) continue;
    const double theta = EdgeLog(problem, edge, frames).norm();
    const double s = std::min(theta * theta, cutoff_sq);
    total += InlierWeight(edge, options.inlier_weight_cap) * sigma_sq *
             std::log1p(s / sigma_sq);
  }
  return total;
}

std::map<ImageId, Rotation3d> SolveRotations(
    const RotationProblem& problem, const std::map<ImageId, Rotation3d>& init,
    const RotationAveragingOptions& options, RotationAveragingSummary* summary) {
  RotationAveragingSummary local;
  RotationAveragingSummary& sum = summary ? *summary : local;
  sum = RotationAveragingSummary();

  std::map<ImageId, Rotation3d> frames;
  for (const ImageId id : problem.unknown_ids()) frames[id] = init.at(id);

  const std::map<ImageId, int> index = FrameIndex(problem);
  std::vector<const RelativePoseMeasurement*> edges;
  std::vector<EdgeColumns> cols;
  for (const auto& edge : problem.edges()) {
    const EdgeColumns c = Columns(problem, index, edge);
    if (!Informative(c)) continue;
    edges.push_back(&edge);
    cols.push_back(c);
  }
  const int num_unknowns = static_cast<int>(problem.unknown_ids().size());
  const size_t num_edges = edges.size();
  std::vector<Eigen::Vector3d> omegas(num_edges);
  std::vector<double> weights(num_edges);
  auto compute_logs = [&] {
    for (size_t e = 0; e < num_edges; ++e) {
      omegas[e] = EdgeLog(problem, *edges[e], frames);
    }
  };

  // L1 phase: each outer step minimizes sum_e |omega_e + A_e delta| on the
  // linearized system by Weiszfeld-style reweighting.
  bool converged = false;
  for (int it = 0; it < options.l1_iterations && !converged; ++it) {
    compute_logs();
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(3 * num_unknowns);
    for (int inner = 0; inner < 100; ++inner) {
      for (size_t e = 0; e < num_edges; ++e) {
        weights[e] = 1.0 / std::max(RowResidual(cols[e], omegas[e], delta).norm(),
                                    1e-6);
      }
      const Eigen::VectorXd next =
          SolveWeighted(cols, omegas, weights, num_unknowns);
      const double change = (next - delta).norm();
      delta = next;
      if (change < 1e-12) break;
    }
    frames = Apply(problem, frames, delta);
    sum.l1_iterations = it + 1;
    if (delta.norm() < options.tolerance) converged = true;
  }

  // IRLS phase with truncated Cauchy weights. Steps that would raise the
  // robust objective are halved.
  converged = false;
  const double sigma_sq = options.irls_sigma * options.irls_sigma;
  double objective = RotationObjective(problem, frames, options);
  sum.irls_objective.push_back(objective);
  for (int it = 0; it < options.irls_iterations; ++it) {
    compute_logs();
    for (size_t e = 0; e < num_edges; ++e) {
      const double theta = omegas[e].norm();
      weights[e] = theta < options.irls_cutoff
                       ? InlierWeight(*edges[e], options.inlier_weight_cap) /
                             (theta * theta + sigma_sq)
                       : 0.0;
    }
    Eigen::VectorXd delta = SolveWeighted(cols, omegas, weights, num_unknowns);
    sum.irls_iterations = it + 1;
    const bool small = delta.norm() < options.tolerance;
    bool accepted = false;
    for (int halving = 0; halving < 30; ++halving) {
      auto candidate = Apply(problem, frames, delta);
      const double value = RotationObjective(problem, candidate, options);
      if (value <= objective) {
        frames = std::move(candidate);
        objective = value;
        accepted = true;
        break;
      }
      delta *= 0.5;
    }
    sum.irls_objective.push_back(objective);
    if (!accepted || small) {
      converged = true;
      break;
    }
  }
  sum.converged = converged;

  sum.edge_residuals.clear();
  for (const auto& edge : problem.edges()) {
    sum.edge_residuals.push_back(EdgeRotationResidual(problem, edge, frames));
  }
  return frames;
}

}  // namespace anchorloc
