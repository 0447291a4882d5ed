#include "anchorloc/translation_averaging.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include <Eigen/Dense>

#include "anchorloc/error.h"
#include "anchorloc/levenberg_marquardt.h"

namespace anchorloc {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

struct Columns {
  int source = -1;
  int target = -1;
  // Known part of C_source - C_target.
  Eigen::Vector3d constant = Eigen::Vector3d::Zero();
};

std::map<ImageId, int> FrameIndex(const TranslationProblem& problem) {
  std::map<ImageId, int> index;
  for (size_t i = 0; i < problem.unknown_ids().size(); ++i) {
    index[problem.unknown_ids()[i]] = static_cast<int>(i);
  }
  return index;
}

std::vector<Columns> EdgeColumns(const TranslationProblem& problem) {
  const auto index = FrameIndex(problem);
  std::vector<Columns> out;
  for (const auto& edge : problem.edges()) {
    Columns c;
    if (problem.IsFixed(edge.source)) {
      c.constant += problem.fixed_centers().at(edge.source);
    } else {
      c.source = index.at(problem.FrameOf(edge.source));
      c.constant += problem.Offset(edge.source);
    }
    if (problem.IsFixed(edge.target)) {
      c.constant -= problem.fixed_centers().at(edge.target);
    } else {
      c.target = index.at(problem.FrameOf(edge.target));
      c.constant -= problem.Offset(edge.target);
    }
    out.push_back(c);
  }
  return out;
}

Eigen::Vector3d Baseline(const Columns& c, const Eigen::VectorXd& x) {
  Eigen::Vector3d v = c.constant;
  if (c.source >= 0) v += x.segment<3>(3 * c.source);
  if (c.target >= 0) v -= x.segment<3>(3 * c.target);
  return v;
}

// Accumulates w |M (x_s - x_t + c - b)|^2 for a symmetric projector-like M.
void AddBlock(const Columns& c, const Eigen::Matrix3d& m,
              const Eigen::Vector3d& rhs_offset, Eigen::MatrixXd* h,
              Eigen::VectorXd* g) {
  const Eigen::Vector3d k = m * (c.constant - rhs_offset);
  if (c.source >= 0) {
    h->block<3, 3>(3 * c.source, 3 * c.source) += m;
    g->segment<3>(3 * c.source) -= k;
  }
  if (c.target >= 0) {
    h->block<3, 3>(3 * c.target, 3 * c.target) += m;
    g->segment<3>(3 * c.target) += k;
  }
  if (c.source >= 0 && c.target >= 0) {
    h->block<3, 3>(3 * c.source, 3 * c.target) -= m;
    h->block<3, 3>(3 * c.target, 3 * c.source) -= m;
  }
}

void RayNormalEquations(const TranslationProblem& problem, Eigen::MatrixXd* h,
                        Eigen::VectorXd* g) {
  const int n = 3 * static_cast<int>(problem.unknown_ids().size());
  *h = Eigen::MatrixXd::Zero(n, n);
  *g = Eigen::VectorXd::Zero(n);
  const auto cols = EdgeColumns(problem);
  for (size_t e = 0; e < cols.size(); ++e) {
    const Eigen::Vector3d& d = problem.edges()[e].direction;
    const Eigen::Matrix3d p = Eigen::Matrix3d::Identity() - d * d.transpose();
    AddBlock(cols[e], p, Eigen::Vector3d::Zero(), h, g);
  }
}

void CheckObservable(const TranslationProblem& problem) {
  const auto counts = problem.EdgeCounts();
  for (const ImageId id : problem.unknown_ids()) {
    if (counts.at(id) < 2) {
      throw Error(ErrorCode::kScaleUnobservable,
                  "query " + std::to_string(id) + " has " +
                      std::to_string(counts.at(id)) + " direction constraint(s)");
    }
  }
}

std::map<ImageId, Eigen::Vector3d> ToMap(const TranslationProblem& problem,
                                         const Eigen::VectorXd& x) {
  std::map<ImageId, Eigen::Vector3d> out;
  for (size_t i = 0; i < problem.unknown_ids().size(); ++i) {
    out[problem.unknown_ids()[i]] = x.segment<3>(3 * i);
  }
  return out;
}

Eigen::VectorXd ToVector(const TranslationProblem& problem,
                         const std::map<ImageId, Eigen::Vector3d>& frames) {
  Eigen::VectorXd x(3 * problem.unknown_ids().size());
  for (size_t i = 0; i < problem.unknown_ids().size(); ++i) {
    x.segment<3>(3 * i) = frames.at(problem.unknown_ids()[i]);
  }
  return x;
}

// Weighted chordal least squares for fixed per-edge weights.
LmSummary SolveWeightedChordal(const std::vector<Columns>& cols,
                               const std::vector<Eigen::Vector3d>& directions,
                               const std::vector<double>& weights,
                               int max_iterations, Eigen::VectorXd* x) {
  const int num_edges = static_cast<int>(cols.size());
  LeastSquaresProblem<Eigen::VectorXd> ls;
  ls.num_parameters = static_cast<int>(x->size());
  ls.residuals = [&](const Eigen::VectorXd& s) {
    Eigen::VectorXd r(3 * num_edges);
    for (int e = 0; e < num_edges; ++e) {
      const Eigen::Vector3d v = Baseline(cols[e], s);
      const double len = v.norm();
      const Eigen::Vector3d u =
          len > 1e-15 ? Eigen::Vector3d(v / len) : Eigen::Vector3d::Zero();
      r.segment<3>(3 * e) = std::sqrt(weights[e]) * (directions[e] - u);
    }
    return r;
  };
  ls.plus = [](const Eigen::VectorXd& s, const Eigen::VectorXd& d) {
    return Eigen::VectorXd(s + d);
  };
  ls.jacobian = [&](const Eigen::VectorXd& s) {
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(3 * num_edges, s.size());
    for (int e = 0; e < num_edges; ++e) {
      const Eigen::Vector3d v = Baseline(cols[e], s);
      const double len = v.norm();
      if (len <= 1e-15) continue;
      const Eigen::Vector3d u = v / len;
      // d(d - v/|v|)/dv = -(I - u u^T) / |v|.
      const Eigen::Matrix3d dv = -std::sqrt(weights[e]) *
                                 (Eigen::Matrix3d::Identity() - u * u.transpose()) /
                                 len;
      if (cols[e].source >= 0) jac.block<3, 3>(3 * e, 3 * cols[e].source) = dv;
      if (cols[e].target >= 0) jac.block<3, 3>(3 * e, 3 * cols[e].target) = -dv;
    }
    return jac;
  };
  LmOptions options;
  options.max_iterations = max_iterations;
  const LmSummary summary = MinimizeLevenbergMarquardt(ls, x, options);
  // The cost is flat at machine precision near the minimum; a few undamped
  // Gauss-Newton steps pin the minimizer down to the gradient.
  for (int i = 0; i < 5; ++i) {
    const Eigen::MatrixXd jac = ls.jacobian(*x);
    const Eigen::VectorXd r = ls.residuals(*x);
    const Eigen::VectorXd step =
        (jac.transpose() * jac).ldlt().solve(-(jac.transpose() * r));
    if (!step.allFinite()) break;
    const Eigen::VectorXd candidate = *x + step;
    if (ls.residuals(candidate).squaredNorm() > r.squaredNorm() * (1.0 + 1e-12)) break;
    *x = candidate;
    if (step.norm() <= 1e-15 * (1.0 + x->norm())) break;
  }
  return summary;
}

// Ray of admissible positions of one frame from an anchored edge:
// x = origin + lambda * dir with lambda > 0.
struct AnchoredRay {
  int edge = -1;
  Eigen::Vector3d origin;
  Eigen::Vector3d dir;
};

std::vector<AnchoredRay> AnchoredRays(const TranslationProblem& problem,
                                      ImageId frame) {
  std::vector<AnchoredRay> rays;
  const auto& edges = problem.edges();
  for (size_t e = 0; e < edges.size(); ++e) {
    const DirectionEdge& edge = edges[e];
    const bool fs = problem.IsFixed(edge.source);
    const bool ft = problem.IsFixed(edge.target);
    if (fs == ft) continue;
    AnchoredRay ray;
    ray.edge = static_cast<int>(e);
    if (ft) {
      if (problem.FrameOf(edge.source) != frame) continue;
      ray.origin = problem.fixed_centers().at(edge.target) - problem.Offset(edge.source);
      ray.dir = edge.direction;
    } else {
      if (problem.FrameOf(edge.target) != frame) continue;
      ray.origin = problem.fixed_centers().at(edge.source) - problem.Offset(edge.target);
      ray.dir = -edge.direction;
    }
    rays.push_back(ray);
  }
  return rays;
}

// Truncated quadratic cost of a candidate center over the rays.
struct Consensus {
  double cost = std::numeric_limits<double>::infinity();
  std::vector<int> members;
};

Consensus Evaluate(const std::vector<AnchoredRay>& rays, const Eigen::Vector3d& x,
                   double limit) {
  Consensus c;
  c.cost = 0.0;
  for (size_t i = 0; i < rays.size(); ++i) {
    const Eigen::Vector3d v = x - rays[i].origin;
    const double angle =
        v.norm() < 1e-12 ? limit : DirectionAngle<double>(rays[i].dir, v);
    if (angle < limit) {
      c.cost += angle * angle;
      c.members.push_back(static_cast<int>(i));
    } else {
      c.cost += limit * limit;
    }
  }
  return c;
}

// Best-supported frame center among the current estimate and the closest
// points of all ray pairs. Returns the rays outside the winning consensus.
std::vector<int> RayConsensus(const std::vector<AnchoredRay>& rays, double limit,
                              Eigen::Vector3d* x) {
  if (rays.size() < 3) return {};
  Consensus best = Evaluate(rays, *x, limit);
  Eigen::Vector3d best_x = *x;
  for (size_t a = 0; a < rays.size(); ++a) {
    for (size_t b = a + 1; b < rays.size(); ++b) {
      const Eigen::Vector3d w0 = rays[a].origin - rays[b].origin;
      const double c = rays[a].dir.dot(rays[b].dir);
      const double denom = 1.0 - c * c;
      if (denom < 1e-8) continue;
      const double da = rays[a].dir.dot(w0);
      const double db = rays[b].dir.dot(w0);
      const double la = (c * db - da) / denom;
      const double lb = db + c * la;
      if (la <= 0.0 || lb <= 0.0) continue;
      const Eigen::Vector3d candidate =
          0.5 * (rays[a].origin + la * rays[a].dir + rays[b].origin + lb * rays[b].dir);
      const Consensus score = Evaluate(rays, candidate, limit);
      if (score.cost < best.cost) {
        best = score;
        best_x = candidate;
      }
    }
  }
  if (best.members.size() < 2) return {};
  *x = best_x;
  std::vector<int> outliers;
  for (size_t i = 0; i < rays.size(); ++i) {
    if (std::find(best.members.begin(), best.members.end(), static_cast<int>(i)) ==
        best.members.end()) {
      outliers.push_back(rays[i].edge);
    }
  }
  return outliers;
}

}  // namespace

Eigen::Vector3d RefineRelativeTranslation(const Rotation3d& relative_rotation,
                                          const Eigen::Vector3d& initial,
                                          std::span<const Correspondence> inliers) {
  if (inliers.size() < 2) {
    throw Error(ErrorCode::kInsufficientInliers,
                "direction refinement needs 2 inliers, got " +
                    std::to_string(inliers.size()));
  }
  if (initial.norm() < 1e-12) {
    throw Error(ErrorCode::kZeroVector, "initial direction has zero length");
  }
  // p'^T [t]x R p = t . (R p x p'), linear in t.
  Eigen::MatrixXd a(inliers.size(), 3);
  for (size_t i = 0; i < inliers.size(); ++i) {
    const Eigen::Vector3d rp = relative_rotation * inliers[i].p.homogeneous().eval();
    a.row(i) = rp.cross(inliers[i].p_prime.homogeneous()).transpose();
  }
  LeastSquaresProblem<Eigen::Vector3d> ls;
  ls.num_parameters = 2;
  ls.residuals = [&](const Eigen::Vector3d& t) {
    return Eigen::VectorXd(a * t);
  };
  ls.plus = [](const Eigen::Vector3d& t, const Eigen::VectorXd& d) {
    return Eigen::Vector3d((t + TangentBasis<double>(t) * d).normalized());
  };
  ls.jacobian = [&](const Eigen::Vector3d& t) {
    return Eigen::MatrixXd(a * TangentBasis<double>(t));
  };
  Eigen::Vector3d t = initial.normalized();
  MinimizeLevenbergMarquardt(ls, &t);
  return t;
}

std::vector<int> GateEdges(std::span<const RelativePoseMeasurement> edges,
                           const std::map<ImageId, Rotation3d>& rotations,
                           double threshold_rad) {
  std::vector<int> kept;
  for (size_t i = 0; i < edges.size(); ++i) {
    const auto& e = edges[i];
    const Rotation3d implied =
        rotations.at(e.target) * rotations.at(e.source).inverse();
    if (GeodesicAngle(e.rotation, implied) < threshold_rad) {
      kept.push_back(static_cast<int>(i));
    }
  }
  if (kept.empty()) {
    throw Error(ErrorCode::kAllEdgesRejected,
                "no edge within " + std::to_string(threshold_rad) +
                    " rad of the solved rotations");
  }
  return kept;
}

DirectionEdge MakeDirectionEdge(const RelativePoseMeasurement& edge,
                                const Rotation3d& target_rotation,
                                const Eigen::Vector3d& camera_direction,
                                int inlier_weight_cap) {
  DirectionEdge out;
  out.source = edge.source;
  out.target = edge.target;
  out.direction = (target_rotation.inverse() * camera_direction).normalized();
  out.weight = static_cast<double>(std::min(edge.num_inliers, inlier_weight_cap)) /
               inlier_weight_cap;
  return out;
}

TranslationProblem::TranslationProblem(
    std::map<ImageId, Eigen::Vector3d> fixed_centers,
    std::vector<ImageId> unknown_ids, std::vector<DirectionEdge> edges,
    std::map<ImageId, CenterMount> mounts)
    : fixed_centers_(std::move(fixed_centers)),
      unknown_ids_(std::move(unknown_ids)),
      edges_(std::move(edges)),
      mounts_(std::move(mounts)) {
  std::sort(unknown_ids_.begin(), unknown_ids_.end());
  const std::set<ImageId> unknown(unknown_ids_.begin(), unknown_ids_.end());
  for (auto& edge : edges_) {
    if (IsFixed(edge.source) && IsFixed(edge.target)) {
      throw Error(ErrorCode::kInvalidArgument, "edge joins two fixed images");
    }
    for (const ImageId id : {edge.source, edge.target}) {
      if (!IsFixed(id) && !unknown.count(FrameOf(id))) {
        throw Error(ErrorCode::kInvalidArgument,
                    "edge references unknown image " + std::to_string(id));
      }
    }
    const double n = edge.direction.norm();
    if (n < 1e-12) throw Error(ErrorCode::kZeroVector, "zero direction");
    edge.direction /= n;
  }
}

ImageId TranslationProblem::FrameOf(ImageId image) const {
  const auto it = mounts_.find(image);
  return it == mounts_.end() ? image : it->second.frame;
}

Eigen::Vector3d TranslationProblem::Offset(ImageId image) const {
  const auto it = mounts_.find(image);
  return it == mounts_.end() ? Eigen::Vector3d::Zero() : it->second.offset;
}

Eigen::Vector3d TranslationProblem::ImageCenter(
    ImageId image, const std::map<ImageId, Eigen::Vector3d>& frames) const {
  const auto fixed = fixed_centers_.find(image);
  if (fixed != fixed_centers_.end()) return fixed->second;
  return frames.at(FrameOf(image)) + Offset(image);
}

std::map<ImageId, int> TranslationProblem::EdgeCounts() const {
  std::map<ImageId, int> counts;
  for (const ImageId id : unknown_ids_) counts[id] = 0;
  for (const auto& edge : edges_) {
    const bool fs = IsFixed(edge.source);
    const bool ft = IsFixed(edge.target);
    if (!fs && !ft && FrameOf(edge.source) == FrameOf(edge.target)) continue;
    if (!fs) ++counts[FrameOf(edge.source)];
    if (!ft) ++counts[FrameOf(edge.target)];
  }
  return counts;
}

std::map<ImageId, Eigen::Vector3d> InitializeCenters(const TranslationProblem& problem) {
  CheckObservable(problem);
  Eigen::MatrixXd h;
  Eigen::VectorXd g;
  RayNormalEquations(problem, &h, &g);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
  const double max_ev = eig.eigenvalues().maxCoeff();
  if (!(eig.eigenvalues().minCoeff() > 1e-10 * max_ev)) {
    throw Error(ErrorCode::kDegenerateGeometry,
                "rays do not intersect in a unique point");
  }
  return ToMap(problem, h.ldlt().solve(g));
}

std::map<ImageId, Eigen::Vector3d> InitializeCentersMinimumNorm(
    const TranslationProblem& problem) {
  Eigen::MatrixXd h;
  Eigen::VectorXd g;
  RayNormalEquations(problem, &h, &g);
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& [id, c] : problem.fixed_centers()) mean += c;
  if (!problem.fixed_centers().empty()) mean /= problem.fixed_centers().size();
  Eigen::VectorXd x0(h.rows());
  for (int i = 0; i < x0.size() / 3; ++i) x0.segment<3>(3 * i) = mean;

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
  const double max_ev = std::max(eig.eigenvalues().maxCoeff(), 0.0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(h.rows());
  for (int i = 0; i < inv.size(); ++i) {
    const double ev = eig.eigenvalues()(i);
    if (ev > 1e-10 * max_ev && ev > 0.0) inv(i) = 1.0 / ev;
  }
  const Eigen::VectorXd rhs = g - h * x0;
  const Eigen::VectorXd x =
      x0 + eig.eigenvectors() * inv.asDiagonal() *
               (eig.eigenvectors().transpose() * rhs);
  return ToMap(problem, x);
}

double EdgeDirectionResidual(const TranslationProblem& problem,
                             const DirectionEdge& edge,
                             const std::map<ImageId, Eigen::Vector3d>& frames) {
  const Eigen::Vector3d v =
      problem.ImageCenter(edge.source, frames) - problem.ImageCenter(edge.target, frames);
  if (v.norm() < 1e-12) return std::numbers::pi;
  return DirectionAngle<double>(edge.direction, v);
}

std::map<ImageId, Eigen::Vector3d> SolveCenters(
    const TranslationProblem& problem,
    const std::map<ImageId, Eigen::Vector3d>& init,
    const TranslationAveragingOptions& options,
    TranslationAveragingSummary* summary) {
  CheckObservable(problem);
  TranslationAveragingSummary local;
  TranslationAveragingSummary& sum = summary ? *summary : local;
  sum = TranslationAveragingSummary();

  const std::vector<Columns> all_cols = EdgeColumns(problem);
  const auto& edges = problem.edges();
  const double delta =
      options.huber_delta_deg > 0.0
          ? 2.0 * std::sin(0.5 * options.huber_delta_deg * kDegToRad)
          : 0.0;
  Eigen::VectorXd x = ToVector(problem, init);

  // Robust solve over the active edges by reweighting with Huber weights.
  auto robust_solve = [&](const std::vector<int>& active) {
    std::vector<Columns> cols;
    std::vector<Eigen::Vector3d> dirs;
    for (const int e : active) {
      cols.push_back(all_cols[e]);
      dirs.push_back(edges[e].direction);
    }
    std::vector<double> weights(active.size());
    bool converged = false;
    for (int outer = 0; outer < 50 && !converged; ++outer) {
      for (size_t i = 0; i < active.size(); ++i) {
        const Eigen::Vector3d v = Baseline(cols[i], x);
        const double r =
            v.norm() > 1e-15 ? (dirs[i] - v.normalized()).norm() : 2.0;
        const double huber = (delta > 0.0 && r > delta) ? delta / r : 1.0;
        weights[i] = edges[active[i]].weight * huber;
      }
      const Eigen::VectorXd before = x;
      const LmSummary lm =
          SolveWeightedChordal(cols, dirs, weights, options.max_iterations, &x);
      sum.iterations += lm.iterations;
      sum.final_cost = lm.final_cost;
      converged = (x - before).norm() <= options.tolerance * (1.0 + x.norm()) ||
                  delta == 0.0;
    }
    sum.converged = converged;
  };

  std::set<int> dropped;
  const double limit = options.outlier_angle_deg * kDegToRad;
  if (limit > 0.0) {
    for (size_t i = 0; i < problem.unknown_ids().size(); ++i) {
      Eigen::Vector3d xi = x.segment<3>(3 * i);
      for (const int e : RayConsensus(AnchoredRays(problem, problem.unknown_ids()[i]),
                                      limit, &xi)) {
        dropped.insert(e);
      }
      x.segment<3>(3 * i) = xi;
    }
  }
  auto active_edges = [&] {
    std::vector<int> active;
    for (size_t e = 0; e < edges.size(); ++e) {
      if (!dropped.count(static_cast<int>(e))) active.push_back(static_cast<int>(e));
    }
    return active;
  };
  robust_solve(active_edges());

  if (limit > 0.0) {
    const auto frames = ToMap(problem, x);
    std::vector<std::pair<double, int>> ranked;
    for (size_t e = 0; e < edges.size(); ++e) {
      if (dropped.count(static_cast<int>(e))) continue;
      const double angle = EdgeDirectionResidual(problem, edges[e], frames);
      if (angle > limit) ranked.emplace_back(-angle, static_cast<int>(e));
    }
    std::sort(ranked.begin(), ranked.end());
    std::map<ImageId, int> counts;
    for (const int e : active_edges()) {
      const auto& edge = edges[e];
      const bool fs = problem.IsFixed(edge.source);
      const bool ft = problem.IsFixed(edge.target);
      if (!fs && !ft && problem.FrameOf(edge.source) == problem.FrameOf(edge.target)) {
        continue;
      }
      if (!fs) ++counts[problem.FrameOf(edge.source)];
      if (!ft) ++counts[problem.FrameOf(edge.target)];
    }
    bool trimmed = false;
    for (const auto& [neg_angle, e] : ranked) {
      const auto& edge = edges[e];
      // Never leave a frame with fewer than two constraints.
      std::vector<ImageId> touched;
      for (const ImageId id : {edge.source, edge.target}) {
        if (!problem.IsFixed(id)) touched.push_back(problem.FrameOf(id));
      }
      const bool allowed = std::all_of(touched.begin(), touched.end(),
                                       [&](ImageId f) { return counts[f] > 2; });
      if (!allowed) continue;
      for (const ImageId f : touched) --counts[f];
      dropped.insert(e);
      trimmed = true;
    }
    if (trimmed) robust_solve(active_edges());
  }
  sum.num_trimmed = static_cast<int>(dropped.size());

  const auto result = ToMap(problem, x);
  for (const auto& edge : edges) {
    sum.edge_residuals.push_back(EdgeDirectionResidual(problem, edge, result));
  }
  return result;
}

std::map<ImageId, Eigen::Vector3d> SolveCentersLud(
    const TranslationProblem& problem,
    const std::map<ImageId, Eigen::Vector3d>& init, int max_iterations,
    double tolerance) {
  CheckObservable(problem);
  const std::vector<Columns> cols = EdgeColumns(problem);
  const auto& edges = problem.edges();
  Eigen::VectorXd x = ToVector(problem, init);
  const int n = static_cast<int>(x.size());
  for (int it = 0; it < max_iterations; ++it) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    for (size_t e = 0; e < cols.size(); ++e) {
      const Eigen::Vector3d v = Baseline(cols[e], x);
      const Eigen::Vector3d& d = edges[e].direction;
      const double lambda = std::max(0.0, d.dot(v));
      const double r = (v - lambda * d).norm();
      const double w = edges[e].weight / std::max(r, 1e-8);
      AddBlock(cols[e], w * Eigen::Matrix3d::Identity(), lambda * d, &h, &g);
    }
    h.diagonal().array() += 1e-12 * std::max(1.0, h.diagonal().maxCoeff());
    const Eigen::VectorXd next = h.ldlt().solve(g);
    const double change = (next - x).norm();
    x = next;
    if (change <= tolerance * (1.0 + x.norm())) break;
  }
  return ToMap(problem, x);
}

}  // namespace anchorloc
