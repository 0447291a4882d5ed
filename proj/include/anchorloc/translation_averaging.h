#pragma once

#include <map>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "anchorloc/geometry.h"
#include "anchorloc/types.h"

namespace anchorloc {

// Sphere-constrained refinement of an edge's translation direction with the
// relative rotation frozen. Minimizes sum (p'^T [t]x R p)^2 over the inliers,
// starting from `initial`. Throws kInsufficientInliers for fewer than 2.
Eigen::Vector3d RefineRelativeTranslation(
    const Rotation3d& relative_rotation, const Eigen::Vector3d& initial,
    std::span<const Correspondence> inliers);

// Indices of the edges whose measured rotation agrees with the solved
// rotations: angle(R_st, R_t R_s^T) < threshold (strict). `rotations` maps
// image ids to world-to-camera rotations. Throws kAllEdgesRejected.
std::vector<int> GateEdges(std::span<const RelativePoseMeasurement> edges,
                           const std::map<ImageId, Rotation3d>& rotations,
                           double threshold_rad);

// A world-frame direction constraint: direction ~ C_source - C_target.
struct DirectionEdge {
  ImageId source = 0;
  ImageId target = 0;
  Eigen::Vector3d direction = Eigen::Vector3d::UnitX();
  double weight = 1.0;
};

// World-frame direction of a measurement given the target camera rotation:
// R_target^T t. The weight is min(num_inliers, cap) / cap.
DirectionEdge MakeDirectionEdge(const RelativePoseMeasurement& edge,
                                const Rotation3d& target_rotation,
                                const Eigen::Vector3d& camera_direction,
                                int inlier_weight_cap = 150);

// Rigid attachment of a camera center to an unknown frame, in world
// coordinates: C_image = C_frame + offset.
struct CenterMount {
  ImageId frame = 0;
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();
};

class TranslationProblem {
 public:
  // Normalizes every direction (kZeroVector if it vanishes) and rejects
  // edges joining two fixed images or naming images that are neither fixed
  // nor attached to an unknown frame (kInvalidArgument).
  TranslationProblem(std::map<ImageId, Eigen::Vector3d> fixed_centers,
                     std::vector<ImageId> unknown_ids,
                     std::vector<DirectionEdge> edges,
                     std::map<ImageId, CenterMount> mounts = {});

  const std::map<ImageId, Eigen::Vector3d>& fixed_centers() const {
    return fixed_centers_;
  }
  const std::vector<ImageId>& unknown_ids() const { return unknown_ids_; }
  const std::vector<DirectionEdge>& edges() const { return edges_; }

  bool IsFixed(ImageId image) const { return fixed_centers_.count(image) > 0; }
  ImageId FrameOf(ImageId image) const;
  Eigen::Vector3d Offset(ImageId image) const;
  Eigen::Vector3d ImageCenter(ImageId image,
                              const std::map<ImageId, Eigen::Vector3d>& frames) const;
  // Number of edges constraining each unknown frame.
  std::map<ImageId, int> EdgeCounts() const;

 private:
  std::map<ImageId, Eigen::Vector3d> fixed_centers_;
  std::vector<ImageId> unknown_ids_;
  std::vector<DirectionEdge> edges_;
  std::map<ImageId, CenterMount> mounts_;
};

// Least-squares intersection of the rays C_fixed + lambda d over all edges:
// minimizes the summed squared perpendicular distances jointly for all
// unknowns. Throws kScaleUnobservable when an unknown has fewer than 2 edges
// and kDegenerateGeometry when the normal equations are rank deficient
// (smallest eigenvalue below 1e-10 of the largest).
std::map<ImageId, Eigen::Vector3d> InitializeCenters(const TranslationProblem& problem);

// Same system solved with a pseudo-inverse around the mean fixed center; used
// as a fallback when InitializeCenters reports kDegenerateGeometry.
std::map<ImageId, Eigen::Vector3d> InitializeCentersMinimumNorm(
    const TranslationProblem& problem);

struct TranslationAveragingOptions {
  // Huber threshold expressed as an angle; the loss acts on the chordal
  // distance 2 sin(angle / 2). Zero disables the robust loss.
  double huber_delta_deg = 5.0;
  // Outlier angle for direction edges. Before the robust solve, each frame
  // keeps the largest-weight set of its anchored edges that agree within
  // this angle with a center obtained from two of them; after the solve,
  // edges still above it are dropped and the problem is re-solved. Zero
  // disables both steps.
  double outlier_angle_deg = 15.0;
  int max_iterations = 100;
  double tolerance = 1e-10;
};

struct TranslationAveragingSummary {
  bool converged = false;
  int iterations = 0;
  int num_trimmed = 0;
  double final_cost = 0.0;
  // Final residual angle per edge, in problem edge order.
  std::vector<double> edge_residuals;
};

// Minimizes sum_i w_i rho(|d_i - (C_s - C_t) / |C_s - C_t||) over the unknown
// frame centers. Throws kScaleUnobservable for frames with fewer than 2 edges.
std::map<ImageId, Eigen::Vector3d> SolveCenters(
    const TranslationProblem& problem,
    const std::map<ImageId, Eigen::Vector3d>& init,
    const TranslationAveragingOptions& options = {},
    TranslationAveragingSummary* summary = nullptr);

// Least unsquared deviations: minimizes sum_i w_i |C_s - C_t - lambda_i d_i|
// with lambda_i >= 0 eliminated in closed form. Ablation only.
std::map<ImageId, Eigen::Vector3d> SolveCentersLud(
    const TranslationProblem& problem,
    const std::map<ImageId, Eigen::Vector3d>& init, int max_iterations = 100,
    double tolerance = 1e-10);

// Angle between d_i and the direction implied by the given centers.
double EdgeDirectionResidual(const TranslationProblem& problem,
                             const DirectionEdge& edge,
                             const std::map<ImageId, Eigen::Vector3d>& frames);

}  // namespace anchorloc
