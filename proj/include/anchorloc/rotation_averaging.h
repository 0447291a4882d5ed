#pragma once

#include <map>
#include <vector>

#include "anchorloc/geometry.h"
#include "anchorloc/types.h"

namespace anchorloc {

// Anchored rotation averaging problem. Unknowns are frames; database images
// carry fixed rotations and contribute no columns to the linear system.
class RotationProblem {
 public:
  // Throws kInvalidArgument for an edge joining two fixed images and
  // kDisconnectedQuery for an unknown frame that no edge touches.
  RotationProblem(std::map<ImageId, Rotation3d> fixed_rotations,
                  std::vector<ImageId> unknown_ids,
                  std::vector<RelativePoseMeasurement> edges,
                  std::map<ImageId, Mount> mounts = {});

  const std::map<ImageId, Rotation3d>& fixed_rotations() const {
    return fixed_rotations_;
  }
  const std::vector<ImageId>& unknown_ids() const { return unknown_ids_; }
  const std::vector<RelativePoseMeasurement>& edges() const { return edges_; }
  const std::map<ImageId, Mount>& mounts() const { return mounts_; }

  bool IsFixed(ImageId image) const { return fixed_rotations_.count(image) > 0; }
  // Frame an unknown image is attached to (itself when unmounted).
  ImageId FrameOf(ImageId image) const;
  // Fixed rotation from the image frame to the camera (identity if unmounted).
  Rotation3d CamFromFrame(ImageId image) const;
  // Image rotation given the current frame rotations.
  Rotation3d ImageRotation(ImageId image,
                           const std::map<ImageId, Rotation3d>& frames) const;

 private:
  std::map<ImageId, Rotation3d> fixed_rotations_;
  std::vector<ImageId> unknown_ids_;
  std::vector<RelativePoseMeasurement> edges_;
  std::map<ImageId, Mount> mounts_;
};

// Query rotation implied by one database-query edge: R_q = R_qd^T R_d.
Rotation3d RotationProposal(const RelativePoseMeasurement& edge,
                            const Rotation3d& database_rotation);

// Initializes every unknown frame from its highest-inlier edge to a fixed
// image (ties: smaller fixed image id); frames reachable only through other
// unknowns are chained along max-inlier edges. Throws kDisconnectedQuery.
std::map<ImageId, Rotation3d> InitializeRotations(const RotationProblem& problem);

struct RotationAveragingOptions {
  int l1_iterations = 5;
  int irls_iterations = 10;
  // Scale of the Cauchy weight n_w / (theta^2 + sigma^2), radians.
  double irls_sigma = 0.1;
  // Edges with residual angle at or beyond this get zero IRLS weight.
  double irls_cutoff = 0.3;
  // Inlier count at which the edge weight saturates.
  int inlier_weight_cap = 150;
  double tolerance = 1e-8;
};

struct RotationAveragingSummary {
  bool converged = false;
  int l1_iterations = 0;
  int irls_iterations = 0;
  // Robust IRLS objective before the first and after every IRLS update.
  std::vector<double> irls_objective;
  // Final residual angle per edge, in problem edge order.
  std::vector<double> edge_residuals;
};

// L1 then IRLS Lie-algebra averaging with fixed database rotations.
std::map<ImageId, Rotation3d> SolveRotations(
    const RotationProblem& problem, const std::map<ImageId, Rotation3d>& init,
    const RotationAveragingOptions& options = {},
    RotationAveragingSummary* summary = nullptr);

// Residual angle of one edge: angle of R_target^T R_measured R_source.
double EdgeRotationResidual(const RotationProblem& problem,
                            const RelativePoseMeasurement& edge,
                            const std::map<ImageId, Rotation3d>& frames);

// Robust objective sum_e n_w * sigma^2 * log(1 + min(theta^2, c^2) / sigma^2).
double RotationObjective(const RotationProblem& problem,
                         const std::map<ImageId, Rotation3d>& frames,
                         const RotationAveragingOptions& options);

}  // namespace anchorloc
