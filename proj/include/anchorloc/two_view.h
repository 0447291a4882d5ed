#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "anchorloc/geometry.h"
#include "anchorloc/types.h"

namespace anchorloc {

// Calibrated two-view geometry. All correspondences are in normalized
// coordinates and satisfy p'^T E p = 0 with E = [t]x R, where (R, t) is the
// relative pose mapping camera-1 coordinates into camera 2.

// Five-point minimal solver. Returns up to 10 essential matrices, each with
// unit Frobenius norm. Throws kDegenerateSample when the five epipolar rows
// do not have full rank.
std::vector<Eigen::Matrix3d> SolveEssentialMinimal(
    std::span<const Correspondence> sample);

// Normalized eight-point solve projected onto the essential manifold.
// Requires at least 8 correspondences.
Eigen::Matrix3d SolveEssentialLinear(std::span<const Correspondence> points);

Eigen::Matrix3d EssentialFromPose(const Rotation3d& rotation,
                                  const Eigen::Vector3d& translation);

// Squared first-order geometric error, in normalized units squared.
double SampsonError(const Eigen::Matrix3d& essential, const Correspondence& c);

// Signed square root of SampsonError, used as a least-squares residual.
double SampsonResidual(const Eigen::Matrix3d& essential,
                       const Correspondence& c);

struct TwoViewPose {
  Rotation3d rotation;
  Eigen::Vector3d direction = Eigen::Vector3d::UnitX();
};

// Picks the (R, t) decomposition placing the most inliers in front of both
// cameras. Throws kCheiralityAmbiguous when no candidate reaches a strict
// majority of the inliers.
TwoViewPose DecomposeEssential(const Eigen::Matrix3d& essential,
                                std::span<const Correspondence> inliers);

// Number of correspondences that triangulate with positive depth in both
// cameras for the given relative pose.
int CountInFront(const TwoViewPose& pose,
                 std::span<const Correspondence> correspondences);

// Linear (DLT) two-view triangulation. Throws kDegenerateRay for coincident
// centers or rays parallel within 1e-10 rad.
Eigen::Vector3d TriangulateTwoView(const Posed& pose1, const Posed& pose2,
                                   const Correspondence& c);

struct RansacOptions {
  // Sampson threshold in normalized units (inlier iff error < threshold^2).
  double threshold = 4.0 / 500.0;
  int max_iterations = 10000;
  int min_iterations = 10;
  double confidence = 0.9999;
  int min_inliers = 15;
  uint64_t seed = 0;
  // Nonlinear Sampson refinement of the final model on its inliers.
  bool refine = true;
};

// Robust calibrated relative pose. The returned measurement has
// source/target left at 0; callers fill in image ids and kind.
RelativePoseMeasurement EstimateRelativePoseRansac(
    std::span<const Correspondence> correspondences,
    const RansacOptions& options);

// Minimizes the summed Sampson error over `inliers` starting from `initial`;
// rotation is updated in the Lie algebra and the direction on the sphere.
TwoViewPose RefineRelativePose(const TwoViewPose& initial,
                                std::span<const Correspondence> inliers);

}  // namespace anchorloc
