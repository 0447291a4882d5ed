#pragma once

#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "anchorloc/geometry.h"
#include "anchorloc/types.h"

namespace anchorloc {

// Cameras seen by post optimization: fixed database poses, intrinsics for
// every image, and the mounting of query images onto unknown frames. Query
// images without a mount are their own frame.
struct CameraSet {
  std::map<ImageId, Posed> database_poses;
  std::map<ImageId, CameraIntrinsicsd> intrinsics;
  std::map<ImageId, Mount> mounts;

  bool IsDatabase(ImageId image) const { return database_poses.count(image) > 0; }
  ImageId FrameOf(ImageId image) const;
  Posed CamFromFrame(ImageId image) const;
  // Pose of any image given the current frame poses.
  Posed ImagePose(ImageId image, const std::map<ImageId, Posed>& frames) const;
};

struct Observation {
  ImageId image = 0;
  int keypoint = -1;
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
};

enum class TrackStatus { kUntriangulated, kTriangulated, kRejected };

enum class RejectReason {
  kNone,
  kTooFewViews,
  kCheirality,
  kReprojection,
  kAngle,
};

std::string_view RejectReasonName(RejectReason reason);

// One query keypoint linked to matched keypoints in database images. In
// co-localization a track may also hold observations from other queries
// (linked through query-query inliers), at most one per image.
struct Track {
  std::vector<Observation> query_observations;
  std::vector<Observation> database_observations;
  std::optional<Eigen::Vector3d> point;
  TrackStatus status = TrackStatus::kUntriangulated;
  RejectReason reason = RejectReason::kNone;

  // Points seen by two or more database images are triangulated from the
  // database alone and fix metric scale.
  bool DatabaseAnchored() const { return database_observations.size() >= 2; }
};

// Merges inlier matches into tracks keyed by query keypoint. Database-query
// edges must have source = query. Conflicting database keypoints for the same
// query keypoint and database image are resolved in favour of the edge with
// more inliers. Query-query edges link query keypoints into one track.
// Tracks need at least two observations in total.
std::vector<Track> BuildTracks(std::span<const PairEdge> edges,
                               const CameraSet& cameras);

struct TriangulationOptions {
  double min_tri_angle_deg = 1.0;
  double max_reproj_px = 4.0;
};

// Multi-view DLT of one track followed by cheirality, reprojection and
// triangulation-angle checks. Database-anchored tracks use database views
// only; others use the current frame estimates. On a failed check the worst
// observation is dropped once and the track re-triangulated.
Track TriangulateTrack(const Track& track, const CameraSet& cameras,
                       const std::map<ImageId, Posed>& frames,
                       const TriangulationOptions& options = {});

// Largest angle between viewing rays of `point` from the given centers.
double MaxTriangulationAngle(const Eigen::Vector3d& point,
                             std::span<const Eigen::Vector3d> centers);

// Pixel residual (projection - observed) of `point` in an image mounted on a
// frame with pose (frame_rotation, frame_center).
Eigen::Vector2d ReprojectionResidual(const Posed& cam_from_frame,
                                     const Rotation3d& frame_rotation,
                                     const Eigen::Vector3d& frame_center,
                                     const Eigen::Vector3d& point,
                                     const CameraIntrinsicsd& intrinsics,
                                     const Eigen::Vector2d& observed);

// Analytic 2x9 Jacobian of ReprojectionResidual with respect to
// [rotation tangent (R <- R exp(d)), frame center, point].
Eigen::Matrix<double, 2, 9> ReprojectionJacobian(
    const Posed& cam_from_frame, const Rotation3d& frame_rotation,
    const Eigen::Vector3d& frame_center, const Eigen::Vector3d& point,
    const CameraIntrinsicsd& intrinsics);

struct JointRefineOptions {
  // Huber threshold on the pixel residual norm.
  double huber_px = 4.0;
  int max_iterations = 100;
  // Weight of tracks that are not database anchored.
  double weak_track_weight = 0.5;
  // Re-check rounds after refinement; violators are excluded and the
  // problem re-solved.
  int max_recheck_rounds = 3;
  TriangulationOptions checks;
};

struct JointRefineResult {
  std::map<ImageId, Posed> frames;
  std::vector<Track> tracks;
  bool converged = false;
  int iterations = 0;
  // Robust cost at the start and after every accepted iteration.
  std::vector<double> cost_history;
  // Final pixel residual norm per track (max over observations), NaN for
  // tracks that are not triangulated.
  std::vector<double> track_residuals;
  int num_inlier_observations = 0;
  int num_outlier_observations = 0;
};

// Robust reprojection refinement of the unknown frames and all triangulated
// track points with database poses held fixed. Throws kNoTracks when no
// track is triangulated.
JointRefineResult JointRefine(const CameraSet& cameras,
                              const std::map<ImageId, Posed>& frames,
                              std::vector<Track> tracks,
                              const JointRefineOptions& options = {});

// Robust objective of JointRefine for the given state.
double JointRefineCost(const CameraSet& cameras,
                       const std::map<ImageId, Posed>& frames,
                       std::span<const Track> tracks,
                       const JointRefineOptions& options);

// Linear center of one frame from database-anchored tracks with the frame
// rotation held fixed: each query bearing must pass through its point.
// Returns nullopt with fewer than two usable tracks.
std::optional<Eigen::Vector3d> CenterFromTracks(
    const CameraSet& cameras, ImageId frame, const Rotation3d& frame_rotation,
    std::span<const Track> tracks);

struct SampsonRefineResult {
  std::map<ImageId, Posed> frames;
  bool converged = false;
  // Normal equations are rank deficient (e.g. collinear database motion).
  bool rank_deficient = false;
};

// Refines the frames by minimizing summed Sampson errors over the inlier
// correspondences of the given edges. No points are instantiated. Throws
// kNoTracks when the edges carry no usable inliers.
SampsonRefineResult SampsonRefine(const CameraSet& cameras,
                                  const std::map<ImageId, Posed>& frames,
                                  std::span<const PairEdge> edges);

// Per-query pose from the normalized quaternion average of the edge rotation
// proposals and the ray intersection of the edge directions. Only
// database-query edges of unmounted queries are used.
std::map<ImageId, Posed> LocalOptRefine(const CameraSet& cameras,
                                        std::span<const RelativePoseMeasurement> edges);

}  // namespace anchorloc
