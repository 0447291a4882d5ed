#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include <Eigen/Core>

#include "anchorloc/geometry.h"
#include "anchorloc/problem.h"

namespace anchorloc {

enum class CameraLayout { kSphere, kLine, kGrid };

struct SceneSpec {
  int n_database = 10;
  int n_points = 500;
  int n_queries = 20;
  // Queries come in consecutive fragments of this length (1: isolated).
  int fragment_length = 1;
  // Distance between consecutive cameras of a fragment.
  double fragment_step = 0.3;

  CameraLayout camera_layout = CameraLayout::kSphere;
  // Sphere: distance of the cameras from the point-box center.
  double radius = 4.0;
  // Line: cameras on center + s * line_direction at distance `radius` from
  // the box center, consecutive database cameras `spacing` apart. Grid:
  // square grid with that spacing in the plane at distance `radius`.
  Eigen::Vector3d line_direction = Eigen::Vector3d::UnitX();
  double spacing = 1.0;

  Eigen::Vector3d box_min = Eigen::Vector3d::Constant(-0.5);
  Eigen::Vector3d box_max = Eigen::Vector3d::Constant(0.5);
  // Random offset of the look-at target, scene units.
  double look_jitter = 0.1;

  CameraIntrinsicsd intrinsics{500.0, 500.0, 320.0, 240.0};
  int image_width = 640;
  int image_height = 480;

  double pixel_noise_sigma = 0.0;
  double match_outlier_rate = 0.0;
  double edge_outlier_rate = 0.0;
  uint64_t seed = 0;
};

// World-to-camera pose of a camera at `center` looking at `target`.
Posed LookAt(const Eigen::Vector3d& center, const Eigen::Vector3d& target);

// Throws kInvalidArgument for out-of-range fields.
void CheckSpec(const SceneSpec& spec);

struct SyntheticPair {
  ImageId first = 0;
  ImageId second = 0;
  std::vector<KeypointMatch> matches;
  // Per match: true when both keypoints observe the same ground-truth point.
  std::vector<bool> inlier;
  // The whole pair was replaced by matches of a wrong relative geometry.
  bool edge_outlier = false;
  // Ground-truth points seen by both images.
  int covisible = 0;
};

struct SyntheticScene {
  SceneSpec spec;
  // Database poses handed to the solver (possibly corrupted) and the truth.
  std::map<ImageId, Posed> database;
  std::map<ImageId, Posed> database_truth;
  std::map<ImageId, Posed> queries;
  std::vector<Eigen::Vector3d> points;
  // Per image: pixel keypoints and the point each one observes (-1 for
  // keypoints that observe no ground-truth point).
  std::map<ImageId, std::vector<Eigen::Vector2d>> keypoints;
  std::map<ImageId, std::vector<int>> keypoint_points;
  // All query-database pairs, then query-query pairs within fragments.
  std::vector<SyntheticPair> pairs;
  std::vector<std::vector<ImageId>> fragments;

  // Largest distance between any two cameras or points.
  double Diameter() const;
};

// Deterministic scene from spec.seed. Database ids are 1..n_database, query
// ids follow. Throws kInfeasibleSpec when some camera cannot be oriented to
// see at least 50 points within 100 attempts.
SyntheticScene GenerateScene(const SceneSpec& spec);

// Rotates every database camera by rotation_noise_deg about a uniform axis
// (center kept) and moves its center by translation_noise in a uniform
// direction. Ground truth stays in database_truth.
SyntheticScene CorruptDatabase(const SyntheticScene& scene, double rotation_noise_deg,
                               double translation_noise, uint64_t seed);

struct ProblemOptions {
  int top_k = 10;
  bool query_query_pairs = false;
  // Mount each fragment on a rig with exact internal poses.
  bool rig = false;
};

// Simulated retrieval: per query the top_k database images by co-visible
// ground-truth points (ties: nearer camera center, then smaller id).
LocalizationProblem MakeProblem(const SyntheticScene& scene, const ProblemOptions& options);

// Ground-truth query poses as the solver reports them.
std::map<ImageId, Posed> QueryTruth(const SyntheticScene& scene);

}  // namespace anchorloc
