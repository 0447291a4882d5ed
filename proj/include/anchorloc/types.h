#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include "anchorloc/geometry.h"

namespace anchorloc {

using ImageId = uint32_t;

// A putative match in normalized image coordinates.
struct Correspondence {
  Eigen::Vector2d p = Eigen::Vector2d::Zero();        // first image
  Eigen::Vector2d p_prime = Eigen::Vector2d::Zero();  // second image
  // Keypoint indices in the first and second image.
  std::pair<int, int> source_indices{-1, -1};
};

// Rigid attachment of a camera to an unknown frame: P_image = mount * P_frame.
// Used for camera rigs; unmounted unknown images are their own frame.
struct Mount {
  ImageId frame = 0;
  Posed cam_from_frame;
};

enum class EdgeKind { kDatabaseQuery, kQueryQuery, kRigFixed };

std::string_view EdgeKindName(EdgeKind kind);

// One pose-graph edge. The rotation and translation map camera coordinates
// of `source` into camera coordinates of `target`:
//   R = R_target R_source^T,  t ~ t_target - R t_source.
// Database-query edges always have source = query and target = database, so
// `rotation` is the query-to-database rotation R_qd and
// R_d^T * direction points from the database center towards the query.
struct RelativePoseMeasurement {
  ImageId source = 0;
  ImageId target = 0;
  Rotation3d rotation;
  // Unit direction, or a metric translation when `scaled` is set.
  Eigen::Vector3d direction = Eigen::Vector3d::UnitX();
  std::vector<int> inliers;
  int num_inliers = 0;
  EdgeKind kind = EdgeKind::kDatabaseQuery;
  bool scaled = false;
};

// A measurement together with the correspondences it was estimated from.
// Correspondence p lives in `source`, p_prime in `target`.
struct PairEdge {
  RelativePoseMeasurement measurement;
  std::vector<Correspondence> correspondences;

  std::vector<Correspondence> InlierCorrespondences() const {
    std::vector<Correspondence> out;
    out.reserve(measurement.inliers.size());
    for (const int i : measurement.inliers) out.push_back(correspondences[i]);
    return out;
  }
};

inline std::string_view EdgeKindName(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::kDatabaseQuery: return "database-query";
    case EdgeKind::kQueryQuery: return "query-query";
    case EdgeKind::kRigFixed: return "rig-fixed";
  }
  return "unknown";
}

}  // namespace anchorloc
