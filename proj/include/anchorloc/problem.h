#pragma once

#include <map>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "anchorloc/geometry.h"
#include "anchorloc/types.h"

namespace anchorloc {

struct DatabaseImage {
  Posed pose;
  CameraIntrinsicsd intrinsics;

  bool operator==(const DatabaseImage& other) const {
    return pose.rotation.quaternion().coeffs() ==
               other.pose.rotation.quaternion().coeffs() &&
           pose.translation == other.pose.translation &&
           intrinsics == other.intrinsics;
  }
};

// Fixed placement of a query camera on a rig: P_camera = cam_from_rig * P_rig.
// The rig frame is identified by `rig`; its pose is reported under the
// smallest member query id.
struct RigMember {
  ImageId rig = 0;
  Posed cam_from_rig;

  bool operator==(const RigMember& other) const {
    return rig == other.rig &&
           cam_from_rig.rotation.quaternion().coeffs() ==
               other.cam_from_rig.rotation.quaternion().coeffs() &&
           cam_from_rig.translation == other.cam_from_rig.translation;
  }
};

using ImagePair = std::pair<ImageId, ImageId>;

// Keypoint-index correspondence between the two images of a pair.
struct KeypointMatch {
  int first = -1;
  int second = -1;

  bool operator==(const KeypointMatch&) const = default;
};

// Input to the localizer: fixed database images, query intrinsics, retrieval
// pairs (query, database), optional query-query pairs and rig layout, and
// keypoint matches referencing per-image pixel keypoint tables.
struct LocalizationProblem {
  std::map<ImageId, DatabaseImage> database;
  std::map<ImageId, CameraIntrinsicsd> queries;
  std::vector<ImagePair> retrieval_pairs;
  std::vector<ImagePair> query_query_pairs;
  std::map<ImageId, RigMember> rig;
  std::map<ImagePair, std::vector<KeypointMatch>> matches;
  std::map<ImageId, std::vector<Eigen::Vector2d>> keypoints;

  bool IsDatabase(ImageId id) const { return database.count(id) > 0; }
  bool IsQuery(ImageId id) const { return queries.count(id) > 0; }
  const CameraIntrinsicsd& Intrinsics(ImageId id) const;

  bool operator==(const LocalizationProblem&) const = default;
};

// Throws kDanglingReference for pairs, matches or rig entries naming unknown
// images, and kInvalidArgument for out-of-range keypoint indices, duplicate
// ids or pairs of the wrong kind.
void CheckProblem(const LocalizationProblem& problem);

}  // namespace anchorloc
