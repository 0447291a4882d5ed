#pragma once

#include <vector>

#include "anchorloc/geometry.h"
#include "anchorloc/random.h"
#include "anchorloc/types.h"

namespace anchorloc::testing {

Posed RandomPose(Rng& rng, double translation_scale = 1.0);

// Camera at `center` looking at `target` (world-to-camera pose).
Posed LookAt(const Eigen::Vector3d& center, const Eigen::Vector3d& target);

// Two cameras looking at a cloud of points around the origin; returns the
// exact normalized projections as correspondences (p in camera 1).
struct TwoViewScene {
  Posed pose1;
  Posed pose2;
  std::vector<Eigen::Vector3d> points;
  std::vector<Correspondence> correspondences;
};
TwoViewScene MakeTwoViewScene(Rng& rng, int num_points, bool planar = false);

Correspondence Project(const Posed& pose1, const Posed& pose2,
                       const Eigen::Vector3d& x);

double RotationErrorRad(const Rotation3d& a, const Rotation3d& b);

}  // namespace anchorloc::testing
