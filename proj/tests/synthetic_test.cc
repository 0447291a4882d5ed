#include "anchorloc/synthetic.h"

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "anchorloc/error.h"
#include "anchorloc/two_view.h"
#include "test_utils.h"

namespace anchorloc {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

SceneSpec SmallSpec(uint64_t seed) {
  SceneSpec spec;
  spec.n_database = 6;
  spec.n_points = 300;
  spec.n_queries = 4;
  spec.seed = seed;
  return spec;
}

Posed PoseOf(const SyntheticScene& scene, ImageId id) {
  const auto it = scene.database_truth.find(id);
  return it != scene.database_truth.end() ? it->second : scene.queries.at(id);
}

Eigen::Vector2d ExactPixel(const SyntheticScene& scene, ImageId id, int point) {
  return scene.spec.intrinsics.Denormalize(
      PoseOf(scene, id).Transform(scene.points[point]).hnormalized());
}

TEST(GenerateScene, DeterministicFromSeed) {
  const SyntheticScene a = GenerateScene(SmallSpec(3));
  const SyntheticScene b = GenerateScene(SmallSpec(3));
  EXPECT_EQ(a.points, b.points);
  EXPECT_EQ(a.keypoints, b.keypoints);
  ASSERT_EQ(a.pairs.size(), b.pairs.size());
  for (size_t i = 0; i < a.pairs.size(); ++i) {
    EXPECT_EQ(a.pairs[i].matches, b.pairs[i].matches);
  }
  for (const auto& [id, pose] : a.queries) {
    EXPECT_EQ(pose.translation, b.queries.at(id).translation);
  }
  const SyntheticScene c = GenerateScene(SmallSpec(4));
  EXPECT_NE(a.points, c.points);
}

TEST(GenerateScene, EveryCameraSeesFiftyPoints) {
  for (const auto layout : {CameraLayout::kSphere, CameraLayout::kLine, CameraLayout::kGrid}) {
    SceneSpec spec = SmallSpec(5);
    spec.camera_layout = layout;
    const SyntheticScene scene = GenerateScene(spec);
    EXPECT_EQ(scene.database_truth.size(), 6u);
    EXPECT_EQ(scene.queries.size(), 4u);
    for (const auto& [id, owners] : scene.keypoint_points) {
      EXPECT_GE(owners.size(), 50u) << "image " << id;
    }
  }
}

TEST(GenerateScene, LineLayoutIsCollinear) {
  SceneSpec spec = SmallSpec(6);
  spec.camera_layout = CameraLayout::kLine;
  spec.line_direction = Eigen::Vector3d(1.0, 1.0, 0.0);
  const SyntheticScene scene = GenerateScene(spec);
  const Eigen::Vector3d c0 = CameraCenter(scene.database_truth.at(1));
  const Eigen::Vector3d dir = spec.line_direction.normalized();
  for (const auto* poses : {&scene.database_truth, &scene.queries}) {
    for (const auto& [id, pose] : *poses) {
      EXPECT_LT((CameraCenter(pose) - c0).cross(dir).norm(), 1e-12);
    }
  }
}

TEST(GenerateScene, NoiseFreeMatchesSatisfyEpipolarConstraint) {
  const SyntheticScene scene = GenerateScene(SmallSpec(7));
  int checked = 0;
  for (const SyntheticPair& pair : scene.pairs) {
    const Posed rel = RelativePose(PoseOf(scene, pair.first), PoseOf(scene, pair.second));
    const Eigen::Matrix3d e = EssentialFromPose(rel.rotation, rel.translation);
    for (const KeypointMatch& m : pair.matches) {
      const Eigen::Vector3d p =
          scene.spec.intrinsics.Normalize(scene.keypoints.at(pair.first)[m.first]).homogeneous();
      const Eigen::Vector3d q = scene.spec.intrinsics.Normalize(
                                        scene.keypoints.at(pair.second)[m.second])
                                    .homogeneous();
      EXPECT_LT(std::abs(q.dot(e * p)), 1e-12);
      ++checked;
    }
  }
  EXPECT_GT(checked, 1000);
}

TEST(GenerateScene, PixelNoiseStandardDeviation) {
  SceneSpec spec = SmallSpec(8);
  spec.pixel_noise_sigma = 1.0;
  spec.n_queries = 20;
  const SyntheticScene scene = GenerateScene(spec);
  double sum_sq = 0.0;
  int n = 0;
  for (const auto& [id, owners] : scene.keypoint_points) {
    for (size_t k = 0; k < owners.size(); ++k) {
      if (owners[k] < 0) continue;
      const Eigen::Vector2d d = scene.keypoints.at(id)[k] - ExactPixel(scene, id, owners[k]);
      sum_sq += d.squaredNorm();
      n += 2;
    }
  }
  ASSERT_GE(n, 10000);
  EXPECT_NEAR(std::sqrt(sum_sq / n), 1.0, 0.1);
}

TEST(GenerateScene, MatchOutlierRate) {
  SceneSpec spec = SmallSpec(9);
  spec.match_outlier_rate = 0.3;
  spec.n_queries = 10;
  const SyntheticScene scene = GenerateScene(spec);
  int total = 0;
  int outliers = 0;
  for (const SyntheticPair& pair : scene.pairs) {
    for (const bool inlier : pair.inlier) {
      ++total;
      if (!inlier) ++outliers;
    }
  }
  ASSERT_GE(total, 10000);
  EXPECT_NEAR(static_cast<double>(outliers) / total, 0.3, 0.02);
}

TEST(GenerateScene, LabeledInliersWithinFiveSigma) {
  SceneSpec spec = SmallSpec(10);
  spec.pixel_noise_sigma = 1.0;
  spec.match_outlier_rate = 0.2;
  const SyntheticScene scene = GenerateScene(spec);
  for (const SyntheticPair& pair : scene.pairs) {
    for (size_t i = 0; i < pair.matches.size(); ++i) {
      if (!pair.inlier[i]) continue;
      const KeypointMatch& m = pair.matches[i];
      const int point = scene.keypoint_points.at(pair.first)[m.first];
      ASSERT_GE(point, 0);
      ASSERT_EQ(point, scene.keypoint_points.at(pair.second)[m.second]);
      const double r1 =
          (scene.keypoints.at(pair.first)[m.first] - ExactPixel(scene, pair.first, point)).norm();
      const double r2 = (scene.keypoints.at(pair.second)[m.second] -
                         ExactPixel(scene, pair.second, point))
                            .norm();
      EXPECT_LT(std::max(r1, r2), 5.0 * std::sqrt(2.0));
    }
  }
}

TEST(GenerateScene, EdgeOutliersCarryWrongGeometry) {
  SceneSpec spec = SmallSpec(11);
  spec.edge_outlier_rate = 0.5;
  spec.n_queries = 6;
  const SyntheticScene scene = GenerateScene(spec);
  int outliers = 0;
  for (const SyntheticPair& pair : scene.pairs) {
    if (!pair.edge_outlier) continue;
    ++outliers;
    std::vector<Correspondence> corrs;
    for (const KeypointMatch& m : pair.matches) {
      Correspondence c;
      c.p = spec.intrinsics.Normalize(scene.keypoints.at(pair.first)[m.first]);
      c.p_prime = spec.intrinsics.Normalize(scene.keypoints.at(pair.second)[m.second]);
      corrs.push_back(c);
    }
    if (corrs.size() < 20) continue;
    RansacOptions options;
    const RelativePoseMeasurement est = EstimateRelativePoseRansac(corrs, options);
    const Posed truth = RelativePose(PoseOf(scene, pair.first), PoseOf(scene, pair.second));
    EXPECT_GT(GeodesicAngle(est.rotation, truth.rotation), 15.0 * kDeg);
  }
  EXPECT_GT(outliers, 5);
}

TEST(GenerateScene, TwoViewRecoversGroundTruthOnNoiseFreePairs) {
  const SyntheticScene scene = GenerateScene(SmallSpec(12));
  for (size_t i = 0; i < scene.pairs.size(); i += 3) {
    const SyntheticPair& pair = scene.pairs[i];
    if (pair.matches.size() < 30) continue;
    std::vector<Correspondence> corrs;
    for (const KeypointMatch& m : pair.matches) {
      Correspondence c;
      c.p = scene.spec.intrinsics.Normalize(scene.keypoints.at(pair.first)[m.first]);
      c.p_prime = scene.spec.intrinsics.Normalize(scene.keypoints.at(pair.second)[m.second]);
      corrs.push_back(c);
    }
    const RelativePoseMeasurement est = EstimateRelativePoseRansac(corrs, RansacOptions());
    const Posed truth = RelativePose(PoseOf(scene, pair.first), PoseOf(scene, pair.second));
    EXPECT_LT(GeodesicAngle(est.rotation, truth.rotation), 1e-6);
    EXPECT_LT(DirectionAngle<double>(est.direction, truth.translation), 1e-6);
  }
}

TEST(GenerateScene, InfeasibleSpec) {
  SceneSpec spec = SmallSpec(13);
  spec.n_points = 40;
  try {
    GenerateScene(spec);
    FAIL() << "expected InfeasibleSpec";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInfeasibleSpec);
  }
  spec = SmallSpec(13);
  spec.match_outlier_rate = 1.0;
  EXPECT_THROW(GenerateScene(spec), Error);
}

TEST(GenerateScene, FragmentsAreConsecutiveAndNonOverlapping) {
  SceneSpec spec = SmallSpec(14);
  spec.n_queries = 7;
  spec.fragment_length = 3;
  const SyntheticScene scene = GenerateScene(spec);
  ASSERT_EQ(scene.fragments.size(), 3u);
  EXPECT_EQ(scene.fragments[2].size(), 1u);
  std::set<ImageId> seen;
  for (const auto& f : scene.fragments) {
    for (size_t i = 0; i < f.size(); ++i) {
      EXPECT_TRUE(seen.insert(f[i]).second);
      if (i > 0) {
        EXPECT_NEAR((CameraCenter(scene.queries.at(f[i])) -
                     CameraCenter(scene.queries.at(f[i - 1])))
                        .norm(),
                    spec.fragment_step, 0.05);
      }
    }
  }
}

TEST(CorruptDatabase, ZeroNoiseUnchanged) {
  const SyntheticScene scene = GenerateScene(SmallSpec(15));
  const SyntheticScene out = CorruptDatabase(scene, 0.0, 0.0, 1);
  for (const auto& [id, pose] : scene.database) {
    EXPECT_EQ(pose.rotation.quaternion().coeffs(), out.database.at(id).rotation.quaternion().coeffs());
    EXPECT_EQ(pose.translation, out.database.at(id).translation);
  }
}

TEST(CorruptDatabase, NoiseMagnitudes) {
  const SyntheticScene scene = GenerateScene(SmallSpec(16));
  const SyntheticScene out = CorruptDatabase(scene, 5.0, 0.1, 2);
  for (const auto& [id, pose] : out.database) {
    const Posed& truth = out.database_truth.at(id);
    EXPECT_NEAR(GeodesicAngle(pose.rotation, truth.rotation), 5.0 * kDeg, 1e-12);
    EXPECT_NEAR((CameraCenter(pose) - CameraCenter(truth)).norm(), 0.1, 1e-12);
  }
  EXPECT_EQ(out.queries.size(), scene.queries.size());
}

TEST(MakeProblem, TopKRanking) {
  const SyntheticScene scene = GenerateScene(SmallSpec(17));
  const LocalizationProblem all = MakeProblem(scene, {.top_k = 6});
  std::map<ImageId, int> count;
  for (const auto& [q, d] : all.retrieval_pairs) ++count[q];
  for (const auto& [q, pose] : scene.queries) EXPECT_EQ(count[q], 6);

  const LocalizationProblem top2 = MakeProblem(scene, {.top_k = 2});
  for (const auto& [q, d] : top2.retrieval_pairs) {
    int covisible = 0;
    int better = 0;
    for (const SyntheticPair& p : scene.pairs) {
      if (p.first == q && p.second == d) covisible = p.covisible;
    }
    for (const SyntheticPair& p : scene.pairs) {
      if (p.first == q && scene.database.count(p.second) && p.covisible > covisible) ++better;
    }
    EXPECT_LT(better, 2);
  }
  CheckProblem(top2);
}

TEST(MakeProblem, SingleCovisibleCameraRankedFirst) {
  SyntheticScene scene = GenerateScene(SmallSpec(18));
  const ImageId q = scene.queries.begin()->first;
  // Keep one co-visible database camera for this query.
  ImageId keep = 0;
  std::vector<SyntheticPair> pairs;
  for (SyntheticPair& p : scene.pairs) {
    if (p.first == q && scene.database.count(p.second)) {
      if (keep != 0) continue;
      keep = p.second;
    }
    pairs.push_back(p);
  }
  scene.pairs = pairs;
  const LocalizationProblem problem = MakeProblem(scene, {.top_k = 3});
  for (const auto& [a, b] : problem.retrieval_pairs) {
    if (a == q) {
      EXPECT_EQ(b, keep);
      break;
    }
  }
}

TEST(MakeProblem, RigMembersComposeToTruth) {
  SceneSpec spec = SmallSpec(19);
  spec.n_queries = 6;
  spec.fragment_length = 3;
  const SyntheticScene scene = GenerateScene(spec);
  const LocalizationProblem problem =
      MakeProblem(scene, {.top_k = 4, .query_query_pairs = true, .rig = true});
  EXPECT_EQ(problem.rig.size(), 6u);
  EXPECT_FALSE(problem.query_query_pairs.empty());
  for (const auto& f : scene.fragments) {
    const Posed& base = scene.queries.at(f.front());
    for (const ImageId q : f) {
      const Posed composed = problem.rig.at(q).cam_from_rig * base;
      EXPECT_LT(GeodesicAngle(composed.rotation, scene.queries.at(q).rotation), 1e-12);
      EXPECT_LT((composed.translation - scene.queries.at(q).translation).norm(), 1e-12);
      EXPECT_EQ(problem.rig.at(q).rig, f.front());
    }
  }
}

}  // namespace
}  // namespace anchorloc
