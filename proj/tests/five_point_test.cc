#include <gtest/gtest.h>

#include "anchorloc/error.h"
#include "anchorloc/two_view.h"
#include "test_utils.h"

namespace anchorloc {
namespace {

// Ground-truth E = [t]x R from the relative pose, unit Frobenius norm.
Eigen::Matrix3d GroundTruthEssential(const testing::TwoViewScene& scene) {
  const Posed rel = RelativePose(scene.pose1, scene.pose2);
  const Eigen::Matrix3d e =
      CrossMatrix<double>(rel.translation) * rel.rotation.matrix();
  return e / e.norm();
}

double DistanceUpToSign(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  return std::min((a - b).norm(), (a + b).norm());
}

double EpipolarResidual(const Eigen::Matrix3d& e, const Correspondence& c) {
  return std::abs(c.p_prime.homogeneous().dot(e * c.p.homogeneous()));
}

TEST(SolveEssentialMinimal, ExactSampleRecoversGroundTruth) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const testing::TwoViewScene scene = testing::MakeTwoViewScene(rng, 5);
    const auto candidates = SolveEssentialMinimal(scene.correspondences);
    ASSERT_FALSE(candidates.empty());
    EXPECT_LE(candidates.size(), 10u);
    const Eigen::Matrix3d gt = GroundTruthEssential(scene);
    double best = 1e9;
    for (const auto& e : candidates) {
      best = std::min(best, DistanceUpToSign(e, gt));
      for (const auto& c : scene.correspondences) {
        EXPECT_LT(EpipolarResidual(e, c), 1e-8);
      }
      EXPECT_LT(std::abs(e.determinant()), 1e-8);
      const Eigen::Matrix3d eet = e * e.transpose();
      EXPECT_LT((2.0 * eet * e - eet.trace() * e).norm(), 1e-8);
    }
    EXPECT_LT(best, 1e-6) << "trial " << trial;
    double best_residual = 1e9;
    for (const auto& e : candidates) {
      double worst = 0.0;
      for (const auto& c : scene.correspondences) {
        worst = std::max(worst, EpipolarResidual(e, c));
      }
      best_residual = std::min(best_residual, worst);
    }
    EXPECT_LT(best_residual, 1e-10);
  }
}

TEST(SolveEssentialMinimal, PlanarSceneRecoversGroundTruth) {
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const testing::TwoViewScene scene =
        testing::MakeTwoViewScene(rng, 5, /*planar=*/true);
    const auto candidates = SolveEssentialMinimal(scene.correspondences);
    const Eigen::Matrix3d gt = GroundTruthEssential(scene);
    double best = 1e9;
    for (const auto& e : candidates) best = std::min(best, DistanceUpToSign(e, gt));
    EXPECT_LT(best, 1e-6) << "trial " << trial;
  }
}

TEST(SolveEssentialMinimal, IdenticalPointsAreDegenerate) {
  Correspondence c;
  c.p = Eigen::Vector2d(0.1, -0.2);
  c.p_prime = Eigen::Vector2d(0.05, 0.3);
  const std::vector<Correspondence> sample(5, c);
  try {
    SolveEssentialMinimal(sample);
    FAIL() << "expected DegenerateSample";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateSample);
  }
}

TEST(SolveEssentialLinear, ExactDataRecoversGroundTruth) {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const testing::TwoViewScene scene = testing::MakeTwoViewScene(rng, 30);
    const Eigen::Matrix3d e = SolveEssentialLinear(scene.correspondences);
    EXPECT_LT(DistanceUpToSign(e, GroundTruthEssential(scene)), 1e-8);
  }
}

}  // namespace
}  // namespace anchorloc
