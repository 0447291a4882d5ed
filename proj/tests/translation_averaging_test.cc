#include "anchorloc/translation_averaging.h"

#include <numbers>

#include <gtest/gtest.h>

#include "anchorloc/error.h"
#include "anchorloc/random.h"
#include "test_utils.h"

namespace anchorloc {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

template <typename Fn>
ErrorCode CaptureCode(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

DirectionEdge Exact(ImageId source, ImageId target, const Eigen::Vector3d& cs,
                    const Eigen::Vector3d& ct, double weight = 1.0) {
  return {source, target, (cs - ct).normalized(), weight};
}

struct Star {
  Eigen::Vector3d query;
  std::map<ImageId, Eigen::Vector3d> database;
  std::vector<DirectionEdge> edges;
};

Star MakeStar(Rng& rng, int n, double scale = 5.0) {
  Star s;
  s.query = scale * Eigen::Vector3d(rng.Uniform(-1, 1), rng.Uniform(-1, 1),
                                    rng.Uniform(-1, 1));
  for (int i = 1; i <= n; ++i) {
    s.database[i] = scale * Eigen::Vector3d(rng.Uniform(-1, 1), rng.Uniform(-1, 1),
                                            rng.Uniform(-1, 1));
    s.edges.push_back(Exact(0, i, s.query, s.database[i], rng.Uniform(0.2, 1.0)));
  }
  return s;
}

std::map<ImageId, Eigen::Vector3d> Solve(const TranslationProblem& problem,
                                         TranslationAveragingOptions options = {}) {
  return SolveCenters(problem, InitializeCenters(problem), options);
}

TEST(RefineRelativeTranslation, ExactAndPerturbedStart) {
  Rng rng(60);
  for (int trial = 0; trial < 50; ++trial) {
    const testing::TwoViewScene scene = testing::MakeTwoViewScene(rng, 30);
    const Posed rel = RelativePose(scene.pose1, scene.pose2);
    const Eigen::Vector3d truth = rel.translation.normalized();
    const Eigen::Vector3d exact =
        RefineRelativeTranslation(rel.rotation, truth, scene.correspondences);
    EXPECT_LT(DirectionAngle(exact, truth), 1e-9);
    const Eigen::Vector3d start = rng.RotationWithAngle(2.0 * kDeg) * truth;
    const Eigen::Vector3d refined =
        RefineRelativeTranslation(rel.rotation, start, scene.correspondences);
    EXPECT_LT(DirectionAngle(refined, truth), 1e-8);
    EXPECT_NEAR(refined.norm(), 1.0, 1e-12);
  }
}

TEST(RefineRelativeTranslation, OneInlier) {
  Rng rng(61);
  const testing::TwoViewScene scene = testing::MakeTwoViewScene(rng, 1);
  EXPECT_EQ(CaptureCode([&] {
              RefineRelativeTranslation(Rotation3d(), Eigen::Vector3d::UnitX(),
                                        scene.correspondences);
            }),
            ErrorCode::kInsufficientInliers);
}

TEST(GateEdges, StrictThreshold) {
  Rng rng(62);
  const Rotation3d rq = rng.UniformRotation();
  std::map<ImageId, Rotation3d> rotations{{0, rq}};
  std::vector<RelativePoseMeasurement> edges;
  const double angles[] = {0.1, 4.9, 5.1, 40.0};
  for (int i = 0; i < 4; ++i) {
    rotations[i + 1] = rng.UniformRotation();
    RelativePoseMeasurement m;
    m.source = 0;
    m.target = i + 1;
    m.rotation = rng.RotationWithAngle(angles[i] * kDeg) *
                 (rotations[i + 1] * rq.inverse());
    edges.push_back(m);
  }
  EXPECT_EQ(GateEdges(edges, rotations, 5.0 * kDeg), (std::vector<int>{0, 1}));
  edges.resize(1);
  edges[0].rotation = rotations[1] * rq.inverse();
  EXPECT_EQ(GateEdges(edges, rotations, 5.0 * kDeg), (std::vector<int>{0}));
  edges[0].rotation = rng.RotationWithAngle(10 * kDeg) * edges[0].rotation;
  EXPECT_EQ(CaptureCode([&] { GateEdges(edges, rotations, 5.0 * kDeg); }),
            ErrorCode::kAllEdgesRejected);
}

TEST(MakeDirectionEdge, PointsFromTargetToSource) {
  Rng rng(63);
  const Posed q = testing::RandomPose(rng, 3.0);
  const Posed d = testing::RandomPose(rng, 3.0);
  const Posed rel = RelativePose(q, d);
  RelativePoseMeasurement m;
  m.source = 0;
  m.target = 1;
  m.rotation = rel.rotation;
  m.num_inliers = 300;
  const DirectionEdge e =
      MakeDirectionEdge(m, d.rotation, rel.translation.normalized());
  EXPECT_LT(DirectionAngle<double>(e.direction, CameraCenter(q) - CameraCenter(d)),
            1e-12);
  EXPECT_DOUBLE_EQ(e.weight, 1.0);
}

TEST(InitializeCenters, OrthogonalRays) {
  const Eigen::Vector3d x(1, 2, 3);
  const Eigen::Vector3d a = x + Eigen::Vector3d(4, 0, 0);
  const Eigen::Vector3d b = x + Eigen::Vector3d(0, -2, 0);
  const TranslationProblem problem({{1, a}, {2, b}}, {0},
                                   {Exact(0, 1, x, a), Exact(0, 2, x, b)});
  EXPECT_LT((InitializeCenters(problem).at(0) - x).norm(), 1e-10);
}

TEST(InitializeCenters, ParallelRaysAreDegenerate) {
  const Eigen::Vector3d x(0, 0, 0);
  const Eigen::Vector3d a(1, 0, 0), b(2, 0, 0), c(-3, 0, 0);
  const TranslationProblem problem(
      {{1, a}, {2, b}, {3, c}}, {0},
      {Exact(0, 1, x, a), Exact(0, 2, x, b), Exact(0, 3, x, c)});
  EXPECT_EQ(CaptureCode([&] { InitializeCenters(problem); }),
            ErrorCode::kDegenerateGeometry);
  // The fallback lands on the common line.
  const Eigen::Vector3d fallback = InitializeCentersMinimumNorm(problem).at(0);
  EXPECT_LT(fallback.tail<2>().norm(), 1e-12);
}

TEST(InitializeCenters, ExactSyntheticRays) {
  Rng rng(64);
  for (int trial = 0; trial < 50; ++trial) {
    const Star s = MakeStar(rng, 5);
    const TranslationProblem problem(s.database, {0}, s.edges);
    EXPECT_LT((InitializeCenters(problem).at(0) - s.query).norm(), 1e-9);
  }
}

TEST(SolveCenters, ExactDirections) {
  Rng rng(65);
  for (int trial = 0; trial < 50; ++trial) {
    const Star s = MakeStar(rng, 5);
    const TranslationProblem problem(s.database, {0}, s.edges);
    // Start away from the ray intersection.
    std::map<ImageId, Eigen::Vector3d> init{
        {0, s.query + Eigen::Vector3d(0.3, -0.2, 0.1)}};
    EXPECT_LT((SolveCenters(problem, init).at(0) - s.query).norm(), 1e-8);
  }
}

TEST(SolveCenters, HuberWithOutlierDirections) {
  Rng rng(66);
  for (int trial = 0; trial < 50; ++trial) {
    Star s = MakeStar(rng, 7);
    for (int i = 0; i < 2; ++i) {
      const Eigen::Vector3d axis =
          s.edges[i].direction.cross(rng.UnitVector()).normalized();
      s.edges[i].direction = Rotation3d::FromAngleAxis(
                                 rng.Uniform(31.0, 90.0) * kDeg, axis) *
                             s.edges[i].direction;
    }
    const TranslationProblem problem(s.database, {0}, s.edges);
    TranslationAveragingSummary summary;
    const auto out =
        SolveCenters(problem, InitializeCenters(problem), {}, &summary);
    EXPECT_LT((out.at(0) - s.query).norm(), 1e-4 * 5.0) << "trial " << trial;
  }
}

TEST(SolveCenters, SingleEdgeIsScaleUnobservable) {
  Rng rng(67);
  const Star s = MakeStar(rng, 1);
  const TranslationProblem problem(s.database, {0}, s.edges);
  EXPECT_EQ(CaptureCode([&] {
              SolveCenters(problem, {{0, Eigen::Vector3d::Zero()}});
            }),
            ErrorCode::kScaleUnobservable);
  EXPECT_EQ(CaptureCode([&] { InitializeCenters(problem); }),
            ErrorCode::kScaleUnobservable);
}

TEST(SolveCenters, AnchorsAndEquivariance) {
  Rng rng(68);
  for (int trial = 0; trial < 30; ++trial) {
    Star s = MakeStar(rng, 6);
    // Noisy directions so the solution is non-trivial.
    for (auto& e : s.edges) {
      e.direction = (e.direction + 0.01 * rng.UnitVector()).normalized();
    }
    const TranslationProblem base(s.database, {0}, s.edges);
    const Eigen::Vector3d c0 = Solve(base).at(0);
    for (const auto& [id, c] : base.fixed_centers()) {
      EXPECT_EQ(c, s.database.at(id));
    }

    const Eigen::Vector3d v(3.0, -1.0, 2.5);
    std::map<ImageId, Eigen::Vector3d> shifted;
    for (const auto& [id, c] : s.database) shifted[id] = c + v;
    const TranslationProblem moved(shifted, {0}, s.edges);
    EXPECT_LT((Solve(moved).at(0) - (c0 + v)).norm(), 1e-9);

    const double k = 3.7;
    std::map<ImageId, Eigen::Vector3d> scaled;
    for (const auto& [id, c] : s.database) scaled[id] = k * c;
    const TranslationProblem big(scaled, {0}, s.edges);
    EXPECT_LT((Solve(big).at(0) - k * c0).norm(), 1e-9 * k * c0.norm() + 1e-12);

    std::vector<DirectionEdge> heavy = s.edges;
    for (auto& e : heavy) e.weight *= 17.0;
    const TranslationProblem weighted(s.database, {0}, heavy);
    EXPECT_LT((Solve(weighted).at(0) - c0).norm(), 1e-10);
  }
}

TEST(SolveCenters, CoLocalizationDoesNotCollapse) {
  Rng rng(69);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Vector3d q1(0, 0, 0), q2(1.0, 0.2, 0);
    std::map<ImageId, Eigen::Vector3d> database;
    std::vector<DirectionEdge> edges;
    for (int i = 1; i <= 3; ++i) {
      database[i] = 6.0 * rng.UnitVector();
      edges.push_back(Exact(10, i, q1, database[i]));
    }
    for (int i = 4; i <= 6; ++i) {
      database[i] = q2 + 6.0 * rng.UnitVector();
      edges.push_back(Exact(11, i, q2, database[i]));
    }
    edges.push_back(Exact(11, 10, q2, q1));
    const TranslationProblem problem(database, {10, 11}, edges);
    // Start both queries at the same point.
    std::map<ImageId, Eigen::Vector3d> init{{10, q1 + Eigen::Vector3d(0.4, 0.1, 0)},
                                            {11, q1 + Eigen::Vector3d(0.4, 0.1, 0.01)}};
    const auto out = SolveCenters(problem, init);
    EXPECT_GE((out.at(10) - out.at(11)).norm(), 0.9 * (q1 - q2).norm());
    EXPECT_LT((out.at(10) - q1).norm(), 1e-8);
    EXPECT_LT((out.at(11) - q2).norm(), 1e-8);
  }
}

TEST(SolveCenters, RigOffsets) {
  Rng rng(70);
  const Eigen::Vector3d body(0.5, -0.3, 1.0);
  const Eigen::Vector3d off_a(0.2, 0, 0), off_b(-0.2, 0.1, 0);
  std::map<ImageId, Eigen::Vector3d> database;
  std::vector<DirectionEdge> edges;
  for (int i = 1; i <= 4; ++i) {
    database[i] = 5.0 * rng.UnitVector();
    const ImageId cam = i <= 2 ? 20 : 21;
    const Eigen::Vector3d c = body + (cam == 20 ? off_a : off_b);
    edges.push_back(Exact(cam, i, c, database[i]));
  }
  const TranslationProblem problem(database, {20}, edges,
                                   {{20, {20, off_a}}, {21, {20, off_b}}});
  EXPECT_LT((Solve(problem).at(20) - body).norm(), 1e-8);
}

TEST(SolveCentersLud, ExactDataAndCollapse) {
  Rng rng(71);
  const Star s = MakeStar(rng, 5);
  const TranslationProblem problem(s.database, {0}, s.edges);
  const auto out = SolveCentersLud(problem, InitializeCenters(problem));
  EXPECT_LT((out.at(0) - s.query).norm(), 1e-6);
}

}  // namespace
}  // namespace anchorloc
