#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include <Eigen/Dense>

#include "anchorloc/error.h"
#include "anchorloc/levenberg_marquardt.h"
#include "anchorloc/random.h"
#include "anchorloc/triangulation.h"
#include "anchorloc/two_view.h"

namespace anchorloc {
namespace {

struct Score {
  int count = 0;
  double cost = std::numeric_limits<double>::infinity();

  bool BetterThan(const Score& o) const {
    return count > o.count || (count == o.count && cost < o.cost);
  }
};

// Stops early (returning a partial score) once the model cannot reach
// min_count inliers.
Score ScoreModel(const Eigen::Matrix3d& e,
                 std::span<const Correspondence> correspondences,
                 double threshold_sq, int min_count = 0) {
  Score s;
  s.cost = 0.0;
  int remaining = static_cast<int>(correspondences.size());
  for (const auto& c : correspondences) {
    if (s.count + remaining < min_count) break;
    --remaining;
    const double err = SampsonError(e, c);
    if (err < threshold_sq) {
      ++s.count;
      s.cost += err;
    } else {
      s.cost += threshold_sq;
    }
  }
  return s;
}

std::vector<int> InlierIndices(const Eigen::Matrix3d& e,
                               std::span<const Correspondence> correspondences,
                               double threshold_sq) {
  std::vector<int> inliers;
  for (int i = 0; i < static_cast<int>(correspondences.size()); ++i) {
    if (SampsonError(e, correspondences[i]) < threshold_sq) inliers.push_back(i);
  }
  return inliers;
}

std::vector<Correspondence> Select(std::span<const Correspondence> all,
                                   const std::vector<int>& indices) {
  std::vector<Correspondence> out;
  out.reserve(indices.size());
  for (const int i : indices) out.push_back(all[i]);
  return out;
}

int RequiredIterations(int num_inliers, int num_total, double confidence,
                       int min_iterations, int max_iterations) {
  const double ratio = static_cast<double>(num_inliers) / num_total;
  const double p_good = std::pow(ratio, 5);
  if (p_good >= 1.0) return min_iterations;
  if (p_good <= 0.0) return max_iterations;
  const double n = std::log(1.0 - confidence) / std::log(1.0 - p_good);
  if (!std::isfinite(n) || n > max_iterations) return max_iterations;
  return std::max(min_iterations, static_cast<int>(std::ceil(n)));
}

}  // namespace

double SampsonError(const Eigen::Matrix3d& essential, const Correspondence& c) {
  const double r = SampsonResidual(essential, c);
  return r * r;
}

double SampsonResidual(const Eigen::Matrix3d& essential,
                       const Correspondence& c) {
  const Eigen::Vector3d x1 = c.p.homogeneous();
  const Eigen::Vector3d x2 = c.p_prime.homogeneous();
  const Eigen::Vector3d ex1 = essential * x1;
  const Eigen::Vector3d etx2 = essential.transpose() * x2;
  const double algebraic = x2.dot(ex1);
  const double denom = ex1.head<2>().squaredNorm() + etx2.head<2>().squaredNorm();
  if (denom <= 0.0) return algebraic == 0.0 ? 0.0 : std::copysign(1e10, algebraic);
  return algebraic / std::sqrt(denom);
}

int CountInFront(const TwoViewPose& pose,
                 std::span<const Correspondence> correspondences) {
  // Depths of both rays from min |d1 R f1 + t - d2 f2|.
  const Eigen::Matrix3d r = pose.rotation.matrix();
  const Eigen::Vector3d& t = pose.direction;
  int count = 0;
  for (const auto& c : correspondences) {
    const Eigen::Vector3d a = r * c.p.homogeneous();
    const Eigen::Vector3d b = c.p_prime.homogeneous();
    const double aa = a.squaredNorm();
    const double bb = b.squaredNorm();
    const double ab = a.dot(b);
    const double det = aa * bb - ab * ab;
    if (det <= 1e-14 * aa * bb) continue;
    const double at = a.dot(t);
    const double bt = b.dot(t);
    const double d1 = (-bb * at + ab * bt) / det;
    const double d2 = (aa * bt - ab * at) / det;
    if (d1 > 0.0 && d2 > 0.0) ++count;
  }
  return count;
}

TwoViewPose DecomposeEssential(const Eigen::Matrix3d& essential,
                                std::span<const Correspondence> inliers) {
  if (inliers.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "decomposition needs at least one inlier");
  }
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      essential, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  Eigen::Matrix3d v = svd.matrixV();
  if (u.determinant() < 0.0) u = -u;
  if (v.determinant() < 0.0) v = -v;
  Eigen::Matrix3d w;
  w << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  const Eigen::Matrix3d r1 = u * w * v.transpose();
  const Eigen::Matrix3d r2 = u * w.transpose() * v.transpose();
  const Eigen::Vector3d t = u.col(2).normalized();

  const std::array<TwoViewPose, 4> candidates = {
      TwoViewPose{Rotation3d::FromMatrix(r1), t},
      TwoViewPose{Rotation3d::FromMatrix(r1), -t},
      TwoViewPose{Rotation3d::FromMatrix(r2), t},
      TwoViewPose{Rotation3d::FromMatrix(r2), -t}};

  int best = -1;
  int best_count = -1;
  double best_error = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 4; ++k) {
    const int count = CountInFront(candidates[k], inliers);
    const Eigen::Matrix3d e =
        EssentialFromPose(candidates[k].rotation, candidates[k].direction);
    double error = 0.0;
    for (const auto& c : inliers) error += SampsonError(e, c);
    error /= static_cast<double>(inliers.size());
    if (count > best_count || (count == best_count && error < best_error)) {
      best = k;
      best_count = count;
      best_error = error;
    }
  }
  if (2 * best_count <= static_cast<int>(inliers.size())) {
    throw Error(ErrorCode::kCheiralityAmbiguous,
                "no decomposition places a majority of inliers in front");
  }
  return candidates[best];
}

Eigen::Vector3d TriangulateTwoView(const Posed& pose1, const Posed& pose2,
                                   const Correspondence& c) {
  const Eigen::Vector3d c1 = CameraCenter(pose1);
  const Eigen::Vector3d c2 = CameraCenter(pose2);
  if ((c1 - c2).norm() <= 1e-12 * std::max(1.0, c1.norm())) {
    throw Error(ErrorCode::kDegenerateRay, "camera centers coincide");
  }
  const Eigen::Vector3d ray1 = pose1.rotation.inverse() * c.p.homogeneous();
  const Eigen::Vector3d ray2 = pose2.rotation.inverse() * c.p_prime.homogeneous();
  if (DirectionAngle(ray1, ray2) < 1e-10) {
    throw Error(ErrorCode::kDegenerateRay, "viewing rays are parallel");
  }
  const std::array<Posed, 2> poses = {pose1, pose2};
  const std::array<Eigen::Vector2d, 2> points = {c.p, c.p_prime};
  return TriangulateDlt(poses, points).hnormalized();
}

TwoViewPose RefineRelativePose(const TwoViewPose& initial,
                               std::span<const Correspondence> inliers) {
  // IRLS with Tukey weights; the scale follows the residual median so that
  // correspondences inside the inlier band but off the consensus geometry
  // lose their influence as the model converges.
  const int n = static_cast<int>(inliers.size());
  Eigen::VectorXd weights = Eigen::VectorXd::Ones(n);
  LeastSquaresProblem<TwoViewPose> problem;
  problem.num_parameters = 5;
  problem.residuals = [&](const TwoViewPose& x) {
    const Eigen::Matrix3d e = EssentialFromPose(x.rotation, x.direction);
    Eigen::VectorXd r(n);
    for (int i = 0; i < n; ++i) {
      r(i) = std::sqrt(weights(i)) * SampsonResidual(e, inliers[i]);
    }
    return r;
  };
  problem.plus = [](const TwoViewPose& x, const Eigen::VectorXd& delta) {
    TwoViewPose out;
    out.rotation = ExpSO3<double>(delta.head<3>()) * x.rotation;
    out.direction =
        (x.direction + TangentBasis<double>(x.direction) * delta.tail<2>()).normalized();
    return out;
  };

  TwoViewPose refined = initial;
  LmOptions options;
  options.max_iterations = 30;
  options.cost_tolerance = 1e-10;
  constexpr int kRounds = 10;
  constexpr double kTukey = 4.685;
  for (int round = 0; round < kRounds; ++round) {
    const Eigen::Matrix3d e = EssentialFromPose(refined.rotation, refined.direction);
    std::vector<double> abs_r(n);
    for (int i = 0; i < n; ++i) abs_r[i] = std::abs(SampsonResidual(e, inliers[i]));
    std::vector<double> sorted = abs_r;
    std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
    const double scale = std::max(1.4826 * sorted[n / 2], 1e-12);
    const double cutoff = kTukey * scale;
    int active = 0;
    for (int i = 0; i < n; ++i) {
      const double u = abs_r[i] / cutoff;
      weights(i) = u < 1.0 ? (1.0 - u * u) * (1.0 - u * u) : 0.0;
      if (weights(i) > 0.0) ++active;
    }
    if (active < 5) break;
    const TwoViewPose before = refined;
    MinimizeLevenbergMarquardt(problem, &refined, options);
    const double change = GeodesicAngle(before.rotation, refined.rotation) +
                          (before.direction - refined.direction).norm();
    if (change < 1e-12) break;
  }
  return refined;
}

RelativePoseMeasurement EstimateRelativePoseRansac(
    std::span<const Correspondence> correspondences,
    const RansacOptions& options) {
  const int n = static_cast<int>(correspondences.size());
  if (n < 5) {
    throw Error(ErrorCode::kInsufficientMatches,
                "need at least 5 correspondences, got " + std::to_string(n));
  }
  const double threshold_sq = options.threshold * options.threshold;
  Rng rng(options.seed);

  Score best;
  best.count = -1;
  Eigen::Matrix3d best_e = Eigen::Matrix3d::Zero();
  int required = options.max_iterations;
  std::array<Correspondence, 5> sample;
  for (int iter = 0; iter < std::min(required, options.max_iterations); ++iter) {
    const std::vector<int> idx = rng.Sample(n, 5);
    for (int k = 0; k < 5; ++k) sample[k] = correspondences[idx[k]];
    std::vector<Eigen::Matrix3d> models;
    try {
      models = SolveEssentialMinimal(sample);
    } catch (const Error&) {
      continue;
    }
    for (const auto& e : models) {
      const Score s = ScoreModel(e, correspondences, threshold_sq, best.count);
      if (s.BetterThan(best)) {
        best = s;
        best_e = e;
        required = RequiredIterations(s.count, n, options.confidence,
                                      options.min_iterations,
                                      options.max_iterations);
      }
    }
  }
  if (best.count < std::max(options.min_inliers, 5)) {
    throw Error(ErrorCode::kNoModelFound,
                "best model has " + std::to_string(std::max(best.count, 0)) +
                    " inliers, need " + std::to_string(options.min_inliers));
  }

  // Local optimization starts from the minimal model and from a non-minimal
  // refit on its consensus set. Narrow fields of view admit a second basin
  // with a near-complete consensus, so both starts are refined over the same
  // consensus set and judged by the truncated cost, which already charges
  // every outlier the threshold.
  const int min_count = std::max(options.min_inliers, 5);
  const std::vector<int> consensus = InlierIndices(best_e, correspondences, threshold_sq);
  const std::vector<Correspondence> in = Select(correspondences, consensus);
  std::vector<Eigen::Matrix3d> starts = {best_e};
  if (in.size() >= 8) starts.push_back(SolveEssentialLinear(in));

  std::optional<TwoViewPose> pose;
  std::vector<int> inliers;
  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<TwoViewPose> tried;
  for (const Eigen::Matrix3d& start : starts) {
    TwoViewPose candidate;
    try {
      candidate = DecomposeEssential(start, in);
    } catch (const Error&) {
      continue;
    }
    // Starts in the same basin converge to the same refined pose.
    constexpr double kSameBasin = std::numbers::pi / 180.0;
    const bool same_basin = std::any_of(tried.begin(), tried.end(), [&](const TwoViewPose& t) {
      return GeodesicAngle(t.rotation, candidate.rotation) < kSameBasin &&
             DirectionAngle(t.direction, candidate.direction) < kSameBasin;
    });
    if (same_basin) continue;
    tried.push_back(candidate);
    Eigen::Matrix3d e = EssentialFromPose(candidate.rotation, candidate.direction);
    Score s = ScoreModel(e, correspondences, threshold_sq);
    if (options.refine) {
      const TwoViewPose refined = RefineRelativePose(candidate, in);
      const Eigen::Matrix3d e_ref = EssentialFromPose(refined.rotation, refined.direction);
      const Score s_ref = ScoreModel(e_ref, correspondences, threshold_sq);
      if (s_ref.count >= min_count && s_ref.cost <= s.cost) {
        candidate = refined;
        e = e_ref;
        s = s_ref;
      }
    }
    if (s.count >= min_count && s.cost < best_cost) {
      best_cost = s.cost;
      pose = candidate;
      inliers = InlierIndices(e, correspondences, threshold_sq);
    }
  }
  if (!pose) {
    throw Error(ErrorCode::kNoModelFound, "no candidate passes the cheirality check");
  }

  RelativePoseMeasurement m;
  m.rotation = pose->rotation;
  m.direction = pose->direction.normalized();
  m.inliers = std::move(inliers);
  m.num_inliers = static_cast<int>(m.inliers.size());
  return m;
}

}  // namespace anchorloc
