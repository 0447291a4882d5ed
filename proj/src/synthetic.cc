#include "anchorloc/synthetic.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <tuple>

#include "anchorloc/error.h"
#include "anchorloc/random.h"

namespace anchorloc {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr int kMinVisible = 50;
constexpr int kMaxAttempts = 100;

// Phantom geometry of an edge outlier: the first camera is rotated about its
// center by an angle in this range and moved by a fraction of the radius.
constexpr double kOutlierMinAngleDeg = 20.0;
constexpr double kOutlierMaxAngleDeg = 60.0;
constexpr double kOutlierShift = 0.25;

struct Layout {
  Eigen::Vector3d center;
  Eigen::Vector3d axis;    // line direction / first grid axis
  Eigen::Vector3d axis2;   // second grid axis
  Eigen::Vector3d normal;  // offset direction of line and grid
  int grid_columns = 1;
  int grid_rows = 1;
};

Layout MakeLayout(const SceneSpec& spec) {
  Layout layout;
  layout.center = 0.5 * (spec.box_min + spec.box_max);
  layout.axis = spec.line_direction.normalized();
  const Eigen::Matrix<double, 3, 2> basis = TangentBasis<double>(layout.axis);
  layout.normal = basis.col(0);
  layout.axis2 = basis.col(1);
  layout.grid_columns =
      static_cast<int>(std::ceil(std::sqrt(static_cast<double>(spec.n_database))));
  layout.grid_rows = (spec.n_database + layout.grid_columns - 1) / layout.grid_columns;
  return layout;
}

Eigen::Vector3d DatabaseCenter(const SceneSpec& spec, const Layout& layout, int index,
                               Rng& rng) {
  switch (spec.camera_layout) {
    case CameraLayout::kSphere:
      return layout.center + spec.radius * rng.UnitVector();
    case CameraLayout::kLine: {
      const double s = (index - 0.5 * (spec.n_database - 1)) * spec.spacing;
      return layout.center + spec.radius * layout.normal + s * layout.axis;
    }
    case CameraLayout::kGrid: {
      const double u = (index % layout.grid_columns - 0.5 * (layout.grid_columns - 1));
      const double v = (index / layout.grid_columns - 0.5 * (layout.grid_rows - 1));
      return layout.center + spec.radius * layout.normal +
             spec.spacing * (u * layout.axis + v * layout.axis2);
    }
  }
  return layout.center;
}

Eigen::Vector3d FragmentStart(const SceneSpec& spec, const Layout& layout, Rng& rng) {
  switch (spec.camera_layout) {
    case CameraLayout::kSphere:
      return layout.center + spec.radius * rng.UnitVector();
    case CameraLayout::kLine: {
      const double half = 0.5 * (spec.n_database - 1) * spec.spacing;
      return layout.center + spec.radius * layout.normal +
             rng.Uniform(-half, half) * layout.axis;
    }
    case CameraLayout::kGrid: {
      const double hu = 0.5 * (layout.grid_columns - 1) * spec.spacing;
      const double hv = 0.5 * (layout.grid_rows - 1) * spec.spacing;
      return layout.center + spec.radius * layout.normal +
             rng.Uniform(-hu, hu) * layout.axis + rng.Uniform(-hv, hv) * layout.axis2;
    }
  }
  return layout.center;
}

Eigen::Vector3d FragmentNext(const SceneSpec& spec, const Layout& layout,
                             const Eigen::Vector3d& previous, Rng& rng) {
  switch (spec.camera_layout) {
    case CameraLayout::kSphere: {
      const Eigen::Vector3d radial = (previous - layout.center).normalized();
      const Eigen::Matrix<double, 3, 2> tangent = TangentBasis<double>(radial);
      const double a = rng.Uniform(0.0, 2.0 * std::numbers::pi);
      const Eigen::Vector3d moved =
          previous + spec.fragment_step *
                         (std::cos(a) * tangent.col(0) + std::sin(a) * tangent.col(1));
      return layout.center + spec.radius * (moved - layout.center).normalized();
    }
    case CameraLayout::kLine:
      return previous + spec.fragment_step * layout.axis;
    case CameraLayout::kGrid: {
      const double a = rng.Uniform(0.0, 2.0 * std::numbers::pi);
      return previous + spec.fragment_step *
                            (std::cos(a) * layout.axis + std::sin(a) * layout.axis2);
    }
  }
  return previous;
}

Eigen::Vector3d Jitter(const SceneSpec& spec, Rng& rng) {
  return spec.look_jitter * Eigen::Vector3d(rng.Uniform(-1, 1), rng.Uniform(-1, 1),
                                            rng.Uniform(-1, 1));
}

bool Project(const SceneSpec& spec, const Posed& pose, const Eigen::Vector3d& x,
             Eigen::Vector2d* pixel) {
  const Eigen::Vector3d c = pose.Transform(x);
  if (c.z() < 1e-3) return false;
  *pixel = spec.intrinsics.Denormalize(c.hnormalized());
  return pixel->x() >= 0.0 && pixel->y() >= 0.0 && pixel->x() < spec.image_width &&
         pixel->y() < spec.image_height;
}

std::vector<int> VisiblePoints(const SceneSpec& spec, const Posed& pose,
                               const std::vector<Eigen::Vector3d>& points) {
  std::vector<int> visible;
  Eigen::Vector2d pixel;
  for (size_t i = 0; i < points.size(); ++i) {
    if (Project(spec, pose, points[i], &pixel)) visible.push_back(static_cast<int>(i));
  }
  return visible;
}

// Orients a camera at `center` towards the jittered box center; false when
// it sees too few points.
bool Orient(const SceneSpec& spec, const Layout& layout, const Eigen::Vector3d& center,
            const std::vector<Eigen::Vector3d>& points, Rng& rng, Posed* pose) {
  *pose = LookAt(center, layout.center + Jitter(spec, rng));
  return static_cast<int>(VisiblePoints(spec, *pose, points).size()) >= kMinVisible;
}

[[noreturn]] void Infeasible(const std::string& what) {
  throw Error(ErrorCode::kInfeasibleSpec,
              what + " sees fewer than 50 points after 100 attempts");
}

// Keypoint tables: the visible points in random order with pixel noise.
void AddKeypoints(const SceneSpec& spec, ImageId id, const Posed& pose,
                  SyntheticScene* scene, Rng& rng) {
  std::vector<int> visible = VisiblePoints(spec, pose, scene->points);
  for (size_t i = visible.size(); i > 1; --i) {
    std::swap(visible[i - 1], visible[rng.UniformIndex(i)]);
  }
  auto& pixels = scene->keypoints[id];
  auto& owners = scene->keypoint_points[id];
  for (const int p : visible) {
    Eigen::Vector2d pixel = spec.intrinsics.Denormalize(
        pose.Transform(scene->points[p]).hnormalized());
    if (spec.pixel_noise_sigma > 0.0) {
      pixel += spec.pixel_noise_sigma * Eigen::Vector2d(rng.Normal(), rng.Normal());
    }
    pixels.push_back(pixel);
    owners.push_back(p);
  }
}

SyntheticPair MakePair(const SceneSpec& spec, ImageId first, ImageId second,
                       const Posed& first_pose, SyntheticScene* scene, Rng& rng) {
  SyntheticPair pair;
  pair.first = first;
  pair.second = second;
  std::map<int, int> in_second;
  const auto& owners_second = scene->keypoint_points.at(second);
  for (size_t k = 0; k < owners_second.size(); ++k) {
    if (owners_second[k] >= 0) in_second[owners_second[k]] = static_cast<int>(k);
  }
  std::vector<std::pair<int, int>> common;  // (point, keypoint in first)
  const auto& owners_first = scene->keypoint_points.at(first);
  for (size_t k = 0; k < owners_first.size(); ++k) {
    if (owners_first[k] >= 0 && in_second.count(owners_first[k])) {
      common.emplace_back(owners_first[k], static_cast<int>(k));
    }
  }
  std::sort(common.begin(), common.end());
  pair.covisible = static_cast<int>(common.size());
  if (common.empty()) return pair;

  pair.edge_outlier = rng.Uniform() < spec.edge_outlier_rate;
  if (pair.edge_outlier) {
    // Matches consistent with a wrong pose of the first camera, realized as
    // phantom keypoints appended to its table.
    const Rotation3d turn = rng.RotationWithAngle(
        rng.Uniform(kOutlierMinAngleDeg, kOutlierMaxAngleDeg) * kDegToRad);
    const Eigen::Vector3d shift = kOutlierShift * spec.radius * rng.UnitVector();
    const Posed fake = Posed::FromCenter(turn * first_pose.rotation,
                                         CameraCenter(first_pose) + shift);
    auto& pixels = scene->keypoints[first];
    auto& owners = scene->keypoint_points[first];
    for (const auto& [point, kp_first] : common) {
      const Eigen::Vector3d c = fake.Transform(scene->points[point]);
      if (c.z() < 1e-3) continue;
      Eigen::Vector2d pixel = spec.intrinsics.Denormalize(c.hnormalized());
      if (spec.pixel_noise_sigma > 0.0) {
        pixel += spec.pixel_noise_sigma * Eigen::Vector2d(rng.Normal(), rng.Normal());
      }
      pair.matches.push_back({static_cast<int>(pixels.size()), in_second.at(point)});
      pair.inlier.push_back(false);
      pixels.push_back(pixel);
      owners.push_back(-1);
    }
    return pair;
  }
  const int n_first = static_cast<int>(scene->keypoints.at(first).size());
  const int n_second = static_cast<int>(scene->keypoints.at(second).size());
  for (const auto& [point, kp_first] : common) {
    if (rng.Uniform() < spec.match_outlier_rate) {
      const int a = static_cast<int>(rng.UniformIndex(n_first));
      const int b = static_cast<int>(rng.UniformIndex(n_second));
      pair.matches.push_back({a, b});
      pair.inlier.push_back(owners_first[a] >= 0 &&
                            owners_first[a] == owners_second[b]);
    } else {
      pair.matches.push_back({kp_first, in_second.at(point)});
      pair.inlier.push_back(true);
    }
  }
  return pair;
}

}  // namespace

Posed LookAt(const Eigen::Vector3d& center, const Eigen::Vector3d& target) {
  const Eigen::Vector3d z = (target - center).normalized();
  Eigen::Vector3d up = Eigen::Vector3d::UnitZ();
  if (std::abs(z.dot(up)) > 0.9) up = Eigen::Vector3d::UnitY();
  const Eigen::Vector3d x = up.cross(z).normalized();
  const Eigen::Vector3d y = z.cross(x);
  Eigen::Matrix3d r;
  r.row(0) = x;
  r.row(1) = y;
  r.row(2) = z;
  return Posed::FromCenter(Rotation3d::FromMatrix(r), center);
}

void CheckSpec(const SceneSpec& spec) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::kInvalidArgument, what);
  };
  require(spec.n_database >= 2, "n_database must be at least 2");
  require(spec.n_points >= 1, "n_points must be positive");
  require(spec.n_queries >= 0, "n_queries must be non-negative");
  require(spec.fragment_length >= 1, "fragment_length must be positive");
  require(spec.fragment_step >= 0.0, "fragment_step must be non-negative");
  require(spec.radius > 0.0, "radius must be positive");
  require(spec.spacing > 0.0, "spacing must be positive");
  require(spec.line_direction.norm() > 0.0, "line_direction must be non-zero");
  require((spec.box_max.array() > spec.box_min.array()).all(),
          "box_max must exceed box_min");
  require(spec.look_jitter >= 0.0, "look_jitter must be non-negative");
  require(spec.image_width > 0 && spec.image_height > 0, "image size must be positive");
  require(spec.pixel_noise_sigma >= 0.0, "pixel_noise_sigma must be non-negative");
  require(spec.match_outlier_rate >= 0.0 && spec.match_outlier_rate < 1.0,
          "match_outlier_rate must be in [0, 1)");
  require(spec.edge_outlier_rate >= 0.0 && spec.edge_outlier_rate < 1.0,
          "edge_outlier_rate must be in [0, 1)");
}

double SyntheticScene::Diameter() const {
  std::vector<Eigen::Vector3d> all = points;
  for (const auto& [id, pose] : database_truth) all.push_back(CameraCenter(pose));
  for (const auto& [id, pose] : queries) all.push_back(CameraCenter(pose));
  double best = 0.0;
  for (size_t i = 0; i < all.size(); ++i) {
    for (size_t j = i + 1; j < all.size(); ++j) {
      best = std::max(best, (all[i] - all[j]).squaredNorm());
    }
  }
  return std::sqrt(best);
}

SyntheticScene GenerateScene(const SceneSpec& spec) {
  CheckSpec(spec);
  SyntheticScene scene;
  scene.spec = spec;
  Rng rng(spec.seed);
  const Layout layout = MakeLayout(spec);

  for (int i = 0; i < spec.n_points; ++i) {
    scene.points.emplace_back(rng.Uniform(spec.box_min.x(), spec.box_max.x()),
                              rng.Uniform(spec.box_min.y(), spec.box_max.y()),
                              rng.Uniform(spec.box_min.z(), spec.box_max.z()));
  }
  for (int i = 0; i < spec.n_database; ++i) {
    const ImageId id = static_cast<ImageId>(i + 1);
    Posed pose;
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      placed = Orient(spec, layout, DatabaseCenter(spec, layout, i, rng), scene.points,
                      rng, &pose);
    }
    if (!placed) Infeasible("database camera " + std::to_string(id));
    scene.database[id] = scene.database_truth[id] = pose;
  }

  ImageId next_id = static_cast<ImageId>(spec.n_database + 1);
  int remaining = spec.n_queries;
  while (remaining > 0) {
    const int length = std::min(remaining, spec.fragment_length);
    std::vector<ImageId> fragment;
    std::vector<Posed> poses;
    for (int attempt = 0; attempt < kMaxAttempts && static_cast<int>(poses.size()) < length;
         ++attempt) {
      poses.clear();
      Eigen::Vector3d center = FragmentStart(spec, layout, rng);
      for (int k = 0; k < length; ++k) {
        if (k > 0) center = FragmentNext(spec, layout, center, rng);
        Posed pose;
        if (!Orient(spec, layout, center, scene.points, rng, &pose)) break;
        poses.push_back(pose);
      }
    }
    if (static_cast<int>(poses.size()) < length) {
      Infeasible("query camera " + std::to_string(next_id));
    }
    for (const Posed& pose : poses) {
      scene.queries[next_id] = pose;
      fragment.push_back(next_id++);
    }
    scene.fragments.push_back(fragment);
    remaining -= length;
  }

  for (const auto& [id, pose] : scene.database_truth) {
    AddKeypoints(spec, id, pose, &scene, rng);
  }
  for (const auto& [id, pose] : scene.queries) AddKeypoints(spec, id, pose, &scene, rng);

  for (const auto& [q, pose] : scene.queries) {
    for (const auto& [d, db_pose] : scene.database_truth) {
      SyntheticPair pair = MakePair(spec, q, d, pose, &scene, rng);
      if (pair.covisible > 0) scene.pairs.push_back(std::move(pair));
    }
  }
  for (const auto& fragment : scene.fragments) {
    for (size_t i = 0; i < fragment.size(); ++i) {
      for (size_t j = i + 1; j < fragment.size(); ++j) {
        SyntheticPair pair = MakePair(spec, fragment[i], fragment[j],
                                      scene.queries.at(fragment[i]), &scene, rng);
        if (pair.covisible > 0) scene.pairs.push_back(std::move(pair));
      }
    }
  }
  return scene;
}

SyntheticScene CorruptDatabase(const SyntheticScene& scene, double rotation_noise_deg,
                               double translation_noise, uint64_t seed) {
  SyntheticScene out = scene;
  Rng rng(seed);
  for (auto& [id, pose] : out.database) {
    // Both draws happen at every level so noise directions match across levels.
    const Eigen::Vector3d axis = rng.UnitVector();
    const Eigen::Vector3d direction = rng.UnitVector();
    if (rotation_noise_deg == 0.0 && translation_noise == 0.0) continue;
    const Rotation3d turn =
        Rotation3d::FromAngleAxis(rotation_noise_deg * kDegToRad, axis);
    pose = Posed::FromCenter(turn * pose.rotation,
                             CameraCenter(pose) + translation_noise * direction);
  }
  return out;
}

LocalizationProblem MakeProblem(const SyntheticScene& scene, const ProblemOptions& options) {
  if (options.top_k < 1) throw Error(ErrorCode::kInvalidArgument, "top_k must be positive");
  LocalizationProblem problem;
  for (const auto& [id, pose] : scene.database) {
    problem.database[id] = {pose, scene.spec.intrinsics};
  }
  for (const auto& [id, pose] : scene.queries) {
    problem.queries[id] = scene.spec.intrinsics;
  }

  std::set<ImageId> used;
  std::map<ImageId, std::vector<const SyntheticPair*>> candidates;
  for (const SyntheticPair& pair : scene.pairs) {
    if (scene.database.count(pair.second)) candidates[pair.first].push_back(&pair);
  }
  for (auto& [q, list] : candidates) {
    const Eigen::Vector3d cq = CameraCenter(scene.queries.at(q));
    auto key = [&](const SyntheticPair* p) {
      const double distance =
          (CameraCenter(scene.database_truth.at(p->second)) - cq).norm();
      return std::make_tuple(-p->covisible, distance, p->second);
    };
    std::stable_sort(list.begin(), list.end(),
                     [&](const auto* a, const auto* b) { return key(a) < key(b); });
    const int k = std::min(options.top_k, static_cast<int>(list.size()));
    for (int i = 0; i < k; ++i) {
      problem.retrieval_pairs.emplace_back(q, list[i]->second);
      problem.matches[{q, list[i]->second}] = list[i]->matches;
      used.insert(list[i]->second);
    }
  }
  if (options.query_query_pairs) {
    for (const SyntheticPair& pair : scene.pairs) {
      if (!scene.queries.count(pair.second)) continue;
      problem.query_query_pairs.emplace_back(pair.first, pair.second);
      problem.matches[{pair.first, pair.second}] = pair.matches;
    }
  }
  if (options.rig) {
    for (const auto& fragment : scene.fragments) {
      const Posed& base = scene.queries.at(fragment.front());
      for (const ImageId q : fragment) {
        const Posed member =
            q == fragment.front() ? Posed() : scene.queries.at(q) * base.inverse();
        problem.rig[q] = {fragment.front(), member};
      }
    }
  }
  for (const auto& [id, pose] : scene.queries) {
    problem.keypoints[id] = scene.keypoints.at(id);
  }
  for (const ImageId id : used) problem.keypoints[id] = scene.keypoints.at(id);
  return problem;
}

std::map<ImageId, Posed> QueryTruth(const SyntheticScene& scene) { return scene.queries; }

}  // namespace anchorloc
