#include "anchorloc/post_optimization.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>

#include <Eigen/Dense>

#include "anchorloc/error.h"
#include "anchorloc/levenberg_marquardt.h"
#include "anchorloc/translation_averaging.h"
#include "anchorloc/triangulation.h"
#include "anchorloc/two_view.h"

namespace anchorloc {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Edges sorted by decreasing inlier count, stable in input order.
std::vector<int> ByPriority(std::span<const PairEdge> edges) {
  std::vector<int> order(edges.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return edges[a].measurement.num_inliers > edges[b].measurement.num_inliers;
  });
  return order;
}

Eigen::Vector2d Project(const Posed& pose, const CameraIntrinsicsd& k,
                        const Eigen::Vector3d& x) {
  const Eigen::Vector3d c = pose.Transform(x);
  return k.Denormalize(Eigen::Vector2d(c.x() / c.z(), c.y() / c.z()));
}

struct View {
  ImageId image;
  Eigen::Vector2d pixel;
  bool database;
};

std::vector<View> TrackViews(const Track& track, bool database_only) {
  std::vector<View> views;
  for (const auto& o : track.database_observations) {
    views.push_back({o.image, o.pixel, true});
  }
  if (!database_only) {
    for (const auto& o : track.query_observations) {
      views.push_back({o.image, o.pixel, false});
    }
  }
  return views;
}

struct CheckResult {
  RejectReason reason = RejectReason::kNone;
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
};

CheckResult TriangulateViews(const std::vector<View>& views,
                             const CameraSet& cameras,
                             const std::map<ImageId, Posed>& frames,
                             const TriangulationOptions& options) {
  CheckResult result;
  if (views.size() < 2) {
    result.reason = RejectReason::kTooFewViews;
    return result;
  }
  std::vector<Posed> poses;
  std::vector<Eigen::Vector2d> normalized;
  for (const auto& v : views) {
    poses.push_back(cameras.ImagePose(v.image, frames));
    normalized.push_back(cameras.intrinsics.at(v.image).Normalize(v.pixel));
  }
  const Eigen::Vector4d h = TriangulateDlt(poses, normalized);
  if (std::abs(h(3)) <= 1e-12 * h.head<3>().norm()) {
    result.reason = RejectReason::kCheirality;
    return result;
  }
  result.point = h.head<3>() / h(3);

  double worst_error = -1.0;
  std::vector<Eigen::Vector3d> centers;
  for (size_t i = 0; i < views.size(); ++i) {
    centers.push_back(CameraCenter(poses[i]));
    const double depth = poses[i].Transform(result.point).z();
    if (depth <= 0.0) {
      result.reason = RejectReason::kCheirality;
      return result;
    }
    const double err =
        (Project(poses[i], cameras.intrinsics.at(views[i].image), result.point) -
         views[i].pixel)
            .norm();
    worst_error = std::max(worst_error, err);
  }
  if (worst_error > options.max_reproj_px) {
    result.reason = RejectReason::kReprojection;
    return result;
  }
  if (MaxTriangulationAngle(result.point, centers) <
      options.min_tri_angle_deg * kDegToRad) {
    result.reason = RejectReason::kAngle;
  }
  return result;
}

// Index of the view whose removal leaves the most consistent subset: the
// smallest worst reprojection error over the kept views.
int ViewToDrop(const std::vector<View>& views, const CameraSet& cameras,
                     const std::map<ImageId, Posed>& frames) {
  int best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  for (size_t skip = 0; skip < views.size(); ++skip) {
    std::vector<Posed> poses;
    std::vector<Eigen::Vector2d> normalized;
    std::vector<const View*> kept;
    for (size_t i = 0; i < views.size(); ++i) {
      if (i == skip) continue;
      poses.push_back(cameras.ImagePose(views[i].image, frames));
      normalized.push_back(cameras.intrinsics.at(views[i].image).Normalize(views[i].pixel));
      kept.push_back(&views[i]);
    }
    const Eigen::Vector4d h = TriangulateDlt(poses, normalized);
    if (!(std::abs(h(3)) > 1e-12 * h.head<3>().norm())) continue;
    const Eigen::Vector3d x = h.head<3>() / h(3);
    double score = 0.0;
    for (size_t i = 0; i < kept.size() && std::isfinite(score); ++i) {
      if (poses[i].Transform(x).z() <= 0.0) {
        score = std::numeric_limits<double>::infinity();
      } else {
        score = std::max(
            score, (Project(poses[i], cameras.intrinsics.at(kept[i]->image), x) -
                    kept[i]->pixel)
                       .norm());
      }
    }
    if (score < best_score) {
      best_score = score;
      best = static_cast<int>(skip);
    }
  }
  return best;
}

void RemoveView(Track* track, const View& view) {
  auto& list = view.database ? track->database_observations
                             : track->query_observations;
  list.erase(std::remove_if(list.begin(), list.end(),
                            [&](const Observation& o) { return o.image == view.image; }),
             list.end());
}

// One reprojection term of the joint problem.
struct Term {
  int track = -1;
  int point = -1;
  int frame = -1;  // -1 for database images
  Posed pose;      // full pose for database images, cam_from_frame otherwise
  Eigen::Matrix3d rotation;  // pose.rotation as a matrix
  const CameraIntrinsicsd* intrinsics = nullptr;
  Eigen::Vector2d pixel;
  double weight = 1.0;
  // Slot of the (point, frame) coupling block, -1 for database images.
  int block = -1;
};

struct FrameState {
  FrameState(const Rotation3d& r, const Eigen::Vector3d& c)
      : rotation(r), center(c), matrix(r.matrix()) {}
  Rotation3d rotation;
  Eigen::Vector3d center;
  Eigen::Matrix3d matrix;
};

// Point in the frame coordinates of the term's camera.
Eigen::Vector3d TermFramePoint(const Term& t, const std::vector<FrameState>& frames,
                               const Eigen::Vector3d& x) {
  if (t.frame < 0) return x;
  const FrameState& f = frames[t.frame];
  return f.matrix * (x - f.center);
}

Eigen::Vector2d TermResidual(const Term& t, const std::vector<FrameState>& frames,
                             const std::vector<Eigen::Vector3d>& points) {
  const Eigen::Vector3d c =
      t.rotation * TermFramePoint(t, frames, points[t.point]) + t.pose.translation;
  return t.intrinsics->Denormalize(Eigen::Vector2d(c.x() / c.z(), c.y() / c.z())) - t.pixel;
}

double HuberCost(double r, double k) {
  return r <= k ? r * r : 2.0 * k * r - k * k;
}

double TotalCost(const std::vector<Term>& terms,
                 const std::vector<FrameState>& frames,
                 const std::vector<Eigen::Vector3d>& points, double k) {
  double cost = 0.0;
  for (const Term& t : terms) {
    const Eigen::Vector2d e = TermResidual(t, frames, points);
    if (!e.allFinite()) return std::numeric_limits<double>::infinity();
    cost += t.weight * HuberCost(e.norm(), k);
  }
  return cost;
}

}  // namespace

std::string_view RejectReasonName(RejectReason reason) {
  switch (reason) {
    case RejectReason::kNone: return "none";
    case RejectReason::kTooFewViews: return "too_few_views";
    case RejectReason::kCheirality: return "cheirality";
    case RejectReason::kReprojection: return "reprojection";
    case RejectReason::kAngle: return "angle";
  }
  return "unknown";
}

ImageId CameraSet::FrameOf(ImageId image) const {
  const auto it = mounts.find(image);
  return it == mounts.end() ? image : it->second.frame;
}

Posed CameraSet::CamFromFrame(ImageId image) const {
  const auto it = mounts.find(image);
  return it == mounts.end() ? Posed() : it->second.cam_from_frame;
}

Posed CameraSet::ImagePose(ImageId image,
                           const std::map<ImageId, Posed>& frames) const {
  const auto db = database_poses.find(image);
  if (db != database_poses.end()) return db->second;
  return CamFromFrame(image) * frames.at(FrameOf(image));
}

std::vector<Track> BuildTracks(std::span<const PairEdge> edges,
                               const CameraSet& cameras) {
  using Node = std::pair<ImageId, int>;
  std::map<Node, int> node_index;
  std::vector<int> parent;
  std::vector<std::map<ImageId, Observation>> queries;
  std::vector<std::map<ImageId, Observation>> databases;

  auto pixel = [&](ImageId image, const Eigen::Vector2d& normalized) {
    return cameras.intrinsics.at(image).Denormalize(normalized);
  };
  auto node = [&](ImageId image, int keypoint, const Eigen::Vector2d& normalized) {
    const auto [it, inserted] =
        node_index.emplace(Node{image, keypoint}, static_cast<int>(parent.size()));
    if (inserted) {
      parent.push_back(it->second);
      queries.push_back({{image, {image, keypoint, pixel(image, normalized)}}});
      databases.emplace_back();
    }
    return it->second;
  };
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };

  const std::vector<int> order = ByPriority(edges);
  auto is_query_query = [&](const RelativePoseMeasurement& m) {
    return m.kind != EdgeKind::kRigFixed && !cameras.IsDatabase(m.source) &&
           !cameras.IsDatabase(m.target);
  };
  auto is_database_query = [&](const RelativePoseMeasurement& m) {
    return !cameras.IsDatabase(m.source) && cameras.IsDatabase(m.target);
  };

  // Query-query links first, so database observations attach to merged roots.
  for (const int e : order) {
    const auto& m = edges[e].measurement;
    if (!is_query_query(m)) continue;
    for (const int i : m.inliers) {
      const Correspondence& c = edges[e].correspondences[i];
      const int a = find(node(m.source, c.source_indices.first, c.p));
      const int b = find(node(m.target, c.source_indices.second, c.p_prime));
      if (a == b) continue;
      const bool overlap = std::any_of(
          queries[b].begin(), queries[b].end(),
          [&](const auto& kv) { return queries[a].count(kv.first) > 0; });
      if (overlap) continue;
      parent[b] = a;
      queries[a].insert(queries[b].begin(), queries[b].end());
      queries[b].clear();
    }
  }
  for (const int e : order) {
    const auto& m = edges[e].measurement;
    if (!is_database_query(m)) continue;
    for (const int i : m.inliers) {
      const Correspondence& c = edges[e].correspondences[i];
      const int r = find(node(m.source, c.source_indices.first, c.p));
      // Keep the first (highest-inlier) observation per database image.
      databases[r].emplace(
          m.target, Observation{m.target, c.source_indices.second,
                                pixel(m.target, c.p_prime)});
    }
  }

  std::vector<Track> tracks;
  for (const auto& [key, index] : node_index) {
    if (find(index) != index) continue;
    Track t;
    for (const auto& [id, o] : queries[index]) t.query_observations.push_back(o);
    for (const auto& [id, o] : databases[index]) t.database_observations.push_back(o);
    if (t.query_observations.size() + t.database_observations.size() < 2) continue;
    tracks.push_back(std::move(t));
  }
  return tracks;
}

double MaxTriangulationAngle(const Eigen::Vector3d& point,
                             std::span<const Eigen::Vector3d> centers) {
  // The widest pair has the smallest cosine; its angle is then taken with
  // atan2 for accuracy at small angles.
  std::vector<Eigen::Vector3d> rays;
  rays.reserve(centers.size());
  for (const auto& c : centers) rays.push_back((point - c).normalized());
  double min_cos = 2.0;
  int bi = -1;
  int bj = -1;
  for (size_t i = 0; i < rays.size(); ++i) {
    for (size_t j = i + 1; j < rays.size(); ++j) {
      const double cos = rays[i].dot(rays[j]);
      if (cos < min_cos) {
        min_cos = cos;
        bi = static_cast<int>(i);
        bj = static_cast<int>(j);
      }
    }
  }
  if (bi < 0) return 0.0;
  const Eigen::Vector3d a = point - centers[bi];
  const Eigen::Vector3d b = point - centers[bj];
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

Track TriangulateTrack(const Track& track, const CameraSet& cameras,
                       const std::map<ImageId, Posed>& frames,
                       const TriangulationOptions& options) {
  Track out = track;
  out.point.reset();
  for (int attempt = 0; attempt < 2; ++attempt) {
    const bool anchored = out.DatabaseAnchored();
    const std::vector<View> views = TrackViews(out, anchored);
    const CheckResult check = TriangulateViews(views, cameras, frames, options);
    if (check.reason == RejectReason::kNone) {
      out.point = check.point;
      out.status = TrackStatus::kTriangulated;
      out.reason = RejectReason::kNone;
      return out;
    }
    out.status = TrackStatus::kRejected;
    out.reason = check.reason;
    // Anchored tracks must keep two database views after a drop.
    const bool can_drop = views.size() > 2 &&
                          (check.reason == RejectReason::kReprojection ||
                           check.reason == RejectReason::kCheirality);
    if (attempt > 0 || !can_drop) break;
    RemoveView(&out, views[ViewToDrop(views, cameras, frames)]);
  }
  return out;
}

Eigen::Vector2d ReprojectionResidual(const Posed& cam_from_frame,
                                     const Rotation3d& frame_rotation,
                                     const Eigen::Vector3d& frame_center,
                                     const Eigen::Vector3d& point,
                                     const CameraIntrinsicsd& intrinsics,
                                     const Eigen::Vector2d& observed) {
  const Eigen::Vector3d y = frame_rotation * Eigen::Vector3d(point - frame_center);
  const Eigen::Vector3d c = cam_from_frame.Transform(y);
  return intrinsics.Denormalize(Eigen::Vector2d(c.x() / c.z(), c.y() / c.z())) -
         observed;
}

Eigen::Matrix<double, 2, 9> ReprojectionJacobian(
    const Posed& cam_from_frame, const Rotation3d& frame_rotation,
    const Eigen::Vector3d& frame_center, const Eigen::Vector3d& point,
    const CameraIntrinsicsd& intrinsics) {
  const Eigen::Matrix3d r = frame_rotation.matrix();
  const Eigen::Matrix3d a = cam_from_frame.rotation.matrix();
  const Eigen::Vector3d v = point - frame_center;
  const Eigen::Vector3d c = a * (r * v) + cam_from_frame.translation;
  Eigen::Matrix<double, 2, 3> dpix;
  const double iz = 1.0 / c.z();
  dpix << intrinsics.fx * iz, 0.0, -intrinsics.fx * c.x() * iz * iz,
      0.0, intrinsics.fy * iz, -intrinsics.fy * c.y() * iz * iz;
  const Eigen::Matrix<double, 2, 3> dy = dpix * a;
  Eigen::Matrix<double, 2, 9> jac;
  jac.block<2, 3>(0, 0) = -dy * r * CrossMatrix<double>(v);
  jac.block<2, 3>(0, 3) = -dy * r;
  jac.block<2, 3>(0, 6) = dy * r;
  return jac;
}

double JointRefineCost(const CameraSet& cameras,
                       const std::map<ImageId, Posed>& frames,
                       std::span<const Track> tracks,
                       const JointRefineOptions& options) {
  double cost = 0.0;
  for (const Track& t : tracks) {
    if (t.status != TrackStatus::kTriangulated || !t.point) continue;
    const double w = t.DatabaseAnchored() ? 1.0 : options.weak_track_weight;
    for (const auto* list : {&t.database_observations, &t.query_observations}) {
      for (const auto& o : *list) {
        const Eigen::Vector2d e =
            Project(cameras.ImagePose(o.image, frames), cameras.intrinsics.at(o.image),
                    *t.point) -
            o.pixel;
        cost += w * HuberCost(e.norm(), options.huber_px);
      }
    }
  }
  return cost;
}

JointRefineResult JointRefine(const CameraSet& cameras,
                              const std::map<ImageId, Posed>& frames,
                              std::vector<Track> tracks,
                              const JointRefineOptions& options) {
  JointRefineResult result;
  std::vector<ImageId> frame_ids;
  std::map<ImageId, int> frame_index;
  std::vector<FrameState> state;
  for (const auto& [id, pose] : frames) {
    frame_index[id] = static_cast<int>(frame_ids.size());
    frame_ids.push_back(id);
    state.emplace_back(pose.rotation, CameraCenter(pose));
  }
  const int m = static_cast<int>(frame_ids.size());
  const double k = options.huber_px;

  auto to_frames = [&] {
    std::map<ImageId, Posed> out;
    for (int i = 0; i < m; ++i) {
      out[frame_ids[i]] = Posed::FromCenter(state[i].rotation, state[i].center);
    }
    return out;
  };

  for (int round = 0; round <= options.max_recheck_rounds; ++round) {
    // Gather the active terms.
    std::vector<int> point_track;
    std::vector<Eigen::Vector3d> points;
    std::vector<Term> terms;
    for (size_t ti = 0; ti < tracks.size(); ++ti) {
      const Track& t = tracks[ti];
      if (t.status != TrackStatus::kTriangulated || !t.point) continue;
      const int p = static_cast<int>(points.size());
      points.push_back(*t.point);
      point_track.push_back(static_cast<int>(ti));
      const double w = t.DatabaseAnchored() ? 1.0 : options.weak_track_weight;
      for (const auto& o : t.database_observations) {
        const Posed& pose = cameras.database_poses.at(o.image);
        terms.push_back({static_cast<int>(ti), p, -1, pose, pose.rotation.matrix(),
                         &cameras.intrinsics.at(o.image), o.pixel, w});
      }
      for (const auto& o : t.query_observations) {
        const Posed pose = cameras.CamFromFrame(o.image);
        terms.push_back({static_cast<int>(ti), p, frame_index.at(cameras.FrameOf(o.image)),
                         pose, pose.rotation.matrix(), &cameras.intrinsics.at(o.image),
                         o.pixel, w});
      }
    }
    if (points.empty()) {
      throw Error(ErrorCode::kNoTracks, "no triangulated tracks to refine");
    }
    const int np = static_cast<int>(points.size());
    const int nc = 6 * m;
    // One coupling block per (point, frame) pair, grouped by point.
    std::vector<int> block_frame;
    std::vector<int> point_blocks(np + 1, 0);
    {
      std::map<std::pair<int, int>, int> slot;
      std::vector<std::vector<int>> frames_of(np);
      for (const Term& t : terms) {
        if (t.frame >= 0 && std::find(frames_of[t.point].begin(), frames_of[t.point].end(),
                                      t.frame) == frames_of[t.point].end()) {
          frames_of[t.point].push_back(t.frame);
        }
      }
      for (int p = 0; p < np; ++p) {
        point_blocks[p] = static_cast<int>(block_frame.size());
        for (const int f : frames_of[p]) {
          slot[{p, f}] = static_cast<int>(block_frame.size());
          block_frame.push_back(f);
        }
      }
      point_blocks[np] = static_cast<int>(block_frame.size());
      for (Term& t : terms) {
        if (t.frame >= 0) t.block = slot.at({t.point, t.frame});
      }
    }

    double cost = TotalCost(terms, state, points, k);
    result.cost_history.assign(1, cost);
    double lambda = 1e-4;
    result.converged = false;
    // Residuals at floating-point noise level (RMS 1e-10 px) need no steps.
    const double noise_floor = 1e-20 * static_cast<double>(terms.size());
    if (cost <= noise_floor) result.converged = true;
    for (int iter = 0; iter < options.max_iterations && !result.converged; ++iter) {
      ++result.iterations;
      // Normal equations with IRLS Huber weights at the current state.
      Eigen::MatrixXd hcc = Eigen::MatrixXd::Zero(nc, nc);
      Eigen::VectorXd gc = Eigen::VectorXd::Zero(nc);
      std::vector<Eigen::Matrix3d> hpp(np, Eigen::Matrix3d::Zero());
      std::vector<Eigen::Vector3d> gp(np, Eigen::Vector3d::Zero());
      std::vector<Eigen::Matrix<double, 6, 3>> hcp(block_frame.size(),
                                                   Eigen::Matrix<double, 6, 3>::Zero());
      for (const Term& t : terms) {
        const Eigen::Vector2d e = TermResidual(t, state, points);
        const double r = e.norm();
        const double w = t.weight * (r <= k ? 1.0 : k / r);
        const Eigen::Vector3d c =
            t.rotation * TermFramePoint(t, state, points[t.point]) + t.pose.translation;
        const double iz = 1.0 / c.z();
        Eigen::Matrix<double, 2, 3> dpix;
        dpix << t.intrinsics->fx * iz, 0.0, -t.intrinsics->fx * c.x() * iz * iz, 0.0,
            t.intrinsics->fy * iz, -t.intrinsics->fy * c.y() * iz * iz;
        Eigen::Matrix<double, 2, 3> jp = dpix * t.rotation;
        if (t.frame >= 0) {
          const FrameState& f = state[t.frame];
          jp = jp * f.matrix;
          Eigen::Matrix<double, 2, 6> jc;
          jc.leftCols<3>() = -jp * CrossMatrix<double>(points[t.point] - f.center);
          jc.rightCols<3>() = -jp;
          hcc.block<6, 6>(6 * t.frame, 6 * t.frame) += w * jc.transpose() * jc;
          gc.segment<6>(6 * t.frame) += w * jc.transpose() * e;
          hcp[t.block] += w * jc.transpose() * jp;
        }
        hpp[t.point] += w * jp.transpose() * jp;
        gp[t.point] += w * jp.transpose() * e;
      }

      bool accepted = false;
      bool stalled = false;
      while (lambda < 1e12) {
        Eigen::MatrixXd s = hcc;
        Eigen::VectorXd rhs = -gc;
        const double floor_c = 1e-12 * std::max(1.0, hcc.diagonal().cwiseAbs().maxCoeff());
        for (int i = 0; i < nc; ++i) s(i, i) += lambda * std::max(hcc(i, i), floor_c);
        std::vector<Eigen::Matrix3d> hpp_inv(np);
        for (int p = 0; p < np; ++p) {
          Eigen::Matrix3d d = hpp[p];
          const double floor_p = 1e-12 * std::max(1.0, d.diagonal().maxCoeff());
          for (int i = 0; i < 3; ++i) d(i, i) += lambda * std::max(d(i, i), floor_p);
          hpp_inv[p] = d.inverse();
          for (int a = point_blocks[p]; a < point_blocks[p + 1]; ++a) {
            const Eigen::Matrix<double, 6, 3> tmp = hcp[a] * hpp_inv[p];
            rhs.segment<6>(6 * block_frame[a]) += tmp * gp[p];
            for (int b = point_blocks[p]; b < point_blocks[p + 1]; ++b) {
              s.block<6, 6>(6 * block_frame[a], 6 * block_frame[b]) -=
                  tmp * hcp[b].transpose();
            }
          }
        }
        const Eigen::VectorXd dc = nc > 0 ? Eigen::VectorXd(s.ldlt().solve(rhs))
                                          : Eigen::VectorXd();
        std::vector<FrameState> cand_state = state;
        std::vector<Eigen::Vector3d> cand_points = points;
        double step_sq = dc.squaredNorm();
        for (int i = 0; i < m; ++i) {
          cand_state[i] = FrameState(state[i].rotation * ExpSO3<double>(dc.segment<3>(6 * i)),
                                     state[i].center + dc.segment<3>(6 * i + 3));
        }
        for (int p = 0; p < np; ++p) {
          Eigen::Vector3d b = -gp[p];
          for (int a = point_blocks[p]; a < point_blocks[p + 1]; ++a) {
            b -= hcp[a].transpose() * dc.segment<6>(6 * block_frame[a]);
          }
          const Eigen::Vector3d dp = hpp_inv[p] * b;
          cand_points[p] = points[p] + dp;
          step_sq += dp.squaredNorm();
        }
        const double cand_cost = TotalCost(terms, cand_state, cand_points, k);
        if (std::isfinite(cand_cost) && cand_cost < cost) {
          const double decrease = (cost - cand_cost) / cost;
          state = std::move(cand_state);
          points = std::move(cand_points);
          cost = cand_cost;
          result.cost_history.push_back(cost);
          lambda = std::max(lambda / 10.0, 1e-15);
          accepted = true;
          if (decrease < 1e-10 || std::sqrt(step_sq) < 1e-15) stalled = true;
          break;
        }
        if (std::sqrt(step_sq) < 1e-15) {
          stalled = true;
          break;
        }
        lambda *= 10.0;
      }
      if (!accepted || stalled || cost <= noise_floor) {
        result.converged = true;
        break;
      }
    }
    for (int p = 0; p < np; ++p) tracks[point_track[p]].point = points[p];

    // Re-check track invariants at the refined state.
    const std::map<ImageId, Posed> current = to_frames();
    bool violated = false;
    for (const int ti : point_track) {
      Track& t = tracks[ti];
      std::vector<Eigen::Vector3d> centers;
      RejectReason reason = RejectReason::kNone;
      for (const auto& v : TrackViews(t, false)) {
        const Posed pose = cameras.ImagePose(v.image, current);
        centers.push_back(CameraCenter(pose));
        if (pose.Transform(*t.point).z() <= 0.0) {
          reason = RejectReason::kCheirality;
        } else if ((Project(pose, cameras.intrinsics.at(v.image), *t.point) - v.pixel)
                       .norm() > options.checks.max_reproj_px) {
          if (reason == RejectReason::kNone) reason = RejectReason::kReprojection;
        }
      }
      if (reason == RejectReason::kNone &&
          MaxTriangulationAngle(*t.point, centers) <
              options.checks.min_tri_angle_deg * kDegToRad) {
        reason = RejectReason::kAngle;
      }
      if (reason != RejectReason::kNone) {
        t.status = TrackStatus::kRejected;
        t.reason = reason;
        violated = true;
      }
    }
    if (!violated) break;
    if (round == options.max_recheck_rounds) {
      // Out of rounds: keep the flags, the state reflects the last solve.
      break;
    }
  }

  result.frames = to_frames();
  result.track_residuals.assign(tracks.size(), std::numeric_limits<double>::quiet_NaN());
  for (size_t ti = 0; ti < tracks.size(); ++ti) {
    const Track& t = tracks[ti];
    if (t.status != TrackStatus::kTriangulated || !t.point) continue;
    double worst = 0.0;
    for (const auto& v : TrackViews(t, false)) {
      const double r =
          (Project(cameras.ImagePose(v.image, result.frames),
                   cameras.intrinsics.at(v.image), *t.point) -
           v.pixel)
              .norm();
      worst = std::max(worst, r);
      if (r <= k) {
        ++result.num_inlier_observations;
      } else {
        ++result.num_outlier_observations;
      }
    }
    result.track_residuals[ti] = worst;
  }
  result.tracks = std::move(tracks);
  return result;
}

std::optional<Eigen::Vector3d> CenterFromTracks(const CameraSet& cameras,
                                                ImageId frame,
                                                const Rotation3d& frame_rotation,
                                                std::span<const Track> tracks) {
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  Eigen::Vector3d g = Eigen::Vector3d::Zero();
  int used = 0;
  for (const Track& t : tracks) {
    if (t.status != TrackStatus::kTriangulated || !t.point || !t.DatabaseAnchored()) {
      continue;
    }
    for (const auto& o : t.query_observations) {
      if (cameras.IsDatabase(o.image) || cameras.FrameOf(o.image) != frame) continue;
      const Posed mount = cameras.CamFromFrame(o.image);
      const Rotation3d image_rotation = mount.rotation * frame_rotation;
      const Eigen::Vector3d bearing =
          (image_rotation.inverse() *
           cameras.intrinsics.at(o.image).Normalize(o.pixel).homogeneous().eval())
              .normalized();
      // C_image = C_frame + R_frame^T c_mount.
      const Eigen::Vector3d offset =
          frame_rotation.inverse() * CameraCenter(mount);
      const Eigen::Matrix3d p =
          Eigen::Matrix3d::Identity() - bearing * bearing.transpose();
      h += p;
      g += p * (*t.point - offset);
      ++used;
    }
  }
  if (used < 2) return std::nullopt;
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(h);
  if (!(eig.eigenvalues()(0) > 1e-10 * eig.eigenvalues()(2))) return std::nullopt;
  return Eigen::Vector3d(h.ldlt().solve(g));
}

SampsonRefineResult SampsonRefine(const CameraSet& cameras,
                                  const std::map<ImageId, Posed>& frames,
                                  std::span<const PairEdge> edges) {
  using State = std::vector<Posed>;
  std::vector<ImageId> frame_ids;
  State initial;
  for (const auto& [id, pose] : frames) {
    frame_ids.push_back(id);
    initial.push_back(pose);
  }
  auto as_map = [&](const State& s) {
    std::map<ImageId, Posed> out;
    for (size_t i = 0; i < s.size(); ++i) out[frame_ids[i]] = s[i];
    return out;
  };
  struct Term {
    ImageId source;
    ImageId target;
    const Correspondence* c;
  };
  std::vector<Term> terms;
  for (const PairEdge& edge : edges) {
    const auto& m = edge.measurement;
    if (m.kind == EdgeKind::kRigFixed) continue;
    if (cameras.IsDatabase(m.source) && cameras.IsDatabase(m.target)) continue;
    if (!cameras.IsDatabase(m.source) && !cameras.IsDatabase(m.target) &&
        cameras.FrameOf(m.source) == cameras.FrameOf(m.target)) {
      continue;
    }
    for (const int i : m.inliers) {
      terms.push_back({m.source, m.target, &edge.correspondences[i]});
    }
  }

  LeastSquaresProblem<State> ls;
  ls.num_parameters = 6 * static_cast<int>(initial.size());
  ls.residuals = [&](const State& s) {
    const auto map = as_map(s);
    Eigen::VectorXd r(terms.size());
    for (size_t i = 0; i < terms.size(); ++i) {
      const Posed rel = RelativePose(cameras.ImagePose(terms[i].source, map),
                                     cameras.ImagePose(terms[i].target, map));
      r(i) = SampsonResidual(EssentialFromPose(rel.rotation, rel.translation),
                             *terms[i].c);
    }
    return r;
  };
  ls.plus = [](const State& s, const Eigen::VectorXd& d) {
    State out = s;
    for (size_t i = 0; i < s.size(); ++i) {
      const Rotation3d r = s[i].rotation * ExpSO3<double>(d.segment<3>(6 * i));
      out[i] = Posed::FromCenter(r, CameraCenter(s[i]) + d.segment<3>(6 * i + 3));
    }
    return out;
  };
  if (terms.empty()) {
    throw Error(ErrorCode::kNoTracks, "no inlier correspondences to refine");
  }
  State state = initial;
  SampsonRefineResult result;
  const LmSummary summary = MinimizeLevenbergMarquardt(ls, &state);
  result.frames = as_map(state);
  result.converged = summary.converged;
  // Conditioning at the solution; the LM summary skips it on a zero cost.
  const Eigen::MatrixXd jac =
      NumericJacobian(ls, state, ls.residuals(state), LmOptions().numeric_step);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jac.transpose() * jac);
  const double max_ev = eig.eigenvalues().maxCoeff();
  result.rank_deficient =
      !(max_ev > 0.0) || eig.eigenvalues().minCoeff() < 1e-10 * max_ev;
  return result;
}

std::map<ImageId, Posed> LocalOptRefine(
    const CameraSet& cameras, std::span<const RelativePoseMeasurement> edges) {
  std::map<ImageId, std::vector<const RelativePoseMeasurement*>> by_query;
  for (const auto& e : edges) {
    if (cameras.IsDatabase(e.source) || !cameras.IsDatabase(e.target)) continue;
    if (cameras.mounts.count(e.source)) continue;
    by_query[e.source].push_back(&e);
  }
  std::map<ImageId, Posed> out;
  for (const auto& [query, list] : by_query) {
    Eigen::Vector4d sum = Eigen::Vector4d::Zero();
    Eigen::Vector4d first;
    std::vector<DirectionEdge> rays;
    std::map<ImageId, Eigen::Vector3d> centers;
    for (size_t i = 0; i < list.size(); ++i) {
      const Posed& db = cameras.database_poses.at(list[i]->target);
      const Rotation3d proposal = list[i]->rotation.inverse() * db.rotation;
      Eigen::Vector4d q = proposal.quaternion().coeffs();
      if (i == 0) first = q;
      if (q.dot(first) < 0.0) q = -q;
      sum += q;
      rays.push_back({query, list[i]->target,
                      db.rotation.inverse() * list[i]->direction, 1.0});
      centers[list[i]->target] = CameraCenter(db);
    }
    const Eigen::Quaterniond mean(Eigen::Vector4d(sum.normalized()));
    const TranslationProblem problem(centers, {query}, rays);
    const Eigen::Vector3d center = InitializeCentersMinimumNorm(problem).at(query);
    out[query] = Posed::FromCenter(Rotation3d(mean), center);
  }
  return out;
}

}  // namespace anchorloc
