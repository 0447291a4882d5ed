#include "anchorloc/pipeline.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>
#include <thread>

#include "anchorloc/error.h"
#include "anchorloc/random.h"

namespace anchorloc {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using Clock = std::chrono::steady_clock;

double MillisecondsSince(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Runs fn(i) for i in [0, n) on up to num_threads workers.
void ParallelFor(int n, int num_threads, const std::function<void(int)>& fn) {
  const int workers = std::clamp(num_threads, 1, std::max(1, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> threads;
  for (int w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (int i = next++; i < n; i = next++) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct UnionFind {
  std::map<ImageId, ImageId> parent;

  ImageId Find(ImageId x) {
    auto it = parent.find(x);
    if (it == parent.end()) return parent[x] = x;
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void Union(ImageId a, ImageId b) {
    a = Find(a);
    b = Find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

// Pairs the solve uses, in order: retrieval pairs (limited by top_k), then
// query-query pairs (not in rig mode).
std::vector<std::pair<ImagePair, EdgeKind>> SelectPairs(const LocalizationProblem& problem,
                                                        const LocalizerOptions& options) {
  std::vector<std::pair<ImagePair, EdgeKind>> out;
  std::map<ImageId, int> used;
  for (const ImagePair& p : problem.retrieval_pairs) {
    if (options.top_k > 0 && used[p.first] >= options.top_k) continue;
    ++used[p.first];
    out.push_back({p, EdgeKind::kDatabaseQuery});
  }
  if (options.mode != LocalizationMode::kRig) {
    for (const ImagePair& p : problem.query_query_pairs) {
      out.push_back({p, EdgeKind::kQueryQuery});
    }
  }
  return out;
}

// The unknown frame of each query and the mount of each rig member. A rig's
// frame is the camera of its smallest member.
std::map<ImageId, Mount> RigMounts(const LocalizationProblem& problem,
                                   const LocalizerOptions& options) {
  std::map<ImageId, Mount> mounts;
  if (options.mode != LocalizationMode::kRig) return mounts;
  std::map<ImageId, ImageId> reference;
  for (const auto& [q, member] : problem.rig) {
    auto it = reference.find(member.rig);
    if (it == reference.end() || q < it->second) reference[member.rig] = q;
  }
  for (const auto& [q, member] : problem.rig) {
    const ImageId frame = reference.at(member.rig);
    if (frame == q) continue;
    const Posed& base = problem.rig.at(frame).cam_from_rig;
    mounts[q] = Mount{frame, member.cam_from_rig * base.inverse()};
  }
  return mounts;
}

struct Component {
  std::vector<ImageId> images;  // sorted query ids
  std::vector<int> edges;       // indices into the estimated edges
};

std::vector<Component> MakeComponents(const LocalizationProblem& problem,
                                      const EstimatedEdges& estimated,
                                      const std::map<ImageId, Mount>& mounts,
                                      const LocalizerOptions& options) {
  UnionFind groups;
  for (const auto& [q, k] : problem.queries) groups.Find(q);
  for (const auto& [q, mount] : mounts) groups.Union(q, mount.frame);
  if (options.mode == LocalizationMode::kColocalize) {
    for (const PairEdge& e : estimated.edges) {
      const auto& m = e.measurement;
      if (m.kind == EdgeKind::kQueryQuery && !m.inliers.empty()) {
        groups.Union(m.source, m.target);
      }
    }
  }
  std::map<ImageId, Component> by_root;
  for (const auto& [q, k] : problem.queries) by_root[groups.Find(q)].images.push_back(q);
  for (size_t i = 0; i < estimated.edges.size(); ++i) {
    const auto& m = estimated.edges[i].measurement;
    const ImageId q = m.source;
    if (m.kind == EdgeKind::kQueryQuery && groups.Find(m.target) != groups.Find(q)) {
      continue;
    }
    by_root[groups.Find(q)].edges.push_back(static_cast<int>(i));
  }
  std::vector<Component> out;
  for (auto& [root, c] : by_root) out.push_back(std::move(c));
  return out;
}

struct ImageResult {
  std::optional<Rotation3d> rotation_stage;
  std::optional<Posed> translation_stage;
  std::optional<Posed> postopt_stage;
  std::optional<Posed> pose;
  TrackStats tracks;
  QueryFlags flags;
};

struct ComponentResult {
  std::map<ImageId, ImageResult> images;
  std::set<int> gated;
  StageTimings timings;
};

class ComponentSolver {
 public:
  ComponentSolver(const LocalizationProblem& problem, const EstimatedEdges& estimated,
                  const std::map<ImageId, Mount>& all_mounts,
                  const LocalizerOptions& options, const Component& component)
      : problem_(problem), estimated_(estimated), options_(options),
        component_(component) {
    for (const ImageId q : component.images) {
      const auto it = all_mounts.find(q);
      if (it != all_mounts.end()) mounts_[q] = it->second;
      result_.images[q];
    }
  }

  ComponentResult Solve() {
    SelectFrames();
    if (frames_.empty()) return Finish();

    auto start = Clock::now();
    if (!SolveRotationStage()) return Finish();
    result_.timings.rotation_ms = MillisecondsSince(start);

    start = Clock::now();
    const bool translated = SolveTranslationStage();
    result_.timings.translation_ms = MillisecondsSince(start);
    if (!translated) return Finish();

    start = Clock::now();
    SolvePostOptStage();
    result_.timings.postopt_ms = MillisecondsSince(start);
    return Finish();
  }

 private:
  ImageId FrameOf(ImageId image) const {
    const auto it = mounts_.find(image);
    return it == mounts_.end() ? image : it->second.frame;
  }
  Posed CamFromFrame(ImageId image) const {
    const auto it = mounts_.find(image);
    return it == mounts_.end() ? Posed() : it->second.cam_from_frame;
  }
  const RelativePoseMeasurement& Measurement(int e) const {
    return estimated_.edges[e].measurement;
  }
  std::vector<ImageId> ImagesOf(ImageId frame) const {
    std::vector<ImageId> out;
    for (const ImageId q : component_.images) {
      if (FrameOf(q) == frame) out.push_back(q);
    }
    return out;
  }
  template <typename Fn>
  void ForFrame(ImageId frame, Fn&& fn) {
    for (const ImageId q : ImagesOf(frame)) fn(result_.images[q]);
  }

  // Keeps valid edges and the frames connected to the database through them.
  void SelectFrames() {
    std::set<ImageId> candidates;
    for (const ImageId q : component_.images) candidates.insert(FrameOf(q));
    std::vector<int> usable;
    for (const int e : component_.edges) {
      const auto& m = Measurement(e);
      if (m.inliers.empty()) continue;
      if (m.kind == EdgeKind::kQueryQuery && FrameOf(m.source) == FrameOf(m.target)) continue;
      usable.push_back(e);
    }
    std::set<ImageId> reached;
    for (const int e : usable) {
      const auto& m = Measurement(e);
      if (problem_.IsDatabase(m.target)) reached.insert(FrameOf(m.source));
    }
    for (bool grew = true; grew;) {
      grew = false;
      for (const int e : usable) {
        const auto& m = Measurement(e);
        if (m.kind != EdgeKind::kQueryQuery) continue;
        const ImageId a = FrameOf(m.source);
        const ImageId b = FrameOf(m.target);
        if (reached.count(a) != reached.count(b)) {
          reached.insert(a);
          reached.insert(b);
          grew = true;
        }
      }
    }
    for (const ImageId f : candidates) {
      if (reached.count(f)) {
        frames_.push_back(f);
      } else {
        ForFrame(f, [](ImageResult& r) { r.flags.disconnected = true; });
      }
    }
    for (const int e : usable) {
      const auto& m = Measurement(e);
      if (reached.count(FrameOf(m.source)) &&
          (problem_.IsDatabase(m.target) || reached.count(FrameOf(m.target)))) {
        edges_.push_back(e);
      }
    }
  }

  Rotation3d ImageRotation(ImageId image) const {
    if (problem_.IsDatabase(image)) return problem_.database.at(image).pose.rotation;
    return CamFromFrame(image).rotation * rotations_.at(FrameOf(image));
  }

  bool SolveRotationStage() {
    std::map<ImageId, Rotation3d> fixed;
    std::vector<RelativePoseMeasurement> measurements;
    for (const int e : edges_) {
      const auto& m = Measurement(e);
      if (problem_.IsDatabase(m.target)) {
        fixed[m.target] = problem_.database.at(m.target).pose.rotation;
      }
      measurements.push_back(m);
    }
    const RotationProblem rotation_problem(fixed, frames_, measurements, mounts_);
    RotationAveragingSummary summary;
    rotations_ = SolveRotations(rotation_problem, InitializeRotations(rotation_problem),
                                options_.rotation, &summary);
    converged_ = summary.converged;
    for (const ImageId q : component_.images) {
      if (rotations_.count(FrameOf(q))) result_.images[q].rotation_stage = ImageRotation(q);
    }
    return true;
  }

  bool SolveTranslationStage() {
    // Rotation-consistency gate.
    std::vector<RelativePoseMeasurement> measurements;
    for (const int e : edges_) measurements.push_back(Measurement(e));
    std::map<ImageId, Rotation3d> all_rotations;
    for (const auto& m : measurements) {
      all_rotations[m.source] = ImageRotation(m.source);
      all_rotations[m.target] = ImageRotation(m.target);
    }
    std::vector<int> gated;
    try {
      for (const int i :
           GateEdges(measurements, all_rotations, options_.gate_deg * kDegToRad)) {
        gated.push_back(edges_[i]);
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kAllEdgesRejected) throw;
    }
    for (const int e : edges_) {
      if (std::find(gated.begin(), gated.end(), e) == gated.end()) result_.gated.insert(e);
    }

    // Direction refinement with the averaged rotations.
    std::vector<DirectionEdge> directions;
    for (const int e : gated) {
      const PairEdge& edge = estimated_.edges[e];
      const auto& m = edge.measurement;
      const Rotation3d rs = all_rotations.at(m.source);
      const Rotation3d rt = all_rotations.at(m.target);
      Eigen::Vector3d direction;
      try {
        direction = RefineRelativeTranslation(rt * rs.inverse(), m.direction,
                                              edge.InlierCorrespondences());
      } catch (const Error& err) {
        if (err.code() != ErrorCode::kInsufficientInliers) throw;
        continue;
      }
      directions.push_back(
          MakeDirectionEdge(m, rt, direction, options_.rotation.inlier_weight_cap));
      gated_edges_.push_back(e);
    }

    // Frames need two direction constraints; drop the others until stable.
    std::set<ImageId> live(frames_.begin(), frames_.end());
    for (bool changed = true; changed;) {
      changed = false;
      std::map<ImageId, int> counts;
      for (const auto& d : directions) {
        const bool s_ok = live.count(FrameOf(d.source)) > 0;
        const bool t_ok = problem_.IsDatabase(d.target) || live.count(FrameOf(d.target)) > 0;
        if (!s_ok || !t_ok) continue;
        ++counts[FrameOf(d.source)];
        if (!problem_.IsDatabase(d.target)) ++counts[FrameOf(d.target)];
      }
      for (auto it = live.begin(); it != live.end();) {
        if (counts[*it] < 2) {
          ForFrame(*it, [](ImageResult& r) { r.flags.scale_unobservable = true; });
          it = live.erase(it);
          changed = true;
        } else {
          ++it;
        }
      }
    }
    if (live.empty()) return false;

    std::vector<DirectionEdge> kept;
    std::vector<int> kept_ids;
    for (size_t i = 0; i < directions.size(); ++i) {
      const auto& d = directions[i];
      if (live.count(FrameOf(d.source)) &&
          (problem_.IsDatabase(d.target) || live.count(FrameOf(d.target)))) {
        kept.push_back(d);
        kept_ids.push_back(gated_edges_[i]);
      }
    }
    gated_edges_ = kept_ids;
    frames_.assign(live.begin(), live.end());

    std::map<ImageId, Eigen::Vector3d> fixed;
    std::map<ImageId, CenterMount> center_mounts;
    for (const auto& d : kept) {
      if (problem_.IsDatabase(d.target)) {
        fixed[d.target] = CameraCenter(problem_.database.at(d.target).pose);
      }
    }
    for (const auto& [q, mount] : mounts_) {
      if (!live.count(mount.frame)) continue;
      center_mounts[q] = CenterMount{
          mount.frame, rotations_.at(mount.frame).inverse() * CameraCenter(mount.cam_from_frame)};
    }
    const TranslationProblem translation_problem(fixed, frames_, kept, center_mounts);
    std::map<ImageId, Eigen::Vector3d> init;
    try {
      init = InitializeCenters(translation_problem);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateGeometry) throw;
      degenerate_ = true;
      init = InitializeCentersMinimumNorm(translation_problem);
      for (const ImageId f : frames_) {
        ForFrame(f, [](ImageResult& r) { r.flags.degenerate_geometry = true; });
      }
    }
    if (options_.variant == SolverVariant::kLud) {
      centers_ = SolveCentersLud(translation_problem, init, options_.translation.max_iterations,
                                 options_.translation.tolerance);
    } else {
      TranslationAveragingSummary summary;
      centers_ = SolveCenters(translation_problem, init, options_.translation, &summary);
      converged_ = converged_ && summary.converged;
    }
    for (const ImageId f : frames_) {
      frame_poses_[f] = Posed::FromCenter(rotations_.at(f), centers_.at(f));
    }
    for (const ImageId q : component_.images) {
      if (frame_poses_.count(FrameOf(q))) {
        result_.images[q].translation_stage = CamFromFrame(q) * frame_poses_.at(FrameOf(q));
      }
    }
    return true;
  }

  CameraSet Cameras() const {
    CameraSet cameras;
    for (const auto& [id, image] : problem_.database) {
      cameras.database_poses[id] = image.pose;
      cameras.intrinsics[id] = image.intrinsics;
    }
    for (const auto& [id, k] : problem_.queries) cameras.intrinsics[id] = k;
    cameras.mounts = mounts_;
    return cameras;
  }

  std::vector<PairEdge> GatedPairEdges() const {
    std::vector<PairEdge> out;
    for (const int e : gated_edges_) out.push_back(estimated_.edges[e]);
    return out;
  }

  void SolvePostOptStage() {
    const CameraSet cameras = Cameras();
    std::map<ImageId, Posed> refined = frame_poses_;
    switch (options_.variant) {
      case SolverVariant::kNoPostOpt:
        break;
      case SolverVariant::kSampson: {
        try {
          const SampsonRefineResult r =
              SampsonRefine(cameras, frame_poses_, GatedPairEdges());
          refined = r.frames;
          converged_ = converged_ && r.converged;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kNoTracks) throw;
          for (const ImageId f : frames_) {
            ForFrame(f, [](ImageResult& r) { r.flags.no_tracks = true; });
          }
        }
        break;
      }
      case SolverVariant::kLocalOpt: {
        std::vector<RelativePoseMeasurement> measurements;
        for (const int e : gated_edges_) measurements.push_back(Measurement(e));
        for (const auto& [f, pose] : LocalOptRefine(cameras, measurements)) {
          if (refined.count(f)) refined[f] = pose;
        }
        break;
      }
      case SolverVariant::kFull:
      case SolverVariant::kLud:
        refined = TrackRefine(cameras);
        break;
    }
    for (const ImageId q : component_.images) {
      const ImageId f = FrameOf(q);
      if (!refined.count(f)) continue;
      result_.images[q].postopt_stage = CamFromFrame(q) * refined.at(f);
    }
  }

  std::map<ImageId, Posed> TrackRefine(const CameraSet& cameras) {
    const std::vector<PairEdge> edges = GatedPairEdges();
    const std::vector<Track> built = BuildTracks(edges, cameras);
    std::map<ImageId, Posed> frames = frame_poses_;
    auto triangulate = [&] {
      std::vector<Track> out;
      out.reserve(built.size());
      for (const Track& t : built) {
        out.push_back(TriangulateTrack(t, cameras, frames, options_.postopt.checks));
      }
      return out;
    };
    std::vector<Track> tracks = triangulate();
    if (degenerate_) {
      // Anchored tracks do not depend on the query estimate and fix the
      // center along the degenerate direction.
      for (const ImageId f : frames_) {
        const auto center = CenterFromTracks(cameras, f, frames.at(f).rotation, tracks);
        if (center) frames[f] = Posed::FromCenter(frames.at(f).rotation, *center);
      }
      tracks = triangulate();
    }
    try {
      JointRefineResult r = JointRefine(cameras, frames, tracks, options_.postopt);
      converged_ = converged_ && r.converged;
      RecordTracks(r.tracks, r);
      return r.frames;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoTracks) throw;
      RecordTracks(tracks, std::nullopt);
      for (const ImageId f : frames_) {
        ForFrame(f, [](ImageResult& r) { r.flags.no_tracks = true; });
      }
      return frame_poses_;
    }
  }

  void RecordTracks(const std::vector<Track>& tracks,
                    const std::optional<JointRefineResult>& refine) {
    std::map<ImageId, Posed> frames = refine ? refine->frames : frame_poses_;
    const CameraSet cameras = Cameras();
    for (const Track& t : tracks) {
      for (const auto& o : t.query_observations) {
        if (!result_.images.count(o.image)) continue;
        TrackStats& s = result_.images[o.image].tracks;
        ++s.num_tracks;
        if (t.DatabaseAnchored()) ++s.num_anchored;
        if (t.status == TrackStatus::kTriangulated) ++s.num_triangulated;
        if (t.status == TrackStatus::kRejected) ++s.num_rejected;
        if (!refine || t.status != TrackStatus::kTriangulated || !t.point) continue;
        const Posed pose = cameras.ImagePose(o.image, frames);
        const Eigen::Vector2d e =
            ReprojectionResidual(Posed(), pose.rotation, CameraCenter(pose), *t.point,
                                 cameras.intrinsics.at(o.image), o.pixel);
        if (e.norm() <= options_.postopt.huber_px) {
          ++s.num_inlier_observations;
        } else {
          ++s.num_outlier_observations;
        }
      }
    }
  }

  ComponentResult Finish() {
    for (auto& [q, r] : result_.images) {
      r.flags.converged = converged_ && r.postopt_stage.has_value();
      if (!r.flags.Fatal()) {
        if (r.postopt_stage) {
          r.pose = r.postopt_stage;
        } else if (r.translation_stage) {
          r.pose = r.translation_stage;
        }
      }
    }
    return std::move(result_);
  }

  const LocalizationProblem& problem_;
  const EstimatedEdges& estimated_;
  const LocalizerOptions& options_;
  const Component& component_;
  std::map<ImageId, Mount> mounts_;

  std::vector<ImageId> frames_;
  std::vector<int> edges_;
  std::vector<int> gated_edges_;
  std::map<ImageId, Rotation3d> rotations_;
  std::map<ImageId, Eigen::Vector3d> centers_;
  std::map<ImageId, Posed> frame_poses_;
  bool degenerate_ = false;
  bool converged_ = false;
  ComponentResult result_;
};

}  // namespace

std::string_view ModeName(LocalizationMode mode) {
  switch (mode) {
    case LocalizationMode::kIndependent: return "independent";
    case LocalizationMode::kColocalize: return "colocalize";
    case LocalizationMode::kRig: return "rig";
  }
  return "unknown";
}

std::string_view VariantName(SolverVariant variant) {
  switch (variant) {
    case SolverVariant::kFull: return "full";
    case SolverVariant::kNoPostOpt: return "no_postopt";
    case SolverVariant::kSampson: return "sampson";
    case SolverVariant::kLocalOpt: return "local_opt";
    case SolverVariant::kLud: return "lud";
  }
  return "unknown";
}

LocalizationMode ParseMode(std::string_view name) {
  for (const auto mode : {LocalizationMode::kIndependent, LocalizationMode::kColocalize,
                          LocalizationMode::kRig}) {
    if (ModeName(mode) == name) return mode;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown mode '" + std::string(name) + "'");
}

SolverVariant ParseVariant(std::string_view name) {
  for (const auto v : {SolverVariant::kFull, SolverVariant::kNoPostOpt, SolverVariant::kSampson,
                       SolverVariant::kLocalOpt, SolverVariant::kLud}) {
    if (VariantName(v) == name) return v;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown solver '" + std::string(name) + "'");
}

const QueryReport* SolveReport::Find(ImageId id) const {
  for (const auto& q : queries) {
    if (q.id == id) return &q;
  }
  return nullptr;
}

std::map<ImageId, Posed> SolveReport::FinalPoses() const {
  std::map<ImageId, Posed> out;
  for (const auto& q : queries) {
    if (q.pose) out[q.id] = *q.pose;
  }
  return out;
}

std::map<ImageId, QueryDiagnosis> Validate(const LocalizationProblem& problem) {
  std::map<ImageId, QueryDiagnosis> out;
  UnionFind groups;
  for (const auto& [q, k] : problem.queries) {
    out[q];
    groups.Find(q);
  }
  for (const auto& [a, b] : problem.retrieval_pairs) {
    if (out.count(a)) ++out[a].num_retrieval_pairs;
  }
  for (const auto& [a, b] : problem.query_query_pairs) {
    if (!out.count(a) || !out.count(b)) continue;
    ++out[a].num_query_query_pairs;
    ++out[b].num_query_query_pairs;
    groups.Union(a, b);
  }
  std::map<ImageId, ImageId> rig_reference;
  for (const auto& [q, member] : problem.rig) {
    if (!out.count(q)) continue;
    const auto [it, inserted] = rig_reference.emplace(member.rig, q);
    if (!inserted) groups.Union(q, it->second);
  }
  std::map<ImageId, int> group_pairs;
  std::map<ImageId, bool> group_well_connected;
  std::map<ImageId, int> rig_pairs;
  for (const auto& [q, d] : out) {
    const ImageId g = groups.Find(q);
    group_pairs[g] += d.num_retrieval_pairs;
    if (d.num_retrieval_pairs >= 2) group_well_connected[g] = true;
    if (problem.rig.count(q)) rig_pairs[problem.rig.at(q).rig] += d.num_retrieval_pairs;
  }
  for (auto& [q, d] : out) {
    const ImageId g = groups.Find(q);
    d.disconnected = group_pairs[g] == 0;
    if (problem.rig.count(q)) {
      d.scale_unobservable = rig_pairs[problem.rig.at(q).rig] < 2;
    } else if (d.num_retrieval_pairs >= 2) {
      d.scale_unobservable = false;
    } else {
      d.scale_unobservable = d.num_retrieval_pairs + d.num_query_query_pairs < 2 ||
                             !group_well_connected[g];
    }
  }
  return out;
}

EstimatedEdges EstimateEdges(const LocalizationProblem& problem,
                             const LocalizerOptions& options, uint64_t seed) {
  CheckProblem(problem);
  const auto start = Clock::now();
  const auto pairs = SelectPairs(problem, options);
  EstimatedEdges out;
  out.edges.resize(pairs.size());
  out.failures.resize(pairs.size());
  ParallelFor(static_cast<int>(pairs.size()), options.num_threads, [&](int i) {
    const auto& [pair, kind] = pairs[i];
    const auto& [a, b] = pair;
    const CameraIntrinsicsd& ka = problem.Intrinsics(a);
    const CameraIntrinsicsd& kb = problem.Intrinsics(b);
    PairEdge& edge = out.edges[i];
    const auto it = problem.matches.find(pair);
    if (it != problem.matches.end()) {
      const auto& kpa = problem.keypoints.at(a);
      const auto& kpb = problem.keypoints.at(b);
      for (const KeypointMatch& m : it->second) {
        Correspondence c;
        c.p = ka.Normalize(kpa[m.first]);
        c.p_prime = kb.Normalize(kpb[m.second]);
        c.source_indices = {m.first, m.second};
        edge.correspondences.push_back(c);
      }
    }
    RansacOptions ransac = options.ransac;
    const double focal =
        0.25 * (ka.fx + ka.fy + kb.fx + kb.fy);
    ransac.threshold = options.ransac_threshold_px / focal;
    ransac.seed = Rng::Derive(seed, (static_cast<uint64_t>(a) << 32) | b).NextU64();
    try {
      edge.measurement = EstimateRelativePoseRansac(edge.correspondences, ransac);
    } catch (const Error& e) {
      edge.measurement = RelativePoseMeasurement();
      out.failures[i] = e.what();
    }
    edge.measurement.source = a;
    edge.measurement.target = b;
    edge.measurement.kind = kind;
  });
  out.elapsed_ms = MillisecondsSince(start);
  return out;
}

EstimatedEdges SelectEdges(const LocalizationProblem& problem, const EstimatedEdges& all,
                           const LocalizerOptions& options) {
  std::map<std::pair<ImagePair, EdgeKind>, size_t> index;
  for (size_t i = 0; i < all.edges.size(); ++i) {
    const auto& m = all.edges[i].measurement;
    index[{{m.source, m.target}, m.kind}] = i;
  }
  EstimatedEdges out;
  out.elapsed_ms = all.elapsed_ms;
  for (const auto& key : SelectPairs(problem, options)) {
    const auto it = index.find(key);
    if (it == index.end()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "no estimated edge " + std::to_string(key.first.first) + " -> " +
                      std::to_string(key.first.second));
    }
    out.edges.push_back(all.edges[it->second]);
    out.failures.push_back(all.failures[it->second]);
  }
  return out;
}

SolveReport SolveWithEdges(const LocalizationProblem& problem, const EstimatedEdges& estimated,
                           const LocalizerOptions& options) {
  const auto start = Clock::now();
  const std::map<ImageId, Mount> mounts = RigMounts(problem, options);
  const std::vector<Component> components =
      MakeComponents(problem, estimated, mounts, options);
  std::vector<ComponentResult> results(components.size());
  ParallelFor(static_cast<int>(components.size()), options.num_threads, [&](int i) {
    results[i] = ComponentSolver(problem, estimated, mounts, options, components[i]).Solve();
  });

  SolveReport report;
  std::set<int> gated;
  std::map<ImageId, ImageResult> images;
  for (const ComponentResult& r : results) {
    gated.insert(r.gated.begin(), r.gated.end());
    images.insert(r.images.begin(), r.images.end());
    report.timings.rotation_ms += r.timings.rotation_ms;
    report.timings.translation_ms += r.timings.translation_ms;
    report.timings.postopt_ms += r.timings.postopt_ms;
  }
  report.timings.two_view_ms = estimated.elapsed_ms;

  // Image rotations and centers for edge residuals.
  auto pose_of = [&](ImageId id) -> std::optional<Posed> {
    if (problem.IsDatabase(id)) return problem.database.at(id).pose;
    const auto it = images.find(id);
    if (it == images.end()) return std::nullopt;
    return it->second.pose;
  };
  for (size_t i = 0; i < estimated.edges.size(); ++i) {
    const PairEdge& edge = estimated.edges[i];
    const auto& m = edge.measurement;
    EdgeRecord rec;
    rec.source = m.source;
    rec.target = m.target;
    rec.kind = m.kind;
    rec.num_matches = static_cast<int>(edge.correspondences.size());
    rec.num_inliers = m.num_inliers;
    rec.failure = estimated.failures[i];
    rec.gated = gated.count(static_cast<int>(i)) > 0;
    rec.rotation_residual_deg = kNaN;
    rec.direction_residual_deg = kNaN;
    const auto ps = pose_of(m.source);
    const auto pt = pose_of(m.target);
    if (rec.failure.empty() && ps && pt) {
      const Posed rel = RelativePose(*ps, *pt);
      rec.rotation_residual_deg = GeodesicAngle(m.rotation, rel.rotation) * kRadToDeg;
      const Eigen::Vector3d baseline = CameraCenter(*ps) - CameraCenter(*pt);
      if (baseline.norm() > 1e-12) {
        rec.direction_residual_deg =
            DirectionAngle<double>(pt->rotation.inverse() * m.direction, baseline) * kRadToDeg;
      }
    }
    report.edges.push_back(rec);
  }
  for (auto& [q, r] : images) {
    QueryReport out;
    out.id = q;
    out.pose = r.pose;
    out.rotation_stage = r.rotation_stage;
    out.translation_stage = r.translation_stage;
    out.postopt_stage = r.postopt_stage;
    out.tracks = r.tracks;
    out.flags = r.flags;
    for (size_t i = 0; i < report.edges.size(); ++i) {
      if (report.edges[i].source == q || report.edges[i].target == q) {
        out.edges.push_back(static_cast<int>(i));
      }
    }
    report.queries.push_back(std::move(out));
  }
  report.timings.total_ms = estimated.elapsed_ms + MillisecondsSince(start);
  return report;
}

SolveReport Localize(const LocalizationProblem& problem, const LocalizerOptions& options,
                     uint64_t seed) {
  return SolveWithEdges(problem, EstimateEdges(problem, options, seed), options);
}

}  // namespace anchorloc
