#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "anchorloc/geometry.h"
#include "anchorloc/post_optimization.h"
#include "anchorloc/problem.h"
#include "anchorloc/rotation_averaging.h"
#include "anchorloc/translation_averaging.h"
#include "anchorloc/two_view.h"
#include "anchorloc/types.h"

namespace anchorloc {

enum class LocalizationMode { kIndependent, kColocalize, kRig };

// Solver variants of the ablation study. kFull is the default pipeline;
// kNoPostOpt stops after translation averaging; kSampson and kLocalOpt
// replace the track-based post optimization; kLud replaces the translation
// averaging objective and keeps the rest.
enum class SolverVariant { kFull, kNoPostOpt, kSampson, kLocalOpt, kLud };

std::string_view ModeName(LocalizationMode mode);
std::string_view VariantName(SolverVariant variant);
// Throw kInvalidArgument for unknown names.
LocalizationMode ParseMode(std::string_view name);
SolverVariant ParseVariant(std::string_view name);

struct LocalizerOptions {
  LocalizationMode mode = LocalizationMode::kIndependent;
  SolverVariant variant = SolverVariant::kFull;
  // Inlier threshold of two-view estimation, pixels (converted with the
  // mean focal length of the pair).
  double ransac_threshold_px = 4.0;
  RansacOptions ransac;
  RotationAveragingOptions rotation;
  // Edges whose relative rotation disagrees with the averaged rotations by
  // this angle or more are discarded before translation averaging.
  double gate_deg = 5.0;
  TranslationAveragingOptions translation;
  JointRefineOptions postopt;
  // Use at most this many retrieval pairs per query, in listed order
  // (0: all).
  int top_k = 0;
  int num_threads = 1;
};

struct QueryFlags {
  bool converged = false;
  bool scale_unobservable = false;
  bool degenerate_geometry = false;
  bool no_tracks = false;
  // No valid edge connects the query to the database.
  bool disconnected = false;

  // Flags that withhold the final pose.
  bool Fatal() const { return scale_unobservable || disconnected; }
  bool AnySoftFailure() const {
    return scale_unobservable || degenerate_geometry || no_tracks || disconnected;
  }
  bool operator==(const QueryFlags&) const = default;
};

struct EdgeRecord {
  ImageId source = 0;
  ImageId target = 0;
  EdgeKind kind = EdgeKind::kDatabaseQuery;
  int num_matches = 0;
  int num_inliers = 0;
  // Empty when the two-view estimate succeeded.
  std::string failure;
  // Discarded by the rotation-consistency gate.
  bool gated = false;
  // Residual angles (degrees) against the final rotations / centers; NaN
  // when not evaluated.
  double rotation_residual_deg = 0.0;
  double direction_residual_deg = 0.0;
};

struct TrackStats {
  int num_tracks = 0;
  int num_anchored = 0;
  int num_triangulated = 0;
  int num_rejected = 0;
  int num_inlier_observations = 0;
  int num_outlier_observations = 0;

  bool operator==(const TrackStats&) const = default;
};

struct QueryReport {
  ImageId id = 0;
  std::optional<Posed> pose;
  // Stage results: rotation after rotation averaging, pose after
  // translation averaging and after post optimization.
  std::optional<Rotation3d> rotation_stage;
  std::optional<Posed> translation_stage;
  std::optional<Posed> postopt_stage;
  // Indices into SolveReport::edges of the edges touching this query.
  std::vector<int> edges;
  TrackStats tracks;
  QueryFlags flags;
};

struct StageTimings {
  double two_view_ms = 0.0;
  double rotation_ms = 0.0;
  double translation_ms = 0.0;
  double postopt_ms = 0.0;
  double total_ms = 0.0;
};

struct SolveReport {
  // Ordered by query id.
  std::vector<QueryReport> queries;
  std::vector<EdgeRecord> edges;
  StageTimings timings;

  const QueryReport* Find(ImageId id) const;
  std::map<ImageId, Posed> FinalPoses() const;
};

struct QueryDiagnosis {
  int num_retrieval_pairs = 0;
  int num_query_query_pairs = 0;
  bool scale_unobservable = false;
  bool disconnected = false;
};

// Input-level diagnosis per query: fewer than 2 retrieval pairs flags the
// query as scale-unobservable unless query-query pairs connect it to a query
// with at least 2; no path to the database flags it disconnected.
std::map<ImageId, QueryDiagnosis> Validate(const LocalizationProblem& problem);

// Two-view estimates of every pair the solve will use, in problem order
// (retrieval pairs, then query-query pairs unless in rig mode). Failed
// estimates keep an empty inlier set and a failure message.
struct EstimatedEdges {
  std::vector<PairEdge> edges;
  std::vector<std::string> failures;
  double elapsed_ms = 0.0;
};

EstimatedEdges EstimateEdges(const LocalizationProblem& problem,
                             const LocalizerOptions& options, uint64_t seed);

// The edges of `all` that EstimateEdges would return for `options`. Each
// pair's RANSAC seed depends only on the run seed and the pair, so edges
// estimated once with top_k = 0 in colocalize mode serve every top_k and
// mode. Throws kInvalidArgument when a needed edge is missing.
EstimatedEdges SelectEdges(const LocalizationProblem& problem, const EstimatedEdges& all,
                           const LocalizerOptions& options);

// Averaging and post optimization on precomputed edges.
SolveReport SolveWithEdges(const LocalizationProblem& problem, const EstimatedEdges& edges,
                           const LocalizerOptions& options);

// Full pipeline. Throws only on malformed input; per-query failures are
// reported as flags.
SolveReport Localize(const LocalizationProblem& problem, const LocalizerOptions& options,
                     uint64_t seed);

}  // namespace anchorloc
