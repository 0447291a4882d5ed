#include "anchorloc/problem.h"

#include <string>

#include "anchorloc/error.h"

namespace anchorloc {
namespace {

[[noreturn]] void Dangling(ImageId id, const std::string& where) {
  throw Error(ErrorCode::kDanglingReference,
              where + " references unknown image " + std::to_string(id));
}

[[noreturn]] void Invalid(const std::string& what) {
  throw Error(ErrorCode::kInvalidArgument, what);
}

}  // namespace

const CameraIntrinsicsd& LocalizationProblem::Intrinsics(ImageId id) const {
  const auto db = database.find(id);
  if (db != database.end()) return db->second.intrinsics;
  const auto q = queries.find(id);
  if (q != queries.end()) return q->second;
  Dangling(id, "intrinsics lookup");
}

void CheckProblem(const LocalizationProblem& problem) {
  auto known = [&](ImageId id) { return problem.IsDatabase(id) || problem.IsQuery(id); };
  for (const auto& [id, k] : problem.queries) {
    if (problem.IsDatabase(id)) {
      Invalid("image " + std::to_string(id) + " is both database and query");
    }
  }
  for (const auto& [q, d] : problem.retrieval_pairs) {
    if (!known(q)) Dangling(q, "retrieval pair");
    if (!known(d)) Dangling(d, "retrieval pair");
    if (!problem.IsQuery(q) || !problem.IsDatabase(d)) {
      Invalid("retrieval pair (" + std::to_string(q) + ", " + std::to_string(d) +
              ") must be (query, database)");
    }
  }
  for (const auto& [a, b] : problem.query_query_pairs) {
    if (!known(a)) Dangling(a, "query-query pair");
    if (!known(b)) Dangling(b, "query-query pair");
    if (!problem.IsQuery(a) || !problem.IsQuery(b) || a == b) {
      Invalid("query-query pair (" + std::to_string(a) + ", " + std::to_string(b) +
              ") must join two distinct queries");
    }
  }
  for (const auto& [q, member] : problem.rig) {
    if (!known(q)) Dangling(q, "rig");
    if (!problem.IsQuery(q)) Invalid("rig member " + std::to_string(q) + " is not a query");
  }
  for (const auto& [id, kps] : problem.keypoints) {
    if (!known(id)) Dangling(id, "keypoint table");
  }
  for (const auto& [pair, list] : problem.matches) {
    const auto& [a, b] = pair;
    if (!known(a)) Dangling(a, "matches");
    if (!known(b)) Dangling(b, "matches");
    const auto ka = problem.keypoints.find(a);
    const auto kb = problem.keypoints.find(b);
    const int na = ka == problem.keypoints.end() ? 0 : static_cast<int>(ka->second.size());
    const int nb = kb == problem.keypoints.end() ? 0 : static_cast<int>(kb->second.size());
    for (const KeypointMatch& m : list) {
      if (m.first < 0 || m.first >= na || m.second < 0 || m.second >= nb) {
        Invalid("match (" + std::to_string(m.first) + ", " + std::to_string(m.second) +
                ") out of range for pair " + std::to_string(a) + "__" + std::to_string(b));
      }
    }
  }
}

}  // namespace anchorloc
