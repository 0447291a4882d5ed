#include "anchorloc/evaluation.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "anchorloc/error.h"

namespace anchorloc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string Format(const char* fmt, double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, value);
  return buf;
}

}  // namespace

double RotationErrorDeg(const Rotation3d& estimate, const Rotation3d& truth) {
  return GeodesicAngle(estimate, truth) * 180.0 / std::numbers::pi;
}

PoseErrors ComputePoseErrors(const Posed& estimate, const Posed& truth) {
  PoseErrors e;
  e.position = (CameraCenter(estimate) - CameraCenter(truth)).norm();
  e.rotation_deg = RotationErrorDeg(estimate.rotation, truth.rotation);
  return e;
}

double Median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  const size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

const std::vector<RecallThreshold>& DefaultRecallThresholds() {
  static const std::vector<RecallThreshold> thresholds = {
      {0.25, 2.0}, {0.5, 5.0}, {5.0, 10.0}};
  return thresholds;
}

EvaluationSummary Evaluate(const std::map<ImageId, std::optional<Posed>>& estimates,
                           const std::map<ImageId, Posed>& ground_truth,
                           const EvaluationOptions& options) {
  for (const auto& [id, pose] : estimates) {
    if (!ground_truth.count(id)) {
      throw Error(ErrorCode::kDanglingReference,
                  "no ground truth for query " + std::to_string(id));
    }
  }
  if (options.meters_per_unit && !(*options.meters_per_unit > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "meters_per_unit must be positive");
  }
  const double meters_per_unit = options.meters_per_unit.value_or(1.0);

  EvaluationSummary summary;
  summary.thresholds = options.thresholds;
  std::vector<double> positions;
  std::vector<double> rotations;
  for (const auto& [id, truth] : ground_truth) {
    QueryEvaluation q;
    q.id = id;
    const auto it = estimates.find(id);
    if (it != estimates.end() && it->second) {
      q.errors = ComputePoseErrors(*it->second, truth);
      q.localized = true;
      ++summary.num_localized;
    } else {
      q.errors = {kInf, kInf};
    }
    positions.push_back(q.errors.position);
    rotations.push_back(q.errors.rotation_deg);
    summary.queries.push_back(q);
  }
  summary.median_position = Median(positions);
  summary.median_rotation_deg = Median(rotations);
  if (options.meters_per_unit) {
    summary.median_position_cm = summary.median_position * meters_per_unit * 100.0;
  }
  for (const RecallThreshold& t : options.thresholds) {
    int hits = 0;
    for (const QueryEvaluation& q : summary.queries) {
      if (q.errors.position * meters_per_unit <= t.meters && q.errors.rotation_deg <= t.degrees) {
        ++hits;
      }
    }
    summary.recalls.push_back(summary.queries.empty()
                                  ? 0.0
                                  : 100.0 * hits / static_cast<double>(summary.queries.size()));
  }
  return summary;
}

std::string FormatEvaluation(const EvaluationSummary& summary) {
  std::string out;
  out += "queries " + std::to_string(summary.queries.size()) + "\n";
  out += "localized " + std::to_string(summary.num_localized) + "\n";
  out += "median_position " + Format("%.6g", summary.median_position) + "\n";
  if (summary.median_position_cm) {
    out += "median_position_cm " + Format("%.6g", *summary.median_position_cm) + "\n";
  }
  out += "median_rotation_deg " + Format("%.6g", summary.median_rotation_deg) + "\n";
  for (size_t i = 0; i < summary.thresholds.size(); ++i) {
    out += "recall " + Format("%g", summary.thresholds[i].meters) + "m/" +
           Format("%g", summary.thresholds[i].degrees) + "deg " +
           Format("%.2f", summary.recalls[i]) + "%\n";
  }
  return out;
}

}  // namespace anchorloc
