#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "anchorloc/geometry.h"
#include "anchorloc/types.h"

namespace anchorloc {

// Errors of one estimate against ground truth: camera-center distance in
// scene units and geodesic rotation angle in degrees.
struct PoseErrors {
  double position = 0.0;
  double rotation_deg = 0.0;

  bool operator==(const PoseErrors&) const = default;
};

PoseErrors ComputePoseErrors(const Posed& estimate, const Posed& truth);
double RotationErrorDeg(const Rotation3d& estimate, const Rotation3d& truth);

// Middle element of the sorted values, or the mean of the two middle ones;
// NaN for an empty input.
double Median(std::vector<double> values);

// Recall threshold; a query counts when both errors are within it.
struct RecallThreshold {
  double meters = 0.0;
  double degrees = 0.0;
};

// 0.25 m / 2 deg, 0.5 m / 5 deg and 5 m / 10 deg.
const std::vector<RecallThreshold>& DefaultRecallThresholds();

struct EvaluationOptions {
  // Scene units to meters; unset treats scene units as meters and omits
  // the centimeter figures.
  std::optional<double> meters_per_unit;
  std::vector<RecallThreshold> thresholds = DefaultRecallThresholds();
};

struct QueryEvaluation {
  ImageId id = 0;
  // Infinite for queries without an estimate.
  PoseErrors errors;
  bool localized = false;
};

struct EvaluationSummary {
  std::vector<QueryEvaluation> queries;  // ordered by id
  int num_localized = 0;
  double median_position = 0.0;  // scene units
  double median_rotation_deg = 0.0;
  std::optional<double> median_position_cm;
  // Percentages, one per threshold.
  std::vector<double> recalls;
  std::vector<RecallThreshold> thresholds;
};

// Every ground-truth query is evaluated; queries without an estimate count
// as failures. Throws kDanglingReference for estimates without ground truth.
EvaluationSummary Evaluate(const std::map<ImageId, std::optional<Posed>>& estimates,
                           const std::map<ImageId, Posed>& ground_truth,
                           const EvaluationOptions& options = {});

std::string FormatEvaluation(const EvaluationSummary& summary);

}  // namespace anchorloc
