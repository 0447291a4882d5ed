#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "anchorloc/pipeline.h"
#include "anchorloc/synthetic.h"

namespace anchorloc {

// A synthetic bundle description: scene, simulated retrieval and database
// corruption. Spec files are flat "key value" lines under the io lexical
// rules; vectors take three values ("box_min -0.5 -0.5 -0.5").
struct SynthConfig {
  SceneSpec scene;
  ProblemOptions problem;
  double db_rotation_noise_deg = 0.0;
  // Database center noise, scene units.
  double db_translation_noise = 0.0;
};

std::vector<std::string> SynthConfigKeys();
SynthConfig ParseSynthConfig(std::string_view content, const std::string& file = "<spec>");
SynthConfig LoadSynthConfig(const std::filesystem::path& path);
std::string FormatSynthConfig(const SynthConfig& config);

struct SyntheticBundle {
  SyntheticScene scene;
  LocalizationProblem problem;
  std::map<ImageId, Posed> ground_truth;
};

SyntheticBundle MakeSyntheticBundle(const SynthConfig& config);

// Writes the problem bundle plus ground_truth.txt (query poses) and
// scene_spec.txt (the config) into `dir`.
void SaveSyntheticBundle(const SynthConfig& config, const std::filesystem::path& dir);

enum class AblationSuite { kTranslation, kPostOpt, kNoise, kTopK, kMultiQuery, kRig };

std::string_view SuiteName(AblationSuite suite);
// Throws kInvalidArgument for unknown names.
AblationSuite ParseSuite(std::string_view name);

struct ExperimentOptions {
  int num_seeds = 50;
  // Seed i uses scene seed base.scene.seed + i and solver seed first_seed + i.
  uint64_t first_seed = 0;
  LocalizerOptions localizer;
  // Suite parameters.
  std::vector<double> rotation_noise_deg = {0.0, 1.0, 5.0, 10.0};
  std::vector<double> translation_noise = {0.0, 0.01, 0.05, 0.1};
  std::vector<int> top_k = {2, 5, 10, 20};
  std::vector<int> fragment_lengths = {3, 5};
};

// One configuration of a suite evaluated over all seeds. Queries without a
// pose count with infinite error.
struct ExperimentRow {
  std::string label;
  // Per seed: median over the queries of the scene.
  std::vector<double> seed_position_errors;
  std::vector<double> seed_rotation_errors_deg;
  // All queries of all seeds.
  std::vector<double> position_errors;
  std::vector<double> rotation_errors_deg;
  int num_unlocalized = 0;
  // Localize calls that threw.
  int num_hard_failures = 0;

  double MedianPosition() const;
  double MedianRotationDeg() const;
};

struct ExperimentTable {
  AblationSuite suite = AblationSuite::kPostOpt;
  std::vector<ExperimentRow> rows;
  // Median scene diameter over the seeds.
  double scene_diameter = 0.0;

  // Index of the row with this label; throws kInvalidArgument.
  size_t Row(std::string_view label) const;
  // Fraction of seeds where row a's per-seed position error is below row
  // b's (strictly, or with ties counted as wins).
  double WinRate(size_t a, size_t b, bool strict = true) const;
};

// Suites and their rows:
//   translation  full, lud
//   postopt      full, no_postopt, sampson, local_opt, lud
//   noise        rot <deg> per rotation level, trans <units> per translation level
//   topk         k=<k> for each k <= n_database
//   multiquery   independent L=<l>, colocalize L=<l> per fragment length
//   rig          independent L=<l>, colocalize L=<l>, rig L=<l>
ExperimentTable RunSuite(AblationSuite suite, const SynthConfig& base,
                         const ExperimentOptions& options);

std::string FormatExperimentTable(const ExperimentTable& table);

}  // namespace anchorloc
