#include "anchorloc/experiments.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <set>

#include "anchorloc/error.h"
#include "anchorloc/evaluation.h"
#include "anchorloc/io.h"

namespace anchorloc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Shortest representation that reads back exactly.
std::string ShortestDouble(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

struct SynthKey {
  std::string name;
  int arity = 1;
  std::function<void(SynthConfig&, const std::vector<std::string>&, const std::string&, int)> set;
  std::function<std::string(const SynthConfig&)> get;
};

SynthKey IntKey(std::string name, std::function<int&(SynthConfig&)> field) {
  SynthKey k;
  k.name = std::move(name);
  k.set = [field](SynthConfig& c, const std::vector<std::string>& v, const std::string& file,
                  int line) {
    const long long value = ParseInteger(v[0], file, line);
    if (value < 0 || value > std::numeric_limits<int>::max()) {
      ThrowParseError(file, line, "value out of range '" + v[0] + "'");
    }
    field(c) = static_cast<int>(value);
  };
  k.get = [field](const SynthConfig& c) {
    SynthConfig copy = c;
    return std::to_string(field(copy));
  };
  return k;
}

SynthKey RealKey(std::string name, std::function<double&(SynthConfig&)> field) {
  SynthKey k;
  k.name = std::move(name);
  k.set = [field](SynthConfig& c, const std::vector<std::string>& v, const std::string& file,
                  int line) { field(c) = ParseDouble(v[0], file, line); };
  k.get = [field](const SynthConfig& c) {
    SynthConfig copy = c;
    return ShortestDouble(field(copy));
  };
  return k;
}

SynthKey BoolKey(std::string name, std::function<bool&(SynthConfig&)> field) {
  SynthKey k;
  k.name = std::move(name);
  k.set = [field](SynthConfig& c, const std::vector<std::string>& v, const std::string& file,
                  int line) { field(c) = ParseBool(v[0], file, line); };
  k.get = [field](const SynthConfig& c) {
    SynthConfig copy = c;
    return std::string(field(copy) ? "true" : "false");
  };
  return k;
}

SynthKey VectorKey(std::string name, std::function<Eigen::Vector3d&(SynthConfig&)> field) {
  SynthKey k;
  k.name = std::move(name);
  k.arity = 3;
  k.set = [field](SynthConfig& c, const std::vector<std::string>& v, const std::string& file,
                  int line) {
    for (int i = 0; i < 3; ++i) field(c)[i] = ParseDouble(v[i], file, line);
  };
  k.get = [field](const SynthConfig& c) {
    SynthConfig copy = c;
    const Eigen::Vector3d& x = field(copy);
    return ShortestDouble(x.x()) + " " + ShortestDouble(x.y()) + " " + ShortestDouble(x.z());
  };
  return k;
}

const std::vector<SynthKey>& SynthKeys() {
  static const std::vector<SynthKey> keys = [] {
    std::vector<SynthKey> out;
    out.push_back(IntKey("n_database", [](SynthConfig& c) -> int& { return c.scene.n_database; }));
    out.push_back(IntKey("n_points", [](SynthConfig& c) -> int& { return c.scene.n_points; }));
    out.push_back(IntKey("n_queries", [](SynthConfig& c) -> int& { return c.scene.n_queries; }));
    out.push_back(IntKey("fragment_length",
                         [](SynthConfig& c) -> int& { return c.scene.fragment_length; }));
    out.push_back(RealKey("fragment_step",
                          [](SynthConfig& c) -> double& { return c.scene.fragment_step; }));
    {
      SynthKey k;
      k.name = "camera_layout";
      k.set = [](SynthConfig& c, const std::vector<std::string>& v, const std::string& file,
                 int line) {
        if (v[0] == "sphere") {
          c.scene.camera_layout = CameraLayout::kSphere;
        } else if (v[0] == "line") {
          c.scene.camera_layout = CameraLayout::kLine;
        } else if (v[0] == "grid") {
          c.scene.camera_layout = CameraLayout::kGrid;
        } else {
          ThrowParseError(file, line, "camera_layout must be sphere, line or grid");
        }
      };
      k.get = [](const SynthConfig& c) -> std::string {
        switch (c.scene.camera_layout) {
          case CameraLayout::kSphere: return "sphere";
          case CameraLayout::kLine: return "line";
          case CameraLayout::kGrid: return "grid";
        }
        return "sphere";
      };
      out.push_back(k);
    }
    out.push_back(RealKey("radius", [](SynthConfig& c) -> double& { return c.scene.radius; }));
    out.push_back(VectorKey("line_direction", [](SynthConfig& c) -> Eigen::Vector3d& {
      return c.scene.line_direction;
    }));
    out.push_back(RealKey("spacing", [](SynthConfig& c) -> double& { return c.scene.spacing; }));
    out.push_back(
        VectorKey("box_min", [](SynthConfig& c) -> Eigen::Vector3d& { return c.scene.box_min; }));
    out.push_back(
        VectorKey("box_max", [](SynthConfig& c) -> Eigen::Vector3d& { return c.scene.box_max; }));
    out.push_back(
        RealKey("look_jitter", [](SynthConfig& c) -> double& { return c.scene.look_jitter; }));
    out.push_back(RealKey("fx", [](SynthConfig& c) -> double& { return c.scene.intrinsics.fx; }));
    out.push_back(RealKey("fy", [](SynthConfig& c) -> double& { return c.scene.intrinsics.fy; }));
    out.push_back(RealKey("cx", [](SynthConfig& c) -> double& { return c.scene.intrinsics.cx; }));
    out.push_back(RealKey("cy", [](SynthConfig& c) -> double& { return c.scene.intrinsics.cy; }));
    out.push_back(
        IntKey("image_width", [](SynthConfig& c) -> int& { return c.scene.image_width; }));
    out.push_back(
        IntKey("image_height", [](SynthConfig& c) -> int& { return c.scene.image_height; }));
    out.push_back(RealKey("pixel_noise_sigma",
                          [](SynthConfig& c) -> double& { return c.scene.pixel_noise_sigma; }));
    out.push_back(RealKey("match_outlier_rate",
                          [](SynthConfig& c) -> double& { return c.scene.match_outlier_rate; }));
    out.push_back(RealKey("edge_outlier_rate",
                          [](SynthConfig& c) -> double& { return c.scene.edge_outlier_rate; }));
    {
      SynthKey k;
      k.name = "seed";
      k.set = [](SynthConfig& c, const std::vector<std::string>& v, const std::string& file,
                 int line) {
        const long long value = ParseInteger(v[0], file, line);
        if (value < 0) ThrowParseError(file, line, "seed must be non-negative");
        c.scene.seed = static_cast<uint64_t>(value);
      };
      k.get = [](const SynthConfig& c) { return std::to_string(c.scene.seed); };
      out.push_back(k);
    }
    out.push_back(IntKey("top_k", [](SynthConfig& c) -> int& { return c.problem.top_k; }));
    out.push_back(BoolKey("query_query_pairs",
                          [](SynthConfig& c) -> bool& { return c.problem.query_query_pairs; }));
    out.push_back(BoolKey("rig", [](SynthConfig& c) -> bool& { return c.problem.rig; }));
    out.push_back(RealKey("db_rotation_noise_deg",
                          [](SynthConfig& c) -> double& { return c.db_rotation_noise_deg; }));
    out.push_back(RealKey("db_translation_noise",
                          [](SynthConfig& c) -> double& { return c.db_translation_noise; }));
    return out;
  }();
  return keys;
}

// Per-query errors of a report against ground truth, infinite when absent.
void Record(const SolveReport& report, const std::map<ImageId, Posed>& truth, ExperimentRow& row) {
  std::vector<double> positions;
  std::vector<double> rotations;
  for (const auto& [id, pose] : truth) {
    const QueryReport* q = report.Find(id);
    PoseErrors e{kInf, kInf};
    if (q && q->pose) {
      e = ComputePoseErrors(*q->pose, pose);
    } else {
      ++row.num_unlocalized;
    }
    positions.push_back(e.position);
    rotations.push_back(e.rotation_deg);
  }
  row.position_errors.insert(row.position_errors.end(), positions.begin(), positions.end());
  row.rotation_errors_deg.insert(row.rotation_errors_deg.end(), rotations.begin(),
                                 rotations.end());
  row.seed_position_errors.push_back(Median(positions));
  row.seed_rotation_errors_deg.push_back(Median(rotations));
}

void RecordFailure(const std::map<ImageId, Posed>& truth, ExperimentRow& row) {
  ++row.num_hard_failures;
  row.num_unlocalized += static_cast<int>(truth.size());
  row.position_errors.insert(row.position_errors.end(), truth.size(), kInf);
  row.rotation_errors_deg.insert(row.rotation_errors_deg.end(), truth.size(), kInf);
  row.seed_position_errors.push_back(kInf);
  row.seed_rotation_errors_deg.push_back(kInf);
}

void Run(const std::function<SolveReport()>& solve, const std::map<ImageId, Posed>& truth,
         ExperimentRow& row) {
  try {
    Record(solve(), truth, row);
  } catch (const std::exception&) {
    RecordFailure(truth, row);
  }
}

std::string Label(const std::string& prefix, double value) {
  return prefix + ShortestDouble(value);
}

}  // namespace

std::vector<std::string> SynthConfigKeys() {
  std::vector<std::string> out;
  for (const SynthKey& k : SynthKeys()) out.push_back(k.name);
  return out;
}

SynthConfig ParseSynthConfig(std::string_view content, const std::string& file) {
  SynthConfig config;
  std::set<std::string> seen;
  for (const TextLine& line : TokenizeText(content)) {
    std::vector<std::string> tokens = line.tokens;
    if (tokens.size() >= 2 && tokens[1] == "=") tokens.erase(tokens.begin() + 1);
    const auto key = std::find_if(SynthKeys().begin(), SynthKeys().end(),
                                  [&](const SynthKey& k) { return k.name == tokens[0]; });
    if (key == SynthKeys().end()) {
      ThrowParseError(file, line.number, "unknown key '" + tokens[0] + "'");
    }
    if (tokens.size() != static_cast<size_t>(key->arity) + 1) {
      ThrowParseError(file, line.number,
                      key->name + " takes " + std::to_string(key->arity) + " value(s)");
    }
    if (!seen.insert(tokens[0]).second) {
      ThrowParseError(file, line.number, "repeated key '" + tokens[0] + "'");
    }
    key->set(config, std::vector<std::string>(tokens.begin() + 1, tokens.end()), file,
             line.number);
  }
  return config;
}

SynthConfig LoadSynthConfig(const std::filesystem::path& path) {
  return ParseSynthConfig(ReadFileContent(path), path.string());
}

std::string FormatSynthConfig(const SynthConfig& config) {
  std::string out;
  for (const SynthKey& k : SynthKeys()) out += k.name + " " + k.get(config) + "\n";
  return out;
}

SyntheticBundle MakeSyntheticBundle(const SynthConfig& config) {
  SyntheticBundle bundle;
  bundle.scene = GenerateScene(config.scene);
  if (config.db_rotation_noise_deg != 0.0 || config.db_translation_noise != 0.0) {
    bundle.scene = CorruptDatabase(bundle.scene, config.db_rotation_noise_deg,
                                   config.db_translation_noise, config.scene.seed);
  }
  bundle.problem = MakeProblem(bundle.scene, config.problem);
  bundle.ground_truth = QueryTruth(bundle.scene);
  return bundle;
}

void SaveSyntheticBundle(const SynthConfig& config, const std::filesystem::path& dir) {
  const SyntheticBundle bundle = MakeSyntheticBundle(config);
  SaveProblem(bundle.problem, dir);
  SavePoses(bundle.ground_truth, dir / "ground_truth.txt");
  WriteTextFile(dir / "scene_spec.txt", FormatSynthConfig(config));
}

std::string_view SuiteName(AblationSuite suite) {
  switch (suite) {
    case AblationSuite::kTranslation: return "translation";
    case AblationSuite::kPostOpt: return "postopt";
    case AblationSuite::kNoise: return "noise";
    case AblationSuite::kTopK: return "topk";
    case AblationSuite::kMultiQuery: return "multiquery";
    case AblationSuite::kRig: return "rig";
  }
  return "unknown";
}

AblationSuite ParseSuite(std::string_view name) {
  for (const auto suite : {AblationSuite::kTranslation, AblationSuite::kPostOpt,
                           AblationSuite::kNoise, AblationSuite::kTopK,
                           AblationSuite::kMultiQuery, AblationSuite::kRig}) {
    if (SuiteName(suite) == name) return suite;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown suite '" + std::string(name) + "'");
}

double ExperimentRow::MedianPosition() const { return Median(position_errors); }
double ExperimentRow::MedianRotationDeg() const { return Median(rotation_errors_deg); }

size_t ExperimentTable::Row(std::string_view label) const {
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].label == label) return i;
  }
  throw Error(ErrorCode::kInvalidArgument, "no row '" + std::string(label) + "'");
}

double ExperimentTable::WinRate(size_t a, size_t b, bool strict) const {
  const auto& ea = rows.at(a).seed_position_errors;
  const auto& eb = rows.at(b).seed_position_errors;
  const size_t n = std::min(ea.size(), eb.size());
  if (n == 0) return 0.0;
  int wins = 0;
  for (size_t i = 0; i < n; ++i) {
    if (strict ? ea[i] < eb[i] : ea[i] <= eb[i]) ++wins;
  }
  return static_cast<double>(wins) / static_cast<double>(n);
}

ExperimentTable RunSuite(AblationSuite suite, const SynthConfig& base,
                         const ExperimentOptions& options) {
  ExperimentTable table;
  table.suite = suite;
  auto row = [&](const std::string& label) -> ExperimentRow& {
    for (ExperimentRow& r : table.rows) {
      if (r.label == label) return r;
    }
    table.rows.push_back({});
    table.rows.back().label = label;
    return table.rows.back();
  };

  std::vector<int> ks;
  for (const int k : options.top_k) {
    if (k >= 1 && k <= base.scene.n_database) ks.push_back(k);
  }

  std::vector<double> diameters;
  for (int i = 0; i < options.num_seeds; ++i) {
    SynthConfig config = base;
    config.scene.seed = base.scene.seed + static_cast<uint64_t>(i);
    const uint64_t seed = options.first_seed + static_cast<uint64_t>(i);
    LocalizerOptions localizer = options.localizer;

    // Two-view estimation runs once per scene; every row of the suite
    // solves on the subset of edges its options select.
    auto estimate = [&](const LocalizationProblem& problem) -> std::optional<EstimatedEdges> {
      LocalizerOptions all = options.localizer;
      all.top_k = 0;
      all.mode = LocalizationMode::kColocalize;
      try {
        return EstimateEdges(problem, all, seed);
      } catch (const std::exception&) {
        return std::nullopt;
      }
    };
    auto solve = [&](const LocalizationProblem& problem,
                     const std::optional<EstimatedEdges>& edges,
                     const std::map<ImageId, Posed>& truth, ExperimentRow& r) {
      if (!edges) {
        RecordFailure(truth, r);
        return;
      }
      Run([&] { return SolveWithEdges(problem, SelectEdges(problem, *edges, localizer), localizer); },
          truth, r);
    };

    switch (suite) {
      case AblationSuite::kTranslation:
      case AblationSuite::kPostOpt: {
        const SyntheticBundle bundle = MakeSyntheticBundle(config);
        diameters.push_back(bundle.scene.Diameter());
        const std::vector<SolverVariant> variants =
            suite == AblationSuite::kTranslation
                ? std::vector<SolverVariant>{SolverVariant::kFull, SolverVariant::kLud}
                : std::vector<SolverVariant>{SolverVariant::kFull, SolverVariant::kNoPostOpt,
                                             SolverVariant::kSampson, SolverVariant::kLocalOpt,
                                             SolverVariant::kLud};
        const auto edges = estimate(bundle.problem);
        for (const SolverVariant v : variants) {
          localizer.variant = v;
          solve(bundle.problem, edges, bundle.ground_truth, row(std::string(VariantName(v))));
        }
        break;
      }
      case AblationSuite::kNoise: {
        SynthConfig clean = config;
        clean.db_rotation_noise_deg = 0.0;
        clean.db_translation_noise = 0.0;
        const SyntheticBundle bundle = MakeSyntheticBundle(clean);
        diameters.push_back(bundle.scene.Diameter());
        // Database noise changes poses only, so the matches and edges are shared.
        const auto edges = estimate(bundle.problem);
        auto run_level = [&](const std::string& label, double rot, double trans) {
          const SyntheticScene scene =
              (rot == 0.0 && trans == 0.0)
                  ? bundle.scene
                  : CorruptDatabase(bundle.scene, rot, trans, config.scene.seed);
          const LocalizationProblem problem = MakeProblem(scene, config.problem);
          solve(problem, edges, bundle.ground_truth, row(label));
        };
        for (const double rot : options.rotation_noise_deg) run_level(Label("rot ", rot), rot, 0.0);
        for (const double t : options.translation_noise) run_level(Label("trans ", t), 0.0, t);
        break;
      }
      case AblationSuite::kTopK: {
        if (!ks.empty()) config.problem.top_k = *std::max_element(ks.begin(), ks.end());
        const SyntheticBundle bundle = MakeSyntheticBundle(config);
        diameters.push_back(bundle.scene.Diameter());
        const auto edges = estimate(bundle.problem);
        for (const int k : ks) {
          localizer.top_k = k;
          solve(bundle.problem, edges, bundle.ground_truth, row("k=" + std::to_string(k)));
        }
        break;
      }
      case AblationSuite::kMultiQuery:
      case AblationSuite::kRig: {
        for (const int length : options.fragment_lengths) {
          SynthConfig fragment = config;
          fragment.scene.fragment_length = length;
          fragment.problem.query_query_pairs = true;
          fragment.problem.rig = suite == AblationSuite::kRig;
          const SyntheticBundle bundle = MakeSyntheticBundle(fragment);
          diameters.push_back(bundle.scene.Diameter());
          const auto edges = estimate(bundle.problem);
          std::vector<LocalizationMode> modes = {LocalizationMode::kIndependent,
                                                 LocalizationMode::kColocalize};
          if (suite == AblationSuite::kRig) modes.push_back(LocalizationMode::kRig);
          for (const LocalizationMode mode : modes) {
            localizer.mode = mode;
            solve(bundle.problem, edges, bundle.ground_truth,
                  row(std::string(ModeName(mode)) + " L=" + std::to_string(length)));
          }
        }
        break;
      }
    }
  }
  table.scene_diameter = Median(diameters);
  return table;
}

std::string FormatExperimentTable(const ExperimentTable& table) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "# suite %s, median scene diameter %.6g\n",
                std::string(SuiteName(table.suite)).c_str(), table.scene_diameter);
  out += buf;
  std::snprintf(buf, sizeof(buf), "%-20s %14s %12s %10s %11s %6s %8s\n", "# row", "median_pos",
                "pos/diam_%", "rot_deg", "unlocalized", "hard", "row0_wins");
  out += buf;
  for (size_t i = 0; i < table.rows.size(); ++i) {
    const ExperimentRow& r = table.rows[i];
    const double pos = r.MedianPosition();
    std::snprintf(buf, sizeof(buf), "%-20s %14.6g %12.6g %10.6g %11d %6d %8.2f\n",
                  ("\"" + r.label + "\"").c_str(), pos,
                  table.scene_diameter > 0.0 ? 100.0 * pos / table.scene_diameter : 0.0,
                  r.MedianRotationDeg(), r.num_unlocalized, r.num_hard_failures,
                  i == 0 ? 0.0 : table.WinRate(0, i));
    out += buf;
  }
  return out;
}

}  // namespace anchorloc
