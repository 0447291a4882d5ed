// Acceptance suite: prints one PASS/FAIL line per criterion and exits with
// the number of failed criteria. Arguments select a subset ("4 7").

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "anchorloc/error.h"
#include "anchorloc/experiments.h"
#include "anchorloc/io.h"
#include "anchorloc/pipeline.h"
#include "anchorloc/post_optimization.h"
#include "anchorloc/random.h"
#include "anchorloc/rotation_averaging.h"
#include "anchorloc/synthetic.h"
#include "anchorloc/translation_averaging.h"

namespace anchorloc {
namespace {

namespace fs = std::filesystem;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRadToDeg = 180.0 / 3.14159265358979323846;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string Format(const char* fmt, double a, double b = 0.0, double c = 0.0,
                   double d = 0.0) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, a, b, c, d);
  return buf;
}

// Sort-based median, independent of the library's evaluation code.
double MedianOf(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double PositionError(const Posed& a, const Posed& b) {
  return (CameraCenter(a) - CameraCenter(b)).norm();
}

double RotationError(const Rotation3d& a, const Rotation3d& b) {
  return GeodesicAngle(a, b);
}

// Fraction of seeds where a's per-seed error is below b's.
double Wins(const std::vector<double>& a, const std::vector<double>& b, bool strict) {
  int wins = 0;
  for (size_t i = 0; i < a.size(); ++i) wins += strict ? a[i] < b[i] : a[i] <= b[i];
  return a.empty() ? 0.0 : static_cast<double>(wins) / static_cast<double>(a.size());
}

const ExperimentRow& RowOf(const ExperimentTable& table, const std::string& label) {
  return table.rows.at(table.Row(label));
}

double PooledMedianPosition(const ExperimentRow& row) { return MedianOf(row.position_errors); }
double PooledMedianRotation(const ExperimentRow& row) {
  return MedianOf(row.rotation_errors_deg);
}

// Noisy scenes of criteria 4 to 7.
SynthConfig NoisyConfig() {
  SynthConfig config;
  config.scene.n_queries = 10;
  config.scene.pixel_noise_sigma = 1.0;
  config.scene.match_outlier_rate = 0.3;
  config.scene.seed = 1000;
  config.problem.top_k = 10;
  return config;
}

Outcome ExactRecovery() {
  const auto start = std::chrono::steady_clock::now();
  double solve_s = 0.0;
  int seeds_ok = 0;
  double worst_rot = 0.0;
  double worst_pos = 0.0;
  for (uint64_t seed = 0; seed < 50; ++seed) {
    SceneSpec spec;
    spec.seed = seed;
    const SyntheticScene scene = GenerateScene(spec);
    const LocalizationProblem problem = MakeProblem(scene, {.top_k = 10});
    const auto truth = QueryTruth(scene);
    const auto t0 = std::chrono::steady_clock::now();
    const SolveReport report = Localize(problem, LocalizerOptions(), seed);
    solve_s += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool ok = report.queries.size() == truth.size();
    for (const QueryReport& q : report.queries) {
      const Posed& gt = truth.at(q.id);
      if (!q.rotation_stage || !q.translation_stage || !q.postopt_stage || !q.pose) {
        ok = false;
        worst_rot = worst_pos = kInf;
        continue;
      }
      const double rot = std::max({RotationError(*q.rotation_stage, gt.rotation),
                                   RotationError(q.translation_stage->rotation, gt.rotation),
                                   RotationError(q.postopt_stage->rotation, gt.rotation),
                                   RotationError(q.pose->rotation, gt.rotation)});
      const double pos = std::max({PositionError(*q.translation_stage, gt),
                                   PositionError(*q.postopt_stage, gt),
                                   PositionError(*q.pose, gt)});
      worst_rot = std::max(worst_rot, rot);
      worst_pos = std::max(worst_pos, pos);
      ok = ok && rot < 1e-7 && pos < 1e-7;
    }
    seeds_ok += ok;
  }
  const double total_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  Outcome out;
  out.pass = seeds_ok == 50 && total_s < 30.0;
  out.detail = Format("%.0f/50 seeds exact, worst rotation %.2e rad, worst position %.2e", seeds_ok,
                      worst_rot, worst_pos) +
               Format(", %.1f s total (%.1f s solving)", total_s, solve_s);
  return out;
}

Outcome Robustness() {
  std::vector<double> relative_position;
  std::vector<double> rotation_deg;
  int hard_failures = 0;
  for (uint64_t seed = 0; seed < 5; ++seed) {
    SceneSpec spec;
    spec.n_database = 20;
    spec.n_queries = 20;
    spec.pixel_noise_sigma = 1.0;
    spec.match_outlier_rate = 0.3;
    spec.edge_outlier_rate = 0.2;
    spec.seed = 200 + seed;
    const SyntheticScene scene = GenerateScene(spec);
    const LocalizationProblem problem = MakeProblem(scene, {.top_k = 20});
    const auto truth = QueryTruth(scene);
    const double diameter = scene.Diameter();
    LocalizerOptions options;
    options.top_k = 20;
    try {
      const SolveReport report = Localize(problem, options, seed);
      for (const auto& [id, gt] : truth) {
        const QueryReport* q = report.Find(id);
        if (!q || !q->pose) {
          relative_position.push_back(kInf);
          rotation_deg.push_back(kInf);
          continue;
        }
        relative_position.push_back(PositionError(*q->pose, gt) / diameter);
        rotation_deg.push_back(RotationError(q->pose->rotation, gt.rotation) * kRadToDeg);
      }
    } catch (const std::exception&) {
      ++hard_failures;
    }
  }
  const double pos = MedianOf(relative_position);
  const double rot = MedianOf(rotation_deg);
  Outcome out;
  out.pass = hard_failures == 0 && relative_position.size() == 100 && pos < 0.01 && rot < 0.3;
  out.detail = Format("%.0f queries, median position %.4f%% of diameter, median rotation %.4f deg",
                      static_cast<double>(relative_position.size()), 100.0 * pos, rot) +
               Format(", %.0f hard failures", hard_failures);
  return out;
}

Outcome CollinearDegeneracy() {
  std::vector<double> full_errors;
  std::vector<double> sampson_errors;
  double diameter = 0.0;
  for (uint64_t seed = 0; seed < 5; ++seed) {
    SceneSpec spec;
    spec.camera_layout = CameraLayout::kLine;
    spec.n_database = 5;
    spec.n_queries = 4;
    spec.seed = 300 + seed;
    const SyntheticScene scene = GenerateScene(spec);
    diameter = std::max(diameter, scene.Diameter());
    const LocalizationProblem problem = MakeProblem(scene, {.top_k = 5});
    const auto truth = QueryTruth(scene);
    const Eigen::Vector3d line = spec.line_direction.normalized();
    LocalizerOptions options;
    const SolveReport full = Localize(problem, options, seed);
    options.variant = SolverVariant::kSampson;
    const SolveReport sampson = Localize(problem, options, seed);
    auto along = [&](const SolveReport& report, ImageId id) {
      const QueryReport* q = report.Find(id);
      if (!q || !q->pose) return kInf;
      return std::abs((CameraCenter(*q->pose) - CameraCenter(truth.at(id))).dot(line));
    };
    for (const auto& [id, gt] : truth) {
      full_errors.push_back(along(full, id));
      sampson_errors.push_back(along(sampson, id));
    }
  }
  const double full = MedianOf(full_errors);
  const double sampson = MedianOf(sampson_errors);
  const double worst_full = *std::max_element(full_errors.begin(), full_errors.end());
  Outcome out;
  out.pass = worst_full < 1e-6 * diameter && sampson >= 100.0 * full;
  out.detail = Format("median along-line error: full %.3e, sampson %.3e (ratio %.3g); worst full %.3e",
                      full, sampson, sampson / std::max(full, 1e-300), worst_full);
  return out;
}

Outcome AblationOrdering() {
  ExperimentOptions options;
  options.num_seeds = 50;
  const ExperimentTable table = RunSuite(AblationSuite::kPostOpt, NoisyConfig(), options);
  const ExperimentRow& full = RowOf(table, "full");
  const double full_median = PooledMedianPosition(full);
  Outcome out;
  out.detail = Format("full %.5f", full_median);
  for (const char* other : {"no_postopt", "sampson", "local_opt", "lud"}) {
    const ExperimentRow& row = RowOf(table, other);
    const double median = PooledMedianPosition(row);
    const double wins = Wins(full.seed_position_errors, row.seed_position_errors, true);
    const bool ok = full_median < median && wins >= 0.9;
    out.pass = out.pass && ok;
    out.detail += std::string(", ") + other + Format(" %.5f (full wins %.0f%%)", median, 100.0 * wins);
  }
  return out;
}

Outcome TopKMonotonicity() {
  SynthConfig config = NoisyConfig();
  config.scene.n_database = 20;
  ExperimentOptions options;
  options.num_seeds = 50;
  const ExperimentTable table = RunSuite(AblationSuite::kTopK, config, options);
  std::vector<double> medians;
  Outcome out;
  for (const int k : {2, 5, 10, 20}) {
    medians.push_back(PooledMedianPosition(RowOf(table, "k=" + std::to_string(k))));
    out.detail += Format("k=%.0f %.5f, ", k, medians.back());
  }
  for (size_t i = 1; i < medians.size(); ++i) out.pass = out.pass && medians[i] <= medians[i - 1];
  const double ratio = medians.front() / medians.back();
  out.pass = out.pass && ratio >= 1.5;
  out.detail += Format("k=2/k=20 %.3f", ratio);
  return out;
}

Outcome NoiseSensitivity() {
  ExperimentOptions options;
  options.num_seeds = 50;
  // 0, 1, 5 and 10 cm in a scene measured in meters.
  options.translation_noise = {0.0, 0.01, 0.05, 0.1};
  options.rotation_noise_deg = {0.0, 1.0, 5.0, 10.0};
  const ExperimentTable table = RunSuite(AblationSuite::kNoise, NoisyConfig(), options);
  Outcome out;
  std::vector<double> rot_pos;
  std::vector<double> rot_rot;
  std::vector<double> trans_pos;
  std::vector<double> trans_rot;
  for (const char* level : {"0", "1", "5", "10"}) {
    const ExperimentRow& r = RowOf(table, std::string("rot ") + level);
    rot_pos.push_back(PooledMedianPosition(r));
    rot_rot.push_back(PooledMedianRotation(r));
  }
  for (const char* level : {"0", "0.01", "0.05", "0.1"}) {
    const ExperimentRow& r = RowOf(table, std::string("trans ") + level);
    trans_pos.push_back(PooledMedianPosition(r));
    trans_rot.push_back(PooledMedianRotation(r));
  }
  for (size_t i = 1; i < 4; ++i) {
    out.pass = out.pass && rot_pos[i] > rot_pos[i - 1] && trans_pos[i] > trans_pos[i - 1];
    out.pass = out.pass && rot_rot[i] > trans_rot[i];
  }
  out.detail = "position under rotation noise";
  for (const double v : rot_pos) out.detail += Format(" %.4g", v);
  out.detail += "; under translation noise";
  for (const double v : trans_pos) out.detail += Format(" %.4g", v);
  out.detail += "; rotation error (deg) rot vs trans";
  for (size_t i = 0; i < 4; ++i) out.detail += Format(" %.3g/%.3g", rot_rot[i], trans_rot[i]);
  return out;
}

Outcome ExtensionGains() {
  SynthConfig config = NoisyConfig();
  config.scene.n_queries = 15;
  config.problem.top_k = 3;
  ExperimentOptions options;
  options.num_seeds = 50;
  options.fragment_lengths = {3, 5};
  const ExperimentTable table = RunSuite(AblationSuite::kRig, config, options);
  Outcome out;
  for (const int length : {3, 5}) {
    const std::string l = " L=" + std::to_string(length);
    const ExperimentRow& ind = RowOf(table, "independent" + l);
    const ExperimentRow& col = RowOf(table, "colocalize" + l);
    const ExperimentRow& rig = RowOf(table, "rig" + l);
    const double m_ind = PooledMedianPosition(ind);
    const double m_col = PooledMedianPosition(col);
    const double m_rig = PooledMedianPosition(rig);
    const double w_col = Wins(col.seed_position_errors, ind.seed_position_errors, false);
    const double w_rig = Wins(rig.seed_position_errors, col.seed_position_errors, false);
    out.pass = out.pass && m_col <= m_ind && w_col >= 0.8 && m_rig <= m_col && w_rig >= 0.8;
    if (!out.detail.empty()) out.detail += "; ";
    out.detail += "L=" + std::to_string(length) +
                  Format(" independent %.5f, colocalize %.5f (wins %.0f%%), rig %.5f", m_ind,
                         m_col, 100.0 * w_col, m_rig) +
                  Format(" (wins %.0f%%)", 100.0 * w_rig);
  }
  return out;
}

Outcome MinimalConfiguration() {
  int checked = 0;
  int violations = 0;
  auto check = [&](const SolveReport& report, const std::set<ImageId>& expected) {
    for (const QueryReport& q : report.queries) {
      if (!expected.count(q.id)) continue;
      ++checked;
      if (!q.flags.scale_unobservable || q.pose) ++violations;
    }
  };
  for (uint64_t seed = 0; seed < 5; ++seed) {
    SceneSpec spec;
    spec.n_queries = 4;
    spec.seed = 400 + seed;
    const SyntheticScene scene = GenerateScene(spec);
    std::set<ImageId> all;
    for (const auto& [id, pose] : scene.queries) all.insert(id);

    // One retrieval pair per query.
    check(Localize(MakeProblem(scene, {.top_k = 1}), LocalizerOptions(), seed), all);

    // Two retrieval pairs, one of which cannot produce an edge.
    LocalizationProblem problem = MakeProblem(scene, {.top_k = 2});
    std::map<ImageId, bool> cut;
    for (const ImagePair& p : problem.retrieval_pairs) {
      if (cut[p.first]) continue;
      cut[p.first] = true;
      auto& matches = problem.matches.at(p);
      matches.resize(std::min<size_t>(matches.size(), 4));
    }
    check(Localize(problem, LocalizerOptions(), seed), all);

    // Co-localization without query-query pairs offers no rescue.
    LocalizerOptions coloc;
    coloc.mode = LocalizationMode::kColocalize;
    check(Localize(MakeProblem(scene, {.top_k = 1}), coloc, seed), all);
  }
  Outcome out;
  out.pass = checked > 0 && violations == 0;
  out.detail = Format("%.0f single-edge queries, %.0f without the scale_unobservable flag or with a pose",
                      checked, violations);
  return out;
}

Outcome NumericalProperties() {
  Outcome out;
  auto fail = [&](const std::string& what) {
    out.pass = false;
    out.detail += (out.detail.empty() ? "" : "; ") + what;
  };
  Rng rng(9);

  // exp/log round trips.
  double worst_exp_log = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Vector3d w = rng.Uniform(0.0, 3.1) * rng.UnitVector();
    worst_exp_log = std::max(worst_exp_log, (LogSO3(ExpSO3<double>(w)) - w).norm());
    const Rotation3d r = rng.UniformRotation();
    worst_exp_log = std::max(worst_exp_log, GeodesicAngle(ExpSO3<double>(LogSO3(r)), r));
  }
  if (worst_exp_log > 1e-10) fail(Format("exp/log round trip %.2e", worst_exp_log));

  // Analytic reprojection Jacobian against central differences.
  const CameraIntrinsicsd k{500.0, 500.0, 320.0, 240.0};
  double worst_jacobian = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Posed mount = trial % 2 == 0 ? Posed() : Posed(rng.UniformRotation(), 0.3 * rng.UnitVector());
    const Rotation3d r = rng.UniformRotation();
    const Eigen::Vector3d c = 2.0 * rng.UnitVector();
    const Posed cam = mount * Posed::FromCenter(r, c);
    const Eigen::Vector3d dir(rng.Uniform(-0.3, 0.3), rng.Uniform(-0.3, 0.3), 1.0);
    const Eigen::Vector3d x = cam.inverse().Transform(rng.Uniform(2.0, 6.0) * dir);
    const Eigen::Vector2d obs(rng.Uniform(0, 640), rng.Uniform(0, 480));
    const Eigen::Matrix<double, 2, 9> jac = ReprojectionJacobian(mount, r, c, x, k);
    Eigen::Matrix<double, 2, 9> numeric;
    const double h = 1e-6;
    for (int j = 0; j < 9; ++j) {
      Eigen::Matrix<double, 9, 1> d = Eigen::Matrix<double, 9, 1>::Zero();
      d(j) = h;
      auto eval = [&](const Eigen::Matrix<double, 9, 1>& v) {
        return ReprojectionResidual(mount, r * ExpSO3<double>(v.head<3>()), c + v.segment<3>(3),
                                    x + v.tail<3>(), k, obs);
      };
      numeric.col(j) = (eval(d) - eval(-d)) / (2.0 * h);
    }
    worst_jacobian = std::max(worst_jacobian, (jac - numeric).norm() / jac.norm());
  }
  if (worst_jacobian > 1e-6) fail(Format("Jacobian relative error %.2e", worst_jacobian));

  // Averaging properties on two-view edges of noisy synthetic scenes.
  int irls_violations = 0;
  double worst_rotation_equivariance = 0.0;
  double worst_translation_equivariance = 0.0;
  int problems = 0;
  for (uint64_t seed = 0; seed < 3; ++seed) {
    SceneSpec spec;
    spec.n_queries = 5;
    spec.pixel_noise_sigma = 1.0;
    spec.match_outlier_rate = 0.3;
    spec.edge_outlier_rate = 0.2;
    spec.seed = 500 + seed;
    const SyntheticScene scene = GenerateScene(spec);
    const LocalizationProblem problem = MakeProblem(scene, {.top_k = 10});
    const EstimatedEdges estimated = EstimateEdges(problem, LocalizerOptions(), seed);
    std::map<ImageId, Rotation3d> db_rotations;
    std::map<ImageId, Eigen::Vector3d> db_centers;
    for (const auto& [id, image] : problem.database) {
      db_rotations[id] = image.pose.rotation;
      db_centers[id] = CameraCenter(image.pose);
    }
    for (const auto& [q, intrinsics] : problem.queries) {
      std::vector<RelativePoseMeasurement> edges;
      for (const PairEdge& e : estimated.edges) {
        if (e.measurement.source == q && !e.measurement.inliers.empty()) {
          edges.push_back(e.measurement);
        }
      }
      if (edges.size() < 2) continue;
      ++problems;
      const RotationProblem rp(db_rotations, {q}, edges);
      RotationAveragingSummary summary;
      const auto ra = SolveRotations(rp, InitializeRotations(rp), {}, &summary);
      for (size_t i = 1; i < summary.irls_objective.size(); ++i) {
        irls_violations += summary.irls_objective[i] > summary.irls_objective[i - 1];
      }
      const Rotation3d g = rng.UniformRotation();
      std::map<ImageId, Rotation3d> moved;
      for (const auto& [id, r] : db_rotations) moved[id] = r * g.inverse();
      const RotationProblem rp_moved(moved, {q}, edges);
      const auto rb = SolveRotations(rp_moved, InitializeRotations(rp_moved));
      worst_rotation_equivariance =
          std::max(worst_rotation_equivariance, GeodesicAngle(ra.at(q) * g.inverse(), rb.at(q)));

      std::vector<DirectionEdge> directions;
      for (const RelativePoseMeasurement& m : edges) {
        directions.push_back(MakeDirectionEdge(m, db_rotations.at(m.target), m.direction));
      }
      auto solve = [&](const std::map<ImageId, Eigen::Vector3d>& centers) {
        const TranslationProblem tp(centers, {q}, directions);
        return SolveCenters(tp, InitializeCenters(tp)).at(q);
      };
      const Eigen::Vector3d c0 = solve(db_centers);
      const Eigen::Vector3d v(3.0, -1.0, 2.5);
      const double s = 3.7;
      std::map<ImageId, Eigen::Vector3d> shifted;
      std::map<ImageId, Eigen::Vector3d> scaled;
      for (const auto& [id, c] : db_centers) {
        shifted[id] = c + v;
        scaled[id] = s * c;
      }
      const double shift_error = (solve(shifted) - (c0 + v)).norm() / (c0 + v).norm();
      const double scale_error = (solve(scaled) - s * c0).norm() / (s * c0).norm();
      worst_translation_equivariance =
          std::max({worst_translation_equivariance, shift_error, scale_error});
    }
  }
  if (problems == 0 || irls_violations > 0) {
    fail(Format("IRLS objective increased %.0f times over %.0f problems", irls_violations, problems));
  }
  if (worst_rotation_equivariance > 1e-8) {
    fail(Format("rotation averaging equivariance %.2e", worst_rotation_equivariance));
  }
  if (worst_translation_equivariance > 1e-9) {
    fail(Format("translation averaging equivariance %.2e", worst_translation_equivariance));
  }

  // Seed determinism: identical reports across runs and thread counts.
  SceneSpec spec;
  spec.n_queries = 6;
  spec.fragment_length = 3;
  spec.pixel_noise_sigma = 1.0;
  spec.match_outlier_rate = 0.3;
  spec.seed = 600;
  const SyntheticScene scene = GenerateScene(spec);
  const LocalizationProblem problem =
      MakeProblem(scene, {.top_k = 5, .query_query_pairs = true});
  LocalizerOptions options;
  options.mode = LocalizationMode::kColocalize;
  const std::string first = FormatReportTable(MakeReportTable(Localize(problem, options, 17)),
                                              ReportFormat::kCsv);
  const std::string second = FormatReportTable(MakeReportTable(Localize(problem, options, 17)),
                                               ReportFormat::kCsv);
  options.num_threads = 3;
  const std::string threaded = FormatReportTable(MakeReportTable(Localize(problem, options, 17)),
                                                 ReportFormat::kCsv);
  if (first != second || first != threaded) fail("reports differ between identical runs");

  if (out.pass) {
    out.detail = Format("exp/log %.1e, Jacobian %.1e, rotation equivariance %.1e",
                        worst_exp_log, worst_jacobian, worst_rotation_equivariance) +
                 Format(", translation equivariance %.1e, %.0f averaging problems, reports identical",
                        worst_translation_equivariance, problems);
  }
  return out;
}

std::map<std::string, std::string> ReadTree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) {
      out[fs::relative(entry.path(), dir).generic_string()] = ReadFileContent(entry.path());
    }
  }
  return out;
}

Outcome FormatRoundTrip() {
  const fs::path root = fs::temp_directory_path() / "anchorloc_acceptance_roundtrip";
  fs::remove_all(root);
  int identical = 0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(700 + seed);
    SceneSpec spec;
    spec.n_database = 6 + static_cast<int>(rng.UniformIndex(6));
    spec.n_points = 200;
    spec.n_queries = 4;
    spec.fragment_length = seed % 2 ? 2 : 1;
    spec.pixel_noise_sigma = rng.Uniform(0.0, 2.0);
    spec.match_outlier_rate = rng.Uniform(0.0, 0.4);
    spec.edge_outlier_rate = rng.Uniform(0.0, 0.3);
    spec.intrinsics = {rng.Uniform(400.0, 700.0), rng.Uniform(400.0, 700.0), 320.0 + rng.Normal(),
                       240.0 + rng.Normal()};
    spec.seed = 700 + seed;
    const SyntheticScene scene = GenerateScene(spec);
    ProblemOptions problem_options;
    problem_options.top_k = 1 + static_cast<int>(rng.UniformIndex(spec.n_database));
    problem_options.query_query_pairs = seed % 2 == 1;
    problem_options.rig = seed % 4 == 3;
    const LocalizationProblem problem = MakeProblem(scene, problem_options);
    const fs::path a = root / std::to_string(seed) / "a";
    const fs::path b = root / std::to_string(seed) / "b";
    SaveProblem(problem, a);
    SaveProblem(LoadProblem(a), b);
    identical += ReadTree(a) == ReadTree(b);
  }
  fs::remove_all(root);
  Outcome out;
  out.pass = identical == 20;
  out.detail = Format("%.0f/20 bundles byte-identical after save, load, save", identical);
  return out;
}

}  // namespace
}  // namespace anchorloc

int main(int argc, char** argv) {
  using namespace anchorloc;
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, ExactRecovery},      {2, Robustness},       {3, CollinearDegeneracy},
      {4, AblationOrdering},   {5, TopKMonotonicity}, {6, NoiseSensitivity},
      {7, ExtensionGains},     {8, MinimalConfiguration}, {9, NumericalProperties},
      {10, FormatRoundTrip}};
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& [id, run] : criteria) {
    if (!selected.empty() && !selected.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = run();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !outcome.pass;
    std::printf("%s criterion %d: %s [%.1f s]\n", outcome.pass ? "PASS" : "FAIL", id,
                outcome.detail.c_str(), seconds);
    std::fflush(stdout);
  }
  return failed;
}
