#include "anchorloc/cli.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "anchorloc/error.h"
#include "anchorloc/evaluation.h"
#include "anchorloc/experiments.h"
#include "anchorloc/io.h"
#include "anchorloc/pipeline.h"
#include "anchorloc/run_config.h"

namespace anchorloc {
namespace {

namespace fs = std::filesystem;

int ResolveThreads(int threads) {
  if (threads > 0) return threads;
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

std::string FlagList(const QueryFlags& f) {
  std::string out;
  auto add = [&](bool set, const char* name) {
    if (!set) return;
    if (!out.empty()) out += ",";
    out += name;
  };
  add(f.scale_unobservable, "scale_unobservable");
  add(f.degenerate_geometry, "degenerate_geometry");
  add(f.no_tracks, "no_tracks");
  add(f.disconnected, "disconnected");
  return out.empty() ? "-" : out;
}

std::string Milliseconds(double ms) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", ms);
  return buf;
}

struct LocalizeArgs {
  std::string problem_dir;
  std::string config_file;
  std::optional<uint64_t> seed;
  std::string mode;
  std::string out;
  std::string ground_truth;
  std::optional<int> threads;
};

int Localize(const LocalizeArgs& args, std::ostream& out) {
  RunConfig config;
  if (!args.config_file.empty()) config = LoadRunConfig(args.config_file);
  if (args.seed) config.seed = *args.seed;
  if (!args.mode.empty()) SetConfigValue(config, "mode", args.mode, "--mode", 0);
  if (!args.out.empty()) config.report_path = args.out;
  if (args.threads) config.threads = *args.threads;
  config.localizer.num_threads = ResolveThreads(config.threads);

  const LocalizationProblem problem = LoadProblem(args.problem_dir);
  std::optional<std::map<ImageId, Posed>> truth;
  if (!args.ground_truth.empty()) truth = LoadPoses(args.ground_truth);

  const SolveReport report = anchorloc::Localize(problem, config.localizer, config.seed);
  const fs::path report_path = config.report_path;
  SaveReport(report, report_path, ReportFormatForPath(report_path), truth ? &*truth : nullptr);
  if (!config.edges_path.empty()) {
    const fs::path edges_path = config.edges_path;
    WriteTextFile(edges_path, FormatEdgeTable(report, ReportFormatForPath(edges_path)));
  }

  bool soft_failure = false;
  for (const QueryReport& q : report.queries) {
    soft_failure = soft_failure || q.flags.AnySoftFailure() || !q.pose;
    out << "query " << q.id << " " << (q.pose ? "localized" : "failed") << " flags "
        << FlagList(q.flags) << "\n";
  }
  const StageTimings& t = report.timings;
  out << "timings_ms two_view " << Milliseconds(t.two_view_ms) << " rotation "
      << Milliseconds(t.rotation_ms) << " translation " << Milliseconds(t.translation_ms)
      << " postopt " << Milliseconds(t.postopt_ms) << " total " << Milliseconds(t.total_ms)
      << "\n";
  out << "report " << report_path.string() << "\n";
  return soft_failure ? kExitSoftFailure : kExitOk;
}

struct SynthArgs {
  std::string spec_file;
  std::string out;
  std::optional<uint64_t> seed;
};

int Synth(const SynthArgs& args, std::ostream& out) {
  SynthConfig config = LoadSynthConfig(args.spec_file);
  if (args.seed) config.scene.seed = *args.seed;
  SaveSyntheticBundle(config, args.out);
  out << "bundle " << args.out << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string report;
  std::string ground_truth;
  std::optional<double> meters_per_unit;
};

int Eval(const EvalArgs& args, std::ostream& out) {
  const ReportTable table = LoadReport(args.report);
  const std::map<ImageId, Posed> truth = LoadPoses(args.ground_truth);
  std::map<ImageId, std::optional<Posed>> estimates;
  for (const ReportRow& row : table.rows) estimates[row.id] = row.pose;
  EvaluationOptions options;
  options.meters_per_unit = args.meters_per_unit;
  out << FormatEvaluation(Evaluate(estimates, truth, options));
  return kExitOk;
}

struct AblateArgs {
  std::string bundle;
  std::string suite;
  int seeds = 50;
  uint64_t seed = 0;
  std::string config_file;
  std::optional<int> threads;
};

int Ablate(const AblateArgs& args, std::ostream& out) {
  const AblationSuite suite = ParseSuite(args.suite);
  const fs::path spec_path =
      fs::is_directory(args.bundle) ? fs::path(args.bundle) / "scene_spec.txt" : fs::path(args.bundle);
  const SynthConfig base = LoadSynthConfig(spec_path);
  RunConfig config;
  if (!args.config_file.empty()) config = LoadRunConfig(args.config_file);
  if (args.threads) config.threads = *args.threads;
  ExperimentOptions options;
  options.num_seeds = args.seeds;
  options.first_seed = args.seed;
  options.localizer = config.localizer;
  options.localizer.num_threads = ResolveThreads(config.threads);
  out << FormatExperimentTable(RunSuite(suite, base, options));
  return kExitOk;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Map-free visual localization by anchored motion averaging", "anchorloc"};
  app.require_subcommand(1);
  const std::string keys = "\nRun configuration keys (config files hold 'key value' lines):\n" +
                           ConfigHelp();
  app.footer(keys);

  LocalizeArgs localize;
  CLI::App* cmd_localize = app.add_subcommand("localize", "Localize the queries of a bundle");
  cmd_localize->add_option("problem_dir", localize.problem_dir, "Problem bundle directory")
      ->required();
  cmd_localize->add_option("config_file", localize.config_file, "Run configuration file");
  cmd_localize->add_option("--seed", localize.seed, "Seed (overrides the config)");
  cmd_localize->add_option("--mode", localize.mode, "independent | colocalize | rig");
  cmd_localize->add_option("--out", localize.out, "Report path (.csv selects CSV)");
  cmd_localize->add_option("--ground-truth", localize.ground_truth,
                           "Query poses; adds per-stage errors to the report");
  cmd_localize->add_option("--threads", localize.threads, "Worker threads (0: all cores)");
  cmd_localize->footer(keys);

  SynthArgs synth;
  CLI::App* cmd_synth = app.add_subcommand("synth", "Generate a synthetic bundle");
  cmd_synth->add_option("spec_file", synth.spec_file, "Scene spec file")->required();
  cmd_synth->add_option("--out", synth.out, "Output bundle directory")->required();
  cmd_synth->add_option("--seed", synth.seed, "Scene seed (overrides the spec file)");
  std::string spec_keys = "\nScene spec keys with defaults:\n";
  std::istringstream spec_lines(FormatSynthConfig(SynthConfig{}));
  for (std::string line; std::getline(spec_lines, line);) spec_keys += "  " + line + "\n";
  cmd_synth->footer(spec_keys);

  EvalArgs eval;
  CLI::App* cmd_eval = app.add_subcommand("eval", "Evaluate a report against ground truth");
  cmd_eval->add_option("report", eval.report, "Report file (text or CSV)")->required();
  cmd_eval->add_option("ground_truth", eval.ground_truth, "Query pose file")->required();
  cmd_eval->add_option("--meters-per-unit", eval.meters_per_unit,
                       "Scene scale; enables centimeter figures");

  AblateArgs ablate;
  CLI::App* cmd_ablate = app.add_subcommand("ablate", "Run a synthetic ablation suite");
  cmd_ablate->add_option("bundle", ablate.bundle, "Synthetic bundle directory or scene spec file")
      ->required();
  cmd_ablate->add_option("--suite", ablate.suite,
                         "translation | postopt | noise | topk | multiquery | rig")
      ->required();
  cmd_ablate->add_option("--seeds", ablate.seeds, "Number of seeded scenes")
      ->check(CLI::PositiveNumber);
  cmd_ablate->add_option("--seed", ablate.seed, "First solver seed");
  cmd_ablate->add_option("--config", ablate.config_file, "Run configuration file");
  cmd_ablate->add_option("--threads", ablate.threads, "Worker threads (0: all cores)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitHardError;
  }

  try {
    if (*cmd_localize) return Localize(localize, out);
    if (*cmd_synth) return Synth(synth, out);
    if (*cmd_eval) return Eval(eval, out);
    if (*cmd_ablate) return Ablate(ablate, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitHardError;
  }
  return kExitHardError;
}

}  // namespace anchorloc
