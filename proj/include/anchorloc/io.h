#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "anchorloc/evaluation.h"
#include "anchorloc/geometry.h"
#include "anchorloc/pipeline.h"
#include "anchorloc/problem.h"
#include "anchorloc/types.h"

namespace anchorloc {

// Lexical rules shared by every text format: UTF-8, tokens separated by
// spaces or tabs, '#' starts a comment that runs to the end of the line,
// blank lines are ignored. Reals are written with 17 significant digits and
// NaN or Inf are rejected on input.
struct TextLine {
  int number = 0;  // 1-based line number in the file
  std::vector<std::string> tokens;
};

// Splits `content` into non-empty token lines.
std::vector<TextLine> TokenizeText(std::string_view content);
// Both throw kMissingFile when the file does not exist.
std::string ReadFileContent(const std::filesystem::path& path);
std::vector<TextLine> ReadTextFile(const std::filesystem::path& path);
// Throws kIoFailure.
void WriteTextFile(const std::filesystem::path& path, const std::string& content);

std::string FormatDouble(double value);
// Throw kParseError naming file and line.
double ParseDouble(std::string_view token, const std::string& file, int line);
long long ParseInteger(std::string_view token, const std::string& file, int line);
ImageId ParseImageId(std::string_view token, const std::string& file, int line);
bool ParseBool(std::string_view token, const std::string& file, int line);
[[noreturn]] void ThrowParseError(const std::string& file, int line, const std::string& reason);

// Problem bundle layout:
//   database_poses.txt       <id> qw qx qy qz tx ty tz   (world-to-camera)
//   database_intrinsics.txt  <id> fx fy cx cy
//   query_intrinsics.txt     <id> fx fy cx cy
//   pairs.txt                <query_id> <database_id>
//   query_query_pairs.txt    <query_id> <query_id>           (optional)
//   rig.txt                  <query_id> <rig_id> qw qx qy qz tx ty tz
//                            (cam_from_rig, optional)
//   keypoints/<id>.txt       x y                              (pixels)
//   matches/<A>__<B>.txt     header "<A> <B> <n>", then n lines "kptA kptB"
// Keypoint indices are the 0-based order of the lines of keypoints/<id>.txt.
// Every listed pair needs a matches file.
LocalizationProblem LoadProblem(const std::filesystem::path& dir);
// Writes the layout above (creating `dir`); the same problem always gives
// byte-identical files.
void SaveProblem(const LocalizationProblem& problem, const std::filesystem::path& dir);

// Pose files: one "<id> qw qx qy qz tx ty tz" line per image, ordered by id.
std::map<ImageId, Posed> LoadPoses(const std::filesystem::path& path);
void SavePoses(const std::map<ImageId, Posed>& poses, const std::filesystem::path& path);

enum class ReportFormat { kText, kCsv };

// .csv selects kCsv, anything else kText.
ReportFormat ReportFormatForPath(const std::filesystem::path& path);

// One query row of a saved report. Stage estimates and errors are absent
// when the stage did not complete or no ground truth was given.
struct ReportRow {
  ImageId id = 0;
  std::optional<Posed> pose;
  QueryFlags flags;
  int num_edges = 0;
  int num_gated = 0;
  TrackStats tracks;
  std::optional<Rotation3d> rotation_stage;
  std::optional<Posed> translation_stage;
  std::optional<Posed> postopt_stage;
  std::optional<double> rotation_stage_error_deg;
  std::optional<PoseErrors> translation_stage_error;
  std::optional<PoseErrors> postopt_stage_error;
  std::optional<PoseErrors> final_error;
};

struct ReportTable {
  std::vector<ReportRow> rows;  // ordered by query id
};

// Column names, in file order. Missing values are written as "-".
const std::vector<std::string>& ReportColumns();

ReportTable MakeReportTable(const SolveReport& report,
                            const std::map<ImageId, Posed>* ground_truth = nullptr);

// kCsv: a header row of ReportColumns() and comma-separated rows.
// kText: a "# <columns>" comment line and space-aligned rows.
std::string FormatReportTable(const ReportTable& table, ReportFormat format);
void SaveReport(const SolveReport& report, const std::filesystem::path& path, ReportFormat format,
                const std::map<ImageId, Posed>* ground_truth = nullptr);
void SaveReportTable(const ReportTable& table, const std::filesystem::path& path,
                     ReportFormat format);
// Detects the format from the first line.
ReportTable LoadReport(const std::filesystem::path& path);

// Per-edge table: source, target, kind, matches, inliers, gated, residual
// angles and failure reason.
std::string FormatEdgeTable(const SolveReport& report, ReportFormat format);

}  // namespace anchorloc
