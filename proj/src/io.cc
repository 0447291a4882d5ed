#include "anchorloc/io.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "anchorloc/error.h"

namespace anchorloc {

namespace fs = std::filesystem;

namespace {

constexpr char kMissing[] = "-";

std::string FileName(const fs::path& path) { return path.string(); }

std::string Join(const std::vector<std::string>& tokens, char sep) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += sep;
    out += tokens[i];
  }
  return out;
}

void ExpectFields(const TextLine& line, size_t n, const std::string& file) {
  if (line.tokens.size() != n) {
    ThrowParseError(file, line.number,
                    "expected " + std::to_string(n) + " fields, got " +
                        std::to_string(line.tokens.size()));
  }
}

Rotation3d ParseQuaternion(const std::vector<std::string>& tokens, size_t first,
                           const std::string& file, int line) {
  const double w = ParseDouble(tokens[first], file, line);
  const double x = ParseDouble(tokens[first + 1], file, line);
  const double y = ParseDouble(tokens[first + 2], file, line);
  const double z = ParseDouble(tokens[first + 3], file, line);
  if (!(std::sqrt(w * w + x * x + y * y + z * z) > 1e-12)) {
    ThrowParseError(file, line, "zero quaternion");
  }
  return Rotation3d::FromStoredCoefficients(w, x, y, z);
}

Posed ParsePose(const std::vector<std::string>& tokens, size_t first, const std::string& file,
                int line) {
  const Rotation3d r = ParseQuaternion(tokens, first, file, line);
  const Eigen::Vector3d t(ParseDouble(tokens[first + 4], file, line),
                          ParseDouble(tokens[first + 5], file, line),
                          ParseDouble(tokens[first + 6], file, line));
  return Posed(r, t);
}

void AppendRotation(const Rotation3d& r, std::vector<std::string>& out) {
  out.push_back(FormatDouble(r.w()));
  out.push_back(FormatDouble(r.x()));
  out.push_back(FormatDouble(r.y()));
  out.push_back(FormatDouble(r.z()));
}

void AppendPose(const Posed& p, std::vector<std::string>& out) {
  AppendRotation(p.rotation, out);
  for (int k = 0; k < 3; ++k) out.push_back(FormatDouble(p.translation[k]));
}

std::string PoseLine(ImageId id, const Posed& p) {
  std::vector<std::string> tokens = {std::to_string(id)};
  AppendPose(p, tokens);
  return Join(tokens, ' ') + "\n";
}

std::string IntrinsicsLine(ImageId id, const CameraIntrinsicsd& k) {
  return std::to_string(id) + " " + FormatDouble(k.fx) + " " + FormatDouble(k.fy) + " " +
         FormatDouble(k.cx) + " " + FormatDouble(k.cy) + "\n";
}

std::map<ImageId, CameraIntrinsicsd> LoadIntrinsics(const fs::path& path) {
  const std::string file = FileName(path);
  std::map<ImageId, CameraIntrinsicsd> out;
  for (const TextLine& line : ReadTextFile(path)) {
    ExpectFields(line, 5, file);
    const ImageId id = ParseImageId(line.tokens[0], file, line.number);
    const double fx = ParseDouble(line.tokens[1], file, line.number);
    const double fy = ParseDouble(line.tokens[2], file, line.number);
    const double cx = ParseDouble(line.tokens[3], file, line.number);
    const double cy = ParseDouble(line.tokens[4], file, line.number);
    if (!(fx > 0.0) || !(fy > 0.0)) ThrowParseError(file, line.number, "non-positive focal length");
    if (!out.emplace(id, CameraIntrinsicsd(fx, fy, cx, cy)).second) {
      ThrowParseError(file, line.number, "duplicate image id " + std::to_string(id));
    }
  }
  return out;
}

std::vector<ImagePair> LoadPairs(const fs::path& path) {
  const std::string file = FileName(path);
  std::vector<ImagePair> out;
  for (const TextLine& line : ReadTextFile(path)) {
    ExpectFields(line, 2, file);
    out.emplace_back(ParseImageId(line.tokens[0], file, line.number),
                     ParseImageId(line.tokens[1], file, line.number));
  }
  return out;
}

std::string PairsContent(const std::vector<ImagePair>& pairs) {
  std::string out;
  for (const auto& [a, b] : pairs) out += std::to_string(a) + " " + std::to_string(b) + "\n";
  return out;
}

std::string MatchesName(const ImagePair& pair) {
  return std::to_string(pair.first) + "__" + std::to_string(pair.second) + ".txt";
}

// Parses "<A>__<B>.txt"; nullopt for other names.
std::optional<ImagePair> ParseMatchesName(const std::string& name) {
  const size_t sep = name.find("__");
  if (sep == std::string::npos || name.size() < 4 || name.substr(name.size() - 4) != ".txt") {
    return std::nullopt;
  }
  const std::string a = name.substr(0, sep);
  const std::string b = name.substr(sep + 2, name.size() - 4 - sep - 2);
  try {
    return ImagePair(ParseImageId(a, name, 0), ParseImageId(b, name, 0));
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::vector<KeypointMatch> LoadMatches(const fs::path& path, const ImagePair& pair) {
  const std::string file = FileName(path);
  const std::vector<TextLine> lines = ReadTextFile(path);
  if (lines.empty()) ThrowParseError(file, 1, "missing header line");
  const TextLine& header = lines.front();
  ExpectFields(header, 3, file);
  const ImageId a = ParseImageId(header.tokens[0], file, header.number);
  const ImageId b = ParseImageId(header.tokens[1], file, header.number);
  const long long n = ParseInteger(header.tokens[2], file, header.number);
  if (a != pair.first || b != pair.second) {
    ThrowParseError(file, header.number, "header names a different pair than the file name");
  }
  if (n < 0 || static_cast<size_t>(n) != lines.size() - 1) {
    ThrowParseError(file, header.number,
                    "header announces " + header.tokens[2] + " matches, file has " +
                        std::to_string(lines.size() - 1));
  }
  std::vector<KeypointMatch> out;
  out.reserve(lines.size() - 1);
  for (size_t i = 1; i < lines.size(); ++i) {
    ExpectFields(lines[i], 2, file);
    const long long first = ParseInteger(lines[i].tokens[0], file, lines[i].number);
    const long long second = ParseInteger(lines[i].tokens[1], file, lines[i].number);
    if (first < 0 || second < 0 || first > std::numeric_limits<int>::max() ||
        second > std::numeric_limits<int>::max()) {
      ThrowParseError(file, lines[i].number, "keypoint index out of range");
    }
    out.push_back({static_cast<int>(first), static_cast<int>(second)});
  }
  return out;
}

std::vector<Eigen::Vector2d> LoadKeypoints(const fs::path& path) {
  const std::string file = FileName(path);
  std::vector<Eigen::Vector2d> out;
  for (const TextLine& line : ReadTextFile(path)) {
    ExpectFields(line, 2, file);
    out.emplace_back(ParseDouble(line.tokens[0], file, line.number),
                     ParseDouble(line.tokens[1], file, line.number));
  }
  return out;
}

// Regular files of `dir` sorted by name; empty when the directory is absent.
std::vector<fs::path> ListFiles(const fs::path& dir) {
  std::vector<fs::path> out;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return out;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.is_regular_file()) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void MakeDirectories(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoFailure, "cannot create " + FileName(dir) + ": " + ec.message());
}

// Report cells.

std::string FlagCell(bool value) { return value ? "1" : "0"; }

void AppendOptionalRotation(const std::optional<Rotation3d>& r, std::vector<std::string>& out) {
  if (r) {
    AppendRotation(*r, out);
  } else {
    out.insert(out.end(), 4, kMissing);
  }
}

void AppendOptionalPose(const std::optional<Posed>& p, std::vector<std::string>& out) {
  if (p) {
    AppendPose(*p, out);
  } else {
    out.insert(out.end(), 7, kMissing);
  }
}

void AppendOptionalErrors(const std::optional<PoseErrors>& e, std::vector<std::string>& out) {
  if (e) {
    out.push_back(FormatDouble(e->position));
    out.push_back(FormatDouble(e->rotation_deg));
  } else {
    out.insert(out.end(), 2, kMissing);
  }
}

std::vector<std::string> RowCells(const ReportRow& row) {
  std::vector<std::string> c = {std::to_string(row.id)};
  AppendOptionalPose(row.pose, c);
  c.push_back(FlagCell(row.flags.converged));
  c.push_back(FlagCell(row.flags.scale_unobservable));
  c.push_back(FlagCell(row.flags.degenerate_geometry));
  c.push_back(FlagCell(row.flags.no_tracks));
  c.push_back(FlagCell(row.flags.disconnected));
  c.push_back(std::to_string(row.num_edges));
  c.push_back(std::to_string(row.num_gated));
  c.push_back(std::to_string(row.tracks.num_tracks));
  c.push_back(std::to_string(row.tracks.num_anchored));
  c.push_back(std::to_string(row.tracks.num_triangulated));
  c.push_back(std::to_string(row.tracks.num_rejected));
  c.push_back(std::to_string(row.tracks.num_inlier_observations));
  c.push_back(std::to_string(row.tracks.num_outlier_observations));
  AppendOptionalRotation(row.rotation_stage, c);
  AppendOptionalPose(row.translation_stage, c);
  AppendOptionalPose(row.postopt_stage, c);
  c.push_back(row.rotation_stage_error_deg ? FormatDouble(*row.rotation_stage_error_deg) : kMissing);
  AppendOptionalErrors(row.translation_stage_error, c);
  AppendOptionalErrors(row.postopt_stage_error, c);
  AppendOptionalErrors(row.final_error, c);
  return c;
}

// Sequential reader over the cells of one report row.
class CellReader {
 public:
  CellReader(const std::vector<std::string>& cells, const std::string& file, int line)
      : cells_(cells), file_(file), line_(line) {}

  bool NextMissing(int n) const {
    bool all = true;
    bool any = false;
    for (int k = 0; k < n; ++k) {
      const bool missing = cells_[pos_ + k] == kMissing;
      all = all && missing;
      any = any || missing;
    }
    if (any && !all) ThrowParseError(file_, line_, "partially missing value group");
    return all;
  }

  ImageId Id() { return ParseImageId(cells_[pos_++], file_, line_); }

  int Int() {
    const long long v = ParseInteger(cells_[pos_++], file_, line_);
    if (v < 0 || v > std::numeric_limits<int>::max()) ThrowParseError(file_, line_, "count out of range");
    return static_cast<int>(v);
  }

  bool Flag() {
    const std::string& c = cells_[pos_++];
    if (c != "0" && c != "1") ThrowParseError(file_, line_, "flag must be 0 or 1, got '" + c + "'");
    return c == "1";
  }

  std::optional<double> Real() {
    if (NextMissing(1)) {
      ++pos_;
      return std::nullopt;
    }
    return ParseDouble(cells_[pos_++], file_, line_);
  }

  std::optional<Rotation3d> Rotation() {
    if (NextMissing(4)) {
      pos_ += 4;
      return std::nullopt;
    }
    const Rotation3d r = ParseQuaternion(cells_, pos_, file_, line_);
    pos_ += 4;
    return r;
  }

  std::optional<Posed> Pose() {
    if (NextMissing(7)) {
      pos_ += 7;
      return std::nullopt;
    }
    const Posed p = ParsePose(cells_, pos_, file_, line_);
    pos_ += 7;
    return p;
  }

  std::optional<PoseErrors> Errors() {
    if (NextMissing(2)) {
      pos_ += 2;
      return std::nullopt;
    }
    PoseErrors e;
    e.position = ParseDouble(cells_[pos_++], file_, line_);
    e.rotation_deg = ParseDouble(cells_[pos_++], file_, line_);
    return e;
  }

 private:
  const std::vector<std::string>& cells_;
  const std::string& file_;
  int line_;
  size_t pos_ = 0;
};

ReportRow ParseRow(const std::vector<std::string>& cells, const std::string& file, int line) {
  if (cells.size() != ReportColumns().size()) {
    ThrowParseError(file, line,
                    "expected " + std::to_string(ReportColumns().size()) + " fields, got " +
                        std::to_string(cells.size()));
  }
  CellReader r(cells, file, line);
  ReportRow row;
  row.id = r.Id();
  row.pose = r.Pose();
  row.flags.converged = r.Flag();
  row.flags.scale_unobservable = r.Flag();
  row.flags.degenerate_geometry = r.Flag();
  row.flags.no_tracks = r.Flag();
  row.flags.disconnected = r.Flag();
  row.num_edges = r.Int();
  row.num_gated = r.Int();
  row.tracks.num_tracks = r.Int();
  row.tracks.num_anchored = r.Int();
  row.tracks.num_triangulated = r.Int();
  row.tracks.num_rejected = r.Int();
  row.tracks.num_inlier_observations = r.Int();
  row.tracks.num_outlier_observations = r.Int();
  row.rotation_stage = r.Rotation();
  row.translation_stage = r.Pose();
  row.postopt_stage = r.Pose();
  row.rotation_stage_error_deg = r.Real();
  row.translation_stage_error = r.Errors();
  row.postopt_stage_error = r.Errors();
  row.final_error = r.Errors();
  return row;
}

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string FormatTable(const std::vector<std::string>& header,
                        const std::vector<std::vector<std::string>>& rows, ReportFormat format) {
  std::string out;
  if (format == ReportFormat::kCsv) {
    out += Join(header, ',') + "\n";
    for (const auto& row : rows) out += Join(row, ',') + "\n";
    return out;
  }
  // The header is a comment so the file stays readable by the lexer; its
  // first cell carries the "# " prefix when computing widths.
  std::vector<size_t> width(header.size(), 0);
  for (size_t k = 0; k < header.size(); ++k) width[k] = header[k].size() + (k == 0 ? 2 : 0);
  for (const auto& row : rows) {
    for (size_t k = 0; k < row.size(); ++k) width[k] = std::max(width[k], row[k].size());
  }
  auto emit = [&](const std::vector<std::string>& cells, bool is_header) {
    std::string line;
    for (size_t k = 0; k < cells.size(); ++k) {
      std::string cell = (is_header && k == 0) ? "# " + cells[k] : cells[k];
      if (k > 0) line += ' ';
      if (k + 1 < cells.size()) cell.resize(width[k], ' ');
      line += cell;
    }
    out += line + "\n";
  };
  emit(header, true);
  for (const auto& row : rows) emit(row, false);
  return out;
}

}  // namespace

// Lexical layer.

std::vector<TextLine> TokenizeText(std::string_view content) {
  std::vector<TextLine> out;
  int number = 0;
  size_t start = 0;
  while (start <= content.size()) {
    size_t end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    ++number;
    std::string_view line = content.substr(start, end - start);
    const size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    TextLine parsed;
    parsed.number = number;
    size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
      size_t j = i;
      while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
      if (j > i) parsed.tokens.emplace_back(line.substr(i, j - i));
      i = j;
    }
    if (!parsed.tokens.empty()) out.push_back(std::move(parsed));
    if (end == content.size()) break;
    start = end + 1;
  }
  return out;
}

std::string ReadFileContent(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    throw Error(ErrorCode::kMissingFile, "missing file " + FileName(path));
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + FileName(path));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<TextLine> ReadTextFile(const fs::path& path) {
  return TokenizeText(ReadFileContent(path));
}

void WriteTextFile(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot open " + FileName(path) + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw Error(ErrorCode::kIoFailure, "failed writing " + FileName(path));
}

std::string FormatDouble(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

void ThrowParseError(const std::string& file, int line, const std::string& reason) {
  throw Error(ErrorCode::kParseError, file + ":" + std::to_string(line) + ": " + reason);
}

double ParseDouble(std::string_view token, const std::string& file, int line) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    ThrowParseError(file, line, "invalid number '" + std::string(token) + "'");
  }
  if (!std::isfinite(value)) {
    ThrowParseError(file, line, "non-finite number '" + std::string(token) + "'");
  }
  return value;
}

long long ParseInteger(std::string_view token, const std::string& file, int line) {
  long long value = 0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    ThrowParseError(file, line, "invalid integer '" + std::string(token) + "'");
  }
  return value;
}

ImageId ParseImageId(std::string_view token, const std::string& file, int line) {
  const long long value = ParseInteger(token, file, line);
  if (value < 0 || value > std::numeric_limits<ImageId>::max()) {
    ThrowParseError(file, line, "image id out of range '" + std::string(token) + "'");
  }
  return static_cast<ImageId>(value);
}

bool ParseBool(std::string_view token, const std::string& file, int line) {
  if (token == "true" || token == "1") return true;
  if (token == "false" || token == "0") return false;
  ThrowParseError(file, line, "invalid boolean '" + std::string(token) + "'");
}

// Poses.

std::map<ImageId, Posed> LoadPoses(const fs::path& path) {
  const std::string file = FileName(path);
  std::map<ImageId, Posed> out;
  for (const TextLine& line : ReadTextFile(path)) {
    ExpectFields(line, 8, file);
    const ImageId id = ParseImageId(line.tokens[0], file, line.number);
    if (!out.emplace(id, ParsePose(line.tokens, 1, file, line.number)).second) {
      ThrowParseError(file, line.number, "duplicate image id " + std::to_string(id));
    }
  }
  return out;
}

void SavePoses(const std::map<ImageId, Posed>& poses, const fs::path& path) {
  std::string content;
  for (const auto& [id, pose] : poses) content += PoseLine(id, pose);
  WriteTextFile(path, content);
}

// Problem bundles.

LocalizationProblem LoadProblem(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw Error(ErrorCode::kMissingFile, "missing bundle directory " + FileName(dir));
  }
  LocalizationProblem problem;
  const std::map<ImageId, Posed> poses = LoadPoses(dir / "database_poses.txt");
  const std::map<ImageId, CameraIntrinsicsd> db_intrinsics =
      LoadIntrinsics(dir / "database_intrinsics.txt");
  for (const auto& [id, pose] : poses) {
    const auto k = db_intrinsics.find(id);
    if (k == db_intrinsics.end()) {
      throw Error(ErrorCode::kDanglingReference,
                  "database image " + std::to_string(id) + " has no intrinsics");
    }
    problem.database[id] = {pose, k->second};
  }
  for (const auto& [id, k] : db_intrinsics) {
    if (!poses.count(id)) {
      throw Error(ErrorCode::kDanglingReference,
                  "intrinsics reference unknown database image " + std::to_string(id));
    }
  }
  problem.queries = LoadIntrinsics(dir / "query_intrinsics.txt");
  problem.retrieval_pairs = LoadPairs(dir / "pairs.txt");
  if (fs::exists(dir / "query_query_pairs.txt", ec)) {
    problem.query_query_pairs = LoadPairs(dir / "query_query_pairs.txt");
  }
  if (fs::exists(dir / "rig.txt", ec)) {
    const fs::path path = dir / "rig.txt";
    const std::string file = FileName(path);
    for (const TextLine& line : ReadTextFile(path)) {
      ExpectFields(line, 9, file);
      const ImageId q = ParseImageId(line.tokens[0], file, line.number);
      RigMember member;
      member.rig = ParseImageId(line.tokens[1], file, line.number);
      member.cam_from_rig = ParsePose(line.tokens, 2, file, line.number);
      if (!problem.rig.emplace(q, member).second) {
        ThrowParseError(file, line.number, "duplicate rig member " + std::to_string(q));
      }
    }
  }
  for (const fs::path& path : ListFiles(dir / "keypoints")) {
    const std::string stem = path.stem().string();
    if (path.extension() != ".txt") continue;
    const ImageId id = ParseImageId(stem, FileName(path), 0);
    problem.keypoints[id] = LoadKeypoints(path);
  }
  for (const fs::path& path : ListFiles(dir / "matches")) {
    const std::optional<ImagePair> pair = ParseMatchesName(path.filename().string());
    if (!pair) continue;
    problem.matches[*pair] = LoadMatches(path, *pair);
  }
  auto require_matches = [&](const ImagePair& pair) {
    if (!problem.matches.count(pair)) {
      throw Error(ErrorCode::kMissingFile,
                  "missing file " + FileName(dir / "matches" / MatchesName(pair)));
    }
  };
  for (const ImagePair& pair : problem.retrieval_pairs) require_matches(pair);
  for (const ImagePair& pair : problem.query_query_pairs) require_matches(pair);
  CheckProblem(problem);
  return problem;
}

void SaveProblem(const LocalizationProblem& problem, const fs::path& dir) {
  MakeDirectories(dir);
  std::string poses;
  std::string db_intrinsics;
  for (const auto& [id, image] : problem.database) {
    poses += PoseLine(id, image.pose);
    db_intrinsics += IntrinsicsLine(id, image.intrinsics);
  }
  WriteTextFile(dir / "database_poses.txt", poses);
  WriteTextFile(dir / "database_intrinsics.txt", db_intrinsics);
  std::string query_intrinsics;
  for (const auto& [id, k] : problem.queries) query_intrinsics += IntrinsicsLine(id, k);
  WriteTextFile(dir / "query_intrinsics.txt", query_intrinsics);
  WriteTextFile(dir / "pairs.txt", PairsContent(problem.retrieval_pairs));

  std::error_code ec;
  if (!problem.query_query_pairs.empty()) {
    WriteTextFile(dir / "query_query_pairs.txt", PairsContent(problem.query_query_pairs));
  } else {
    fs::remove(dir / "query_query_pairs.txt", ec);
  }
  if (!problem.rig.empty()) {
    std::string rig;
    for (const auto& [q, member] : problem.rig) {
      std::vector<std::string> tokens = {std::to_string(q), std::to_string(member.rig)};
      AppendPose(member.cam_from_rig, tokens);
      rig += Join(tokens, ' ') + "\n";
    }
    WriteTextFile(dir / "rig.txt", rig);
  } else {
    fs::remove(dir / "rig.txt", ec);
  }

  // Stale files from an earlier save would otherwise be picked up on load.
  fs::remove_all(dir / "keypoints", ec);
  fs::remove_all(dir / "matches", ec);
  MakeDirectories(dir / "keypoints");
  MakeDirectories(dir / "matches");
  for (const auto& [id, kps] : problem.keypoints) {
    std::string content;
    for (const Eigen::Vector2d& x : kps) {
      content += FormatDouble(x.x()) + " " + FormatDouble(x.y()) + "\n";
    }
    WriteTextFile(dir / "keypoints" / (std::to_string(id) + ".txt"), content);
  }
  for (const auto& [pair, list] : problem.matches) {
    std::string content = std::to_string(pair.first) + " " + std::to_string(pair.second) + " " +
                          std::to_string(list.size()) + "\n";
    for (const KeypointMatch& m : list) {
      content += std::to_string(m.first) + " " + std::to_string(m.second) + "\n";
    }
    WriteTextFile(dir / "matches" / MatchesName(pair), content);
  }
}

// Reports.

ReportFormat ReportFormatForPath(const fs::path& path) {
  return path.extension() == ".csv" ? ReportFormat::kCsv : ReportFormat::kText;
}

const std::vector<std::string>& ReportColumns() {
  static const std::vector<std::string> columns = {
      "query_id",
      "qw", "qx", "qy", "qz", "tx", "ty", "tz",
      "converged", "scale_unobservable", "degenerate_geometry", "no_tracks", "disconnected",
      "num_edges", "num_gated",
      "num_tracks", "num_anchored_tracks", "num_triangulated", "num_rejected_tracks",
      "num_inlier_observations", "num_outlier_observations",
      "rotavg_qw", "rotavg_qx", "rotavg_qy", "rotavg_qz",
      "transavg_qw", "transavg_qx", "transavg_qy", "transavg_qz",
      "transavg_tx", "transavg_ty", "transavg_tz",
      "postopt_qw", "postopt_qx", "postopt_qy", "postopt_qz",
      "postopt_tx", "postopt_ty", "postopt_tz",
      "rotavg_rot_err_deg",
      "transavg_pos_err", "transavg_rot_err_deg",
      "postopt_pos_err", "postopt_rot_err_deg",
      "final_pos_err", "final_rot_err_deg",
  };
  return columns;
}

ReportTable MakeReportTable(const SolveReport& report,
                            const std::map<ImageId, Posed>* ground_truth) {
  ReportTable table;
  for (const QueryReport& q : report.queries) {
    ReportRow row;
    row.id = q.id;
    row.pose = q.pose;
    row.flags = q.flags;
    row.num_edges = static_cast<int>(q.edges.size());
    row.num_gated = static_cast<int>(std::count_if(
        q.edges.begin(), q.edges.end(), [&](int e) { return report.edges[e].gated; }));
    row.tracks = q.tracks;
    row.rotation_stage = q.rotation_stage;
    row.translation_stage = q.translation_stage;
    row.postopt_stage = q.postopt_stage;
    if (ground_truth) {
      const auto truth = ground_truth->find(q.id);
      if (truth != ground_truth->end()) {
        if (q.rotation_stage) {
          row.rotation_stage_error_deg = RotationErrorDeg(*q.rotation_stage, truth->second.rotation);
        }
        if (q.translation_stage) {
          row.translation_stage_error = ComputePoseErrors(*q.translation_stage, truth->second);
        }
        if (q.postopt_stage) {
          row.postopt_stage_error = ComputePoseErrors(*q.postopt_stage, truth->second);
        }
        if (q.pose) row.final_error = ComputePoseErrors(*q.pose, truth->second);
      }
    }
    table.rows.push_back(std::move(row));
  }
  std::sort(table.rows.begin(), table.rows.end(),
            [](const ReportRow& a, const ReportRow& b) { return a.id < b.id; });
  return table;
}

std::string FormatReportTable(const ReportTable& table, ReportFormat format) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(table.rows.size());
  for (const ReportRow& row : table.rows) rows.push_back(RowCells(row));
  return FormatTable(ReportColumns(), rows, format);
}

void SaveReportTable(const ReportTable& table, const fs::path& path, ReportFormat format) {
  WriteTextFile(path, FormatReportTable(table, format));
}

void SaveReport(const SolveReport& report, const fs::path& path, ReportFormat format,
                const std::map<ImageId, Posed>* ground_truth) {
  SaveReportTable(MakeReportTable(report, ground_truth), path, format);
}

ReportTable LoadReport(const fs::path& path) {
  const std::string file = FileName(path);
  const std::string content = ReadFileContent(path);
  ReportTable table;
  const std::string csv_header = Join(ReportColumns(), ',');
  if (content.compare(0, csv_header.size(), csv_header) == 0) {
    std::istringstream in(content);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
      ++number;
      if (number == 1) {
        if (line != csv_header) ThrowParseError(file, number, "unexpected CSV header");
        continue;
      }
      if (line.empty()) continue;
      table.rows.push_back(ParseRow(SplitCsv(line), file, number));
    }
  } else {
    for (const TextLine& line : TokenizeText(content)) {
      table.rows.push_back(ParseRow(line.tokens, file, line.number));
    }
  }
  for (size_t i = 1; i < table.rows.size(); ++i) {
    if (table.rows[i - 1].id >= table.rows[i].id) {
      throw Error(ErrorCode::kParseError, file + ": rows must be ordered by unique query id");
    }
  }
  return table;
}

std::string FormatEdgeTable(const SolveReport& report, ReportFormat format) {
  const std::vector<std::string> header = {
      "source", "target", "kind", "num_matches", "num_inliers", "gated",
      "rotation_residual_deg", "direction_residual_deg", "failure"};
  auto real = [](double v) { return std::isfinite(v) ? FormatDouble(v) : std::string(kMissing); };
  std::vector<std::vector<std::string>> rows;
  for (const EdgeRecord& e : report.edges) {
    std::string failure = e.failure.empty() ? kMissing : e.failure;
    // Keep the failure message a single cell in both formats.
    std::replace_if(failure.begin(), failure.end(),
                    [](char c) { return c == ' ' || c == ',' || c == '\t' || c == '#'; }, '_');
    rows.push_back({std::to_string(e.source), std::to_string(e.target),
                    std::string(EdgeKindName(e.kind)), std::to_string(e.num_matches),
                    std::to_string(e.num_inliers), FlagCell(e.gated),
                    real(e.rotation_residual_deg), real(e.direction_residual_deg), failure});
  }
  return FormatTable(header, rows, format);
}

}  // namespace anchorloc
