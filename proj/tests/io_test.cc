#include "anchorloc/io.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <string>

#include <gtest/gtest.h>

#include "anchorloc/error.h"
#include "anchorloc/random.h"
#include "anchorloc/synthetic.h"

namespace anchorloc {
namespace {

namespace fs = std::filesystem;

class IoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("anchorloc_io_" + std::string(::testing::UnitTest::GetInstance()
                                              ->current_test_info()
                                              ->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  void Write(const fs::path& relative, const std::string& content) {
    fs::create_directories((dir_ / relative).parent_path());
    std::ofstream(dir_ / relative) << content;
  }

  // One database image (1), one query (2) and one pair with 5 matches.
  void WriteMinimalBundle() {
    Write("database_poses.txt", "# id qw qx qy qz tx ty tz\n1 1 0 0 0 0 0 0\n");
    Write("database_intrinsics.txt", "1 500 500 320 240\n");
    Write("query_intrinsics.txt", "2\t500 500 320 240  # query\n");
    Write("pairs.txt", "2 1\n");
    std::string keypoints;
    std::string matches = "2 1 5\n";
    for (int i = 0; i < 5; ++i) {
      keypoints += std::to_string(10 * i) + " " + std::to_string(20 * i) + "\n";
      matches += std::to_string(i) + " " + std::to_string(4 - i) + "\n";
    }
    Write("keypoints/1.txt", keypoints);
    Write("keypoints/2.txt", keypoints);
    Write("matches/2__1.txt", matches);
  }

  ErrorCode LoadError() {
    try {
      LoadProblem(dir_);
    } catch (const Error& e) {
      message_ = e.what();
      return e.code();
    }
    ADD_FAILURE() << "LoadProblem did not throw";
    return ErrorCode::kInvalidArgument;
  }

  fs::path dir_;
  std::string message_;
};

std::map<std::string, std::string> ReadTree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) {
      out[fs::relative(entry.path(), dir).generic_string()] = ReadFileContent(entry.path());
    }
  }
  return out;
}

LocalizationProblem SmallProblem(uint64_t seed, bool fragments) {
  SceneSpec spec;
  spec.n_database = 6;
  spec.n_points = 150;
  spec.n_queries = 4;
  spec.fragment_length = fragments ? 2 : 1;
  spec.pixel_noise_sigma = 0.5;
  spec.match_outlier_rate = 0.2;
  spec.seed = seed;
  return MakeProblem(GenerateScene(spec),
                     {.top_k = 4, .query_query_pairs = fragments, .rig = fragments});
}

TEST_F(IoTest, MinimalBundleLoads) {
  WriteMinimalBundle();
  const LocalizationProblem problem = LoadProblem(dir_);
  ASSERT_EQ(problem.database.size(), 1u);
  ASSERT_EQ(problem.queries.size(), 1u);
  EXPECT_EQ(problem.retrieval_pairs, (std::vector<ImagePair>{{2, 1}}));
  const auto& matches = problem.matches.at({2, 1});
  ASSERT_EQ(matches.size(), 5u);
  EXPECT_EQ(matches[1], (KeypointMatch{1, 3}));
  EXPECT_EQ(problem.keypoints.at(2)[3], Eigen::Vector2d(30, 60));
  EXPECT_EQ(problem.queries.at(2).fx, 500.0);
}

TEST_F(IoTest, DanglingPair) {
  WriteMinimalBundle();
  Write("pairs.txt", "2 1\n2 9\n");
  Write("matches/2__9.txt", "2 9 0\n");
  EXPECT_EQ(LoadError(), ErrorCode::kDanglingReference);
}

TEST_F(IoTest, MissingMatchesFile) {
  WriteMinimalBundle();
  fs::remove(dir_ / "matches/2__1.txt");
  EXPECT_EQ(LoadError(), ErrorCode::kMissingFile);
  EXPECT_NE(message_.find("2__1.txt"), std::string::npos);
}

TEST_F(IoTest, MissingDirectory) {
  try {
    LoadProblem(dir_ / "absent");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingFile);
  }
}

TEST_F(IoTest, ShortPoseLineNamesFileAndLine) {
  WriteMinimalBundle();
  Write("database_poses.txt", "# header\n\n1 1 0 0 0 0 0\n");
  EXPECT_EQ(LoadError(), ErrorCode::kParseError);
  EXPECT_NE(message_.find("database_poses.txt:3"), std::string::npos) << message_;
}

TEST_F(IoTest, NonFiniteNumbersRejected) {
  for (const char* bad : {"nan", "inf", "-inf", "NaN", "1e400"}) {
    WriteMinimalBundle();
    Write("database_poses.txt", std::string("1 1 0 0 0 ") + bad + " 0 0\n");
    EXPECT_EQ(LoadError(), ErrorCode::kParseError) << bad;
  }
}

TEST_F(IoTest, MatchesHeaderMustMatch) {
  WriteMinimalBundle();
  Write("matches/2__1.txt", "2 1 6\n0 0\n1 1\n2 2\n3 3\n4 4\n");
  EXPECT_EQ(LoadError(), ErrorCode::kParseError);
  WriteMinimalBundle();
  Write("matches/2__1.txt", "1 2 1\n0 0\n");
  EXPECT_EQ(LoadError(), ErrorCode::kParseError);
  WriteMinimalBundle();
  Write("matches/2__1.txt", "2 1 1\n0 7\n");
  EXPECT_EQ(LoadError(), ErrorCode::kInvalidArgument);
}

TEST_F(IoTest, RoundTripEqualAndByteIdentical) {
  for (const bool fragments : {false, true}) {
    const LocalizationProblem problem = SmallProblem(fragments ? 2 : 1, fragments);
    SaveProblem(problem, dir_ / "a");
    const LocalizationProblem loaded = LoadProblem(dir_ / "a");
    EXPECT_TRUE(loaded == problem);
    SaveProblem(loaded, dir_ / "b");
    EXPECT_EQ(ReadTree(dir_ / "a"), ReadTree(dir_ / "b"));
    fs::remove_all(dir_ / "a");
    fs::remove_all(dir_ / "b");
  }
}

TEST_F(IoTest, SaveRemovesStaleFiles) {
  SaveProblem(SmallProblem(3, true), dir_);
  ASSERT_TRUE(fs::exists(dir_ / "rig.txt"));
  const LocalizationProblem plain = SmallProblem(4, false);
  SaveProblem(plain, dir_);
  EXPECT_FALSE(fs::exists(dir_ / "rig.txt"));
  EXPECT_FALSE(fs::exists(dir_ / "query_query_pairs.txt"));
  EXPECT_TRUE(LoadProblem(dir_) == plain);
}

TEST_F(IoTest, PosesRoundTripExactly) {
  Rng rng(5);
  std::map<ImageId, Posed> poses;
  for (ImageId id = 3; id < 10; ++id) {
    poses[id] = Posed(rng.UniformRotation(), 10.0 * rng.UnitVector());
  }
  SavePoses(poses, dir_ / "poses.txt");
  const auto loaded = LoadPoses(dir_ / "poses.txt");
  ASSERT_EQ(loaded.size(), poses.size());
  for (const auto& [id, pose] : poses) {
    EXPECT_EQ(loaded.at(id).rotation.quaternion().coeffs(), pose.rotation.quaternion().coeffs());
    EXPECT_EQ(loaded.at(id).translation, pose.translation);
  }
}

TEST(Lexer, CommentsBlankLinesAndSeparators) {
  const auto lines = TokenizeText("# c\n\n a\tb  c # tail\r\n#\nd\n");
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0].number, 3);
  EXPECT_EQ(lines[0].tokens, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(lines[1].number, 5);
}

TEST(Lexer, NumbersRoundTrip) {
  for (const double v : {0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, -0.0}) {
    EXPECT_EQ(ParseDouble(FormatDouble(v), "f", 1), v);
  }
  EXPECT_EQ(ParseDouble("+2.5", "f", 1), 2.5);
  EXPECT_THROW(ParseDouble("1.0x", "f", 1), Error);
  EXPECT_THROW(ParseInteger("1.5", "f", 1), Error);
  EXPECT_TRUE(ParseBool("true", "f", 1));
  EXPECT_FALSE(ParseBool("0", "f", 1));
  EXPECT_THROW(ParseBool("yes", "f", 1), Error);
}

TEST(WriteTextFile, UnwritablePathIsIoFailure) {
  try {
    WriteTextFile("/proc/anchorloc/none/x.txt", "x");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIoFailure);
  }
}

class ReportTest : public IoTest {};

TEST_F(ReportTest, OneRowPerQueryAndErrorsMatchEvaluation) {
  SceneSpec spec;
  spec.n_database = 6;
  spec.n_points = 200;
  spec.n_queries = 4;
  spec.pixel_noise_sigma = 1.0;
  spec.seed = 11;
  const SyntheticScene scene = GenerateScene(spec);
  LocalizationProblem problem = MakeProblem(scene, {.top_k = 5});
  // The last query keeps one pair and stays unlocalized.
  const ImageId weak = scene.queries.rbegin()->first;
  std::vector<ImagePair> kept;
  for (const ImagePair& p : problem.retrieval_pairs) {
    if (p.first != weak || kept.empty() || kept.back().first != weak) kept.push_back(p);
  }
  problem.retrieval_pairs = kept;
  const auto truth = QueryTruth(scene);
  const SolveReport report = Localize(problem, LocalizerOptions(), 3);

  SaveReport(report, dir_ / "report.csv", ReportFormat::kCsv, &truth);
  const std::string csv = ReadFileContent(dir_ / "report.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 4);
  EXPECT_EQ(csv.substr(0, csv.find(',')), ReportColumns().front());

  const ReportTable table = LoadReport(dir_ / "report.csv");
  ASSERT_EQ(table.rows.size(), 4u);
  std::map<ImageId, std::optional<Posed>> estimates;
  for (const ReportRow& row : table.rows) estimates[row.id] = row.pose;
  const EvaluationSummary summary = Evaluate(estimates, truth);
  for (size_t i = 0; i < table.rows.size(); ++i) {
    const ReportRow& row = table.rows[i];
    if (row.id == weak) {
      EXPECT_FALSE(row.pose);
      EXPECT_TRUE(row.flags.scale_unobservable);
      EXPECT_FALSE(row.final_error);
      continue;
    }
    ASSERT_TRUE(row.final_error);
    EXPECT_EQ(*row.final_error, summary.queries[i].errors);
  }
}

TEST_F(ReportTest, TextAndCsvRoundTrip) {
  SceneSpec spec;
  spec.n_database = 6;
  spec.n_points = 200;
  spec.n_queries = 3;
  spec.pixel_noise_sigma = 1.0;
  spec.seed = 12;
  const SyntheticScene scene = GenerateScene(spec);
  const auto truth = QueryTruth(scene);
  const SolveReport report = Localize(MakeProblem(scene, {.top_k = 5}), LocalizerOptions(), 4);
  const ReportTable table = MakeReportTable(report, &truth);
  for (const ReportFormat format : {ReportFormat::kText, ReportFormat::kCsv}) {
    const fs::path path = dir_ / (format == ReportFormat::kCsv ? "r.csv" : "r.txt");
    SaveReportTable(table, path, format);
    EXPECT_EQ(FormatReportTable(LoadReport(path), format), ReadFileContent(path));
  }
  EXPECT_EQ(ReportFormatForPath("x/report.csv"), ReportFormat::kCsv);
  EXPECT_EQ(ReportFormatForPath("report.txt"), ReportFormat::kText);
}

}  // namespace
}  // namespace anchorloc
