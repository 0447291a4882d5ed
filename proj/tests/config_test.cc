#include "anchorloc/run_config.h"

#include <set>

#include <gtest/gtest.h>

#include "anchorloc/error.h"
#include "anchorloc/experiments.h"

namespace anchorloc {
namespace {

ErrorCode ParseErrorCode(std::string_view content) {
  try {
    ParseRunConfig(content, "cfg.txt");
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error for: " << content;
  return ErrorCode::kInvalidArgument;
}

TEST(RunConfig, DefaultsMatchLibraryDefaults) {
  const RunConfig config = ParseRunConfig("");
  EXPECT_EQ(config.localizer.mode, LocalizationMode::kIndependent);
  EXPECT_EQ(config.localizer.variant, SolverVariant::kFull);
  EXPECT_EQ(config.localizer.gate_deg, 5.0);
  EXPECT_EQ(config.localizer.ransac_threshold_px, 4.0);
  EXPECT_EQ(GetConfigValue(config, "translation.gate_deg"), "5");
  EXPECT_EQ(GetConfigValue(config, "mode"), "independent");
}

TEST(RunConfig, ParsesBothSyntaxes) {
  const RunConfig config = ParseRunConfig(
      "# run\nmode colocalize\nvariant = lud\nseed 42\n"
      "two_view.threshold_px 2.5  # tighter\ntop_k = 3\n");
  EXPECT_EQ(config.localizer.mode, LocalizationMode::kColocalize);
  EXPECT_EQ(config.localizer.variant, SolverVariant::kLud);
  EXPECT_EQ(config.seed, 42u);
  EXPECT_EQ(config.localizer.ransac_threshold_px, 2.5);
  EXPECT_EQ(config.localizer.top_k, 3);
}

TEST(RunConfig, RejectsUnknownRepeatedAndInvalid) {
  EXPECT_EQ(ParseErrorCode("no_such_key 1\n"), ErrorCode::kParseError);
  EXPECT_EQ(ParseErrorCode("seed 1\nseed 2\n"), ErrorCode::kParseError);
  EXPECT_EQ(ParseErrorCode("mode sideways\n"), ErrorCode::kParseError);
  EXPECT_EQ(ParseErrorCode("two_view.threshold_px -1\n"), ErrorCode::kParseError);
  EXPECT_EQ(ParseErrorCode("top_k 1.5\n"), ErrorCode::kParseError);
  EXPECT_EQ(ParseErrorCode("seed\n"), ErrorCode::kParseError);
  try {
    ParseRunConfig("\nbogus 1\n", "cfg.txt");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("cfg.txt:2"), std::string::npos) << e.what();
  }
}

TEST(RunConfig, HelpListsEveryKeyWithDefault) {
  const std::string help = ConfigHelp();
  const RunConfig defaults;
  std::set<std::string> names;
  for (const ConfigKey& key : ConfigKeys()) {
    EXPECT_TRUE(names.insert(key.name).second) << key.name;
    EXPECT_NE(help.find(key.name), std::string::npos) << key.name;
    EXPECT_EQ(key.default_value, GetConfigValue(defaults, key.name));
    EXPECT_NE(help.find("(default: " + key.default_value + ")"), std::string::npos) << key.name;
  }
  for (const char* key : {"mode", "variant", "seed", "top_k", "threads", "rotation.irls_sigma",
                          "translation.gate_deg", "postopt.huber_px", "output.report"}) {
    EXPECT_TRUE(names.count(key)) << key;
  }
}

TEST(RunConfig, FormatParseRoundTrip) {
  RunConfig config;
  SetConfigValue(config, "mode", "rig");
  SetConfigValue(config, "variant", "sampson");
  SetConfigValue(config, "seed", "123456789012");
  SetConfigValue(config, "rotation.irls_sigma", "0.0123456789");
  SetConfigValue(config, "postopt.huber_px", "3.25");
  SetConfigValue(config, "output.edges", "edges.csv");
  const std::string text = FormatRunConfig(config);
  const RunConfig parsed = ParseRunConfig(text);
  EXPECT_EQ(FormatRunConfig(parsed), text);
  for (const ConfigKey& key : ConfigKeys()) {
    EXPECT_EQ(GetConfigValue(parsed, key.name), GetConfigValue(config, key.name)) << key.name;
  }
  EXPECT_EQ(parsed.localizer.rotation.irls_sigma, 0.0123456789);
}

TEST(SynthConfig, RoundTripAndErrors) {
  SynthConfig config =
      ParseSynthConfig("n_database 7\ncamera_layout line\nbox_min -1 -2 -3\n"
                       "rig true\ndb_rotation_noise_deg 1.5\nseed 9\n");
  EXPECT_EQ(config.scene.n_database, 7);
  EXPECT_EQ(config.scene.camera_layout, CameraLayout::kLine);
  EXPECT_EQ(config.scene.box_min, Eigen::Vector3d(-1, -2, -3));
  EXPECT_TRUE(config.problem.rig);
  EXPECT_EQ(config.scene.seed, 9u);
  const std::string text = FormatSynthConfig(config);
  EXPECT_EQ(FormatSynthConfig(ParseSynthConfig(text)), text);
  EXPECT_THROW(ParseSynthConfig("box_min 1 2\n"), Error);
  EXPECT_THROW(ParseSynthConfig("unknown 1\n"), Error);
  EXPECT_THROW(ParseSynthConfig("camera_layout ring\n"), Error);
  EXPECT_EQ(SynthConfigKeys().size(), static_cast<size_t>(std::count(
                                          text.begin(), text.end(), '\n')));
}

}  // namespace
}  // namespace anchorloc
