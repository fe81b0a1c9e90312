#include "stdet/config.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <stdexcept>
#include <string>

namespace stdet {
namespace {

class TempDir {
 public:
  TempDir() {
    auto path = std::filesystem::temp_directory_path() / "stdet_config_XXXXXX";
    std::string buffer = path.string();
    if (mkdtemp(buffer.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    dir_ = buffer;
  }
  ~TempDir() { std::filesystem::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

 private:
  std::filesystem::path dir_;
};

TEST(Config, DefaultsValidateAndRoundTrip) {
  const PipelineConfig config;
  EXPECT_NO_THROW(validate(config));
  const std::string text = config_to_json(config);
  const PipelineConfig reparsed = config_from_json(text);
  EXPECT_EQ(config_to_json(reparsed), text);
  EXPECT_EQ(reparsed.seed, config.seed);
  EXPECT_EQ(reparsed.classes.size(), 3u);
  EXPECT_EQ(reparsed.classes[0].class_id, ClassConfig::car().class_id);
}

TEST(Config, MinimalDocumentKeepsDefaults) {
  const PipelineConfig config = config_from_json("{\"version\": 1}");
  const PipelineConfig defaults;
  EXPECT_EQ(config_to_json(config), config_to_json(defaults));
}

TEST(Config, VersionIsRequiredAndChecked) {
  EXPECT_THROW(config_from_json("{}"), std::runtime_error);
  EXPECT_THROW(config_from_json("{\"version\": 2}"), std::runtime_error);
  EXPECT_THROW(config_from_json("not json"), std::runtime_error);
}

TEST(Config, UnknownKeysRejectedAtEveryLevel) {
  EXPECT_THROW(config_from_json("{\"version\": 1, \"bogus\": 2}"), std::runtime_error);
  EXPECT_THROW(config_from_json("{\"version\": 1, \"nms\": {\"treshold\": 0.4}}"),
               std::runtime_error);
  EXPECT_THROW(config_from_json(
                   "{\"version\": 1, \"classes\": [{\"class_id\": \"Car\", \"radius\": "
                   "2.0, \"ref_l\": 3.9, \"ref_w\": 1.6, \"ref_h\": 1.6, \"color\": "
                   "\"red\"}]}"),
               std::runtime_error);
  EXPECT_THROW(config_from_json("{\"version\": 1, \"recall\": {\"synth\": {}}}"),
               std::runtime_error);
  try {
    config_from_json("{\"version\": 1, \"loss\": {\"focal_alfa\": 0.25}}");
    FAIL() << "expected rejection";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("$.loss.focal_alfa"), std::string::npos);
  }
}

TEST(Config, OverridesApplyAndMirrorsResolve) {
  const PipelineConfig config = config_from_json(R"({
    "version": 1,
    "seed": 18446744073709551615,
    "workers": 3,
    "synth": {"object_count": 5, "clutter_points": 111},
    "nms": {"strategy": "iou_guided", "metric": "3d", "threshold": 0.7},
    "recall": {"scenes": 7, "proposal_budget": 50},
    "nms_compare": {"scenes": 9},
    "eval": {"interp": "r40", "difficulty": "moderate"}
  })");
  EXPECT_EQ(config.seed, 18446744073709551615ull);
  EXPECT_EQ(config.nms.strategy, NmsStrategy::kIouGuided);
  EXPECT_EQ(config.nms.metric, IouMetric::kFull3d);
  EXPECT_DOUBLE_EQ(config.nms.threshold, 0.7);
  EXPECT_EQ(config.eval.interp, Interp::kR40);
  EXPECT_EQ(config.eval.difficulty, Difficulty::kModerate);

  const RecallCompareConfig recall = resolved_recall(config);
  EXPECT_EQ(recall.scenes, 7);
  EXPECT_EQ(recall.proposal_budget, 50);
  EXPECT_EQ(recall.workers, 3);
  EXPECT_EQ(recall.synth.object_count, 5);
  EXPECT_EQ(recall.synth.clutter_points, 111);
  EXPECT_EQ(recall.anchor_class.class_id, config.classes.front().class_id);

  const NmsCompareConfig compare = resolved_nms_compare(config);
  EXPECT_EQ(compare.scenes, 9);
  EXPECT_EQ(compare.workers, 3);
  EXPECT_EQ(compare.synth.object_count, 5);
}

TEST(Config, SemanticValidationRunsOnLoad) {
  EXPECT_THROW(config_from_json("{\"version\": 1, \"workers\": 0}"),
               std::invalid_argument);
  EXPECT_THROW(config_from_json("{\"version\": 1, \"nms\": {\"threshold\": 1.5}}"),
               std::invalid_argument);
  EXPECT_THROW(config_from_json("{\"version\": 1, \"classes\": []}"),
               std::invalid_argument);
  EXPECT_THROW(
      config_from_json("{\"version\": 1, \"synth\": {\"min_object_points\": -1}}"),
      std::invalid_argument);
}

TEST(Config, BadEnumAndTypeNamesThePath) {
  try {
    config_from_json("{\"version\": 1, \"nms\": {\"strategy\": \"best\"}}");
    FAIL() << "expected rejection";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("$.nms.strategy"), std::string::npos);
  }
  try {
    config_from_json("{\"version\": 1, \"seed\": \"abc\"}");
    FAIL() << "expected rejection";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("$.seed"), std::string::npos);
  }
}

TEST(Config, FileRoundTrip) {
  const TempDir tmp;
  PipelineConfig config;
  config.seed = 77;
  config.recall.scenes = 3;
  save_config(config, tmp.path("pipeline.json"));
  const PipelineConfig loaded = load_config(tmp.path("pipeline.json"));
  EXPECT_EQ(config_to_json(loaded), config_to_json(config));
  EXPECT_THROW(load_config(tmp.path("missing.json")), std::runtime_error);
}

}  // namespace
}  // namespace stdet
