#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "stdet/kitti.hpp"
#include "stdet/random.hpp"
#include "stdet/synth.hpp"

// End-to-end runs of the command-line binary, exercising report schemas,
// determinism, file layout, and exit codes.

namespace stdet {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

struct TempDir {
  fs::path path;
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "stdet-cli-XXXXXX").string();
    path = mkdtemp(tmpl.data());
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string str(const std::string& sub) const { return (path / sub).string(); }
};

int run(const std::string& args, const std::string& stdout_path) {
  const std::string command =
      std::string(STDET_CLI_PATH) + " " + args + " > " + stdout_path;
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

TEST(Cli, SynthWritesScenesThatReparseToTheGeneratingBoxes) {
  TempDir tmp;
  ASSERT_EQ(run("synth --out " + tmp.str("data") + " --seed 3", tmp.str("synth.json")), 0);

  const Json manifest = Json::parse(slurp(tmp.str("data/manifest.json")));
  EXPECT_EQ(manifest.at("command"), "synth");
  EXPECT_EQ(manifest.at("config").at("seed"), 3);
  ASSERT_EQ(manifest.at("scenes").size(), 4u);  // default synth_scenes

  const Calib calib = Calib::synthetic();
  SynthSpec spec;  // defaults, as resolved by the default config
  for (int i = 0; i < 4; ++i) {
    const Json& row = manifest.at("scenes").at(i);
    const std::uint64_t scene_seed = row.at("seed").get<std::uint64_t>();
    EXPECT_EQ(scene_seed, derive_seed(3, static_cast<std::uint64_t>(i)));
    const SceneSample scene = synth_scene(spec, scene_seed);

    char name[16];
    std::snprintf(name, sizeof(name), "000%03d", i);
    const std::vector<KittiLabel> labels =
        parse_labels(slurp(tmp.str(std::string("data/label_2/") + name + ".txt")));
    ASSERT_EQ(labels.size(), scene.gts.size());
    for (std::size_t g = 0; g < labels.size(); ++g) {
      const GroundTruth back = camera_to_internal(labels[g], calib);
      EXPECT_NEAR(back.box.cx, scene.gts[g].box.cx, 1e-6);
      EXPECT_NEAR(back.box.cy, scene.gts[g].box.cy, 1e-6);
      EXPECT_NEAR(back.box.cz, scene.gts[g].box.cz, 1e-6);
      EXPECT_NEAR(back.box.l, scene.gts[g].box.l, 1e-6);
      EXPECT_NEAR(back.box.w, scene.gts[g].box.w, 1e-6);
      EXPECT_NEAR(back.box.h, scene.gts[g].box.h, 1e-6);
      EXPECT_NEAR(normalize_angle(back.box.yaw - scene.gts[g].box.yaw), 0.0, 1e-6);
      EXPECT_EQ(back.difficulty, scene.gts[g].difficulty);
    }
  }

  // Same seed, second run: byte-identical scene files.
  ASSERT_EQ(run("synth --out " + tmp.str("again") + " --seed 3", tmp.str("again.json")), 0);
  EXPECT_EQ(slurp(tmp.str("data/velodyne/000002.bin")),
            slurp(tmp.str("again/velodyne/000002.bin")));
  EXPECT_EQ(slurp(tmp.str("data/label_2/000002.txt")),
            slurp(tmp.str("again/label_2/000002.txt")));
}

// One small config shared by the report commands below.
std::string write_small_config(const TempDir& tmp) {
  const std::string path = tmp.str("config.json");
  std::ofstream out(path);
  out << R"({
  "version": 1,
  "seed": 9,
  "synth": {"object_count": 5, "clutter_points": 200, "max_object_points": 100},
  "recall": {"scenes": 4, "filter_keep": 120, "proposal_budget": 60},
  "nms_compare": {"scenes": 4, "false_positives": 8}
})";
  out.close();
  return path;
}

TEST(Cli, RecallReportComparesAnchorModesSideBySide) {
  TempDir tmp;
  const std::string config = write_small_config(tmp);
  ASSERT_EQ(run("recall --config " + config + " --seed 7", tmp.str("recall.json")), 0);
  const Json report = Json::parse(slurp(tmp.str("recall.json")));
  EXPECT_EQ(report.at("command"), "recall");
  EXPECT_EQ(report.at("seed"), 7);  // flag overrides the config's 9
  EXPECT_EQ(report.at("config").at("seed"), 7);
  EXPECT_EQ(report.at("scenes"), 4);
  ASSERT_EQ(report.at("modes").size(), 3u);
  EXPECT_EQ(report.at("modes").at(0).at("mode"), "sphere");
  EXPECT_EQ(report.at("modes").at(1).at("mode"), "cuboid_1");
  EXPECT_EQ(report.at("modes").at(2).at("mode"), "cuboid_2");
  for (const Json& mode : report.at("modes")) {
    EXPECT_GE(mode.at("recall").get<double>(), 0.0);
    EXPECT_LE(mode.at("recall").get<double>(), 1.0);
    EXPECT_GT(mode.at("anchors_seeded").get<long long>(), 0);
  }
  EXPECT_DOUBLE_EQ(report.at("sphere_to_cuboid_2_anchor_ratio").get<double>(), 0.5);

  // Determinism: identical stdout on a second run.
  ASSERT_EQ(run("recall --config " + config + " --seed 7", tmp.str("recall2.json")), 0);
  EXPECT_EQ(slurp(tmp.str("recall.json")), slurp(tmp.str("recall2.json")));
}

TEST(Cli, NmsCompareReportListsEveryStrategy) {
  TempDir tmp;
  const std::string config = write_small_config(tmp);
  ASSERT_EQ(run("nms-compare --config " + config, tmp.str("nms.json")), 0);
  const Json report = Json::parse(slurp(tmp.str("nms.json")));
  EXPECT_EQ(report.at("command"), "nms_compare");
  EXPECT_EQ(report.at("seed"), 9);
  const std::vector<std::string> expected = {"score", "soft", "iou_guided", "iou_pred",
                                             "oracle"};
  ASSERT_EQ(report.at("strategies").size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_EQ(report.at("strategies").at(i).at("strategy"), expected[i]);
    const double ap = report.at("strategies").at(i).at("ap").get<double>();
    EXPECT_GE(ap, 0.0);
    EXPECT_LE(ap, 1.0);
  }
}

TEST(Cli, EvalApScoresPerfectDetectionsAtOne) {
  TempDir tmp;
  ASSERT_EQ(run("synth --out " + tmp.str("data") + " --seed 11", tmp.str("synth.json")), 0);
  // Perfect detections: the labels themselves with a score column appended.
  fs::create_directories(tmp.path / "data" / "dets");
  for (const fs::directory_entry& entry :
       fs::directory_iterator(tmp.path / "data" / "label_2")) {
    std::vector<KittiLabel> labels = parse_labels(slurp(entry.path().string()));
    double score = 0.95;
    for (KittiLabel& label : labels) {
      label.score = score;
      score -= 0.01;
    }
    std::ofstream out(tmp.path / "data" / "dets" / entry.path().filename());
    out << write_labels(labels);
  }
  ASSERT_EQ(run("eval-ap --data " + tmp.str("data"), tmp.str("eval.json")), 0);
  const Json report = Json::parse(slurp(tmp.str("eval.json")));
  ASSERT_EQ(report.at("ap_table").size(), 6u);  // 3 difficulties x 2 interps
  for (const Json& row : report.at("ap_table")) {
    EXPECT_TRUE(row.at("defined").get<bool>());
    EXPECT_DOUBLE_EQ(row.at("ap").get<double>(), 1.0) << row.dump();
  }
}

TEST(Cli, PoolCheckRoundTripsSavedTensors) {
  TempDir tmp;
  const std::string config = write_small_config(tmp);
  ASSERT_EQ(run("pool-check --config " + config + " --out " + tmp.str("out"),
                tmp.str("pool.json")),
            0);
  const Json report = Json::parse(slurp(tmp.str("pool.json")));
  EXPECT_TRUE(report.at("all_roundtrips_exact").get<bool>());
  EXPECT_TRUE(report.at("saved_tensors").get<bool>());
  ASSERT_EQ(report.at("proposals").size(), 5u);
  for (const Json& row : report.at("proposals")) {
    EXPECT_TRUE(row.at("roundtrip_exact").get<bool>());
    EXPECT_FALSE(row.at("empty").get<bool>());
    EXPECT_GT(row.at("occupied_slots").get<int>(), 0);
    EXPECT_LE(row.at("peak_slots_per_voxel").get<int>(), 35);
  }
  EXPECT_TRUE(fs::exists(tmp.path / "out" / "pooled" / "000000.bin"));
  EXPECT_TRUE(fs::exists(tmp.path / "out" / "pooled" / "000000.json"));
}

TEST(Cli, SelfcheckReportsPerCheckErrorsAndExitsZero) {
  TempDir tmp;
  ASSERT_EQ(run("selfcheck", tmp.str("selfcheck.json")), 0);
  const Json report = Json::parse(slurp(tmp.str("selfcheck.json")));
  EXPECT_TRUE(report.at("all_passed").get<bool>());
  EXPECT_GE(report.at("checks").size(), 10u);
  for (const Json& check : report.at("checks")) {
    EXPECT_TRUE(check.at("passed").get<bool>()) << check.dump();
    EXPECT_TRUE(check.contains("max_error"));
    EXPECT_TRUE(check.contains("tolerance"));
  }
}

TEST(Cli, BadInputsExitNonzero) {
  TempDir tmp;
  std::ofstream(tmp.str("bad.json")) << R"({"version": 1, "loss": {"focal_alfa": 1}})";
  EXPECT_NE(run("recall --config " + tmp.str("bad.json") + " 2>/dev/null",
                tmp.str("out.json")),
            0);
  EXPECT_NE(run("synth 2>/dev/null", tmp.str("out.json")), 0);  // --out is required
  EXPECT_NE(run("eval-ap --data " + tmp.str("nope") + " 2>/dev/null",
                tmp.str("out.json")),
            0);
}

}  // namespace
}  // namespace stdet
