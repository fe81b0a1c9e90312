// Command-line front end: synthetic scene generation, proposal/NMS ablation
// reports, AP evaluation over KITTI-format files, pooling diagnostics, and
// the oracle selfcheck. Every command is deterministic given the config's
// seeds and embeds the full resolved config in its JSON report.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "stdet/config.hpp"
#include "stdet/random.hpp"
#include "stdet/selfcheck.hpp"

namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;
using namespace stdet;

std::string scene_name(int id) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d", id);
  return buf;
}

void write_file(const fs::path& path, const void* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_file(const fs::path& path, const std::string& text) {
  write_file(path, text.data(), text.size());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Json config_json(const PipelineConfig& config) {
  return Json::parse(config_to_json(config));
}

// Prints the report and, when out_dir is set, also writes <out_dir>/<name>.
void emit_report(const Json& report, const PipelineConfig& config,
                 const std::string& name) {
  const std::string text = report.dump(2) + "\n";
  std::fputs(text.c_str(), stdout);
  if (!config.out_dir.empty()) {
    fs::create_directories(config.out_dir);
    write_file(fs::path(config.out_dir) / name, text);
  }
}

int cmd_synth(const PipelineConfig& config) {
  if (config.out_dir.empty())
    throw std::runtime_error("synth: an output directory is required (--out)");
  const fs::path root(config.out_dir);
  fs::create_directories(root / "velodyne");
  fs::create_directories(root / "label_2");
  fs::create_directories(root / "calib");
  const Calib calib = Calib::synthetic();
  const std::string calib_text = write_calib(calib);

  Json scenes = Json::array();
  for (int i = 0; i < config.synth_scenes; ++i) {
    const std::uint64_t scene_seed = derive_seed(config.seed, static_cast<std::uint64_t>(i));
    const SceneSample scene = synth_scene(config.synth, scene_seed);
    const std::string name = scene_name(i);

    const std::vector<std::uint8_t> bytes = write_velodyne(scene.cloud);
    write_file(root / "velodyne" / (name + ".bin"), bytes.data(), bytes.size());

    std::vector<KittiLabel> labels;
    for (const GroundTruth& gt : scene.gts) labels.push_back(internal_to_camera(gt, calib));
    write_file(root / "label_2" / (name + ".txt"), write_labels(labels));
    write_file(root / "calib" / (name + ".txt"), calib_text);

    scenes.push_back({{"id", name},
                      {"seed", scene_seed},
                      {"objects", scene.gts.size()},
                      {"points", scene.cloud.size()}});
  }

  Json manifest;
  manifest["command"] = "synth";
  manifest["seed"] = config.seed;
  manifest["scenes"] = scenes;
  // No images exist, so difficulty comes from interior point count bands.
  manifest["difficulty_rule"] =
      "interior points: >=100 easy, >=30 moderate, >=5 hard, else ignored";
  manifest["config"] = config_json(config);
  const std::string text = manifest.dump(2) + "\n";
  write_file(root / "manifest.json", text);
  std::fputs(text.c_str(), stdout);
  return 0;
}

int cmd_recall(const PipelineConfig& config) {
  const RecallCompareReport result = run_recall_compare(resolved_recall(config), config.seed);
  Json modes = Json::array();
  for (const RecallModeReport& mode : result.modes)
    modes.push_back({{"mode", mode.mode},
                     {"recall", mode.recall},
                     {"anchors_seeded", mode.anchors_seeded},
                     {"proposals", mode.proposals}});
  Json report;
  report["command"] = "recall";
  report["seed"] = result.seed;
  report["scenes"] = result.scenes;
  report["modes"] = modes;
  report["sphere_to_cuboid_2_anchor_ratio"] =
      static_cast<double>(mode_report(result, AnchorMode::kSphere).anchors_seeded) /
      static_cast<double>(mode_report(result, AnchorMode::kCuboidTwo).anchors_seeded);
  report["config"] = config_json(config);
  emit_report(report, config, "recall.json");
  return 0;
}

int cmd_nms_compare(const PipelineConfig& config) {
  const NmsCompareReport result =
      run_nms_compare(resolved_nms_compare(config), config.seed);
  Json strategies = Json::array();
  for (const NmsStrategyReport& s : result.strategies)
    strategies.push_back({{"strategy", s.strategy}, {"ap", s.ap}});
  Json report;
  report["command"] = "nms_compare";
  report["seed"] = result.seed;
  report["scenes"] = result.scenes;
  report["strategies"] = strategies;
  report["config"] = config_json(config);
  emit_report(report, config, "nms_compare.json");
  return 0;
}

const char* difficulty_label(Difficulty difficulty) {
  switch (difficulty) {
    case Difficulty::kEasy: return "easy";
    case Difficulty::kModerate: return "moderate";
    case Difficulty::kHard: return "hard";
    default: return "ignored";
  }
}

int cmd_eval_ap(const PipelineConfig& config, const std::string& dets_override) {
  if (config.data_dir.empty())
    throw std::runtime_error("eval-ap: a data directory is required (--data)");
  const fs::path data(config.data_dir);
  const fs::path labels_dir = data / "label_2";
  const fs::path dets_dir = dets_override.empty() ? data / "dets" : fs::path(dets_override);
  if (!fs::is_directory(labels_dir))
    throw std::runtime_error("eval-ap: missing label directory: " + labels_dir.string());
  if (!fs::is_directory(dets_dir))
    throw std::runtime_error("eval-ap: missing detection directory: " + dets_dir.string());

  std::vector<fs::path> label_files;
  for (const fs::directory_entry& entry : fs::directory_iterator(labels_dir))
    if (entry.path().extension() == ".txt") label_files.push_back(entry.path());
  std::sort(label_files.begin(), label_files.end());
  if (label_files.empty())
    throw std::runtime_error("eval-ap: no label files in " + labels_dir.string());

  std::vector<std::vector<GroundTruth>> gts;
  std::vector<std::vector<ScoredBox>> dets;
  Json scene_rows = Json::array();
  for (const fs::path& label_path : label_files) {
    const std::string stem = label_path.stem().string();
    const fs::path calib_path = data / "calib" / (stem + ".txt");
    const Calib calib =
        fs::exists(calib_path) ? parse_calib(read_file(calib_path)) : Calib::synthetic();

    std::vector<GroundTruth> scene_gts;
    for (const KittiLabel& label : parse_labels(read_file(label_path)))
      scene_gts.push_back(camera_to_internal(label, calib));

    const fs::path det_path = dets_dir / (stem + ".txt");
    if (!fs::exists(det_path))
      throw std::runtime_error("eval-ap: missing detection file: " + det_path.string());
    std::vector<ScoredBox> scene_dets;
    for (const KittiLabel& label : parse_labels(read_file(det_path))) {
      if (!label.score)
        throw std::runtime_error("eval-ap: detection without a score column: " +
                                 det_path.string());
      const GroundTruth det = camera_to_internal(label, calib);
      scene_dets.push_back({det.box, *label.score, det.class_id});
    }
    scene_rows.push_back({{"id", stem},
                          {"ground_truths", scene_gts.size()},
                          {"detections", scene_dets.size()}});
    gts.push_back(std::move(scene_gts));
    dets.push_back(std::move(scene_dets));
  }

  Json table = Json::array();
  for (const Difficulty difficulty :
       {Difficulty::kEasy, Difficulty::kModerate, Difficulty::kHard}) {
    for (const Interp interp : {Interp::kR11, Interp::kR40}) {
      ApConfig ap_config = config.eval;
      ap_config.difficulty = difficulty;
      ap_config.interp = interp;
      const ApResult result = average_precision(dets, gts, ap_config);
      table.push_back({{"difficulty", difficulty_label(difficulty)},
                       {"interp", interp == Interp::kR11 ? "r11" : "r40"},
                       {"ap", result.value},
                       {"defined", result.defined},
                       {"relevant_gt", result.relevant_gt}});
    }
  }

  Json report;
  report["command"] = "eval_ap";
  report["seed"] = config.seed;
  report["class_id"] = config.eval.class_id;
  report["iou_threshold"] = config.eval.iou_threshold;
  report["metric"] = config.eval.metric == IouMetric::kBevRotated ? "bev" : "3d";
  report["scenes"] = scene_rows;
  report["ap_table"] = table;
  report["config"] = config_json(config);
  emit_report(report, config, "eval_ap.json");
  return 0;
}

int cmd_pool_check(const PipelineConfig& config) {
  const SceneSample scene = synth_scene(config.synth, derive_seed(config.seed, 0));
  Rng feature_rng(derive_seed(config.seed, 101));
  std::vector<std::vector<double>> features(scene.cloud.size());
  for (std::vector<double>& f : features) {
    f.resize(static_cast<std::size_t>(config.pool.feature_width));
    for (double& v : f) v = feature_rng.normal(0.0, 1.0);
  }

  const fs::path dump_dir = config.out_dir.empty()
                                ? fs::path()
                                : fs::path(config.out_dir) / "pooled";
  if (!dump_dir.empty()) fs::create_directories(dump_dir);

  bool all_exact = true;
  Json rows = Json::array();
  for (std::size_t i = 0; i < scene.gts.size(); ++i) {
    const Box3D& box = scene.gts[i].box;
    const auto [tensor, routing] =
        pool_forward(scene.cloud, features, box, config.pool,
                     derive_seed(config.seed, 200 + static_cast<std::uint64_t>(i)));
    int occupied = 0, peak = 0, nonempty_voxels = 0;
    for (std::size_t v = 0; v < tensor.voxel_count(); ++v) {
      int in_voxel = 0;
      for (int s = 0; s < tensor.slots; ++s)
        if (tensor.mask[v * static_cast<std::size_t>(tensor.slots) +
                        static_cast<std::size_t>(s)])
          ++in_voxel;
      occupied += in_voxel;
      peak = std::max(peak, in_voxel);
      if (in_voxel > 0) ++nonempty_voxels;
    }
    const std::vector<double> encoded = reference_encoder(tensor);
    double encoded_norm = 0.0;
    for (const double v : encoded) encoded_norm += v * v;

    bool roundtrip_exact = true;
    if (!dump_dir.empty()) {
      const std::string name = scene_name(static_cast<int>(i));
      const std::string bin_path = (dump_dir / (name + ".bin")).string();
      const std::string json_path = (dump_dir / (name + ".json")).string();
      save_pooled(tensor, routing, bin_path, json_path);
      const auto [loaded, loaded_routing] = load_pooled(bin_path, json_path);
      roundtrip_exact = loaded.values == tensor.values && loaded.mask == tensor.mask &&
                        loaded_routing.source == routing.source &&
                        loaded_routing.cloud_size == routing.cloud_size &&
                        loaded.grid_l == tensor.grid_l && loaded.slots == tensor.slots &&
                        loaded.channels == tensor.channels;
      all_exact = all_exact && roundtrip_exact;
    }

    rows.push_back({{"proposal", i},
                    {"empty", tensor.empty_proposal},
                    {"occupied_slots", occupied},
                    {"nonempty_voxels", nonempty_voxels},
                    {"peak_slots_per_voxel", peak},
                    {"encoded_width", encoded.size()},
                    {"encoded_sq_norm", encoded_norm},
                    {"roundtrip_exact", roundtrip_exact}});
  }

  Json report;
  report["command"] = "pool_check";
  report["seed"] = config.seed;
  report["proposals"] = rows;
  report["saved_tensors"] = !dump_dir.empty();
  report["all_roundtrips_exact"] = all_exact;
  report["config"] = config_json(config);
  emit_report(report, config, "pool_check.json");
  return all_exact ? 0 : 1;
}

int cmd_selfcheck(const PipelineConfig& config) {
  SelfcheckOptions options;
  options.seed = config.seed;
  const SelfcheckReport result = run_selfcheck(options);
  Json checks = Json::array();
  for (const CheckResult& check : result.checks)
    checks.push_back({{"name", check.name},
                      {"passed", check.passed},
                      {"max_error", check.max_error},
                      {"tolerance", check.tolerance},
                      {"seconds", check.seconds}});
  Json report;
  report["command"] = "selfcheck";
  report["seed"] = options.seed;
  report["checks"] = checks;
  report["all_passed"] = result.all_passed();
  report["total_seconds"] = result.total_seconds();
  report["config"] = config_json(config);
  emit_report(report, config, "selfcheck.json");
  if (!result.all_passed()) {
    for (const CheckResult& check : result.checks)
      if (!check.passed)
        std::fprintf(stderr, "selfcheck failed: %s (max_error %.6g > tolerance %.6g)\n",
                     check.name.c_str(), check.max_error, check.tolerance);
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse-to-dense two-stage 3D detection toolkit"};
  app.require_subcommand(1);

  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;
  std::optional<std::string> data;
  std::string dets;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--workers", workers, "override the worker count");
    sub->add_option("--out", out, "output directory (scenes and reports)");
    return sub;
  };
  CLI::App* synth = add_common(app.add_subcommand("synth", "write synthetic KITTI-format scenes"));
  CLI::App* recall = add_common(app.add_subcommand("recall", "compare anchor modes by proposal recall"));
  CLI::App* nms = add_common(app.add_subcommand("nms-compare", "compare NMS ranking strategies by AP"));
  CLI::App* eval = add_common(app.add_subcommand("eval-ap", "evaluate KITTI-format detections against labels"));
  eval->add_option("--data", data, "scene directory (label_2/, calib/)");
  eval->add_option("--dets", dets, "detection directory (default <data>/dets)");
  CLI::App* pool = add_common(app.add_subcommand("pool-check", "pooling diagnostics and tensor round-trip"));
  CLI::App* selfcheck = add_common(app.add_subcommand("selfcheck", "run the oracle suites"));

  CLI11_PARSE(app, argc, argv);

  try {
    PipelineConfig config = config_path ? load_config(*config_path) : PipelineConfig{};
    if (seed) config.seed = *seed;
    if (workers) config.workers = *workers;
    if (out) config.out_dir = *out;
    if (data) config.data_dir = *data;
    validate(config);

    if (synth->parsed()) return cmd_synth(config);
    if (recall->parsed()) return cmd_recall(config);
    if (nms->parsed()) return cmd_nms_compare(config);
    if (eval->parsed()) return cmd_eval_ap(config, dets);
    if (pool->parsed()) return cmd_pool_check(config);
    if (selfcheck->parsed()) return cmd_selfcheck(config);
    std::fprintf(stderr, "error: no subcommand\n");
    return 2;
  } catch (const std::exception& error) {
    std::fprintf(stderr, "error: %s\n", error.what());
    return 1;
  }
}
