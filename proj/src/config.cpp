#include "stdet/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace stdet {
namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::runtime_error("config: " + path + ": " + what);
}

void reject_unknown(const Json& node, const std::string& path,
                    std::initializer_list<const char*> keys) {
  if (!node.is_object()) fail(path, "expected an object");
  for (const auto& item : node.items()) {
    bool known = false;
    for (const char* key : keys) known = known || item.key() == key;
    if (!known) fail(path + "." + item.key(), "unknown key");
  }
}

template <typename T>
void read_field(const Json& node, const std::string& path, const char* key, T& out) {
  if (!node.contains(key)) return;
  try {
    out = node.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(path + "." + key, e.what());
  }
}

// ---- enum <-> string ----

const char* to_string(NmsStrategy strategy) {
  switch (strategy) {
    case NmsStrategy::kScore:
      return "score";
    case NmsStrategy::kSoft:
      return "soft";
    case NmsStrategy::kIouGuided:
      return "iou_guided";
    case NmsStrategy::kOracle:
      return "oracle";
  }
  throw std::invalid_argument("unknown NMS strategy");
}

NmsStrategy strategy_from(const std::string& path, const std::string& name) {
  for (const NmsStrategy s : {NmsStrategy::kScore, NmsStrategy::kSoft,
                              NmsStrategy::kIouGuided, NmsStrategy::kOracle})
    if (name == to_string(s)) return s;
  fail(path, "unknown NMS strategy '" + name + "'");
}

const char* to_string(IouMetric metric) {
  return metric == IouMetric::kBevRotated ? "bev" : "3d";
}

IouMetric metric_from(const std::string& path, const std::string& name) {
  if (name == "bev") return IouMetric::kBevRotated;
  if (name == "3d") return IouMetric::kFull3d;
  fail(path, "unknown IoU metric '" + name + "'");
}

const char* to_string(Interp interp) { return interp == Interp::kR11 ? "r11" : "r40"; }

Interp interp_from(const std::string& path, const std::string& name) {
  if (name == "r11") return Interp::kR11;
  if (name == "r40") return Interp::kR40;
  fail(path, "unknown interpolation '" + name + "'");
}

const char* to_string(Difficulty difficulty) {
  switch (difficulty) {
    case Difficulty::kEasy:
      return "easy";
    case Difficulty::kModerate:
      return "moderate";
    case Difficulty::kHard:
      return "hard";
    case Difficulty::kIgnored:
      return "ignored";
  }
  throw std::invalid_argument("unknown difficulty");
}

Difficulty difficulty_from(const std::string& path, const std::string& name) {
  for (const Difficulty d : {Difficulty::kEasy, Difficulty::kModerate, Difficulty::kHard,
                             Difficulty::kIgnored})
    if (name == to_string(d)) return d;
  fail(path, "unknown difficulty '" + name + "'");
}

void read_enum_field(const Json& node, const std::string& path, const char* key,
                     NmsStrategy& out) {
  std::string name;
  read_field(node, path, key, name);
  if (!name.empty()) out = strategy_from(path + "." + key, name);
}

void read_enum_field(const Json& node, const std::string& path, const char* key,
                     IouMetric& out) {
  std::string name;
  read_field(node, path, key, name);
  if (!name.empty()) out = metric_from(path + "." + key, name);
}

void read_enum_field(const Json& node, const std::string& path, const char* key,
                     Interp& out) {
  std::string name;
  read_field(node, path, key, name);
  if (!name.empty()) out = interp_from(path + "." + key, name);
}

void read_enum_field(const Json& node, const std::string& path, const char* key,
                     Difficulty& out) {
  std::string name;
  read_field(node, path, key, name);
  if (!name.empty()) out = difficulty_from(path + "." + key, name);
}

// ---- section parsers ----

ClassConfig parse_class(const Json& node, const std::string& path) {
  reject_unknown(node, path,
                 {"class_id", "radius", "ref_l", "ref_w", "ref_h", "num_angle_bins"});
  ClassConfig out;
  read_field(node, path, "class_id", out.class_id);
  read_field(node, path, "radius", out.radius);
  read_field(node, path, "ref_l", out.ref_l);
  read_field(node, path, "ref_w", out.ref_w);
  read_field(node, path, "ref_h", out.ref_h);
  read_field(node, path, "num_angle_bins", out.num_angle_bins);
  return out;
}

Json class_to_json(const ClassConfig& config) {
  Json node;
  node["class_id"] = config.class_id;
  node["radius"] = config.radius;
  node["ref_l"] = config.ref_l;
  node["ref_w"] = config.ref_w;
  node["ref_h"] = config.ref_h;
  node["num_angle_bins"] = config.num_angle_bins;
  return node;
}

void parse_pool(const Json& node, const std::string& path, PoolConfig& out) {
  reject_unknown(node, path, {"sample_count", "grid_l", "grid_w", "grid_h",
                              "slots_per_voxel", "feature_width"});
  read_field(node, path, "sample_count", out.sample_count);
  read_field(node, path, "grid_l", out.grid_l);
  read_field(node, path, "grid_w", out.grid_w);
  read_field(node, path, "grid_h", out.grid_h);
  read_field(node, path, "slots_per_voxel", out.slots_per_voxel);
  read_field(node, path, "feature_width", out.feature_width);
}

Json pool_to_json(const PoolConfig& config) {
  Json node;
  node["sample_count"] = config.sample_count;
  node["grid_l"] = config.grid_l;
  node["grid_w"] = config.grid_w;
  node["grid_h"] = config.grid_h;
  node["slots_per_voxel"] = config.slots_per_voxel;
  node["feature_width"] = config.feature_width;
  return node;
}

void parse_nms(const Json& node, const std::string& path, NmsConfig& out) {
  reject_unknown(node, path, {"strategy", "metric", "threshold", "sigma", "max_keep"});
  read_enum_field(node, path, "strategy", out.strategy);
  read_enum_field(node, path, "metric", out.metric);
  read_field(node, path, "threshold", out.threshold);
  read_field(node, path, "sigma", out.sigma);
  read_field(node, path, "max_keep", out.max_keep);
}

Json nms_to_json(const NmsConfig& config) {
  Json node;
  node["strategy"] = to_string(config.strategy);
  node["metric"] = to_string(config.metric);
  node["threshold"] = config.threshold;
  node["sigma"] = config.sigma;
  node["max_keep"] = config.max_keep;
  return node;
}

void parse_loss(const Json& node, const std::string& path, LossConfig& out) {
  reject_unknown(node, path,
                 {"focal_alpha", "focal_gamma", "lambda", "delta", "num_angle_bins"});
  read_field(node, path, "focal_alpha", out.focal_alpha);
  read_field(node, path, "focal_gamma", out.focal_gamma);
  read_field(node, path, "lambda", out.lambda);
  read_field(node, path, "delta", out.delta);
  read_field(node, path, "num_angle_bins", out.num_angle_bins);
}

Json loss_to_json(const LossConfig& config) {
  Json node;
  node["focal_alpha"] = config.focal_alpha;
  node["focal_gamma"] = config.focal_gamma;
  node["lambda"] = config.lambda;
  node["delta"] = config.delta;
  node["num_angle_bins"] = config.num_angle_bins;
  return node;
}

void parse_augment(const Json& node, const std::string& path, AugmentConfig& out) {
  reject_unknown(node, path, {"gt_sample_count", "yaw_jitter", "translation_sigma",
                              "flip_prob", "global_yaw", "scale_min", "scale_max"});
  read_field(node, path, "gt_sample_count", out.gt_sample_count);
  read_field(node, path, "yaw_jitter", out.yaw_jitter);
  read_field(node, path, "translation_sigma", out.translation_sigma);
  read_field(node, path, "flip_prob", out.flip_prob);
  read_field(node, path, "global_yaw", out.global_yaw);
  read_field(node, path, "scale_min", out.scale_min);
  read_field(node, path, "scale_max", out.scale_max);
}

Json augment_to_json(const AugmentConfig& config) {
  Json node;
  node["gt_sample_count"] = config.gt_sample_count;
  node["yaw_jitter"] = config.yaw_jitter;
  node["translation_sigma"] = config.translation_sigma;
  node["flip_prob"] = config.flip_prob;
  node["global_yaw"] = config.global_yaw;
  node["scale_min"] = config.scale_min;
  node["scale_max"] = config.scale_max;
  return node;
}

void parse_synth(const Json& node, const std::string& path, SynthSpec& out) {
  reject_unknown(node, path,
                 {"object_count", "clutter_points", "min_object_points",
                  "max_object_points", "area_x_min", "area_x_max", "area_y_min",
                  "area_y_max", "l_min", "l_max", "w_min", "w_max", "h_min", "h_max",
                  "class_id", "max_retries"});
  read_field(node, path, "object_count", out.object_count);
  read_field(node, path, "clutter_points", out.clutter_points);
  read_field(node, path, "min_object_points", out.min_object_points);
  read_field(node, path, "max_object_points", out.max_object_points);
  read_field(node, path, "area_x_min", out.area_x_min);
  read_field(node, path, "area_x_max", out.area_x_max);
  read_field(node, path, "area_y_min", out.area_y_min);
  read_field(node, path, "area_y_max", out.area_y_max);
  read_field(node, path, "l_min", out.l_min);
  read_field(node, path, "l_max", out.l_max);
  read_field(node, path, "w_min", out.w_min);
  read_field(node, path, "w_max", out.w_max);
  read_field(node, path, "h_min", out.h_min);
  read_field(node, path, "h_max", out.h_max);
  read_field(node, path, "class_id", out.class_id);
  read_field(node, path, "max_retries", out.max_retries);
}

Json synth_to_json(const SynthSpec& spec) {
  Json node;
  node["object_count"] = spec.object_count;
  node["clutter_points"] = spec.clutter_points;
  node["min_object_points"] = spec.min_object_points;
  node["max_object_points"] = spec.max_object_points;
  node["area_x_min"] = spec.area_x_min;
  node["area_x_max"] = spec.area_x_max;
  node["area_y_min"] = spec.area_y_min;
  node["area_y_max"] = spec.area_y_max;
  node["l_min"] = spec.l_min;
  node["l_max"] = spec.l_max;
  node["w_min"] = spec.w_min;
  node["w_max"] = spec.w_max;
  node["h_min"] = spec.h_min;
  node["h_max"] = spec.h_max;
  node["class_id"] = spec.class_id;
  node["max_retries"] = spec.max_retries;
  return node;
}

// The recall/nms_compare sections carry only their own knobs; the scene
// recipe, anchor class, and worker count are mirrored from the top level by
// resolved_recall() / resolved_nms_compare().
void parse_recall(const Json& node, const std::string& path, RecallCompareConfig& out) {
  reject_unknown(node, path,
                 {"scenes", "score_sharpness", "score_noise", "filter_iou", "filter_keep",
                  "center_noise", "size_noise", "angle_noise", "proposal_budget",
                  "recall_iou"});
  read_field(node, path, "scenes", out.scenes);
  read_field(node, path, "score_sharpness", out.score_sharpness);
  read_field(node, path, "score_noise", out.score_noise);
  read_field(node, path, "filter_iou", out.filter_iou);
  read_field(node, path, "filter_keep", out.filter_keep);
  read_field(node, path, "center_noise", out.center_noise);
  read_field(node, path, "size_noise", out.size_noise);
  read_field(node, path, "angle_noise", out.angle_noise);
  read_field(node, path, "proposal_budget", out.proposal_budget);
  read_field(node, path, "recall_iou", out.recall_iou);
}

Json recall_to_json(const RecallCompareConfig& config) {
  Json node;
  node["scenes"] = config.scenes;
  node["score_sharpness"] = config.score_sharpness;
  node["score_noise"] = config.score_noise;
  node["filter_iou"] = config.filter_iou;
  node["filter_keep"] = config.filter_keep;
  node["center_noise"] = config.center_noise;
  node["size_noise"] = config.size_noise;
  node["angle_noise"] = config.angle_noise;
  node["proposal_budget"] = config.proposal_budget;
  node["recall_iou"] = config.recall_iou;
  return node;
}

void parse_nms_compare(const Json& node, const std::string& path, NmsCompareConfig& out) {
  reject_unknown(node, path,
                 {"scenes", "dets_per_gt", "false_positives", "center_spread",
                  "yaw_spread", "size_spread", "iou_noise", "nms_threshold", "eval_iou",
                  "max_keep"});
  read_field(node, path, "scenes", out.scenes);
  read_field(node, path, "dets_per_gt", out.dets_per_gt);
  read_field(node, path, "false_positives", out.false_positives);
  read_field(node, path, "center_spread", out.center_spread);
  read_field(node, path, "yaw_spread", out.yaw_spread);
  read_field(node, path, "size_spread", out.size_spread);
  read_field(node, path, "iou_noise", out.iou_noise);
  read_field(node, path, "nms_threshold", out.nms_threshold);
  read_field(node, path, "eval_iou", out.eval_iou);
  read_field(node, path, "max_keep", out.max_keep);
}

Json nms_compare_to_json(const NmsCompareConfig& config) {
  Json node;
  node["scenes"] = config.scenes;
  node["dets_per_gt"] = config.dets_per_gt;
  node["false_positives"] = config.false_positives;
  node["center_spread"] = config.center_spread;
  node["yaw_spread"] = config.yaw_spread;
  node["size_spread"] = config.size_spread;
  node["iou_noise"] = config.iou_noise;
  node["nms_threshold"] = config.nms_threshold;
  node["eval_iou"] = config.eval_iou;
  node["max_keep"] = config.max_keep;
  return node;
}

void parse_eval(const Json& node, const std::string& path, ApConfig& out) {
  reject_unknown(node, path,
                 {"iou_threshold", "metric", "interp", "class_id", "difficulty"});
  read_field(node, path, "iou_threshold", out.iou_threshold);
  read_enum_field(node, path, "metric", out.metric);
  read_enum_field(node, path, "interp", out.interp);
  read_field(node, path, "class_id", out.class_id);
  read_enum_field(node, path, "difficulty", out.difficulty);
}

Json eval_to_json(const ApConfig& config) {
  Json node;
  node["iou_threshold"] = config.iou_threshold;
  node["metric"] = to_string(config.metric);
  node["interp"] = to_string(config.interp);
  node["class_id"] = config.class_id;
  node["difficulty"] = to_string(config.difficulty);
  return node;
}

}  // namespace

void validate(const PipelineConfig& config) {
  if (config.version != kConfigVersion)
    throw std::invalid_argument("unsupported config version");
  if (config.workers < 1) throw std::invalid_argument("workers must be positive");
  if (config.synth_scenes < 1)
    throw std::invalid_argument("synth_scenes must be positive");
  if (config.classes.empty()) throw std::invalid_argument("at least one class required");
  for (const ClassConfig& c : config.classes) validate(c);
  validate(config.pool);
  validate(config.nms);
  validate(config.loss);
  validate(config.augment);
  validate(config.synth);
  validate(resolved_recall(config));
  validate(resolved_nms_compare(config));
  if (config.eval.iou_threshold <= 0.0 || config.eval.iou_threshold > 1.0)
    throw std::invalid_argument("eval.iou_threshold must be in (0, 1]");
  if (config.eval.class_id < 0)
    throw std::invalid_argument("eval.class_id must be non-negative");
}

RecallCompareConfig resolved_recall(const PipelineConfig& config) {
  if (config.classes.empty()) throw std::invalid_argument("at least one class required");
  RecallCompareConfig out = config.recall;
  out.synth = config.synth;
  out.anchor_class = config.classes.front();
  out.workers = config.workers;
  return out;
}

NmsCompareConfig resolved_nms_compare(const PipelineConfig& config) {
  NmsCompareConfig out = config.nms_compare;
  out.synth = config.synth;
  out.workers = config.workers;
  return out;
}

PipelineConfig config_from_json(const std::string& text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail("$", e.what());
  }
  reject_unknown(root, "$",
                 {"version", "seed", "workers", "out_dir", "data_dir", "synth_scenes",
                  "classes", "pool", "nms", "loss", "augment", "synth", "recall",
                  "nms_compare", "eval"});
  if (!root.contains("version")) fail("$.version", "required key missing");

  PipelineConfig config;
  read_field(root, "$", "version", config.version);
  if (config.version != kConfigVersion)
    fail("$.version", "unsupported version " + std::to_string(config.version));
  read_field(root, "$", "seed", config.seed);
  read_field(root, "$", "workers", config.workers);
  read_field(root, "$", "out_dir", config.out_dir);
  read_field(root, "$", "data_dir", config.data_dir);
  read_field(root, "$", "synth_scenes", config.synth_scenes);
  if (root.contains("classes")) {
    const Json& classes = root.at("classes");
    if (!classes.is_array()) fail("$.classes", "expected an array");
    config.classes.clear();
    for (std::size_t i = 0; i < classes.size(); ++i)
      config.classes.push_back(
          parse_class(classes[i], "$.classes[" + std::to_string(i) + "]"));
  }
  if (root.contains("pool")) parse_pool(root.at("pool"), "$.pool", config.pool);
  if (root.contains("nms")) parse_nms(root.at("nms"), "$.nms", config.nms);
  if (root.contains("loss")) parse_loss(root.at("loss"), "$.loss", config.loss);
  if (root.contains("augment"))
    parse_augment(root.at("augment"), "$.augment", config.augment);
  if (root.contains("synth")) parse_synth(root.at("synth"), "$.synth", config.synth);
  if (root.contains("recall")) parse_recall(root.at("recall"), "$.recall", config.recall);
  if (root.contains("nms_compare"))
    parse_nms_compare(root.at("nms_compare"), "$.nms_compare", config.nms_compare);
  if (root.contains("eval")) parse_eval(root.at("eval"), "$.eval", config.eval);

  validate(config);
  return config;
}

std::string config_to_json(const PipelineConfig& config) {
  Json root;
  root["version"] = config.version;
  root["seed"] = config.seed;
  root["workers"] = config.workers;
  root["out_dir"] = config.out_dir;
  root["data_dir"] = config.data_dir;
  root["synth_scenes"] = config.synth_scenes;
  root["classes"] = Json::array();
  for (const ClassConfig& c : config.classes) root["classes"].push_back(class_to_json(c));
  root["pool"] = pool_to_json(config.pool);
  root["nms"] = nms_to_json(config.nms);
  root["loss"] = loss_to_json(config.loss);
  root["augment"] = augment_to_json(config.augment);
  root["synth"] = synth_to_json(config.synth);
  root["recall"] = recall_to_json(config.recall);
  root["nms_compare"] = nms_compare_to_json(config.nms_compare);
  root["eval"] = eval_to_json(config.eval);
  return root.dump(2) + "\n";
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot read " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return config_from_json(text.str());
}

void save_config(const PipelineConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("config: cannot write " + path);
  out << config_to_json(config);
  if (!out) throw std::runtime_error("config: write failed for " + path);
}

}  // namespace stdet
