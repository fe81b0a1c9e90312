#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stdet/anchors.hpp"
#include "stdet/augment.hpp"
#include "stdet/eval.hpp"
#include "stdet/experiments.hpp"
#include "stdet/losses.hpp"
#include "stdet/nms.hpp"
#include "stdet/pool.hpp"
#include "stdet/synth.hpp"

namespace stdet {

inline constexpr int kConfigVersion = 1;

// Everything a pipeline run needs, loadable from one versioned JSON document.
// Unknown keys are rejected at every nesting level so typos fail loudly;
// missing keys keep their defaults; "version" is required and must match.
//
// The scene recipe, anchor class, and worker count live once at the top
// level: resolved_recall() / resolved_nms_compare() copy them into the
// experiment configs, whose JSON sections carry only their own knobs.
struct PipelineConfig {
  int version = kConfigVersion;
  std::uint64_t seed = 1;
  int workers = 1;
  std::string out_dir;   // empty: reports go to stdout only
  std::string data_dir;  // scene inputs for eval-ap
  int synth_scenes = 4;  // scene files written by the synth command

  std::vector<ClassConfig> classes = {ClassConfig::car(), ClassConfig::pedestrian(),
                                      ClassConfig::cyclist()};
  PoolConfig pool;
  NmsConfig nms;
  LossConfig loss;
  AugmentConfig augment;
  SynthSpec synth;
  RecallCompareConfig recall;
  NmsCompareConfig nms_compare;
  ApConfig eval;
};

// Throws std::invalid_argument, including every section's own validation.
void validate(const PipelineConfig& config);

// Experiment configs with the shared top-level sections copied in.
RecallCompareConfig resolved_recall(const PipelineConfig& config);
NmsCompareConfig resolved_nms_compare(const PipelineConfig& config);

// Throws std::runtime_error naming the offending key path or file.
PipelineConfig config_from_json(const std::string& text);
std::string config_to_json(const PipelineConfig& config);
PipelineConfig load_config(const std::string& path);
void save_config(const PipelineConfig& config, const std::string& path);

}  // namespace stdet
