#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stdet/anchors.hpp"
#include "stdet/eval.hpp"
#include "stdet/synth.hpp"

namespace stdet {

// Benchmark harnesses shared by the CLI and the acceptance suite. Every run
// is deterministic given (config, seed): scene s draws all of its randomness
// from derive_seed(seed, s), so worker count never changes results.

// ---------- proposal recall: anchor geometry ablation ----------

// kSphere      : orientation-free anchors; yaw comes from the full bin head.
// kCuboidOne   : one anchor per point at yaw 0; the regressor can only
//                refine yaw within [-pi/4, pi/4] of the anchor orientation.
// kCuboidTwo   : two anchors per point (yaw 0 and pi/2), same refinement
//                range each, which doubles the anchor count.
enum class AnchorMode { kSphere, kCuboidOne, kCuboidTwo };
const char* anchor_mode_name(AnchorMode mode);

struct RecallCompareConfig {
  int scenes = 20;
  SynthSpec synth;
  ClassConfig anchor_class = ClassConfig::car();
  double score_sharpness = 2.0;  // surface-score steepness for anchor ranking
  double score_noise = 0.05;
  double filter_iou = 0.3;  // anchor-thinning NMS threshold
  int filter_keep = 300;
  double center_noise = 0.05;  // simulated regressor error, meters
  double size_noise = 0.03;    // relative
  double angle_noise = 0.02;   // radians
  int proposal_budget = 100;   // top-k proposals per scene for recall
  double recall_iou = 0.5;
  int workers = 1;
};
void validate(const RecallCompareConfig& config);

struct RecallModeReport {
  std::string mode;
  double recall = 0.0;
  long long anchors_seeded = 0;  // before filtering, summed over scenes
  long long proposals = 0;       // decoded proposals, summed over scenes
};

struct RecallCompareReport {
  std::vector<RecallModeReport> modes;  // sphere, cuboid_1, cuboid_2
  int scenes = 0;
  std::uint64_t seed = 0;
};

RecallCompareReport run_recall_compare(const RecallCompareConfig& config,
                                       std::uint64_t seed);
const RecallModeReport& mode_report(const RecallCompareReport& report,
                                    AnchorMode mode);

// ---------- NMS ranking strategy comparison ----------

// Detections are duplicates jittered around each ground truth plus background
// false positives. Classification scores are drawn independently of the
// jitter so they carry no localization signal; predicted IoU is the true 3D
// IoU plus bounded noise on duplicates but pure noise on background boxes
// (the IoU branch never trains on negatives).
struct NmsCompareConfig {
  int scenes = 20;
  SynthSpec synth;
  int dets_per_gt = 6;
  int false_positives = 12;
  double center_spread = 0.45;  // duplicate jitter, meters in the ground plane
  double yaw_spread = 0.25;     // radians
  double size_spread = 0.12;    // relative
  double iou_noise = 0.05;      // |predicted - true| bound on duplicates
  double nms_threshold = 0.5;
  double eval_iou = 0.7;
  int max_keep = 100;
  int workers = 1;
};
void validate(const NmsCompareConfig& config);

struct NmsStrategyReport {
  std::string strategy;  // score, soft, iou_guided, iou_pred, oracle
  double ap = 0.0;
};

struct NmsCompareReport {
  std::vector<NmsStrategyReport> strategies;
  int scenes = 0;
  std::uint64_t seed = 0;
};

NmsCompareReport run_nms_compare(const NmsCompareConfig& config, std::uint64_t seed);
double strategy_ap(const NmsCompareReport& report, const std::string& strategy);

}  // namespace stdet
