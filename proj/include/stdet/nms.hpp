#pragma once

#include <optional>
#include <vector>

#include "stdet/geometry.hpp"

namespace stdet {

// One scored box from the detection head.
struct Detection {
  Box3D box;
  double cls_score = 0.0;               // classification confidence in [0,1]
  std::optional<double> predicted_iou;  // IoU-branch output in [0,1], if present
  int class_id = 0;
};

// Ranking strategy for duplicate removal.
//  kScore     : classification score alone.
//  kSoft      : classification score with Gaussian decay (soft_nms).
//  kIouGuided : cls_score * predicted_iou.
//  kOracle    : largest iou_3d against any ground-truth box (analysis only).
enum class NmsStrategy { kScore, kSoft, kIouGuided, kOracle };

enum class IouMetric { kBevRotated, kFull3d };

struct NmsConfig {
  NmsStrategy strategy = NmsStrategy::kScore;
  IouMetric metric = IouMetric::kBevRotated;
  double threshold = 0.5;  // suppress overlap strictly above this
  double sigma = 0.5;      // soft-NMS Gaussian width
  int max_keep = 300;      // 300 while training, 100 at test time
};

// Throws std::invalid_argument on out-of-range fields.
void validate(const NmsConfig& config);

// Per-detection sorting score under `strategy`. kOracle requires gt_boxes
// (empty list scores 0); kIouGuided throws if any predicted_iou is absent.
std::vector<double> rank_scores(const std::vector<Detection>& dets,
                                NmsStrategy strategy,
                                const std::vector<Box3D>* gt_boxes = nullptr);

// Greedy NMS: repeatedly keep the best-ranked remaining detection and drop
// everything overlapping it by more than config.threshold. Returns indices
// into `dets` in kept rank order (score desc, index asc on ties), capped at
// config.max_keep.
std::vector<int> nms(const std::vector<Detection>& dets,
                     const std::vector<double>& scores, const NmsConfig& config);

struct RescoredDetection {
  int index = -1;      // into the input list
  double score = 0.0;  // decayed ranking score
};

// Gaussian soft-NMS: each round freezes the current best and multiplies the
// rest by exp(-iou^2 / sigma). Nothing is removed except by the final floor
// (score < 1e-3) and the max_keep cap. Output is ordered by freeze time,
// which is non-increasing in score.
std::vector<RescoredDetection> soft_nms(const std::vector<Detection>& dets,
                                        const std::vector<double>& scores,
                                        const NmsConfig& config);

}  // namespace stdet
