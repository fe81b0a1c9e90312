#pragma once

#include <optional>
#include <vector>

#include "stdet/kitti.hpp"
#include "stdet/nms.hpp"

namespace stdet {

// A final detection for evaluation: box, sorting score, class.
struct ScoredBox {
  Box3D box;
  double score = 0.0;
  int class_id = 0;
};

enum class Interp { kR11, kR40 };

struct ApConfig {
  double iou_threshold = 0.7;
  IouMetric metric = IouMetric::kBevRotated;
  Interp interp = Interp::kR11;
  int class_id = 0;
  Difficulty difficulty = Difficulty::kHard;  // cumulative: includes easier GT
};

struct ApResult {
  bool defined = false;  // false when no relevant ground truth exists
  double value = 0.0;
  int relevant_gt = 0;
};

// KITTI-protocol average precision over parallel per-scene lists. Detections
// are matched greedily by descending score to the highest-IoU unmatched
// same-class ground truth at IoU >= threshold. Ground truth harder than
// config.difficulty (or marked ignored) neither scores nor penalizes:
// detections matching it are dropped from the curve. The precision-recall
// staircase is summarized by 11-point (recall grid 0, 0.1, .., 1) or 40-point
// (1/40, .., 1) interpolated AP.
ApResult average_precision(const std::vector<std::vector<ScoredBox>>& dets_per_scene,
                           const std::vector<std::vector<GroundTruth>>& gts_per_scene,
                           const ApConfig& config);

// Fraction of non-ignored ground truths matched one-to-one (greedy, by
// descending proposal score) by the top_k proposals of their scene at
// rotated-BEV IoU >= threshold. Class-blind, as proposals are. Empty ground
// truth yields nullopt.
std::optional<double> proposal_recall(
    const std::vector<std::vector<ScoredBox>>& proposals_per_scene,
    const std::vector<std::vector<GroundTruth>>& gts_per_scene, double iou_threshold,
    int top_k);

}  // namespace stdet
