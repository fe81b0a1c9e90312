#include "stdet/eval.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace stdet {
namespace {

struct FlatDet {
  double score;
  int scene;
  int index;
};

double pair_iou(const Box3D& a, const Box3D& b, IouMetric metric) {
  return metric == IouMetric::kBevRotated ? rotated_bev_iou(a, b) : iou_3d(a, b);
}

std::vector<FlatDet> sorted_detections(
    const std::vector<std::vector<ScoredBox>>& dets_per_scene, int class_id) {
  std::vector<FlatDet> flat;
  for (std::size_t s = 0; s < dets_per_scene.size(); ++s)
    for (std::size_t i = 0; i < dets_per_scene[s].size(); ++i)
      if (dets_per_scene[s][i].class_id == class_id)
        flat.push_back({dets_per_scene[s][i].score, static_cast<int>(s),
                        static_cast<int>(i)});
  std::stable_sort(flat.begin(), flat.end(),
                   [](const FlatDet& a, const FlatDet& b) { return a.score > b.score; });
  return flat;
}

}  // namespace

ApResult average_precision(const std::vector<std::vector<ScoredBox>>& dets_per_scene,
                           const std::vector<std::vector<GroundTruth>>& gts_per_scene,
                           const ApConfig& config) {
  if (dets_per_scene.size() != gts_per_scene.size())
    throw std::invalid_argument("detections and ground truth scene counts differ");
  if (!(config.iou_threshold >= 0 && config.iou_threshold <= 1))
    throw std::invalid_argument("iou threshold must be in [0, 1]");

  // A GT is relevant when its class matches and it is no harder than the
  // requested bucket; same-class harder GT and DontCare regions are ignorable
  // (absorb detections silently); other classes are invisible to this run.
  const auto relevance = [&](const GroundTruth& gt) -> int {  // 1 rel, 0 ign, -1 out
    if (gt.class_id == -1) return 0;
    if (gt.class_id != config.class_id) return -1;
    if (gt.difficulty == Difficulty::kIgnored ||
        static_cast<int>(gt.difficulty) > static_cast<int>(config.difficulty))
      return 0;
    return 1;
  };

  ApResult result;
  for (const auto& gts : gts_per_scene)
    for (const GroundTruth& gt : gts)
      if (relevance(gt) == 1) ++result.relevant_gt;
  if (result.relevant_gt == 0) return result;
  result.defined = true;

  std::vector<std::vector<bool>> matched(gts_per_scene.size());
  for (std::size_t s = 0; s < gts_per_scene.size(); ++s)
    matched[s].assign(gts_per_scene[s].size(), false);

  // Descending-score sweep building the raw precision/recall staircase.
  std::vector<double> precisions, recalls;
  int tp = 0, fp = 0;
  for (const FlatDet& det : sorted_detections(dets_per_scene, config.class_id)) {
    const Box3D& box = dets_per_scene[det.scene][det.index].box;
    const auto& gts = gts_per_scene[det.scene];
    int best_rel = -1, best_ign = -1;
    double best_rel_iou = 0.0, best_ign_iou = 0.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (matched[det.scene][g]) continue;
      const int rel = relevance(gts[g]);
      if (rel < 0) continue;
      const double iou = pair_iou(box, gts[g].box, config.metric);
      if (iou < config.iou_threshold) continue;
      if (rel == 1 && iou > best_rel_iou) {
        best_rel_iou = iou;
        best_rel = static_cast<int>(g);
      } else if (rel == 0 && iou > best_ign_iou) {
        best_ign_iou = iou;
        best_ign = static_cast<int>(g);
      }
    }
    if (best_rel >= 0) {
      matched[det.scene][best_rel] = true;
      ++tp;
    } else if (best_ign >= 0) {
      matched[det.scene][best_ign] = true;
      continue;  // absorbed by ignorable GT: neither tp nor fp
    } else {
      ++fp;
    }
    precisions.push_back(static_cast<double>(tp) / (tp + fp));
    recalls.push_back(static_cast<double>(tp) / result.relevant_gt);
  }

  // Interpolated precision: best precision at recall >= r.
  std::vector<double> interp(precisions.size());
  double running = 0.0;
  for (std::size_t i = precisions.size(); i-- > 0;) {
    running = std::max(running, precisions[i]);
    interp[i] = running;
  }
  const auto precision_at = [&](double r) {
    const auto it = std::lower_bound(recalls.begin(), recalls.end(), r);
    if (it == recalls.end()) return 0.0;
    return interp[static_cast<std::size_t>(it - recalls.begin())];
  };

  double sum = 0.0;
  if (config.interp == Interp::kR11) {
    for (int k = 0; k <= 10; ++k) sum += precision_at(k / 10.0);
    result.value = sum / 11.0;
  } else {
    for (int k = 1; k <= 40; ++k) sum += precision_at(k / 40.0);
    result.value = sum / 40.0;
  }
  return result;
}

std::optional<double> proposal_recall(
    const std::vector<std::vector<ScoredBox>>& proposals_per_scene,
    const std::vector<std::vector<GroundTruth>>& gts_per_scene, double iou_threshold,
    int top_k) {
  if (proposals_per_scene.size() != gts_per_scene.size())
    throw std::invalid_argument("proposal and ground truth scene counts differ");
  if (top_k < 0) throw std::invalid_argument("top_k must be non-negative");

  int total = 0, hit = 0;
  for (std::size_t s = 0; s < gts_per_scene.size(); ++s) {
    const auto& gts = gts_per_scene[s];
    for (const GroundTruth& gt : gts)
      if (gt.difficulty != Difficulty::kIgnored) ++total;

    std::vector<int> order(proposals_per_scene[s].size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return proposals_per_scene[s][a].score > proposals_per_scene[s][b].score;
    });
    if (static_cast<int>(order.size()) > top_k) order.resize(top_k);

    std::vector<bool> matched(gts.size(), false);
    for (const int p : order) {
      int best = -1;
      double best_iou = 0.0;
      for (std::size_t g = 0; g < gts.size(); ++g) {
        if (matched[g] || gts[g].difficulty == Difficulty::kIgnored) continue;
        const double iou =
            rotated_bev_iou(proposals_per_scene[s][p].box, gts[g].box);
        if (iou >= iou_threshold && iou > best_iou) {
          best_iou = iou;
          best = static_cast<int>(g);
        }
      }
      if (best >= 0) {
        matched[best] = true;
        ++hit;
      }
    }
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(hit) / total;
}

}  // namespace stdet
