#include "stdet/nms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace stdet {
namespace {

constexpr double kSoftScoreFloor = 1e-3;

double pair_iou(const Box3D& a, const Box3D& b, IouMetric metric) {
  return metric == IouMetric::kBevRotated ? rotated_bev_iou(a, b) : iou_3d(a, b);
}

// Indices sorted by (score desc, index asc); deterministic for equal scores.
std::vector<int> ranked_order(const std::vector<double>& scores) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return scores[a] > scores[b];
  });
  return order;
}

}  // namespace

void validate(const NmsConfig& config) {
  if (!(config.threshold >= 0.0 && config.threshold <= 1.0))
    throw std::invalid_argument("nms threshold must be in [0, 1]");
  if (!(config.sigma > 0.0))
    throw std::invalid_argument("soft-nms sigma must be positive");
  if (config.max_keep <= 0)
    throw std::invalid_argument("max_keep must be positive");
}

std::vector<double> rank_scores(const std::vector<Detection>& dets,
                                NmsStrategy strategy,
                                const std::vector<Box3D>* gt_boxes) {
  std::vector<double> scores;
  scores.reserve(dets.size());
  switch (strategy) {
    case NmsStrategy::kScore:
    case NmsStrategy::kSoft:
      for (const Detection& d : dets) scores.push_back(d.cls_score);
      break;
    case NmsStrategy::kIouGuided:
      for (const Detection& d : dets) {
        if (!d.predicted_iou)
          throw std::invalid_argument("iou_guided ranking requires predicted_iou");
        scores.push_back(d.cls_score * *d.predicted_iou);
      }
      break;
    case NmsStrategy::kOracle:
      if (gt_boxes == nullptr)
        throw std::invalid_argument("oracle ranking requires ground-truth boxes");
      for (const Detection& d : dets) {
        double best = 0.0;
        for (const Box3D& gt : *gt_boxes) best = std::max(best, iou_3d(d.box, gt));
        scores.push_back(best);
      }
      break;
  }
  return scores;
}

std::vector<int> nms(const std::vector<Detection>& dets,
                     const std::vector<double>& scores, const NmsConfig& config) {
  validate(config);
  if (dets.size() != scores.size())
    throw std::invalid_argument("one ranking score per detection required");

  const std::vector<int> order = ranked_order(scores);
  std::vector<bool> suppressed(dets.size(), false);
  std::vector<int> kept;
  for (const int i : order) {
    if (suppressed[i]) continue;
    kept.push_back(i);
    if (static_cast<int>(kept.size()) >= config.max_keep) break;
    for (const int j : order) {
      if (suppressed[j] || j == i) continue;
      if (pair_iou(dets[i].box, dets[j].box, config.metric) > config.threshold)
        suppressed[j] = true;
    }
  }
  return kept;
}

std::vector<RescoredDetection> soft_nms(const std::vector<Detection>& dets,
                                        const std::vector<double>& scores,
                                        const NmsConfig& config) {
  validate(config);
  if (dets.size() != scores.size())
    throw std::invalid_argument("one ranking score per detection required");

  std::vector<double> live = scores;
  std::vector<bool> frozen(dets.size(), false);
  std::vector<RescoredDetection> out;
  for (std::size_t round = 0; round < dets.size(); ++round) {
    int best = -1;
    for (std::size_t i = 0; i < dets.size(); ++i) {
      if (frozen[i]) continue;
      if (best < 0 || live[i] > live[best]) best = static_cast<int>(i);
    }
    frozen[best] = true;
    out.push_back({best, live[best]});
    for (std::size_t i = 0; i < dets.size(); ++i) {
      if (frozen[i]) continue;
      const double iou = pair_iou(dets[best].box, dets[i].box, config.metric);
      live[i] *= std::exp(-iou * iou / config.sigma);
    }
  }
  std::erase_if(out, [](const RescoredDetection& r) { return r.score < kSoftScoreFloor; });
  if (static_cast<int>(out.size()) > config.max_keep) out.resize(config.max_keep);
  return out;
}

}  // namespace stdet
