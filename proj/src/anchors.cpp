#include "stdet/anchors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace stdet {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kMinDecodedSize = 1e-3;

// IoU of two equal-radius disks from the lens formula.
double disk_iou(double ax, double ay, double bx, double by, double r) {
  const double dx = bx - ax;
  const double dy = by - ay;
  const double d = std::sqrt(dx * dx + dy * dy);
  if (d >= 2.0 * r) return 0.0;
  const double lens =
      2.0 * r * r * std::acos(d / (2.0 * r)) - 0.5 * d * std::sqrt(4.0 * r * r - d * d);
  const double uni = 2.0 * kPi * r * r - lens;
  return uni > 0.0 ? lens / uni : 1.0;
}

Box3D footprint_box(const SphericalAnchor& anchor) {
  Box3D box;
  box.cx = anchor.center.x;
  box.cy = anchor.center.y;
  box.cz = 0.0;
  box.l = anchor.config->ref_l;
  box.w = anchor.config->ref_w;
  box.h = 1.0;
  box.yaw = 0.0;
  return box;
}

const ClassConfig& config_of(const SphericalAnchor& anchor) {
  if (anchor.config == nullptr) throw std::invalid_argument("anchor has no class config");
  return *anchor.config;
}

}  // namespace

ClassConfig ClassConfig::car() { return {"car", 2.0, 3.9, 1.6, 1.6, 12}; }

ClassConfig ClassConfig::pedestrian() { return {"pedestrian", 1.0, 0.8, 0.8, 1.6, 12}; }

ClassConfig ClassConfig::cyclist() { return {"cyclist", 1.0, 1.6, 0.8, 1.6, 12}; }

void validate(const ClassConfig& config) {
  if (!(config.radius > 0.0)) throw std::invalid_argument("anchor radius must be > 0");
  if (!(config.ref_l > 0.0 && config.ref_w > 0.0 && config.ref_h > 0.0))
    throw std::invalid_argument("reference sizes must be > 0");
  if (config.num_angle_bins < 2)
    throw std::invalid_argument("need at least 2 angle bins");
}

std::vector<SphericalAnchor> seed_anchors(const PointCloud& cloud,
                                          const ClassConfig& config) {
  validate(config);
  std::vector<SphericalAnchor> anchors;
  anchors.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    SphericalAnchor a;
    a.center = cloud.points[i];
    a.point_index = static_cast<int>(i);
    a.config = &config;
    anchors.push_back(a);
  }
  return anchors;
}

double points_iou(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::vector<int> sa = a;
  std::vector<int> sb = b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  std::size_t inter = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < sa.size() && j < sb.size()) {
    if (sa[i] < sb[j]) {
      ++i;
    } else if (sb[j] < sa[i]) {
      ++j;
    } else {
      ++inter;
      ++i;
      ++j;
    }
  }
  const std::size_t uni = sa.size() + sb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<AnchorLabel> assign_labels(const std::vector<SphericalAnchor>& anchors,
                                       const std::vector<Box3D>& gt_boxes,
                                       const PointCloud& cloud, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw std::invalid_argument("threshold must lie in (0, 1)");
  std::vector<std::vector<int>> box_sets;
  box_sets.reserve(gt_boxes.size());
  for (const Box3D& box : gt_boxes) box_sets.push_back(points_in_box(cloud, box));

  std::vector<AnchorLabel> labels(anchors.size());
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const SphericalAnchor& anchor = anchors[i];
    const std::vector<int> sphere =
        points_in_sphere(cloud, anchor.center, config_of(anchor).radius);
    AnchorLabel& lab = labels[i];
    for (std::size_t g = 0; g < box_sets.size(); ++g) {
      const double iou = points_iou(sphere, box_sets[g]);
      if (iou > lab.points_iou) {
        lab.points_iou = iou;
        lab.matched_gt = static_cast<int>(g);
      }
    }
    if (lab.points_iou > threshold) {
      lab.label = AnchorLabelKind::kPositive;
    } else {
      lab.matched_gt = -1;
    }
  }
  return labels;
}

std::vector<SphericalAnchor> filter_anchors(const std::vector<SphericalAnchor>& anchors,
                                            const std::vector<double>& scores,
                                            double bev_iou_threshold, int max_keep,
                                            AnchorFootprint footprint) {
  if (scores.size() != anchors.size())
    throw std::invalid_argument("one score per anchor required");
  std::vector<int> order(anchors.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&scores](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });

  std::vector<SphericalAnchor> kept;
  std::vector<Box3D> kept_boxes;
  for (const int idx : order) {
    if (static_cast<int>(kept.size()) >= max_keep) break;
    const SphericalAnchor& cand = anchors[idx];
    const double radius = config_of(cand).radius;
    const Box3D cand_box = footprint_box(cand);
    bool suppressed = false;
    for (std::size_t k = 0; k < kept.size() && !suppressed; ++k) {
      const double iou =
          footprint == AnchorFootprint::kDisk
              ? disk_iou(kept[k].center.x, kept[k].center.y, cand.center.x,
                         cand.center.y, radius)
              : rotated_bev_iou(kept_boxes[k], cand_box);
      suppressed = iou > bev_iou_threshold;
    }
    if (!suppressed) {
      SphericalAnchor survivor = cand;
      survivor.score = scores[idx];
      kept.push_back(survivor);
      kept_boxes.push_back(cand_box);
    }
  }
  return kept;
}

std::pair<int, double> encode_angle(double yaw, int num_bins) {
  if (num_bins < 2) throw std::invalid_argument("need at least 2 angle bins");
  const double width = 2.0 * kPi / num_bins;
  const double t = normalize_angle(yaw) + kPi;  // in (0, 2pi]
  int bin = static_cast<int>(std::floor(t / width));
  bin = std::min(std::max(bin, 0), num_bins - 1);
  const double center = -kPi + (bin + 0.5) * width;
  return {bin, normalize_angle(yaw) - center};
}

double decode_angle(int bin, double residual, int num_bins) {
  if (num_bins < 2) throw std::invalid_argument("need at least 2 angle bins");
  if (bin < 0 || bin >= num_bins) throw std::out_of_range("angle bin out of range");
  const double width = 2.0 * kPi / num_bins;
  const double center = -kPi + (bin + 0.5) * width;
  return normalize_angle(center + residual);
}

ProposalTarget encode_targets(const SphericalAnchor& anchor, const Box3D& gt) {
  if (!box_is_finite(gt)) throw std::invalid_argument("non-finite ground-truth box");
  const ClassConfig& config = config_of(anchor);
  validate(config);
  ProposalTarget target;
  target.ctr[0] = gt.cx - anchor.center.x;
  target.ctr[1] = gt.cy - anchor.center.y;
  target.ctr[2] = gt.cz - anchor.center.z;
  target.size[0] = (gt.l - config.ref_l) / config.ref_l;
  target.size[1] = (gt.w - config.ref_w) / config.ref_w;
  target.size[2] = (gt.h - config.ref_h) / config.ref_h;
  const auto [bin, res] = encode_angle(gt.yaw, config.num_angle_bins);
  target.angle_bin = bin;
  target.angle_res = res;
  return target;
}

Box3D decode_targets(const SphericalAnchor& anchor, const ProposalTarget& target,
                     bool* clamped) {
  const ClassConfig& config = config_of(anchor);
  validate(config);
  if (clamped != nullptr) *clamped = false;
  Box3D box;
  box.cx = anchor.center.x + target.ctr[0];
  box.cy = anchor.center.y + target.ctr[1];
  box.cz = anchor.center.z + target.ctr[2];
  const double ref[3] = {config.ref_l, config.ref_w, config.ref_h};
  double* dims[3] = {&box.l, &box.w, &box.h};
  for (int i = 0; i < 3; ++i) {
    double v = ref[i] * (1.0 + target.size[i]);
    if (v <= 0.0) {
      v = kMinDecodedSize;
      if (clamped != nullptr) *clamped = true;
    }
    *dims[i] = v;
  }
  box.yaw = decode_angle(target.angle_bin, target.angle_res, config.num_angle_bins);
  return box;
}

ScoreProvider constant_score(double value) {
  return [value](const Point3&) { return value; };
}

ScoreProvider gt_surface_score(std::vector<Box3D> gt_boxes, double sharpness) {
  return [boxes = std::move(gt_boxes), sharpness](const Point3& p) {
    if (boxes.empty()) return 0.0;
    double best = box_signed_distance(boxes[0], p);
    for (std::size_t i = 1; i < boxes.size(); ++i)
      best = std::min(best, box_signed_distance(boxes[i], p));
    return 1.0 / (1.0 + std::exp(sharpness * best));
  };
}

void score_anchors(std::vector<SphericalAnchor>& anchors, const ScoreProvider& provider) {
  for (SphericalAnchor& anchor : anchors) anchor.score = provider(anchor.center);
}

}  // namespace stdet
