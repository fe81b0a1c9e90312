#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "stdet/geometry.hpp"

// Spherical anchors: one orientation-free candidate per cloud point with a
// class-specific receptive radius and reference box size. Anchors are scored,
// thinned by BEV NMS, labeled against ground truth via PointsIoU, and turned
// into regression targets with size offsets relative to the reference size
// and a binned angle encoding.

namespace stdet {

struct ClassConfig {
  std::string class_id;
  double radius = 0.0;  // receptive sphere radius, meters
  double ref_l = 0.0;   // reference box size A, meters
  double ref_w = 0.0;
  double ref_h = 0.0;
  int num_angle_bins = 12;

  static ClassConfig car();
  static ClassConfig pedestrian();
  static ClassConfig cyclist();
};

// Throws std::invalid_argument on radius/size <= 0 or num_angle_bins < 2.
void validate(const ClassConfig& config);

struct SphericalAnchor {
  Point3 center;                        // an actual cloud point
  int point_index = -1;                 // its index in the seeding cloud
  const ClassConfig* config = nullptr;  // non-owning; outlives the anchor
  double score = 0.0;                   // in [0, 1], set before filtering
};

enum class AnchorLabelKind { kNegative, kPositive };

struct AnchorLabel {
  AnchorLabelKind label = AnchorLabelKind::kNegative;
  int matched_gt = -1;      // valid iff positive
  double points_iou = 0.0;  // best PointsIoU over the ground truths
};

struct ProposalTarget {
  double ctr[3] = {0.0, 0.0, 0.0};   // G - A center offset, meters
  double size[3] = {0.0, 0.0, 0.0};  // (G - A) / A, unitless
  int angle_bin = 0;
  double angle_res = 0.0;  // radians about the bin center
};

// One anchor per cloud point, centered on it. Empty cloud -> empty list.
std::vector<SphericalAnchor> seed_anchors(const PointCloud& cloud,
                                          const ClassConfig& config);

// |A intersect B| / |A union B| over point index sets; 0 on empty union.
// Sets may be unsorted but must not contain duplicates.
double points_iou(const std::vector<int>& a, const std::vector<int>& b);

// Labels each anchor against the ground truths: positive iff the best
// PointsIoU between the anchor's sphere interior and a box interior exceeds
// threshold; matched_gt is the argmax, ties to the lowest GT index.
std::vector<AnchorLabel> assign_labels(const std::vector<SphericalAnchor>& anchors,
                                       const std::vector<Box3D>& gt_boxes,
                                       const PointCloud& cloud, double threshold);

// BEV footprint used when thinning anchors. The reference rectangle is the
// axis-aligned ref_l x ref_w box around the center (anchors carry no
// orientation); the disk variant uses the sphere's ground-plane projection.
enum class AnchorFootprint { kReferenceRect, kDisk };

// Greedy NMS by descending score (ties to the lower index) over anchor
// footprints; survivors have pairwise IoU <= bev_iou_threshold and come back
// sorted by descending score, at most max_keep of them.
std::vector<SphericalAnchor> filter_anchors(
    const std::vector<SphericalAnchor>& anchors, const std::vector<double>& scores,
    double bev_iou_threshold, int max_keep,
    AnchorFootprint footprint = AnchorFootprint::kReferenceRect);

// (bin id, residual) with bins partitioning (-pi, pi] into num_bins equal
// arcs; bin k is centered at -pi + (k + 0.5) * 2pi/num_bins and the residual
// magnitude never exceeds pi/num_bins.
std::pair<int, double> encode_angle(double yaw, int num_bins);

// bin center + residual, normalized to (-pi, pi]. Throws on a bad bin id.
double decode_angle(int bin, double residual, int num_bins);

// Regression target for a positive anchor: center offset, relative size
// offset against the reference size, binned angle. Throws on non-finite gt.
ProposalTarget encode_targets(const SphericalAnchor& anchor, const Box3D& gt);

// Inverse of encode_targets. Decoded sizes <= 0 clamp to 1e-3 m and set
// *clamped when provided.
Box3D decode_targets(const SphericalAnchor& anchor, const ProposalTarget& target,
                     bool* clamped = nullptr);

// Per-point score in [0, 1], injected where real segmentation scores would
// come from a network.
using ScoreProvider = std::function<double(const Point3&)>;

ScoreProvider constant_score(double value);

// Sigmoid of the negated signed distance to the nearest ground-truth surface:
// deep inside -> 1, far away -> 0, 0.5 on the surface. No boxes -> all 0.
ScoreProvider gt_surface_score(std::vector<Box3D> gt_boxes, double sharpness);

void score_anchors(std::vector<SphericalAnchor>& anchors,
                   const ScoreProvider& provider);

}  // namespace stdet
