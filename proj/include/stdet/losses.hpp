#pragma once

#include <array>
#include <vector>

#include "stdet/geometry.hpp"

// Training objectives as pure value+gradient functions. Every loss returns
// its scalar value together with the exact analytic gradient over its
// prediction inputs, laid out as documented per function, so everything can
// be checked against central finite differences without any autograd.

namespace stdet {

struct LossConfig {
  double focal_alpha = 0.25;
  double focal_gamma = 2.0;
  double lambda = 1.0;  // weight of the positive-only regression terms
  double delta = 1.0;   // smooth-L1 transition point
  int num_angle_bins = 12;
};

// Throws std::invalid_argument when a field is out of its documented range.
void validate(const LossConfig& config);

struct LossValue {
  double value = 0.0;
  std::vector<double> gradient;
};

// Elementwise 0.5 x^2/delta for |x| < delta else |x| - 0.5 delta, summed over
// the vector; x = pred - target. Gradient over pred.
LossValue smooth_l1(const std::vector<double>& pred, const std::vector<double>& target,
                    double delta = 1.0);

// -alpha (1 - p_t)^gamma log(p_t). p_t below 1e-7 is clamped there and
// *clamped set when provided. Gradient w.r.t. p_t (one entry).
LossValue focal_loss(double p_t, double alpha, double gamma, bool* clamped = nullptr);

// -log softmax(logits)[label], max-stabilized. Gradient = softmax - one_hot.
LossValue softmax_ce(const std::vector<double>& logits, int label);

// Smooth-L1 on the center residuals plus smooth-L1 on the size residuals.
// Gradient layout: [ctr x3, size x3].
LossValue location_loss(const std::array<double, 3>& pred_ctr,
                        const std::array<double, 3>& pred_size,
                        const std::array<double, 3>& target_ctr,
                        const std::array<double, 3>& target_size, double delta = 1.0);

// Softmax-CE over the angle bins plus smooth-L1 on the (unnormalized)
// residual. Gradient layout: [bin logits..., residual].
LossValue angle_loss(const std::vector<double>& bin_logits, double pred_residual,
                     int target_bin, double target_residual, double delta = 1.0);

// Sum over the 8 order-matched corners of the Euclidean distance between the
// boxes. Subgradient 0 at coincident corners. Gradient over the predicted
// box as [cx, cy, cz, l, w, h, yaw]. With flip_min, the ground truth may
// also be matched with its yaw flipped by pi and the smaller sum is used.
LossValue corner_loss(const Box3D& pred, const Box3D& gt, bool flip_min = false);

// Smooth-L1 between the predicted IoU and the actual 3D IoU of the proposal
// against its matched ground truth (computed internally, treated as a
// constant target). Gradient w.r.t. predicted_iou (one entry). Throws on
// non-finite boxes.
LossValue iou_branch_loss(double predicted_iou, const Box3D& proposal, const Box3D& gt,
                          double delta = 1.0);

// One anchor's heads and (when positive) its regression targets.
struct AnchorPrediction {
  std::vector<double> cls_logits;  // anchor classification head
  int label = 0;                   // ground-truth class, >= 1 means positive
  std::array<double, 3> ctr = {0, 0, 0};
  std::array<double, 3> size = {0, 0, 0};
  std::vector<double> angle_logits;  // num_angle_bins entries
  double angle_res = 0.0;
  std::array<double, 3> target_ctr = {0, 0, 0};
  std::array<double, 3> target_size = {0, 0, 0};
  int target_bin = 0;
  double target_res = 0.0;
};

// Proposal-stage batch: per-point segmentation probabilities with binary
// foreground labels, plus per-anchor predictions.
struct ProposalBatch {
  std::vector<double> seg_probs;  // foreground probability per point, (0, 1]
  std::vector<int> seg_labels;    // 1 = foreground, 0 = background
  std::vector<AnchorPrediction> anchors;
};

// Mean focal loss over points + mean anchor classification CE + lambda *
// (positives-only mean of location + angle losses); the regression term is
// exactly 0 when no anchor is positive. Throws on an empty anchor list.
// Gradient layout: [seg_probs...] then per anchor
// [cls_logits..., ctr x3, size x3, angle_logits..., angle_res].
LossValue proposal_loss(const ProposalBatch& batch, const LossConfig& config);

// One second-stage proposal: heads, the decoded box (differentiable, feeds
// the corner loss), and constants (first-stage proposal box for the IoU
// target, matched ground truth, regression targets).
struct BoxPrediction {
  std::vector<double> cls_logits;
  int label = 0;  // >= 1 positive
  std::array<double, 3> ctr = {0, 0, 0};
  std::array<double, 3> size = {0, 0, 0};
  std::vector<double> angle_logits;
  double angle_res = 0.0;
  double predicted_iou = 0.0;
  Box3D decoded;  // second-stage box prediction
  Box3D proposal;  // first-stage box (constant): source of the IoU target
  Box3D gt;        // matched ground truth (constant, valid when positive)
  std::array<double, 3> target_ctr = {0, 0, 0};
  std::array<double, 3> target_size = {0, 0, 0};
  int target_bin = 0;
  double target_res = 0.0;
};

struct BoxBatch {
  std::vector<BoxPrediction> proposals;
};

// Mean classification CE + lambda * (positives-only mean of location, angle,
// corner, and IoU-branch losses). Corner and IoU terms vanish on an
// all-negative batch. Throws on an empty batch. Gradient layout per proposal:
// [cls_logits..., ctr x3, size x3, angle_logits..., angle_res,
//  predicted_iou, decoded box x7].
LossValue box_loss(const BoxBatch& batch, const LossConfig& config);

// Sum of the two stage losses; gradient is the concatenation.
LossValue total_loss(const LossValue& proposal, const LossValue& box);

}  // namespace stdet
