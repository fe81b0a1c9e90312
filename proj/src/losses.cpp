#include "stdet/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stdet {

namespace {

constexpr double kProbFloor = 1e-7;

double sign(double x) { return x < 0.0 ? -1.0 : (x > 0.0 ? 1.0 : 0.0); }

// value + d/dx of one smooth-L1 element, x = pred - target.
std::pair<double, double> huber(double x, double delta) {
  const double ax = std::fabs(x);
  if (ax < delta) return {0.5 * x * x / delta, x / delta};
  return {ax - 0.5 * delta, sign(x)};
}

std::vector<double> softmax(const std::vector<double>& logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

// Corner sign template matching the documented box_corners order: bottom
// face CCW from front-left, then the top face.
constexpr int kSx[4] = {+1, -1, -1, +1};
constexpr int kSy[4] = {+1, +1, -1, -1};

// Direct-matched corner loss with gradient over pred's 7 box parameters.
LossValue corner_loss_direct(const Box3D& pred, const Box3D& gt) {
  LossValue out;
  out.gradient.assign(7, 0.0);
  const std::array<Point3, 8> gt_corners = box_corners(gt);
  const double c = std::cos(pred.yaw);
  const double s = std::sin(pred.yaw);
  for (int k = 0; k < 8; ++k) {
    const double sx = kSx[k % 4];
    const double sy = kSy[k % 4];
    const double sz = k < 4 ? -1.0 : 1.0;
    const double lx = 0.5 * sx * pred.l;
    const double ly = 0.5 * sy * pred.w;
    const double px = pred.cx + c * lx - s * ly;
    const double py = pred.cy + s * lx + c * ly;
    const double pz = pred.cz + 0.5 * sz * pred.h;
    const double dx = px - gt_corners[k].x;
    const double dy = py - gt_corners[k].y;
    const double dz = pz - gt_corners[k].z;
    const double n = std::sqrt(dx * dx + dy * dy + dz * dz);
    out.value += n;
    if (n == 0.0) continue;  // subgradient 0 at a coincident corner
    const double ux = dx / n;
    const double uy = dy / n;
    const double uz = dz / n;
    out.gradient[0] += ux;
    out.gradient[1] += uy;
    out.gradient[2] += uz;
    out.gradient[3] += ux * (c * 0.5 * sx) + uy * (s * 0.5 * sx);
    out.gradient[4] += ux * (-s * 0.5 * sy) + uy * (c * 0.5 * sy);
    out.gradient[5] += uz * (0.5 * sz);
    out.gradient[6] += ux * (-s * lx - c * ly) + uy * (c * lx - s * ly);
  }
  return out;
}

void append(std::vector<double>& dst, const std::vector<double>& src, double scale) {
  for (const double v : src) dst.push_back(scale * v);
}

}  // namespace

void validate(const LossConfig& config) {
  if (!(config.focal_alpha > 0.0 && config.focal_alpha < 1.0))
    throw std::invalid_argument("focal_alpha must lie in (0, 1)");
  if (!(config.focal_gamma >= 0.0)) throw std::invalid_argument("focal_gamma must be >= 0");
  if (!(config.lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
  if (!(config.delta > 0.0)) throw std::invalid_argument("delta must be > 0");
  if (config.num_angle_bins < 2) throw std::invalid_argument("need at least 2 angle bins");
}

LossValue smooth_l1(const std::vector<double>& pred, const std::vector<double>& target,
                    double delta) {
  if (pred.size() != target.size())
    throw std::invalid_argument("smooth_l1 length mismatch");
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be > 0");
  LossValue out;
  out.gradient.reserve(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto [v, g] = huber(pred[i] - target[i], delta);
    out.value += v;
    out.gradient.push_back(g);
  }
  return out;
}

LossValue focal_loss(double p_t, double alpha, double gamma, bool* clamped) {
  if (clamped != nullptr) *clamped = false;
  if (p_t > 1.0) throw std::invalid_argument("p_t must be <= 1");
  if (p_t < kProbFloor) {
    p_t = kProbFloor;
    if (clamped != nullptr) *clamped = true;
  }
  const double u = 1.0 - p_t;
  const double log_p = std::log(p_t);
  LossValue out;
  out.value = -alpha * std::pow(u, gamma) * log_p;
  double grad;
  if (u == 0.0) {
    grad = gamma == 0.0 ? -alpha / p_t : 0.0;
  } else {
    grad = alpha * gamma * std::pow(u, gamma - 1.0) * log_p -
           alpha * std::pow(u, gamma) / p_t;
  }
  out.gradient = {grad};
  return out;
}

LossValue softmax_ce(const std::vector<double>& logits, int label) {
  if (logits.empty()) throw std::invalid_argument("empty logits");
  if (label < 0 || label >= static_cast<int>(logits.size()))
    throw std::out_of_range("label out of range");
  const std::vector<double> p = softmax(logits);
  // log-sum-exp form: exact even when the label's softmax underflows.
  const double peak = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (const double v : logits) sum += std::exp(v - peak);
  LossValue out;
  out.value = std::log(sum) - (logits[label] - peak);
  out.gradient = p;
  out.gradient[label] -= 1.0;
  return out;
}

LossValue location_loss(const std::array<double, 3>& pred_ctr,
                        const std::array<double, 3>& pred_size,
                        const std::array<double, 3>& target_ctr,
                        const std::array<double, 3>& target_size, double delta) {
  LossValue out;
  out.gradient.reserve(6);
  for (int i = 0; i < 3; ++i) {
    const auto [v, g] = huber(pred_ctr[i] - target_ctr[i], delta);
    out.value += v;
    out.gradient.push_back(g);
  }
  for (int i = 0; i < 3; ++i) {
    const auto [v, g] = huber(pred_size[i] - target_size[i], delta);
    out.value += v;
    out.gradient.push_back(g);
  }
  return out;
}

LossValue angle_loss(const std::vector<double>& bin_logits, double pred_residual,
                     int target_bin, double target_residual, double delta) {
  const LossValue ce = softmax_ce(bin_logits, target_bin);
  const auto [res_value, res_grad] = huber(pred_residual - target_residual, delta);
  LossValue out;
  out.value = ce.value + res_value;
  out.gradient = ce.gradient;
  out.gradient.push_back(res_grad);
  return out;
}

LossValue corner_loss(const Box3D& pred, const Box3D& gt, bool flip_min) {
  if (!box_is_finite(pred) || !box_is_finite(gt))
    throw std::invalid_argument("non-finite box");
  LossValue direct = corner_loss_direct(pred, gt);
  if (!flip_min) return direct;
  Box3D flipped = gt;
  flipped.yaw = normalize_angle(gt.yaw + 3.14159265358979323846);
  LossValue other = corner_loss_direct(pred, flipped);
  return other.value < direct.value ? other : direct;
}

LossValue iou_branch_loss(double predicted_iou, const Box3D& proposal, const Box3D& gt,
                          double delta) {
  if (!box_is_finite(proposal) || !box_is_finite(gt))
    throw std::invalid_argument("non-finite box");
  const double target = iou_3d(proposal, gt);
  const auto [v, g] = huber(predicted_iou - target, delta);
  LossValue out;
  out.value = v;
  out.gradient = {g};
  return out;
}

LossValue proposal_loss(const ProposalBatch& batch, const LossConfig& config) {
  validate(config);
  if (batch.anchors.empty()) throw std::invalid_argument("empty anchor batch");
  if (batch.seg_probs.size() != batch.seg_labels.size())
    throw std::invalid_argument("segmentation probs/labels length mismatch");

  LossValue out;

  // Segmentation: mean focal loss over points, p_t flipped for background.
  const std::size_t n_points = batch.seg_probs.size();
  for (std::size_t i = 0; i < n_points; ++i) {
    const bool fg = batch.seg_labels[i] != 0;
    const double p = batch.seg_probs[i];
    const double p_t = fg ? p : 1.0 - p;
    const LossValue fl = focal_loss(p_t, config.focal_alpha, config.focal_gamma);
    out.value += fl.value / n_points;
    out.gradient.push_back((fg ? 1.0 : -1.0) * fl.gradient[0] / n_points);
  }

  const double n_cls = static_cast<double>(batch.anchors.size());
  int n_pos = 0;
  for (const AnchorPrediction& a : batch.anchors)
    if (a.label >= 1) ++n_pos;
  const double reg_scale = n_pos > 0 ? config.lambda / n_pos : 0.0;

  for (const AnchorPrediction& a : batch.anchors) {
    if (static_cast<int>(a.angle_logits.size()) != config.num_angle_bins)
      throw std::invalid_argument("angle head width != num_angle_bins");
    const LossValue ce = softmax_ce(a.cls_logits, a.label);
    out.value += ce.value / n_cls;
    append(out.gradient, ce.gradient, 1.0 / n_cls);

    const bool positive = a.label >= 1;
    LossValue loc, ang;
    if (positive) {
      loc = location_loss(a.ctr, a.size, a.target_ctr, a.target_size, config.delta);
      ang = angle_loss(a.angle_logits, a.angle_res, a.target_bin, a.target_res,
                       config.delta);
      out.value += reg_scale * (loc.value + ang.value);
    } else {
      loc.gradient.assign(6, 0.0);
      ang.gradient.assign(config.num_angle_bins + 1, 0.0);
    }
    append(out.gradient, loc.gradient, positive ? reg_scale : 0.0);
    append(out.gradient, ang.gradient, positive ? reg_scale : 0.0);
  }
  return out;
}

LossValue box_loss(const BoxBatch& batch, const LossConfig& config) {
  validate(config);
  if (batch.proposals.empty()) throw std::invalid_argument("empty proposal batch");

  LossValue out;
  const double n_cls = static_cast<double>(batch.proposals.size());
  int n_pos = 0;
  for (const BoxPrediction& p : batch.proposals)
    if (p.label >= 1) ++n_pos;
  const double reg_scale = n_pos > 0 ? config.lambda / n_pos : 0.0;

  for (const BoxPrediction& p : batch.proposals) {
    if (static_cast<int>(p.angle_logits.size()) != config.num_angle_bins)
      throw std::invalid_argument("angle head width != num_angle_bins");
    const LossValue ce = softmax_ce(p.cls_logits, p.label);
    out.value += ce.value / n_cls;
    append(out.gradient, ce.gradient, 1.0 / n_cls);

    const bool positive = p.label >= 1;
    LossValue loc, ang, corner, iou;
    if (positive) {
      loc = location_loss(p.ctr, p.size, p.target_ctr, p.target_size, config.delta);
      ang = angle_loss(p.angle_logits, p.angle_res, p.target_bin, p.target_res,
                       config.delta);
      corner = corner_loss(p.decoded, p.gt);
      iou = iou_branch_loss(p.predicted_iou, p.proposal, p.gt, config.delta);
      out.value += reg_scale * (loc.value + ang.value + corner.value + iou.value);
    } else {
      loc.gradient.assign(6, 0.0);
      ang.gradient.assign(config.num_angle_bins + 1, 0.0);
      corner.gradient.assign(7, 0.0);
      iou.gradient.assign(1, 0.0);
    }
    const double scale = positive ? reg_scale : 0.0;
    append(out.gradient, loc.gradient, scale);
    append(out.gradient, ang.gradient, scale);
    append(out.gradient, iou.gradient, scale);
    append(out.gradient, corner.gradient, scale);
  }
  return out;
}

LossValue total_loss(const LossValue& proposal, const LossValue& box) {
  LossValue out;
  out.value = proposal.value + box.value;
  out.gradient = proposal.gradient;
  out.gradient.insert(out.gradient.end(), box.gradient.begin(), box.gradient.end());
  return out;
}

}  // namespace stdet
