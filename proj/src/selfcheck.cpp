#include "stdet/selfcheck.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "stdet/anchors.hpp"
#include "stdet/eval.hpp"
#include "stdet/kitti.hpp"
#include "stdet/losses.hpp"
#include "stdet/pool.hpp"
#include "stdet/random.hpp"

// Every check re-derives its expected answer with a deliberately naive
// method (sampling, enumeration, closed forms, central differences) that
// shares no code with the library path it exercises.

namespace stdet {
namespace {

constexpr double kPi = 3.14159265358979323846;

template <typename Body>
CheckResult timed_check(const std::string& name, double tolerance, Body&& body) {
  const auto start = std::chrono::steady_clock::now();
  const double error = body();
  const auto stop = std::chrono::steady_clock::now();
  CheckResult result;
  result.name = name;
  result.tolerance = tolerance;
  result.max_error = error;
  result.passed = error <= tolerance;  // NaN fails
  result.seconds = std::chrono::duration<double>(stop - start).count();
  return result;
}

// ---- naive membership (independent of the geometry module) ----

bool naive_in_rect(double px, double py, double cx, double cy, double l, double w,
                   double yaw) {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  const double dx = px - cx;
  const double dy = py - cy;
  const double lx = c * dx + s * dy;   // rotate by -yaw
  const double ly = -s * dx + c * dy;
  return std::fabs(lx) <= 0.5 * l && std::fabs(ly) <= 0.5 * w;
}

bool naive_in_box(const Point3& p, const Box3D& box) {
  return naive_in_rect(p.x, p.y, box.cx, box.cy, box.l, box.w, box.yaw) &&
         std::fabs(p.z - box.cz) <= 0.5 * box.h;
}

bool naive_in_sphere(const Point3& p, const Point3& center, double radius) {
  const double dx = p.x - center.x;
  const double dy = p.y - center.y;
  const double dz = p.z - center.z;
  return dx * dx + dy * dy + dz * dz <= radius * radius;
}

// Axis-aligned bounding rectangle of a rotated box footprint.
void bev_bounds(const Box3D& box, double& lo_x, double& hi_x, double& lo_y,
                double& hi_y) {
  const double half_x =
      0.5 * (std::fabs(std::cos(box.yaw)) * box.l + std::fabs(std::sin(box.yaw)) * box.w);
  const double half_y =
      0.5 * (std::fabs(std::sin(box.yaw)) * box.l + std::fabs(std::cos(box.yaw)) * box.w);
  lo_x = box.cx - half_x;
  hi_x = box.cx + half_x;
  lo_y = box.cy - half_y;
  hi_y = box.cy + half_y;
}

// Monte-Carlo BEV IoU: the exact footprint areas are l*w, so only the
// intersection needs sampling. Samples are drawn inside the overlap of the
// two bounding rectangles (which contains the intersection), stratified on a
// jittered grid so only boundary-crossing cells contribute variance.
double mc_bev_iou(const Box3D& a, const Box3D& b, int samples, Rng& rng) {
  double a_lo_x, a_hi_x, a_lo_y, a_hi_y, b_lo_x, b_hi_x, b_lo_y, b_hi_y;
  bev_bounds(a, a_lo_x, a_hi_x, a_lo_y, a_hi_y);
  bev_bounds(b, b_lo_x, b_hi_x, b_lo_y, b_hi_y);
  const double lo_x = std::max(a_lo_x, b_lo_x);
  const double hi_x = std::min(a_hi_x, b_hi_x);
  const double lo_y = std::max(a_lo_y, b_lo_y);
  const double hi_y = std::min(a_hi_y, b_hi_y);
  if (lo_x >= hi_x || lo_y >= hi_y) return 0.0;
  const int grid = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(samples))));
  const double step_x = (hi_x - lo_x) / grid;
  const double step_y = (hi_y - lo_y) / grid;
  long hits = 0;
  for (int ix = 0; ix < grid; ++ix) {
    for (int iy = 0; iy < grid; ++iy) {
      const double x = lo_x + (ix + rng.real01()) * step_x;
      const double y = lo_y + (iy + rng.real01()) * step_y;
      if (naive_in_rect(x, y, a.cx, a.cy, a.l, a.w, a.yaw) &&
          naive_in_rect(x, y, b.cx, b.cy, b.l, b.w, b.yaw))
        ++hits;
    }
  }
  const double inter = (hi_x - lo_x) * (hi_y - lo_y) * static_cast<double>(hits) /
                       (static_cast<double>(grid) * grid);
  const double uni = a.l * a.w + b.l * b.w - inter;
  return inter / uni;
}

// Closed-form BEV IoU for boxes whose yaw is a multiple of pi/2.
double aligned_bev_iou(const Box3D& a, const Box3D& b) {
  const auto extents = [](const Box3D& box) {
    const long k = std::lround(box.yaw / (kPi / 2.0));
    const bool swapped = (k % 2) != 0;
    return std::pair<double, double>(swapped ? box.w : box.l, swapped ? box.l : box.w);
  };
  const auto [ax, ay] = extents(a);
  const auto [bx, by] = extents(b);
  const auto overlap = [](double ca, double ea, double cb, double eb) {
    return std::max(std::min(ca + 0.5 * ea, cb + 0.5 * eb) -
                        std::max(ca - 0.5 * ea, cb - 0.5 * eb),
                    0.0);
  };
  const double inter = overlap(a.cx, ax, b.cx, bx) * overlap(a.cy, ay, b.cy, by);
  return inter / (a.l * a.w + b.l * b.w - inter);
}

// ---- finite differences ----

std::vector<double> central_diff(
    const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
    double step = 1e-6) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + step;
    const double fp = f(x);
    x[i] = saved - step;
    const double fm = f(x);
    x[i] = saved;
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

double max_rel_error(const std::vector<double>& got, const std::vector<double>& want) {
  double worst = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i)
    worst = std::max(worst,
                     std::fabs(got[i] - want[i]) / std::max(1.0, std::fabs(want[i])));
  return worst;
}

// ---- individual checks ----

double check_mc_iou(const SelfcheckOptions& options) {
  Rng pair_rng(derive_seed(options.seed, 1));
  double worst = 0.0;
  for (int i = 0; i < options.mc_pairs; ++i) {
    Box3D a;
    a.cx = pair_rng.uniform(-10.0, 10.0);
    a.cy = pair_rng.uniform(-10.0, 10.0);
    a.l = pair_rng.uniform(2.0, 5.0);
    a.w = pair_rng.uniform(1.0, 2.5);
    a.h = 1.0;
    a.yaw = pair_rng.uniform(-kPi, kPi);
    Box3D b = a;
    b.cx += pair_rng.uniform(-3.0, 3.0);
    b.cy += pair_rng.uniform(-3.0, 3.0);
    if (i % 7 == 6) b.cx += 12.0;  // keep some fully disjoint pairs in the mix
    b.l = pair_rng.uniform(2.0, 5.0);
    b.w = pair_rng.uniform(1.0, 2.5);
    b.yaw = pair_rng.uniform(-kPi, kPi);
    const double lib = options.bev_iou_override ? options.bev_iou_override(a, b)
                                                : rotated_bev_iou(a, b);
    Rng mc_rng(derive_seed(options.seed, 1000 + static_cast<std::uint64_t>(i)));
    const double mc = mc_bev_iou(a, b, options.mc_samples, mc_rng);
    worst = std::max(worst, std::fabs(lib - mc));
  }
  return worst;
}

double check_aligned_iou(const SelfcheckOptions& options) {
  Rng rng(derive_seed(options.seed, 2));
  const double yaws[4] = {0.0, kPi / 2.0, -kPi / 2.0, kPi};
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    Box3D a, b;
    for (Box3D* box : {&a, &b}) {
      box->cx = rng.uniform(-5.0, 5.0);
      box->cy = rng.uniform(-5.0, 5.0);
      box->l = rng.uniform(1.0, 5.0);
      box->w = rng.uniform(1.0, 3.0);
      box->h = 1.0;
      box->yaw = yaws[rng.pick(4)];
    }
    worst = std::max(worst, std::fabs(rotated_bev_iou(a, b) - aligned_bev_iou(a, b)));
  }
  return worst;
}

double check_points_iou(const SelfcheckOptions& options) {
  Rng rng(derive_seed(options.seed, 3));
  double worst = 0.0;
  for (int t = 0; t < options.points_iou_triples; ++t) {
    PointCloud cloud;
    for (int i = 0; i < 150; ++i)
      cloud.points.push_back({rng.uniform(-6.0, 6.0), rng.uniform(-6.0, 6.0),
                              rng.uniform(-6.0, 6.0), 0.0});
    const Point3 center{rng.uniform(-4.0, 4.0), rng.uniform(-4.0, 4.0),
                        rng.uniform(-4.0, 4.0), 0.0};
    const double radius = rng.uniform(1.0, 3.0);
    Box3D box;
    box.cx = rng.uniform(-4.0, 4.0);
    box.cy = rng.uniform(-4.0, 4.0);
    box.cz = rng.uniform(-2.0, 2.0);
    box.l = rng.uniform(1.0, 4.0);
    box.w = rng.uniform(1.0, 4.0);
    box.h = rng.uniform(1.0, 3.0);
    box.yaw = rng.uniform(-kPi, kPi);

    const std::vector<int> in_sphere = points_in_sphere(cloud, center, radius);
    const std::vector<int> in_box = points_in_box(cloud, box);
    const double lib = points_iou(in_sphere, in_box);

    // Independent enumeration: membership re-derived per point.
    std::vector<int> naive_sphere, naive_box;
    int both = 0, either = 0;
    for (int i = 0; i < static_cast<int>(cloud.size()); ++i) {
      const bool s = naive_in_sphere(cloud.points[i], center, radius);
      const bool b = naive_in_box(cloud.points[i], box);
      if (s) naive_sphere.push_back(i);
      if (b) naive_box.push_back(i);
      if (s && b) ++both;
      if (s || b) ++either;
    }
    const double naive =
        either == 0 ? 0.0 : static_cast<double>(both) / static_cast<double>(either);
    if (in_sphere != naive_sphere || in_box != naive_box) worst = std::max(worst, 1.0);
    worst = std::max(worst, std::fabs(lib - naive));
  }
  return worst;
}

// Random pooling setup: a box with interior and stray points plus features.
struct PoolSetup {
  PointCloud cloud;
  std::vector<std::vector<double>> features;
  Box3D box;
  PoolConfig config;
};

PoolSetup make_pool_setup(Rng& rng, int interior, int stray, const PoolConfig& config) {
  PoolSetup setup;
  setup.config = config;
  setup.box.cx = rng.uniform(-3.0, 3.0);
  setup.box.cy = rng.uniform(-3.0, 3.0);
  setup.box.cz = rng.uniform(-1.0, 1.0);
  setup.box.l = rng.uniform(2.0, 4.5);
  setup.box.w = rng.uniform(1.2, 2.2);
  setup.box.h = rng.uniform(1.0, 2.0);
  setup.box.yaw = rng.uniform(-kPi, kPi);
  const double c = std::cos(setup.box.yaw);
  const double s = std::sin(setup.box.yaw);
  for (int i = 0; i < interior; ++i) {
    const double lx = rng.uniform(-0.499, 0.499) * setup.box.l;
    const double ly = rng.uniform(-0.499, 0.499) * setup.box.w;
    const double lz = rng.uniform(-0.499, 0.499) * setup.box.h;
    setup.cloud.points.push_back({setup.box.cx + c * lx - s * ly,
                                  setup.box.cy + s * lx + c * ly, setup.box.cz + lz,
                                  0.0});
  }
  for (int i = 0; i < stray; ++i)
    setup.cloud.points.push_back({setup.box.cx + rng.uniform(5.0, 9.0),
                                  setup.box.cy + rng.uniform(5.0, 9.0),
                                  rng.uniform(-2.0, 2.0), 0.0});
  for (std::size_t i = 0; i < setup.cloud.size(); ++i) {
    std::vector<double> f(static_cast<std::size_t>(config.feature_width));
    for (double& v : f) v = rng.normal(0.0, 1.0);
    setup.features.push_back(std::move(f));
  }
  return setup;
}

double check_pool_adjoint(const SelfcheckOptions& options) {
  Rng rng(derive_seed(options.seed, 4));
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    PoolConfig config;
    config.sample_count = 96;
    config.grid_l = 4;
    config.grid_w = 3;
    config.grid_h = 3;
    config.slots_per_voxel = 6;
    config.feature_width = 4;
    const PoolSetup setup = make_pool_setup(rng, 150, 30, config);
    const auto [tensor, routing] =
        pool_forward(setup.cloud, setup.features, setup.box, setup.config,
                     derive_seed(options.seed, 40 + static_cast<std::uint64_t>(trial)));

    PooledTensor cotangent = tensor;
    for (double& v : cotangent.values) v = rng.normal(0.0, 1.0);
    // <F(u), v> restricted to feature channels: coordinates carry no gradient.
    double lhs = 0.0;
    for (std::size_t slot = 0; slot < tensor.slot_count(); ++slot) {
      if (!tensor.mask[slot]) continue;
      for (int c = 3; c < tensor.channels; ++c) {
        const std::size_t off = slot * static_cast<std::size_t>(tensor.channels) +
                                static_cast<std::size_t>(c);
        lhs += tensor.values[off] * cotangent.values[off];
      }
    }
    const std::vector<std::vector<double>> grad = pool_backward(cotangent, routing);
    double rhs = 0.0;
    for (std::size_t i = 0; i < setup.features.size(); ++i)
      for (std::size_t c = 0; c < setup.features[i].size(); ++c)
        rhs += setup.features[i][c] * grad[i][c];
    worst = std::max(worst, std::fabs(lhs - rhs));
  }
  return worst;
}

double check_pool_fd(const SelfcheckOptions& options) {
  Rng rng(derive_seed(options.seed, 5));
  PoolConfig config;
  config.sample_count = 48;
  config.grid_l = 3;
  config.grid_w = 3;
  config.grid_h = 3;
  config.slots_per_voxel = 6;
  config.feature_width = 3;
  const PoolSetup setup = make_pool_setup(rng, 60, 20, config);
  const std::uint64_t pool_seed = derive_seed(options.seed, 50);

  const auto [tensor, routing] =
      pool_forward(setup.cloud, setup.features, setup.box, setup.config, pool_seed);
  PooledTensor weights = tensor;
  for (double& v : weights.values) v = rng.normal(0.0, 1.0);

  const std::size_t width = static_cast<std::size_t>(config.feature_width);
  const auto objective = [&](const std::vector<double>& flat) {
    std::vector<std::vector<double>> features(setup.cloud.size());
    for (std::size_t i = 0; i < features.size(); ++i)
      features[i] = {flat.begin() + static_cast<long>(i * width),
                     flat.begin() + static_cast<long>((i + 1) * width)};
    const auto [out, rec] =
        pool_forward(setup.cloud, features, setup.box, setup.config, pool_seed);
    double sum = 0.0;
    for (std::size_t k = 0; k < out.values.size(); ++k)
      sum += out.values[k] * weights.values[k];
    return sum;
  };

  std::vector<double> flat;
  for (const std::vector<double>& f : setup.features)
    flat.insert(flat.end(), f.begin(), f.end());
  const std::vector<double> fd = central_diff(objective, flat);

  const std::vector<std::vector<double>> grad = pool_backward(weights, routing);
  std::vector<double> analytic;
  for (const std::vector<double>& g : grad)
    analytic.insert(analytic.end(), g.begin(), g.end());
  return max_rel_error(analytic, fd);
}

double check_pool_structure(const SelfcheckOptions& options) {
  Rng rng(derive_seed(options.seed, 6));
  PoolConfig config;  // paper constants: 512 samples, 6x6x6 grid, 35 slots
  config.feature_width = 0;
  const PoolSetup setup = make_pool_setup(rng, 600, 200, config);

  int violations = 0;
  const std::vector<int> sampled =
      sample_interior(setup.cloud, setup.box, config.sample_count,
                      derive_seed(options.seed, 60));
  if (static_cast<int>(sampled.size()) != config.sample_count) ++violations;
  for (std::size_t i = 1; i < sampled.size(); ++i)
    if (sampled[i] <= sampled[i - 1]) ++violations;  // ascending, distinct
  for (const int idx : sampled)
    if (idx < 0 || idx >= 600) ++violations;  // interior points come first

  const auto [tensor, routing] =
      pool_forward(setup.cloud, setup.features, setup.box, setup.config,
                   derive_seed(options.seed, 60));
  if (tensor.grid_l != 6 || tensor.grid_w != 6 || tensor.grid_h != 6 ||
      tensor.slots != 35 || tensor.channels != 3)
    ++violations;
  int occupied = 0;
  for (std::size_t v = 0; v < tensor.voxel_count(); ++v) {
    int per_voxel = 0;
    for (int s = 0; s < tensor.slots; ++s) {
      const std::size_t slot = v * static_cast<std::size_t>(tensor.slots) +
                               static_cast<std::size_t>(s);
      if (tensor.mask[slot]) ++per_voxel;
      if ((tensor.mask[slot] != 0) != (routing.source[slot] >= 0)) ++violations;
    }
    if (per_voxel > config.slots_per_voxel) ++violations;
    occupied += per_voxel;
  }
  if (occupied < 1 || occupied > config.sample_count) ++violations;
  return violations;
}

ProposalBatch make_proposal_batch() {
  ProposalBatch batch;
  batch.seg_probs = {0.7, 0.3, 0.9};
  batch.seg_labels = {1, 0, 1};
  AnchorPrediction positive;
  positive.cls_logits = {0.4, 1.2};
  positive.label = 1;
  positive.ctr = {0.1, -0.2, 0.05};
  positive.size = {0.02, -0.1, 0.07};
  positive.angle_logits = {0.3, -0.5, 0.8, 0.1};
  positive.angle_res = 0.12;
  positive.target_ctr = {-0.15, 0.1, 0.3};
  positive.target_size = {0.2, 0.05, -0.12};
  positive.target_bin = 2;
  positive.target_res = -0.08;
  AnchorPrediction negative;
  negative.cls_logits = {0.9, -0.3};
  negative.label = 0;
  negative.angle_logits = {0.0, 0.2, -0.1, 0.4};
  batch.anchors = {positive, negative};
  return batch;
}

std::vector<double> flatten_proposal(const ProposalBatch& batch) {
  std::vector<double> x(batch.seg_probs);
  for (const AnchorPrediction& a : batch.anchors) {
    x.insert(x.end(), a.cls_logits.begin(), a.cls_logits.end());
    x.insert(x.end(), a.ctr.begin(), a.ctr.end());
    x.insert(x.end(), a.size.begin(), a.size.end());
    x.insert(x.end(), a.angle_logits.begin(), a.angle_logits.end());
    x.push_back(a.angle_res);
  }
  return x;
}

ProposalBatch rebuild_proposal(const ProposalBatch& base, const std::vector<double>& x) {
  ProposalBatch batch = base;
  std::size_t k = 0;
  for (double& p : batch.seg_probs) p = x[k++];
  for (AnchorPrediction& a : batch.anchors) {
    for (double& v : a.cls_logits) v = x[k++];
    for (double& v : a.ctr) v = x[k++];
    for (double& v : a.size) v = x[k++];
    for (double& v : a.angle_logits) v = x[k++];
    a.angle_res = x[k++];
  }
  return batch;
}

BoxBatch make_box_batch() {
  BoxBatch batch;
  BoxPrediction positive;
  positive.cls_logits = {0.2, 1.1};
  positive.label = 1;
  positive.ctr = {0.15, -0.1, 0.2};
  positive.size = {0.05, 0.1, -0.06};
  positive.angle_logits = {0.4, -0.2, 0.6, 0.0};
  positive.angle_res = 0.09;
  positive.predicted_iou = 0.6;
  positive.decoded = {2.1, 0.4, -0.7, 3.8, 1.7, 1.5, 0.5};
  positive.proposal = {2.0, 0.5, -0.6, 3.9, 1.6, 1.5, 0.45};
  positive.gt = {2.3, 0.3, -0.75, 3.7, 1.75, 1.45, 0.7};
  positive.target_ctr = {0.3, -0.2, -0.15};
  positive.target_size = {-0.05, 0.09, -0.03};
  positive.target_bin = 1;
  positive.target_res = 0.05;
  BoxPrediction negative;
  negative.cls_logits = {0.8, -0.4};
  negative.label = 0;
  negative.angle_logits = {0.1, 0.3, -0.2, 0.2};
  negative.decoded = {9.0, 9.0, 0.0, 3.5, 1.6, 1.5, 0.0};
  negative.proposal = negative.decoded;
  negative.gt = negative.decoded;
  batch.proposals = {positive, negative};
  return batch;
}

std::vector<double> flatten_box(const BoxBatch& batch) {
  std::vector<double> x;
  for (const BoxPrediction& p : batch.proposals) {
    x.insert(x.end(), p.cls_logits.begin(), p.cls_logits.end());
    x.insert(x.end(), p.ctr.begin(), p.ctr.end());
    x.insert(x.end(), p.size.begin(), p.size.end());
    x.insert(x.end(), p.angle_logits.begin(), p.angle_logits.end());
    x.push_back(p.angle_res);
    x.push_back(p.predicted_iou);
    x.insert(x.end(), {p.decoded.cx, p.decoded.cy, p.decoded.cz, p.decoded.l, p.decoded.w,
                       p.decoded.h, p.decoded.yaw});
  }
  return x;
}

BoxBatch rebuild_box(const BoxBatch& base, const std::vector<double>& x) {
  BoxBatch batch = base;
  std::size_t k = 0;
  for (BoxPrediction& p : batch.proposals) {
    for (double& v : p.cls_logits) v = x[k++];
    for (double& v : p.ctr) v = x[k++];
    for (double& v : p.size) v = x[k++];
    for (double& v : p.angle_logits) v = x[k++];
    p.angle_res = x[k++];
    p.predicted_iou = x[k++];
    p.decoded.cx = x[k++];
    p.decoded.cy = x[k++];
    p.decoded.cz = x[k++];
    p.decoded.l = x[k++];
    p.decoded.w = x[k++];
    p.decoded.h = x[k++];
    p.decoded.yaw = x[k++];
  }
  return batch;
}

double check_loss_fd(const SelfcheckOptions&) {
  double worst = 0.0;

  {  // smooth L1, mixed quadratic and linear branches, away from the kinks
    const std::vector<double> target = {0.05, 0.0, 0.2};
    const auto f = [&](const std::vector<double>& x) {
      return smooth_l1(x, target).value;
    };
    const std::vector<double> pred = {0.3, -2.0, 1.7};
    worst = std::max(worst, max_rel_error(smooth_l1(pred, target).gradient,
                                          central_diff(f, pred)));
  }
  {  // focal loss in p_t
    for (const double p : {0.3, 0.77}) {
      const auto f = [](const std::vector<double>& x) {
        return focal_loss(x[0], 0.25, 2.0).value;
      };
      worst = std::max(worst, max_rel_error(focal_loss(p, 0.25, 2.0).gradient,
                                            central_diff(f, {p})));
    }
  }
  {  // softmax cross-entropy
    const std::vector<double> logits = {0.2, -1.1, 0.7, 2.3};
    const auto f = [](const std::vector<double>& x) { return softmax_ce(x, 2).value; };
    worst = std::max(worst,
                     max_rel_error(softmax_ce(logits, 2).gradient,
                                   central_diff(f, logits)));
  }
  {  // corner loss over the 7 box parameters
    const Box3D gt = {1.4, 1.8, 0.6, 3.7, 1.7, 1.4, 0.9};
    const auto f = [&](const std::vector<double>& x) {
      return corner_loss({x[0], x[1], x[2], x[3], x[4], x[5], x[6]}, gt).value;
    };
    const std::vector<double> pred = {1.0, 2.0, 0.5, 3.9, 1.6, 1.5, 0.6};
    worst = std::max(
        worst, max_rel_error(
                   corner_loss({pred[0], pred[1], pred[2], pred[3], pred[4], pred[5],
                                pred[6]},
                               gt)
                       .gradient,
                   central_diff(f, pred)));
  }
  {  // IoU-branch loss in the predicted IoU
    const Box3D proposal = {2.0, 0.5, -0.6, 3.9, 1.6, 1.5, 0.45};
    const Box3D gt = {2.3, 0.3, -0.75, 3.7, 1.75, 1.45, 0.7};
    const auto f = [&](const std::vector<double>& x) {
      return iou_branch_loss(x[0], proposal, gt).value;
    };
    worst = std::max(worst, max_rel_error(iou_branch_loss(0.6, proposal, gt).gradient,
                                          central_diff(f, {0.6})));
  }
  LossConfig config;
  config.num_angle_bins = 4;
  {  // full proposal-stage loss over its documented gradient layout
    const ProposalBatch batch = make_proposal_batch();
    const auto f = [&](const std::vector<double>& x) {
      return proposal_loss(rebuild_proposal(batch, x), config).value;
    };
    worst = std::max(worst, max_rel_error(proposal_loss(batch, config).gradient,
                                          central_diff(f, flatten_proposal(batch))));
  }
  {  // full box-stage loss over its documented gradient layout
    const BoxBatch batch = make_box_batch();
    const auto f = [&](const std::vector<double>& x) {
      return box_loss(rebuild_box(batch, x), config).value;
    };
    worst = std::max(worst, max_rel_error(box_loss(batch, config).gradient,
                                          central_diff(f, flatten_box(batch))));
  }
  return worst;
}

double check_focal_hand_value(const SelfcheckOptions&) {
  const double expected = 0.0625 * std::log(2.0);
  return std::fabs(focal_loss(0.5, 0.25, 2.0).value - expected);
}

double check_encode_decode(const SelfcheckOptions& options) {
  Rng rng(derive_seed(options.seed, 7));
  const ClassConfig config = ClassConfig::car();
  double worst = 0.0;
  for (int i = 0; i < options.roundtrip_cases; ++i) {
    SphericalAnchor anchor;
    anchor.center = {rng.uniform(-20.0, 20.0), rng.uniform(-20.0, 20.0),
                     rng.uniform(-2.0, 2.0), 0.0};
    anchor.config = &config;
    Box3D gt;
    gt.cx = anchor.center.x + rng.uniform(-2.0, 2.0);
    gt.cy = anchor.center.y + rng.uniform(-2.0, 2.0);
    gt.cz = anchor.center.z + rng.uniform(-1.0, 1.0);
    gt.l = rng.uniform(3.0, 4.8);
    gt.w = rng.uniform(1.4, 2.0);
    gt.h = rng.uniform(1.3, 2.0);
    gt.yaw = rng.uniform(-kPi, kPi);

    const ProposalTarget target = encode_targets(anchor, gt);
    const Box3D decoded = decode_targets(anchor, target);
    worst = std::max({worst, std::fabs(decoded.cx - gt.cx), std::fabs(decoded.cy - gt.cy),
                      std::fabs(decoded.cz - gt.cz), std::fabs(decoded.l - gt.l),
                      std::fabs(decoded.w - gt.w), std::fabs(decoded.h - gt.h),
                      std::fabs(normalize_angle(decoded.yaw - gt.yaw))});

    const auto [bin, res] = encode_angle(gt.yaw, config.num_angle_bins);
    const double yaw = decode_angle(bin, res, config.num_angle_bins);
    worst = std::max(worst, std::fabs(normalize_angle(yaw - gt.yaw)));
  }
  return worst;
}

double check_velodyne_roundtrip(const SelfcheckOptions& options) {
  Rng rng(derive_seed(options.seed, 8));
  PointCloud cloud;
  for (int i = 0; i < 500; ++i)
    cloud.points.push_back({static_cast<float>(rng.uniform(-80.0, 80.0)),
                            static_cast<float>(rng.uniform(-80.0, 80.0)),
                            static_cast<float>(rng.uniform(-3.0, 3.0)),
                            static_cast<float>(rng.real01())});
  const std::vector<std::uint8_t> bytes = write_velodyne(cloud);
  const PointCloud back = parse_velodyne(bytes);
  if (back.size() != cloud.size()) return 1.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    worst = std::max({worst, std::fabs(back.points[i].x - cloud.points[i].x),
                      std::fabs(back.points[i].y - cloud.points[i].y),
                      std::fabs(back.points[i].z - cloud.points[i].z),
                      std::fabs(back.points[i].reflectance - cloud.points[i].reflectance)});
  }
  if (write_velodyne(back) != bytes) worst = std::max(worst, 1.0);
  return worst;
}

double check_labels_roundtrip(const SelfcheckOptions& options) {
  Rng rng(derive_seed(options.seed, 9));
  const Calib calib = Calib::synthetic();
  std::vector<GroundTruth> gts;
  for (int i = 0; i < 60; ++i) {
    GroundTruth gt;
    gt.box.cx = rng.uniform(3.0, 50.0);
    gt.box.cy = rng.uniform(-20.0, 20.0);
    gt.box.cz = rng.uniform(-2.5, 0.5);
    gt.box.l = rng.uniform(3.0, 4.8);
    gt.box.w = rng.uniform(1.4, 2.0);
    gt.box.h = rng.uniform(1.3, 2.0);
    gt.box.yaw = rng.uniform(-kPi, kPi);
    gt.class_id = i % 3;
    gt.difficulty = static_cast<Difficulty>(i % 3);
    gts.push_back(gt);
  }
  std::vector<KittiLabel> labels;
  for (const GroundTruth& gt : gts) labels.push_back(internal_to_camera(gt, calib));
  const std::vector<KittiLabel> reparsed = parse_labels(write_labels(labels));
  if (reparsed.size() != gts.size()) return 1.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    const GroundTruth back = camera_to_internal(reparsed[i], calib);
    worst = std::max({worst, std::fabs(back.box.cx - gts[i].box.cx),
                      std::fabs(back.box.cy - gts[i].box.cy),
                      std::fabs(back.box.cz - gts[i].box.cz),
                      std::fabs(back.box.l - gts[i].box.l),
                      std::fabs(back.box.w - gts[i].box.w),
                      std::fabs(back.box.h - gts[i].box.h),
                      std::fabs(normalize_angle(back.box.yaw - gts[i].box.yaw))});
    if (back.class_id != gts[i].class_id || back.difficulty != gts[i].difficulty)
      worst = std::max(worst, 1.0);
  }
  return worst;
}

double check_ap_fixture(const SelfcheckOptions&) {
  // Two ground truths, three detections (one a localization miss), scores
  // 0.9 / 0.8 / 0.7. PR staircase: (0.5, 1), (0.5, 1/2), (1, 2/3), so the
  // interpolated precision is 1 up to recall 0.5 and 2/3 beyond:
  // R11 = (6 + 5 * 2/3) / 11 = 28/33, R40 = (20 + 20 * 2/3) / 40 = 5/6.
  const Box3D gt1 = {5.0, 0.0, 0.0, 2.0, 2.0, 2.0, 0.0};
  const Box3D gt2 = {20.0, 0.0, 0.0, 2.0, 2.0, 2.0, 0.0};
  const std::vector<std::vector<GroundTruth>> gts = {
      {{gt1, 0, Difficulty::kModerate}, {gt2, 0, Difficulty::kModerate}}};
  const std::vector<std::vector<ScoredBox>> dets = {
      {{gt1, 0.9, 0}, {{12.0, 8.0, 0.0, 2.0, 2.0, 2.0, 0.0}, 0.8, 0}, {gt2, 0.7, 0}}};
  ApConfig config;
  config.iou_threshold = 0.5;
  config.metric = IouMetric::kBevRotated;
  config.class_id = 0;
  config.difficulty = Difficulty::kHard;

  config.interp = Interp::kR11;
  const ApResult r11 = average_precision(dets, gts, config);
  config.interp = Interp::kR40;
  const ApResult r40 = average_precision(dets, gts, config);
  if (!r11.defined || !r40.defined) return 1.0;
  return std::max(std::fabs(r11.value - 28.0 / 33.0), std::fabs(r40.value - 5.0 / 6.0));
}

}  // namespace

bool SelfcheckReport::all_passed() const {
  for (const CheckResult& check : checks)
    if (!check.passed) return false;
  return !checks.empty();
}

double SelfcheckReport::total_seconds() const {
  double total = 0.0;
  for (const CheckResult& check : checks) total += check.seconds;
  return total;
}

SelfcheckReport run_selfcheck(const SelfcheckOptions& options) {
  if (options.mc_pairs < 1) throw std::invalid_argument("mc_pairs must be positive");
  if (options.mc_samples < 100000)
    throw std::invalid_argument("mc_samples must be at least 1e5");
  if (options.points_iou_triples < 1 || options.roundtrip_cases < 1)
    throw std::invalid_argument("case counts must be positive");

  SelfcheckReport report;
  report.checks.push_back(timed_check("bev_iou_monte_carlo", 2e-3,
                                      [&] { return check_mc_iou(options); }));
  report.checks.push_back(timed_check("bev_iou_axis_aligned", 1e-12,
                                      [&] { return check_aligned_iou(options); }));
  report.checks.push_back(timed_check("points_iou_enumeration", 0.0,
                                      [&] { return check_points_iou(options); }));
  report.checks.push_back(timed_check("pool_adjoint", 1e-10,
                                      [&] { return check_pool_adjoint(options); }));
  report.checks.push_back(timed_check("pool_gradient_fd", 1e-6,
                                      [&] { return check_pool_fd(options); }));
  report.checks.push_back(timed_check("pool_structure", 0.0,
                                      [&] { return check_pool_structure(options); }));
  report.checks.push_back(timed_check("loss_gradients_fd", 1e-6,
                                      [&] { return check_loss_fd(options); }));
  report.checks.push_back(timed_check("focal_hand_value", 1e-12,
                                      [&] { return check_focal_hand_value(options); }));
  report.checks.push_back(timed_check("encode_decode_roundtrip", 1e-12,
                                      [&] { return check_encode_decode(options); }));
  report.checks.push_back(timed_check("velodyne_roundtrip", 0.0,
                                      [&] { return check_velodyne_roundtrip(options); }));
  report.checks.push_back(timed_check("labels_roundtrip", 1e-9,
                                      [&] { return check_labels_roundtrip(options); }));
  report.checks.push_back(timed_check("ap_hand_fixture", 1e-15,
                                      [&] { return check_ap_fixture(options); }));
  return report;
}

}  // namespace stdet
