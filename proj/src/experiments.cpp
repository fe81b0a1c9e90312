#include "stdet/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "stdet/random.hpp"

namespace stdet {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kQuarterPi = kPi / 4.0;

// Runs body(0..n-1) once each; results must go to disjoint slots. Order of
// execution is irrelevant because every scene derives its own seed.
void parallel_for(int n, int workers, const std::function<void(int)>& body) {
  workers = std::clamp(workers, 1, std::max(1, n));
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex failure_lock;
  std::exception_ptr failure;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      try {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
      } catch (...) {
        const std::lock_guard<std::mutex> guard(failure_lock);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// Best achievable yaw for a regressor tied to an oriented anchor: the target
// residual, pi-symmetric, clamped to the +-pi/4 trust region around the
// anchor orientation.
double oriented_yaw(double gt_yaw, double anchor_yaw) {
  const double residual =
      std::clamp(std::remainder(gt_yaw - anchor_yaw, kPi), -kQuarterPi, kQuarterPi);
  return normalize_angle(anchor_yaw + residual);
}

struct RecallSceneOut {
  std::vector<ScoredBox> proposals[3];  // indexed as report.modes
  long long seeded[3] = {0, 0, 0};
  std::vector<GroundTruth> gts;
};

RecallSceneOut simulate_recall_scene(const RecallCompareConfig& config,
                                     std::uint64_t scene_seed) {
  const SceneSample scene = synth_scene(config.synth, scene_seed);
  Rng rng(derive_seed(scene_seed, 17));

  RecallSceneOut out;
  out.gts = scene.gts;
  std::vector<Box3D> gt_boxes;
  gt_boxes.reserve(scene.gts.size());
  for (const GroundTruth& gt : scene.gts) gt_boxes.push_back(gt.box);

  std::vector<SphericalAnchor> anchors = seed_anchors(scene.cloud, config.anchor_class);
  score_anchors(anchors, gt_surface_score(gt_boxes, config.score_sharpness));
  std::vector<double> scores;
  scores.reserve(anchors.size());
  for (SphericalAnchor& anchor : anchors) {
    anchor.score = std::clamp(anchor.score + rng.normal(0.0, config.score_noise), 0.0, 1.0);
    scores.push_back(anchor.score);
  }
  const std::vector<SphericalAnchor> survivors = filter_anchors(
      anchors, scores, config.filter_iou, config.filter_keep, AnchorFootprint::kReferenceRect);

  const long long seeded = static_cast<long long>(anchors.size());
  out.seeded[0] = seeded;      // sphere: one free anchor per point
  out.seeded[1] = seeded;      // cuboid_1: one oriented anchor per point
  out.seeded[2] = 2 * seeded;  // cuboid_2: yaw 0 and pi/2 per point

  for (const SphericalAnchor& anchor : survivors) {
    // The nearest ground truth is the regression target. Noise grows with
    // anchor-to-target distance: a refinement head only sees local evidence.
    std::size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < scene.gts.size(); ++g) {
      const Box3D& box = scene.gts[g].box;
      const double dx = box.cx - anchor.center.x;
      const double dy = box.cy - anchor.center.y;
      const double d2 = dx * dx + dy * dy;
      if (d2 < best_d2) {
        best_d2 = d2;
        best = g;
      }
    }
    const Box3D& gt = scene.gts[best].box;
    const double wobble = 1.0 + 0.5 * best_d2;

    // One noise bundle per survivor, shared by all modes for a fair race.
    double ctr_noise[3], size_noise[3];
    for (double& v : ctr_noise) v = rng.normal(0.0, config.center_noise * wobble);
    for (double& v : size_noise) v = rng.normal(0.0, config.size_noise);
    const double yaw_noise = rng.normal(0.0, config.angle_noise);

    ProposalTarget target = encode_targets(anchor, gt);
    for (int i = 0; i < 3; ++i) target.ctr[i] += ctr_noise[i];
    for (int i = 0; i < 3; ++i) target.size[i] += size_noise[i];
    target.angle_res += yaw_noise;
    const Box3D decoded = decode_targets(anchor, target);
    out.proposals[0].push_back({decoded, anchor.score, 0});

    Box3D one = decoded;
    one.yaw = normalize_angle(oriented_yaw(gt.yaw, 0.0) + yaw_noise);
    out.proposals[1].push_back({one, anchor.score, 0});

    for (const double base : {0.0, kPi / 2.0}) {
      Box3D two = decoded;
      two.yaw = normalize_angle(oriented_yaw(gt.yaw, base) + yaw_noise);
      out.proposals[2].push_back({two, anchor.score, 0});
    }
  }
  return out;
}

struct NmsSceneOut {
  std::vector<ScoredBox> kept[5];  // indexed as kStrategyNames
  std::vector<GroundTruth> gts;
};

constexpr const char* kStrategyNames[5] = {"score", "soft", "iou_guided", "iou_pred",
                                           "oracle"};

// Detection-head simulation constants. The first duplicate of every object is
// drawn tight (a trained detector localizes at least one proposal well); the
// rest probe the jitter tail. Background boxes score low on the
// classification head but the untrained IoU branch is confidently wrong on
// them, which is what classification gating protects against.
constexpr double kBestDupTightness = 0.2;
constexpr double kDupClsMean = 0.60, kDupClsSigma = 0.10;
constexpr double kFpClsMean = 0.30, kFpClsSigma = 0.12;
constexpr double kFpIouLo = 0.50, kFpIouHi = 0.99;

NmsSceneOut simulate_nms_scene(const NmsCompareConfig& config, std::uint64_t scene_seed) {
  const SceneSample scene = synth_scene(config.synth, scene_seed);
  Rng rng(derive_seed(scene_seed, 29));

  NmsSceneOut out;
  out.gts = scene.gts;
  std::vector<Box3D> gt_boxes;
  gt_boxes.reserve(scene.gts.size());
  for (const GroundTruth& gt : scene.gts) gt_boxes.push_back(gt.box);

  std::vector<Detection> dets;
  dets.reserve(scene.gts.size() * static_cast<std::size_t>(config.dets_per_gt) +
               static_cast<std::size_t>(config.false_positives));
  for (const GroundTruth& gt : scene.gts) {
    for (int d = 0; d < config.dets_per_gt; ++d) {
      const double shrink = d == 0 ? kBestDupTightness : 1.0;
      const double ctr = shrink * config.center_spread;
      const double yaw = shrink * config.yaw_spread;
      const double size = shrink * config.size_spread;
      Box3D dup = gt.box;
      dup.cx += rng.uniform(-ctr, ctr);
      dup.cy += rng.uniform(-ctr, ctr);
      dup.cz += rng.uniform(-0.3 * ctr, 0.3 * ctr);
      dup.yaw = normalize_angle(dup.yaw + rng.uniform(-yaw, yaw));
      dup.l *= 1.0 + rng.uniform(-size, size);
      dup.w *= 1.0 + rng.uniform(-size, size);
      dup.h *= 1.0 + rng.uniform(-size, size);
      Detection det;
      det.box = dup;
      det.cls_score = std::clamp(rng.normal(kDupClsMean, kDupClsSigma), 0.01, 0.99);
      det.predicted_iou = std::clamp(
          iou_3d(dup, gt.box) + rng.uniform(-config.iou_noise, config.iou_noise), 0.0, 1.0);
      det.class_id = 0;
      dets.push_back(det);
    }
  }
  for (int f = 0; f < config.false_positives; ++f) {
    Detection det;
    det.box.cx = rng.uniform(config.synth.area_x_min, config.synth.area_x_max);
    det.box.cy = rng.uniform(config.synth.area_y_min, config.synth.area_y_max);
    det.box.l = rng.uniform(config.synth.l_min, config.synth.l_max);
    det.box.w = rng.uniform(config.synth.w_min, config.synth.w_max);
    det.box.h = rng.uniform(config.synth.h_min, config.synth.h_max);
    det.box.cz = kGroundZ + det.box.h / 2.0;
    det.box.yaw = rng.uniform(-kPi, kPi);
    det.cls_score = std::clamp(rng.normal(kFpClsMean, kFpClsSigma), 0.01, 0.99);
    // The IoU branch never trains on background, so its output there is noise.
    det.predicted_iou = rng.uniform(kFpIouLo, kFpIouHi);
    det.class_id = 0;
    dets.push_back(det);
  }

  NmsConfig nms_config;
  nms_config.metric = IouMetric::kBevRotated;
  nms_config.threshold = config.nms_threshold;
  nms_config.max_keep = config.max_keep;

  const auto harvest = [&](const std::vector<double>& ranking) {
    std::vector<ScoredBox> kept;
    for (const int idx : nms(dets, ranking, nms_config))
      kept.push_back({dets[idx].box, ranking[idx], dets[idx].class_id});
    return kept;
  };

  const std::vector<double> cls_scores = rank_scores(dets, NmsStrategy::kScore);
  out.kept[0] = harvest(cls_scores);
  for (const RescoredDetection& r : soft_nms(dets, cls_scores, nms_config))
    out.kept[1].push_back({dets[r.index].box, r.score, dets[r.index].class_id});
  out.kept[2] = harvest(rank_scores(dets, NmsStrategy::kIouGuided));
  std::vector<double> raw_iou;
  raw_iou.reserve(dets.size());
  for (const Detection& det : dets) raw_iou.push_back(*det.predicted_iou);
  out.kept[3] = harvest(raw_iou);
  out.kept[4] = harvest(rank_scores(dets, NmsStrategy::kOracle, &gt_boxes));
  return out;
}

}  // namespace

const char* anchor_mode_name(AnchorMode mode) {
  switch (mode) {
    case AnchorMode::kSphere:
      return "sphere";
    case AnchorMode::kCuboidOne:
      return "cuboid_1";
    case AnchorMode::kCuboidTwo:
      return "cuboid_2";
  }
  throw std::invalid_argument("unknown anchor mode");
}

void validate(const RecallCompareConfig& config) {
  if (config.scenes < 1) throw std::invalid_argument("scenes must be positive");
  validate(config.synth);
  validate(config.anchor_class);
  if (config.synth.object_count < 1)
    throw std::invalid_argument("recall comparison needs objects in every scene");
  if (config.score_sharpness <= 0.0)
    throw std::invalid_argument("score_sharpness must be positive");
  if (config.score_noise < 0.0 || config.center_noise < 0.0 || config.size_noise < 0.0 ||
      config.angle_noise < 0.0)
    throw std::invalid_argument("noise levels must be non-negative");
  if (config.filter_iou < 0.0 || config.filter_iou > 1.0)
    throw std::invalid_argument("filter_iou must be in [0, 1]");
  if (config.filter_keep < 1 || config.proposal_budget < 1)
    throw std::invalid_argument("keep counts must be positive");
  if (config.recall_iou <= 0.0 || config.recall_iou > 1.0)
    throw std::invalid_argument("recall_iou must be in (0, 1]");
  if (config.workers < 1) throw std::invalid_argument("workers must be positive");
}

RecallCompareReport run_recall_compare(const RecallCompareConfig& config,
                                       std::uint64_t seed) {
  validate(config);
  std::vector<RecallSceneOut> scenes(static_cast<std::size_t>(config.scenes));
  parallel_for(config.scenes, config.workers, [&](int s) {
    scenes[static_cast<std::size_t>(s)] =
        simulate_recall_scene(config, derive_seed(seed, static_cast<std::uint64_t>(s)));
  });

  std::vector<std::vector<GroundTruth>> gts;
  gts.reserve(scenes.size());
  for (const RecallSceneOut& scene : scenes) gts.push_back(scene.gts);

  RecallCompareReport report;
  report.scenes = config.scenes;
  report.seed = seed;
  const AnchorMode modes[3] = {AnchorMode::kSphere, AnchorMode::kCuboidOne,
                               AnchorMode::kCuboidTwo};
  for (int m = 0; m < 3; ++m) {
    RecallModeReport row;
    row.mode = anchor_mode_name(modes[m]);
    std::vector<std::vector<ScoredBox>> proposals;
    proposals.reserve(scenes.size());
    for (const RecallSceneOut& scene : scenes) {
      proposals.push_back(scene.proposals[m]);
      row.anchors_seeded += scene.seeded[m];
      row.proposals += static_cast<long long>(scene.proposals[m].size());
    }
    const std::optional<double> recall =
        proposal_recall(proposals, gts, config.recall_iou, config.proposal_budget);
    if (!recall) throw std::runtime_error("recall comparison found no ground truth");
    row.recall = *recall;
    report.modes.push_back(std::move(row));
  }
  return report;
}

const RecallModeReport& mode_report(const RecallCompareReport& report, AnchorMode mode) {
  const char* name = anchor_mode_name(mode);
  for (const RecallModeReport& row : report.modes)
    if (row.mode == name) return row;
  throw std::invalid_argument("mode missing from report");
}

void validate(const NmsCompareConfig& config) {
  if (config.scenes < 1) throw std::invalid_argument("scenes must be positive");
  validate(config.synth);
  if (config.synth.object_count < 1)
    throw std::invalid_argument("NMS comparison needs objects in every scene");
  if (config.dets_per_gt < 1) throw std::invalid_argument("dets_per_gt must be positive");
  if (config.false_positives < 0)
    throw std::invalid_argument("false_positives must be non-negative");
  if (config.center_spread < 0.0 || config.yaw_spread < 0.0 || config.size_spread < 0.0 ||
      config.iou_noise < 0.0)
    throw std::invalid_argument("spreads must be non-negative");
  if (config.size_spread >= 1.0)
    throw std::invalid_argument("size_spread must leave sizes positive");
  if (config.nms_threshold < 0.0 || config.nms_threshold > 1.0)
    throw std::invalid_argument("nms_threshold must be in [0, 1]");
  if (config.eval_iou <= 0.0 || config.eval_iou > 1.0)
    throw std::invalid_argument("eval_iou must be in (0, 1]");
  if (config.max_keep < 1) throw std::invalid_argument("max_keep must be positive");
  if (config.workers < 1) throw std::invalid_argument("workers must be positive");
}

NmsCompareReport run_nms_compare(const NmsCompareConfig& config, std::uint64_t seed) {
  validate(config);
  std::vector<NmsSceneOut> scenes(static_cast<std::size_t>(config.scenes));
  parallel_for(config.scenes, config.workers, [&](int s) {
    scenes[static_cast<std::size_t>(s)] =
        simulate_nms_scene(config, derive_seed(seed, static_cast<std::uint64_t>(s)));
  });

  std::vector<std::vector<GroundTruth>> gts;
  gts.reserve(scenes.size());
  for (const NmsSceneOut& scene : scenes) gts.push_back(scene.gts);

  ApConfig ap_config;
  ap_config.iou_threshold = config.eval_iou;
  ap_config.metric = IouMetric::kBevRotated;
  ap_config.interp = Interp::kR11;
  ap_config.class_id = 0;
  ap_config.difficulty = Difficulty::kHard;

  NmsCompareReport report;
  report.scenes = config.scenes;
  report.seed = seed;
  for (int s = 0; s < 5; ++s) {
    std::vector<std::vector<ScoredBox>> dets;
    dets.reserve(scenes.size());
    for (const NmsSceneOut& scene : scenes) dets.push_back(scene.kept[s]);
    const ApResult ap = average_precision(dets, gts, ap_config);
    if (!ap.defined) throw std::runtime_error("NMS comparison found no ground truth");
    report.strategies.push_back({kStrategyNames[s], ap.value});
  }
  return report;
}

double strategy_ap(const NmsCompareReport& report, const std::string& strategy) {
  for (const NmsStrategyReport& row : report.strategies)
    if (row.strategy == strategy) return row.ap;
  throw std::invalid_argument("strategy missing from report: " + strategy);
}

}  // namespace stdet
