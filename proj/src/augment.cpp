#include "stdet/augment.hpp"

#include <cmath>
#include <stdexcept>

namespace stdet {
namespace {

void rotate_about(Point3* p, double cx, double cy, double c, double s) {
  const double dx = p->x - cx, dy = p->y - cy;
  p->x = cx + c * dx - s * dy;
  p->y = cy + s * dx + c * dy;
}

}  // namespace

void validate(const AugmentConfig& config) {
  if (config.gt_sample_count < 0)
    throw std::invalid_argument("gt_sample_count must be non-negative");
  if (config.yaw_jitter < 0 || config.global_yaw < 0)
    throw std::invalid_argument("yaw ranges must be non-negative");
  if (config.translation_sigma < 0)
    throw std::invalid_argument("translation_sigma must be non-negative");
  if (!(config.flip_prob >= 0 && config.flip_prob <= 1))
    throw std::invalid_argument("flip_prob must be in [0, 1]");
  if (!(config.scale_min > 0 && config.scale_min <= config.scale_max))
    throw std::invalid_argument("scale range is empty");
}

std::vector<ObjectSample> extract_objects(const SceneSample& scene) {
  std::vector<ObjectSample> pool;
  for (const GroundTruth& gt : scene.gts) {
    ObjectSample sample;
    sample.box = gt.box;
    sample.class_id = gt.class_id;
    for (const int idx : points_in_box(scene.cloud, gt.box))
      sample.points.push_back(scene.cloud.points[idx]);
    pool.push_back(sample);
  }
  return pool;
}

void insert_samples(SceneSample* scene, const std::vector<ObjectSample>& pool,
                    int count, Rng* rng) {
  if (pool.empty()) return;
  for (int i = 0; i < count; ++i) {
    const ObjectSample& donor = pool[rng->pick(static_cast<int>(pool.size()))];
    bool clear = true;
    for (const GroundTruth& gt : scene->gts)
      if (rotated_bev_iou(donor.box, gt.box) > 0.0) {
        clear = false;
        break;
      }
    if (!clear) continue;
    GroundTruth gt;
    gt.box = donor.box;
    gt.class_id = donor.class_id;
    gt.difficulty = difficulty_from_point_count(static_cast<int>(donor.points.size()));
    scene->gts.push_back(gt);
    scene->cloud.points.insert(scene->cloud.points.end(), donor.points.begin(),
                               donor.points.end());
  }
}

void jitter_boxes(SceneSample* scene, double yaw_range, double sigma, Rng* rng) {
  if (yaw_range == 0.0 && sigma == 0.0) return;
  std::vector<bool> moved(scene->cloud.points.size(), false);
  for (GroundTruth& gt : scene->gts) {
    const double dtheta = rng->uniform(-yaw_range, yaw_range);
    const double dx = rng->normal(0.0, sigma);
    const double dy = rng->normal(0.0, sigma);
    const double c = std::cos(dtheta), s = std::sin(dtheta);
    for (const int idx : points_in_box(scene->cloud, gt.box)) {
      if (moved[idx]) continue;
      moved[idx] = true;
      Point3& p = scene->cloud.points[idx];
      rotate_about(&p, gt.box.cx, gt.box.cy, c, s);
      p.x += dx;
      p.y += dy;
    }
    gt.box.cx += dx;
    gt.box.cy += dy;
    gt.box.yaw = normalize_angle(gt.box.yaw + dtheta);
  }
}

void apply_flip(SceneSample* scene) {
  for (Point3& p : scene->cloud.points) p.y = -p.y;
  for (GroundTruth& gt : scene->gts) {
    gt.box.cy = -gt.box.cy;
    gt.box.yaw = normalize_angle(-gt.box.yaw);
  }
}

void apply_global_yaw(SceneSample* scene, double angle) {
  if (angle == 0.0) return;
  const double c = std::cos(angle), s = std::sin(angle);
  for (Point3& p : scene->cloud.points) rotate_about(&p, 0.0, 0.0, c, s);
  for (GroundTruth& gt : scene->gts) {
    Point3 center{gt.box.cx, gt.box.cy, gt.box.cz, 0.0};
    rotate_about(&center, 0.0, 0.0, c, s);
    gt.box.cx = center.x;
    gt.box.cy = center.y;
    gt.box.yaw = normalize_angle(gt.box.yaw + angle);
  }
}

void apply_global_scale(SceneSample* scene, double s) {
  if (!(s > 0)) throw std::invalid_argument("scale must be positive");
  for (Point3& p : scene->cloud.points) {
    p.x *= s;
    p.y *= s;
    p.z *= s;
  }
  for (GroundTruth& gt : scene->gts) {
    gt.box.cx *= s;
    gt.box.cy *= s;
    gt.box.cz *= s;
    gt.box.l *= s;
    gt.box.w *= s;
    gt.box.h *= s;
  }
}

SceneSample augment(const SceneSample& scene, const AugmentConfig& config,
                    const std::vector<ObjectSample>* pool, std::uint64_t seed) {
  validate(config);
  if (config.gt_sample_count > 0 && pool == nullptr)
    throw std::invalid_argument("gt sampling requested without a donor pool");

  SceneSample out = scene;
  if (config.gt_sample_count > 0) {
    Rng rng(derive_seed(seed, 0));
    insert_samples(&out, *pool, config.gt_sample_count, &rng);
  }
  {
    Rng rng(derive_seed(seed, 1));
    jitter_boxes(&out, config.yaw_jitter, config.translation_sigma, &rng);
  }
  {
    Rng rng(derive_seed(seed, 2));
    if (rng.real01() < config.flip_prob) apply_flip(&out);
  }
  {
    Rng rng(derive_seed(seed, 3));
    apply_global_yaw(&out, rng.uniform(-config.global_yaw, config.global_yaw));
  }
  {
    Rng rng(derive_seed(seed, 4));
    apply_global_scale(&out, rng.uniform(config.scale_min, config.scale_max));
  }
  return out;
}

}  // namespace stdet
