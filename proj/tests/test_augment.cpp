#include "stdet/augment.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stdet {
namespace {

SceneSample demo_scene(std::uint64_t seed, int objects = 6) {
  SynthSpec spec;
  spec.object_count = objects;
  spec.clutter_points = 300;
  return synth_scene(spec, seed);
}

bool same_scene(const SceneSample& a, const SceneSample& b) {
  if (a.cloud.points.size() != b.cloud.points.size()) return false;
  for (std::size_t i = 0; i < a.cloud.points.size(); ++i) {
    const Point3 &p = a.cloud.points[i], &q = b.cloud.points[i];
    if (p.x != q.x || p.y != q.y || p.z != q.z || p.reflectance != q.reflectance)
      return false;
  }
  if (a.gts.size() != b.gts.size()) return false;
  for (std::size_t i = 0; i < a.gts.size(); ++i) {
    const Box3D &u = a.gts[i].box, &v = b.gts[i].box;
    if (u.cx != v.cx || u.cy != v.cy || u.cz != v.cz || u.l != v.l || u.w != v.w ||
        u.h != v.h || u.yaw != v.yaw)
      return false;
  }
  return true;
}

TEST(AugmentConfigCheck, RejectsBadFields) {
  AugmentConfig config;
  EXPECT_NO_THROW(validate(config));
  config.flip_prob = 1.5;
  EXPECT_THROW(validate(config), std::invalid_argument);
  config = AugmentConfig{};
  config.scale_min = 1.2;
  config.scale_max = 0.9;
  EXPECT_THROW(validate(config), std::invalid_argument);
  config = AugmentConfig{};
  config.yaw_jitter = -0.1;
  EXPECT_THROW(validate(config), std::invalid_argument);
}

TEST(Augment, IdentityParametersChangeNothing) {
  const SceneSample scene = demo_scene(910);
  AugmentConfig config;
  config.gt_sample_count = 0;
  config.yaw_jitter = 0.0;
  config.translation_sigma = 0.0;
  config.flip_prob = 0.0;
  config.global_yaw = 0.0;
  config.scale_min = 1.0;
  config.scale_max = 1.0;
  EXPECT_TRUE(same_scene(augment(scene, config, nullptr, 42), scene));
}

TEST(Augment, FlipIsAnInvolution) {
  const SceneSample scene = demo_scene(911);
  SceneSample flipped = scene;
  apply_flip(&flipped);
  EXPECT_FALSE(same_scene(flipped, scene));
  apply_flip(&flipped);
  EXPECT_TRUE(same_scene(flipped, scene));
}

TEST(Augment, GlobalRotationPreservesMembership) {
  SceneSample scene = demo_scene(912);
  std::vector<std::vector<int>> before;
  for (const GroundTruth& gt : scene.gts)
    before.push_back(points_in_box(scene.cloud, gt.box));
  apply_global_yaw(&scene, 0.7);
  for (std::size_t g = 0; g < scene.gts.size(); ++g)
    EXPECT_EQ(points_in_box(scene.cloud, scene.gts[g].box), before[g]);
}

TEST(Augment, GlobalScaleMultipliesExactly) {
  const SceneSample scene = demo_scene(913);
  SceneSample scaled = scene;
  apply_global_scale(&scaled, 1.05);
  for (std::size_t i = 0; i < scene.cloud.points.size(); ++i) {
    EXPECT_EQ(scaled.cloud.points[i].x, scene.cloud.points[i].x * 1.05);
    EXPECT_EQ(scaled.cloud.points[i].y, scene.cloud.points[i].y * 1.05);
    EXPECT_EQ(scaled.cloud.points[i].z, scene.cloud.points[i].z * 1.05);
  }
  for (std::size_t g = 0; g < scene.gts.size(); ++g) {
    EXPECT_EQ(scaled.gts[g].box.l, scene.gts[g].box.l * 1.05);
    EXPECT_EQ(scaled.gts[g].box.cx, scene.gts[g].box.cx * 1.05);
    EXPECT_EQ(scaled.gts[g].box.yaw, scene.gts[g].box.yaw);
  }
  EXPECT_THROW(apply_global_scale(&scaled, 0.0), std::invalid_argument);
}

TEST(Augment, DeterministicAndSeedSensitive) {
  const SceneSample scene = demo_scene(914);
  AugmentConfig config;  // defaults exercise jitter, flip, yaw, scale
  const std::vector<ObjectSample> pool = extract_objects(demo_scene(915));
  config.gt_sample_count = 3;
  const SceneSample a = augment(scene, config, &pool, 7);
  const SceneSample b = augment(scene, config, &pool, 7);
  EXPECT_TRUE(same_scene(a, b));
  const SceneSample c = augment(scene, config, &pool, 8);
  EXPECT_FALSE(same_scene(a, c));
}

TEST(Augment, ForcedFlipMirrorsY) {
  const SceneSample scene = demo_scene(916);
  AugmentConfig config;
  config.yaw_jitter = 0.0;
  config.translation_sigma = 0.0;
  config.flip_prob = 1.0;
  config.global_yaw = 0.0;
  config.scale_min = 1.0;
  config.scale_max = 1.0;
  const SceneSample flipped = augment(scene, config, nullptr, 3);
  ASSERT_EQ(flipped.cloud.points.size(), scene.cloud.points.size());
  for (std::size_t i = 0; i < scene.cloud.points.size(); ++i)
    EXPECT_EQ(flipped.cloud.points[i].y, -scene.cloud.points[i].y);
  for (std::size_t g = 0; g < scene.gts.size(); ++g)
    EXPECT_EQ(flipped.gts[g].box.cy, -scene.gts[g].box.cy);
}

TEST(Augment, InsertionRejectsOverlapAndAppendsPoints) {
  SceneSample scene = demo_scene(917, 3);
  const std::size_t gts_before = scene.gts.size();
  const std::size_t points_before = scene.cloud.points.size();

  // A donor identical to an existing box can never be placed.
  std::vector<ObjectSample> colliding = {{scene.gts[0].box, {}, 0}};
  Rng rng(1);
  insert_samples(&scene, colliding, 5, &rng);
  EXPECT_EQ(scene.gts.size(), gts_before);

  // A clearly disjoint donor lands with its points and band difficulty.
  ObjectSample donor;
  donor.box = Box3D{100.0, 100.0, -0.9, 3.9, 1.6, 1.6, 0.4};
  for (int i = 0; i < 40; ++i)
    donor.points.push_back(box_to_world(Point3{0.01 * i - 0.2, 0.1, 0.2}, donor.box));
  donor.class_id = 2;
  insert_samples(&scene, {donor}, 1, &rng);
  ASSERT_EQ(scene.gts.size(), gts_before + 1);
  EXPECT_EQ(scene.gts.back().class_id, 2);
  EXPECT_EQ(scene.gts.back().difficulty, Difficulty::kModerate);  // 40 points
  EXPECT_EQ(scene.cloud.points.size(), points_before + 40);
  EXPECT_EQ(points_in_box(scene.cloud, donor.box).size(), 40u);
}

TEST(Augment, JitterMovesBoxPointsRigidly) {
  // Clutter-free scene: a translated box swallowing ground points would be
  // legitimate capture, not a rigidity failure, so keep the field clean.
  SynthSpec spec;
  spec.object_count = 4;
  spec.clutter_points = 0;
  SceneSample scene = synth_scene(spec, 918);
  std::vector<std::vector<int>> before;
  for (const GroundTruth& gt : scene.gts)
    before.push_back(points_in_box(scene.cloud, gt.box));
  std::vector<bool> interior(scene.cloud.points.size(), false);
  for (const auto& ids : before)
    for (const int idx : ids) interior[idx] = true;
  const SceneSample original = scene;

  Rng rng(2);
  jitter_boxes(&scene, 0.5, 0.3, &rng);
  // Each box keeps exactly its original interior indices.
  for (std::size_t g = 0; g < scene.gts.size(); ++g)
    EXPECT_EQ(points_in_box(scene.cloud, scene.gts[g].box), before[g]);
  // Points outside every box never move.
  for (std::size_t i = 0; i < scene.cloud.points.size(); ++i) {
    if (interior[i]) continue;
    EXPECT_EQ(scene.cloud.points[i].x, original.cloud.points[i].x);
    EXPECT_EQ(scene.cloud.points[i].y, original.cloud.points[i].y);
  }
}

TEST(Augment, SamplingWithoutPoolThrows) {
  const SceneSample scene = demo_scene(919, 2);
  AugmentConfig config;
  config.gt_sample_count = 2;
  EXPECT_THROW(augment(scene, config, nullptr, 1), std::invalid_argument);
}

}  // namespace
}  // namespace stdet
