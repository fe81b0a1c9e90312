#include "stdet/nms.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "stdet/random.hpp"

namespace stdet {
namespace {

constexpr double kPi = 3.14159265358979323846;

Detection make_det(double cx, double cy, double score) {
  Detection d;
  d.box = Box3D{cx, cy, 0.0, 1.0, 1.0, 1.0, 0.0};
  d.cls_score = score;
  return d;
}

// Clustered scene: duplicates pile up near shared centers like real output.
std::vector<Detection> clustered_scene(Rng& rng, int clusters, int per_cluster) {
  std::vector<Detection> dets;
  for (int c = 0; c < clusters; ++c) {
    const double cx = rng.uniform(-20, 20);
    const double cy = rng.uniform(-20, 20);
    const double yaw = rng.uniform(-kPi, kPi);
    for (int i = 0; i < per_cluster; ++i) {
      Detection d;
      d.box = Box3D{cx + rng.uniform(-0.6, 0.6), cy + rng.uniform(-0.6, 0.6),
                    rng.uniform(-0.2, 0.2),      3.9 + rng.uniform(-0.3, 0.3),
                    1.6 + rng.uniform(-0.2, 0.2), 1.6,
                    normalize_angle(yaw + rng.uniform(-0.2, 0.2))};
      d.cls_score = rng.uniform(0.05, 1.0);
      d.predicted_iou = rng.uniform(0.0, 1.0);
      dets.push_back(d);
    }
  }
  return dets;
}

TEST(NmsConfigCheck, RejectsBadFields) {
  NmsConfig config;
  EXPECT_NO_THROW(validate(config));
  config.threshold = 1.5;
  EXPECT_THROW(validate(config), std::invalid_argument);
  config = NmsConfig{};
  config.sigma = 0.0;
  EXPECT_THROW(validate(config), std::invalid_argument);
  config = NmsConfig{};
  config.max_keep = 0;
  EXPECT_THROW(validate(config), std::invalid_argument);
}

TEST(RankScores, StrategiesAndErrors) {
  std::vector<Detection> dets = {make_det(0, 0, 0.8), make_det(5, 0, 0.3)};
  dets[0].predicted_iou = 0.5;
  dets[1].predicted_iou = 0.9;

  const auto by_score = rank_scores(dets, NmsStrategy::kScore);
  EXPECT_EQ(by_score, (std::vector<double>{0.8, 0.3}));
  EXPECT_EQ(rank_scores(dets, NmsStrategy::kSoft), by_score);

  const auto guided = rank_scores(dets, NmsStrategy::kIouGuided);
  EXPECT_EQ(guided[0], 0.8 * 0.5);
  EXPECT_EQ(guided[1], 0.3 * 0.9);

  dets[1].predicted_iou.reset();
  EXPECT_THROW(rank_scores(dets, NmsStrategy::kIouGuided), std::invalid_argument);

  EXPECT_THROW(rank_scores(dets, NmsStrategy::kOracle), std::invalid_argument);
  const std::vector<Box3D> no_gt;
  EXPECT_EQ(rank_scores(dets, NmsStrategy::kOracle, &no_gt),
            (std::vector<double>{0.0, 0.0}));
  const std::vector<Box3D> gt = {dets[0].box};
  const auto oracle = rank_scores(dets, NmsStrategy::kOracle, &gt);
  EXPECT_NEAR(oracle[0], 1.0, 1e-12);  // detection coincides with a GT box
  EXPECT_EQ(oracle[1], 0.0);           // disjoint from every GT box
}

TEST(RankScores, OracleMatchesBruteForce) {
  Rng rng(70);
  const std::vector<Detection> dets = clustered_scene(rng, 10, 5);
  std::vector<Box3D> gt;
  for (int i = 0; i < 7; ++i) gt.push_back(dets[static_cast<std::size_t>(i) * 7].box);

  const auto scores = rank_scores(dets, NmsStrategy::kOracle, &gt);
  ASSERT_EQ(scores.size(), dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) {
    double best = 0.0;
    for (const Box3D& g : gt) best = std::max(best, iou_3d(dets[i].box, g));
    EXPECT_EQ(scores[i], best) << "det " << i;
  }
}

TEST(Nms, HandCases) {
  NmsConfig config;
  config.threshold = 0.5;

  const std::vector<Detection> one = {make_det(0, 0, 0.7)};
  EXPECT_EQ(nms(one, rank_scores(one, NmsStrategy::kScore), config),
            (std::vector<int>{0}));

  std::vector<Detection> twins = {make_det(0, 0, 0.9), make_det(0, 0, 0.8)};
  EXPECT_EQ(nms(twins, rank_scores(twins, NmsStrategy::kScore), config),
            (std::vector<int>{0}));

  // Chain: the middle box overlaps both ends at 0.6 while the ends only
  // overlap each other at 1/3. Greedy keeps the ends and drops the middle.
  const std::vector<Detection> chain = {make_det(0.0, 0, 0.9), make_det(0.25, 0, 0.7),
                                        make_det(0.5, 0, 0.8)};
  ASSERT_NEAR(rotated_bev_iou(chain[0].box, chain[1].box), 0.6, 1e-12);
  ASSERT_NEAR(rotated_bev_iou(chain[1].box, chain[2].box), 0.6, 1e-12);
  ASSERT_NEAR(rotated_bev_iou(chain[0].box, chain[2].box), 1.0 / 3.0, 1e-12);
  EXPECT_EQ(nms(chain, rank_scores(chain, NmsStrategy::kScore), config),
            (std::vector<int>{0, 2}));

  // Equal scores break ties toward the lower index.
  const std::vector<Detection> tied = {make_det(10, 0, 0.5), make_det(10, 0, 0.5)};
  EXPECT_EQ(nms(tied, {0.5, 0.5}, config), (std::vector<int>{0}));
  const std::vector<Detection> apart = {make_det(10, 0, 0.5), make_det(-10, 0, 0.5)};
  EXPECT_EQ(nms(apart, {0.5, 0.5}, config), (std::vector<int>{0, 1}));

  EXPECT_THROW(nms(twins, {0.9}, config), std::invalid_argument);
}

TEST(Nms, MetricFlagSeparatesBevFrom3d) {
  std::vector<Detection> dets = {make_det(0, 0, 0.9), make_det(0, 0, 0.8)};
  dets[1].box.cz = 2.0;  // same BEV footprint, disjoint in z
  NmsConfig config;
  config.threshold = 0.5;
  config.metric = IouMetric::kBevRotated;
  EXPECT_EQ(nms(dets, rank_scores(dets, NmsStrategy::kScore), config).size(), 1u);
  config.metric = IouMetric::kFull3d;
  EXPECT_EQ(nms(dets, rank_scores(dets, NmsStrategy::kScore), config).size(), 2u);
}

TEST(Nms, KeptSetPropertiesOnRandomScenes) {
  Rng rng(71);
  for (int trial = 0; trial < 5; ++trial) {
    const std::vector<Detection> dets = clustered_scene(rng, 8, 12);
    const auto scores = rank_scores(dets, NmsStrategy::kScore);
    NmsConfig config;
    config.threshold = 0.45;
    const auto kept = nms(dets, scores, config);

    ASSERT_FALSE(kept.empty());
    for (std::size_t a = 0; a < kept.size(); ++a) {
      EXPECT_GE(kept[a], 0);
      EXPECT_LT(kept[a], static_cast<int>(dets.size()));
      for (std::size_t b = a + 1; b < kept.size(); ++b) {
        EXPECT_NE(kept[a], kept[b]);
        EXPECT_LE(rotated_bev_iou(dets[kept[a]].box, dets[kept[b]].box),
                  config.threshold);
      }
    }
    // Kept order is by descending score.
    for (std::size_t a = 1; a < kept.size(); ++a)
      EXPECT_GE(scores[kept[a - 1]], scores[kept[a]]);

    // Positive rescaling changes nothing.
    std::vector<double> scaled = scores;
    for (double& s : scaled) s *= 3.7;
    EXPECT_EQ(nms(dets, scaled, config), kept);

    config.max_keep = 5;
    const auto capped = nms(dets, scores, config);
    EXPECT_LE(capped.size(), 5u);
    EXPECT_TRUE(std::equal(capped.begin(), capped.end(), kept.begin()));
  }
}

TEST(SoftNms, NonOverlappingScoresUnchanged) {
  const std::vector<Detection> dets = {make_det(0, 0, 0.4), make_det(10, 0, 0.9),
                                       make_det(-10, 0, 0.6)};
  NmsConfig config;
  const auto out = soft_nms(dets, rank_scores(dets, NmsStrategy::kScore), config);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].index, 1);
  EXPECT_EQ(out[0].score, 0.9);
  EXPECT_EQ(out[1].index, 2);
  EXPECT_EQ(out[1].score, 0.6);
  EXPECT_EQ(out[2].index, 0);
  EXPECT_EQ(out[2].score, 0.4);
}

TEST(SoftNms, GaussianDecayAndFloor) {
  // Duplicate of the top box decays by exp(-iou^2/sigma) = exp(-2) at sigma 0.5.
  const std::vector<Detection> pair = {make_det(0, 0, 0.9), make_det(0, 0, 0.8)};
  NmsConfig config;
  config.sigma = 0.5;
  auto out = soft_nms(pair, rank_scores(pair, NmsStrategy::kScore), config);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].score, 0.9);
  EXPECT_NEAR(out[1].score, 0.8 * std::exp(-2.0), 1e-12);

  // sigma -> infinity behaves as the identity on scores.
  config.sigma = 1e12;
  out = soft_nms(pair, rank_scores(pair, NmsStrategy::kScore), config);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_NEAR(out[1].score, 0.8, 1e-9);

  // A weak duplicate decays through the 1e-3 floor and is dropped.
  const std::vector<Detection> weak = {make_det(0, 0, 0.9), make_det(0, 0, 0.005)};
  config.sigma = 0.5;
  out = soft_nms(weak, rank_scores(weak, NmsStrategy::kScore), config);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].index, 0);
}

TEST(SoftNms, OrderedDistinctAndCapped) {
  Rng rng(72);
  const std::vector<Detection> dets = clustered_scene(rng, 6, 10);
  NmsConfig config;
  config.max_keep = 20;
  const auto out = soft_nms(dets, rank_scores(dets, NmsStrategy::kScore), config);
  EXPECT_LE(out.size(), 20u);
  ASSERT_FALSE(out.empty());
  std::vector<bool> seen(dets.size(), false);
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_GE(out[i].score, 1e-3);
    EXPECT_FALSE(seen[out[i].index]);
    seen[out[i].index] = true;
    if (i > 0) {
      EXPECT_GE(out[i - 1].score, out[i].score);
    }
  }
}

}  // namespace
}  // namespace stdet
