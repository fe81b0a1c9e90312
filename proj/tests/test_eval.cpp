#include "stdet/eval.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "stdet/random.hpp"

namespace stdet {
namespace {

GroundTruth gt_at(double cx, double cy, Difficulty diff = Difficulty::kEasy,
                  int class_id = 0) {
  GroundTruth gt;
  gt.box = Box3D{cx, cy, -0.9, 3.9, 1.6, 1.6, 0.3};
  gt.class_id = class_id;
  gt.difficulty = diff;
  return gt;
}

ScoredBox det_for(const GroundTruth& gt, double score) {
  return ScoredBox{gt.box, score, gt.class_id};
}

TEST(AveragePrecision, PerfectDetectionsScoreOne) {
  std::vector<std::vector<GroundTruth>> gts(3);
  std::vector<std::vector<ScoredBox>> dets(3);
  Rng rng(90);
  for (int s = 0; s < 3; ++s)
    for (int i = 0; i < 4; ++i) {
      gts[s].push_back(gt_at(6.0 * i + 5.0, 7.0 * s - 7.0));
      dets[s].push_back(det_for(gts[s].back(), rng.real01()));
    }
  ApConfig config;
  const ApResult r11 = average_precision(dets, gts, config);
  ASSERT_TRUE(r11.defined);
  EXPECT_EQ(r11.relevant_gt, 12);
  EXPECT_DOUBLE_EQ(r11.value, 1.0);
  config.interp = Interp::kR40;
  EXPECT_DOUBLE_EQ(average_precision(dets, gts, config).value, 1.0);
}

TEST(AveragePrecision, EdgeCases) {
  std::vector<std::vector<GroundTruth>> gts = {{gt_at(5, 0)}};
  std::vector<std::vector<ScoredBox>> none = {{}};
  ApConfig config;
  const ApResult no_dets = average_precision(none, gts, config);
  ASSERT_TRUE(no_dets.defined);
  EXPECT_EQ(no_dets.value, 0.0);

  std::vector<std::vector<GroundTruth>> empty_gt = {{}};
  EXPECT_FALSE(average_precision(none, empty_gt, config).defined);

  EXPECT_THROW(average_precision({}, gts, config), std::invalid_argument);
  config.iou_threshold = 1.5;
  EXPECT_THROW(average_precision(none, gts, config), std::invalid_argument);
}

// 2 GT, 3 detections: hits at ranks 1 and 3, miss at rank 2. The PR
// staircase is (0.5, 1), (0.5, 1/2), (1, 2/3); interpolated precision is 1
// up to recall 0.5 and 2/3 beyond, so R11 = (6 + 5*(2/3))/11 = 28/33 and
// R40 = (20 + 20*(2/3))/40 = 5/6.
TEST(AveragePrecision, HandComputedFixture) {
  std::vector<std::vector<GroundTruth>> gts = {{gt_at(5, 0), gt_at(20, 0)}};
  std::vector<std::vector<ScoredBox>> dets = {{
      det_for(gts[0][0], 0.9),
      {Box3D{12.0, 8.0, -0.9, 3.9, 1.6, 1.6, 0.0}, 0.8, 0},  // matches nothing
      det_for(gts[0][1], 0.7),
  }};
  ApConfig config;
  config.iou_threshold = 0.5;
  const ApResult r11 = average_precision(dets, gts, config);
  ASSERT_TRUE(r11.defined);
  EXPECT_NEAR(r11.value, 28.0 / 33.0, 1e-15);
  config.interp = Interp::kR40;
  EXPECT_NEAR(average_precision(dets, gts, config).value, 5.0 / 6.0, 1e-15);
}

TEST(AveragePrecision, MonotoneScoreTransformInvariant) {
  Rng rng(91);
  std::vector<std::vector<GroundTruth>> gts(5);
  std::vector<std::vector<ScoredBox>> dets(5);
  for (int s = 0; s < 5; ++s) {
    for (int i = 0; i < 5; ++i) {
      gts[s].push_back(gt_at(7.0 * i + 5.0, 6.0 * s - 12.0));
      if (rng.real01() < 0.8) {
        ScoredBox d = det_for(gts[s].back(), rng.uniform(0.1, 1.0));
        d.box.cx += rng.uniform(-0.8, 0.8);
        d.box.yaw += rng.uniform(-0.1, 0.1);
        dets[s].push_back(d);
      }
      if (rng.real01() < 0.4)
        dets[s].push_back({Box3D{rng.uniform(40, 60), rng.uniform(-20, 20), -0.9,
                                 3.9, 1.6, 1.6, 0.0},
                           rng.uniform(0.1, 1.0), 0});
    }
  }
  ApConfig config;
  config.iou_threshold = 0.5;
  const double base = average_precision(dets, gts, config).value;
  EXPECT_GT(base, 0.0);
  for (auto& scene : dets)
    for (ScoredBox& d : scene) d.score = d.score * d.score * d.score;
  EXPECT_DOUBLE_EQ(average_precision(dets, gts, config).value, base);
}

TEST(AveragePrecision, IgnoredGtNeitherScoresNorPenalizes) {
  std::vector<std::vector<GroundTruth>> gts = {
      {gt_at(5, 0), gt_at(20, 0, Difficulty::kIgnored)}};
  std::vector<std::vector<ScoredBox>> dets = {{
      det_for(gts[0][0], 0.9),   // true positive
      det_for(gts[0][1], 0.8),   // absorbed by ignored GT: dropped
      {Box3D{12.0, 8.0, -0.9, 3.9, 1.6, 1.6, 0.0}, 0.7, 0},  // false positive
  }};
  ApConfig config;
  config.iou_threshold = 0.5;
  const ApResult result = average_precision(dets, gts, config);
  EXPECT_EQ(result.relevant_gt, 1);
  // Recall 1 is reached at precision 1 before the tail FP, so AP stays 1.
  EXPECT_DOUBLE_EQ(result.value, 1.0);
}

TEST(AveragePrecision, DifficultyBucketsAreCumulative) {
  std::vector<std::vector<GroundTruth>> gts = {
      {gt_at(5, 0, Difficulty::kEasy), gt_at(20, 0, Difficulty::kHard)}};
  std::vector<std::vector<ScoredBox>> dets = {
      {det_for(gts[0][0], 0.9), det_for(gts[0][1], 0.8)}};
  ApConfig config;
  config.iou_threshold = 0.5;

  config.difficulty = Difficulty::kEasy;
  ApResult result = average_precision(dets, gts, config);
  EXPECT_EQ(result.relevant_gt, 1);  // the hard GT only absorbs its detection
  EXPECT_DOUBLE_EQ(result.value, 1.0);

  config.difficulty = Difficulty::kHard;
  result = average_precision(dets, gts, config);
  EXPECT_EQ(result.relevant_gt, 2);
  EXPECT_DOUBLE_EQ(result.value, 1.0);
}

TEST(AveragePrecision, OtherClassesAreInvisible) {
  std::vector<std::vector<GroundTruth>> gts = {
      {gt_at(5, 0, Difficulty::kEasy, 0), gt_at(20, 0, Difficulty::kEasy, 1)}};
  // A class-0 detection sitting on the class-1 GT is a plain false positive.
  std::vector<std::vector<ScoredBox>> dets = {{
      det_for(gts[0][0], 0.9),
      {gts[0][1].box, 0.8, 0},
  }};
  ApConfig config;
  config.iou_threshold = 0.5;
  config.class_id = 0;
  const ApResult result = average_precision(dets, gts, config);
  EXPECT_EQ(result.relevant_gt, 1);
  // Staircase: (1, 1) then (1, 1/2): R11 = 1.0 still (recall 1 at precision 1).
  EXPECT_DOUBLE_EQ(result.value, 1.0);

  config.class_id = 1;
  const ApResult other = average_precision(dets, gts, config);
  EXPECT_EQ(other.relevant_gt, 1);
  EXPECT_EQ(other.value, 0.0);  // no class-1 detections at all
}

TEST(ProposalRecall, HandCases) {
  std::vector<std::vector<GroundTruth>> gts = {
      {gt_at(5, 0), gt_at(20, 0), gt_at(35, 0)}};
  std::vector<std::vector<ScoredBox>> own = {
      {det_for(gts[0][0], 0.9), det_for(gts[0][1], 0.8), det_for(gts[0][2], 0.7)}};
  for (const double thr : {0.3, 0.5, 0.7, 0.99})
    EXPECT_DOUBLE_EQ(*proposal_recall(own, gts, thr, 10), 1.0);

  // Axis-aligned self-overlap is exactly 1, so threshold 1.0 still matches.
  std::vector<std::vector<GroundTruth>> axis = {{gt_at(5, 0)}};
  axis[0][0].box.yaw = 0.0;
  std::vector<std::vector<ScoredBox>> axis_props = {{det_for(axis[0][0], 1.0)}};
  EXPECT_DOUBLE_EQ(*proposal_recall(axis_props, axis, 1.0, 10), 1.0);

  EXPECT_DOUBLE_EQ(*proposal_recall(own, gts, 0.5, 0), 0.0);

  std::vector<std::vector<GroundTruth>> no_gt = {{}};
  std::vector<std::vector<ScoredBox>> no_props = {{}};
  EXPECT_FALSE(proposal_recall(no_props, no_gt, 0.5, 10).has_value());

  // 3 GT, 5 proposals, only two ground truths covered: 2/3. The duplicate on
  // the first GT cannot double-count under one-to-one matching.
  std::vector<std::vector<ScoredBox>> partial = {{
      det_for(gts[0][0], 0.9),
      det_for(gts[0][0], 0.85),
      det_for(gts[0][1], 0.8),
      {Box3D{35.0, 12.0, -0.9, 3.9, 1.6, 1.6, 0.0}, 0.75, 0},
      {Box3D{50.0, 0.0, -0.9, 3.9, 1.6, 1.6, 0.0}, 0.7, 0},
  }};
  EXPECT_DOUBLE_EQ(*proposal_recall(partial, gts, 0.5, 10), 2.0 / 3.0);
}

TEST(ProposalRecall, TopKTruncatesByScore) {
  std::vector<std::vector<GroundTruth>> gts = {{gt_at(5, 0), gt_at(20, 0)}};
  std::vector<std::vector<ScoredBox>> props = {
      {det_for(gts[0][0], 0.9), det_for(gts[0][1], 0.5)}};
  EXPECT_DOUBLE_EQ(*proposal_recall(props, gts, 0.5, 1), 0.5);
  EXPECT_DOUBLE_EQ(*proposal_recall(props, gts, 0.5, 2), 1.0);
  EXPECT_THROW(proposal_recall(props, gts, 0.5, -1), std::invalid_argument);

  // Ignored ground truth is excluded from the denominator.
  gts[0].push_back(gt_at(35, 0, Difficulty::kIgnored));
  EXPECT_DOUBLE_EQ(*proposal_recall(props, gts, 0.5, 2), 1.0);
}

}  // namespace
}  // namespace stdet
