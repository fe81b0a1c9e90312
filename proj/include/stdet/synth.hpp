#pragma once

#include <cstdint>
#include <vector>

#include "stdet/geometry.hpp"
#include "stdet/kitti.hpp"

namespace stdet {

// A point cloud with its ground truth, all in the internal LiDAR frame.
struct SceneSample {
  PointCloud cloud;
  std::vector<GroundTruth> gts;
  int scene_id = -1;
};

// Generation recipe for one synthetic scene: car-like boxes packed without
// BEV overlap in a forward band, each covered by points on the faces visible
// from the sensor at the origin, over a noisy ground plane with clutter.
struct SynthSpec {
  int object_count = 8;
  int clutter_points = 600;
  int min_object_points = 30;   // per-object interior point budget, inclusive
  int max_object_points = 300;
  double area_x_min = 5.0, area_x_max = 40.0;
  double area_y_min = -16.0, area_y_max = 16.0;
  double l_min = 3.2, l_max = 4.6;
  double w_min = 1.5, w_max = 1.9;
  double h_min = 1.4, h_max = 1.8;
  int class_id = 0;
  int max_retries = 200;  // per object, before giving up on packing
};

// Throws std::invalid_argument on empty ranges or negative counts.
void validate(const SynthSpec& spec);

// Ground level and sensor height shared by generator and experiments.
inline constexpr double kGroundZ = -1.7;

// Deterministic given (spec, seed). Every ground truth contains at least
// min_object_points interior points; pairwise BEV IoU between boxes is zero.
// Difficulty comes from interior point count bands (>=100 easy, >=30
// moderate, >=5 hard, else ignored) since there is no image to bucket by;
// consumers of written labels see the same bands re-encoded.
// Throws std::runtime_error when packing fails after max_retries.
SceneSample synth_scene(const SynthSpec& spec, std::uint64_t seed);

// The band rule above, exposed for reports and tests.
Difficulty difficulty_from_point_count(int interior_points);

}  // namespace stdet
