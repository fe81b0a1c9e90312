#pragma once

#include <cstdint>
#include <vector>

#include "stdet/random.hpp"
#include "stdet/synth.hpp"

namespace stdet {

// One donor object for ground-truth sampling: a box with its interior points.
struct ObjectSample {
  Box3D box;
  std::vector<Point3> points;
  int class_id = 0;
};

struct AugmentConfig {
  int gt_sample_count = 0;          // insertion attempts per scene
  double yaw_jitter = 0.7853981633974483;  // per-box range [-j, +j], pi/4
  double translation_sigma = 0.25;  // per-box Gaussian shift in the ground plane
  double flip_prob = 0.5;           // mirror across the x-z plane
  double global_yaw = 0.7853981633974483;  // scene rotation range [-g, +g]
  double scale_min = 0.9, scale_max = 1.1;
};

// Throws std::invalid_argument on ill-ordered ranges.
void validate(const AugmentConfig& config);

// Pull every ground truth out of a scene as a donor sample.
std::vector<ObjectSample> extract_objects(const SceneSample& scene);

// Stages, exposed individually so properties can be tested in isolation.
// All mutate in place and are deterministic given the Rng state.

// Drop donors (at their original pose) into the scene, rejecting any whose
// BEV rectangle overlaps an existing box at all; difficulty from point bands.
void insert_samples(SceneSample* scene, const std::vector<ObjectSample>& pool,
                    int count, Rng* rng);

// Rotate each box by a uniform draw in [-yaw_range, yaw_range] about its own
// center and shift it by a Gaussian ground-plane translation; interior points
// move rigidly with their box (each point moves with at most one box).
void jitter_boxes(SceneSample* scene, double yaw_range, double sigma, Rng* rng);

// Mirror across the x-z plane: y -> -y, yaw -> -yaw. An involution.
void apply_flip(SceneSample* scene);

// Rotate everything about the origin's up axis.
void apply_global_yaw(SceneSample* scene, double angle);

// Multiply all coordinates, centers, and sizes by s.
void apply_global_scale(SceneSample* scene, double s);

// Full pipeline in order: GT-sampling, per-box jitter, coin-flip mirror,
// global yaw, global scale. Each stage draws from its own derived seed
// stream, so disabling one stage never shifts another's randomness.
// gt_sample_count > 0 requires a non-null pool.
SceneSample augment(const SceneSample& scene, const AugmentConfig& config,
                    const std::vector<ObjectSample>* pool, std::uint64_t seed);

}  // namespace stdet
