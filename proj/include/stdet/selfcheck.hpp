#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "stdet/geometry.hpp"

namespace stdet {

// One oracle suite outcome. max_error is the check's own error measure
// (absolute or relative as documented per check) and must stay <= tolerance.
struct CheckResult {
  std::string name;
  bool passed = false;
  double max_error = 0.0;
  double tolerance = 0.0;
  double seconds = 0.0;
};

struct SelfcheckReport {
  std::vector<CheckResult> checks;
  bool all_passed() const;
  double total_seconds() const;
};

struct SelfcheckOptions {
  std::uint64_t seed = 1;
  int mc_pairs = 200;          // box pairs for the Monte-Carlo IoU agreement
  int mc_samples = 1000000;    // Monte-Carlo samples per pair
  int points_iou_triples = 1000;
  int roundtrip_cases = 10000;  // encode/decode round-trips
  // Mutation-test hook: when set, replaces the library BEV IoU inside the
  // Monte-Carlo agreement check (and only there). A buggy implementation
  // plugged in here must make that check fail.
  std::function<double(const Box3D&, const Box3D&)> bev_iou_override;
};

// Runs every oracle suite: Monte-Carlo and closed-form IoU agreement,
// exhaustive PointsIoU enumeration, pooling adjoint / finite-difference /
// structure checks, loss gradients against central differences, target and
// angle encode/decode round-trips, KITTI velodyne and label round-trips, and
// the hand-derived AP fixture. Deterministic given options.seed.
SelfcheckReport run_selfcheck(const SelfcheckOptions& options);

}  // namespace stdet
