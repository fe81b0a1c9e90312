#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "stdet/geometry.hpp"

// Sparse-to-dense pooling: sample a proposal's interior points, express them
// in the proposal's canonical frame, scatter them into a fixed voxel grid
// with a bounded number of slots per voxel, and remember which cloud point
// fed each slot so gradients can be routed straight back.

namespace stdet {

struct PoolConfig {
  int sample_count = 512;    // interior points drawn per proposal (N)
  int grid_l = 6;            // voxels along the box length
  int grid_w = 6;
  int grid_h = 6;
  int slots_per_voxel = 35;  // N_r
  int feature_width = 0;     // per-point feature channels (C_in)
};

// Throws std::invalid_argument on non-positive counts or grid dims.
void validate(const PoolConfig& config);

// Dense (grid_l, grid_w, grid_h, slots, channels) tensor with channels =
// 3 canonical coordinates followed by the feature vector. Slots without a
// source point are mask 0 and exactly zero in values.
struct PooledTensor {
  int grid_l = 0;
  int grid_w = 0;
  int grid_h = 0;
  int slots = 0;
  int channels = 0;
  bool empty_proposal = false;
  std::vector<double> values;  // voxel-major, then slot, then channel
  std::vector<char> mask;      // one flag per (voxel, slot)

  std::size_t voxel_count() const;
  std::size_t slot_count() const;
  // Flat offsets; vl/vw/vh are voxel indices along each axis.
  std::size_t slot_offset(int vl, int vw, int vh, int slot) const;
  std::size_t value_offset(int vl, int vw, int vh, int slot, int channel) const;
};

// Source cloud index per slot, -1 where the slot is empty. Parallel to the
// tensor's mask; slots within a voxel are ordered by ascending source index.
struct RoutingRecord {
  int cloud_size = 0;
  std::vector<int> source;
};

// Uniform sample of the proposal's interior point indices, ascending:
// without replacement when the interior has at least n points, with
// replacement when it is smaller but non-empty. Zero interior points yield
// an empty list and set *empty when provided.
std::vector<int> sample_interior(const PointCloud& cloud, const Box3D& proposal,
                                 int n, std::uint64_t seed, bool* empty = nullptr);

// Forward pass. point_features holds one feature_width-long vector per cloud
// point. Voxels partition the canonical box extent into half-open cells (the
// last cell per axis closed); overflowing voxels keep a seeded uniform
// subset of slots_per_voxel candidates.
std::pair<PooledTensor, RoutingRecord> pool_forward(
    const PointCloud& cloud, const std::vector<std::vector<double>>& point_features,
    const Box3D& proposal, const PoolConfig& config, std::uint64_t seed);

// Adjoint of the forward pass restricted to feature channels: accumulates
// grad_out's feature slice of every slot into its source point. Coordinate
// channels carry no gradient. Throws on shape mismatch.
std::vector<std::vector<double>> pool_backward(const PooledTensor& grad_out,
                                               const RoutingRecord& routing);

// Permutation-invariant stand-in for the learned voxel encoder: per-voxel
// masked max over slots, flattened voxel-major to grid_l*grid_w*grid_h*channels.
std::vector<double> reference_encoder(const PooledTensor& tensor);

// Flat little-endian doubles plus a JSON sidecar (shape, mask, routing) for
// cross-implementation diffing. Load restores bit-identical values.
void save_pooled(const PooledTensor& tensor, const RoutingRecord& routing,
                 const std::string& bin_path, const std::string& json_path);
std::pair<PooledTensor, RoutingRecord> load_pooled(const std::string& bin_path,
                                                   const std::string& json_path);

}  // namespace stdet
