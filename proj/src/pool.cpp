#include "stdet/pool.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "stdet/random.hpp"

namespace stdet {

namespace {

int axis_bin(double local, double extent, int bins) {
  const double step = extent / bins;
  int bin = static_cast<int>(std::floor((local + 0.5 * extent) / step));
  // Points exactly on the far face belong to the last cell.
  return std::min(std::max(bin, 0), bins - 1);
}

void write_le_doubles(std::ofstream& out, const std::vector<double>& values) {
  for (const double v : values) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    unsigned char raw[8];
    for (int i = 0; i < 8; ++i) raw[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(raw), 8);
  }
}

std::vector<double> read_le_doubles(std::ifstream& in, std::size_t count) {
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    unsigned char raw[8];
    if (!in.read(reinterpret_cast<char*>(raw), 8))
      throw std::runtime_error("truncated tensor payload");
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(raw[k]) << (8 * k);
    std::memcpy(&values[i], &bits, sizeof bits);
  }
  return values;
}

}  // namespace

void validate(const PoolConfig& config) {
  if (config.sample_count < 1) throw std::invalid_argument("sample_count must be >= 1");
  if (config.grid_l < 1 || config.grid_w < 1 || config.grid_h < 1)
    throw std::invalid_argument("grid dims must be >= 1");
  if (config.slots_per_voxel < 1)
    throw std::invalid_argument("slots_per_voxel must be >= 1");
  if (config.feature_width < 0) throw std::invalid_argument("negative feature width");
}

std::size_t PooledTensor::voxel_count() const {
  return static_cast<std::size_t>(grid_l) * grid_w * grid_h;
}

std::size_t PooledTensor::slot_count() const { return voxel_count() * slots; }

std::size_t PooledTensor::slot_offset(int vl, int vw, int vh, int slot) const {
  return ((static_cast<std::size_t>(vl) * grid_w + vw) * grid_h + vh) * slots + slot;
}

std::size_t PooledTensor::value_offset(int vl, int vw, int vh, int slot,
                                       int channel) const {
  return slot_offset(vl, vw, vh, slot) * channels + channel;
}

std::vector<int> sample_interior(const PointCloud& cloud, const Box3D& proposal,
                                 int n, std::uint64_t seed, bool* empty) {
  if (n < 1) throw std::invalid_argument("sample size must be >= 1");
  if (!box_is_finite(proposal)) throw std::invalid_argument("non-finite proposal");
  const std::vector<int> interior = points_in_box(cloud, proposal);
  if (empty != nullptr) *empty = interior.empty();
  if (interior.empty()) return {};

  Rng rng(seed);
  const int available = static_cast<int>(interior.size());
  std::vector<int> picked;
  picked.reserve(n);
  if (available >= n) {
    for (const int k : rng.sample_without_replacement(available, n))
      picked.push_back(interior[k]);
  } else {
    for (int i = 0; i < n; ++i) picked.push_back(interior[rng.pick(available)]);
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

std::pair<PooledTensor, RoutingRecord> pool_forward(
    const PointCloud& cloud, const std::vector<std::vector<double>>& point_features,
    const Box3D& proposal, const PoolConfig& config, std::uint64_t seed) {
  validate(config);
  if (point_features.size() != cloud.size())
    throw std::invalid_argument("one feature vector per cloud point required");
  for (const auto& f : point_features)
    if (static_cast<int>(f.size()) != config.feature_width)
      throw std::invalid_argument("feature width mismatch");

  PooledTensor tensor;
  tensor.grid_l = config.grid_l;
  tensor.grid_w = config.grid_w;
  tensor.grid_h = config.grid_h;
  tensor.slots = config.slots_per_voxel;
  tensor.channels = config.feature_width + 3;
  tensor.values.assign(tensor.slot_count() * tensor.channels, 0.0);
  tensor.mask.assign(tensor.slot_count(), 0);

  RoutingRecord routing;
  routing.cloud_size = static_cast<int>(cloud.size());
  routing.source.assign(tensor.slot_count(), -1);

  bool empty = false;
  const std::vector<int> sampled =
      sample_interior(cloud, proposal, config.sample_count, seed, &empty);
  if (empty) {
    tensor.empty_proposal = true;
    return {std::move(tensor), std::move(routing)};
  }

  // Candidates per voxel, already ascending by source index.
  std::vector<std::vector<int>> candidates(tensor.voxel_count());
  for (const int src : sampled) {
    const Point3 local = canonical_point(cloud.points[src], proposal);
    const int vl = axis_bin(local.x, proposal.l, config.grid_l);
    const int vw = axis_bin(local.y, proposal.w, config.grid_w);
    const int vh = axis_bin(local.z, proposal.h, config.grid_h);
    const std::size_t voxel =
        (static_cast<std::size_t>(vl) * config.grid_w + vw) * config.grid_h + vh;
    candidates[voxel].push_back(src);
  }

  Rng overflow_rng(derive_seed(seed, 1));
  for (std::size_t voxel = 0; voxel < candidates.size(); ++voxel) {
    std::vector<int>& cands = candidates[voxel];
    if (static_cast<int>(cands.size()) > config.slots_per_voxel) {
      std::vector<int> keep = overflow_rng.sample_without_replacement(
          static_cast<int>(cands.size()), config.slots_per_voxel);
      std::sort(keep.begin(), keep.end());
      std::vector<int> trimmed;
      trimmed.reserve(keep.size());
      for (const int k : keep) trimmed.push_back(cands[k]);
      cands = std::move(trimmed);
    }
    for (std::size_t slot = 0; slot < cands.size(); ++slot) {
      const int src = cands[slot];
      const std::size_t flat = voxel * config.slots_per_voxel + slot;
      tensor.mask[flat] = 1;
      routing.source[flat] = src;
      const Point3 local = canonical_point(cloud.points[src], proposal);
      double* value = &tensor.values[flat * tensor.channels];
      value[0] = local.x;
      value[1] = local.y;
      value[2] = local.z;
      for (int ch = 0; ch < config.feature_width; ++ch)
        value[3 + ch] = point_features[src][ch];
    }
  }
  return {std::move(tensor), std::move(routing)};
}

std::vector<std::vector<double>> pool_backward(const PooledTensor& grad_out,
                                               const RoutingRecord& routing) {
  if (grad_out.channels < 3) throw std::invalid_argument("tensor needs 3 coord channels");
  if (grad_out.values.size() != grad_out.slot_count() * grad_out.channels)
    throw std::invalid_argument("tensor value size mismatch");
  if (routing.source.size() != grad_out.slot_count())
    throw std::invalid_argument("routing does not match tensor shape");

  const int feature_width = grad_out.channels - 3;
  std::vector<std::vector<double>> grads(
      routing.cloud_size, std::vector<double>(feature_width, 0.0));
  for (std::size_t flat = 0; flat < routing.source.size(); ++flat) {
    const int src = routing.source[flat];
    if (src < 0) continue;
    if (src >= routing.cloud_size) throw std::invalid_argument("routed index out of range");
    const double* value = &grad_out.values[flat * grad_out.channels];
    for (int ch = 0; ch < feature_width; ++ch) grads[src][ch] += value[3 + ch];
  }
  return grads;
}

std::vector<double> reference_encoder(const PooledTensor& tensor) {
  std::vector<double> out(tensor.voxel_count() * tensor.channels, 0.0);
  for (std::size_t voxel = 0; voxel < tensor.voxel_count(); ++voxel) {
    bool any = false;
    for (int slot = 0; slot < tensor.slots; ++slot) {
      const std::size_t flat = voxel * tensor.slots + slot;
      if (!tensor.mask[flat]) continue;
      const double* value = &tensor.values[flat * tensor.channels];
      for (int ch = 0; ch < tensor.channels; ++ch) {
        double& acc = out[voxel * tensor.channels + ch];
        acc = any ? std::max(acc, value[ch]) : value[ch];
      }
      any = true;
    }
  }
  return out;
}

void save_pooled(const PooledTensor& tensor, const RoutingRecord& routing,
                 const std::string& bin_path, const std::string& json_path) {
  std::ofstream bin(bin_path, std::ios::binary);
  if (!bin) throw std::runtime_error("cannot write " + bin_path);
  write_le_doubles(bin, tensor.values);
  if (!bin) throw std::runtime_error("short write to " + bin_path);

  nlohmann::json meta;
  meta["shape"] = {tensor.grid_l, tensor.grid_w, tensor.grid_h, tensor.slots,
                   tensor.channels};
  meta["empty_proposal"] = tensor.empty_proposal;
  meta["mask"] = std::vector<int>(tensor.mask.begin(), tensor.mask.end());
  meta["routing"] = routing.source;
  meta["cloud_size"] = routing.cloud_size;
  std::ofstream side(json_path);
  if (!side) throw std::runtime_error("cannot write " + json_path);
  side << meta.dump(2) << "\n";
}

std::pair<PooledTensor, RoutingRecord> load_pooled(const std::string& bin_path,
                                                   const std::string& json_path) {
  std::ifstream side(json_path);
  if (!side) throw std::runtime_error("cannot read " + json_path);
  const nlohmann::json meta = nlohmann::json::parse(side);

  PooledTensor tensor;
  const auto shape = meta.at("shape");
  if (shape.size() != 5) throw std::runtime_error("bad tensor shape");
  tensor.grid_l = shape[0];
  tensor.grid_w = shape[1];
  tensor.grid_h = shape[2];
  tensor.slots = shape[3];
  tensor.channels = shape[4];
  tensor.empty_proposal = meta.at("empty_proposal");
  const std::vector<int> mask = meta.at("mask");
  tensor.mask.assign(mask.begin(), mask.end());

  RoutingRecord routing;
  routing.cloud_size = meta.at("cloud_size");
  routing.source = meta.at("routing").get<std::vector<int>>();

  if (tensor.mask.size() != tensor.slot_count() ||
      routing.source.size() != tensor.slot_count())
    throw std::runtime_error("sidecar inconsistent with shape");

  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw std::runtime_error("cannot read " + bin_path);
  tensor.values = read_le_doubles(bin, tensor.slot_count() * tensor.channels);
  return {std::move(tensor), std::move(routing)};
}

}  // namespace stdet
