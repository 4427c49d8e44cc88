#pragma once

// Block splitting and max-fusion reassembly for block-wise inference, plus
// z-cropping and mask downsampling. Split covers X and Y with a fixed
// overlap fraction (stride = size - round(overlap * size)) and covers Z in
// full-depth strips; edge blocks are clipped to the volume bounds. Fusion
// takes the voxelwise max over covering blocks, so the split/fuse
// roundtrip is the identity for any mask and any valid overlap.

#include <algorithm>
#include <cmath>
#include <vector>

#include "perivox/errors.hpp"
#include "perivox/volume.hpp"

namespace perivox {

struct BlockSpec {
  std::array<int, 3> origin{0, 0, 0};
  std::array<int, 3> size{0, 0, 0};
};

namespace detail {

// Grid positions along one axis: origins at multiples of stride, as many as
// needed so the last block reaches the end of the axis.
inline int axis_positions(int dim, int size, int stride) {
  if (dim <= size) return 1;
  return 1 + static_cast<int>((static_cast<long long>(dim - size) + stride - 1) / stride);
}

} // namespace detail

inline std::vector<BlockSpec> split_blocks(const Dims& dims, const Dims& block_size,
                                           double overlap_fraction) {
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < 1) throw DataError("split_blocks: zero-sized volume");
    if (block_size[a] < 1) throw DataError("split_blocks: block_size must be >= 1");
  }
  if (overlap_fraction < 0.0 || overlap_fraction >= 1.0)
    throw DataError("split_blocks: overlap_fraction must be in [0, 1)");

  int stride[3];
  for (int a = 0; a < 2; ++a) {
    const int ov = static_cast<int>(std::lround(overlap_fraction * block_size[a]));
    stride[a] = std::max(1, block_size[a] - ov);
  }
  stride[2] = block_size[2]; // full-depth strips, no mandated z overlap

  const int n[3] = {detail::axis_positions(dims[0], block_size[0], stride[0]),
                    detail::axis_positions(dims[1], block_size[1], stride[1]),
                    detail::axis_positions(dims[2], block_size[2], stride[2])};

  std::vector<BlockSpec> blocks;
  blocks.reserve(static_cast<std::size_t>(n[0]) * n[1] * n[2]);
  for (int iz = 0; iz < n[2]; ++iz) {
    for (int iy = 0; iy < n[1]; ++iy) {
      for (int ix = 0; ix < n[0]; ++ix) {
        BlockSpec b;
        b.origin = {ix * stride[0], iy * stride[1], iz * stride[2]};
        for (int a = 0; a < 3; ++a)
          b.size[a] = std::min(block_size[a], dims[a] - b.origin[a]);
        blocks.push_back(b);
      }
    }
  }
  return blocks;
}

inline BinaryVolume extract_block(const BinaryVolume& v, const BlockSpec& b) {
  for (int a = 0; a < 3; ++a)
    if (b.origin[a] < 0 || b.size[a] < 1 || b.origin[a] + b.size[a] > v.dims[a])
      throw DataError("extract_block: block out of bounds");
  BinaryVolume out({b.size[0], b.size[1], b.size[2]}, v.spacing, 0);
  for (int z = 0; z < b.size[2]; ++z)
    for (int y = 0; y < b.size[1]; ++y) {
      const std::size_t src = v.index(b.origin[0], b.origin[1] + y, b.origin[2] + z);
      const std::size_t dst = out.index(0, y, z);
      std::copy_n(v.data.data() + src, b.size[0], out.data.data() + dst);
    }
  return out;
}

// M_final(x,y,z) = max over covering blocks; uncovered voxels stay 0.
inline BinaryVolume fuse_blocks(const std::vector<std::pair<BlockSpec, BinaryVolume>>& blocks,
                                const Dims& dims, const Spacing& spacing) {
  BinaryVolume out(dims, spacing, 0);
  for (const auto& [spec, mask] : blocks) {
    for (int a = 0; a < 3; ++a) {
      if (mask.dims[a] != spec.size[a])
        throw DataError("fuse_blocks: block mask size does not match its spec");
      if (spec.origin[a] < 0 || spec.origin[a] + spec.size[a] > dims[a])
        throw DataError("fuse_blocks: block out of bounds");
    }
    for (int z = 0; z < spec.size[2]; ++z)
      for (int y = 0; y < spec.size[1]; ++y) {
        const std::size_t src = mask.index(0, y, z);
        const std::size_t dst = out.index(spec.origin[0], spec.origin[1] + y, spec.origin[2] + z);
        for (int x = 0; x < spec.size[0]; ++x)
          out.data[dst + x] = out.data[dst + x] | mask.data[src + x];
      }
  }
  return out;
}

// Any-voxel (max-pool) downsampling: an output voxel is true iff any voxel
// of its factor^3 source cell is true. Preserves thin structures.
inline BinaryVolume downsample_mask(const BinaryVolume& v, int factor) {
  if (factor < 1) throw DataError("downsample_mask: factor must be >= 1");
  if (factor == 1) return v;
  Dims od;
  for (int a = 0; a < 3; ++a) od[a] = (v.dims[a] + factor - 1) / factor;
  Spacing os;
  for (int a = 0; a < 3; ++a) os[a] = v.spacing[a] * factor;
  BinaryVolume out(od, os, 0);
  for (int z = 0; z < v.dims[2]; ++z)
    for (int y = 0; y < v.dims[1]; ++y) {
      const std::size_t src = v.index(0, y, z);
      const std::size_t dst = out.index(0, y / factor, z / factor);
      for (int x = 0; x < v.dims[0]; ++x)
        if (v.data[src + x]) out.data[dst + x / factor] = 1;
    }
  return out;
}

template <typename T>
Volume<T> crop_z(const Volume<T>& v, int z0, int z1) {
  if (z0 < 0 || z1 > v.dims[2] || z0 >= z1) throw DataError("crop_z: empty or invalid z range");
  Volume<T> out({v.dims[0], v.dims[1], z1 - z0}, v.spacing, T{});
  std::copy_n(v.slice(z0), v.slice_size() * static_cast<std::size_t>(z1 - z0), out.data.data());
  return out;
}

// Maximal contiguous z-range whose per-slice mean intensity exceeds
// `fraction` of the maximum slice mean.
inline std::pair<int, int> auto_z_range(const IntensityVolume& v, double fraction = 0.1) {
  const int nz = v.dims[2];
  std::vector<double> means(nz, 0.0);
  const std::size_t ss = v.slice_size();
  for (int z = 0; z < nz; ++z) {
    double acc = 0;
    const float* s = v.slice(z);
    for (std::size_t i = 0; i < ss; ++i) acc += s[i];
    means[z] = acc / static_cast<double>(ss);
  }
  const double peak = *std::max_element(means.begin(), means.end());
  const double cut = fraction * peak;
  int best_lo = -1, best_len = 0;
  int lo = -1;
  for (int z = 0; z <= nz; ++z) {
    const bool on = z < nz && means[z] > cut;
    if (on && lo < 0) lo = z;
    if (!on && lo >= 0) {
      if (z - lo > best_len) {
        best_len = z - lo;
        best_lo = lo;
      }
      lo = -1;
    }
  }
  if (best_len == 0) throw DataError("auto z-crop found no qualifying slice");
  return {best_lo, best_lo + best_len};
}

} // namespace perivox
