#pragma once

// Binary morphology with digital-ball structuring elements. Operators are
// implemented through the exact squared EDT, which is equivalent to offset
// enumeration (a voxel is within the dilation iff its squared distance to
// the nearest foreground voxel is <= r^2) but runs in linear time at any
// radius. Border convention: out-of-volume is background, and erosion is
// the exact dual erode(v) = ~dilate(~v), so voxels whose ball exits the
// volume erode away only when an in-bounds background voxel is inside it.

#include <array>
#include <cstdint>
#include <vector>

#include "perivox/edt.hpp"
#include "perivox/errors.hpp"
#include "perivox/intensity.hpp"
#include "perivox/labeling.hpp"
#include "perivox/parallel.hpp"
#include "perivox/volume.hpp"

namespace perivox {

struct StructuringElement {
  int radius = 0; // digital ball: offsets with dx^2+dy^2+dz^2 <= r^2
};

inline std::vector<std::array<int, 3>> ball_offsets(int radius) {
  std::vector<std::array<int, 3>> offs;
  const int r2 = radius * radius;
  for (int dz = -radius; dz <= radius; ++dz)
    for (int dy = -radius; dy <= radius; ++dy)
      for (int dx = -radius; dx <= radius; ++dx)
        if (dx * dx + dy * dy + dz * dz <= r2) offs.push_back({dx, dy, dz});
  return offs;
}

inline BinaryVolume dilate(const BinaryVolume& v, StructuringElement se, int workers = 1) {
  if (se.radius < 0) throw DataError("dilate: radius must be >= 0");
  if (se.radius == 0) return v;
  const auto d = squared_edt_3d(v.data.data(), v.dims, workers);
  const std::int64_t r2 = static_cast<std::int64_t>(se.radius) * se.radius;
  BinaryVolume out(v.dims, v.spacing, 0);
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = d[i] <= r2 ? 1 : 0;
  return out;
}

inline BinaryVolume erode(const BinaryVolume& v, StructuringElement se, int workers = 1) {
  if (se.radius < 0) throw DataError("erode: radius must be >= 0");
  if (se.radius == 0) return v;
  std::vector<std::uint8_t> bg(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) bg[i] = v.data[i] ? 0 : 1;
  const auto d = squared_edt_3d(bg.data(), v.dims, workers);
  const std::int64_t r2 = static_cast<std::int64_t>(se.radius) * se.radius;
  BinaryVolume out(v.dims, v.spacing, 0);
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = d[i] > r2 ? 1 : 0;
  return out;
}

inline BinaryVolume close(const BinaryVolume& v, StructuringElement se, int workers = 1) {
  return erode(dilate(v, se, workers), se, workers);
}

namespace detail {

// Fill 2D background regions not connected to the plane border (4-conn)
// for every slice of one orientation, OR-ing the result into `out`.
// Plane axes (a0, a1) index the slice; axis `normal` enumerates slices.
inline void fill_holes_one_orientation(const BinaryVolume& v, BinaryVolume& out, int a0, int a1,
                                       int normal, int workers) {
  const int n0 = v.dims[a0], n1 = v.dims[a1], ns = v.dims[normal];

  parallel_for(static_cast<std::size_t>(ns), workers, [&](std::size_t s) {
    std::vector<std::uint8_t> reach(static_cast<std::size_t>(n0) * n1, 0);
    std::vector<std::int32_t> stack;
    int coord[3];
    coord[normal] = static_cast<int>(s);
    auto vox = [&](int i0, int i1) -> std::size_t {
      coord[a0] = i0;
      coord[a1] = i1;
      return v.index(coord[0], coord[1], coord[2]);
    };
    auto push_if_bg = [&](int i0, int i1) {
      const std::size_t p = static_cast<std::size_t>(i1) * n0 + i0;
      if (reach[p]) return;
      if (v.data[vox(i0, i1)]) return;
      reach[p] = 1;
      stack.push_back(static_cast<std::int32_t>(p));
    };
    for (int i0 = 0; i0 < n0; ++i0) {
      push_if_bg(i0, 0);
      push_if_bg(i0, n1 - 1);
    }
    for (int i1 = 0; i1 < n1; ++i1) {
      push_if_bg(0, i1);
      push_if_bg(n0 - 1, i1);
    }
    while (!stack.empty()) {
      const std::int32_t p = stack.back();
      stack.pop_back();
      const int i0 = p % n0, i1 = p / n0;
      if (i0 > 0) push_if_bg(i0 - 1, i1);
      if (i0 + 1 < n0) push_if_bg(i0 + 1, i1);
      if (i1 > 0) push_if_bg(i0, i1 - 1);
      if (i1 + 1 < n1) push_if_bg(i0, i1 + 1);
    }
    // anything not reached from the border becomes foreground
    for (int i1 = 0; i1 < n1; ++i1)
      for (int i0 = 0; i0 < n0; ++i0)
        if (!reach[static_cast<std::size_t>(i1) * n0 + i0]) out.data[vox(i0, i1)] = 1;
  });
}

} // namespace detail

// 2D hole filling in all three orthogonal slicing orientations; the output
// is the union of the input with each orientation's fill.
inline BinaryVolume fill_holes_orthoplanes(const BinaryVolume& v, int workers = 1) {
  BinaryVolume out = v;
  detail::fill_holes_one_orientation(v, out, 0, 1, 2, workers); // XY planes
  detail::fill_holes_one_orientation(v, out, 0, 2, 1, workers); // XZ planes
  detail::fill_holes_one_orientation(v, out, 1, 2, 0, workers); // YZ planes
  return out;
}

struct GroundTruthConfig {
  double sigma = 2.0;
  int dilate_radius = 7;
  int erode_radius = 3;
};

// Threshold-based ground-truth mask synthesis from an immunolabeling
// channel: log adjust, Gaussian smooth, Otsu binarize, then
// dilate / fill-holes / erode to consolidate the mask.
inline BinaryVolume nerve_ground_truth(const IntensityVolume& channel,
                                       const GroundTruthConfig& cfg = {}, int workers = 1) {
  const IntensityVolume adjusted = log_adjust(channel);
  const IntensityVolume smoothed = gaussian_smooth(adjusted, cfg.sigma, workers);
  const double t = otsu_threshold(smoothed);
  BinaryVolume mask = binarize(smoothed, t);
  mask = dilate(mask, {cfg.dilate_radius}, workers);
  mask = fill_holes_orthoplanes(mask, workers);
  mask = erode(mask, {cfg.erode_radius}, workers);
  return mask;
}

// Closing pass applied to annotation-derived vessel masks.
inline BinaryVolume refine_vessel_annotation(const BinaryVolume& mask, int radius = 3,
                                             int workers = 1) {
  return close(mask, {radius}, workers);
}

} // namespace perivox
