#pragma once

// Voxel volume with physical spacing, the currency of the whole pipeline.
// Storage is z-major (each z slice is contiguous, rows along x), so
// per-level 2D analysis is a zero-copy view into the buffer.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "perivox/errors.hpp"

namespace perivox {

using Dims = std::array<int, 3>;       // voxel counts (nx, ny, nz)
using Spacing = std::array<double, 3>; // micrometers per voxel per axis

inline std::size_t voxel_count(const Dims& d) {
  return static_cast<std::size_t>(d[0]) * static_cast<std::size_t>(d[1]) *
         static_cast<std::size_t>(d[2]);
}

inline std::string dims_str(const Dims& d) {
  return std::to_string(d[0]) + "x" + std::to_string(d[1]) + "x" + std::to_string(d[2]);
}

template <typename T>
struct Volume {
  Dims dims{0, 0, 0};
  Spacing spacing{1.0, 1.0, 1.0};
  std::vector<T> data;

  Volume() = default;

  Volume(Dims d, Spacing s, T fill = T{}) : dims(d), spacing(s) {
    for (int a = 0; a < 3; ++a) {
      if (dims[a] < 1) throw DataError("volume dims must be >= 1, got " + dims_str(dims));
      if (!(spacing[a] > 0.0)) throw DataError("volume spacing must be > 0");
    }
    data.assign(voxel_count(dims), fill);
  }

  std::size_t size() const { return data.size(); }

  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(dims[0]) *
               (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(z));
  }

  T& operator()(int x, int y, int z) { return data[index(x, y, z)]; }
  const T& operator()(int x, int y, int z) const { return data[index(x, y, z)]; }

  bool in_bounds(int x, int y, int z) const {
    return x >= 0 && x < dims[0] && y >= 0 && y < dims[1] && z >= 0 && z < dims[2];
  }

  // contiguous nx*ny slice at depth z
  T* slice(int z) { return data.data() + index(0, 0, z); }
  const T* slice(int z) const { return data.data() + index(0, 0, z); }

  std::size_t slice_size() const {
    return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]);
  }

  bool same_grid(const Volume& o) const { return dims == o.dims; }
};

using BinaryVolume = Volume<std::uint8_t>;  // 0 = background, 1 = structure
using IntensityVolume = Volume<float>;      // non-negative, 16-bit value range

inline void require_same_grid(const Dims& a, const Dims& b, const char* what) {
  if (a != b)
    throw DataError(std::string(what) + ": dimension mismatch " + dims_str(a) + " vs " + dims_str(b));
}

inline std::size_t count_true(const BinaryVolume& v) {
  std::size_t n = 0;
  for (auto b : v.data) n += (b != 0);
  return n;
}

} // namespace perivox
