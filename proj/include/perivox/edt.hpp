#pragma once

// Exact squared Euclidean distance transform on the voxel grid
// (Felzenszwalb & Huttenlocher lower-envelope method, separable per axis).
// Distances are in voxel units; inputs are integer grids, so the computed
// squared distances are exact integers. All ball/disk morphology in this
// library is defined through these transforms: dilation by a digital ball
// of radius r is exactly { sqdist_to_foreground <= r^2 }.

#include <cstdint>
#include <limits>
#include <vector>

#include "perivox/parallel.hpp"
#include "perivox/volume.hpp"

namespace perivox {

inline constexpr std::int64_t kEdtInf = std::numeric_limits<std::int64_t>::max() / 4;

namespace detail {

// 1D transform: d_out[q] = min_p (f[p] + (q-p)^2). f entries are either
// exact squared distances or kEdtInf. Scratch arrays are caller-provided.
inline void edt_1d(const std::int64_t* f, std::int64_t* d_out, int n, int* v, double* z) {
  int k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  for (int q = 1; q < n; ++q) {
    if (f[q] >= kEdtInf) continue;
    double s = 0;
    while (true) {
      const int p = v[k];
      if (f[p] >= kEdtInf) {
        // empty envelope so far; seed with q
        --k;
        if (k < 0) break;
        continue;
      }
      s = (static_cast<double>(f[q] - f[p]) + static_cast<double>(q) * q -
           static_cast<double>(p) * p) /
          (2.0 * (q - p));
      if (s > z[k]) break;
      --k;
      if (k < 0) break;
    }
    ++k;
    v[k] = q;
    z[k] = k == 0 ? -std::numeric_limits<double>::infinity() : s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  if (f[v[0]] >= kEdtInf) {
    // no seeds anywhere on this line
    for (int q = 0; q < n; ++q) d_out[q] = kEdtInf;
    return;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const std::int64_t dq = q - v[k];
    d_out[q] = f[v[k]] + dq * dq;
  }
}

} // namespace detail

// Squared distance from every voxel to the nearest voxel where seed != 0.
// Voxels with no seed in the volume get kEdtInf.
inline std::vector<std::int64_t> squared_edt_3d(const std::uint8_t* seed, const Dims& dims,
                                                int workers = 1) {
  const int nx = dims[0], ny = dims[1], nz = dims[2];
  const std::size_t n = voxel_count(dims);
  std::vector<std::int64_t> d(n);

  // pass 1: along x, exact 1D distance by two sweeps
  parallel_for(static_cast<std::size_t>(ny) * nz, workers, [&](std::size_t line) {
    const int z = static_cast<int>(line / ny);
    const int y = static_cast<int>(line % ny);
    const std::size_t base = (static_cast<std::size_t>(z) * ny + y) * nx;
    std::int64_t run = kEdtInf;
    for (int x = 0; x < nx; ++x) {
      run = seed[base + x] ? 0 : (run >= kEdtInf ? kEdtInf : run + 1);
      d[base + x] = run;
    }
    run = kEdtInf;
    for (int x = nx - 1; x >= 0; --x) {
      run = seed[base + x] ? 0 : (run >= kEdtInf ? kEdtInf : run + 1);
      if (run < d[base + x]) d[base + x] = run;
    }
    for (int x = 0; x < nx; ++x) {
      auto& v = d[base + x];
      if (v < kEdtInf) v = v * v;
    }
  });

  // pass 2: along y
  parallel_for(static_cast<std::size_t>(nx) * nz, workers, [&](std::size_t line) {
    const int z = static_cast<int>(line / nx);
    const int x = static_cast<int>(line % nx);
    std::vector<std::int64_t> f(ny), out(ny);
    std::vector<int> v(ny);
    std::vector<double> zz(ny + 1);
    const std::size_t zbase = static_cast<std::size_t>(z) * ny * nx;
    for (int y = 0; y < ny; ++y) f[y] = d[zbase + static_cast<std::size_t>(y) * nx + x];
    detail::edt_1d(f.data(), out.data(), ny, v.data(), zz.data());
    for (int y = 0; y < ny; ++y) d[zbase + static_cast<std::size_t>(y) * nx + x] = out[y];
  });

  // pass 3: along z
  if (nz > 1) {
    parallel_for(static_cast<std::size_t>(nx) * ny, workers, [&](std::size_t col) {
      std::vector<std::int64_t> f(nz), out(nz);
      std::vector<int> v(nz);
      std::vector<double> zz(nz + 1);
      const std::size_t stride = static_cast<std::size_t>(nx) * ny;
      for (int z = 0; z < nz; ++z) f[z] = d[col + static_cast<std::size_t>(z) * stride];
      detail::edt_1d(f.data(), out.data(), nz, v.data(), zz.data());
      for (int z = 0; z < nz; ++z) d[col + static_cast<std::size_t>(z) * stride] = out[z];
    });
  }
  return d;
}

// 2D variant over a single nx*ny plane.
inline std::vector<std::int64_t> squared_edt_2d(const std::uint8_t* seed, int nx, int ny) {
  Dims d3{nx, ny, 1};
  return squared_edt_3d(seed, d3, 1);
}

} // namespace perivox
