#pragma once

// Scalar-volume operators used for ground-truth mask synthesis:
// logarithmic intensity adjustment, separable Gaussian smoothing, and
// Otsu's 256-bin threshold.

#include <algorithm>
#include <cmath>
#include <vector>

#include "perivox/errors.hpp"
#include "perivox/parallel.hpp"
#include "perivox/volume.hpp"

namespace perivox {

// x -> log(1+x), min-max rescaled back to the input value range.
// Monotone, so downstream Otsu class ordering is unchanged.
inline IntensityVolume log_adjust(const IntensityVolume& v) {
  IntensityVolume out = v;
  float vmin = v.data[0], vmax = v.data[0];
  for (float x : v.data) {
    vmin = std::min(vmin, x);
    vmax = std::max(vmax, x);
  }
  if (vmax <= vmin) return out; // constant volume: identity
  const double lmin = std::log1p(static_cast<double>(vmin));
  const double lmax = std::log1p(static_cast<double>(vmax));
  const double scale = (static_cast<double>(vmax) - vmin) / (lmax - lmin);
  for (auto& x : out.data)
    x = static_cast<float>(vmin + (std::log1p(static_cast<double>(x)) - lmin) * scale);
  return out;
}

// Separable Gaussian, kernel truncated at 3*sigma, borders edge-replicated.
inline IntensityVolume gaussian_smooth(const IntensityVolume& v, double sigma, int workers = 1) {
  if (sigma < 0) throw DataError("gaussian_smooth: sigma must be >= 0");
  if (sigma == 0) return v;
  const int radius = static_cast<int>(std::floor(3.0 * sigma));
  if (radius == 0) return v;
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0;
  for (int k = -radius; k <= radius; ++k) {
    kernel[k + radius] = std::exp(-0.5 * (k * k) / (sigma * sigma));
    sum += kernel[k + radius];
  }
  for (auto& w : kernel) w /= sum;

  const int nx = v.dims[0], ny = v.dims[1], nz = v.dims[2];
  IntensityVolume a = v;
  IntensityVolume b(v.dims, v.spacing, 0.0f);

  auto convolve_axis = [&](const IntensityVolume& src, IntensityVolume& dst, int axis) {
    const int n_axis = v.dims[axis];
    const std::size_t stride = axis == 0 ? 1
                               : axis == 1 ? static_cast<std::size_t>(nx)
                                           : static_cast<std::size_t>(nx) * ny;
    const int n_lines_0 = axis == 0 ? ny : nx;
    const int n_lines_1 = axis == 2 ? ny : nz;
    parallel_for(static_cast<std::size_t>(n_lines_0) * n_lines_1, workers, [&](std::size_t line) {
      const int i0 = static_cast<int>(line % n_lines_0);
      const int i1 = static_cast<int>(line / n_lines_0);
      std::size_t base;
      if (axis == 0) base = v.index(0, i0, i1);
      else if (axis == 1) base = v.index(i0, 0, i1);
      else base = v.index(i0, i1, 0);
      for (int i = 0; i < n_axis; ++i) {
        double acc = 0;
        for (int k = -radius; k <= radius; ++k) {
          const int j = std::clamp(i + k, 0, n_axis - 1);
          acc += kernel[k + radius] * src.data[base + static_cast<std::size_t>(j) * stride];
        }
        dst.data[base + static_cast<std::size_t>(i) * stride] = static_cast<float>(acc);
      }
    });
  };

  convolve_axis(a, b, 0);
  convolve_axis(b, a, 1);
  if (nz > 1) {
    convolve_axis(a, b, 2);
    return b;
  }
  return a;
}

// 256-bin Otsu threshold: maximizes between-class variance over the 255
// possible splits, ties resolved toward the lowest threshold. Returns a
// value in input units; binarize with (value > threshold).
inline double otsu_threshold(const IntensityVolume& v) {
  float vmin = v.data[0], vmax = v.data[0];
  for (float x : v.data) {
    vmin = std::min(vmin, x);
    vmax = std::max(vmax, x);
  }
  if (!(vmax > vmin)) throw DegenerateHistogram("otsu_threshold: all voxels share one value");

  constexpr int kBins = 256;
  std::vector<std::int64_t> hist(kBins, 0);
  const double range = static_cast<double>(vmax) - vmin;
  for (float x : v.data) {
    int bin = static_cast<int>((static_cast<double>(x) - vmin) / range * kBins);
    bin = std::clamp(bin, 0, kBins - 1);
    ++hist[bin];
  }

  const double total = static_cast<double>(v.size());
  double mean_total = 0;
  for (int i = 0; i < kBins; ++i) mean_total += i * static_cast<double>(hist[i]);
  mean_total /= total;

  int best_k = -1;
  double best_var = -1.0;
  double w0 = 0, sum0 = 0;
  for (int k = 0; k < kBins - 1; ++k) {
    w0 += static_cast<double>(hist[k]);
    sum0 += k * static_cast<double>(hist[k]);
    if (w0 == 0) continue;
    const double w1 = total - w0;
    if (w1 == 0) break;
    const double mu0 = sum0 / w0;
    const double mu1 = (mean_total * total - sum0) / w1;
    const double var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    if (var > best_var) {
      best_var = var;
      best_k = k;
    }
  }
  if (best_k < 0) throw DegenerateHistogram("otsu_threshold: no valid split");
  return static_cast<double>(vmin) + (best_k + 1) * range / kBins;
}

inline BinaryVolume binarize(const IntensityVolume& v, double threshold) {
  BinaryVolume out(v.dims, v.spacing, 0);
  for (std::size_t i = 0; i < v.size(); ++i)
    out.data[i] = static_cast<double>(v.data[i]) > threshold ? 1 : 0;
  return out;
}

} // namespace perivox
