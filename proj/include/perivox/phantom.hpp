#pragma once

// Deterministic synthetic volumes: parametric tubes (nerves/vessels),
// ellipsoid gland blobs, and cancer fields with controlled proximity.
// Voxelization is a center-in-shape test on the integer grid (voxel i sits
// at i * spacing), with no anti-aliasing, so analytic truth stays exact.
// Cancer placement distances are measured from the first tube's axis;
// sleeve gap/thickness are measured from the tube surface.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "perivox/errors.hpp"
#include "perivox/rng.hpp"
#include "perivox/scores.hpp"
#include "perivox/volume.hpp"

namespace perivox {

struct Tube {
  std::vector<std::array<double, 3>> points_um; // polyline control points
  double radius_um = 0;
};

struct Blob {
  std::array<double, 3> center_um{0, 0, 0};
  std::array<double, 3> radii_um{0, 0, 0};
  double rotation_xy_deg = 0; // rotation about the z axis
};

enum class CancerMode { none, uniform, sleeve, slab };

// A radial cancer band around the first tube over a z sub-range:
// surface distance in (gap, gap + thickness].
struct CancerRing {
  double gap_um = 0;
  double thickness_um = 30;
  double z0_frac = 0.0;
  double z1_frac = 1.0;
};

struct PhantomSpec {
  Dims dims{64, 64, 64};
  Spacing spacing{2.1, 2.1, 2.1};
  std::vector<Tube> tubes;
  std::vector<Blob> gland_blobs;

  CancerMode cancer_mode = CancerMode::none;
  double uniform_density = 0.02;  // uniform mode: Bernoulli voxel density
  double sleeve_gap_um = 0;       // sleeve mode
  double sleeve_thickness_um = 30;
  double slab_offset_um = 200;    // slab mode: axis-to-face distance, +x side
  std::vector<CancerRing> rings;  // extra rings, unioned in for any mode

  std::uint64_t seed = 0;
};

struct PhantomTruth {
  std::vector<double> tube_diameters_um;
  std::vector<double> tube_axis_gap_um; // cancer onset distance from axis, per ring/slab
  double cancer_fraction = 0;
};

struct PhantomVolumes {
  BinaryVolume structures;
  BinaryVolume glands;
  BinaryVolume cancer;
  PhantomTruth truth;
};

namespace detail {

inline double point_segment_dist_sq(const std::array<double, 3>& p, const std::array<double, 3>& a,
                                    const std::array<double, 3>& b) {
  double ab[3] = {b[0] - a[0], b[1] - a[1], b[2] - a[2]};
  double ap[3] = {p[0] - a[0], p[1] - a[1], p[2] - a[2]};
  const double denom = ab[0] * ab[0] + ab[1] * ab[1] + ab[2] * ab[2];
  double t = denom > 0 ? (ap[0] * ab[0] + ap[1] * ab[1] + ap[2] * ab[2]) / denom : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  double d[3] = {ap[0] - t * ab[0], ap[1] - t * ab[1], ap[2] - t * ab[2]};
  return d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
}

inline double tube_dist_sq(const std::array<double, 3>& p, const Tube& tube) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s + 1 < tube.points_um.size(); ++s)
    best = std::min(best, point_segment_dist_sq(p, tube.points_um[s], tube.points_um[s + 1]));
  if (tube.points_um.size() == 1) best = point_segment_dist_sq(p, tube.points_um[0], tube.points_um[0]);
  return best;
}

} // namespace detail

inline PhantomVolumes generate(const PhantomSpec& spec) {
  PhantomVolumes out{BinaryVolume(spec.dims, spec.spacing, 0), BinaryVolume(spec.dims, spec.spacing, 0),
                     BinaryVolume(spec.dims, spec.spacing, 0), {}};

  for (const auto& tube : spec.tubes) {
    if (tube.points_um.empty() || tube.radius_um <= 0)
      throw DataError("phantom: tube needs control points and radius > 0");
    for (const auto& p : tube.points_um)
      for (int a = 0; a < 3; ++a)
        if (p[a] < 0 || p[a] > (spec.dims[a] - 1) * spec.spacing[a])
          throw DataError("phantom: tube control point out of bounds");
    out.truth.tube_diameters_um.push_back(2 * tube.radius_um);
  }

  const int nx = spec.dims[0], ny = spec.dims[1], nz = spec.dims[2];

  // structures: union of tubes
  for (const auto& tube : spec.tubes) {
    const double r2 = tube.radius_um * tube.radius_um;
    // bounding box of the tube, padded by its radius
    double lo[3] = {1e300, 1e300, 1e300}, hi[3] = {-1e300, -1e300, -1e300};
    for (const auto& p : tube.points_um)
      for (int a = 0; a < 3; ++a) {
        lo[a] = std::min(lo[a], p[a] - tube.radius_um);
        hi[a] = std::max(hi[a], p[a] + tube.radius_um);
      }
    int vlo[3], vhi[3];
    for (int a = 0; a < 3; ++a) {
      vlo[a] = std::max(0, static_cast<int>(std::floor(lo[a] / spec.spacing[a])));
      vhi[a] = std::min(spec.dims[a] - 1, static_cast<int>(std::ceil(hi[a] / spec.spacing[a])));
    }
    for (int z = vlo[2]; z <= vhi[2]; ++z)
      for (int y = vlo[1]; y <= vhi[1]; ++y)
        for (int x = vlo[0]; x <= vhi[0]; ++x) {
          const std::array<double, 3> p = {x * spec.spacing[0], y * spec.spacing[1],
                                           z * spec.spacing[2]};
          if (detail::tube_dist_sq(p, tube) <= r2) out.structures(x, y, z) = 1;
        }
  }

  // glands: union of ellipsoid blobs
  for (const auto& blob : spec.gland_blobs) {
    if (blob.radii_um[0] <= 0 || blob.radii_um[1] <= 0 || blob.radii_um[2] <= 0)
      throw DataError("phantom: blob radii must be > 0");
    const double cth = std::cos(blob.rotation_xy_deg * 3.14159265358979323846 / 180.0);
    const double sth = std::sin(blob.rotation_xy_deg * 3.14159265358979323846 / 180.0);
    for (int z = 0; z < nz; ++z)
      for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) {
          const double dx = x * spec.spacing[0] - blob.center_um[0];
          const double dy = y * spec.spacing[1] - blob.center_um[1];
          const double dz = z * spec.spacing[2] - blob.center_um[2];
          const double ux = cth * dx + sth * dy;
          const double uy = -sth * dx + cth * dy;
          const double q = ux * ux / (blob.radii_um[0] * blob.radii_um[0]) +
                           uy * uy / (blob.radii_um[1] * blob.radii_um[1]) +
                           dz * dz / (blob.radii_um[2] * blob.radii_um[2]);
          if (q <= 1.0) out.glands(x, y, z) = 1;
        }
  }

  // cancer field
  auto add_ring = [&](const CancerRing& ring) {
    if (spec.tubes.empty()) throw DataError("phantom: cancer ring requires a tube");
    const Tube& tube = spec.tubes.front();
    const double r_in = tube.radius_um + ring.gap_um;
    const double r_out = r_in + ring.thickness_um;
    const int z0 = std::clamp(static_cast<int>(std::floor(ring.z0_frac * nz)), 0, nz);
    const int z1 = std::clamp(static_cast<int>(std::ceil(ring.z1_frac * nz)), 0, nz);
    out.truth.tube_axis_gap_um.push_back(r_in);
    for (int z = z0; z < z1; ++z)
      for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) {
          const std::array<double, 3> p = {x * spec.spacing[0], y * spec.spacing[1],
                                           z * spec.spacing[2]};
          const double d = std::sqrt(detail::tube_dist_sq(p, tube));
          if (d > r_in && d <= r_out) out.cancer(x, y, z) = 1;
        }
  };

  switch (spec.cancer_mode) {
    case CancerMode::none:
      break;
    case CancerMode::uniform: {
      Rng rng(derive_seed(spec.seed, 0xca));
      for (auto& v : out.cancer.data)
        if (rng.bernoulli(spec.uniform_density)) v = 1;
      break;
    }
    case CancerMode::sleeve:
      add_ring({spec.sleeve_gap_um, spec.sleeve_thickness_um, 0.0, 1.0});
      break;
    case CancerMode::slab: {
      if (spec.tubes.empty()) throw DataError("phantom: slab mode requires a tube");
      const double axis_x = spec.tubes.front().points_um.front()[0];
      const double face = axis_x + spec.slab_offset_um;
      out.truth.tube_axis_gap_um.push_back(spec.slab_offset_um);
      for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
          for (int x = 0; x < nx; ++x)
            if (x * spec.spacing[0] >= face) out.cancer(x, y, z) = 1;
      break;
    }
  }
  for (const auto& ring : spec.rings) add_ring(ring);

  // structures win over cancer where they collide
  for (std::size_t i = 0; i < out.structures.size(); ++i)
    if (out.structures.data[i]) out.cancer.data[i] = 0;

  out.truth.cancer_fraction =
      static_cast<double>(count_true(out.cancer)) / static_cast<double>(out.cancer.size());
  return out;
}

// Intensity phantom for ground-truth synthesis tests: a bright tube over a
// dark noisy background.
inline IntensityVolume generate_intensity_tube(const Dims& dims, const Spacing& spacing,
                                               const Tube& tube, double snr, std::uint64_t seed) {
  IntensityVolume v(dims, spacing, 0.0f);
  Rng rng(derive_seed(seed, 0x1f));
  const double bg_mean = 200.0, bg_sd = 40.0;
  const double fg_mean = bg_mean * snr;
  const double r2 = tube.radius_um * tube.radius_um;
  for (int z = 0; z < dims[2]; ++z)
    for (int y = 0; y < dims[1]; ++y)
      for (int x = 0; x < dims[0]; ++x) {
        const std::array<double, 3> p = {x * spacing[0], y * spacing[1], z * spacing[2]};
        const bool inside = detail::tube_dist_sq(p, tube) <= r2;
        const double mean = inside ? fg_mean : bg_mean;
        const double val = mean + bg_sd * rng.normal();
        v(x, y, z) = static_cast<float>(std::clamp(val, 0.0, 65535.0));
      }
  return v;
}

// ---- cohort generation ----

struct CohortConfig {
  int n = 40;
  double effect = 1.0; // 1: geometry follows the label; 0: independent
  Dims dims{96, 96, 24};
  Spacing spacing{2.1, 2.1, 2.1};
  std::uint64_t seed = 7;
};

struct CohortSample {
  std::string id;
  int label = 0;
  PhantomVolumes volumes;
};

// Each sample is a straight z tube with a distal cancer ring (keeps every
// score defined). Proximal-class geometry adds a hugging sleeve over a
// random z band; the distal class keeps only the far ring plus a thin
// near-but-not-touching arc so adjacent burden stays positive.
inline std::vector<CohortSample> generate_cohort(const CohortConfig& cfg) {
  if (cfg.n < 4) throw DataError("generate_cohort: need n >= 4");
  std::vector<CohortSample> cohort;
  cohort.reserve(static_cast<std::size_t>(cfg.n));

  Rng rng(cfg.seed);
  std::vector<int> labels(static_cast<std::size_t>(cfg.n));
  for (int i = 0; i < cfg.n; ++i) labels[static_cast<std::size_t>(i)] = i < cfg.n / 2 ? 1 : 0;
  rng.shuffle(labels);

  for (int i = 0; i < cfg.n; ++i) {
    const int label = labels[static_cast<std::size_t>(i)];
    // geometric class: equals the label with probability `effect`
    const int geom = rng.bernoulli(cfg.effect) ? label : (rng.bernoulli(0.5) ? 1 : 0);

    PhantomSpec spec;
    spec.dims = cfg.dims;
    spec.spacing = cfg.spacing;
    spec.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(i) + 100);

    const double pitch = cfg.spacing[0];
    const double cx = (cfg.dims[0] / 2 + rng.uniform(-3.0, 3.0)) * pitch;
    const double cy = (cfg.dims[1] / 2 + rng.uniform(-3.0, 3.0)) * pitch;
    const double radius = rng.uniform(9.0, 12.0) * pitch;
    Tube tube;
    tube.points_um = {{cx, cy, 0.0}, {cx, cy, (cfg.dims[2] - 1) * cfg.spacing[2]}};
    tube.radius_um = radius;
    spec.tubes.push_back(tube);

    // full-depth distal ring, inside the distant annulus band
    CancerRing far_ring;
    far_ring.gap_um = rng.uniform(18.0, 22.0) * pitch;
    far_ring.thickness_um = rng.uniform(6.0, 9.0) * pitch;
    spec.rings.push_back(far_ring);

    // thin near arc just outside the adjacent band boundary, keeps
    // burden_adjacent > 0 for every slice without dominating it
    CancerRing near_ring;
    near_ring.gap_um = rng.uniform(12.5, 14.0) * pitch;
    near_ring.thickness_um = rng.uniform(1.0, 2.0) * pitch;
    spec.rings.push_back(near_ring);

    if (geom == 1) {
      // hugging sleeve over a partial z band
      CancerRing sleeve;
      sleeve.gap_um = rng.uniform(0.0, 1.5) * pitch;
      sleeve.thickness_um = rng.uniform(17.0, 20.0) * pitch;
      const double band = rng.uniform(0.3, 0.5);
      sleeve.z0_frac = rng.uniform(0.0, 1.0 - band);
      sleeve.z1_frac = sleeve.z0_frac + band;
      spec.rings.push_back(sleeve);
    }

    CohortSample sample;
    sample.id = "sample_" + std::string(i < 10 ? "0" : "") + std::to_string(i);
    sample.label = label;
    sample.volumes = generate(spec);
    cohort.push_back(std::move(sample));
  }
  return cohort;
}

} // namespace perivox
