#pragma once

// Post-processing of predicted masks: consolidation morphology, PCA-based
// diameter filtering, and gland-overlap rejection of false-positive
// vessels. The diameter estimate is 4*sqrt(lambda2) of the voxel-position
// covariance (in micrometers): exact for a solid circular cylinder, where
// the cross-sectional variance is R^2/4. The second eigenvalue is used
// rather than the third so flattened cross-sections don't underestimate.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "perivox/errors.hpp"
#include "perivox/labeling.hpp"
#include "perivox/morphology.hpp"
#include "perivox/parallel.hpp"
#include "perivox/volume.hpp"

namespace perivox {

struct InstanceStats {
  int label = 0;
  std::int64_t voxel_count = 0;
  std::array<double, 3> centroid_um{0, 0, 0};
  std::array<std::array<double, 3>, 3> principal_axes{}; // rows, descending eigenvalue
  std::array<double, 3> eigenvalues{0, 0, 0};            // variances um^2, descending
  double est_diameter_um = 0;
};

namespace detail {

// Jacobi eigendecomposition of a symmetric 3x3 matrix. Plenty for voxel
// covariance work; returns eigenvalues/vectors sorted descending.
inline void symmetric_eigen_3x3(const double m_in[3][3], std::array<double, 3>& evals,
                                std::array<std::array<double, 3>, 3>& evecs) {
  double a[3][3];
  double v[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a[i][j] = m_in[i][j];

  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = std::abs(a[0][1]) + std::abs(a[0][2]) + std::abs(a[1][2]);
    if (off == 0.0) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < 3; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < 3; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (int k = 0; k < 3; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }

  std::array<int, 3> order{0, 1, 2};
  std::sort(order.begin(), order.end(), [&](int i, int j) { return a[i][i] > a[j][j]; });
  for (int r = 0; r < 3; ++r) {
    evals[r] = std::max(0.0, a[order[r]][order[r]]);
    for (int k = 0; k < 3; ++k) evecs[r][k] = v[k][order[r]];
  }
}

} // namespace detail

inline InstanceStats instance_pca(const LabeledVolume& lv, int label) {
  if (label < 1 || label > lv.num_labels) throw DataError("instance_pca: unknown label");
  InstanceStats st;
  st.label = label;

  double mean[3] = {0, 0, 0};
  std::int64_t n = 0;
  const int nx = lv.dims[0], ny = lv.dims[1], nz = lv.dims[2];
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x)
        if (lv.labels[lv.index(x, y, z)] == label) {
          mean[0] += x * lv.spacing[0];
          mean[1] += y * lv.spacing[1];
          mean[2] += z * lv.spacing[2];
          ++n;
        }
  if (n == 0) throw DataError("instance_pca: unknown label");
  for (auto& m : mean) m /= static_cast<double>(n);
  st.voxel_count = n;
  st.centroid_um = {mean[0], mean[1], mean[2]};

  double cov[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x)
        if (lv.labels[lv.index(x, y, z)] == label) {
          const double d[3] = {x * lv.spacing[0] - mean[0], y * lv.spacing[1] - mean[1],
                               z * lv.spacing[2] - mean[2]};
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) cov[i][j] += d[i] * d[j];
        }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) cov[i][j] /= static_cast<double>(n);

  detail::symmetric_eigen_3x3(cov, st.eigenvalues, st.principal_axes);

  const double floor_um = std::max({lv.spacing[0], lv.spacing[1], lv.spacing[2]});
  st.est_diameter_um = std::max(4.0 * std::sqrt(st.eigenvalues[1]), floor_um);
  return st;
}

// Per-instance stats in one pass over the volume (instance_pca per label
// would rescan; this accumulates all labels at once).
inline std::vector<InstanceStats> all_instance_stats(const LabeledVolume& lv) {
  const int nl = lv.num_labels;
  std::vector<std::int64_t> count(nl + 1, 0);
  std::vector<std::array<double, 3>> sum(nl + 1, {0, 0, 0});
  std::vector<std::array<double, 6>> sq(nl + 1, {0, 0, 0, 0, 0, 0}); // xx yy zz xy xz yz

  const int nx = lv.dims[0], ny = lv.dims[1], nz = lv.dims[2];
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) {
        const std::int32_t l = lv.labels[lv.index(x, y, z)];
        if (l == 0) continue;
        const double px = x * lv.spacing[0], py = y * lv.spacing[1], pz = z * lv.spacing[2];
        ++count[l];
        sum[l][0] += px;
        sum[l][1] += py;
        sum[l][2] += pz;
        sq[l][0] += px * px;
        sq[l][1] += py * py;
        sq[l][2] += pz * pz;
        sq[l][3] += px * py;
        sq[l][4] += px * pz;
        sq[l][5] += py * pz;
      }

  std::vector<InstanceStats> out(nl);
  const double floor_um = std::max({lv.spacing[0], lv.spacing[1], lv.spacing[2]});
  for (int l = 1; l <= nl; ++l) {
    InstanceStats& st = out[l - 1];
    st.label = l;
    st.voxel_count = count[l];
    const double n = static_cast<double>(count[l]);
    for (int a = 0; a < 3; ++a) st.centroid_um[a] = sum[l][a] / n;
    double cov[3][3];
    cov[0][0] = sq[l][0] / n - st.centroid_um[0] * st.centroid_um[0];
    cov[1][1] = sq[l][1] / n - st.centroid_um[1] * st.centroid_um[1];
    cov[2][2] = sq[l][2] / n - st.centroid_um[2] * st.centroid_um[2];
    cov[0][1] = cov[1][0] = sq[l][3] / n - st.centroid_um[0] * st.centroid_um[1];
    cov[0][2] = cov[2][0] = sq[l][4] / n - st.centroid_um[0] * st.centroid_um[2];
    cov[1][2] = cov[2][1] = sq[l][5] / n - st.centroid_um[1] * st.centroid_um[2];
    detail::symmetric_eigen_3x3(cov, st.eigenvalues, st.principal_axes);
    st.est_diameter_um = std::max(4.0 * std::sqrt(st.eigenvalues[1]), floor_um);
  }
  return out;
}

struct PostprocessConfig {
  int dilate_radius = 7;
  int erode_radius = 3;
};

// Consolidation morphology for the downsampled fused mask: close gaps and
// merge fragmented structures (dilate, fill holes, erode).
inline BinaryVolume postprocess_mask(const BinaryVolume& v, const PostprocessConfig& cfg = {},
                                     int workers = 1) {
  BinaryVolume m = dilate(v, {cfg.dilate_radius}, workers);
  m = fill_holes_orthoplanes(m, workers);
  m = erode(m, {cfg.erode_radius}, workers);
  return m;
}

struct FilterDecision {
  int label = 0;
  std::int64_t voxel_count = 0;
  double est_diameter_um = -1; // -1 when not applicable
  double overlap_ratio = -1;   // -1 when not applicable
  bool kept = true;
};

struct FilterAudit {
  std::string filter;
  std::vector<FilterDecision> decisions;

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& d : decisions) {
      nlohmann::json j;
      j["instance"] = d.label;
      j["voxel_count"] = d.voxel_count;
      if (d.est_diameter_um >= 0) j["est_diameter_um"] = d.est_diameter_um;
      if (d.overlap_ratio >= 0) j["overlap_ratio"] = d.overlap_ratio;
      j["verdict"] = d.kept ? "kept" : "dropped";
      arr.push_back(j);
    }
    return nlohmann::json{{"filter", filter}, {"decisions", arr}};
  }
};

namespace detail {

inline BinaryVolume apply_keep_set(const BinaryVolume& v, const LabeledVolume& lv,
                                   const std::vector<std::uint8_t>& keep) {
  BinaryVolume out(v.dims, v.spacing, 0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::int32_t l = lv.labels[i];
    if (l > 0 && keep[static_cast<std::size_t>(l)]) out.data[i] = 1;
  }
  return out;
}

} // namespace detail

// Drop instances whose estimated diameter is below the threshold
// (defaults elsewhere: 130 um for nerves, 50 um for vessels).
inline BinaryVolume filter_by_diameter(const BinaryVolume& v, double min_diameter_um,
                                       FilterAudit* audit = nullptr) {
  if (min_diameter_um < 0) throw DataError("filter_by_diameter: min_diameter must be >= 0");
  const LabeledVolume lv = label_components_3d(v);
  const auto stats = all_instance_stats(lv);
  std::vector<std::uint8_t> keep(static_cast<std::size_t>(lv.num_labels) + 1, 0);
  if (audit) audit->filter = "diameter";
  for (const auto& st : stats) {
    const bool kept = st.est_diameter_um >= min_diameter_um;
    keep[static_cast<std::size_t>(st.label)] = kept ? 1 : 0;
    if (audit)
      audit->decisions.push_back({st.label, st.voxel_count, st.est_diameter_um, -1.0, kept});
  }
  return detail::apply_keep_set(v, lv, keep);
}

// Discard a vessel instance V iff |V ∩ G| / |V| > max_overlap (strict).
inline BinaryVolume filter_vessels_by_gland_overlap(const BinaryVolume& vessels,
                                                    const BinaryVolume& glands,
                                                    double max_overlap = 0.1,
                                                    FilterAudit* audit = nullptr) {
  require_same_grid(vessels.dims, glands.dims, "filter_vessels_by_gland_overlap");
  const LabeledVolume lv = label_components_3d(vessels);
  std::vector<std::int64_t> total(static_cast<std::size_t>(lv.num_labels) + 1, 0);
  std::vector<std::int64_t> overlap(static_cast<std::size_t>(lv.num_labels) + 1, 0);
  for (std::size_t i = 0; i < vessels.size(); ++i) {
    const std::int32_t l = lv.labels[i];
    if (l == 0) continue;
    ++total[static_cast<std::size_t>(l)];
    if (glands.data[i]) ++overlap[static_cast<std::size_t>(l)];
  }
  std::vector<std::uint8_t> keep(static_cast<std::size_t>(lv.num_labels) + 1, 0);
  if (audit) audit->filter = "gland_overlap";
  for (int l = 1; l <= lv.num_labels; ++l) {
    const double ratio = static_cast<double>(overlap[static_cast<std::size_t>(l)]) /
                         static_cast<double>(total[static_cast<std::size_t>(l)]);
    const bool kept = !(ratio > max_overlap);
    keep[static_cast<std::size_t>(l)] = kept ? 1 : 0;
    if (audit)
      audit->decisions.push_back({l, total[static_cast<std::size_t>(l)], -1.0, ratio, kept});
  }
  return detail::apply_keep_set(vessels, lv, keep);
}

} // namespace perivox
