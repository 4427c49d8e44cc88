#pragma once

// 2D level-by-level annular analysis. Every z level is instance-segmented
// (8-connectivity), and each instance gets two annular zones built from
// the exact 2D distance transform of that instance: adjacent at distance
// (0, t] and distant at (t, 2t], both excluding voxels of any structure
// instance, clipped at slice borders. Cancer burdens and the
// invasion/gradient ratios follow from zone/cancer voxel counts.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "perivox/edt.hpp"
#include "perivox/errors.hpp"
#include "perivox/labeling.hpp"
#include "perivox/parallel.hpp"
#include "perivox/scores.hpp"
#include "perivox/volume.hpp"

namespace perivox {

struct AnnularZones {
  int instance = 0;
  int level_z = -1;
  int t = 15;
  std::vector<std::uint32_t> adjacent; // slice-linear voxel indices
  std::vector<std::uint32_t> distant;
};

// Zones for one instance of a labeled slice. The distance transform runs
// on a window padded 2t around the instance bounding box (clipped to the
// slice), which is exact: no zone voxel can be farther than 2t from the
// instance.
inline AnnularZones annular_zones(const LabeledVolume& slice_labels, int instance, int t) {
  if (t < 1) throw DataError("annular_zones: t must be >= 1");
  if (instance < 1 || instance > slice_labels.num_labels)
    throw DataError("annular_zones: unknown instance");
  const int nx = slice_labels.dims[0], ny = slice_labels.dims[1];

  int x0 = nx, x1 = -1, y0 = ny, y1 = -1;
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x)
      if (slice_labels.labels[static_cast<std::size_t>(y) * nx + x] == instance) {
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
      }
  if (x1 < 0) throw DataError("annular_zones: unknown instance");

  const int wx0 = std::max(0, x0 - 2 * t), wx1 = std::min(nx - 1, x1 + 2 * t);
  const int wy0 = std::max(0, y0 - 2 * t), wy1 = std::min(ny - 1, y1 + 2 * t);
  const int wnx = wx1 - wx0 + 1, wny = wy1 - wy0 + 1;

  std::vector<std::uint8_t> seed(static_cast<std::size_t>(wnx) * wny, 0);
  for (int y = wy0; y <= wy1; ++y)
    for (int x = wx0; x <= wx1; ++x)
      if (slice_labels.labels[static_cast<std::size_t>(y) * nx + x] == instance)
        seed[static_cast<std::size_t>(y - wy0) * wnx + (x - wx0)] = 1;

  const auto d2 = squared_edt_2d(seed.data(), wnx, wny);
  const std::int64_t t2 = static_cast<std::int64_t>(t) * t;
  const std::int64_t t2_outer = 4 * t2;

  AnnularZones zones;
  zones.instance = instance;
  zones.t = t;
  for (int y = 0; y < wny; ++y)
    for (int x = 0; x < wnx; ++x) {
      const std::int64_t d = d2[static_cast<std::size_t>(y) * wnx + x];
      if (d <= 0 || d > t2_outer) continue;
      const std::size_t slice_idx = static_cast<std::size_t>(y + wy0) * nx + (x + wx0);
      if (slice_labels.labels[slice_idx] != 0) continue; // no structure voxel of any instance
      if (d <= t2) zones.adjacent.push_back(static_cast<std::uint32_t>(slice_idx));
      else zones.distant.push_back(static_cast<std::uint32_t>(slice_idx));
    }
  return zones;
}

// Burdens and ratios for one instance's zones against the cancer slice.
inline ScoreRecord score_instance(const AnnularZones& zones, const std::uint8_t* cancer_slice) {
  if (zones.adjacent.empty() || zones.distant.empty())
    throw DataError("score_instance: empty zone (instance fully clipped or crowded out)");
  std::int64_t adj_cancer = 0, dist_cancer = 0;
  for (auto i : zones.adjacent) adj_cancer += cancer_slice[i] ? 1 : 0;
  for (auto i : zones.distant) dist_cancer += cancer_slice[i] ? 1 : 0;
  ScoreRecord r = make_score(static_cast<std::int64_t>(zones.adjacent.size()), adj_cancer,
                             static_cast<std::int64_t>(zones.distant.size()), dist_cancer);
  r.level = zones.level_z;
  r.instance = zones.instance;
  return r;
}

struct LevelConfig {
  int t = 15;                  // annulus thickness in voxels (~32 um at 2.1 um)
  std::vector<int> levels;     // empty = all z levels
  std::string structure = "nerve";
  int workers = 1;
};

struct LevelResult {
  std::vector<ScoreRecord> records; // sorted by (level, instance)
  FeatureVector features;
  bool insufficient = false;
  std::int64_t skipped_degenerate = 0;  // instances whose zones were empty
  std::int64_t undefined_invasion = 0;  // records excluded from invasion stats
  std::int64_t undefined_gradient = 0;
};

inline LevelResult analyze_levels(const BinaryVolume& structures, const BinaryVolume& cancer,
                                  const LevelConfig& cfg) {
  require_same_grid(structures.dims, cancer.dims, "analyze_levels");
  std::vector<int> levels = cfg.levels;
  if (levels.empty()) {
    levels.resize(static_cast<std::size_t>(structures.dims[2]));
    for (int z = 0; z < structures.dims[2]; ++z) levels[static_cast<std::size_t>(z)] = z;
  }
  for (int z : levels)
    if (z < 0 || z >= structures.dims[2]) throw DataError("analyze_levels: level out of range");

  struct PerLevel {
    std::vector<ScoreRecord> records;
    std::int64_t skipped = 0;
  };
  std::vector<PerLevel> per_level(levels.size());

  parallel_for(levels.size(), cfg.workers, [&](std::size_t li) {
    const int z = levels[li];
    const LabeledVolume lab = label_components_2d(structures.slice(z), structures.dims[0],
                                                  structures.dims[1], structures.spacing);
    const std::uint8_t* cancer_slice = cancer.slice(z);
    for (int inst = 1; inst <= lab.num_labels; ++inst) {
      AnnularZones zones = annular_zones(lab, inst, cfg.t);
      zones.level_z = z;
      if (zones.adjacent.empty() || zones.distant.empty()) {
        ++per_level[li].skipped;
        continue;
      }
      per_level[li].records.push_back(score_instance(zones, cancer_slice));
    }
  });

  LevelResult res;
  for (const auto& pl : per_level) {
    res.skipped_degenerate += pl.skipped;
    res.records.insert(res.records.end(), pl.records.begin(), pl.records.end());
  }
  for (const auto& r : res.records) {
    if (!r.invasion) ++res.undefined_invasion;
    if (!r.gradient) ++res.undefined_gradient;
  }
  res.insufficient = res.records.empty();
  res.features = aggregate_scores(res.records, cfg.structure + ".level");
  return res;
}

// Three z indices gap_um apart, centered at mid-depth unless given.
inline std::array<int, 3> select_three_levels(int nz, double spacing_z_um, double gap_um = 25.0,
                                              int center = -1) {
  const int g = static_cast<int>(std::lround(gap_um / spacing_z_um));
  const int c = center < 0 ? nz / 2 : center;
  if (c - g < 0 || c + g >= nz)
    throw DataError("select_three_levels: volume too thin for gap " + std::to_string(gap_um) +
                    " um at spacing " + std::to_string(spacing_z_um));
  return {c - g, c, c + g};
}

} // namespace perivox
