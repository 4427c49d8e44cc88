#pragma once

// 3D chunk-by-chunk shell analysis. The volume is tiled into overlapping
// chunks (50% lateral overlap by default, z in full-depth bands). Within
// each chunk containing structure voxels, two shell regions are built
// from the chunk-local distance transform: adjacent at (0, s] and distant
// at (s, 2s] voxels from any structure voxel. Shells are chunk-global (no
// halo from neighboring chunks) and may wrap multiple fragments at once.

#include <cstdint>
#include <string>
#include <vector>

#include "perivox/edt.hpp"
#include "perivox/errors.hpp"
#include "perivox/parallel.hpp"
#include "perivox/scores.hpp"
#include "perivox/volume.hpp"

namespace perivox {

struct ChunkSpec {
  std::array<int, 3> origin{0, 0, 0};
  std::array<int, 3> size{0, 0, 0};
};

inline std::vector<ChunkSpec> partition_chunks(const Dims& dims, const std::array<int, 3>& size,
                                               const std::array<int, 2>& stride) {
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < 1) throw DataError("partition_chunks: zero-sized volume");
    if (size[a] < 1) throw DataError("partition_chunks: chunk size must be >= 1");
  }
  if (stride[0] < 1 || stride[1] < 1) throw DataError("partition_chunks: stride must be >= 1");
  if (stride[0] > size[0] || stride[1] > size[1])
    throw DataError("partition_chunks: stride exceeding chunk size would leave voxels uncovered");

  auto positions = [](int dim, int sz, int st) {
    if (dim <= sz) return 1;
    return 1 + static_cast<int>((static_cast<long long>(dim - sz) + st - 1) / st);
  };
  const int n[3] = {positions(dims[0], size[0], stride[0]),
                    positions(dims[1], size[1], stride[1]),
                    positions(dims[2], size[2], size[2])}; // z: full-depth bands

  std::vector<ChunkSpec> chunks;
  chunks.reserve(static_cast<std::size_t>(n[0]) * n[1] * n[2]);
  for (int iz = 0; iz < n[2]; ++iz)
    for (int iy = 0; iy < n[1]; ++iy)
      for (int ix = 0; ix < n[0]; ++ix) {
        ChunkSpec c;
        c.origin = {ix * stride[0], iy * stride[1], iz * size[2]};
        for (int a = 0; a < 3; ++a) c.size[a] = std::min(size[a], dims[a] - c.origin[a]);
        chunks.push_back(c);
      }
  return chunks;
}

struct ShellRegions {
  ChunkSpec chunk;
  int s = 20;
  std::vector<std::uint32_t> adjacent; // chunk-linear voxel indices
  std::vector<std::uint32_t> distant;
};

// Shells around all structure voxels of one chunk, computed within chunk
// bounds only.
inline ShellRegions shell_regions(const BinaryVolume& chunk_structures, int s) {
  if (s < 1) throw DataError("shell_regions: s must be >= 1");
  ShellRegions sh;
  sh.s = s;
  sh.chunk.size = chunk_structures.dims;
  if (count_true(chunk_structures) == 0) return sh; // empty structures: empty shells

  const auto d2 = squared_edt_3d(chunk_structures.data.data(), chunk_structures.dims, 1);
  const std::int64_t s2 = static_cast<std::int64_t>(s) * s;
  const std::int64_t s2_outer = 4 * s2;
  for (std::size_t i = 0; i < d2.size(); ++i) {
    const std::int64_t d = d2[i];
    if (d <= 0 || d > s2_outer) continue;
    if (d <= s2) sh.adjacent.push_back(static_cast<std::uint32_t>(i));
    else sh.distant.push_back(static_cast<std::uint32_t>(i));
  }
  return sh;
}

inline ScoreRecord score_chunk(const ShellRegions& shells, const BinaryVolume& cancer_chunk) {
  if (shells.adjacent.empty() || shells.distant.empty())
    throw DataError("score_chunk: empty shell");
  std::int64_t adj_cancer = 0, dist_cancer = 0;
  for (auto i : shells.adjacent) adj_cancer += cancer_chunk.data[i] ? 1 : 0;
  for (auto i : shells.distant) dist_cancer += cancer_chunk.data[i] ? 1 : 0;
  ScoreRecord r = make_score(static_cast<std::int64_t>(shells.adjacent.size()), adj_cancer,
                             static_cast<std::int64_t>(shells.distant.size()), dist_cancer);
  r.chunk_origin = shells.chunk.origin;
  return r;
}

struct ChunkConfig {
  std::array<int, 3> size{204, 204, 160}; // ~428 x 428 x 336 um at 2.1 um
  std::array<int, 2> stride{102, 102};    // half the lateral chunk size
  int s = 20;                             // shell thickness in voxels (~42 um)
  std::string structure = "nerve";
  int workers = 1;
};

struct ChunkResult {
  std::vector<ScoreRecord> records; // raster chunk order
  FeatureVector features;
  bool insufficient = false;
  std::int64_t skipped_empty = 0;     // chunks with no structure voxel
  std::int64_t skipped_degenerate = 0;
  std::int64_t undefined_invasion = 0;
  std::int64_t undefined_gradient = 0;
};

namespace detail {

template <typename T>
Volume<T> extract_window(const Volume<T>& v, const std::array<int, 3>& origin,
                         const std::array<int, 3>& size) {
  Volume<T> out({size[0], size[1], size[2]}, v.spacing, T{});
  for (int z = 0; z < size[2]; ++z)
    for (int y = 0; y < size[1]; ++y) {
      const std::size_t src = v.index(origin[0], origin[1] + y, origin[2] + z);
      const std::size_t dst = out.index(0, y, z);
      std::copy_n(v.data.data() + src, size[0], out.data.data() + dst);
    }
  return out;
}

} // namespace detail

inline ChunkResult analyze_chunks(const BinaryVolume& structures, const BinaryVolume& cancer,
                                  const ChunkConfig& cfg) {
  require_same_grid(structures.dims, cancer.dims, "analyze_chunks");
  const auto chunks = partition_chunks(structures.dims, cfg.size, cfg.stride);

  struct PerChunk {
    std::optional<ScoreRecord> record;
    bool empty = false;
    bool degenerate = false;
  };
  std::vector<PerChunk> per_chunk(chunks.size());

  parallel_for(chunks.size(), cfg.workers, [&](std::size_t ci) {
    const ChunkSpec& spec = chunks[ci];
    const BinaryVolume s_chunk = detail::extract_window(structures, spec.origin, spec.size);
    if (count_true(s_chunk) == 0) {
      per_chunk[ci].empty = true;
      return;
    }
    ShellRegions shells = shell_regions(s_chunk, cfg.s);
    shells.chunk = spec;
    if (shells.adjacent.empty() || shells.distant.empty()) {
      per_chunk[ci].degenerate = true;
      return;
    }
    const BinaryVolume c_chunk = detail::extract_window(cancer, spec.origin, spec.size);
    per_chunk[ci].record = score_chunk(shells, c_chunk);
  });

  ChunkResult res;
  for (const auto& pc : per_chunk) {
    if (pc.empty) ++res.skipped_empty;
    if (pc.degenerate) ++res.skipped_degenerate;
    if (pc.record) res.records.push_back(*pc.record);
  }
  for (const auto& r : res.records) {
    if (!r.invasion) ++res.undefined_invasion;
    if (!r.gradient) ++res.undefined_gradient;
  }
  res.insufficient = res.records.empty();
  res.features = aggregate_scores(res.records, cfg.structure + ".chunk");
  return res;
}

} // namespace perivox
