#pragma once

// Connected-component labeling: two-pass union-find, 26-connectivity in 3D
// and 8-connectivity in 2D. Labels are compacted to 1..num_labels in raster
// scan order of each component's first voxel, so output is deterministic.

#include <cstdint>
#include <vector>

#include "perivox/volume.hpp"

namespace perivox {

struct LabeledVolume {
  Dims dims{0, 0, 0};
  Spacing spacing{1.0, 1.0, 1.0};
  std::vector<std::int32_t> labels;
  int num_labels = 0;

  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(dims[0]) *
               (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(z));
  }
  std::int32_t operator()(int x, int y, int z) const { return labels[index(x, y, z)]; }
};

namespace detail {

class UnionFind {
public:
  std::int32_t add() {
    parent_.push_back(static_cast<std::int32_t>(parent_.size()));
    return parent_.back();
  }
  std::int32_t find(std::int32_t a) {
    while (parent_[a] != a) {
      parent_[a] = parent_[parent_[a]]; // path halving
      a = parent_[a];
    }
    return a;
  }
  void unite(std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) parent_[b] = a; // keep the smaller provisional id as root
    else parent_[a] = b;
  }
  std::size_t size() const { return parent_.size(); }

private:
  std::vector<std::int32_t> parent_;
};

inline void compact_labels(std::vector<std::int32_t>& lab, UnionFind& uf, int& num_labels) {
  std::vector<std::int32_t> remap(uf.size(), 0);
  std::int32_t next = 0;
  for (auto& v : lab) {
    if (v < 0) {
      v = 0;
      continue;
    }
    const std::int32_t root = uf.find(v);
    if (remap[root] == 0) remap[root] = ++next;
    v = remap[root];
  }
  num_labels = next;
}

} // namespace detail

inline LabeledVolume label_components_3d(const BinaryVolume& v) {
  const int nx = v.dims[0], ny = v.dims[1], nz = v.dims[2];
  LabeledVolume out;
  out.dims = v.dims;
  out.spacing = v.spacing;
  out.labels.assign(v.size(), -1);
  detail::UnionFind uf;

  // 13 previously-scanned neighbors of a 26-neighborhood
  static constexpr int kPrior[13][3] = {
      {-1, -1, -1}, {0, -1, -1}, {1, -1, -1}, {-1, 0, -1}, {0, 0, -1}, {1, 0, -1},
      {-1, 1, -1},  {0, 1, -1},  {1, 1, -1},  {-1, -1, 0}, {0, -1, 0}, {1, -1, 0},
      {-1, 0, 0}};

  for (int z = 0; z < nz; ++z) {
    for (int y = 0; y < ny; ++y) {
      for (int x = 0; x < nx; ++x) {
        const std::size_t i = v.index(x, y, z);
        if (!v.data[i]) continue;
        std::int32_t assigned = -1;
        for (const auto& o : kPrior) {
          const int px = x + o[0], py = y + o[1], pz = z + o[2];
          if (!v.in_bounds(px, py, pz)) continue;
          const std::int32_t n = out.labels[v.index(px, py, pz)];
          if (n < 0) continue;
          if (assigned < 0) assigned = n;
          else uf.unite(assigned, n);
        }
        if (assigned < 0) assigned = uf.add();
        out.labels[i] = assigned;
      }
    }
  }
  detail::compact_labels(out.labels, uf, out.num_labels);
  return out;
}

// 8-connectivity labeling of one nx*ny plane.
inline LabeledVolume label_components_2d(const std::uint8_t* slice, int nx, int ny,
                                         Spacing spacing = {1.0, 1.0, 1.0}) {
  LabeledVolume out;
  out.dims = {nx, ny, 1};
  out.spacing = spacing;
  out.labels.assign(static_cast<std::size_t>(nx) * ny, -1);
  detail::UnionFind uf;

  static constexpr int kPrior[4][2] = {{-1, -1}, {0, -1}, {1, -1}, {-1, 0}};

  for (int y = 0; y < ny; ++y) {
    for (int x = 0; x < nx; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * nx + x;
      if (!slice[i]) continue;
      std::int32_t assigned = -1;
      for (const auto& o : kPrior) {
        const int px = x + o[0], py = y + o[1];
        if (px < 0 || px >= nx || py < 0 || py >= ny) continue;
        const std::int32_t n = out.labels[static_cast<std::size_t>(py) * nx + px];
        if (n < 0) continue;
        if (assigned < 0) assigned = n;
        else uf.unite(assigned, n);
      }
      if (assigned < 0) assigned = uf.add();
      out.labels[i] = assigned;
    }
  }
  detail::compact_labels(out.labels, uf, out.num_labels);
  return out;
}

inline std::vector<std::int64_t> label_voxel_counts(const LabeledVolume& lv) {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(lv.num_labels) + 1, 0);
  for (auto l : lv.labels) ++counts[static_cast<std::size_t>(l)];
  return counts;
}

} // namespace perivox
