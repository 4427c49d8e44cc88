#pragma once

// Score records and sample-level aggregation. A record carries the two
// cancer burdens plus the invasion and gradient ratios; a ratio whose
// denominator burden is zero is undefined and is excluded from
// aggregation rather than inflated by an epsilon.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "perivox/errors.hpp"

namespace perivox {

struct ScoreRecord {
  double burden_adjacent = 0.0;
  double burden_distant = 0.0;
  std::optional<double> invasion;
  std::optional<double> gradient;

  // provenance: (level, instance) for the 2D analysis, chunk origin for 3D
  int level = -1;
  int instance = 0;
  std::array<int, 3> chunk_origin{-1, -1, -1};
};

inline ScoreRecord make_score(std::int64_t adj_total, std::int64_t adj_cancer,
                              std::int64_t dist_total, std::int64_t dist_cancer) {
  ScoreRecord r;
  r.burden_adjacent = static_cast<double>(adj_cancer) / static_cast<double>(adj_total);
  r.burden_distant = static_cast<double>(dist_cancer) / static_cast<double>(dist_total);
  if (r.burden_distant > 0) r.invasion = r.burden_adjacent / r.burden_distant;
  if (r.burden_adjacent > 0) r.gradient = r.burden_distant / r.burden_adjacent;
  return r;
}

struct FeatureVector {
  std::map<std::string, double> values; // stable names: {structure}.{analysis}.{score}.{stat}
};

namespace detail {

struct Stats {
  double mean, median, min, max, std_dev;
};

inline Stats summarize(std::vector<double> xs) {
  Stats s{};
  const double n = static_cast<double>(xs.size());
  double acc = 0;
  for (double x : xs) acc += x;
  s.mean = acc / n;
  double var = 0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  s.std_dev = std::sqrt(var / n);
  std::sort(xs.begin(), xs.end());
  s.min = xs.front();
  s.max = xs.back();
  const std::size_t m = xs.size() / 2;
  s.median = xs.size() % 2 == 1 ? xs[m] : 0.5 * (xs[m - 1] + xs[m]);
  return s;
}

inline void emit(FeatureVector& fv, const std::string& prefix, const std::string& score,
                 const std::vector<double>& xs) {
  if (xs.empty()) return; // all records undefined for this score: features absent
  const Stats s = summarize(xs);
  fv.values[prefix + "." + score + ".mean"] = s.mean;
  fv.values[prefix + "." + score + ".median"] = s.median;
  fv.values[prefix + "." + score + ".min"] = s.min;
  fv.values[prefix + "." + score + ".max"] = s.max;
  fv.values[prefix + "." + score + ".std"] = s.std_dev;
}

} // namespace detail

// Pool the four scores over all records and summarize each with the five
// statistics; `prefix` is "{structure}.{analysis}", e.g. "nerve.level".
inline FeatureVector aggregate_scores(const std::vector<ScoreRecord>& records,
                                      const std::string& prefix) {
  FeatureVector fv;
  std::vector<double> adj, dist, inv, grad;
  adj.reserve(records.size());
  dist.reserve(records.size());
  for (const auto& r : records) {
    adj.push_back(r.burden_adjacent);
    dist.push_back(r.burden_distant);
    if (r.invasion) inv.push_back(*r.invasion);
    if (r.gradient) grad.push_back(*r.gradient);
  }
  detail::emit(fv, prefix, "burden_adjacent", adj);
  detail::emit(fv, prefix, "burden_distant", dist);
  detail::emit(fv, prefix, "invasion", inv);
  detail::emit(fv, prefix, "gradient", grad);
  return fv;
}

} // namespace perivox
