#pragma once

// Minimal CSV writers/readers for the record, feature, and label tables.
// Values are printed with %.17g so rereading reproduces the exact double
// and identical runs produce identical bytes.

#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "perivox/errors.hpp"
#include "perivox/evaluation.hpp"
#include "perivox/scores.hpp"

namespace perivox {

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fmt_optional(const std::optional<double>& v) {
  return v ? fmt_double(*v) : std::string();
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

} // namespace detail

inline void write_level_records_csv(const std::string& path, const std::string& sample_id,
                                    const std::string& structure,
                                    const std::vector<ScoreRecord>& records) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  f << "sample_id,structure,level_z,instance,burden_adjacent,burden_distant,invasion,gradient\n";
  for (const auto& r : records)
    f << sample_id << ',' << structure << ',' << r.level << ',' << r.instance << ','
      << detail::fmt_double(r.burden_adjacent) << ',' << detail::fmt_double(r.burden_distant)
      << ',' << detail::fmt_optional(r.invasion) << ',' << detail::fmt_optional(r.gradient)
      << '\n';
}

inline void write_chunk_records_csv(const std::string& path, const std::string& sample_id,
                                    const std::string& structure,
                                    const std::vector<ScoreRecord>& records) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  f << "sample_id,structure,origin_x,origin_y,origin_z,burden_adjacent,burden_distant,invasion,"
       "gradient\n";
  for (const auto& r : records)
    f << sample_id << ',' << structure << ',' << r.chunk_origin[0] << ',' << r.chunk_origin[1]
      << ',' << r.chunk_origin[2] << ',' << detail::fmt_double(r.burden_adjacent) << ','
      << detail::fmt_double(r.burden_distant) << ',' << detail::fmt_optional(r.invasion) << ','
      << detail::fmt_optional(r.gradient) << '\n';
}

// One row per sample; the column set is the union of all feature names in
// sorted order, empty cell where a sample lacks a feature.
inline void write_features_csv(const std::string& path,
                               const std::vector<std::pair<std::string, FeatureVector>>& samples) {
  std::map<std::string, int> all_names;
  for (const auto& [id, fv] : samples)
    for (const auto& [k, v] : fv.values) all_names[k] = 1;

  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  f << "sample_id";
  for (const auto& [k, _] : all_names) f << ',' << k;
  f << '\n';
  for (const auto& [id, fv] : samples) {
    f << id;
    for (const auto& [k, _] : all_names) {
      const auto it = fv.values.find(k);
      f << ',' << (it == fv.values.end() ? std::string() : detail::fmt_double(it->second));
    }
    f << '\n';
  }
}

struct FeatureTable {
  std::vector<std::string> feature_names;
  std::vector<std::string> sample_ids;
  std::vector<std::map<std::string, std::optional<double>>> rows;
};

inline FeatureTable read_features_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw DataError("empty feature CSV " + path);
  const auto header = detail::split_csv_line(line);
  if (header.empty() || header[0] != "sample_id")
    throw DataError("feature CSV must start with sample_id column: " + path);

  FeatureTable t;
  t.feature_names.assign(header.begin() + 1, header.end());
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw DataError("ragged row in " + path + " (got " + std::to_string(cells.size()) +
                      " cells)");
    t.sample_ids.push_back(cells[0]);
    std::map<std::string, std::optional<double>> row;
    for (std::size_t j = 1; j < cells.size(); ++j) {
      if (cells[j].empty()) row[header[j]] = std::nullopt;
      else {
        try {
          row[header[j]] = std::stod(cells[j]);
        } catch (const std::exception&) {
          throw DataError("non-numeric cell in " + path + ": " + cells[j]);
        }
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

// labels CSV: sample_id,bcr_5yr with bcr_5yr in {0,1}
inline std::map<std::string, int> read_labels_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw DataError("empty labels CSV " + path);
  const auto header = detail::split_csv_line(line);
  if (header.size() != 2 || header[0] != "sample_id" || header[1] != "bcr_5yr")
    throw DataError("labels CSV header must be sample_id,bcr_5yr: " + path);
  std::map<std::string, int> labels;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != 2) throw DataError("ragged row in " + path);
    if (cells[1] != "0" && cells[1] != "1")
      throw DataError("label must be 0 or 1 in " + path + ", got " + cells[1]);
    labels[cells[0]] = cells[1] == "1" ? 1 : 0;
  }
  return labels;
}

inline void write_labels_csv(const std::string& path,
                             const std::vector<std::pair<std::string, int>>& labels) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  f << "sample_id,bcr_5yr\n";
  for (const auto& [id, l] : labels) f << id << ',' << l << '\n';
}

// Join features and labels into classifier samples. Samples with any
// missing feature value are dropped (counted by the caller via n_dropped).
inline std::vector<SampleRecord> assemble_dataset(const FeatureTable& table,
                                                  const std::map<std::string, int>& labels,
                                                  int* n_dropped = nullptr) {
  std::vector<SampleRecord> out;
  int dropped = 0;
  for (std::size_t i = 0; i < table.sample_ids.size(); ++i) {
    const auto lit = labels.find(table.sample_ids[i]);
    if (lit == labels.end())
      throw DataError("no label for sample " + table.sample_ids[i]);
    SampleRecord s;
    s.sample_id = table.sample_ids[i];
    s.label = lit->second;
    bool complete = true;
    for (const auto& [k, v] : table.rows[i]) {
      if (!v) {
        complete = false;
        break;
      }
      s.features[k] = *v;
    }
    if (!complete) {
      ++dropped;
      continue;
    }
    out.push_back(std::move(s));
  }
  if (n_dropped) *n_dropped = dropped;
  return out;
}

} // namespace perivox
