#pragma once

// Declarative run configuration (JSON). Parsing is strict: unknown keys are
// rejected with field-level messages, and defaults reproduce the reference
// parameter set (t = 15 px, shell s = 20 px, chunks 204x204x160 stride 102,
// morphology radii 7/3, diameter thresholds 130/50 um, gland overlap 0.1,
// downsample factor 4, 13-point C grid, 10 inner folds).

#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "perivox/errors.hpp"
#include "perivox/evaluation.hpp"
#include "perivox/features_chunk.hpp"
#include "perivox/features_level.hpp"
#include "perivox/filtering.hpp"
#include "perivox/morphology.hpp"
#include "perivox/phantom.hpp"
#include "perivox/volume.hpp"

namespace perivox {

using json = nlohmann::json;

namespace cfgdetail {

inline void reject_unknown(const json& j, const std::vector<std::string>& allowed,
                           const std::string& ctx) {
  if (!j.is_object()) throw ConfigError(ctx + ": expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const auto& a : allowed)
      if (key == a) ok = true;
    if (!ok) throw ConfigError(ctx + ": unknown key \"" + key + "\"");
  }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback, const std::string& ctx) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(ctx + ": bad value for \"" + key + "\"");
  }
}

template <typename T>
T require(const json& j, const std::string& key, const std::string& ctx) {
  if (!j.contains(key)) throw ConfigError(ctx + ": missing required key \"" + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(ctx + ": bad value for \"" + key + "\"");
  }
}

inline std::array<int, 3> get_dims(const json& j, const std::string& key, const std::string& ctx) {
  const auto v = require<std::vector<int>>(j, key, ctx);
  if (v.size() != 3) throw ConfigError(ctx + ": \"" + key + "\" must have 3 entries");
  return {v[0], v[1], v[2]};
}

inline json load_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed JSON in " + path + ": " + e.what());
  }
  return j;
}

} // namespace cfgdetail

// ---- per-subcommand configs ----

struct GroundtruthConfig {
  std::string input, output;
  std::string mode = "nerve"; // "nerve" | "refine-vessel"
  GroundTruthConfig params;
  int close_radius = 3;
  int workers = 0;
};

inline GroundtruthConfig parse_groundtruth_config(const json& j) {
  cfgdetail::reject_unknown(j, {"input", "output", "mode", "sigma", "dilate_radius",
                                "erode_radius", "close_radius", "workers"},
                            "groundtruth");
  GroundtruthConfig c;
  c.input = cfgdetail::require<std::string>(j, "input", "groundtruth");
  c.output = cfgdetail::require<std::string>(j, "output", "groundtruth");
  c.mode = cfgdetail::get_or<std::string>(j, "mode", "nerve", "groundtruth");
  if (c.mode != "nerve" && c.mode != "refine-vessel")
    throw ConfigError("groundtruth: mode must be \"nerve\" or \"refine-vessel\"");
  c.params.sigma = cfgdetail::get_or<double>(j, "sigma", 2.0, "groundtruth");
  c.params.dilate_radius = cfgdetail::get_or<int>(j, "dilate_radius", 7, "groundtruth");
  c.params.erode_radius = cfgdetail::get_or<int>(j, "erode_radius", 3, "groundtruth");
  c.close_radius = cfgdetail::get_or<int>(j, "close_radius", 3, "groundtruth");
  c.workers = cfgdetail::get_or<int>(j, "workers", 0, "groundtruth");
  return c;
}

struct StitchConfig {
  Dims dims{0, 0, 0};
  Spacing spacing{1, 1, 1};
  struct BlockEntry {
    std::array<int, 3> origin;
    std::string path;
  };
  std::vector<BlockEntry> blocks;
  std::string output;
};

inline StitchConfig parse_stitch_config(const json& j) {
  cfgdetail::reject_unknown(j, {"dims", "spacing_um", "blocks", "output"}, "stitch");
  StitchConfig c;
  c.dims = cfgdetail::get_dims(j, "dims", "stitch");
  const auto sp = cfgdetail::require<std::vector<double>>(j, "spacing_um", "stitch");
  if (sp.size() != 3) throw ConfigError("stitch: spacing_um must have 3 entries");
  c.spacing = {sp[0], sp[1], sp[2]};
  c.output = cfgdetail::require<std::string>(j, "output", "stitch");
  if (!j.contains("blocks") || !j.at("blocks").is_array() || j.at("blocks").empty())
    throw ConfigError("stitch: \"blocks\" must be a non-empty array");
  for (const auto& b : j.at("blocks")) {
    cfgdetail::reject_unknown(b, {"origin", "path"}, "stitch.blocks[]");
    StitchConfig::BlockEntry e;
    e.origin = cfgdetail::get_dims(b, "origin", "stitch.blocks[]");
    e.path = cfgdetail::require<std::string>(b, "path", "stitch.blocks[]");
    c.blocks.push_back(e);
  }
  return c;
}

struct PostprocessCliConfig {
  std::string input, output;
  std::string structure = "nerve"; // nerve | vessel
  std::optional<std::array<int, 2>> z_range;
  std::string auto_z_from; // intensity volume path, empty = off
  double auto_z_fraction = 0.1;
  int downsample_factor = 4;
  PostprocessConfig morphology;
  double min_diameter_um = -1; // -1: default by structure (130 nerve, 50 vessel)
  std::string gland_mask;
  double max_gland_overlap = 0.1;
  std::string audit_json;
  int workers = 0;

  double effective_min_diameter() const {
    if (min_diameter_um >= 0) return min_diameter_um;
    return structure == "vessel" ? 50.0 : 130.0;
  }
};

inline PostprocessCliConfig parse_postprocess_config(const json& j) {
  cfgdetail::reject_unknown(j, {"input", "output", "structure", "z_range", "auto_z_from",
                                "auto_z_fraction", "downsample_factor", "dilate_radius",
                                "erode_radius", "min_diameter_um", "gland_mask",
                                "max_gland_overlap", "audit_json", "workers"},
                            "postprocess");
  PostprocessCliConfig c;
  c.input = cfgdetail::require<std::string>(j, "input", "postprocess");
  c.output = cfgdetail::require<std::string>(j, "output", "postprocess");
  c.structure = cfgdetail::get_or<std::string>(j, "structure", "nerve", "postprocess");
  if (c.structure != "nerve" && c.structure != "vessel")
    throw ConfigError("postprocess: structure must be \"nerve\" or \"vessel\"");
  if (j.contains("z_range")) {
    const auto v = cfgdetail::require<std::vector<int>>(j, "z_range", "postprocess");
    if (v.size() != 2) throw ConfigError("postprocess: z_range must have 2 entries");
    c.z_range = {{v[0], v[1]}};
  }
  c.auto_z_from = cfgdetail::get_or<std::string>(j, "auto_z_from", "", "postprocess");
  c.auto_z_fraction = cfgdetail::get_or<double>(j, "auto_z_fraction", 0.1, "postprocess");
  c.downsample_factor = cfgdetail::get_or<int>(j, "downsample_factor", 4, "postprocess");
  c.morphology.dilate_radius = cfgdetail::get_or<int>(j, "dilate_radius", 7, "postprocess");
  c.morphology.erode_radius = cfgdetail::get_or<int>(j, "erode_radius", 3, "postprocess");
  c.min_diameter_um = cfgdetail::get_or<double>(j, "min_diameter_um", -1.0, "postprocess");
  c.gland_mask = cfgdetail::get_or<std::string>(j, "gland_mask", "", "postprocess");
  c.max_gland_overlap = cfgdetail::get_or<double>(j, "max_gland_overlap", 0.1, "postprocess");
  c.audit_json = cfgdetail::get_or<std::string>(j, "audit_json", "", "postprocess");
  c.workers = cfgdetail::get_or<int>(j, "workers", 0, "postprocess");
  return c;
}

struct FeaturesLevelCliConfig {
  std::string structures, cancer;
  std::string sample_id = "sample";
  std::string structure = "nerve";
  std::string out_dir;
  int t = 15;
  std::string levels = "all"; // "all" | "three"
  std::vector<int> explicit_levels;
  double three_gap_um = 25.0;
  int three_center = -1;
  int workers = 0;
};

inline FeaturesLevelCliConfig parse_features_level_config(const json& j) {
  cfgdetail::reject_unknown(j, {"structures", "cancer", "sample_id", "structure", "out_dir", "t",
                                "levels", "three_gap_um", "three_center", "workers"},
                            "features-level");
  FeaturesLevelCliConfig c;
  c.structures = cfgdetail::require<std::string>(j, "structures", "features-level");
  c.cancer = cfgdetail::require<std::string>(j, "cancer", "features-level");
  c.out_dir = cfgdetail::require<std::string>(j, "out_dir", "features-level");
  c.sample_id = cfgdetail::get_or<std::string>(j, "sample_id", "sample", "features-level");
  c.structure = cfgdetail::get_or<std::string>(j, "structure", "nerve", "features-level");
  c.t = cfgdetail::get_or<int>(j, "t", 15, "features-level");
  if (j.contains("levels")) {
    if (j.at("levels").is_array()) {
      c.levels = "explicit";
      c.explicit_levels = j.at("levels").get<std::vector<int>>();
    } else {
      c.levels = cfgdetail::require<std::string>(j, "levels", "features-level");
      if (c.levels != "all" && c.levels != "three")
        throw ConfigError("features-level: levels must be \"all\", \"three\", or an index array");
    }
  }
  c.three_gap_um = cfgdetail::get_or<double>(j, "three_gap_um", 25.0, "features-level");
  c.three_center = cfgdetail::get_or<int>(j, "three_center", -1, "features-level");
  c.workers = cfgdetail::get_or<int>(j, "workers", 0, "features-level");
  return c;
}

struct FeaturesChunkCliConfig {
  std::string structures, cancer;
  std::string sample_id = "sample";
  std::string structure = "nerve";
  std::string out_dir;
  std::array<int, 3> chunk_size{204, 204, 160};
  std::array<int, 2> stride{102, 102};
  int s = 20;
  int workers = 0;
};

inline FeaturesChunkCliConfig parse_features_chunk_config(const json& j) {
  cfgdetail::reject_unknown(j, {"structures", "cancer", "sample_id", "structure", "out_dir",
                                "chunk_size", "stride", "s", "workers"},
                            "features-chunk");
  FeaturesChunkCliConfig c;
  c.structures = cfgdetail::require<std::string>(j, "structures", "features-chunk");
  c.cancer = cfgdetail::require<std::string>(j, "cancer", "features-chunk");
  c.out_dir = cfgdetail::require<std::string>(j, "out_dir", "features-chunk");
  c.sample_id = cfgdetail::get_or<std::string>(j, "sample_id", "sample", "features-chunk");
  c.structure = cfgdetail::get_or<std::string>(j, "structure", "nerve", "features-chunk");
  if (j.contains("chunk_size")) c.chunk_size = cfgdetail::get_dims(j, "chunk_size", "features-chunk");
  if (j.contains("stride")) {
    const auto v = cfgdetail::require<std::vector<int>>(j, "stride", "features-chunk");
    if (v.size() != 2) throw ConfigError("features-chunk: stride must have 2 entries (x, y)");
    c.stride = {v[0], v[1]};
  }
  c.s = cfgdetail::get_or<int>(j, "s", 20, "features-chunk");
  c.workers = cfgdetail::get_or<int>(j, "workers", 0, "features-chunk");
  return c;
}

struct ClassifyCliConfig {
  std::string features_csv, labels_csv, output;
  LoocvConfig loocv;
};

inline ClassifyCliConfig parse_classify_config(const json& j) {
  cfgdetail::reject_unknown(j, {"features_csv", "labels_csv", "output", "var_eps", "corr_max",
                                "c_grid", "inner_folds", "bootstrap_resamples", "seed",
                                "workers"},
                            "classify");
  ClassifyCliConfig c;
  c.features_csv = cfgdetail::require<std::string>(j, "features_csv", "classify");
  c.labels_csv = cfgdetail::require<std::string>(j, "labels_csv", "classify");
  c.output = cfgdetail::require<std::string>(j, "output", "classify");
  c.loocv.filter.var_eps = cfgdetail::get_or<double>(j, "var_eps", 1e-8, "classify");
  c.loocv.filter.corr_max = cfgdetail::get_or<double>(j, "corr_max", 0.95, "classify");
  if (j.contains("c_grid"))
    c.loocv.c_grid = cfgdetail::require<std::vector<double>>(j, "c_grid", "classify");
  c.loocv.inner_folds = cfgdetail::get_or<int>(j, "inner_folds", 10, "classify");
  c.loocv.bootstrap_resamples =
      cfgdetail::get_or<int>(j, "bootstrap_resamples", 2000, "classify");
  c.loocv.seed = cfgdetail::get_or<std::uint64_t>(j, "seed", c.loocv.seed, "classify");
  c.loocv.workers = cfgdetail::get_or<int>(j, "workers", 0, "classify");
  return c;
}

inline PhantomSpec parse_phantom_spec(const json& j, const std::string& ctx) {
  cfgdetail::reject_unknown(j, {"dims", "spacing_um", "tubes", "blobs", "cancer_mode",
                                "uniform_density", "sleeve_gap_um", "sleeve_thickness_um",
                                "slab_offset_um", "rings", "seed"},
                            ctx);
  PhantomSpec s;
  s.dims = cfgdetail::get_dims(j, "dims", ctx);
  const auto sp = cfgdetail::require<std::vector<double>>(j, "spacing_um", ctx);
  if (sp.size() != 3) throw ConfigError(ctx + ": spacing_um must have 3 entries");
  s.spacing = {sp[0], sp[1], sp[2]};
  if (j.contains("tubes")) {
    for (const auto& t : j.at("tubes")) {
      cfgdetail::reject_unknown(t, {"points_um", "radius_um"}, ctx + ".tubes[]");
      Tube tube;
      for (const auto& p : t.at("points_um")) {
        const auto v = p.get<std::vector<double>>();
        if (v.size() != 3) throw ConfigError(ctx + ": tube point must have 3 coords");
        tube.points_um.push_back({v[0], v[1], v[2]});
      }
      tube.radius_um = cfgdetail::require<double>(t, "radius_um", ctx + ".tubes[]");
      s.tubes.push_back(tube);
    }
  }
  if (j.contains("blobs")) {
    for (const auto& b : j.at("blobs")) {
      cfgdetail::reject_unknown(b, {"center_um", "radii_um", "rotation_xy_deg"}, ctx + ".blobs[]");
      Blob blob;
      const auto cv = cfgdetail::require<std::vector<double>>(b, "center_um", ctx + ".blobs[]");
      const auto rv = cfgdetail::require<std::vector<double>>(b, "radii_um", ctx + ".blobs[]");
      if (cv.size() != 3 || rv.size() != 3)
        throw ConfigError(ctx + ": blob center/radii must have 3 entries");
      blob.center_um = {cv[0], cv[1], cv[2]};
      blob.radii_um = {rv[0], rv[1], rv[2]};
      blob.rotation_xy_deg = cfgdetail::get_or<double>(b, "rotation_xy_deg", 0.0, ctx + ".blobs[]");
      s.gland_blobs.push_back(blob);
    }
  }
  const std::string mode = cfgdetail::get_or<std::string>(j, "cancer_mode", "none", ctx);
  if (mode == "none") s.cancer_mode = CancerMode::none;
  else if (mode == "uniform") s.cancer_mode = CancerMode::uniform;
  else if (mode == "sleeve") s.cancer_mode = CancerMode::sleeve;
  else if (mode == "slab") s.cancer_mode = CancerMode::slab;
  else throw ConfigError(ctx + ": cancer_mode must be none|uniform|sleeve|slab");
  s.uniform_density = cfgdetail::get_or<double>(j, "uniform_density", 0.02, ctx);
  s.sleeve_gap_um = cfgdetail::get_or<double>(j, "sleeve_gap_um", 0.0, ctx);
  s.sleeve_thickness_um = cfgdetail::get_or<double>(j, "sleeve_thickness_um", 30.0, ctx);
  s.slab_offset_um = cfgdetail::get_or<double>(j, "slab_offset_um", 200.0, ctx);
  if (j.contains("rings")) {
    for (const auto& r : j.at("rings")) {
      cfgdetail::reject_unknown(r, {"gap_um", "thickness_um", "z0_frac", "z1_frac"},
                                ctx + ".rings[]");
      CancerRing ring;
      ring.gap_um = cfgdetail::require<double>(r, "gap_um", ctx + ".rings[]");
      ring.thickness_um = cfgdetail::require<double>(r, "thickness_um", ctx + ".rings[]");
      ring.z0_frac = cfgdetail::get_or<double>(r, "z0_frac", 0.0, ctx + ".rings[]");
      ring.z1_frac = cfgdetail::get_or<double>(r, "z1_frac", 1.0, ctx + ".rings[]");
      s.rings.push_back(ring);
    }
  }
  s.seed = cfgdetail::get_or<std::uint64_t>(j, "seed", 0, ctx);
  return s;
}

struct PhantomCliConfig {
  std::string mode = "single"; // "single" | "cohort"
  std::string out_dir;
  PhantomSpec spec;            // single mode
  CohortConfig cohort;         // cohort mode
};

inline PhantomCliConfig parse_phantom_config(const json& j) {
  cfgdetail::reject_unknown(j, {"mode", "out_dir", "spec", "n", "effect", "dims", "spacing_um",
                                "seed"},
                            "phantom");
  PhantomCliConfig c;
  c.mode = cfgdetail::get_or<std::string>(j, "mode", "single", "phantom");
  c.out_dir = cfgdetail::require<std::string>(j, "out_dir", "phantom");
  if (c.mode == "single") {
    if (!j.contains("spec")) throw ConfigError("phantom: single mode requires \"spec\"");
    c.spec = parse_phantom_spec(j.at("spec"), "phantom.spec");
  } else if (c.mode == "cohort") {
    c.cohort.n = cfgdetail::get_or<int>(j, "n", 40, "phantom");
    c.cohort.effect = cfgdetail::get_or<double>(j, "effect", 1.0, "phantom");
    if (j.contains("dims")) c.cohort.dims = cfgdetail::get_dims(j, "dims", "phantom");
    if (j.contains("spacing_um")) {
      const auto sp = cfgdetail::require<std::vector<double>>(j, "spacing_um", "phantom");
      if (sp.size() != 3) throw ConfigError("phantom: spacing_um must have 3 entries");
      c.cohort.spacing = {sp[0], sp[1], sp[2]};
    }
    c.cohort.seed = cfgdetail::get_or<std::uint64_t>(j, "seed", 7, "phantom");
  } else {
    throw ConfigError("phantom: mode must be \"single\" or \"cohort\"");
  }
  return c;
}

struct PipelineCliConfig {
  struct Sample {
    std::string id;
    std::string structures_mask;   // ready mask, or
    std::string structures_blocks; // stitch manifest JSON
    std::string cancer;
    std::string glands;
  };
  std::vector<Sample> samples;
  std::string labels_csv;
  std::string structure = "nerve";
  std::string out_dir;
  // stage parameter blocks (paths inside them are not allowed)
  json postprocess = json::object();
  json level = json::object();
  json chunk = json::object();
  json classify = json::object();
  int workers = 0;
};

inline PipelineCliConfig parse_pipeline_config(const json& j) {
  cfgdetail::reject_unknown(j, {"samples", "labels_csv", "structure", "out_dir", "postprocess",
                                "level", "chunk", "classify", "workers"},
                            "pipeline");
  PipelineCliConfig c;
  c.labels_csv = cfgdetail::require<std::string>(j, "labels_csv", "pipeline");
  c.out_dir = cfgdetail::require<std::string>(j, "out_dir", "pipeline");
  c.structure = cfgdetail::get_or<std::string>(j, "structure", "nerve", "pipeline");
  c.workers = cfgdetail::get_or<int>(j, "workers", 0, "pipeline");
  if (!j.contains("samples") || !j.at("samples").is_array() || j.at("samples").empty())
    throw ConfigError("pipeline: \"samples\" must be a non-empty array");
  for (const auto& s : j.at("samples")) {
    cfgdetail::reject_unknown(s, {"id", "structures_mask", "structures_blocks", "cancer",
                                  "glands"},
                              "pipeline.samples[]");
    PipelineCliConfig::Sample e;
    e.id = cfgdetail::require<std::string>(s, "id", "pipeline.samples[]");
    e.structures_mask = cfgdetail::get_or<std::string>(s, "structures_mask", "", "pipeline.samples[]");
    e.structures_blocks =
        cfgdetail::get_or<std::string>(s, "structures_blocks", "", "pipeline.samples[]");
    e.cancer = cfgdetail::require<std::string>(s, "cancer", "pipeline.samples[]");
    e.glands = cfgdetail::get_or<std::string>(s, "glands", "", "pipeline.samples[]");
    if (e.structures_mask.empty() == e.structures_blocks.empty())
      throw ConfigError("pipeline.samples[]: exactly one of structures_mask/structures_blocks");
    c.samples.push_back(e);
  }
  // stage blocks are validated when expanded into full stage configs
  c.postprocess = j.value("postprocess", json::object());
  c.level = j.value("level", json::object());
  c.chunk = j.value("chunk", json::object());
  c.classify = j.value("classify", json::object());
  return c;
}

// FNV-1a 64 over the canonical (sorted-key) JSON dump.
inline std::uint64_t config_hash(const json& j) {
  const std::string s = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

} // namespace perivox
