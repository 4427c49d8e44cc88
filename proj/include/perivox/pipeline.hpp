#pragma once

// Subcommand bodies shared by the CLI and the integration tests. Each run
// writes a manifest (config hash, version, seeds) next to its outputs so
// results can be traced back to exact parameters. Outputs depend only on
// config + inputs, never on worker count or wall clock.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "perivox/blocks.hpp"
#include "perivox/config.hpp"
#include "perivox/csv.hpp"
#include "perivox/errors.hpp"
#include "perivox/evaluation.hpp"
#include "perivox/features_chunk.hpp"
#include "perivox/features_level.hpp"
#include "perivox/filtering.hpp"
#include "perivox/io.hpp"
#include "perivox/morphology.hpp"
#include "perivox/phantom.hpp"
#include "perivox/version.hpp"

namespace perivox {

namespace rundetail {

inline int resolve_workers(int requested) {
  return requested <= 0 ? default_workers() : requested;
}

inline void write_manifest(const std::string& dir_or_file, const json& cfg,
                           std::uint64_t seed = 0) {
  namespace fs = std::filesystem;
  const fs::path p(dir_or_file);
  const fs::path out =
      fs::is_directory(p) ? p / "manifest.json" : fs::path(p.string() + ".manifest.json");
  json m;
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(config_hash(cfg)));
  m["config_hash"] = hash;
  m["version"] = kVersion;
  m["seed"] = seed;
  std::ofstream f(out);
  if (!f) throw IoError("cannot write manifest " + out.string());
  f << m.dump(2) << "\n";
}

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir);
}

} // namespace rundetail

inline void run_groundtruth(const GroundtruthConfig& c, const json& raw_cfg) {
  const int workers = rundetail::resolve_workers(c.workers);
  BinaryVolume mask;
  if (c.mode == "nerve") {
    const IntensityVolume channel = load_intensity(c.input);
    mask = nerve_ground_truth(channel, c.params, workers);
  } else {
    const BinaryVolume annotation = load_binary(c.input);
    mask = refine_vessel_annotation(annotation, c.close_radius, workers);
  }
  save_volume(mask, c.output);
  rundetail::write_manifest(c.output, raw_cfg);
}

inline void run_stitch(const StitchConfig& c, const json& raw_cfg) {
  std::vector<std::pair<BlockSpec, BinaryVolume>> blocks;
  blocks.reserve(c.blocks.size());
  for (const auto& e : c.blocks) {
    BinaryVolume mask = load_binary(e.path);
    BlockSpec spec;
    spec.origin = e.origin;
    spec.size = mask.dims;
    blocks.emplace_back(spec, std::move(mask));
  }
  const BinaryVolume fused = fuse_blocks(blocks, c.dims, c.spacing);
  save_volume(fused, c.output);
  rundetail::write_manifest(c.output, raw_cfg);
}

inline BinaryVolume run_postprocess_in_memory(BinaryVolume mask, const PostprocessCliConfig& c,
                                              FilterAudit* diameter_audit = nullptr,
                                              FilterAudit* gland_audit = nullptr) {
  const int workers = rundetail::resolve_workers(c.workers);
  if (c.z_range) mask = crop_z(mask, (*c.z_range)[0], (*c.z_range)[1]);
  else if (!c.auto_z_from.empty()) {
    const IntensityVolume intensity = load_intensity(c.auto_z_from);
    require_same_grid(intensity.dims, mask.dims, "postprocess auto z-crop");
    const auto [z0, z1] = auto_z_range(intensity, c.auto_z_fraction);
    mask = crop_z(mask, z0, z1);
  }
  if (c.downsample_factor > 1) mask = downsample_mask(mask, c.downsample_factor);
  mask = postprocess_mask(mask, c.morphology, workers);
  if (c.structure == "vessel" && !c.gland_mask.empty()) {
    BinaryVolume glands = load_binary(c.gland_mask);
    mask = filter_vessels_by_gland_overlap(mask, glands, c.max_gland_overlap, gland_audit);
  }
  mask = filter_by_diameter(mask, c.effective_min_diameter(), diameter_audit);
  return mask;
}

inline void run_postprocess(const PostprocessCliConfig& c, const json& raw_cfg) {
  BinaryVolume mask = load_binary(c.input);
  FilterAudit diameter_audit, gland_audit;
  mask = run_postprocess_in_memory(std::move(mask), c, &diameter_audit, &gland_audit);
  save_volume(mask, c.output);
  if (!c.audit_json.empty()) {
    json audits = json::array();
    if (!gland_audit.decisions.empty()) audits.push_back(gland_audit.to_json());
    audits.push_back(diameter_audit.to_json());
    std::ofstream f(c.audit_json);
    if (!f) throw IoError("cannot write " + c.audit_json);
    f << audits.dump(2) << "\n";
  }
  rundetail::write_manifest(c.output, raw_cfg);
}

struct FeaturesRunOutput {
  FeatureVector features;
  bool insufficient = false;
};

inline FeaturesRunOutput run_features_level(const FeaturesLevelCliConfig& c, const json& raw_cfg,
                                            const BinaryVolume* structures_in = nullptr,
                                            const BinaryVolume* cancer_in = nullptr) {
  const BinaryVolume structures = structures_in ? *structures_in : load_binary(c.structures);
  const BinaryVolume cancer = cancer_in ? *cancer_in : load_binary(c.cancer);

  LevelConfig lc;
  lc.t = c.t;
  lc.structure = c.structure;
  lc.workers = rundetail::resolve_workers(c.workers);
  if (c.levels == "three") {
    const auto three = select_three_levels(structures.dims[2], structures.spacing[2],
                                           c.three_gap_um, c.three_center);
    lc.levels.assign(three.begin(), three.end());
  } else if (c.levels == "explicit") {
    lc.levels = c.explicit_levels;
  }

  const LevelResult res = analyze_levels(structures, cancer, lc);

  rundetail::ensure_dir(c.out_dir);
  namespace fs = std::filesystem;
  write_level_records_csv((fs::path(c.out_dir) / (c.sample_id + "_level_records.csv")).string(),
                          c.sample_id, c.structure, res.records);
  write_features_csv((fs::path(c.out_dir) / (c.sample_id + "_level_features.csv")).string(),
                     {{c.sample_id, res.features}});
  std::cerr << "features-level: " << res.records.size() << " records, "
            << res.undefined_invasion << " undefined invasion, " << res.undefined_gradient
            << " undefined gradient, " << res.skipped_degenerate << " degenerate instances\n";
  rundetail::write_manifest(c.out_dir, raw_cfg);
  return {res.features, res.insufficient};
}

inline FeaturesRunOutput run_features_chunk(const FeaturesChunkCliConfig& c, const json& raw_cfg,
                                            const BinaryVolume* structures_in = nullptr,
                                            const BinaryVolume* cancer_in = nullptr) {
  const BinaryVolume structures = structures_in ? *structures_in : load_binary(c.structures);
  const BinaryVolume cancer = cancer_in ? *cancer_in : load_binary(c.cancer);

  ChunkConfig cc;
  cc.size = c.chunk_size;
  cc.stride = c.stride;
  cc.s = c.s;
  cc.structure = c.structure;
  cc.workers = rundetail::resolve_workers(c.workers);

  const ChunkResult res = analyze_chunks(structures, cancer, cc);

  rundetail::ensure_dir(c.out_dir);
  namespace fs = std::filesystem;
  write_chunk_records_csv((fs::path(c.out_dir) / (c.sample_id + "_chunk_records.csv")).string(),
                          c.sample_id, c.structure, res.records);
  write_features_csv((fs::path(c.out_dir) / (c.sample_id + "_chunk_features.csv")).string(),
                     {{c.sample_id, res.features}});
  std::cerr << "features-chunk: " << res.records.size() << " records over "
            << (res.records.size() + static_cast<std::size_t>(res.skipped_empty)) << " chunks, "
            << res.undefined_invasion << " undefined invasion\n";
  rundetail::write_manifest(c.out_dir, raw_cfg);
  return {res.features, res.insufficient};
}

inline json loocv_report_json(const LoocvResult& res, int n_dropped) {
  json per_sample = json::object();
  for (const auto& [id, score] : res.per_sample_scores) per_sample[id] = score;
  json c_hist = json::object();
  for (const auto& [c, count] : res.selected_c_histogram)
    c_hist[detail::fmt_double(c)] = count;
  json feat_freq = json::object();
  for (const auto& [name, count] : res.nonzero_feature_frequency) feat_freq[name] = count;
  return json{{"auc", res.auc_value},
              {"ci_low", res.ci_low},
              {"ci_high", res.ci_high},
              {"n", res.n},
              {"n_dropped", n_dropped},
              {"seed", res.seed},
              {"per_sample_scores", per_sample},
              {"selected_C_histogram", c_hist},
              {"nonzero_feature_frequency", feat_freq}};
}

inline LoocvResult run_classify(const ClassifyCliConfig& c, const json& raw_cfg) {
  const FeatureTable table = read_features_csv(c.features_csv);
  const auto labels = read_labels_csv(c.labels_csv);
  int n_dropped = 0;
  const auto dataset = assemble_dataset(table, labels, &n_dropped);
  if (n_dropped > 0)
    std::cerr << "classify: dropped " << n_dropped << " samples with missing features\n";
  if (dataset.size() < 4) throw InsufficientSample("classify: fewer than 4 usable samples");

  LoocvConfig lc = c.loocv;
  lc.workers = rundetail::resolve_workers(lc.workers);
  const LoocvResult res = loocv_auc(dataset, lc);

  std::ofstream f(c.output);
  if (!f) throw IoError("cannot write " + c.output);
  f << loocv_report_json(res, n_dropped).dump(2) << "\n";
  rundetail::write_manifest(c.output, raw_cfg, lc.seed);
  return res;
}

inline void run_phantom(const PhantomCliConfig& c, const json& raw_cfg) {
  namespace fs = std::filesystem;
  rundetail::ensure_dir(c.out_dir);
  if (c.mode == "single") {
    const PhantomVolumes vols = generate(c.spec);
    save_volume(vols.structures, (fs::path(c.out_dir) / "structures.raw").string());
    save_volume(vols.glands, (fs::path(c.out_dir) / "glands.raw").string());
    save_volume(vols.cancer, (fs::path(c.out_dir) / "cancer.raw").string());
    json truth;
    truth["tube_diameters_um"] = vols.truth.tube_diameters_um;
    truth["tube_axis_gap_um"] = vols.truth.tube_axis_gap_um;
    truth["cancer_fraction"] = vols.truth.cancer_fraction;
    std::ofstream f(fs::path(c.out_dir) / "truth.json");
    f << truth.dump(2) << "\n";
  } else {
    const auto cohort = generate_cohort(c.cohort);
    std::vector<std::pair<std::string, int>> labels;
    for (const auto& s : cohort) {
      const fs::path dir = fs::path(c.out_dir) / s.id;
      rundetail::ensure_dir(dir.string());
      save_volume(s.volumes.structures, (dir / "structures.raw").string());
      save_volume(s.volumes.cancer, (dir / "cancer.raw").string());
      labels.emplace_back(s.id, s.label);
    }
    write_labels_csv((fs::path(c.out_dir) / "labels.csv").string(), labels);
  }
  rundetail::write_manifest(c.out_dir, raw_cfg, c.mode == "single" ? c.spec.seed : c.cohort.seed);
}

// stitch (optional) -> postprocess -> both feature analyses -> classify
inline LoocvResult run_pipeline(const PipelineCliConfig& c, const json& raw_cfg) {
  namespace fs = std::filesystem;
  rundetail::ensure_dir(c.out_dir);
  const int workers = rundetail::resolve_workers(c.workers);

  // expand stage parameter blocks with shared keys filled in; a sample's
  // structures_mask may already be postprocessed ("enabled": false resumes
  // the pipeline from that artifact)
  json pp_json = c.postprocess;
  const bool postprocess_enabled = pp_json.value("enabled", true);
  pp_json.erase("enabled");
  pp_json["input"] = "-";
  pp_json["output"] = "-";
  pp_json["structure"] = c.structure;
  if (!pp_json.contains("workers")) pp_json["workers"] = workers;
  PostprocessCliConfig pp = parse_postprocess_config(pp_json);

  json lv_json = c.level;
  lv_json["structures"] = "-";
  lv_json["cancer"] = "-";
  lv_json["out_dir"] = "-";
  lv_json["structure"] = c.structure;
  if (!lv_json.contains("workers")) lv_json["workers"] = workers;
  FeaturesLevelCliConfig lv = parse_features_level_config(lv_json);

  json ch_json = c.chunk;
  ch_json["structures"] = "-";
  ch_json["cancer"] = "-";
  ch_json["out_dir"] = "-";
  ch_json["structure"] = c.structure;
  if (!ch_json.contains("workers")) ch_json["workers"] = workers;
  FeaturesChunkCliConfig ch = parse_features_chunk_config(ch_json);

  std::vector<std::pair<std::string, FeatureVector>> feature_rows;
  int insufficient_count = 0;
  for (const auto& sample : c.samples) {
    BinaryVolume structures;
    if (!sample.structures_mask.empty()) {
      structures = load_binary(sample.structures_mask);
    } else {
      const json sj = cfgdetail::load_json_file(sample.structures_blocks);
      const StitchConfig sc = [&] {
        json s2 = sj;
        s2["output"] = "-";
        return parse_stitch_config(s2);
      }();
      std::vector<std::pair<BlockSpec, BinaryVolume>> blocks;
      for (const auto& e : sc.blocks) {
        BinaryVolume m = load_binary(e.path);
        BlockSpec spec;
        spec.origin = e.origin;
        spec.size = m.dims;
        blocks.emplace_back(spec, std::move(m));
      }
      structures = fuse_blocks(blocks, sc.dims, sc.spacing);
    }

    if (postprocess_enabled) {
      PostprocessCliConfig pp_s = pp;
      pp_s.gland_mask = sample.glands;
      structures = run_postprocess_in_memory(std::move(structures), pp_s);
    }

    BinaryVolume cancer = load_binary(sample.cancer);
    if (cancer.dims != structures.dims && postprocess_enabled && pp.downsample_factor > 1) {
      // cancer masks may arrive at full resolution; bring to the mask grid
      cancer = downsample_mask(cancer, pp.downsample_factor);
    }
    require_same_grid(cancer.dims, structures.dims, "pipeline cancer vs structures");

    const fs::path sample_dir = fs::path(c.out_dir) / sample.id;
    rundetail::ensure_dir(sample_dir.string());

    FeaturesLevelCliConfig lv_s = lv;
    lv_s.sample_id = sample.id;
    lv_s.out_dir = sample_dir.string();
    const auto level_out = run_features_level(lv_s, lv_json, &structures, &cancer);

    FeaturesChunkCliConfig ch_s = ch;
    ch_s.sample_id = sample.id;
    ch_s.out_dir = sample_dir.string();
    const auto chunk_out = run_features_chunk(ch_s, ch_json, &structures, &cancer);

    if (level_out.insufficient && chunk_out.insufficient) {
      ++insufficient_count;
      std::cerr << "pipeline: sample " << sample.id << " has no usable structures, dropped\n";
      continue;
    }
    FeatureVector combined = level_out.features;
    combined.values.insert(chunk_out.features.values.begin(), chunk_out.features.values.end());
    feature_rows.emplace_back(sample.id, combined);
  }
  if (feature_rows.empty())
    throw InsufficientSample("pipeline: no sample produced usable features");

  const std::string features_csv = (fs::path(c.out_dir) / "features.csv").string();
  write_features_csv(features_csv, feature_rows);

  json cls_json = c.classify;
  cls_json["features_csv"] = features_csv;
  cls_json["labels_csv"] = c.labels_csv;
  cls_json["output"] = (fs::path(c.out_dir) / "classification.json").string();
  if (!cls_json.contains("workers")) cls_json["workers"] = workers;
  const ClassifyCliConfig cls = parse_classify_config(cls_json);
  const LoocvResult res = run_classify(cls, cls_json);

  rundetail::write_manifest(c.out_dir, raw_cfg, cls.loocv.seed);
  return res;
}

} // namespace perivox
