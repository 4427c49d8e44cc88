// perivox CLI: batch orchestration of the mask-to-features-to-classifier
// pipeline. Numeric parameters live in a JSON config; flags carry only
// paths and subcommand selection. Exit codes: 0 ok, 2 config error,
// 3 data/I-O error, 4 insufficient sample.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "perivox/pipeline.hpp"
#include "perivox/version.hpp"

namespace {

int dispatch(const std::string& command, const std::string& config_path,
             const std::string& pred_path, const std::string& truth_path,
             const std::string& levels_override) {
  using namespace perivox;
  if (command == "dice") {
    const BinaryVolume pred = load_binary(pred_path);
    const BinaryVolume truth = load_binary(truth_path);
    json out{{"dice", dice(pred, truth)}};
    std::cout << out.dump(2) << "\n";
    return 0;
  }

  json cfg = cfgdetail::load_json_file(config_path);
  if (command == "groundtruth") {
    run_groundtruth(parse_groundtruth_config(cfg), cfg);
  } else if (command == "stitch") {
    run_stitch(parse_stitch_config(cfg), cfg);
  } else if (command == "postprocess") {
    run_postprocess(parse_postprocess_config(cfg), cfg);
  } else if (command == "features-level") {
    if (!levels_override.empty()) cfg["levels"] = levels_override;
    const auto out = run_features_level(parse_features_level_config(cfg), cfg);
    if (out.insufficient)
      throw InsufficientSample("features-level: no usable structure instances");
  } else if (command == "features-chunk") {
    const auto out = run_features_chunk(parse_features_chunk_config(cfg), cfg);
    if (out.insufficient)
      throw InsufficientSample("features-chunk: no chunk contains structures");
  } else if (command == "classify") {
    const auto res = run_classify(parse_classify_config(cfg), cfg);
    std::cerr << "classify: AUC " << res.auc_value << " [" << res.ci_low << ", " << res.ci_high
              << "], n=" << res.n << "\n";
  } else if (command == "phantom") {
    run_phantom(parse_phantom_config(cfg), cfg);
  } else if (command == "pipeline") {
    const auto res = run_pipeline(parse_pipeline_config(cfg), cfg);
    std::cerr << "pipeline: AUC " << res.auc_value << " [" << res.ci_low << ", " << res.ci_high
              << "], n=" << res.n << "\n";
  } else {
    throw ConfigError("unknown subcommand " + command);
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"3D histomorphometric invasion-feature toolkit"};
  app.set_version_flag("--version", perivox::kVersion);
  app.require_subcommand(1);

  std::string config_path, pred_path, truth_path, levels_override;

  for (const char* name : {"groundtruth", "stitch", "postprocess", "features-level",
                           "features-chunk", "classify", "phantom", "pipeline"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    if (std::string(name) == "features-level")
      sub->add_option("--levels", levels_override, "level selection: all | three");
  }
  auto* dice_cmd = app.add_subcommand("dice", "Dice coefficient of two masks");
  dice_cmd->add_option("--pred", pred_path, "predicted mask")->required();
  dice_cmd->add_option("--truth", truth_path, "ground-truth mask")->required();

  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return dispatch(command, config_path, pred_path, truth_path, levels_override);
  } catch (const perivox::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const perivox::InsufficientSample& e) {
    std::cerr << "insufficient sample: " << e.what() << "\n";
    return 4;
  } catch (const perivox::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 3;
  } catch (const perivox::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
