#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gridfuse/errors.hpp"
#include "gridfuse/pipeline.hpp"

namespace {

constexpr int kExitConfigError = 2;
constexpr int kExitDataError = 3;
constexpr int kExitContractViolation = 4;

gridfuse::UtcTime parse_time_flag(const std::string& text, const std::string& flag) {
  const auto parsed = gridfuse::parse_iso8601(text);
  if (!parsed) {
    throw gridfuse::ConfigError(flag + ": unparseable timestamp '" + text + "'");
  }
  return parsed->when;
}

std::vector<int> parse_leads_flag(const std::string& text) {
  std::vector<int> leads;
  std::size_t start = 0;
  while (start <= text.size() && !text.empty()) {
    const auto comma = text.find(',', start);
    const std::string token =
        comma == std::string::npos ? text.substr(start) : text.substr(start, comma - start);
    try {
      leads.push_back(std::stoi(token));
    } catch (const std::exception&) {
      throw gridfuse::ConfigError("--leads: '" + token + "' is not a lead time");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return leads;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gridfuse: gauge/grid fusion datasets and forecast verification"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string version_override;
  std::string out_override;
  std::string leads_text;
  bool no_mask = false;
  app.add_option("--config", config_path, "pipeline configuration file")->required();
  app.add_option("--version", version_override,
                 "dataset version override (ERA5, ERA5+S, ..., ERA5+SIA, GFS+A)");
  app.add_option("--out", out_override, "output directory override");
  app.add_option("--leads", leads_text, "comma-separated lead times, e.g. 1,2,3");
  app.add_flag("--no-mask", no_mask, "evaluate over the whole grid, not the configured mask");

  auto* build = app.add_subcommand("build-dataset", "fuse, window and serialize a dataset");
  std::string heatmap_text;
  build->add_option("--export-heatmap", heatmap_text,
                    "also export the fused grid at this hour as CSV");

  auto* evaluate = app.add_subcommand("evaluate", "verify predictions against observations");
  std::string predictions_path, observations_path;
  evaluate->add_option("--predictions", predictions_path, "prediction tensor (.stf)")->required();
  evaluate->add_option("--observations", observations_path, "observation tensor (.stf)")
      ->required();

  auto* inference = app.add_subcommand("fuse-inference",
                                       "build the model input window ending at --t0");
  std::string t0_text;
  inference->add_option("--t0", t0_text, "last input hour (ISO 8601, UTC)")->required();

  app.add_subcommand("sanity-check", "compare two grid sources and a station series");

  auto* baseline = app.add_subcommand("baseline", "write baseline predictions for a dataset");
  std::string baseline_kind = "persistence";
  std::string features_path, targets_path;
  baseline->add_option("--kind", baseline_kind, "persistence or climatology");
  baseline->add_option("--features", features_path, "X tensor (.stf)")->required();
  baseline->add_option("--targets", targets_path, "Y tensor (.stf)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::fprintf(stderr, "error[E_CONFIG]: %s\n", e.what());
    return kExitConfigError;
  }

  try {
    gridfuse::PipelineConfig config = gridfuse::load_pipeline_config(config_path);
    if (!version_override.empty()) {
      config.version = gridfuse::DatasetVersion::from_name(version_override);
      for (const auto& system : config.version.enabled_systems) {
        if (!config.observation_paths.count(system)) {
          throw gridfuse::ConfigError("--version enables system '" + system +
                                      "' but the config declares no observation file for it");
        }
      }
    }
    if (!out_override.empty()) config.output_dir = out_override;

    if (build->parsed()) {
      std::optional<gridfuse::UtcTime> heatmap_at;
      if (!heatmap_text.empty()) heatmap_at = parse_time_flag(heatmap_text, "--export-heatmap");
      const auto result = gridfuse::run_build_dataset(config, heatmap_at);
      std::printf("dataset %s: %llu examples in %zu segment(s), %.1f%% station-fused\n",
                  config.version.name().c_str(),
                  static_cast<unsigned long long>(result.n_examples), result.n_segments,
                  100.0 * result.station_fused_fraction);
      std::printf("wrote %s\nwrote %s\nwrote %s\n", result.x_path.c_str(), result.y_path.c_str(),
                  result.manifest_path.c_str());
    } else if (evaluate->parsed()) {
      const auto result = gridfuse::run_evaluate(config, predictions_path, observations_path,
                                                 parse_leads_flag(leads_text), !no_mask);
      std::printf("wrote %s\nwrote %s\n", result.json_path.c_str(), result.csv_path.c_str());
    } else if (inference->parsed()) {
      const auto result =
          gridfuse::run_fuse_inference(config, parse_time_flag(t0_text, "--t0"));
      std::printf("inference window %s: %.1f%% station-fused\nwrote %s\nwrote %s\n",
                  config.version.name().c_str(), 100.0 * result.station_fused_fraction,
                  result.x_path.c_str(), result.manifest_path.c_str());
    } else if (baseline->parsed()) {
      const auto result = gridfuse::run_baseline(config, baseline_kind, features_path,
                                                 targets_path);
      std::printf("wrote %s\n", result.predictions_path.c_str());
    } else {  // sanity-check
      const auto result = gridfuse::run_sanity_check(config);
      std::printf("wrote %s\n", result.spearman_csv_path.c_str());
      if (!result.station_csv_path.empty()) {
        std::printf("wrote %s\n", result.station_csv_path.c_str());
      }
    }
  } catch (const gridfuse::ConfigError& e) {
    std::fprintf(stderr, "error[E_CONFIG]: %s\n", e.what());
    return kExitConfigError;
  } catch (const gridfuse::FormatError& e) {
    std::fprintf(stderr, "error[E_DATA]: %s\n", e.what());
    return kExitDataError;
  } catch (const gridfuse::ContractViolation& e) {
    std::fprintf(stderr, "error[E_CONTRACT]: %s\n", e.what());
    return kExitContractViolation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error[E_CONTRACT]: unexpected failure: %s\n", e.what());
    return kExitContractViolation;
  }
  return 0;
}
