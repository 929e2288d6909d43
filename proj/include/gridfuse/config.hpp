#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>

#include "gridfuse/fusion.hpp"
#include "gridfuse/grid.hpp"
#include "gridfuse/metrics.hpp"
#include "gridfuse/time.hpp"
#include "gridfuse/windowing.hpp"

namespace gridfuse {

/// One declarative file capturing a reproducible run. Relative paths are
/// resolved against the config file's directory.
struct PipelineConfig {
  GridSpec grid;
  DatasetVersion version;

  std::string catalog_path;
  std::map<std::string, std::string> observation_paths;        // system -> CSV
  std::map<std::string, int> native_resolution_minutes;        // system -> cadence

  std::string train_background_path;      // reanalysis pack (dataset building)
  std::string inference_background_path;  // NWP pack (fuse-inference)

  WindowConfig window;
  std::array<double, 3> split_fractions = {0.6, 0.2, 0.2};
  EvaluationMask mask;
  std::array<double, kLevelCount> weighted_mae_weights = {1.0, 2.0, 5.0, 10.0};
  std::string output_dir = "out";

  std::optional<UtcTime> range_start;  // inclusive clip of the background axis
  std::optional<UtcTime> range_end;

  // sanity-check inputs
  std::string sanity_reference_path;
  std::string sanity_comparison_path;
  std::string sanity_station_system;
  std::string sanity_station_id;

  /// Cadence for `system`, falling back to the built-in defaults
  /// (Sirenes 15, AlertaRio 15, INMET 60). Throws ConfigError for an
  /// unknown system with no declared cadence.
  int resolution_minutes_for(const std::string& system) const;
};

/// Parses and validates the JSON config file; throws ConfigError on missing
/// or malformed fields.
PipelineConfig load_pipeline_config(const std::string& path);

}  // namespace gridfuse
