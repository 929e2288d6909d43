#include "gridfuse/config.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "gridfuse/errors.hpp"
#include "gridfuse/station.hpp"

namespace gridfuse {

namespace {

UtcTime parse_config_time(const nlohmann::json& value, const std::string& key) {
  const auto parsed = parse_iso8601(value.get<std::string>());
  if (!parsed) throw ConfigError("config: unparseable timestamp in '" + key + "'");
  return parsed->when;
}

std::string resolve_path(const std::filesystem::path& base, const std::string& path) {
  if (path.empty()) return path;
  std::filesystem::path p(path);
  if (p.is_absolute()) return p.string();
  return (base / p).lexically_normal().string();
}

}  // namespace

int PipelineConfig::resolution_minutes_for(const std::string& system) const {
  auto it = native_resolution_minutes.find(system);
  if (it != native_resolution_minutes.end()) return it->second;
  if (system == systems::kSirenes || system == systems::kAlertaRio) return 15;
  if (system == systems::kInmet) return 60;
  throw ConfigError("config: no native resolution declared for system '" + system + "'");
}

PipelineConfig load_pipeline_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }

  PipelineConfig config;
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  try {
    const auto& grid = doc.at("grid");
    config.grid.lat_north = grid.at("lat_north").get<double>();
    config.grid.lat_south = grid.at("lat_south").get<double>();
    config.grid.lon_east = grid.at("lon_east").get<double>();
    config.grid.lon_west = grid.at("lon_west").get<double>();
    config.grid.n_rows = grid.at("n_rows").get<int>();
    config.grid.n_cols = grid.at("n_cols").get<int>();

    config.version = DatasetVersion::from_name(doc.at("version").get<std::string>());

    if (doc.contains("stations")) {
      const auto& stations = doc.at("stations");
      config.catalog_path = resolve_path(base, stations.at("catalog").get<std::string>());
      if (stations.contains("observations")) {
        for (const auto& [system, obs_path] : stations.at("observations").items()) {
          config.observation_paths[system] = resolve_path(base, obs_path.get<std::string>());
        }
      }
      if (stations.contains("native_resolution_minutes")) {
        for (const auto& [system, minutes] : stations.at("native_resolution_minutes").items()) {
          config.native_resolution_minutes[system] = minutes.get<int>();
        }
      }
    }

    if (doc.contains("background")) {
      const auto& background = doc.at("background");
      if (background.contains("train")) {
        config.train_background_path = resolve_path(base, background.at("train").get<std::string>());
      }
      if (background.contains("inference")) {
        config.inference_background_path =
            resolve_path(base, background.at("inference").get<std::string>());
      }
    }

    if (doc.contains("window")) {
      const auto& window = doc.at("window");
      if (window.contains("lookback")) config.window.lookback = window.at("lookback").get<int>();
      if (window.contains("horizon")) config.window.horizon = window.at("horizon").get<int>();
      if (window.contains("excluded_months")) {
        config.window.excluded_months.clear();
        for (const auto& month : window.at("excluded_months")) {
          config.window.excluded_months.insert(month.get<int>());
        }
      }
    }

    if (doc.contains("split")) {
      const auto& split = doc.at("split");
      config.split_fractions = {split.at("train").get<double>(),
                                split.at("validation").get<double>(),
                                split.at("test").get<double>()};
    }

    if (doc.contains("evaluation_mask")) {
      for (const auto& cell : doc.at("evaluation_mask")) {
        if (!cell.is_array() || cell.size() != 2) {
          throw ConfigError("config: evaluation_mask entries must be [row, col] pairs");
        }
        config.mask.cells.push_back(CellIndex{cell[0].get<int>(), cell[1].get<int>()});
      }
    }

    if (doc.contains("weighted_mae_weights")) {
      const auto& weights = doc.at("weighted_mae_weights");
      if (weights.size() != kLevelCount) {
        throw ConfigError("config: weighted_mae_weights must list 4 values");
      }
      for (int i = 0; i < kLevelCount; ++i) {
        config.weighted_mae_weights[i] = weights[i].get<double>();
      }
    }

    if (doc.contains("output_dir")) {
      config.output_dir = resolve_path(base, doc.at("output_dir").get<std::string>());
    } else {
      config.output_dir = resolve_path(base, "out");
    }

    if (doc.contains("time_range")) {
      const auto& range = doc.at("time_range");
      if (range.contains("start")) {
        config.range_start = parse_config_time(range.at("start"), "time_range.start");
      }
      if (range.contains("end")) {
        config.range_end = parse_config_time(range.at("end"), "time_range.end");
      }
    }

    if (doc.contains("sanity")) {
      const auto& sanity = doc.at("sanity");
      if (sanity.contains("reference")) {
        config.sanity_reference_path = resolve_path(base, sanity.at("reference").get<std::string>());
      }
      if (sanity.contains("comparison")) {
        config.sanity_comparison_path =
            resolve_path(base, sanity.at("comparison").get<std::string>());
      }
      if (sanity.contains("station_system")) {
        config.sanity_station_system = sanity.at("station_system").get<std::string>();
      }
      if (sanity.contains("station_id")) {
        config.sanity_station_id = sanity.at("station_id").get<std::string>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }

  config.grid.validate();
  config.window.validate();
  if (config.range_start && config.range_end && *config.range_end < *config.range_start) {
    throw ConfigError("config: time_range end precedes start");
  }
  if (!config.mask.cells.empty()) {
    config.mask.validate(config.grid.n_rows, config.grid.n_cols);
  }
  for (const auto& system : config.version.enabled_systems) {
    if (!config.observation_paths.count(system)) {
      throw ConfigError("config: version " + config.version.name() +
                        " enables system '" + system + "' but no observation file is declared");
    }
  }
  return config;
}

}  // namespace gridfuse
