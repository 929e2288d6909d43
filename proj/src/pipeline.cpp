#include "gridfuse/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "gridfuse/baseline.hpp"
#include "gridfuse/errors.hpp"
#include "gridfuse/grid_pack.hpp"
#include "gridfuse/metrics.hpp"
#include "gridfuse/station.hpp"
#include "gridfuse/tensor_file.hpp"

namespace gridfuse {

namespace fs = std::filesystem;

namespace {

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw ConfigError("config: no " + what + " declared");
  if (!fs::exists(path)) throw ConfigError(what + " does not exist: " + path);
}

void ensure_output_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir + ": " + ec.message());
}

// All pipeline outputs are written once: to a temp name, then renamed.
void atomic_write_text(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw FormatError("cannot write " + tmp);
    out << content;
    if (!out) throw FormatError("short write to " + tmp);
  }
  fs::rename(tmp, path);
}

void atomic_write_example_tensors(const ExampleTensors& tensors, const std::string& x_path,
                                  const std::string& y_path, const nlohmann::json& sidecar) {
  write_example_tensors(tensors, x_path + ".tmp", y_path + ".tmp", sidecar);
  fs::rename(x_path + ".tmp", x_path);
  fs::rename(x_path + ".tmp.json", x_path + ".json");
  fs::rename(y_path + ".tmp", y_path);
  fs::rename(y_path + ".tmp.json", y_path + ".json");
}

void atomic_write_tensor(const TensorData& tensor, const std::string& path,
                         const nlohmann::json& sidecar) {
  write_tensor_file(tensor, path + ".tmp", sidecar);
  fs::rename(path + ".tmp", path);
  fs::rename(path + ".tmp.json", path + ".json");
}

nlohmann::json grid_to_json(const GridSpec& grid) {
  return {{"lat_north", grid.lat_north}, {"lat_south", grid.lat_south},
          {"lon_east", grid.lon_east},   {"lon_west", grid.lon_west},
          {"n_rows", grid.n_rows},       {"n_cols", grid.n_cols}};
}

nlohmann::json channel_names_json() {
  nlohmann::json names = nlohmann::json::array();
  for (const ChannelInfo& channel : canonical_feature_channels()) {
    if (channel.level_hpa) {
      names.push_back(channel.name + "_" + std::to_string(*channel.level_hpa) + "hPa");
    } else {
      names.push_back(channel.name);
    }
  }
  return names;
}

nlohmann::json dataset_sidecar(const PipelineConfig& config) {
  nlohmann::json sidecar;
  sidecar["version"] = config.version.name();
  sidecar["grid"] = grid_to_json(config.grid);
  sidecar["channels"] = channel_names_json();
  sidecar["lookback"] = config.window.lookback;
  sidecar["horizon"] = config.window.horizon;
  sidecar["nw_corner_sampling"] = true;  // non-precip channels, see README
  return sidecar;
}

/// Hours of the background axis clipped to the configured range.
std::vector<UtcTime> clipped_timeline(const GridSource& background,
                                      const PipelineConfig& config) {
  std::vector<UtcTime> timeline;
  for (int i = 0; i < background.nt(); ++i) {
    const UtcTime t = background.time_at(i);
    if (config.range_start && t < *config.range_start) continue;
    if (config.range_end && *config.range_end < t) continue;
    timeline.push_back(t);
  }
  return timeline;
}

double station_fused_fraction(const std::vector<FusedStep>& series) {
  std::int64_t fused = 0, total = 0;
  for (const FusedStep& step : series) {
    for (CellProvenance provenance : step.target.provenance) {
      fused += provenance == CellProvenance::kStationFused ? 1 : 0;
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(fused) / static_cast<double>(total);
}

// ISO instant compacted for filenames: 2021-03-01T18:00:00Z -> 20210301T180000Z.
std::string timestamp_slug(UtcTime t) {
  std::string slug = format_iso8601_utc(t);
  std::erase(slug, '-');
  std::erase(slug, ':');
  return slug;
}

std::string heatmap_csv(const FusedGrid& grid) {
  std::ostringstream out;
  out << "row,col,precip_mm_h,provenance\n";
  for (int row = 0; row < grid.n_rows; ++row) {
    for (int col = 0; col < grid.n_cols; ++col) {
      out << row << ',' << col << ',' << grid.at(row, col) << ','
          << (grid.provenance_at(row, col) == CellProvenance::kStationFused
                  ? "station-fused"
                  : "background-fallback")
          << '\n';
    }
  }
  return out.str();
}

}  // namespace

IngestResult ingest_observations(const PipelineConfig& config,
                                 const std::vector<std::string>& enabled_systems) {
  IngestResult result{ObservationStore(config.grid), {}};
  if (enabled_systems.empty()) return result;

  require_file(config.catalog_path, "station catalog");
  const StationCatalog catalog = parse_station_catalog(config.catalog_path);

  for (const std::string& system_name : enabled_systems) {
    auto path_it = config.observation_paths.find(system_name);
    if (path_it == config.observation_paths.end()) {
      throw ConfigError("config: no observation file for system '" + system_name + "'");
    }
    require_file(path_it->second, "observation file for " + system_name);
    if (catalog.entries_for_system(system_name).empty()) {
      throw ConfigError("catalog has no stations for enabled system '" + system_name + "'");
    }

    StationSystem system;
    system.name = system_name;
    system.native_resolution_minutes = config.resolution_minutes_for(system_name);
    system.timezone_offset_minutes = catalog.system_tz_offset_minutes(system_name);

    const ObservationParseResult parsed =
        parse_station_observations(path_it->second, system, catalog);
    for (const RowError& error : parsed.row_errors) {
      result.row_error_lines.push_back(system_name + "," + path_it->second + "," +
                                       std::to_string(error.line) + "," + error.message);
    }

    std::map<std::string, std::vector<StationObservation>> by_station;
    for (const StationObservation& obs : parsed.observations) {
      by_station[obs.station_id].push_back(obs);
    }
    result.store.register_system(system);
    for (const auto& [station_id, observations] : by_station) {
      result.store.add_hourly_series(system, aggregate_to_hourly(observations, system));
    }
  }
  return result;
}

namespace {

struct FusedDataset {
  std::vector<Segment> segments;
  std::vector<FusedStep> series;  // concatenation of per-segment series
};

FusedDataset fuse_dataset(const PipelineConfig& config, const GridSource& background,
                          const ObservationStore& store) {
  FusedDataset dataset;
  dataset.segments = segment_timeline(clipped_timeline(background, config), config.window);
  for (const Segment& segment : dataset.segments) {
    auto steps =
        build_fused_series(segment.start, segment.timesteps, config.version, background, store);
    dataset.series.insert(dataset.series.end(), std::make_move_iterator(steps.begin()),
                          std::make_move_iterator(steps.end()));
  }
  return dataset;
}

}  // namespace

BuildDatasetResult run_build_dataset(const PipelineConfig& config,
                                     std::optional<UtcTime> heatmap_at) {
  require_file(config.train_background_path, "training background pack");
  const GridSource background = load_grid_pack(config.train_background_path);
  const IngestResult ingest = ingest_observations(config, config.version.enabled_systems);

  const FusedDataset dataset = fuse_dataset(config, background, ingest.store);

  std::vector<Example> examples;
  for (const Segment& segment : dataset.segments) {
    auto windows = slide_windows(segment, dataset.series, config.window);
    examples.insert(examples.end(), std::make_move_iterator(windows.begin()),
                    std::make_move_iterator(windows.end()));
  }
  if (examples.empty()) {
    throw FormatError("dataset build produced no examples: " +
                      std::to_string(dataset.series.size()) + " usable hours across " +
                      std::to_string(dataset.segments.size()) +
                      " segment(s) is shorter than one " +
                      std::to_string(config.window.window_span()) + "-step window");
  }
  if (count_examples(dataset.segments, config.window) !=
      static_cast<std::int64_t>(examples.size())) {
    throw ContractViolation("window count mismatch between enumeration and assembly");
  }

  const SplitSizes split = chronological_split(examples, config.split_fractions);

  ensure_output_dir(config.output_dir);
  const std::string stem = config.version.name();
  BuildDatasetResult result;
  result.x_path = (fs::path(config.output_dir) / (stem + "_x.stf")).string();
  result.y_path = (fs::path(config.output_dir) / (stem + "_y.stf")).string();
  result.manifest_path = (fs::path(config.output_dir) / (stem + "_manifest.json")).string();
  result.n_examples = examples.size();
  result.n_segments = dataset.segments.size();
  result.station_fused_fraction = station_fused_fraction(dataset.series);

  const ExampleTensors tensors = pack_examples(examples, config.window.lookback,
                                               config.window.horizon, config.grid.n_rows,
                                               config.grid.n_cols);
  atomic_write_example_tensors(tensors, result.x_path, result.y_path, dataset_sidecar(config));

  nlohmann::json manifest = dataset_sidecar(config);
  manifest["x_file"] = fs::path(result.x_path).filename().string();
  manifest["y_file"] = fs::path(result.y_path).filename().string();
  manifest["n_examples"] = result.n_examples;
  manifest["provenance"] = {{"station_fused_fraction", result.station_fused_fraction}};
  nlohmann::json segments = nlohmann::json::array();
  for (const Segment& segment : dataset.segments) {
    segments.push_back({{"start", format_iso8601_utc(segment.start)},
                        {"timesteps", segment.timesteps},
                        {"examples",
                         std::max(0, segment.timesteps - config.window.window_span() + 1)}});
  }
  manifest["segments"] = std::move(segments);

  const auto slice_json = [&](std::size_t begin, std::size_t count) {
    nlohmann::json slice;
    slice["start_index"] = begin;
    slice["count"] = count;
    if (count > 0) {
      slice["first_t0"] = format_iso8601_utc(examples[begin].t0);
      slice["last_t0"] = format_iso8601_utc(examples[begin + count - 1].t0);
    }
    return slice;
  };
  manifest["splits"] = {
      {"train", slice_json(0, split.train)},
      {"validation", slice_json(split.train, split.validation)},
      {"test", slice_json(split.train + split.validation, split.test)},
  };
  manifest["split_fractions"] = config.split_fractions;
  if (!ingest.row_error_lines.empty()) {
    const std::string errors_path =
        (fs::path(config.output_dir) / (stem + "_ingest_errors.csv")).string();
    std::string content = "system,file,line,message\n";
    for (const std::string& line : ingest.row_error_lines) content += line + "\n";
    atomic_write_text(errors_path, content);
    manifest["ingest_errors"] = {{"count", ingest.row_error_lines.size()},
                                 {"file", fs::path(errors_path).filename().string()}};
  }
  atomic_write_text(result.manifest_path, manifest.dump(2) + "\n");

  if (heatmap_at) {
    const auto step = std::find_if(dataset.series.begin(), dataset.series.end(),
                                   [&](const FusedStep& s) { return s.target.timestamp == *heatmap_at; });
    if (step == dataset.series.end()) {
      throw ConfigError("heatmap export: " + format_iso8601_utc(*heatmap_at) +
                        " is not a usable timeline hour");
    }
    const std::string heatmap_path =
        (fs::path(config.output_dir) /
         (stem + "_heatmap_" + timestamp_slug(*heatmap_at) + ".csv"))
            .string();
    atomic_write_text(heatmap_path, heatmap_csv(step->target));
  }
  return result;
}

EvaluateResult run_evaluate(const PipelineConfig& config, const std::string& predictions_path,
                            const std::string& observations_path, const std::vector<int>& leads,
                            bool use_mask) {
  require_file(predictions_path, "predictions tensor");
  require_file(observations_path, "observations tensor");
  const TensorData predictions = read_tensor_file(predictions_path);
  const TensorData observations = read_tensor_file(observations_path);
  if (predictions.dims != observations.dims) {
    std::string lhs, rhs;
    for (auto d : predictions.dims) lhs += std::to_string(d) + " ";
    for (auto d : observations.dims) rhs += std::to_string(d) + " ";
    throw FormatError("prediction shape ( " + lhs + ") does not match observation shape ( " +
                      rhs + ")");
  }

  EvaluationOptions options;
  options.leads = leads;
  options.weights = config.weighted_mae_weights;
  options.version_label = config.version.name();
  if (use_mask && !config.mask.cells.empty()) {
    options.mask = config.mask;
  } else {
    if (observations.dims.size() != 5) throw FormatError("observation tensor must be rank 5");
    options.mask = EvaluationMask::whole_grid(static_cast<int>(observations.dims[2]),
                                              static_cast<int>(observations.dims[3]));
  }

  const EvaluationReport report = evaluation_report(predictions, observations, options);

  ensure_output_dir(config.output_dir);
  const std::string stem =
      fs::path(predictions_path).filename().replace_extension("").string() + "_report";
  EvaluateResult result;
  result.json_path = (fs::path(config.output_dir) / (stem + ".json")).string();
  result.csv_path = (fs::path(config.output_dir) / (stem + ".csv")).string();
  atomic_write_text(result.json_path, report_to_json(report).dump(2) + "\n");
  atomic_write_text(result.csv_path, report_to_csv(report));
  return result;
}

InferenceResult run_fuse_inference(const PipelineConfig& config, UtcTime t0) {
  if (!t0.is_on_hour()) throw ConfigError("fuse-inference: t0 must be on the hour");
  require_file(config.inference_background_path, "inference background pack");
  const GridSource background = load_grid_pack(config.inference_background_path);

  const UtcTime first = t0.plus_hours(-(config.window.lookback - 1));
  std::string missing;
  for (int i = 0; i < config.window.lookback; ++i) {
    const UtcTime t = first.plus_hours(i);
    if (!background.time_index(t)) {
      if (!missing.empty()) missing += ", ";
      missing += format_iso8601_utc(t);
    }
  }
  if (!missing.empty()) {
    throw FormatError("inference background pack " + config.inference_background_path +
                      " is missing required hours: " + missing);
  }

  const IngestResult ingest = ingest_observations(config, config.version.enabled_systems);
  const std::vector<FusedStep> steps = build_fused_series(
      first, config.window.lookback, config.version, background, ingest.store);

  TensorData x;
  x.dims = {1, static_cast<std::uint64_t>(config.window.lookback),
            static_cast<std::uint64_t>(config.grid.n_rows),
            static_cast<std::uint64_t>(config.grid.n_cols),
            static_cast<std::uint64_t>(kFeatureChannelCount)};
  for (const FusedStep& step : steps) {
    x.values.insert(x.values.end(), step.features.values.begin(), step.features.values.end());
  }

  ensure_output_dir(config.output_dir);
  const std::string stem = config.version.name() + "_" + timestamp_slug(t0);
  InferenceResult result;
  result.x_path = (fs::path(config.output_dir) / (stem + "_x.stf")).string();
  result.manifest_path = (fs::path(config.output_dir) / (stem + "_manifest.json")).string();
  result.station_fused_fraction = station_fused_fraction(steps);

  nlohmann::json sidecar = dataset_sidecar(config);
  sidecar["kind"] = "inference_features";
  sidecar["t0_iso8601_utc"] = nlohmann::json::array({format_iso8601_utc(t0)});
  sidecar["input_hours"] = nlohmann::json::array();
  for (const FusedStep& step : steps) {
    sidecar["input_hours"].push_back(format_iso8601_utc(step.target.timestamp));
  }
  atomic_write_tensor(x, result.x_path, sidecar);

  nlohmann::json manifest;
  manifest["version"] = config.version.name();
  manifest["t0"] = format_iso8601_utc(t0);
  manifest["input_hours"] = sidecar["input_hours"];
  manifest["x_file"] = fs::path(result.x_path).filename().string();
  manifest["provenance"] = {{"station_fused_fraction", result.station_fused_fraction}};
  atomic_write_text(result.manifest_path, manifest.dump(2) + "\n");
  return result;
}

SanityCheckResult run_sanity_check(const PipelineConfig& config) {
  require_file(config.sanity_reference_path, "sanity reference pack");
  require_file(config.sanity_comparison_path, "sanity comparison pack");
  const GridSource reference = load_grid_pack(config.sanity_reference_path);
  const GridSource comparison = load_grid_pack(config.sanity_comparison_path);

  UtcTime start = std::max(reference.t0(), comparison.t0());
  UtcTime end = std::min(reference.time_at(reference.nt() - 1),
                         comparison.time_at(comparison.nt() - 1));
  if (config.range_start && *config.range_start > start) start = *config.range_start;
  if (config.range_end && *config.range_end < end) end = *config.range_end;
  if (end < start) {
    throw ConfigError("sanity-check: the two sources share no hours in the requested range");
  }
  const int n_hours =
      static_cast<int>((end.seconds_since_epoch - start.seconds_since_epoch) / kSecondsPerHour) +
      1;

  ensure_output_dir(config.output_dir);
  SanityCheckResult result;

  // Per-cell Spearman between the two sources' cell series (corner max, the
  // same sampling the fusion fallback uses).
  std::ostringstream grid_csv;
  grid_csv << "row,col,spearman\n";
  for (int row = 0; row < config.grid.n_rows; ++row) {
    for (int col = 0; col < config.grid.n_cols; ++col) {
      std::vector<double> a, b;
      a.reserve(n_hours);
      b.reserve(n_hours);
      for (int i = 0; i < n_hours; ++i) {
        const UtcTime t = start.plus_hours(i);
        a.push_back(fallback_corner_max(CellIndex{row, col}, t, reference, config.grid));
        b.push_back(fallback_corner_max(CellIndex{row, col}, t, comparison, config.grid));
      }
      const auto rho = spearman(a, b);
      grid_csv << row << ',' << col << ',';
      if (rho) {
        grid_csv << *rho;
      } else {
        grid_csv << "nan";
      }
      grid_csv << '\n';
    }
  }
  result.spearman_csv_path =
      (fs::path(config.output_dir) / "sanity_spearman_grid.csv").string();
  atomic_write_text(result.spearman_csv_path, grid_csv.str());

  if (!config.sanity_station_id.empty()) {
    if (config.sanity_station_system.empty()) {
      throw ConfigError("sanity-check: station_id given without station_system");
    }
    const IngestResult ingest = ingest_observations(config, {config.sanity_station_system});
    const StationRecord* station =
        ingest.store.find_station(config.sanity_station_system, config.sanity_station_id);
    if (station == nullptr) {
      throw ConfigError("sanity-check: station '" + config.sanity_station_id +
                        "' not found in system '" + config.sanity_station_system + "'");
    }
    if (!station->cell) {
      throw ConfigError("sanity-check: station '" + config.sanity_station_id +
                        "' lies outside the region of interest");
    }
    std::ostringstream station_csv;
    station_csv << "timestamp,station_mm_h,background_mm_h\n";
    for (int i = 0; i < n_hours; ++i) {
      const UtcTime t = start.plus_hours(i);
      const auto obs = station->precip_by_hour.find(t.seconds_since_epoch);
      if (obs == station->precip_by_hour.end()) continue;
      station_csv << format_iso8601_utc(t) << ',' << obs->second << ','
                  << fallback_corner_max(*station->cell, t, reference, config.grid) << '\n';
    }
    result.station_csv_path =
        (fs::path(config.output_dir) / "sanity_station_series.csv").string();
    atomic_write_text(result.station_csv_path, station_csv.str());
  }
  return result;
}

BaselineResult run_baseline(const PipelineConfig& config, const std::string& kind,
                            const std::string& x_path, const std::string& y_path) {
  require_file(x_path, "features tensor");
  require_file(y_path, "targets tensor");
  const std::vector<Example> examples = read_example_tensors(x_path, y_path);

  const nlohmann::json x_sidecar = read_tensor_sidecar(x_path);
  const nlohmann::json y_sidecar = read_tensor_sidecar(y_path);
  if (!x_sidecar.contains("dims") || !y_sidecar.contains("dims")) {
    throw FormatError("tensor sidecars must declare dims for baseline prediction");
  }
  ExampleShape shape;
  shape.lookback = x_sidecar.at("dims").at(1).get<int>();
  shape.horizon = y_sidecar.at("dims").at(1).get<int>();
  shape.n_rows = y_sidecar.at("dims").at(2).get<int>();
  shape.n_cols = y_sidecar.at("dims").at(3).get<int>();

  TensorData predictions;
  if (kind == "persistence") {
    predictions = persistence_predictions(examples, shape);
  } else if (kind == "climatology") {
    const SplitSizes split = chronological_split(examples, config.split_fractions);
    const std::vector<Example> training(examples.begin(),
                                        examples.begin() + static_cast<std::ptrdiff_t>(split.train));
    const ClimatologyTable table = fit_climatology(training, shape);
    predictions = climatology_predictions(table, examples, shape);
  } else {
    throw ConfigError("unknown baseline '" + kind + "' (expected persistence or climatology)");
  }

  ensure_output_dir(config.output_dir);
  const std::string stem =
      fs::path(x_path).filename().replace_extension("").string() + "_" + kind + "_pred";
  BaselineResult result;
  result.predictions_path = (fs::path(config.output_dir) / (stem + ".stf")).string();
  nlohmann::json sidecar;
  sidecar["kind"] = "predictions";
  sidecar["baseline"] = kind;
  sidecar["version"] = config.version.name();
  sidecar["dims"] = predictions.dims;
  atomic_write_tensor(predictions, result.predictions_path, sidecar);
  return result;
}

}  // namespace gridfuse
