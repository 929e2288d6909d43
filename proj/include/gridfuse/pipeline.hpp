#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gridfuse/config.hpp"
#include "gridfuse/observation_store.hpp"
#include "gridfuse/time.hpp"

namespace gridfuse {

/// Loads catalog + observation CSVs for the version's enabled systems,
/// aggregates to hourly and indexes everything for fusion. Row-level parse
/// rejects are returned, not dropped.
struct IngestResult {
  ObservationStore store;
  std::vector<std::string> row_error_lines;  // "system,file,line,message"
};
IngestResult ingest_observations(const PipelineConfig& config,
                                 const std::vector<std::string>& systems);

struct BuildDatasetResult {
  std::string x_path;
  std::string y_path;
  std::string manifest_path;
  std::uint64_t n_examples = 0;
  std::size_t n_segments = 0;
  double station_fused_fraction = 0.0;
};
/// The full dataset build: fuse, window, split, serialize. Writes
/// x.stf/y.stf (+sidecars) and manifest.json into the output directory,
/// atomically. `heatmap_at` additionally exports a plot-ready per-cell CSV
/// of the fused grid at that hour.
BuildDatasetResult run_build_dataset(const PipelineConfig& config,
                                     std::optional<UtcTime> heatmap_at = std::nullopt);

struct EvaluateResult {
  std::string json_path;
  std::string csv_path;
};
/// Verifies a prediction tensor against an observation tensor, per lead and
/// pooled, over the configured evaluation mask (or the whole grid with
/// use_mask = false).
EvaluateResult run_evaluate(const PipelineConfig& config, const std::string& predictions_path,
                            const std::string& observations_path, const std::vector<int>& leads,
                            bool use_mask);

struct InferenceResult {
  std::string x_path;
  std::string manifest_path;
  double station_fused_fraction = 0.0;
};
/// Builds the single (1, lookback, rows, cols, 19) input window ending at
/// t0 from the inference background (NWP) and live station files.
InferenceResult run_fuse_inference(const PipelineConfig& config, UtcTime t0);

struct SanityCheckResult {
  std::string spearman_csv_path;
  std::string station_csv_path;  // empty when no station is configured
};
/// Per-cell Spearman grid between the two configured sources over their
/// common time range, plus an hourly station-vs-background series for the
/// configured station.
SanityCheckResult run_sanity_check(const PipelineConfig& config);

struct BaselineResult {
  std::string predictions_path;
};
/// Writes baseline predictions ("persistence" or "climatology") for the
/// examples in an X/Y tensor pair, in the standard tensor format. The
/// climatology table is fitted on the configured training fraction only.
BaselineResult run_baseline(const PipelineConfig& config, const std::string& kind,
                            const std::string& x_path, const std::string& y_path);

}  // namespace gridfuse
