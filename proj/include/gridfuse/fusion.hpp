#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gridfuse/grid.hpp"
#include "gridfuse/grid_pack.hpp"
#include "gridfuse/observation_store.hpp"
#include "gridfuse/time.hpp"

namespace gridfuse {

inline constexpr int kFeatureChannelCount = 19;

/// One of the dataset variants: which station systems feed the fusion, on
/// top of which background source. The empty system set is the
/// background-only variant.
struct DatasetVersion {
  std::string background_label = "ERA5";
  std::vector<std::string> enabled_systems;  // canonical order: Sirenes, INMET, AlertaRio

  /// "ERA5", "ERA5+SIA", "GFS+A", ...
  std::string name() const;

  /// Parses the naming convention above; throws ConfigError on anything else.
  static DatasetVersion from_name(const std::string& name);
};

enum class CellProvenance : unsigned char {
  kStationFused,
  kBackgroundFallback,
};

/// Per-cell precipitation at one hour, fused from stations where possible.
struct FusedGrid {
  UtcTime timestamp;
  int n_rows = 0;
  int n_cols = 0;
  std::vector<float> precip_mm_h;            // [row][col]
  std::vector<CellProvenance> provenance;    // [row][col]

  float at(int row, int col) const { return precip_mm_h[row * n_cols + col]; }
  CellProvenance provenance_at(int row, int col) const { return provenance[row * n_cols + col]; }
};

/// Per-cell feature vector at one hour: channel 0 is the fused
/// precipitation, channels 1..18 the background variables in canonical order.
struct FeatureGrid {
  UtcTime timestamp;
  int n_rows = 0;
  int n_cols = 0;
  std::vector<float> values;  // [row][col][channel]

  float at(int row, int col, int channel) const {
    return values[(row * n_cols + col) * kFeatureChannelCount + channel];
  }
};

/// Max precipitation recorded in `cell` by the operating stations of one
/// system at hour `t`; nullopt when none are operating there.
std::optional<double> find_max_precip(const ObservationStore& store, CellIndex cell,
                                      const std::string& system, UtcTime t);

/// Max over the enabled systems' per-system maxima, skipping systems with no
/// operating station; nullopt when every enabled system comes up empty.
std::optional<double> find_max_precip_across_systems(const ObservationStore& store,
                                                     CellIndex cell, UtcTime t,
                                                     const DatasetVersion& version);

/// Max of the background precipitation channel at the cell's four corner
/// nodes. Throws ContractViolation when t is outside the background axis.
double fallback_corner_max(CellIndex cell, UtcTime t, const GridSource& background,
                           const GridSpec& spec);

/// Station max where at least one enabled station operates in the cell,
/// corner fallback everywhere else.
FusedGrid fuse_precip_grid(UtcTime t, const DatasetVersion& version,
                           const GridSource& background, const ObservationStore& store);

/// Full 19-channel feature grid: fused precipitation plus the background
/// variables sampled at each cell's NW corner node. The background must
/// carry the canonical feature catalog.
FeatureGrid assemble_feature_grid(UtcTime t, const DatasetVersion& version,
                                  const GridSource& background, const ObservationStore& store);

struct FusedStep {
  FeatureGrid features;
  FusedGrid target;
};

/// `n_hours` consecutive fused steps starting at `start`, in chronological
/// order. Parallelized over timestamps; output is bit-identical to the
/// serial reference regardless of thread count.
std::vector<FusedStep> build_fused_series(UtcTime start, int n_hours,
                                          const DatasetVersion& version,
                                          const GridSource& background,
                                          const ObservationStore& store);

/// Serial reference for build_fused_series, kept for tests and benchmarks.
std::vector<FusedStep> build_fused_series_serial(UtcTime start, int n_hours,
                                                 const DatasetVersion& version,
                                                 const GridSource& background,
                                                 const ObservationStore& store);

}  // namespace gridfuse
