#include "gridfuse/fusion.hpp"

#include <algorithm>
#include <exception>

#include "gridfuse/errors.hpp"

namespace gridfuse {

namespace {

struct SystemLetter {
  char letter;
  const std::string& name;
};

const SystemLetter kSystemLetters[] = {
    {'S', systems::kSirenes},
    {'I', systems::kInmet},
    {'A', systems::kAlertaRio},
};

}  // namespace

std::string DatasetVersion::name() const {
  if (enabled_systems.empty()) return background_label;
  std::string suffix;
  for (const auto& [letter, system] : kSystemLetters) {
    if (std::find(enabled_systems.begin(), enabled_systems.end(), system) !=
        enabled_systems.end()) {
      suffix.push_back(letter);
    }
  }
  return background_label + "+" + suffix;
}

DatasetVersion DatasetVersion::from_name(const std::string& name) {
  DatasetVersion version;
  const auto plus = name.find('+');
  version.background_label = name.substr(0, plus);
  if (version.background_label.empty()) {
    throw ConfigError("dataset version '" + name + "': empty background label");
  }
  if (plus == std::string::npos) return version;

  const std::string suffix = name.substr(plus + 1);
  if (suffix.empty()) throw ConfigError("dataset version '" + name + "': empty system suffix");
  for (const auto& [letter, system] : kSystemLetters) {
    const auto n = std::count(suffix.begin(), suffix.end(), letter);
    if (n > 1) throw ConfigError("dataset version '" + name + "': repeated system letter");
    if (n == 1) version.enabled_systems.push_back(system);
  }
  for (char c : suffix) {
    if (c != 'S' && c != 'I' && c != 'A') {
      throw ConfigError("dataset version '" + name + "': unknown system letter '" +
                        std::string(1, c) + "'");
    }
  }
  return version;
}

std::optional<double> find_max_precip(const ObservationStore& store, CellIndex cell,
                                      const std::string& system, UtcTime t) {
  return store.max_precip(system, cell, t);
}

std::optional<double> find_max_precip_across_systems(const ObservationStore& store,
                                                     CellIndex cell, UtcTime t,
                                                     const DatasetVersion& version) {
  std::optional<double> best;
  for (const auto& system : version.enabled_systems) {
    const auto system_max = find_max_precip(store, cell, system, t);
    if (system_max && (!best || *system_max > *best)) best = system_max;
  }
  return best;
}

double fallback_corner_max(CellIndex cell, UtcTime t, const GridSource& background,
                           const GridSpec& spec) {
  const auto t_index = background.time_index(t);
  if (!t_index) {
    throw ContractViolation("fallback_corner_max: " + format_iso8601_utc(t) +
                            " outside the background time axis");
  }
  const int precip = background.precipitation_channel();
  float best = 0.0f;
  bool first = true;
  for (const GridNode& corner : cell_corners(cell, spec)) {
    const auto node = background.nearest_node(corner.lat, corner.lon, kCornerSnapToleranceDeg);
    if (!node) {
      throw FormatError("background lattice has no node within " +
                        std::to_string(kCornerSnapToleranceDeg) + " deg of cell corner (" +
                        std::to_string(corner.lat) + ", " + std::to_string(corner.lon) + ")");
    }
    const float value = background.at(*t_index, precip, node->first, node->second);
    if (first || value > best) best = value;
    first = false;
  }
  return best;
}

namespace {

// Fill-style kernels: the series builders size every buffer up front so the
// parallel loop never touches the allocator.

void size_fused(FusedGrid& fused, const GridSpec& spec) {
  fused.n_rows = spec.n_rows;
  fused.n_cols = spec.n_cols;
  fused.precip_mm_h.resize(static_cast<std::size_t>(spec.n_rows) * spec.n_cols);
  fused.provenance.resize(fused.precip_mm_h.size());
}

void size_features(FeatureGrid& features, const GridSpec& spec) {
  features.n_rows = spec.n_rows;
  features.n_cols = spec.n_cols;
  features.values.resize(static_cast<std::size_t>(spec.n_rows) * spec.n_cols *
                         kFeatureChannelCount);
}

void fuse_precip_into(FusedGrid& fused, UtcTime t, const DatasetVersion& version,
                      const GridSource& background, const ObservationStore& store) {
  const GridSpec& spec = store.spec();
  fused.timestamp = t;
  for (int row = 0; row < spec.n_rows; ++row) {
    for (int col = 0; col < spec.n_cols; ++col) {
      const CellIndex cell{row, col};
      const std::size_t flat = static_cast<std::size_t>(row) * spec.n_cols + col;
      const auto station_max = find_max_precip_across_systems(store, cell, t, version);
      if (station_max) {
        fused.precip_mm_h[flat] = static_cast<float>(*station_max);
        fused.provenance[flat] = CellProvenance::kStationFused;
      } else {
        fused.precip_mm_h[flat] = static_cast<float>(fallback_corner_max(cell, t, background, spec));
        fused.provenance[flat] = CellProvenance::kBackgroundFallback;
      }
    }
  }
}

void features_into(FeatureGrid& features, const FusedGrid& fused, UtcTime t,
                   const GridSource& background, const GridSpec& spec) {
  if (!background.has_canonical_feature_channels()) {
    throw FormatError("feature assembly requires the canonical 19-channel catalog; pack declares " +
                      std::to_string(background.channels().size()) + " channel(s)");
  }
  const auto t_index = background.time_index(t);
  if (!t_index) {
    throw ContractViolation("assemble_feature_grid: " + format_iso8601_utc(t) +
                            " outside the background time axis");
  }

  features.timestamp = t;
  for (int row = 0; row < spec.n_rows; ++row) {
    for (int col = 0; col < spec.n_cols; ++col) {
      // Non-precipitation channels are node-valued; sample them at the
      // cell's NW corner so the choice is auditable downstream.
      const GridNode nw = cell_corners(CellIndex{row, col}, spec)[0];
      const auto node = background.nearest_node(nw.lat, nw.lon, kCornerSnapToleranceDeg);
      if (!node) {
        throw FormatError("background lattice has no node near NW corner of cell (" +
                          std::to_string(row) + ", " + std::to_string(col) + ")");
      }
      float* cell_values =
          &features.values[(static_cast<std::size_t>(row) * spec.n_cols + col) *
                           kFeatureChannelCount];
      cell_values[0] = fused.at(row, col);
      for (int channel = 1; channel < kFeatureChannelCount; ++channel) {
        cell_values[channel] = background.at(*t_index, channel, node->first, node->second);
      }
    }
  }
}

void fill_step(FusedStep& step, UtcTime t, const DatasetVersion& version,
               const GridSource& background, const ObservationStore& store) {
  fuse_precip_into(step.target, t, version, background, store);
  features_into(step.features, step.target, t, background, store.spec());
}

void require_range_on_axis(UtcTime start, int n_hours, const GridSource& background) {
  if (n_hours < 0) throw ContractViolation("build_fused_series: negative step count");
  if (n_hours == 0) return;
  if (!background.time_index(start) || !background.time_index(start.plus_hours(n_hours - 1))) {
    throw ContractViolation("build_fused_series: [" + format_iso8601_utc(start) + ", " +
                            format_iso8601_utc(start.plus_hours(n_hours - 1)) +
                            "] not covered by the background time axis");
  }
}

std::vector<FusedStep> sized_steps(int n_hours, const GridSpec& spec) {
  std::vector<FusedStep> steps(static_cast<std::size_t>(n_hours));
  for (FusedStep& step : steps) {
    size_fused(step.target, spec);
    size_features(step.features, spec);
  }
  return steps;
}

}  // namespace

FusedGrid fuse_precip_grid(UtcTime t, const DatasetVersion& version,
                           const GridSource& background, const ObservationStore& store) {
  FusedGrid fused;
  size_fused(fused, store.spec());
  fuse_precip_into(fused, t, version, background, store);
  return fused;
}

FeatureGrid assemble_feature_grid(UtcTime t, const DatasetVersion& version,
                                  const GridSource& background, const ObservationStore& store) {
  const FusedGrid fused = fuse_precip_grid(t, version, background, store);
  FeatureGrid features;
  size_features(features, store.spec());
  features_into(features, fused, t, background, store.spec());
  return features;
}

std::vector<FusedStep> build_fused_series(UtcTime start, int n_hours,
                                          const DatasetVersion& version,
                                          const GridSource& background,
                                          const ObservationStore& store) {
  require_range_on_axis(start, n_hours, background);
  std::vector<FusedStep> steps = sized_steps(n_hours, store.spec());
  std::exception_ptr failure = nullptr;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n_hours; ++i) {
    try {
      fill_step(steps[i], start.plus_hours(i), version, background, store);
    } catch (...) {
#pragma omp critical
      {
        if (!failure) failure = std::current_exception();
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
  return steps;
}

std::vector<FusedStep> build_fused_series_serial(UtcTime start, int n_hours,
                                                 const DatasetVersion& version,
                                                 const GridSource& background,
                                                 const ObservationStore& store) {
  require_range_on_axis(start, n_hours, background);
  std::vector<FusedStep> steps = sized_steps(n_hours, store.spec());
  for (int i = 0; i < n_hours; ++i) {
    fill_step(steps[i], start.plus_hours(i), version, background, store);
  }
  return steps;
}

}  // namespace gridfuse
