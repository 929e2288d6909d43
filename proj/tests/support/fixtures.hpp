#pragma once

// Shared synthetic fixtures for the test suites: in-memory grid packs,
// station stores and scratch directories.

#include <filesystem>
#include <unistd.h>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "gridfuse/fusion.hpp"
#include "gridfuse/grid.hpp"
#include "gridfuse/grid_pack.hpp"
#include "gridfuse/observation_store.hpp"
#include "gridfuse/station.hpp"

namespace gridfuse::testing {

inline GridSpec roi_spec() {
  GridSpec spec;
  spec.lat_north = -21.6998;
  spec.lat_south = -23.8019;
  spec.lon_east = -42.3568;
  spec.lon_west = -45.0529;
  spec.n_rows = 9;
  spec.n_cols = 11;
  return spec;
}

inline GridSpec small_spec(int n_rows, int n_cols) {
  GridSpec spec;
  spec.lat_north = 0.0;
  spec.lat_south = -static_cast<double>(n_rows);
  spec.lon_west = 0.0;
  spec.lon_east = static_cast<double>(n_cols);
  spec.n_rows = n_rows;
  spec.n_cols = n_cols;
  return spec;
}

// 2021-03-01T00:00:00Z: a month outside the default exclusion set.
inline UtcTime march_2021() { return UtcTime{1614556800}; }

// 2021-05-29T00:00:00Z: close enough to June for gap fixtures.
inline UtcTime late_may_2021() { return UtcTime{1622246400}; }

/// Background pack whose lattice nodes sit exactly on the cell corners.
/// `value_at(t, channel, lat_index, lon_index)` fills the payload.
inline GridSource make_background(
    const GridSpec& spec, UtcTime t0, int n_hours,
    const std::function<float(int, int, int, int)>& value_at) {
  const int nlat = spec.n_rows + 1;
  const int nlon = spec.n_cols + 1;
  const auto& channels = canonical_feature_channels();
  std::vector<float> values;
  values.reserve(static_cast<std::size_t>(n_hours) * channels.size() * nlat * nlon);
  for (int t = 0; t < n_hours; ++t) {
    for (int c = 0; c < static_cast<int>(channels.size()); ++c) {
      for (int i = 0; i < nlat; ++i) {
        for (int j = 0; j < nlon; ++j) values.push_back(value_at(t, c, i, j));
      }
    }
  }
  return GridSource(spec.lat_north, spec.lon_west, -spec.cell_height(), spec.cell_width(), nlat,
                    nlon, t0, n_hours, channels, std::move(values));
}

inline GridSource constant_background(const GridSpec& spec, UtcTime t0, int n_hours,
                                      float precip, float other = 1.0f) {
  return make_background(spec, t0, n_hours, [precip, other](int, int c, int, int) {
    return c == 0 ? precip : other;
  });
}

/// One synthetic gauge: location plus per-hour readings (hour offset from
/// some series origin -> mm/h). Hours absent from the map are outages.
struct SyntheticStation {
  std::string id;
  std::string system = systems::kSirenes;
  double lat = 0.0;
  double lon = 0.0;
  std::vector<std::pair<int, double>> readings;  // (hour offset, mm/h)
};

inline ObservationStore make_store(const GridSpec& spec, UtcTime origin,
                                   const std::vector<SyntheticStation>& stations) {
  ObservationStore store(spec);
  for (const std::string& system :
       {systems::kSirenes, systems::kInmet, systems::kAlertaRio}) {
    store.register_system(StationSystem{system, 60, 0});
  }
  for (const SyntheticStation& station : stations) {
    std::vector<StationObservation> series;
    for (const auto& [hour, value] : station.readings) {
      StationObservation obs;
      obs.station_id = station.id;
      obs.system = station.system;
      obs.lat = station.lat;
      obs.lon = station.lon;
      obs.timestamp = origin.plus_hours(hour);
      obs.precipitation_mm = value;
      series.push_back(std::move(obs));
    }
    store.add_hourly_series(StationSystem{station.system, 60, 0}, series);
  }
  return store;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("gridfuse_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string write_file(const TempDir& dir, const std::string& name,
                              const std::string& content) {
  const std::string path = dir.file(name);
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path;
}

}  // namespace gridfuse::testing
