#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>

#include "gridfuse/errors.hpp"
#include "gridfuse/fusion.hpp"
#include "support/fixtures.hpp"

using namespace gridfuse;
using gridfuse::testing::make_background;
using gridfuse::testing::make_store;
using gridfuse::testing::march_2021;
using gridfuse::testing::small_spec;
using gridfuse::testing::SyntheticStation;

namespace {

DatasetVersion version_of(std::vector<std::string> systems_list) {
  DatasetVersion version;
  version.enabled_systems = std::move(systems_list);
  return version;
}

}  // namespace

TEST_CASE("dataset version naming round trips") {
  CHECK(DatasetVersion::from_name("ERA5").enabled_systems.empty());
  CHECK(DatasetVersion::from_name("ERA5").name() == "ERA5");
  CHECK(DatasetVersion::from_name("ERA5+SIA").enabled_systems ==
        std::vector<std::string>{systems::kSirenes, systems::kInmet, systems::kAlertaRio});
  CHECK(DatasetVersion::from_name("ERA5+SIA").name() == "ERA5+SIA");
  CHECK(DatasetVersion::from_name("ERA5+AS").name() == "ERA5+SA");  // canonical letter order
  CHECK(DatasetVersion::from_name("GFS+A").background_label == "GFS");
  CHECK(DatasetVersion::from_name("GFS+A").enabled_systems ==
        std::vector<std::string>{systems::kAlertaRio});
  CHECK_THROWS_AS(DatasetVersion::from_name("ERA5+X"), ConfigError);
  CHECK_THROWS_AS(DatasetVersion::from_name("ERA5+SS"), ConfigError);
  CHECK_THROWS_AS(DatasetVersion::from_name("+SA"), ConfigError);
  CHECK_THROWS_AS(DatasetVersion::from_name("ERA5+"), ConfigError);
}

TEST_CASE("find_max_precip takes the max over operating in-cell stations") {
  const GridSpec spec = small_spec(3, 3);
  const UtcTime t = march_2021();
  // All three stations in cell (1, 1): lat (-2, -1], lon [1, 2).
  const auto store = make_store(spec, t,
                                {
                                    {"a", systems::kSirenes, -1.5, 1.5, {{0, 1.2}}},
                                    {"b", systems::kSirenes, -1.2, 1.8, {{0, 7.5}}},
                                    {"c", systems::kSirenes, -1.9, 1.1, {{0, 0.0}}},
                                    {"d", systems::kSirenes, -1.5, 1.5, {{1, 4.4}}},
                                });
  const CellIndex cell{1, 1};
  CHECK(find_max_precip(store, cell, systems::kSirenes, t) == 7.5);
  // Singleton set at the next hour.
  CHECK(find_max_precip(store, cell, systems::kSirenes, t.plus_hours(1)) == 4.4);
  // Nobody operating two hours in.
  CHECK_FALSE(find_max_precip(store, cell, systems::kSirenes, t.plus_hours(2)).has_value());
  CHECK_FALSE(find_max_precip(store, cell, systems::kInmet, t).has_value());
}

TEST_CASE("find_max_precip_across_systems elides empty systems") {
  const GridSpec spec = small_spec(2, 2);
  const UtcTime t = march_2021();
  const auto store = make_store(spec, t,
                                {
                                    {"s", systems::kSirenes, -0.5, 0.5, {{0, 3.0}}},
                                    {"i", systems::kInmet, -0.4, 0.4, {{0, 10.2}}},
                                    {"a", systems::kAlertaRio, -0.6, 0.6, {{0, 8.8}, {1, 2.1}}},
                                });
  const CellIndex cell{0, 0};
  const auto all = version_of({systems::kSirenes, systems::kInmet, systems::kAlertaRio});
  CHECK(find_max_precip_across_systems(store, cell, t, all) == 10.2);
  // Hour 1: only AlertaRio reports.
  CHECK(find_max_precip_across_systems(store, cell, t.plus_hours(1), all) == 2.1);
  // Background-only version: no systems enabled.
  CHECK_FALSE(find_max_precip_across_systems(store, cell, t, version_of({})).has_value());
}

TEST_CASE("fallback_corner_max picks the max of the four corner nodes") {
  const GridSpec spec = small_spec(2, 2);
  const UtcTime t = march_2021();
  // Put distinct precip values on the 3x3 node lattice.
  const GridSource background = make_background(
      spec, t, 2, [](int ti, int c, int i, int j) -> float {
        if (c != 0) return 0.0f;
        if (ti == 1) return 2.0f;                       // constant field at hour 1
        const float corner_values[3][3] = {{0.1f, 0.4f, 0.0f},
                                           {0.2f, 0.3f, 0.0f},
                                           {0.0f, 0.0f, 0.0f}};
        return corner_values[i][j];
      });
  CHECK(fallback_corner_max(CellIndex{0, 0}, t, background, spec) == 0.4f);
  CHECK(fallback_corner_max(CellIndex{1, 1}, t, background, spec) == 0.3f);
  CHECK(fallback_corner_max(CellIndex{0, 0}, t.plus_hours(1), background, spec) == 2.0f);
  CHECK_THROWS_AS(fallback_corner_max(CellIndex{0, 0}, t.plus_hours(2), background, spec),
                  ContractViolation);
}

TEST_CASE("fallback of an all-zero field is zero") {
  const GridSpec spec = small_spec(2, 2);
  const UtcTime t = march_2021();
  const GridSource background = gridfuse::testing::constant_background(spec, t, 1, 0.0f);
  CHECK(fallback_corner_max(CellIndex{1, 0}, t, background, spec) == 0.0f);
}

TEST_CASE("fuse_precip_grid prefers stations and falls back per cell") {
  const GridSpec spec = small_spec(2, 2);
  const UtcTime t = march_2021();
  const GridSource background = gridfuse::testing::constant_background(spec, t, 1, 0.7f);
  const auto store = make_store(spec, t,
                                {
                                    {"gauge", systems::kSirenes, -0.5, 0.5, {{0, 62.0}}},
                                });
  const auto version = version_of({systems::kSirenes});
  const FusedGrid fused = fuse_precip_grid(t, version, background, store);
  CHECK(fused.at(0, 0) == 62.0f);
  CHECK(fused.provenance_at(0, 0) == CellProvenance::kStationFused);
  CHECK(fused.at(0, 1) == 0.7f);
  CHECK(fused.provenance_at(0, 1) == CellProvenance::kBackgroundFallback);
  CHECK(fused.at(1, 1) == 0.7f);

  // Background-only version: every cell falls back.
  const FusedGrid era5_only = fuse_precip_grid(t, version_of({}), background, store);
  for (int row = 0; row < 2; ++row) {
    for (int col = 0; col < 2; ++col) {
      CHECK(era5_only.provenance_at(row, col) == CellProvenance::kBackgroundFallback);
      CHECK(era5_only.at(row, col) == 0.7f);
    }
  }
}

TEST_CASE("assemble_feature_grid carries the fused precip in channel 0") {
  const GridSpec spec = small_spec(2, 3);
  const UtcTime t = march_2021();
  // Channel c has constant value 10c on the lattice.
  const GridSource background = make_background(
      spec, t, 1, [](int, int c, int, int) { return 10.0f * static_cast<float>(c); });
  const auto store = make_store(spec, t,
                                {
                                    {"gauge", systems::kSirenes, -0.5, 0.5, {{0, 33.0}}},
                                });
  const auto version = version_of({systems::kSirenes});
  const FeatureGrid features = assemble_feature_grid(t, version, background, store);
  const FusedGrid fused = fuse_precip_grid(t, version, background, store);

  CHECK(features.values.size() ==
        static_cast<std::size_t>(spec.n_rows) * spec.n_cols * kFeatureChannelCount);
  for (int row = 0; row < spec.n_rows; ++row) {
    for (int col = 0; col < spec.n_cols; ++col) {
      CHECK(features.at(row, col, 0) == fused.at(row, col));
      for (int channel = 1; channel < kFeatureChannelCount; ++channel) {
        CHECK(features.at(row, col, channel) == 10.0f * static_cast<float>(channel));
      }
    }
  }
  CHECK(features.at(0, 0, 0) == 33.0f);
}

TEST_CASE("assemble_feature_grid requires the canonical channel catalog") {
  const GridSpec spec = small_spec(2, 2);
  const UtcTime t = march_2021();
  GridSource background(spec.lat_north, spec.lon_west, -spec.cell_height(), spec.cell_width(),
                        spec.n_rows + 1, spec.n_cols + 1, t, 1,
                        {{"precipitation", std::nullopt, "mm/h"}},
                        std::vector<float>(9, 0.0f));
  const auto store = make_store(spec, t, {});
  CHECK_THROWS_AS(assemble_feature_grid(t, version_of({}), background, store), FormatError);
}

// ---------------------------------------------------------------------------
// Brute-force oracle: scans every station and every corner per cell, using
// explicit interval membership instead of the grid module's arithmetic.

namespace {

struct OracleInstance {
  GridSpec spec;
  UtcTime origin;
  int n_hours = 0;
  std::vector<SyntheticStation> stations;
  GridSource background;
};

float oracle_fused_value(const OracleInstance& instance, const DatasetVersion& version,
                         CellIndex cell, int hour, bool* station_fused) {
  const GridSpec& spec = instance.spec;
  const double north = spec.lat_north - cell.row * spec.cell_height();
  const double south = spec.lat_north - (cell.row + 1) * spec.cell_height();
  const double west = spec.lon_west + cell.col * spec.cell_width();
  const double east = spec.lon_west + (cell.col + 1) * spec.cell_width();

  bool any = false;
  double best = 0.0;
  for (const SyntheticStation& station : instance.stations) {
    if (std::find(version.enabled_systems.begin(), version.enabled_systems.end(),
                  station.system) == version.enabled_systems.end()) {
      continue;
    }
    if (!(station.lat <= north && station.lat > south)) continue;
    if (!(station.lon >= west && station.lon < east)) continue;
    for (const auto& [h, value] : station.readings) {
      if (h != hour) continue;
      if (!any || value > best) best = value;
      any = true;
    }
  }
  if (any) {
    *station_fused = true;
    return static_cast<float>(best);
  }
  *station_fused = false;
  // Corner scan: fixture lattices put node (i, j) on row edge i / col edge j.
  float corner_best = 0.0f;
  bool first = true;
  for (int di = 0; di <= 1; ++di) {
    for (int dj = 0; dj <= 1; ++dj) {
      const float value =
          instance.background.at(hour, 0, cell.row + di, cell.col + dj);
      if (first || value > corner_best) corner_best = value;
      first = false;
    }
  }
  return corner_best;
}

OracleInstance random_instance(std::mt19937& rng) {
  OracleInstance instance{small_spec(1 + static_cast<int>(rng() % 4),
                                     1 + static_cast<int>(rng() % 4)),
                          march_2021(),
                          1 + static_cast<int>(rng() % 48),
                          {},
                          gridfuse::testing::constant_background(small_spec(1, 1),
                                                                 march_2021(), 1, 0.0f)};
  std::uniform_real_distribution<float> bg_precip(0.0f, 8.0f);
  instance.background = make_background(
      instance.spec, instance.origin, instance.n_hours,
      [&](int, int c, int, int) { return c == 0 ? bg_precip(rng) : 1.0f; });

  const std::string system_names[3] = {systems::kSirenes, systems::kInmet,
                                       systems::kAlertaRio};
  std::uniform_real_distribution<double> lat(instance.spec.lat_south - 0.5,
                                             instance.spec.lat_north + 0.5);
  std::uniform_real_distribution<double> lon(instance.spec.lon_west - 0.5,
                                             instance.spec.lon_east + 0.5);
  std::uniform_real_distribution<double> precip(0.0, 70.0);
  const int n_stations = static_cast<int>(rng() % 21);
  for (int s = 0; s < n_stations; ++s) {
    SyntheticStation station;
    station.id = "st" + std::to_string(s);
    station.system = system_names[rng() % 3];
    station.lat = lat(rng);
    station.lon = lon(rng);
    for (int h = 0; h < instance.n_hours; ++h) {
      if (rng() % 4 == 0) continue;  // random outage
      station.readings.emplace_back(h, precip(rng));
    }
    instance.stations.push_back(std::move(station));
  }
  return instance;
}

}  // namespace

TEST_CASE("fusion matches the brute-force oracle on 200 random instances") {
  std::mt19937 rng(20210301);
  const std::vector<std::vector<std::string>> subsets = {
      {},
      {systems::kSirenes},
      {systems::kInmet},
      {systems::kAlertaRio},
      {systems::kSirenes, systems::kInmet},
      {systems::kSirenes, systems::kAlertaRio},
      {systems::kInmet, systems::kAlertaRio},
      {systems::kSirenes, systems::kInmet, systems::kAlertaRio},
  };
  for (int trial = 0; trial < 200; ++trial) {
    const OracleInstance instance = random_instance(rng);
    const auto store = make_store(instance.spec, instance.origin, instance.stations);
    const DatasetVersion version = version_of(subsets[trial % subsets.size()]);
    const int hour = static_cast<int>(rng() % instance.n_hours);
    const UtcTime t = instance.origin.plus_hours(hour);

    const FusedGrid fused = fuse_precip_grid(t, version, instance.background, store);
    for (int row = 0; row < instance.spec.n_rows; ++row) {
      for (int col = 0; col < instance.spec.n_cols; ++col) {
        bool station_fused = false;
        const float expected =
            oracle_fused_value(instance, version, CellIndex{row, col}, hour, &station_fused);
        REQUIRE(fused.at(row, col) == expected);
        REQUIRE((fused.provenance_at(row, col) == CellProvenance::kStationFused) ==
                station_fused);
      }
    }
  }
}

TEST_CASE("dominance: the fused value is the exact max of in-cell readings") {
  std::mt19937 rng(99);
  const OracleInstance instance = random_instance(rng);
  const auto store = make_store(instance.spec, instance.origin, instance.stations);
  const auto version =
      version_of({systems::kSirenes, systems::kInmet, systems::kAlertaRio});
  for (int hour = 0; hour < instance.n_hours; ++hour) {
    const UtcTime t = instance.origin.plus_hours(hour);
    const FusedGrid fused = fuse_precip_grid(t, version, instance.background, store);
    for (const SyntheticStation& station : instance.stations) {
      const auto cell = cell_of(station.lat, station.lon, instance.spec);
      if (!cell) continue;
      for (const auto& [h, value] : station.readings) {
        if (h != hour) continue;
        CHECK(fused.at(cell->row, cell->col) >= static_cast<float>(value));
        CHECK(fused.provenance_at(cell->row, cell->col) == CellProvenance::kStationFused);
      }
    }
  }
}

TEST_CASE("monotonicity: enabling more systems never decreases any cell") {
  std::mt19937 rng(20240101);
  const OracleInstance instance = random_instance(rng);
  const auto store = make_store(instance.spec, instance.origin, instance.stations);
  const std::vector<std::vector<std::string>> subsets = {
      {},
      {systems::kSirenes},
      {systems::kInmet},
      {systems::kAlertaRio},
      {systems::kSirenes, systems::kInmet},
      {systems::kSirenes, systems::kAlertaRio},
      {systems::kInmet, systems::kAlertaRio},
      {systems::kSirenes, systems::kInmet, systems::kAlertaRio},
  };

  const auto is_subset = [](const std::vector<std::string>& a,
                            const std::vector<std::string>& b) {
    return std::all_of(a.begin(), a.end(), [&](const std::string& system) {
      return std::find(b.begin(), b.end(), system) != b.end();
    });
  };

  for (int hour = 0; hour < std::min(instance.n_hours, 12); ++hour) {
    const UtcTime t = instance.origin.plus_hours(hour);
    std::vector<FusedGrid> fused;
    fused.reserve(subsets.size());
    for (const auto& subset : subsets) {
      fused.push_back(fuse_precip_grid(t, version_of(subset), instance.background, store));
    }
    for (std::size_t a = 0; a < subsets.size(); ++a) {
      for (std::size_t b = 0; b < subsets.size(); ++b) {
        if (a == b || !is_subset(subsets[a], subsets[b])) continue;
        for (std::size_t flat = 0; flat < fused[a].precip_mm_h.size(); ++flat) {
          CHECK(fused[b].precip_mm_h[flat] >= fused[a].precip_mm_h[flat]);
        }
      }
    }
  }
}

TEST_CASE("build_fused_series is chronological, deterministic and matches serial") {
  std::mt19937 rng(31337);
  const OracleInstance instance = random_instance(rng);
  const auto store = make_store(instance.spec, instance.origin, instance.stations);
  const auto version = version_of({systems::kSirenes, systems::kAlertaRio});

  const auto parallel =
      build_fused_series(instance.origin, instance.n_hours, version, instance.background, store);
  const auto parallel_again =
      build_fused_series(instance.origin, instance.n_hours, version, instance.background, store);
  const auto serial = build_fused_series_serial(instance.origin, instance.n_hours, version,
                                                instance.background, store);

  REQUIRE(parallel.size() == static_cast<std::size_t>(instance.n_hours));
  for (std::size_t i = 0; i < parallel.size(); ++i) {
    CHECK(parallel[i].target.timestamp == instance.origin.plus_hours(static_cast<int>(i)));
    CHECK(parallel[i].target.precip_mm_h == serial[i].target.precip_mm_h);
    CHECK(parallel[i].features.values == serial[i].features.values);
    CHECK(parallel[i].target.precip_mm_h == parallel_again[i].target.precip_mm_h);
    CHECK(parallel[i].target.provenance == serial[i].target.provenance);
  }

  CHECK(build_fused_series(instance.origin, 0, version, instance.background, store).empty());
  CHECK_THROWS_AS(build_fused_series(instance.origin, instance.n_hours + 1, version,
                                     instance.background, store),
                  ContractViolation);
}
