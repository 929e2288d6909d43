// Acceptance suite: every criterion prints one [PASS]/[FAIL] line; the
// process exits nonzero if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridfuse/baseline.hpp"
#include "gridfuse/fusion.hpp"
#include "gridfuse/metrics.hpp"
#include "gridfuse/pipeline.hpp"
#include "gridfuse/station.hpp"
#include "gridfuse/tensor_file.hpp"
#include "gridfuse/windowing.hpp"
#include "support/pipeline_fixture.hpp"

using namespace gridfuse;
using gridfuse::testing::default_stations;
using gridfuse::testing::FixtureOptions;
using gridfuse::testing::make_background;
using gridfuse::testing::make_store;
using gridfuse::testing::march_2021;
using gridfuse::testing::PipelineFixture;
using gridfuse::testing::small_spec;
using gridfuse::testing::SyntheticStation;

namespace {

class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  bool passed() const { return failures_.empty(); }
  const std::vector<std::string>& failures() const { return failures_; }

 private:
  std::vector<std::string> failures_;
};

class Harness {
 public:
  void criterion(int id, const std::string& name, const std::function<void(Check&)>& body) {
    Check check;
    try {
      body(check);
    } catch (const std::exception& e) {
      check.expect(false, std::string("unexpected exception: ") + e.what());
    }
    if (check.passed()) {
      std::printf("[PASS] criterion %2d: %s\n", id, name.c_str());
    } else {
      ++failures_;
      std::printf("[FAIL] criterion %2d: %s\n", id, name.c_str());
      for (const auto& what : check.failures()) std::printf("       - %s\n", what.c_str());
    }
    std::fflush(stdout);
  }

  int finish() const {
    std::printf("%s: %d criterion failure(s)\n", failures_ == 0 ? "OK" : "FAILED", failures_);
    return failures_ == 0 ? 0 : 1;
  }

 private:
  int failures_ = 0;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

ConfusionMatrix published_confusion() {
  ConfusionMatrix cm;
  const std::int64_t counts[4][4] = {
      {49959, 1416, 40, 2},
      {803, 1090, 88, 7},
      {48, 143, 43, 3},
      {2, 31, 15, 1},
  };
  for (int o = 0; o < 4; ++o) {
    for (int p = 0; p < 4; ++p) {
      cm.at(static_cast<PrecipLevel>(o), static_cast<PrecipLevel>(p)) = counts[o][p];
    }
  }
  return cm;
}

std::vector<UtcTime> hourly_run(UtcTime start, int n) {
  std::vector<UtcTime> out;
  for (int i = 0; i < n; ++i) out.push_back(start.plus_hours(i));
  return out;
}

std::int64_t enumerate_windows(const std::vector<UtcTime>& timeline, const WindowConfig& config) {
  const int span = config.window_span();
  std::int64_t count = 0;
  for (std::size_t start = 0; start + span <= timeline.size(); ++start) {
    bool valid = true;
    for (int offset = 0; offset < span && valid; ++offset) {
      const UtcTime t = timeline[start + offset];
      if (config.excluded_months.count(month_of(t))) valid = false;
      if (offset > 0 && t != timeline[start + offset - 1].plus_hours(1)) valid = false;
    }
    if (valid) ++count;
  }
  return count;
}

int run_cli(const std::string& args) {
  const std::string command = std::string(GRIDFUSE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(command.c_str());
  if (status == -1) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

nlohmann::json slurp_json(const std::string& path) {
  std::ifstream in(path);
  nlohmann::json doc;
  in >> doc;
  return doc;
}

// --- shared with the fusion unit oracle: brute-force per-cell scan --------

struct OracleInstance {
  GridSpec spec;
  UtcTime origin = march_2021();
  int n_hours = 0;
  std::vector<SyntheticStation> stations;
  std::vector<float> bg_precip;  // [t][lat][lon] on the corner lattice

  float bg_at(int t, int i, int j) const {
    return bg_precip[(static_cast<std::size_t>(t) * (spec.n_rows + 1) + i) * (spec.n_cols + 1) +
                     j];
  }
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
  *station_fused = any;
  if (any) return static_cast<float>(best);
  float corner_best = instance.bg_at(hour, cell.row, cell.col);
  corner_best = std::max(corner_best, instance.bg_at(hour, cell.row, cell.col + 1));
  corner_best = std::max(corner_best, instance.bg_at(hour, cell.row + 1, cell.col));
  corner_best = std::max(corner_best, instance.bg_at(hour, cell.row + 1, cell.col + 1));
  return corner_best;
}

OracleInstance random_instance(std::mt19937& rng) {
  OracleInstance instance;
  instance.spec = small_spec(1 + static_cast<int>(rng() % 4), 1 + static_cast<int>(rng() % 4));
  instance.n_hours = 1 + static_cast<int>(rng() % 48);
  std::uniform_real_distribution<float> bg(0.0f, 8.0f);
  instance.bg_precip.resize(static_cast<std::size_t>(instance.n_hours) *
                            (instance.spec.n_rows + 1) * (instance.spec.n_cols + 1));
  for (float& v : instance.bg_precip) v = bg(rng);

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
      if (rng() % 4 == 0) continue;
      station.readings.emplace_back(h, precip(rng));
    }
    instance.stations.push_back(std::move(station));
  }
  return instance;
}

GridSource instance_background(const OracleInstance& instance) {
  return make_background(instance.spec, instance.origin, instance.n_hours,
                         [&](int t, int c, int i, int j) {
                           return c == 0 ? instance.bg_at(t, i, j) : 1.0f;
                         });
}

const std::vector<std::vector<std::string>> kAllSubsets = {
    {},
    {systems::kSirenes},
    {systems::kInmet},
    {systems::kAlertaRio},
    {systems::kSirenes, systems::kInmet},
    {systems::kSirenes, systems::kAlertaRio},
    {systems::kInmet, systems::kAlertaRio},
    {systems::kSirenes, systems::kInmet, systems::kAlertaRio},
};

DatasetVersion version_of(std::vector<std::string> enabled) {
  DatasetVersion version;
  version.enabled_systems = std::move(enabled);
  return version;
}

}  // namespace

int main() {
  Harness harness;

  harness.criterion(1, "published confusion matrix reproduces the published F1 scores",
                    [](Check& check) {
    const auto f1 = f1_per_level(published_confusion());
    const double expected[4] = {0.9774, 0.4670, 0.2033, 0.0323};
    for (int level = 0; level < 4; ++level) {
      check.expect(std::abs(f1[level] - expected[level]) <= 5e-4,
                   "f1[" + std::to_string(level) + "] = " + std::to_string(f1[level]));
    }
  });

  harness.criterion(2, "extreme-row shares match the published percentages", [](Check& check) {
    const ConfusionMatrix cm = published_confusion();
    const double total = static_cast<double>(cm.row_sum(PrecipLevel::kExtreme));
    const auto share = [&](PrecipLevel predicted) {
      return 100.0 * static_cast<double>(cm.at(PrecipLevel::kExtreme, predicted)) / total;
    };
    check.expect(std::abs(share(PrecipLevel::kExtreme) - 2.04) <= 0.01, "diagonal share");
    check.expect(std::abs(share(PrecipLevel::kWeak) - 4.08) <= 0.01, "weak share");
    check.expect(std::abs(share(PrecipLevel::kModerate) - 63.27) <= 0.01, "moderate share");
    check.expect(std::abs(share(PrecipLevel::kHeavy) - 30.61) <= 0.01, "heavy share");
  });

  harness.criterion(3, "11 contiguous steps give 2 windows; windows never cross the dry gap",
                    [](Check& check) {
    WindowConfig config;
    const auto contiguous = segment_timeline(hourly_run(march_2021(), 11), config);
    check.expect(count_examples(contiguous, config) == 2, "contiguous count");

    // May hours, then September hours: the June-August exclusion splits them.
    std::vector<UtcTime> timeline = hourly_run(gridfuse::testing::late_may_2021(), 5);
    const auto september = hourly_run(parse_iso8601("2021-09-01T00:00:00Z")->when, 6);
    timeline.insert(timeline.end(), september.begin(), september.end());
    const auto segments = segment_timeline(timeline, config);
    check.expect(segments.size() == 2, "segment count");
    check.expect(count_examples(segments, config) == 0, "cross-gap count");
    check.expect(enumerate_windows(timeline, config) == 0, "oracle agrees");
  });

  harness.criterion(4, "window counts equal brute-force enumeration on 200 random timelines",
                    [](Check& check) {
    std::mt19937 rng(20250801);
    for (int trial = 0; trial < 200; ++trial) {
      WindowConfig config;
      config.lookback = 1 + static_cast<int>(rng() % 6);
      config.horizon = 1 + static_cast<int>(rng() % 6);
      std::vector<UtcTime> timeline;
      UtcTime t = gridfuse::testing::late_may_2021().plus_hours(rng() % 200);
      const int steps = 1 + static_cast<int>(rng() % 500);
      for (int i = 0; i < steps; ++i) {
        timeline.push_back(t);
        t = t.plus_hours((rng() % 10 == 0) ? 1 + static_cast<int>(rng() % 72) : 1);
      }
      const auto counted = count_examples(segment_timeline(timeline, config), config);
      const auto enumerated = enumerate_windows(timeline, config);
      if (counted != enumerated) {
        check.expect(false, "trial " + std::to_string(trial) + ": " + std::to_string(counted) +
                                " vs " + std::to_string(enumerated));
        return;
      }
    }
  });

  harness.criterion(5, "fusion matches a brute-force scan oracle on 200 random instances",
                    [](Check& check) {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937 rng(20210301);
    for (int trial = 0; trial < 200; ++trial) {
      const OracleInstance instance = random_instance(rng);
      const GridSource background = instance_background(instance);
      const auto store = make_store(instance.spec, instance.origin, instance.stations);
      const DatasetVersion version = version_of(kAllSubsets[trial % kAllSubsets.size()]);
      const int hour = static_cast<int>(rng() % instance.n_hours);
      const FusedGrid fused =
          fuse_precip_grid(instance.origin.plus_hours(hour), version, background, store);
      for (int row = 0; row < instance.spec.n_rows; ++row) {
        for (int col = 0; col < instance.spec.n_cols; ++col) {
          bool station_fused = false;
          const float expected = oracle_fused_value(instance, version, CellIndex{row, col},
                                                    hour, &station_fused);
          if (fused.at(row, col) != expected ||
              (fused.provenance_at(row, col) == CellProvenance::kStationFused) !=
                  station_fused) {
            check.expect(false, "trial " + std::to_string(trial) + " cell (" +
                                    std::to_string(row) + "," + std::to_string(col) + ")");
            return;
          }
        }
      }
    }
    const double elapsed = seconds_since(start);
    check.expect(elapsed < 10.0, "runtime " + std::to_string(elapsed) + "s exceeds 10s");
  });

  harness.criterion(6, "fused values are pointwise non-decreasing across the 8 system subsets",
                    [](Check& check) {
    std::mt19937 rng(20240101);
    const OracleInstance instance = random_instance(rng);
    const GridSource background = instance_background(instance);
    const auto store = make_store(instance.spec, instance.origin, instance.stations);
    const auto is_subset = [](const std::vector<std::string>& a,
                              const std::vector<std::string>& b) {
      return std::all_of(a.begin(), a.end(), [&](const std::string& system) {
        return std::find(b.begin(), b.end(), system) != b.end();
      });
    };
    for (int hour = 0; hour < instance.n_hours; ++hour) {
      const UtcTime t = instance.origin.plus_hours(hour);
      std::vector<FusedGrid> fused;
      for (const auto& subset : kAllSubsets) {
        fused.push_back(fuse_precip_grid(t, version_of(subset), background, store));
      }
      for (std::size_t a = 0; a < kAllSubsets.size(); ++a) {
        for (std::size_t b = 0; b < kAllSubsets.size(); ++b) {
          if (a == b || !is_subset(kAllSubsets[a], kAllSubsets[b])) continue;
          for (std::size_t flat = 0; flat < fused[a].precip_mm_h.size(); ++flat) {
            if (!(fused[b].precip_mm_h[flat] >= fused[a].precip_mm_h[flat])) {
              check.expect(false, "hour " + std::to_string(hour));
              return;
            }
          }
        }
      }
    }
  });

  harness.criterion(7, "quarter-hour aggregation sums to the closing hour and conserves mass",
                    [](Check& check) {
    const StationSystem sirenes{systems::kSirenes, 15, 0};
    const UtcTime base = parse_iso8601("2024-01-13T14:00:00Z")->when;
    std::vector<StationObservation> readings;
    const double values[4] = {1.0, 0.5, 0.0, 2.5};
    for (int quarter = 0; quarter < 4; ++quarter) {
      StationObservation obs;
      obs.station_id = "s1";
      obs.system = sirenes.name;
      obs.timestamp = base.plus_minutes(15 * (quarter + 1));  // 14:15 .. 15:00
      obs.precipitation_mm = values[quarter];
      readings.push_back(obs);
    }
    const auto hourly = aggregate_to_hourly(readings, sirenes);
    check.expect(hourly.size() == 1, "one output hour");
    if (!hourly.empty()) {
      check.expect(format_iso8601_utc(hourly[0].timestamp) == "2024-01-13T15:00:00Z",
                   "output stamped at 15:00");
      check.expect(hourly[0].precipitation_mm == 4.0, "sum is 4.0");
    }

    std::mt19937 rng(42);
    std::uniform_real_distribution<double> precip(0.0, 12.0);
    for (int trial = 0; trial < 100; ++trial) {
      const int n_hours = 1 + static_cast<int>(rng() % 24);
      std::vector<StationObservation> series;
      double native_sum = 0.0;
      for (int q = 1; q <= n_hours * 4; ++q) {
        StationObservation obs;
        obs.station_id = "s1";
        obs.system = sirenes.name;
        obs.timestamp = base.plus_minutes(15 * q);
        obs.precipitation_mm = precip(rng);
        native_sum += obs.precipitation_mm;
        series.push_back(obs);
      }
      const auto hours = aggregate_to_hourly(series, sirenes);
      double hourly_sum = 0.0;
      for (const auto& obs : hours) hourly_sum += obs.precipitation_mm;
      if (hours.size() != static_cast<std::size_t>(n_hours) ||
          std::abs(hourly_sum - native_sum) > 1e-9) {
        check.expect(false, "trial " + std::to_string(trial));
        return;
      }
    }
  });

  harness.criterion(8, "station fusion injects extreme targets the background-only set lacks",
                    [](Check& check) {
    FixtureOptions options;
    options.n_hours = 24;
    options.stations = default_stations(options.n_hours, 60.0);
    PipelineFixture fixture("accept_ablation", options);

    PipelineConfig config = load_pipeline_config(fixture.config_path());
    const BuildDatasetResult fused = run_build_dataset(config);
    config.version = DatasetVersion::from_name("ERA5");
    const BuildDatasetResult background_only = run_build_dataset(config);

    const auto has_extreme = [](const TensorData& y) {
      for (float v : y.values) {
        if (v >= 50.0f) return true;
      }
      return false;
    };
    check.expect(has_extreme(read_tensor_file(fused.y_path)),
                 "fusion target tensor lacks extreme values");
    check.expect(!has_extreme(read_tensor_file(background_only.y_path)),
                 "background-only target tensor contains extreme values");
  });

  harness.criterion(9, "tensor write/read round trip is bit-identical", [](Check& check) {
    gridfuse::testing::TempDir dir("accept_tensor");
    std::mt19937 rng(9);
    std::uniform_real_distribution<float> value(-1000.0f, 1000.0f);
    for (const auto& dims : std::vector<std::vector<std::uint64_t>>{
             {1, 5, 9, 11, 19}, {17, 5, 9, 11, 1}, {100, 5, 9, 11, 19}}) {
      TensorData tensor;
      tensor.dims = dims;
      tensor.values.resize(tensor.element_count());
      for (float& v : tensor.values) v = value(rng);
      const std::string path = dir.file("t.stf");
      write_tensor_file(tensor, path, nlohmann::json::object());
      const TensorData loaded = read_tensor_file(path);
      check.expect(loaded.dims == tensor.dims && loaded.values == tensor.values,
                   "round trip drifted");
    }
  });

  harness.criterion(10, "spearman: identity, reversal and monotone-transform invariance",
                    [](Check& check) {
    std::vector<double> identity(64), reversed(64);
    for (std::size_t i = 0; i < identity.size(); ++i) {
      identity[i] = static_cast<double>(i) * 0.5;
      reversed[identity.size() - 1 - i] = identity[i];
    }
    check.expect(std::abs(*spearman(identity, identity) - 1.0) <= 1e-12, "identity");
    check.expect(std::abs(*spearman(identity, reversed) + 1.0) <= 1e-12, "reversal");

    std::mt19937 rng(10);
    std::uniform_real_distribution<double> value(-5.0, 5.0);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> a(40), b(40), mapped(40);
      for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = value(rng);
        b[i] = value(rng);
      }
      for (std::size_t i = 0; i < a.size(); ++i) mapped[i] = std::exp(a[i]) + 7.0;
      if (std::abs(*spearman(a, b) - *spearman(mapped, b)) > 1e-12 ||
          std::abs(*spearman(a, mapped) - 1.0) > 1e-12) {
        check.expect(false, "trial " + std::to_string(trial));
        return;
      }
    }
  });

  harness.criterion(11, "end-to-end smoke: build-dataset, persistence baseline, evaluate",
                    [](Check& check) {
    const auto start = std::chrono::steady_clock::now();
    FixtureOptions options;
    options.stations = default_stations(options.n_hours, 60.0);
    PipelineFixture fixture("accept_smoke", options);

    check.expect(run_cli("build-dataset --config " + fixture.config_path()) == 0,
                 "build-dataset exit code");
    const TensorData x = read_tensor_file(fixture.out_path("ERA5+SIA_x.stf"));
    check.expect(x.dims == std::vector<std::uint64_t>{39, 5, 9, 11, 19},
                 "X dims are not (39, 5, 9, 11, 19)");

    check.expect(run_cli("baseline --kind persistence --config " + fixture.config_path() +
                         " --features " + fixture.out_path("ERA5+SIA_x.stf") + " --targets " +
                         fixture.out_path("ERA5+SIA_y.stf")) == 0,
                 "baseline exit code");
    check.expect(run_cli("evaluate --config " + fixture.config_path() + " --predictions " +
                         fixture.out_path("ERA5+SIA_x_persistence_pred.stf") +
                         " --observations " + fixture.out_path("ERA5+SIA_y.stf")) == 0,
                 "evaluate exit code");

    const nlohmann::json report =
        slurp_json(fixture.out_path("ERA5+SIA_x_persistence_pred_report.json"));
    check.expect(report.at("per_lead").size() == 5, "report covers all leads");
    check.expect(report.contains("combined"), "report has a pooled section");
    check.expect(report.at("combined").at("samples").get<int>() == 39 * 5 * 3,
                 "pooled sample count");

    const double elapsed = seconds_since(start);
    check.expect(elapsed < 30.0, "runtime " + std::to_string(elapsed) + "s exceeds 30s");
  });

  harness.criterion(12, "|bias| <= MAE everywhere; equality on an all-underestimate stream",
                    [](Check& check) {
    const EvaluationMask cell{{CellIndex{0, 0}}};
    std::mt19937 rng(12);
    std::uniform_real_distribution<float> value(0.0f, 90.0f);
    for (int trial = 0; trial < 50; ++trial) {
      TensorData obs;
      obs.dims = {32, 1, 1, 1, 1};
      obs.values.resize(obs.element_count());
      for (float& v : obs.values) v = value(rng);
      TensorData pred = obs;
      for (float& v : pred.values) v = value(rng);
      const LevelErrors errors = mae_bias_per_level(pred, obs, cell, {1});
      for (int level = 0; level < kLevelCount; ++level) {
        if (errors.count[level] == 0) continue;
        if (!(std::abs(errors.bias[level]) <= errors.mae[level] + 1e-12)) {
          check.expect(false, "trial " + std::to_string(trial));
          return;
        }
      }
    }

    // Predictions strictly below the observations: bias = -MAE exactly.
    TensorData obs;
    obs.dims = {3, 1, 1, 1, 1};
    obs.values = {30.0f, 45.0f, 26.0f};
    TensorData pred;
    pred.dims = obs.dims;
    pred.values = {10.0f, 20.0f, 5.0f};
    const LevelErrors errors = mae_bias_per_level(pred, obs, cell, {1});
    check.expect(errors.bias[2] == -errors.mae[2], "equality under one-signed errors");
    check.expect(errors.mae[2] > 0.0, "non-degenerate stream");
  });

  return harness.finish();
}
