#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gridfuse/time.hpp"

namespace gridfuse {

/// One gauge network. The three networks of the region of interest are
/// predefined below; anything with a cadence dividing 60 minutes works.
struct StationSystem {
  std::string name;
  int native_resolution_minutes = 60;  // must divide 60
  int timezone_offset_minutes = 0;     // local = UTC + offset

  bool is_hourly_native() const { return native_resolution_minutes == 60; }
};

namespace systems {
inline const std::string kSirenes = "Sirenes";
inline const std::string kInmet = "INMET";
inline const std::string kAlertaRio = "AlertaRio";
}  // namespace systems

/// One timestamped precipitation reading from one gauge.
struct StationObservation {
  std::string station_id;
  std::string system;
  double lat = 0.0;
  double lon = 0.0;
  UtcTime timestamp;               // end of the accumulation interval
  double precipitation_mm = 0.0;   // accumulated over the native interval
};

struct CatalogEntry {
  std::string station_id;
  std::string system;
  double lat = 0.0;
  double lon = 0.0;
  int tz_offset_minutes = 0;
};

/// Station catalog keyed by id. Input schema:
///   station_id,system,lat,lon,tz_offset_minutes
class StationCatalog {
 public:
  void add(CatalogEntry entry);
  const CatalogEntry* find(const std::string& station_id) const;
  std::vector<const CatalogEntry*> entries_for_system(const std::string& system) const;

  /// Timezone offset declared for a system; all of its stations must agree.
  /// Throws ConfigError on disagreement or an unknown system.
  int system_tz_offset_minutes(const std::string& system) const;

  std::size_t size() const { return by_id_.size(); }

 private:
  std::map<std::string, CatalogEntry> by_id_;
};

/// Throws FormatError on a malformed header or an unreadable file.
StationCatalog parse_station_catalog(const std::string& path);

struct RowError {
  int line = 0;        // 1-based, counting the header
  std::string message;
};

struct ObservationParseResult {
  std::vector<StationObservation> observations;
  std::vector<RowError> row_errors;
};

/// Parses one observation CSV (station_id,timestamp_iso8601_local,
/// precipitation_mm) for one system. Local timestamps are converted to UTC
/// with the system's declared offset; station locations come from the
/// catalog. Rejected rows (negative precipitation, bad timestamp, unknown
/// station, ...) land in row_errors, never silently dropped. A malformed
/// header throws FormatError.
ObservationParseResult parse_station_observations(const std::string& path,
                                                  const StationSystem& system,
                                                  const StationCatalog& catalog);

/// Collapses one station's native-cadence series to on-the-hour accumulations.
/// A 15-minute station's output at hour H sums the readings stamped H-45m,
/// H-30m, H-15m and H; an hour missing any sub-interval produces no output.
/// Hourly-native input passes through unchanged. Mixing stations in one call
/// throws ContractViolation.
std::vector<StationObservation> aggregate_to_hourly(
    const std::vector<StationObservation>& observations, const StationSystem& system);

}  // namespace gridfuse
