#pragma once

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "gridfuse/grid.hpp"
#include "gridfuse/station.hpp"
#include "gridfuse/time.hpp"

namespace gridfuse {

/// Hourly series of one station, indexed for fusion lookups.
struct StationRecord {
  std::string id;
  double lat = 0.0;
  double lon = 0.0;
  std::optional<CellIndex> cell;   // nullopt for stations outside the region
  std::unordered_map<std::int64_t, double> precip_by_hour;
};

/// Catalog + hourly observations of every enabled system, indexed by cell.
/// Immutable once filled; shared freely across parallel readers.
class ObservationStore {
 public:
  explicit ObservationStore(GridSpec spec);

  /// Registers a system (idempotent); needed so an enabled system with no
  /// observations still answers queries with "nobody operating".
  void register_system(const StationSystem& system);

  /// Adds one station's hourly series. Timestamps must be on the hour.
  void add_hourly_series(const StationSystem& system,
                         const std::vector<StationObservation>& hourly);

  bool has_system(const std::string& system) const;

  /// Stations of `system` located in `cell` with an observation exactly at
  /// `t` (which must be on the hour), in sorted id order.
  std::vector<std::string> stations_operating(const std::string& system, CellIndex cell,
                                              UtcTime t) const;

  /// Max precipitation over the operating stations; nullopt when none.
  std::optional<double> max_precip(const std::string& system, CellIndex cell, UtcTime t) const;

  const StationRecord* find_station(const std::string& system, const std::string& id) const;
  const GridSpec& spec() const { return spec_; }

 private:
  struct SystemData {
    std::map<std::string, StationRecord> stations;
    std::map<CellIndex, std::vector<const StationRecord*>> by_cell;
  };

  const SystemData* find_system(const std::string& system) const;
  static void require_on_hour(UtcTime t);

  GridSpec spec_;
  std::map<std::string, SystemData> systems_;
};

}  // namespace gridfuse
