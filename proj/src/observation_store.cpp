#include "gridfuse/observation_store.hpp"

#include <algorithm>

#include "gridfuse/errors.hpp"

namespace gridfuse {

ObservationStore::ObservationStore(GridSpec spec) : spec_(spec) { spec_.validate(); }

void ObservationStore::register_system(const StationSystem& system) {
  systems_.try_emplace(system.name);
}

void ObservationStore::add_hourly_series(const StationSystem& system,
                                         const std::vector<StationObservation>& hourly) {
  if (hourly.empty()) {
    register_system(system);
    return;
  }
  SystemData& data = systems_[system.name];
  const StationObservation& first = hourly.front();
  auto [it, inserted] = data.stations.try_emplace(first.station_id);
  if (!inserted) {
    throw ContractViolation("observation store: station '" + first.station_id +
                            "' added twice");
  }
  StationRecord& record = it->second;
  record.id = first.station_id;
  record.lat = first.lat;
  record.lon = first.lon;
  record.cell = cell_of(first.lat, first.lon, spec_);
  record.precip_by_hour.reserve(hourly.size());
  for (const auto& obs : hourly) {
    if (obs.station_id != record.id) {
      throw ContractViolation("observation store: mixed stations in one series");
    }
    if (!obs.timestamp.is_on_hour()) {
      throw ContractViolation("observation store: non-hourly timestamp " +
                              format_iso8601_utc(obs.timestamp));
    }
    record.precip_by_hour[obs.timestamp.seconds_since_epoch] = obs.precipitation_mm;
  }
  if (record.cell) data.by_cell[*record.cell].push_back(&record);
}

bool ObservationStore::has_system(const std::string& system) const {
  return systems_.count(system) > 0;
}

const ObservationStore::SystemData* ObservationStore::find_system(
    const std::string& system) const {
  auto it = systems_.find(system);
  return it == systems_.end() ? nullptr : &it->second;
}

void ObservationStore::require_on_hour(UtcTime t) {
  if (!t.is_on_hour()) {
    throw ContractViolation("observation query at " + format_iso8601_utc(t) +
                            ": timestamp must be on the hour");
  }
}

std::vector<std::string> ObservationStore::stations_operating(const std::string& system,
                                                              CellIndex cell,
                                                              UtcTime t) const {
  require_on_hour(t);
  std::vector<std::string> ids;
  const SystemData* data = find_system(system);
  if (data == nullptr) return ids;
  auto it = data->by_cell.find(cell);
  if (it == data->by_cell.end()) return ids;
  for (const StationRecord* record : it->second) {
    if (record->precip_by_hour.count(t.seconds_since_epoch)) ids.push_back(record->id);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::optional<double> ObservationStore::max_precip(const std::string& system, CellIndex cell,
                                                   UtcTime t) const {
  require_on_hour(t);
  const SystemData* data = find_system(system);
  if (data == nullptr) return std::nullopt;
  auto it = data->by_cell.find(cell);
  if (it == data->by_cell.end()) return std::nullopt;
  std::optional<double> best;
  for (const StationRecord* record : it->second) {
    auto obs = record->precip_by_hour.find(t.seconds_since_epoch);
    if (obs == record->precip_by_hour.end()) continue;
    if (!best || obs->second > *best) best = obs->second;
  }
  return best;
}

const StationRecord* ObservationStore::find_station(const std::string& system,
                                                    const std::string& id) const {
  const SystemData* data = find_system(system);
  if (data == nullptr) return nullptr;
  auto it = data->stations.find(id);
  return it == data->stations.end() ? nullptr : &it->second;
}

}  // namespace gridfuse
