#include "gridfuse/station.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <unordered_map>

#include "gridfuse/errors.hpp"

namespace gridfuse {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string::size_type start = 0;
  while (true) {
    auto comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::optional<double> parse_double_field(const std::string& text) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return value;
}

std::optional<int> parse_int_field(const std::string& text) {
  int value = 0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return value;
}

std::int64_t euclid_mod(std::int64_t v, std::int64_t m) {
  std::int64_t r = v % m;
  return r < 0 ? r + m : r;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  return in;
}

}  // namespace

void StationCatalog::add(CatalogEntry entry) {
  auto [it, inserted] = by_id_.emplace(entry.station_id, std::move(entry));
  if (!inserted) throw FormatError("catalog: duplicate station id '" + it->first + "'");
}

const CatalogEntry* StationCatalog::find(const std::string& station_id) const {
  auto it = by_id_.find(station_id);
  return it == by_id_.end() ? nullptr : &it->second;
}

std::vector<const CatalogEntry*> StationCatalog::entries_for_system(
    const std::string& system) const {
  std::vector<const CatalogEntry*> out;
  for (const auto& [id, entry] : by_id_) {
    if (entry.system == system) out.push_back(&entry);
  }
  return out;
}

int StationCatalog::system_tz_offset_minutes(const std::string& system) const {
  std::optional<int> offset;
  for (const auto& [id, entry] : by_id_) {
    if (entry.system != system) continue;
    if (offset && *offset != entry.tz_offset_minutes) {
      throw ConfigError("catalog: stations of system '" + system +
                        "' declare conflicting timezone offsets");
    }
    offset = entry.tz_offset_minutes;
  }
  if (!offset) throw ConfigError("catalog: no stations for system '" + system + "'");
  return *offset;
}

StationCatalog parse_station_catalog(const std::string& path) {
  auto in = open_or_throw(path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path + ": empty catalog file");
  if (strip_cr(line) != "station_id,system,lat,lon,tz_offset_minutes") {
    throw FormatError(path + ": unexpected catalog header '" + strip_cr(line) + "'");
  }

  StationCatalog catalog;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 5) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": expected 5 fields");
    }
    auto lat = parse_double_field(fields[2]);
    auto lon = parse_double_field(fields[3]);
    auto tz = parse_int_field(fields[4]);
    if (fields[0].empty() || fields[1].empty() || !lat || !lon || !tz) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": malformed catalog row");
    }
    catalog.add(CatalogEntry{fields[0], fields[1], *lat, *lon, *tz});
  }
  return catalog;
}

ObservationParseResult parse_station_observations(const std::string& path,
                                                  const StationSystem& system,
                                                  const StationCatalog& catalog) {
  auto in = open_or_throw(path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path + ": empty observation file");
  if (strip_cr(line) != "station_id,timestamp_iso8601_local,precipitation_mm") {
    throw FormatError(path + ": unexpected observation header '" + strip_cr(line) + "'");
  }

  ObservationParseResult result;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto reject = [&](const std::string& msg) {
      result.row_errors.push_back(RowError{line_no, msg});
    };

    auto fields = split_csv_line(line);
    if (fields.size() != 3) {
      reject("expected 3 fields");
      continue;
    }
    const CatalogEntry* entry = catalog.find(fields[0]);
    if (entry == nullptr) {
      reject("unknown station '" + fields[0] + "'");
      continue;
    }
    if (entry->system != system.name) {
      reject("station '" + fields[0] + "' belongs to system '" + entry->system + "'");
      continue;
    }
    auto parsed = parse_iso8601(fields[1]);
    if (!parsed) {
      reject("unparseable timestamp '" + fields[1] + "'");
      continue;
    }
    if (parsed->had_zone) {
      reject("timestamp carries a zone suffix; schema requires system-local time");
      continue;
    }
    if (!parsed->when.is_aligned_to_minutes(system.native_resolution_minutes)) {
      reject("timestamp not aligned to the " +
             std::to_string(system.native_resolution_minutes) + "-minute cadence");
      continue;
    }
    auto precip = parse_double_field(fields[2]);
    if (!precip || !std::isfinite(*precip)) {
      reject("non-numeric precipitation '" + fields[2] + "'");
      continue;
    }
    if (*precip < 0.0) {
      reject("negative precipitation");
      continue;
    }

    StationObservation obs;
    obs.station_id = fields[0];
    obs.system = system.name;
    obs.lat = entry->lat;
    obs.lon = entry->lon;
    obs.timestamp = parsed->when.plus_minutes(-system.timezone_offset_minutes);
    obs.precipitation_mm = *precip;
    result.observations.push_back(std::move(obs));
  }
  return result;
}

std::vector<StationObservation> aggregate_to_hourly(
    const std::vector<StationObservation>& observations, const StationSystem& system) {
  if (observations.empty()) return {};
  if (60 % system.native_resolution_minutes != 0) {
    throw ContractViolation("aggregate_to_hourly: native resolution must divide 60");
  }

  const std::string& station_id = observations.front().station_id;
  for (const auto& obs : observations) {
    if (obs.station_id != station_id) {
      throw ContractViolation("aggregate_to_hourly: mixed stations in input ('" + station_id +
                              "' vs '" + obs.station_id + "')");
    }
    if (obs.system != system.name) {
      throw ContractViolation("aggregate_to_hourly: observation from system '" + obs.system +
                              "', expected '" + system.name + "'");
    }
  }

  if (system.is_hourly_native()) return observations;

  const int per_hour = 60 / system.native_resolution_minutes;
  std::unordered_map<std::int64_t, double> by_stamp;
  by_stamp.reserve(observations.size());
  for (const auto& obs : observations) {
    auto [it, inserted] = by_stamp.emplace(obs.timestamp.seconds_since_epoch,
                                           obs.precipitation_mm);
    if (!inserted) {
      throw ContractViolation("aggregate_to_hourly: duplicate reading at " +
                              format_iso8601_utc(obs.timestamp));
    }
  }

  // A reading stamped t closes the sub-interval ending at t, so it feeds the
  // hour ending at ceil(t); complete hours need all per_hour stamps.
  const std::int64_t step = system.native_resolution_minutes * kSecondsPerMinute;
  std::map<std::int64_t, int> candidate_hours;
  for (const auto& [stamp, value] : by_stamp) {
    if (euclid_mod(stamp, step) != 0) {
      throw ContractViolation("aggregate_to_hourly: reading at " +
                              format_iso8601_utc(UtcTime{stamp}) +
                              " is off the native cadence");
    }
    const std::int64_t rem = euclid_mod(stamp, kSecondsPerHour);
    const std::int64_t hour = rem == 0 ? stamp : stamp - rem + kSecondsPerHour;
    candidate_hours[hour]++;
  }

  std::vector<StationObservation> hourly;
  for (const auto& [hour, count] : candidate_hours) {
    if (count != per_hour) continue;  // station "not operating" this hour
    double sum = 0.0;
    for (int i = per_hour - 1; i >= 0; --i) sum += by_stamp.at(hour - i * step);
    StationObservation out = observations.front();
    out.timestamp = UtcTime{hour};
    out.precipitation_mm = sum;
    hourly.push_back(std::move(out));
  }
  return hourly;
}

}  // namespace gridfuse
