#include "gridfuse/grid_pack.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "gridfuse/errors.hpp"

namespace gridfuse {

namespace {

constexpr char kMagic[4] = {'G', 'P', 'K', '1'};

void append_f32_le(std::string& out, float value) {
  const auto bits = std::bit_cast<std::uint32_t>(value);
  out.push_back(static_cast<char>(bits & 0xff));
  out.push_back(static_cast<char>((bits >> 8) & 0xff));
  out.push_back(static_cast<char>((bits >> 16) & 0xff));
  out.push_back(static_cast<char>((bits >> 24) & 0xff));
}

float read_f32_le(const unsigned char* p) {
  const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) |
                             (static_cast<std::uint32_t>(p[1]) << 8) |
                             (static_cast<std::uint32_t>(p[2]) << 16) |
                             (static_cast<std::uint32_t>(p[3]) << 24);
  return std::bit_cast<float>(bits);
}

}  // namespace

const std::vector<ChannelInfo>& canonical_feature_channels() {
  static const std::vector<ChannelInfo> catalog = [] {
    std::vector<ChannelInfo> c;
    c.push_back({"precipitation", std::nullopt, "mm/h"});
    for (int level : {1000, 700, 200}) {
      c.push_back({"temperature", level, "K"});
      c.push_back({"relative_humidity", level, "%"});
      c.push_back({"u_wind", level, "m/s"});
      c.push_back({"v_wind", level, "m/s"});
      c.push_back({"wind_speed", level, "m/s"});
      c.push_back({"vertical_velocity", level, "Pa/s"});
    }
    return c;
  }();
  return catalog;
}

GridSource::GridSource(double lat0, double lon0, double dlat, double dlon, int nlat, int nlon,
                       UtcTime t0, int nt, std::vector<ChannelInfo> channels,
                       std::vector<float> values)
    : lat0_(lat0),
      lon0_(lon0),
      dlat_(dlat),
      dlon_(dlon),
      nlat_(nlat),
      nlon_(nlon),
      t0_(t0),
      nt_(nt),
      channels_(std::move(channels)),
      values_(std::move(values)) {
  if (nlat_ < 1 || nlon_ < 1 || nt_ < 1 || channels_.empty()) {
    throw FormatError("grid pack: all dimensions must be >= 1");
  }
  if (dlat_ == 0.0 || dlon_ == 0.0) throw FormatError("grid pack: lattice spacing must be nonzero");
  if (!t0_.is_on_hour()) throw FormatError("grid pack: t0 must be on the hour");
  const std::size_t expected = static_cast<std::size_t>(nt_) * channels_.size() * nlat_ * nlon_;
  if (values_.size() != expected) {
    throw FormatError("grid pack: payload holds " + std::to_string(values_.size()) +
                      " values, dimensions require " + std::to_string(expected));
  }
  for (std::size_t i = 0; i < channels_.size(); ++i) {
    if (channels_[i].name != "precipitation") continue;
    if (precipitation_channel_ >= 0) {
      throw FormatError("grid pack: multiple precipitation channels");
    }
    precipitation_channel_ = static_cast<int>(i);
  }
}

std::optional<int> GridSource::time_index(UtcTime t) const {
  if (!t.is_on_hour()) return std::nullopt;
  const std::int64_t hours = (t.seconds_since_epoch - t0_.seconds_since_epoch) / kSecondsPerHour;
  if (t.seconds_since_epoch < t0_.seconds_since_epoch || hours >= nt_) return std::nullopt;
  return static_cast<int>(hours);
}

std::optional<std::pair<int, int>> GridSource::nearest_node(double lat, double lon,
                                                            double tolerance_deg) const {
  const auto snap = [](double value, double origin, double spacing) {
    const long idx = std::lround((value - origin) / spacing);
    return std::pair<long, double>{idx, origin + static_cast<double>(idx) * spacing};
  };
  auto [ilat, snapped_lat] = snap(lat, lat0_, dlat_);
  auto [ilon, snapped_lon] = snap(lon, lon0_, dlon_);
  if (ilat < 0 || ilat >= nlat_ || ilon < 0 || ilon >= nlon_) return std::nullopt;
  if (std::abs(snapped_lat - lat) > tolerance_deg || std::abs(snapped_lon - lon) > tolerance_deg) {
    return std::nullopt;
  }
  return std::make_pair(static_cast<int>(ilat), static_cast<int>(ilon));
}

int GridSource::precipitation_channel() const {
  if (precipitation_channel_ < 0) throw FormatError("grid pack: no precipitation channel");
  return precipitation_channel_;
}

bool GridSource::has_canonical_feature_channels() const {
  const auto& canonical = canonical_feature_channels();
  if (channels_.size() != canonical.size()) return false;
  for (std::size_t i = 0; i < canonical.size(); ++i) {
    if (channels_[i].name != canonical[i].name || channels_[i].level_hpa != canonical[i].level_hpa) {
      return false;
    }
  }
  return true;
}

GridSource load_grid_pack(const std::string& payload_path) {
  const std::string sidecar_path = payload_path + ".json";
  std::ifstream sidecar_in(sidecar_path);
  if (!sidecar_in) throw FormatError("cannot open " + sidecar_path);
  nlohmann::json sidecar;
  try {
    sidecar_in >> sidecar;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(sidecar_path + ": " + e.what());
  }

  double lat0, lon0, dlat, dlon;
  int nlat, nlon, nt, dt_hours;
  std::string t0_text;
  std::vector<ChannelInfo> channels;
  try {
    lat0 = sidecar.at("lat0").get<double>();
    lon0 = sidecar.at("lon0").get<double>();
    dlat = sidecar.at("dlat").get<double>();
    dlon = sidecar.at("dlon").get<double>();
    nlat = sidecar.at("nlat").get<int>();
    nlon = sidecar.at("nlon").get<int>();
    nt = sidecar.at("nt").get<int>();
    dt_hours = sidecar.at("dt_hours").get<int>();
    t0_text = sidecar.at("t0_iso8601_utc").get<std::string>();
    for (const auto& entry : sidecar.at("channels")) {
      ChannelInfo info;
      info.name = entry.at("name").get<std::string>();
      if (!entry.at("level_hpa").is_null()) info.level_hpa = entry.at("level_hpa").get<int>();
      info.unit = entry.at("unit").get<std::string>();
      channels.push_back(std::move(info));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(sidecar_path + ": " + e.what());
  }
  if (dt_hours != 1) throw FormatError(sidecar_path + ": time step must be 1 hour");
  auto t0 = parse_iso8601(t0_text);
  if (!t0) throw FormatError(sidecar_path + ": unparseable t0 '" + t0_text + "'");

  std::ifstream payload_in(payload_path, std::ios::binary);
  if (!payload_in) throw FormatError("cannot open " + payload_path);
  std::string payload((std::istreambuf_iterator<char>(payload_in)),
                      std::istreambuf_iterator<char>());
  if (payload.size() < sizeof(kMagic) || std::memcmp(payload.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError(payload_path + ": missing GPK1 magic");
  }
  const std::size_t count =
      static_cast<std::size_t>(nt) * channels.size() * static_cast<std::size_t>(nlat) *
      static_cast<std::size_t>(nlon);
  if (payload.size() != sizeof(kMagic) + count * 4) {
    throw FormatError(payload_path + ": payload holds " +
                      std::to_string((payload.size() - sizeof(kMagic)) / 4) +
                      " values, sidecar requires " + std::to_string(count));
  }

  std::vector<float> values(count);
  const auto* bytes = reinterpret_cast<const unsigned char*>(payload.data()) + sizeof(kMagic);
  for (std::size_t i = 0; i < count; ++i) {
    values[i] = read_f32_le(bytes + i * 4);
    if (!std::isfinite(values[i])) {
      throw FormatError(payload_path + ": non-finite value at index " + std::to_string(i));
    }
  }

  // Unit normalization at the boundary: every later stage sees mm/h, never
  // below zero (reanalysis exports carry slightly negative rain noise).
  for (std::size_t c = 0; c < channels.size(); ++c) {
    if (channels[c].name != "precipitation") continue;
    const bool meters = channels[c].unit == "m/h";
    if (!meters && channels[c].unit != "mm/h") {
      throw FormatError(payload_path + ": unsupported precipitation unit '" + channels[c].unit +
                        "'");
    }
    for (int t = 0; t < nt; ++t) {
      const std::size_t base =
          (static_cast<std::size_t>(t) * channels.size() + c) * nlat * nlon;
      for (std::size_t i = 0; i < static_cast<std::size_t>(nlat) * nlon; ++i) {
        float& v = values[base + i];
        if (meters) v *= 1000.0f;
        if (v < 0.0f) v = 0.0f;
      }
    }
    channels[c].unit = "mm/h";
  }

  return GridSource(lat0, lon0, dlat, dlon, nlat, nlon, t0->when, nt, std::move(channels),
                    std::move(values));
}

void write_grid_pack(const GridSource& source, const std::string& payload_path) {
  nlohmann::json sidecar;
  sidecar["lat0"] = source.lat0();
  sidecar["lon0"] = source.lon0();
  sidecar["dlat"] = source.dlat();
  sidecar["dlon"] = source.dlon();
  sidecar["nlat"] = source.nlat();
  sidecar["nlon"] = source.nlon();
  sidecar["nt"] = source.nt();
  sidecar["dt_hours"] = 1;
  sidecar["t0_iso8601_utc"] = format_iso8601_utc(source.t0());
  nlohmann::json channels = nlohmann::json::array();
  for (const auto& channel : source.channels()) {
    nlohmann::json entry;
    entry["name"] = channel.name;
    entry["level_hpa"] = channel.level_hpa ? nlohmann::json(*channel.level_hpa) : nlohmann::json();
    entry["unit"] = channel.unit;
    channels.push_back(std::move(entry));
  }
  sidecar["channels"] = std::move(channels);

  std::ofstream sidecar_out(payload_path + ".json");
  if (!sidecar_out) throw FormatError("cannot write " + payload_path + ".json");
  sidecar_out << sidecar.dump(2) << '\n';

  std::string payload;
  payload.reserve(sizeof(kMagic) + source.values().size() * 4);
  payload.append(kMagic, sizeof(kMagic));
  for (float value : source.values()) append_f32_le(payload, value);
  std::ofstream payload_out(payload_path, std::ios::binary);
  if (!payload_out) throw FormatError("cannot write " + payload_path);
  payload_out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!payload_out) throw FormatError("short write to " + payload_path);
}

}  // namespace gridfuse
