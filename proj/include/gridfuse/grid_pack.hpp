#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gridfuse/grid.hpp"
#include "gridfuse/time.hpp"

namespace gridfuse {

struct ChannelInfo {
  std::string name;
  std::optional<int> level_hpa;  // null for surface quantities
  std::string unit;

  friend bool operator==(const ChannelInfo&, const ChannelInfo&) = default;
};

/// The canonical 19-channel feature catalog: precipitation first, then for
/// each pressure level (1000, 700, 200 hPa) temperature, relative humidity,
/// U wind, V wind, wind speed, vertical velocity. Tensor sidecars record this
/// order so downstream consumers never guess.
const std::vector<ChannelInfo>& canonical_feature_channels();

/// A dense, time-stacked gridded field series on a regular lat/lon lattice.
/// Values are stored [time][channel][lat][lon] row-major; the time axis is
/// hourly. Immutable after load.
class GridSource {
 public:
  GridSource(double lat0, double lon0, double dlat, double dlon, int nlat, int nlon,
             UtcTime t0, int nt, std::vector<ChannelInfo> channels,
             std::vector<float> values);

  double lat0() const { return lat0_; }
  double lon0() const { return lon0_; }
  double dlat() const { return dlat_; }
  double dlon() const { return dlon_; }
  int nlat() const { return nlat_; }
  int nlon() const { return nlon_; }
  UtcTime t0() const { return t0_; }
  int nt() const { return nt_; }
  const std::vector<ChannelInfo>& channels() const { return channels_; }
  const std::vector<float>& values() const { return values_; }

  float at(int t_index, int channel, int lat_index, int lon_index) const {
    return values_[((static_cast<std::size_t>(t_index) * channels_.size() + channel) * nlat_ +
                    lat_index) *
                       nlon_ +
                   lon_index];
  }

  UtcTime time_at(int t_index) const { return t0_.plus_hours(t_index); }

  /// Index of the hourly step at `t`; nullopt outside the axis.
  std::optional<int> time_index(UtcTime t) const;

  /// Lattice node nearest to (lat, lon) as (lat_index, lon_index), provided
  /// it lies within `tolerance_deg` on both axes; nullopt otherwise.
  std::optional<std::pair<int, int>> nearest_node(double lat, double lon,
                                                  double tolerance_deg) const;

  /// Index of the channel named "precipitation"; throws FormatError if absent.
  int precipitation_channel() const;

  /// True when channels() matches canonical_feature_channels() name-by-name
  /// and level-by-level (units aside).
  bool has_canonical_feature_channels() const;

 private:
  double lat0_, lon0_, dlat_, dlon_;
  int nlat_, nlon_;
  UtcTime t0_;
  int nt_;
  std::vector<ChannelInfo> channels_;
  std::vector<float> values_;
  int precipitation_channel_ = -1;
};

/// Nodes snap to cell corners within this many degrees on each axis.
inline constexpr double kCornerSnapToleranceDeg = 0.05;

/// Loads a grid pack: `payload_path` holds the GPK1 binary payload and
/// `payload_path + ".json"` the sidecar metadata. Precipitation declared in
/// "m/h" is converted to mm/h. Throws FormatError on any inconsistency
/// (dimension mismatch, short payload, non-finite value, bad sidecar).
GridSource load_grid_pack(const std::string& payload_path);

/// Inverse of load_grid_pack for already-normalized sources; load ∘ write is
/// the identity on values.
void write_grid_pack(const GridSource& source, const std::string& payload_path);

}  // namespace gridfuse
