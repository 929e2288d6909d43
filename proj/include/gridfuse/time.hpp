#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace gridfuse {

inline constexpr std::int64_t kSecondsPerMinute = 60;
inline constexpr std::int64_t kSecondsPerHour = 3600;

/// An instant on the UTC timeline, at second resolution.
struct UtcTime {
  std::int64_t seconds_since_epoch = 0;

  friend auto operator<=>(const UtcTime&, const UtcTime&) = default;

  UtcTime plus_seconds(std::int64_t s) const { return {seconds_since_epoch + s}; }
  UtcTime plus_minutes(std::int64_t m) const { return plus_seconds(m * kSecondsPerMinute); }
  UtcTime plus_hours(std::int64_t h) const { return plus_seconds(h * kSecondsPerHour); }

  bool is_on_hour() const;
  bool is_aligned_to_minutes(int minutes) const;
};

/// Calendar month of the instant, 1..12.
int month_of(UtcTime t);

/// Hour of day of the instant, 0..23.
int hour_of_day(UtcTime t);

struct ParsedTimestamp {
  UtcTime when;     // already normalized to UTC when the text carried a zone
  bool had_zone;    // true for trailing Z or an explicit +-HH:MM offset
};

/// Parses "YYYY-MM-DD[T ]HH:MM[:SS][Z|+-HH:MM]". Returns nullopt on any
/// syntactic or calendar violation (e.g. month 13, minute 61).
std::optional<ParsedTimestamp> parse_iso8601(std::string_view text);

/// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_iso8601_utc(UtcTime t);

}  // namespace gridfuse
