#include "gridfuse/time.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

namespace gridfuse {

namespace {

// Floor-mod so pre-1970 instants still land in [0, m).
std::int64_t positive_mod(std::int64_t v, std::int64_t m) {
  std::int64_t r = v % m;
  return r < 0 ? r + m : r;
}

bool parse_fixed_int(std::string_view text, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > text.size()) return false;
  for (std::size_t i = 0; i < len; ++i) {
    if (text[pos + i] < '0' || text[pos + i] > '9') return false;
  }
  auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
  return ec == std::errc{} && ptr == text.data() + pos + len;
}

}  // namespace

bool UtcTime::is_on_hour() const {
  return positive_mod(seconds_since_epoch, kSecondsPerHour) == 0;
}

bool UtcTime::is_aligned_to_minutes(int minutes) const {
  return positive_mod(seconds_since_epoch, minutes * kSecondsPerMinute) == 0;
}

int month_of(UtcTime t) {
  using namespace std::chrono;
  const year_month_day ymd{floor<days>(sys_seconds{seconds{t.seconds_since_epoch}})};
  return static_cast<int>(unsigned(ymd.month()));
}

int hour_of_day(UtcTime t) {
  return static_cast<int>(positive_mod(t.seconds_since_epoch, 86400) / kSecondsPerHour);
}

std::optional<ParsedTimestamp> parse_iso8601(std::string_view text) {
  using namespace std::chrono;

  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  if (!parse_fixed_int(text, 0, 4, y)) return std::nullopt;
  if (text.size() < 16 || text[4] != '-' || text[7] != '-') return std::nullopt;
  if (!parse_fixed_int(text, 5, 2, mo)) return std::nullopt;
  if (!parse_fixed_int(text, 8, 2, d)) return std::nullopt;
  if (text[10] != 'T' && text[10] != ' ') return std::nullopt;
  if (!parse_fixed_int(text, 11, 2, h)) return std::nullopt;
  if (text[13] != ':') return std::nullopt;
  if (!parse_fixed_int(text, 14, 2, mi)) return std::nullopt;

  std::size_t pos = 16;
  if (pos + 1 < text.size() && text[pos] == ':') {
    if (!parse_fixed_int(text, pos + 1, 2, s)) return std::nullopt;
    pos += 3;
  }

  bool had_zone = false;
  std::int64_t zone_offset_seconds = 0;
  if (pos < text.size()) {
    if (text[pos] == 'Z' && pos + 1 == text.size()) {
      had_zone = true;
    } else if ((text[pos] == '+' || text[pos] == '-') && pos + 6 == text.size()) {
      int zh = 0, zm = 0;
      if (!parse_fixed_int(text, pos + 1, 2, zh)) return std::nullopt;
      if (text[pos + 3] != ':') return std::nullopt;
      if (!parse_fixed_int(text, pos + 4, 2, zm)) return std::nullopt;
      zone_offset_seconds = (zh * kSecondsPerHour + zm * kSecondsPerMinute);
      if (text[pos] == '-') zone_offset_seconds = -zone_offset_seconds;
      had_zone = true;
    } else {
      return std::nullopt;
    }
  }

  const year_month_day ymd{year{y}, month{unsigned(mo)}, day{unsigned(d)}};
  if (!ymd.ok()) return std::nullopt;
  if (h > 23 || mi > 59 || s > 59) return std::nullopt;

  const std::int64_t days_count = sys_days{ymd}.time_since_epoch().count();
  std::int64_t secs = days_count * 86400 + h * kSecondsPerHour + mi * kSecondsPerMinute + s;
  secs -= zone_offset_seconds;  // local = UTC + offset
  return ParsedTimestamp{UtcTime{secs}, had_zone};
}

std::string format_iso8601_utc(UtcTime t) {
  using namespace std::chrono;
  const sys_seconds tp{seconds{t.seconds_since_epoch}};
  const auto dp = floor<days>(tp);
  const year_month_day ymd{dp};
  const hh_mm_ss<seconds> tod{tp - dp};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()),
                static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                static_cast<int>(tod.seconds().count()));
  return buf;
}

}  // namespace gridfuse
