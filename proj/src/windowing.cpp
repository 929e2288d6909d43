#include "gridfuse/windowing.hpp"

#include <algorithm>
#include <cmath>

#include "gridfuse/errors.hpp"

namespace gridfuse {

void WindowConfig::validate() const {
  if (lookback < 1) throw ConfigError("window: lookback must be >= 1");
  if (horizon < 1) throw ConfigError("window: horizon must be >= 1");
  for (int month : excluded_months) {
    if (month < 1 || month > 12) {
      throw ConfigError("window: excluded month " + std::to_string(month) + " out of range");
    }
  }
}

std::vector<Segment> segment_timeline(const std::vector<UtcTime>& timestamps,
                                      const WindowConfig& config) {
  config.validate();
  std::vector<Segment> segments;
  const UtcTime* previous = nullptr;
  for (const UtcTime& t : timestamps) {
    if (!t.is_on_hour()) {
      throw ContractViolation("segment_timeline: " + format_iso8601_utc(t) +
                              " is not on the hour");
    }
    if (previous != nullptr && !(*previous < t)) {
      throw ContractViolation("segment_timeline: timestamps not strictly increasing at " +
                              format_iso8601_utc(t));
    }
    previous = &t;
    if (config.excluded_months.count(month_of(t))) continue;

    if (!segments.empty() &&
        segments.back().time_at(segments.back().timesteps) == t) {
      segments.back().timesteps++;
    } else {
      segments.push_back(Segment{t, 1});
    }
  }
  return segments;
}

namespace {

// Index of the series step stamped `t`; the series is chronological, so
// binary search applies.
std::size_t series_index_of(const std::vector<FusedStep>& series, UtcTime t) {
  const auto it = std::lower_bound(
      series.begin(), series.end(), t,
      [](const FusedStep& step, UtcTime when) { return step.target.timestamp < when; });
  if (it == series.end() || it->target.timestamp != t) {
    throw ContractViolation("slide_windows: segment hour " + format_iso8601_utc(t) +
                            " missing from the fused series");
  }
  return static_cast<std::size_t>(it - series.begin());
}

}  // namespace

std::vector<Example> slide_windows(const Segment& segment, const std::vector<FusedStep>& series,
                                   const WindowConfig& config) {
  config.validate();
  std::vector<Example> examples;
  const int span = config.window_span();
  if (segment.timesteps < span) return examples;

  // Resolve every segment hour up front; this also enforces coverage.
  std::vector<std::size_t> step_index(static_cast<std::size_t>(segment.timesteps));
  for (int i = 0; i < segment.timesteps; ++i) {
    step_index[i] = series_index_of(series, segment.time_at(i));
  }

  const int n_windows = segment.timesteps - span + 1;
  examples.reserve(static_cast<std::size_t>(n_windows));
  for (int offset = 0; offset < n_windows; ++offset) {
    Example example;
    example.t0 = segment.time_at(offset + config.lookback - 1);
    for (int i = 0; i < config.lookback; ++i) {
      const FeatureGrid& features = series[step_index[offset + i]].features;
      example.x.insert(example.x.end(), features.values.begin(), features.values.end());
    }
    for (int j = 0; j < config.horizon; ++j) {
      const FusedGrid& target = series[step_index[offset + config.lookback + j]].target;
      example.y.insert(example.y.end(), target.precip_mm_h.begin(), target.precip_mm_h.end());
    }
    examples.push_back(std::move(example));
  }
  return examples;
}

std::int64_t count_examples(const std::vector<Segment>& segments, const WindowConfig& config) {
  config.validate();
  std::int64_t total = 0;
  for (const Segment& segment : segments) {
    total += std::max(0, segment.timesteps - config.window_span() + 1);
  }
  return total;
}

SplitSizes chronological_split(const std::vector<Example>& examples,
                               const std::array<double, 3>& fractions) {
  for (double f : fractions) {
    if (!(f >= 0.0)) throw ConfigError("split: fractions must be non-negative");
  }
  const double sum = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("split: fractions sum to " + std::to_string(sum) + ", expected 1");
  }
  for (std::size_t i = 1; i < examples.size(); ++i) {
    if (!(examples[i - 1].t0 < examples[i].t0)) {
      throw ContractViolation("split: examples not in chronological order at index " +
                              std::to_string(i));
    }
  }

  const auto n = examples.size();
  SplitSizes sizes;
  sizes.validation = static_cast<std::size_t>(std::floor(static_cast<double>(n) * fractions[1]));
  sizes.test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * fractions[2]));
  sizes.train = n - sizes.validation - sizes.test;  // remainder goes to training
  return sizes;
}

}  // namespace gridfuse
