#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <vector>

#include "gridfuse/fusion.hpp"
#include "gridfuse/time.hpp"

namespace gridfuse {

struct WindowConfig {
  int lookback = 5;                        // input steps per example
  int horizon = 5;                         // predicted steps per example
  std::set<int> excluded_months = {6, 7, 8};

  int window_span() const { return lookback + horizon; }
  void validate() const;  // throws ConfigError
};

/// A maximal hourly-contiguous run of usable timesteps. Windows never cross
/// segment boundaries.
struct Segment {
  UtcTime start;
  int timesteps = 0;

  UtcTime time_at(int index) const { return start.plus_hours(index); }
  friend bool operator==(const Segment&, const Segment&) = default;
};

/// One (X, Y) pair. X is lookback steps of [row][col][channel] feature
/// values, Y is horizon steps of [row][col] precipitation, both row-major
/// and chronological. t0 stamps the last input step.
struct Example {
  UtcTime t0;
  std::vector<float> x;
  std::vector<float> y;
};

/// Drops excluded-month hours, then splits the remainder at every temporal
/// discontinuity. Input must be strictly increasing and on the hour.
std::vector<Segment> segment_timeline(const std::vector<UtcTime>& timestamps,
                                      const WindowConfig& config);

/// All sliding windows inside one segment, advancing one step at a time:
/// max(0, timesteps - (lookback + horizon) + 1) examples. Every hour of the
/// segment must be present in `series` (sorted, hourly within segments).
std::vector<Example> slide_windows(const Segment& segment, const std::vector<FusedStep>& series,
                                   const WindowConfig& config);

/// Sum of per-segment window counts; equals the length of the concatenated
/// slide_windows output.
std::int64_t count_examples(const std::vector<Segment>& segments, const WindowConfig& config);

struct SplitSizes {
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;
};

/// Contiguous chronological split. Validation and test get floor(n * f);
/// the remainder goes to training. Fractions must sum to 1 (+-1e-9).
/// Examples must already be in chronological order.
SplitSizes chronological_split(const std::vector<Example>& examples,
                               const std::array<double, 3>& fractions);

}  // namespace gridfuse
