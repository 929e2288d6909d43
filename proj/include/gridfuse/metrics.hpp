#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridfuse/grid.hpp"
#include "gridfuse/tensor_file.hpp"

namespace gridfuse {

/// Precipitation intensity levels with mm/h bin edges
/// [0,5) [5,25) [25,50) [50,inf), half-open as written.
enum class PrecipLevel : int {
  kWeak = 0,
  kModerate = 1,
  kHeavy = 2,
  kExtreme = 3,
};

inline constexpr int kLevelCount = 4;

const char* level_name(PrecipLevel level);
const char* level_range(PrecipLevel level);  // "[0-5)" etc., the report column headers

/// Bin of a preprocessed value; negative or non-finite input breaks the
/// contract.
PrecipLevel classify_level(double mm_per_hour);

/// Clamps negative raw predictions to zero (regression outputs can dip
/// below the lowest bin edge). On by default in the evaluation entry points.
void clamp_negative(TensorData& tensor);

/// The cells over which verification metrics are computed.
struct EvaluationMask {
  std::vector<CellIndex> cells;

  static EvaluationMask whole_grid(int n_rows, int n_cols);

  /// Non-empty, in-grid, duplicate-free; throws ConfigError otherwise.
  void validate(int n_rows, int n_cols) const;
};

/// Rows are observed levels, columns predicted levels.
struct ConfusionMatrix {
  std::array<std::int64_t, kLevelCount * kLevelCount> counts{};

  std::int64_t& at(PrecipLevel observed, PrecipLevel predicted) {
    return counts[static_cast<int>(observed) * kLevelCount + static_cast<int>(predicted)];
  }
  std::int64_t at(PrecipLevel observed, PrecipLevel predicted) const {
    return counts[static_cast<int>(observed) * kLevelCount + static_cast<int>(predicted)];
  }
  std::int64_t row_sum(PrecipLevel observed) const;
  std::int64_t col_sum(PrecipLevel predicted) const;
  std::int64_t total() const;

  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Per-observed-level error statistics; levels with no samples report NaN.
struct LevelErrors {
  std::array<double, kLevelCount> mae;
  std::array<double, kLevelCount> bias;  // mean(predicted - observed)
  std::array<std::int64_t, kLevelCount> count{};

  LevelErrors();
};

/// One count per (example, lead in `leads`, cell in `mask`) triple.
/// `predictions` and `observations` must share a rank-5 (n, horizon, rows,
/// cols, 1) shape; leads are 1-based. Parallelized over examples with
/// results identical to the serial reference.
ConfusionMatrix confusion_matrix(const TensorData& predictions, const TensorData& observations,
                                 const EvaluationMask& mask, const std::vector<int>& leads);

/// Serial reference for confusion_matrix, kept for tests and benchmarks.
ConfusionMatrix confusion_matrix_serial(const TensorData& predictions,
                                        const TensorData& observations,
                                        const EvaluationMask& mask,
                                        const std::vector<int>& leads);

/// One-vs-rest F1 per level; zero denominators yield 0.
std::array<double, kLevelCount> f1_per_level(const ConfusionMatrix& cm);

/// MAE and bias grouped by observed level.
LevelErrors mae_bias_per_level(const TensorData& predictions, const TensorData& observations,
                               const EvaluationMask& mask, const std::vector<int>& leads);

/// Mean of w(level(obs)) * |pred - obs| normalized by the mean weight, so
/// all-equal weights reduce to the plain MAE. Weights must be positive.
/// NaN when there are no samples.
double weighted_mae(const TensorData& predictions, const TensorData& observations,
                    const EvaluationMask& mask, const std::vector<int>& leads,
                    const std::array<double, kLevelCount>& weights);

/// Spearman rank correlation with averaged tie ranks. nullopt when a series
/// is shorter than 2 or has zero rank variance.
std::optional<double> spearman(std::span<const double> a, std::span<const double> b);

struct LeadEvaluation {
  std::string label;  // "T+1", ..., or "combined"
  std::vector<int> leads;
  ConfusionMatrix confusion;
  std::array<double, kLevelCount> f1;
  LevelErrors errors;
  double weighted_mae = 0.0;
  std::int64_t sample_count = 0;
};

struct EvaluationOptions {
  EvaluationMask mask;
  std::vector<int> leads;  // empty = all leads of the tensor
  std::array<double, kLevelCount> weights = {1.0, 2.0, 5.0, 10.0};
  bool clamp_negative_predictions = true;
  std::string version_label;
};

struct EvaluationReport {
  std::string version_label;
  std::vector<CellIndex> mask_cells;
  std::array<double, kLevelCount> weights;
  std::vector<LeadEvaluation> per_lead;
  LeadEvaluation pooled;
};

/// Per-lead and pooled verification of a prediction tensor against an
/// observation tensor of the same shape.
EvaluationReport evaluation_report(TensorData predictions, const TensorData& observations,
                                   const EvaluationOptions& options);

/// Deterministic serializations: JSON for machines, CSV (one row per level
/// per lead) for plotting. Absent statistics render as null / "nan".
nlohmann::json report_to_json(const EvaluationReport& report);
std::string report_to_csv(const EvaluationReport& report);

}  // namespace gridfuse
