#include "gridfuse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "gridfuse/errors.hpp"

namespace gridfuse {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const char* kLevelNames[kLevelCount] = {"weak", "moderate", "heavy", "extreme"};
const char* kLevelRanges[kLevelCount] = {"[0-5)", "[5-25)", "[25-50)", "[50-inf)"};

}  // namespace

const char* level_name(PrecipLevel level) { return kLevelNames[static_cast<int>(level)]; }
const char* level_range(PrecipLevel level) { return kLevelRanges[static_cast<int>(level)]; }

PrecipLevel classify_level(double mm_per_hour) {
  if (!std::isfinite(mm_per_hour) || mm_per_hour < 0.0) {
    throw ContractViolation("classify_level: value " + std::to_string(mm_per_hour) +
                            " outside [0, inf)");
  }
  if (mm_per_hour < 5.0) return PrecipLevel::kWeak;
  if (mm_per_hour < 25.0) return PrecipLevel::kModerate;
  if (mm_per_hour < 50.0) return PrecipLevel::kHeavy;
  return PrecipLevel::kExtreme;
}

void clamp_negative(TensorData& tensor) {
  for (float& v : tensor.values) {
    if (v < 0.0f) v = 0.0f;
  }
}

EvaluationMask EvaluationMask::whole_grid(int n_rows, int n_cols) {
  EvaluationMask mask;
  mask.cells.reserve(static_cast<std::size_t>(n_rows) * n_cols);
  for (int row = 0; row < n_rows; ++row) {
    for (int col = 0; col < n_cols; ++col) mask.cells.push_back(CellIndex{row, col});
  }
  return mask;
}

void EvaluationMask::validate(int n_rows, int n_cols) const {
  if (cells.empty()) throw ConfigError("evaluation mask must be non-empty");
  std::set<CellIndex> seen;
  for (const CellIndex& cell : cells) {
    if (cell.row < 0 || cell.row >= n_rows || cell.col < 0 || cell.col >= n_cols) {
      throw ConfigError("evaluation mask cell (" + std::to_string(cell.row) + ", " +
                        std::to_string(cell.col) + ") outside the " + std::to_string(n_rows) +
                        "x" + std::to_string(n_cols) + " grid");
    }
    if (!seen.insert(cell).second) {
      throw ConfigError("evaluation mask repeats cell (" + std::to_string(cell.row) + ", " +
                        std::to_string(cell.col) + ")");
    }
  }
}

std::int64_t ConfusionMatrix::row_sum(PrecipLevel observed) const {
  std::int64_t sum = 0;
  for (int p = 0; p < kLevelCount; ++p) sum += at(observed, static_cast<PrecipLevel>(p));
  return sum;
}

std::int64_t ConfusionMatrix::col_sum(PrecipLevel predicted) const {
  std::int64_t sum = 0;
  for (int o = 0; o < kLevelCount; ++o) sum += at(static_cast<PrecipLevel>(o), predicted);
  return sum;
}

std::int64_t ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
  return *this;
}

LevelErrors::LevelErrors() {
  mae.fill(kNaN);
  bias.fill(kNaN);
}

namespace {

struct SampleLayout {
  std::size_t n_examples;
  std::size_t horizon;
  std::size_t n_rows;
  std::size_t n_cols;
  std::vector<int> leads;          // validated, 1-based
  std::vector<std::size_t> cells;  // flattened row * n_cols + col
};

SampleLayout validate_inputs(const TensorData& predictions, const TensorData& observations,
                             const EvaluationMask& mask, const std::vector<int>& leads) {
  if (predictions.dims != observations.dims) {
    throw ContractViolation("prediction and observation tensors have different shapes");
  }
  if (predictions.dims.size() != 5 || predictions.dims[4] != 1) {
    throw ContractViolation("evaluation tensors must be rank 5 with one channel");
  }
  SampleLayout layout;
  layout.n_examples = predictions.dims[0];
  layout.horizon = predictions.dims[1];
  layout.n_rows = predictions.dims[2];
  layout.n_cols = predictions.dims[3];

  mask.validate(static_cast<int>(layout.n_rows), static_cast<int>(layout.n_cols));
  for (const CellIndex& cell : mask.cells) {
    layout.cells.push_back(static_cast<std::size_t>(cell.row) * layout.n_cols + cell.col);
  }

  layout.leads = leads;
  if (layout.leads.empty()) {
    for (std::size_t j = 1; j <= layout.horizon; ++j) layout.leads.push_back(static_cast<int>(j));
  }
  std::set<int> unique_leads(layout.leads.begin(), layout.leads.end());
  if (unique_leads.size() != layout.leads.size()) {
    throw ConfigError("lead list repeats a lead time");
  }
  for (int lead : layout.leads) {
    if (lead < 1 || static_cast<std::size_t>(lead) > layout.horizon) {
      throw ConfigError("lead T+" + std::to_string(lead) + " outside horizon of " +
                        std::to_string(layout.horizon));
    }
  }
  return layout;
}

/// Everything one pass over the samples can produce. Per-example partials
/// are folded in example order so parallel runs stay bit-deterministic.
struct SampleAccumulator {
  ConfusionMatrix confusion;
  std::array<double, kLevelCount> abs_error_sum{};
  std::array<double, kLevelCount> signed_error_sum{};
  std::array<std::int64_t, kLevelCount> count{};

  void add(double predicted, double observed) {
    const PrecipLevel obs_level = classify_level(observed);
    const PrecipLevel pred_level = classify_level(predicted);
    confusion.at(obs_level, pred_level)++;
    const int o = static_cast<int>(obs_level);
    abs_error_sum[o] += std::abs(predicted - observed);
    signed_error_sum[o] += predicted - observed;
    count[o]++;
  }

  void fold(const SampleAccumulator& other) {
    confusion += other.confusion;
    for (int o = 0; o < kLevelCount; ++o) {
      abs_error_sum[o] += other.abs_error_sum[o];
      signed_error_sum[o] += other.signed_error_sum[o];
      count[o] += other.count[o];
    }
  }
};

SampleAccumulator accumulate_example(const TensorData& predictions,
                                     const TensorData& observations, const SampleLayout& layout,
                                     std::size_t example) {
  SampleAccumulator acc;
  const std::size_t grid = layout.n_rows * layout.n_cols;
  for (int lead : layout.leads) {
    const std::size_t base = (example * layout.horizon + static_cast<std::size_t>(lead - 1)) * grid;
    for (std::size_t cell : layout.cells) {
      acc.add(predictions.values[base + cell], observations.values[base + cell]);
    }
  }
  return acc;
}

SampleAccumulator accumulate_samples(const TensorData& predictions,
                                     const TensorData& observations, const SampleLayout& layout,
                                     bool parallel) {
  const std::size_t n = layout.n_examples;
  std::vector<SampleAccumulator> partials(n);
  if (parallel) {
    std::exception_ptr failure = nullptr;
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
      try {
        partials[i] = accumulate_example(predictions, observations, layout, i);
      } catch (...) {
#pragma omp critical
        {
          if (!failure) failure = std::current_exception();
        }
      }
    }
    if (failure) std::rethrow_exception(failure);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      partials[i] = accumulate_example(predictions, observations, layout, i);
    }
  }
  SampleAccumulator total;
  for (const SampleAccumulator& partial : partials) total.fold(partial);
  return total;
}

LevelErrors errors_from(const SampleAccumulator& acc) {
  LevelErrors errors;
  for (int o = 0; o < kLevelCount; ++o) {
    errors.count[o] = acc.count[o];
    if (acc.count[o] > 0) {
      errors.mae[o] = acc.abs_error_sum[o] / static_cast<double>(acc.count[o]);
      errors.bias[o] = acc.signed_error_sum[o] / static_cast<double>(acc.count[o]);
    }
  }
  return errors;
}

double weighted_mae_from(const SampleAccumulator& acc,
                         const std::array<double, kLevelCount>& weights) {
  double weighted_error = 0.0;
  double weight_sum = 0.0;
  std::int64_t samples = 0;
  for (int o = 0; o < kLevelCount; ++o) {
    weighted_error += weights[o] * acc.abs_error_sum[o];
    weight_sum += weights[o] * static_cast<double>(acc.count[o]);
    samples += acc.count[o];
  }
  return samples == 0 ? kNaN : weighted_error / weight_sum;
}

void validate_weights(const std::array<double, kLevelCount>& weights) {
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw ConfigError("weighted MAE weights must be positive and finite");
    }
  }
}

}  // namespace

ConfusionMatrix confusion_matrix(const TensorData& predictions, const TensorData& observations,
                                 const EvaluationMask& mask, const std::vector<int>& leads) {
  const SampleLayout layout = validate_inputs(predictions, observations, mask, leads);
  return accumulate_samples(predictions, observations, layout, /*parallel=*/true).confusion;
}

ConfusionMatrix confusion_matrix_serial(const TensorData& predictions,
                                        const TensorData& observations,
                                        const EvaluationMask& mask,
                                        const std::vector<int>& leads) {
  const SampleLayout layout = validate_inputs(predictions, observations, mask, leads);
  return accumulate_samples(predictions, observations, layout, /*parallel=*/false).confusion;
}

std::array<double, kLevelCount> f1_per_level(const ConfusionMatrix& cm) {
  std::array<double, kLevelCount> f1{};
  for (int i = 0; i < kLevelCount; ++i) {
    const auto level = static_cast<PrecipLevel>(i);
    const double tp = static_cast<double>(cm.at(level, level));
    const std::int64_t col = cm.col_sum(level);
    const std::int64_t row = cm.row_sum(level);
    const double precision = col > 0 ? tp / static_cast<double>(col) : 0.0;
    const double recall = row > 0 ? tp / static_cast<double>(row) : 0.0;
    f1[i] = (precision + recall) > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  }
  return f1;
}

LevelErrors mae_bias_per_level(const TensorData& predictions, const TensorData& observations,
                               const EvaluationMask& mask, const std::vector<int>& leads) {
  const SampleLayout layout = validate_inputs(predictions, observations, mask, leads);
  return errors_from(accumulate_samples(predictions, observations, layout, /*parallel=*/true));
}

double weighted_mae(const TensorData& predictions, const TensorData& observations,
                    const EvaluationMask& mask, const std::vector<int>& leads,
                    const std::array<double, kLevelCount>& weights) {
  validate_weights(weights);
  const SampleLayout layout = validate_inputs(predictions, observations, mask, leads);
  return weighted_mae_from(accumulate_samples(predictions, observations, layout, true), weights);
}

std::optional<double> spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractViolation("spearman: series lengths differ");
  const std::size_t n = a.size();
  if (n < 2) return std::nullopt;

  const auto ranks_of = [n](std::span<const double> values) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
      const double shared_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared_rank;
      i = j + 1;
    }
    return ranks;
  };

  const std::vector<double> ra = ranks_of(a);
  const std::vector<double> rb = ranks_of(b);
  const double mean = (static_cast<double>(n) + 1.0) / 2.0;  // ranks average to (n+1)/2
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = ra[i] - mean;
    const double db = rb[i] - mean;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a == 0.0 || var_b == 0.0) return std::nullopt;
  return cov / std::sqrt(var_a * var_b);
}

EvaluationReport evaluation_report(TensorData predictions, const TensorData& observations,
                                   const EvaluationOptions& options) {
  validate_weights(options.weights);
  if (options.clamp_negative_predictions) clamp_negative(predictions);
  const SampleLayout layout =
      validate_inputs(predictions, observations, options.mask, options.leads);

  EvaluationReport report;
  report.version_label = options.version_label;
  report.mask_cells = options.mask.cells;
  report.weights = options.weights;

  const auto evaluate_leads = [&](std::vector<int> leads, std::string label) {
    SampleLayout lead_layout = layout;
    lead_layout.leads = std::move(leads);
    const SampleAccumulator acc =
        accumulate_samples(predictions, observations, lead_layout, /*parallel=*/true);
    LeadEvaluation evaluation;
    evaluation.label = std::move(label);
    evaluation.leads = lead_layout.leads;
    evaluation.confusion = acc.confusion;
    evaluation.f1 = f1_per_level(acc.confusion);
    evaluation.errors = errors_from(acc);
    evaluation.weighted_mae = weighted_mae_from(acc, options.weights);
    evaluation.sample_count = acc.confusion.total();
    return evaluation;
  };

  for (int lead : layout.leads) {
    report.per_lead.push_back(evaluate_leads({lead}, "T+" + std::to_string(lead)));
  }
  report.pooled = evaluate_leads(layout.leads, "combined");
  return report;
}

namespace {

nlohmann::json json_number_or_null(double value) {
  if (std::isnan(value)) return nullptr;
  return value;
}

nlohmann::json lead_to_json(const LeadEvaluation& lead) {
  nlohmann::json entry;
  entry["label"] = lead.label;
  entry["leads"] = lead.leads;
  entry["samples"] = lead.sample_count;
  entry["weighted_mae"] = json_number_or_null(lead.weighted_mae);
  nlohmann::json confusion = nlohmann::json::array();
  for (int o = 0; o < kLevelCount; ++o) {
    nlohmann::json row = nlohmann::json::array();
    for (int p = 0; p < kLevelCount; ++p) {
      row.push_back(lead.confusion.at(static_cast<PrecipLevel>(o), static_cast<PrecipLevel>(p)));
    }
    confusion.push_back(std::move(row));
  }
  entry["confusion_matrix"] = std::move(confusion);
  for (int i = 0; i < kLevelCount; ++i) {
    const auto level = static_cast<PrecipLevel>(i);
    nlohmann::json stats;
    stats["range"] = level_range(level);
    stats["f1"] = lead.f1[i];
    stats["mae"] = json_number_or_null(lead.errors.mae[i]);
    stats["bias"] = json_number_or_null(lead.errors.bias[i]);
    stats["observed_count"] = lead.errors.count[i];
    entry["levels"][level_name(level)] = std::move(stats);
  }
  return entry;
}

std::string csv_number(double value) {
  if (std::isnan(value)) return "nan";
  std::ostringstream out;
  out.precision(10);
  out << value;
  return out.str();
}

}  // namespace

nlohmann::json report_to_json(const EvaluationReport& report) {
  nlohmann::json out;
  out["version"] = report.version_label;
  nlohmann::json mask = nlohmann::json::array();
  for (const CellIndex& cell : report.mask_cells) {
    mask.push_back(nlohmann::json::array({cell.row, cell.col}));
  }
  out["mask_cells"] = std::move(mask);
  out["weights"] = report.weights;
  nlohmann::json leads = nlohmann::json::array();
  for (const LeadEvaluation& lead : report.per_lead) leads.push_back(lead_to_json(lead));
  out["per_lead"] = std::move(leads);
  out["combined"] = lead_to_json(report.pooled);
  return out;
}

std::string report_to_csv(const EvaluationReport& report) {
  std::ostringstream out;
  out << "version,lead,level,range,f1,mae,bias,observed_count,samples,weighted_mae\n";
  const auto emit = [&](const LeadEvaluation& lead) {
    for (int i = 0; i < kLevelCount; ++i) {
      const auto level = static_cast<PrecipLevel>(i);
      out << report.version_label << ',' << lead.label << ',' << level_name(level) << ','
          << level_range(level) << ',' << csv_number(lead.f1[i]) << ','
          << csv_number(lead.errors.mae[i]) << ',' << csv_number(lead.errors.bias[i]) << ','
          << lead.errors.count[i] << ',' << lead.sample_count << ','
          << csv_number(lead.weighted_mae) << '\n';
    }
  };
  for (const LeadEvaluation& lead : report.per_lead) emit(lead);
  emit(report.pooled);
  return out.str();
}

}  // namespace gridfuse
