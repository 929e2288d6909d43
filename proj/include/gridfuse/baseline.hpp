#pragma once

#include <vector>

#include "gridfuse/tensor_file.hpp"
#include "gridfuse/time.hpp"
#include "gridfuse/windowing.hpp"

namespace gridfuse {

struct ExampleShape {
  int lookback = 0;
  int horizon = 0;
  int n_rows = 0;
  int n_cols = 0;
};

/// Repeats the last input step's precipitation channel across every lead.
/// Returns horizon * rows * cols values in Y layout.
std::vector<float> persistence_forecast(const Example& example, const ExampleShape& shape);

/// Per-cell, per-hour-of-day mean precipitation estimated from training
/// targets only. Cells and hours never observed in training default to 0.
class ClimatologyTable {
 public:
  ClimatologyTable(int n_rows, int n_cols);

  double at(int row, int col, int hour_of_day) const {
    return means_[(static_cast<std::size_t>(row) * n_cols_ + col) * 24 + hour_of_day];
  }

  int n_rows() const { return n_rows_; }
  int n_cols() const { return n_cols_; }

 private:
  friend ClimatologyTable fit_climatology(const std::vector<Example>&, const ExampleShape&);

  int n_rows_;
  int n_cols_;
  std::vector<double> means_;  // [row][col][hour]
};

/// Throws ConfigError on an empty training set.
ClimatologyTable fit_climatology(const std::vector<Example>& training_examples,
                                 const ExampleShape& shape);

/// Forecast for the horizon following t0, independent of the example's X.
std::vector<float> climatology_forecast(const ClimatologyTable& table, UtcTime t0, int horizon);

/// Prediction tensors shaped like the observation tensor, for the metrics
/// pipeline and the tensor interchange format.
TensorData persistence_predictions(const std::vector<Example>& examples,
                                   const ExampleShape& shape);
TensorData climatology_predictions(const ClimatologyTable& table,
                                   const std::vector<Example>& examples,
                                   const ExampleShape& shape);

}  // namespace gridfuse
