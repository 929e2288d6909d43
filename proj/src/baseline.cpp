#include "gridfuse/baseline.hpp"

#include "gridfuse/errors.hpp"
#include "gridfuse/fusion.hpp"

namespace gridfuse {

namespace {

void check_example_shape(const Example& example, const ExampleShape& shape) {
  const std::size_t grid = static_cast<std::size_t>(shape.n_rows) * shape.n_cols;
  if (example.x.size() != grid * shape.lookback * kFeatureChannelCount ||
      example.y.size() != grid * shape.horizon) {
    throw ContractViolation("example does not match the declared shape");
  }
}

}  // namespace

std::vector<float> persistence_forecast(const Example& example, const ExampleShape& shape) {
  check_example_shape(example, shape);
  const std::size_t grid = static_cast<std::size_t>(shape.n_rows) * shape.n_cols;

  // Precipitation channel of the last input step.
  std::vector<float> last_grid(grid);
  const std::size_t step_base =
      static_cast<std::size_t>(shape.lookback - 1) * grid * kFeatureChannelCount;
  for (std::size_t cell = 0; cell < grid; ++cell) {
    last_grid[cell] = example.x[step_base + cell * kFeatureChannelCount];
  }

  std::vector<float> forecast;
  forecast.reserve(grid * shape.horizon);
  for (int lead = 0; lead < shape.horizon; ++lead) {
    forecast.insert(forecast.end(), last_grid.begin(), last_grid.end());
  }
  return forecast;
}

ClimatologyTable::ClimatologyTable(int n_rows, int n_cols)
    : n_rows_(n_rows),
      n_cols_(n_cols),
      means_(static_cast<std::size_t>(n_rows) * n_cols * 24, 0.0) {}

ClimatologyTable fit_climatology(const std::vector<Example>& training_examples,
                                 const ExampleShape& shape) {
  if (training_examples.empty()) {
    throw ConfigError("fit_climatology: empty training set");
  }
  ClimatologyTable table(shape.n_rows, shape.n_cols);
  std::vector<std::int64_t> counts(table.means_.size(), 0);
  std::vector<double> sums(table.means_.size(), 0.0);
  const std::size_t grid = static_cast<std::size_t>(shape.n_rows) * shape.n_cols;

  for (const Example& example : training_examples) {
    check_example_shape(example, shape);
    for (int lead = 1; lead <= shape.horizon; ++lead) {
      const int hour = hour_of_day(example.t0.plus_hours(lead));
      const std::size_t step_base = static_cast<std::size_t>(lead - 1) * grid;
      for (std::size_t cell = 0; cell < grid; ++cell) {
        const std::size_t slot = cell * 24 + static_cast<std::size_t>(hour);
        sums[slot] += example.y[step_base + cell];
        counts[slot]++;
      }
    }
  }
  for (std::size_t slot = 0; slot < sums.size(); ++slot) {
    if (counts[slot] > 0) table.means_[slot] = sums[slot] / static_cast<double>(counts[slot]);
  }
  return table;
}

std::vector<float> climatology_forecast(const ClimatologyTable& table, UtcTime t0, int horizon) {
  const std::size_t grid = static_cast<std::size_t>(table.n_rows()) * table.n_cols();
  std::vector<float> forecast;
  forecast.reserve(grid * static_cast<std::size_t>(horizon));
  for (int lead = 1; lead <= horizon; ++lead) {
    const int hour = hour_of_day(t0.plus_hours(lead));
    for (int row = 0; row < table.n_rows(); ++row) {
      for (int col = 0; col < table.n_cols(); ++col) {
        forecast.push_back(static_cast<float>(table.at(row, col, hour)));
      }
    }
  }
  return forecast;
}

namespace {

TensorData predictions_tensor(const std::vector<Example>& examples, const ExampleShape& shape) {
  TensorData tensor;
  tensor.dims = {examples.size(), static_cast<std::uint64_t>(shape.horizon),
                 static_cast<std::uint64_t>(shape.n_rows),
                 static_cast<std::uint64_t>(shape.n_cols), 1};
  tensor.values.reserve(tensor.element_count());
  return tensor;
}

}  // namespace

TensorData persistence_predictions(const std::vector<Example>& examples,
                                   const ExampleShape& shape) {
  TensorData tensor = predictions_tensor(examples, shape);
  for (const Example& example : examples) {
    const auto forecast = persistence_forecast(example, shape);
    tensor.values.insert(tensor.values.end(), forecast.begin(), forecast.end());
  }
  return tensor;
}

TensorData climatology_predictions(const ClimatologyTable& table,
                                   const std::vector<Example>& examples,
                                   const ExampleShape& shape) {
  TensorData tensor = predictions_tensor(examples, shape);
  for (const Example& example : examples) {
    const auto forecast = climatology_forecast(table, example.t0, shape.horizon);
    tensor.values.insert(tensor.values.end(), forecast.begin(), forecast.end());
  }
  return tensor;
}

}  // namespace gridfuse
