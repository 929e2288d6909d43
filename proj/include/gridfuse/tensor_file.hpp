#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridfuse/time.hpp"
#include "gridfuse/windowing.hpp"

namespace gridfuse {

/// A dense row-major float32 tensor of arbitrary rank.
struct TensorData {
  std::vector<std::uint64_t> dims;
  std::vector<float> values;

  std::uint64_t element_count() const;
};

/// Writes `tensor` to `path` (magic STFT, version, rank, dims as u64 LE,
/// payload f32 LE row-major) and `sidecar` to `path + ".json"`.
void write_tensor_file(const TensorData& tensor, const std::string& path,
                       const nlohmann::json& sidecar);

/// Inverse of write_tensor_file; bit-exact on values. Throws FormatError on
/// a corrupted header or truncated payload.
TensorData read_tensor_file(const std::string& path);

/// Sidecar of a tensor file, or an empty object when none exists.
nlohmann::json read_tensor_sidecar(const std::string& path);

struct ExampleTensors {
  TensorData x;  // (n, lookback, rows, cols, channels)
  TensorData y;  // (n, horizon, rows, cols, 1)
  std::vector<UtcTime> t0s;
};

/// Stacks examples into the X/Y tensor pair. All examples must share the
/// shapes implied by (lookback, horizon, rows, cols); a mismatch throws
/// ContractViolation. The sequence must be non-empty.
ExampleTensors pack_examples(const std::vector<Example>& examples, int lookback, int horizon,
                             int n_rows, int n_cols);

/// Writes the X/Y pair plus sidecars carrying dataset metadata and the
/// per-example t0 instants. `base_sidecar` contributes shared fields
/// (version label, grid spec, channel names, ...).
void write_example_tensors(const ExampleTensors& tensors, const std::string& x_path,
                           const std::string& y_path, const nlohmann::json& base_sidecar);

/// Rebuilds examples from an X/Y pair written by write_example_tensors;
/// read ∘ write is the identity.
std::vector<Example> read_example_tensors(const std::string& x_path, const std::string& y_path);

}  // namespace gridfuse
