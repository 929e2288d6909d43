#include "gridfuse/tensor_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "gridfuse/errors.hpp"

namespace gridfuse {

namespace {

constexpr char kMagic[4] = {'S', 'T', 'F', 'T'};
constexpr std::uint32_t kVersion = 1;

void append_u32_le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void append_u64_le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  Reader(const std::string& buffer, const std::string& path) : buffer_(buffer), path_(path) {}

  std::uint32_t u32() {
    require(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(byte(pos_ + i)) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    require(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(byte(pos_ + i)) << (8 * i);
    pos_ += 8;
    return v;
  }

  float f32() {
    return std::bit_cast<float>(u32());
  }

  void expect_magic() {
    require(4);
    if (std::memcmp(buffer_.data(), kMagic, 4) != 0) {
      throw FormatError(path_ + ": missing STFT magic");
    }
    pos_ += 4;
  }

  std::size_t remaining() const { return buffer_.size() - pos_; }

 private:
  unsigned char byte(std::size_t i) const { return static_cast<unsigned char>(buffer_[i]); }

  void require(std::size_t n) const {
    if (pos_ + n > buffer_.size()) throw FormatError(path_ + ": truncated tensor file");
  }

  const std::string& buffer_;
  const std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint64_t TensorData::element_count() const {
  std::uint64_t n = 1;
  for (std::uint64_t d : dims) n *= d;
  return dims.empty() ? 0 : n;
}

void write_tensor_file(const TensorData& tensor, const std::string& path,
                       const nlohmann::json& sidecar) {
  if (tensor.values.size() != tensor.element_count()) {
    throw ContractViolation("tensor payload length " + std::to_string(tensor.values.size()) +
                            " does not match dimensions (" +
                            std::to_string(tensor.element_count()) + " elements)");
  }

  std::string buffer;
  buffer.reserve(16 + tensor.dims.size() * 8 + tensor.values.size() * 4);
  buffer.append(kMagic, 4);
  append_u32_le(buffer, kVersion);
  append_u32_le(buffer, static_cast<std::uint32_t>(tensor.dims.size()));
  for (std::uint64_t d : tensor.dims) append_u64_le(buffer, d);
  for (float v : tensor.values) append_u32_le(buffer, std::bit_cast<std::uint32_t>(v));

  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  if (!out) throw FormatError("short write to " + path);

  std::ofstream sidecar_out(path + ".json");
  if (!sidecar_out) throw FormatError("cannot write " + path + ".json");
  sidecar_out << sidecar.dump(2) << '\n';
}

TensorData read_tensor_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::string buffer((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  Reader reader(buffer, path);
  reader.expect_magic();
  const std::uint32_t version = reader.u32();
  if (version != kVersion) {
    throw FormatError(path + ": unsupported tensor format version " + std::to_string(version));
  }
  const std::uint32_t rank = reader.u32();
  if (rank == 0 || rank > 16) {
    throw FormatError(path + ": implausible tensor rank " + std::to_string(rank));
  }
  TensorData tensor;
  tensor.dims.resize(rank);
  for (std::uint32_t i = 0; i < rank; ++i) tensor.dims[i] = reader.u64();

  const std::uint64_t count = tensor.element_count();
  if (reader.remaining() != count * 4) {
    throw FormatError(path + ": payload holds " + std::to_string(reader.remaining() / 4) +
                      " values, header requires " + std::to_string(count));
  }
  tensor.values.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) tensor.values[i] = reader.f32();
  return tensor;
}

nlohmann::json read_tensor_sidecar(const std::string& path) {
  std::ifstream in(path + ".json");
  if (!in) return nlohmann::json::object();
  nlohmann::json sidecar;
  try {
    in >> sidecar;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ".json: " + e.what());
  }
  return sidecar;
}

ExampleTensors pack_examples(const std::vector<Example>& examples, int lookback, int horizon,
                             int n_rows, int n_cols) {
  if (examples.empty()) throw ContractViolation("pack_examples: empty example sequence");
  const std::size_t x_size = static_cast<std::size_t>(lookback) * n_rows * n_cols *
                             kFeatureChannelCount;
  const std::size_t y_size = static_cast<std::size_t>(horizon) * n_rows * n_cols;

  ExampleTensors tensors;
  tensors.x.dims = {examples.size(), static_cast<std::uint64_t>(lookback),
                    static_cast<std::uint64_t>(n_rows), static_cast<std::uint64_t>(n_cols),
                    static_cast<std::uint64_t>(kFeatureChannelCount)};
  tensors.y.dims = {examples.size(), static_cast<std::uint64_t>(horizon),
                    static_cast<std::uint64_t>(n_rows), static_cast<std::uint64_t>(n_cols), 1};
  tensors.x.values.reserve(examples.size() * x_size);
  tensors.y.values.reserve(examples.size() * y_size);
  tensors.t0s.reserve(examples.size());
  for (const Example& example : examples) {
    if (example.x.size() != x_size || example.y.size() != y_size) {
      throw ContractViolation("pack_examples: example at " + format_iso8601_utc(example.t0) +
                              " has inconsistent shape");
    }
    tensors.x.values.insert(tensors.x.values.end(), example.x.begin(), example.x.end());
    tensors.y.values.insert(tensors.y.values.end(), example.y.begin(), example.y.end());
    tensors.t0s.push_back(example.t0);
  }
  return tensors;
}

void write_example_tensors(const ExampleTensors& tensors, const std::string& x_path,
                           const std::string& y_path, const nlohmann::json& base_sidecar) {
  nlohmann::json t0s = nlohmann::json::array();
  for (UtcTime t0 : tensors.t0s) t0s.push_back(format_iso8601_utc(t0));

  nlohmann::json x_sidecar = base_sidecar;
  x_sidecar["kind"] = "features";
  x_sidecar["dims"] = tensors.x.dims;
  x_sidecar["t0_iso8601_utc"] = t0s;
  write_tensor_file(tensors.x, x_path, x_sidecar);

  nlohmann::json y_sidecar = base_sidecar;
  y_sidecar["kind"] = "targets";
  y_sidecar["dims"] = tensors.y.dims;
  y_sidecar["t0_iso8601_utc"] = std::move(t0s);
  write_tensor_file(tensors.y, y_path, y_sidecar);
}

std::vector<Example> read_example_tensors(const std::string& x_path, const std::string& y_path) {
  const TensorData x = read_tensor_file(x_path);
  const TensorData y = read_tensor_file(y_path);
  if (x.dims.size() != 5 || y.dims.size() != 5) {
    throw FormatError("example tensors must be rank 5");
  }
  if (x.dims[0] != y.dims[0]) {
    throw FormatError("X holds " + std::to_string(x.dims[0]) + " examples, Y holds " +
                      std::to_string(y.dims[0]));
  }
  if (x.dims[2] != y.dims[2] || x.dims[3] != y.dims[3]) {
    throw FormatError("X and Y disagree on grid dimensions");
  }
  if (y.dims[4] != 1) throw FormatError("Y must have exactly one channel");

  const nlohmann::json sidecar = read_tensor_sidecar(x_path);
  std::vector<UtcTime> t0s;
  if (sidecar.contains("t0_iso8601_utc")) {
    for (const auto& text : sidecar.at("t0_iso8601_utc")) {
      const auto parsed = parse_iso8601(text.get<std::string>());
      if (!parsed) throw FormatError(x_path + ".json: unparseable t0 entry");
      t0s.push_back(parsed->when);
    }
    if (t0s.size() != x.dims[0]) {
      throw FormatError(x_path + ".json: t0 list length does not match example count");
    }
  }

  const std::size_t n = x.dims[0];
  const std::size_t x_size = x.element_count() / n;
  const std::size_t y_size = y.element_count() / n;
  std::vector<Example> examples(n);
  for (std::size_t i = 0; i < n; ++i) {
    examples[i].t0 = t0s.empty() ? UtcTime{0} : t0s[i];
    examples[i].x.assign(x.values.begin() + static_cast<std::ptrdiff_t>(i * x_size),
                         x.values.begin() + static_cast<std::ptrdiff_t>((i + 1) * x_size));
    examples[i].y.assign(y.values.begin() + static_cast<std::ptrdiff_t>(i * y_size),
                         y.values.begin() + static_cast<std::ptrdiff_t>((i + 1) * y_size));
  }
  return examples;
}

}  // namespace gridfuse
