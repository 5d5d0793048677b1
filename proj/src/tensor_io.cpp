#include "vitcod/tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>
#include <string>
#include <string_view>

#include "vitcod/errors.hpp"
#include "vitcod/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "array files are read by reinterpretation; big-endian hosts unsupported");

namespace vitcod {

namespace {

constexpr std::string_view kMagic = "\x93NUMPY";
constexpr std::size_t kPreludeBytes = 10;  // magic(6) + version(2) + header_len(2)
constexpr std::size_t kAlign = 64;
constexpr std::size_t kMaxRank = 4;

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

// Minimal reader for the python dict literal found in .npy headers.
class HeaderParser {
 public:
  explicit HeaderParser(std::string_view text) : text_(text) {}

  struct Fields {
    std::string descr;
    bool fortran_order = false;
    std::vector<std::size_t> shape;
  };

  Fields parse() {
    Fields out;
    bool seen_descr = false, seen_order = false, seen_shape = false;
    expect('{');
    while (true) {
      skip_ws();
      if (peek() == '}') {
        ++pos_;
        break;
      }
      const std::string key = quoted();
      expect(':');
      if (key == "descr") {
        out.descr = quoted();
        seen_descr = true;
      } else if (key == "fortran_order") {
        out.fortran_order = boolean();
        seen_order = true;
      } else if (key == "shape") {
        out.shape = tuple();
        seen_shape = true;
      } else {
        throw FormatError("array header: unexpected key '" + key + "'");
      }
      skip_ws();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() != '}') {
        throw FormatError("array header: expected ',' or '}'");
      }
    }
    skip_ws();
    if (pos_ != text_.size()) throw FormatError("array header: trailing characters");
    if (!(seen_descr && seen_order && seen_shape)) {
      throw FormatError("array header: missing descr, fortran_order or shape");
    }
    return out;
  }

 private:
  char peek() const {
    if (pos_ >= text_.size()) throw FormatError("array header: unexpected end");
    return text_[pos_];
  }
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  void expect(char c) {
    skip_ws();
    if (peek() != c) throw FormatError(std::string("array header: expected '") + c + "'");
    ++pos_;
  }
  std::string quoted() {
    skip_ws();
    const char q = peek();
    if (q != '\'' && q != '"') throw FormatError("array header: expected quoted string");
    const auto end = text_.find(q, pos_ + 1);
    if (end == std::string_view::npos) throw FormatError("array header: unterminated string");
    std::string s(text_.substr(pos_ + 1, end - pos_ - 1));
    pos_ = end + 1;
    return s;
  }
  bool boolean() {
    skip_ws();
    if (text_.substr(pos_, 4) == "True") {
      pos_ += 4;
      return true;
    }
    if (text_.substr(pos_, 5) == "False") {
      pos_ += 5;
      return false;
    }
    throw FormatError("array header: expected True or False");
  }
  std::vector<std::size_t> tuple() {
    std::vector<std::size_t> dims;
    expect('(');
    while (true) {
      skip_ws();
      if (peek() == ')') {
        ++pos_;
        return dims;
      }
      if (!std::isdigit(static_cast<unsigned char>(peek()))) {
        throw FormatError("array header: shape entries must be integers");
      }
      std::size_t v = 0;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        v = v * 10 + static_cast<std::size_t>(text_[pos_] - '0');
        ++pos_;
      }
      dims.push_back(v);
      skip_ws();
      if (peek() == ',') ++pos_;
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

std::string shape_repr(const std::vector<std::size_t>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  if (shape.size() == 1) s += ",";
  return s + ")";
}

void check_shape(const std::vector<std::size_t>& shape) {
  if (shape.empty() || shape.size() > kMaxRank) {
    throw ArgumentError("tensor rank must be between 1 and 4, got " + std::to_string(shape.size()));
  }
  for (auto d : shape) {
    if (d == 0) throw ArgumentError("tensor dimensions must be positive");
  }
}

}  // namespace

DenseTensor::DenseTensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  if (shape_product(shape_) != data_.size()) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_repr(shape_));
  }
  for (double v : data_) {
    if (!std::isfinite(v)) throw DomainError("tensor contains a non-finite entry");
  }
}

AttentionMap::AttentionMap(std::size_t n, std::vector<double> scores,
                           std::optional<int> layer_id, std::optional<int> head_id)
    : n_(n), scores_(std::move(scores)), layer_id_(layer_id), head_id_(head_id) {
  if (n_ == 0) throw ArgumentError("attention map needs at least one token");
  if (scores_.size() != n_ * n_) throw ShapeError("attention map must be n x n");
  for (std::size_t r = 0; r < n_; ++r) {
    double sum = 0.0;
    for (double v : row(r)) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw DomainError("attention scores must be finite and nonnegative");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      throw DomainError("attention row " + std::to_string(r) + " sums to " +
                        std::to_string(sum) + ", expected 1");
    }
  }
}

DenseTensor parse_array(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kPreludeBytes ||
      std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw FormatError("not an array file: bad magic");
  }
  const std::uint8_t major = bytes[6], minor = bytes[7];
  if (major != 1 || minor != 0) {
    throw UnsupportedError("array file version " + std::to_string(major) + "." +
                           std::to_string(minor) + " unsupported (only 1.0)");
  }
  const std::size_t header_len = bytes[8] | (static_cast<std::size_t>(bytes[9]) << 8);
  if (bytes.size() < kPreludeBytes + header_len) throw FormatError("array header truncated");
  const std::string_view header(reinterpret_cast<const char*>(bytes.data()) + kPreludeBytes,
                                header_len);
  const auto fields = HeaderParser(header).parse();

  std::size_t elem = 0;
  if (fields.descr == "<f8") {
    elem = 8;
  } else if (fields.descr == "<f4") {
    elem = 4;
  } else {
    throw UnsupportedError("element type '" + fields.descr + "' unsupported (only <f4, <f8)");
  }
  if (fields.fortran_order) throw UnsupportedError("fortran-ordered arrays unsupported");
  if (fields.shape.empty() || fields.shape.size() > kMaxRank) {
    throw UnsupportedError("array rank " + std::to_string(fields.shape.size()) +
                           " unsupported (1..4)");
  }
  for (auto d : fields.shape) {
    if (d == 0) throw UnsupportedError("empty arrays unsupported");
  }

  const std::size_t count = shape_product(fields.shape);
  const auto payload = bytes.subspan(kPreludeBytes + header_len);
  if (payload.size() < count * elem) {
    throw CorruptionError("array payload holds " + std::to_string(payload.size() / elem) +
                          " elements, header declares " + std::to_string(count));
  }
  if (payload.size() > count * elem) {
    throw CorruptionError("array payload has trailing bytes");
  }

  std::vector<double> data(count);
  if (elem == 8) {
    std::memcpy(data.data(), payload.data(), count * 8);
  } else {
    std::vector<float> tmp(count);
    std::memcpy(tmp.data(), payload.data(), count * 4);
    std::copy(tmp.begin(), tmp.end(), data.begin());
  }
  return DenseTensor(fields.shape, std::move(data));
}

DenseTensor load_array(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return parse_array(bytes);
}

std::vector<std::uint8_t> encode_array(const DenseTensor& tensor, ElementType type) {
  std::string header = "{'descr': '";
  header += type == ElementType::F8 ? "<f8" : "<f4";
  header += "', 'fortran_order': False, 'shape': " + shape_repr(tensor.shape()) + ", }";
  // Pad with spaces so data starts on a 64-byte boundary, newline last.
  const std::size_t unpadded = kPreludeBytes + header.size() + 1;
  header.append((kAlign - unpadded % kAlign) % kAlign, ' ');
  header.push_back('\n');

  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  out.push_back(1);
  out.push_back(0);
  out.push_back(static_cast<std::uint8_t>(header.size() & 0xff));
  out.push_back(static_cast<std::uint8_t>(header.size() >> 8));
  out.insert(out.end(), header.begin(), header.end());

  const auto data = tensor.data();
  if (type == ElementType::F8) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(data.data());
    out.insert(out.end(), p, p + data.size() * 8);
  } else {
    std::vector<float> tmp(data.begin(), data.end());
    const auto* p = reinterpret_cast<const std::uint8_t*>(tmp.data());
    out.insert(out.end(), p, p + tmp.size() * 4);
  }
  return out;
}

void write_array(const std::filesystem::path& path, const DenseTensor& tensor,
                 ElementType type) {
  const auto bytes = encode_array(tensor, type);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

namespace {

AttentionMap normalize_block(std::span<const double> block, std::size_t n,
                             std::optional<int> layer, std::optional<int> head) {
  std::vector<double> out(block.begin(), block.end());
  for (std::size_t r = 0; r < n; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      const double v = out[r * n + c];
      if (v < 0.0) throw DomainError("row_normalize: negative entry in row " + std::to_string(r));
      sum += v;
    }
    if (!(sum > 0.0)) throw DomainError("row_normalize: row " + std::to_string(r) + " sums to zero");
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] /= sum;
  }
  return AttentionMap(n, std::move(out), layer, head);
}

}  // namespace

AttentionMap row_normalize(const DenseTensor& raw) {
  if (raw.rank() != 2 || raw.shape()[0] != raw.shape()[1]) {
    throw ShapeError("row_normalize expects a square matrix");
  }
  return normalize_block(raw.data(), raw.shape()[0], std::nullopt, std::nullopt);
}

std::vector<AttentionMap> attention_maps_from(const DenseTensor& tensor) {
  const auto& s = tensor.shape();
  if (s.size() < 2 || s[s.size() - 1] != s[s.size() - 2]) {
    throw ShapeError("attention tensors must end in two equal axes (n x n)");
  }
  const std::size_t n = s.back();
  const std::size_t layers = s.size() == 4 ? s[0] : 1;
  const std::size_t heads = s.size() >= 3 ? s[s.size() - 3] : 1;
  std::vector<AttentionMap> maps;
  maps.reserve(layers * heads);
  for (std::size_t l = 0; l < layers; ++l) {
    for (std::size_t h = 0; h < heads; ++h) {
      const auto block = tensor.data().subspan((l * heads + h) * n * n, n * n);
      std::optional<int> layer_id, head_id;
      if (s.size() == 4) layer_id = static_cast<int>(l);
      if (s.size() >= 3) head_id = static_cast<int>(h);
      maps.push_back(normalize_block(block, n, layer_id, head_id));
    }
  }
  return maps;
}

DenseTensor to_tensor(const AttentionMap& map) {
  return DenseTensor({map.n(), map.n()}, {map.scores().begin(), map.scores().end()});
}

std::pair<std::size_t, std::size_t> band_columns(std::size_t n, std::size_t diag_width,
                                                 std::size_t row) {
  const auto half = static_cast<long long>((diag_width - 1) / 2);
  const long long lo = static_cast<long long>(row) - half;
  const long long hi = lo + static_cast<long long>(diag_width) - 1;
  return {static_cast<std::size_t>(std::max(0LL, lo)),
          static_cast<std::size_t>(std::min(static_cast<long long>(n) - 1, hi))};
}

AttentionMap gen_synthetic_attention(std::size_t n, std::size_t n_global,
                                     std::size_t diag_width, double noise,
                                     std::uint64_t seed) {
  constexpr double kGlobalWeight = 0.4;
  constexpr double kBandWeight = 0.55;
  if (n == 0) throw ArgumentError("synthetic attention: n must be positive");
  if (n_global >= n) throw ArgumentError("synthetic attention: n_global must be < n");
  if (diag_width < 1 || diag_width > n) {
    throw ArgumentError("synthetic attention: diag_width must be in [1, n]");
  }
  if (!(noise >= 0.0 && noise <= 1.0)) {
    throw ArgumentError("synthetic attention: noise must be in [0, 1]");
  }

  Rng rng(seed);
  std::vector<double> raw(n * n, 0.0);
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) {
    double* row = raw.data() + i * n;
    for (std::size_t j = 0; j < n_global; ++j) row[j] += kGlobalWeight / static_cast<double>(n_global);

    // Band mass decays as 1/(1+|i-j|) away from the diagonal.
    const auto [lo, hi] = band_columns(n, diag_width, i);
    double band_norm = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) {
      band_norm += 1.0 / (1.0 + std::abs(static_cast<double>(i) - static_cast<double>(j)));
    }
    for (std::size_t j = lo; j <= hi; ++j) {
      const double w = 1.0 / (1.0 + std::abs(static_cast<double>(i) - static_cast<double>(j)));
      row[j] += kBandWeight * w / band_norm;
    }

    if (noise > 0.0) {
      double usum = 0.0;
      for (auto& x : u) {
        x = rng.uniform();
        usum += x;
      }
      for (std::size_t j = 0; j < n; ++j) row[j] += noise * u[j] / usum;
    }
  }
  return row_normalize(DenseTensor({n, n}, std::move(raw)));
}

}  // namespace vitcod
