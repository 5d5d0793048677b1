#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace vitcod {

// Row-major tensor of up to four axes (layer, head, row, col).
class DenseTensor {
 public:
  DenseTensor() = default;
  // Throws ShapeError if data.size() != product(shape), DomainError on
  // non-finite entries, ArgumentError on a zero/oversized shape.
  DenseTensor(std::vector<std::size_t> shape, std::vector<double> data);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::span<const double> data() const { return data_; }
  std::size_t size() const { return data_.size(); }
  std::size_t rank() const { return shape_.size(); }

  friend bool operator==(const DenseTensor&, const DenseTensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

// n x n nonnegative score matrix whose rows each sum to one.
class AttentionMap {
 public:
  static constexpr double kRowSumTolerance = 1e-6;

  AttentionMap() = default;
  // Validates the invariants; throws DomainError when they do not hold.
  AttentionMap(std::size_t n, std::vector<double> scores,
               std::optional<int> layer_id = std::nullopt,
               std::optional<int> head_id = std::nullopt);

  std::size_t n() const { return n_; }
  double at(std::size_t row, std::size_t col) const { return scores_[row * n_ + col]; }
  std::span<const double> scores() const { return scores_; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(scores_).subspan(r * n_, n_);
  }
  std::optional<int> layer_id() const { return layer_id_; }
  std::optional<int> head_id() const { return head_id_; }

  friend bool operator==(const AttentionMap&, const AttentionMap&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> scores_;
  std::optional<int> layer_id_;
  std::optional<int> head_id_;
};

enum class ElementType { F4, F8 };

// Reads the restricted .npy subset: v1.0, '<f4' or '<f8', C order, <= 4 dims.
DenseTensor load_array(const std::filesystem::path& path);
DenseTensor parse_array(std::span<const std::uint8_t> bytes);

// Emits the same subset with numpy's canonical header layout.
void write_array(const std::filesystem::path& path, const DenseTensor& tensor,
                 ElementType type = ElementType::F8);
std::vector<std::uint8_t> encode_array(const DenseTensor& tensor,
                                       ElementType type = ElementType::F8);

// Divides every row by its sum. Negative entries or zero rows are domain errors.
AttentionMap row_normalize(const DenseTensor& raw);

// Splits a 2-, 3- or 4-axis tensor into its trailing n x n maps, normalising
// each. Layer/head ids are attached from the leading axes.
std::vector<AttentionMap> attention_maps_from(const DenseTensor& tensor);

DenseTensor to_tensor(const AttentionMap& map);

// Synthetic map with global-token columns, a diagonal band and uniform noise.
// Deterministic for a fixed seed.
AttentionMap gen_synthetic_attention(std::size_t n, std::size_t n_global,
                                     std::size_t diag_width, double noise,
                                     std::uint64_t seed);

// Column range [lo, hi] of the diagonal band for row `row`.
std::pair<std::size_t, std::size_t> band_columns(std::size_t n, std::size_t diag_width,
                                                 std::size_t row);

}  // namespace vitcod
