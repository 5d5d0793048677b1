#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "vitcod/tensor_io.hpp"

namespace vitcod {

// Dense row-major 0/1 matrix.
class BinaryMatrix {
 public:
  BinaryMatrix() = default;
  BinaryMatrix(std::size_t rows, std::size_t cols, std::uint8_t fill = 0)
      : rows_(rows), cols_(cols), bits_(rows * cols, fill) {}

  static BinaryMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool at(std::size_t r, std::size_t c) const { return bits_[r * cols_ + c] != 0; }
  void set(std::size_t r, std::size_t c, bool v = true) { bits_[r * cols_ + c] = v ? 1 : 0; }
  std::span<const std::uint8_t> bits() const { return bits_; }

  std::size_t nnz() const;
  std::vector<std::size_t> column_counts() const;

  friend bool operator==(const BinaryMatrix&, const BinaryMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

enum class PruneMode {
  PerQuery,  // accumulate each row separately up to theta_p
  WholeMap,  // accumulate the flattened map up to theta_p * n
};

// Keeps, per row (or over the whole map), the largest scores until their
// running sum first reaches the threshold. Ties go to the lower index.
BinaryMatrix prune_mask(const AttentionMap& a, double theta_p,
                        PruneMode mode = PruneMode::PerQuery);

struct ReorderResult {
  std::vector<std::size_t> perm;  // output column j is input column perm[j]
  std::size_t n_gt = 0;
  BinaryMatrix mask;              // permuted support of mask (.) A
  std::vector<double> scores;     // permuted mask (.) A, row-major n x n
};

// Moves columns whose nonzero count in (mask (.) A) exceeds theta_d to the
// front using the literal swap sequence of the split-and-conquer reordering.
// With permute_rows the same permutation is applied to rows as well.
ReorderResult reorder(const AttentionMap& a, const BinaryMatrix& mask, std::size_t theta_d,
                      bool permute_rows = false);

struct MaskResult {
  std::size_t n = 0;
  BinaryMatrix mask;
  std::vector<std::size_t> perm;
  std::size_t n_gt = 0;
  double theta_p = 1.0;
  std::size_t theta_d = 0;
  PruneMode mode = PruneMode::PerQuery;
  bool rows_permuted = false;
  // m (.) A' in row-major order. Empty when the result was loaded from JSON.
  std::vector<double> reordered_scores;
  std::optional<int> layer_id;
  std::optional<int> head_id;
};

struct SplitOptions {
  PruneMode mode = PruneMode::PerQuery;
  bool permute_rows = false;
};

MaskResult split_and_conquer(const AttentionMap& a, double theta_p, std::size_t theta_d,
                             SplitOptions options = {});

// Fraction of zero entries.
double sparsity(const BinaryMatrix& mask);

// Smallest theta_p (to 1e-9) whose mask has sparsity <= target, i.e. keeps at
// least (1 - target) of the entries. Bisection on the monotone nnz(theta_p).
double theta_for_sparsity(const AttentionMap& a, double target_sparsity,
                          PruneMode mode = PruneMode::PerQuery);

// Throws DomainError naming the first violated MaskResult invariant.
void check_invariants(const MaskResult& r);

}  // namespace vitcod
