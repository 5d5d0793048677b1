#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "vitcod/maskgen.hpp"

namespace vitcod {

// Compressed-sparse-column index of a binary matrix. Row indices are stored
// in 16 bits, which caps n_rows at 65535 tokens.
struct CscMask {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<std::uint32_t> col_ptr;  // n_cols + 1 offsets
  std::vector<std::uint16_t> row_idx;  // col_ptr.back() entries

  std::size_t nnz() const { return row_idx.size(); }
  std::size_t column_nnz(std::size_t c) const { return col_ptr[c + 1] - col_ptr[c]; }
  std::span<const std::uint16_t> column(std::size_t c) const {
    return std::span<const std::uint16_t>(row_idx).subspan(col_ptr[c], column_nnz(c));
  }
  // Bytes occupied by the binary dump (header + offsets + indices).
  std::size_t storage_bytes() const;

  friend bool operator==(const CscMask&, const CscMask&) = default;
};

inline constexpr std::size_t kMaxCscRows = 65535;

// CSC of columns [col_begin, col_end) of `mask`.
CscMask to_csc(const BinaryMatrix& mask, std::size_t col_begin, std::size_t col_end);
inline CscMask to_csc(const BinaryMatrix& mask) { return to_csc(mask, 0, mask.cols()); }

// Throws FormatError if the CSC invariants do not hold.
void validate(const CscMask& c);

BinaryMatrix from_csc(const CscMask& c);

// Binary dump: [u32 n_rows][u32 n_cols][u32 nnz][col_ptr u32...][row_idx u16...], LE.
std::vector<std::uint8_t> encode_csc(const CscMask& c);
CscMask decode_csc(std::span<const std::uint8_t> bytes);
void write_csc(const std::filesystem::path& path, const CscMask& c);
CscMask read_csc(const std::filesystem::path& path);

// What the denser engine does with zeros inside the global-token block.
enum class DenseBlockPolicy {
  ComputeAll,  // the n x n_gt block is computed densely
  SkipZeros,   // only the mask's nonzeros in the block are computed
};

// The two workloads handed to the denser and sparser engines.
struct WorkloadSplit {
  std::size_t n = 0;
  std::size_t n_gt = 0;
  std::size_t dense_col_begin = 0;  // always 0
  std::size_t dense_col_end = 0;    // n_gt
  CscMask dense;                    // mask inside the dense block, for SkipZeros
  CscMask sparse;                   // columns [n_gt, n), local column numbering
  DenseBlockPolicy policy = DenseBlockPolicy::ComputeAll;
  std::optional<int> layer_id;
  std::optional<int> head_id;

  // Scores the denser engine computes per head.
  std::size_t dense_scores() const {
    return policy == DenseBlockPolicy::ComputeAll ? n * n_gt : dense.nnz();
  }
  std::size_t dense_mask_nnz() const { return dense.nnz(); }
  std::size_t sparse_nnz() const { return sparse.nnz(); }
  std::size_t total_scores() const { return dense_scores() + sparse_nnz(); }
  // Fraction of denser-engine work that lands on a mask nonzero.
  double dense_utilization() const;
};

WorkloadSplit split_workloads(const MaskResult& r,
                              DenseBlockPolicy policy = DenseBlockPolicy::ComputeAll);

}  // namespace vitcod
