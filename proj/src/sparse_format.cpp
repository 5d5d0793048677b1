#include "vitcod/sparse_format.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "vitcod/errors.hpp"

namespace vitcod {

std::size_t CscMask::storage_bytes() const {
  return 3 * sizeof(std::uint32_t) + col_ptr.size() * sizeof(std::uint32_t) +
         row_idx.size() * sizeof(std::uint16_t);
}

CscMask to_csc(const BinaryMatrix& mask, std::size_t col_begin, std::size_t col_end) {
  if (col_begin > col_end || col_end > mask.cols()) {
    throw ArgumentError("to_csc: column range [" + std::to_string(col_begin) + ", " +
                        std::to_string(col_end) + ") outside 0.." + std::to_string(mask.cols()));
  }
  if (mask.rows() > kMaxCscRows) {
    throw ArgumentError("to_csc: 16-bit row indices cap the matrix at 65535 rows");
  }
  CscMask c;
  c.n_rows = mask.rows();
  c.n_cols = col_end - col_begin;
  c.col_ptr.reserve(c.n_cols + 1);
  c.col_ptr.push_back(0);
  for (std::size_t col = col_begin; col < col_end; ++col) {
    for (std::size_t r = 0; r < mask.rows(); ++r) {
      if (mask.at(r, col)) c.row_idx.push_back(static_cast<std::uint16_t>(r));
    }
    c.col_ptr.push_back(static_cast<std::uint32_t>(c.row_idx.size()));
  }
  return c;
}

void validate(const CscMask& c) {
  if (c.col_ptr.size() != c.n_cols + 1) throw FormatError("csc: col_ptr must have n_cols+1 entries");
  if (c.col_ptr.front() != 0) throw FormatError("csc: col_ptr[0] must be 0");
  for (std::size_t i = 0; i < c.n_cols; ++i) {
    if (c.col_ptr[i + 1] < c.col_ptr[i]) {
      throw FormatError("csc: col_ptr decreases at column " + std::to_string(i));
    }
  }
  if (c.col_ptr.back() != c.row_idx.size()) {
    throw FormatError("csc: col_ptr[n_cols] does not match row_idx length");
  }
  for (std::size_t col = 0; col < c.n_cols; ++col) {
    for (std::size_t k = c.col_ptr[col]; k < c.col_ptr[col + 1]; ++k) {
      if (c.row_idx[k] >= c.n_rows) throw FormatError("csc: row index out of range");
      if (k > c.col_ptr[col] && c.row_idx[k] <= c.row_idx[k - 1]) {
        throw FormatError("csc: row indices not strictly increasing in column " +
                          std::to_string(col));
      }
    }
  }
}

BinaryMatrix from_csc(const CscMask& c) {
  validate(c);
  BinaryMatrix m(c.n_rows, c.n_cols);
  for (std::size_t col = 0; col < c.n_cols; ++col) {
    for (auto r : c.column(col)) m.set(r, col);
  }
  return m;
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | static_cast<std::uint32_t>(b[at + 1]) << 8 |
         static_cast<std::uint32_t>(b[at + 2]) << 16 | static_cast<std::uint32_t>(b[at + 3]) << 24;
}

}  // namespace

std::vector<std::uint8_t> encode_csc(const CscMask& c) {
  std::vector<std::uint8_t> out;
  out.reserve(c.storage_bytes());
  put_u32(out, static_cast<std::uint32_t>(c.n_rows));
  put_u32(out, static_cast<std::uint32_t>(c.n_cols));
  put_u32(out, static_cast<std::uint32_t>(c.nnz()));
  for (auto p : c.col_ptr) put_u32(out, p);
  for (auto r : c.row_idx) {
    out.push_back(static_cast<std::uint8_t>(r & 0xff));
    out.push_back(static_cast<std::uint8_t>(r >> 8));
  }
  return out;
}

CscMask decode_csc(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12) throw CorruptionError("csc dump shorter than its header");
  CscMask c;
  c.n_rows = get_u32(bytes, 0);
  c.n_cols = get_u32(bytes, 4);
  const std::size_t nnz = get_u32(bytes, 8);
  const std::size_t expected = 12 + 4 * (c.n_cols + 1) + 2 * nnz;
  if (bytes.size() != expected) {
    throw CorruptionError("csc dump is " + std::to_string(bytes.size()) + " bytes, header implies " +
                          std::to_string(expected));
  }
  c.col_ptr.resize(c.n_cols + 1);
  for (std::size_t i = 0; i <= c.n_cols; ++i) c.col_ptr[i] = get_u32(bytes, 12 + 4 * i);
  c.row_idx.resize(nnz);
  const std::size_t base = 12 + 4 * (c.n_cols + 1);
  for (std::size_t i = 0; i < nnz; ++i) {
    c.row_idx[i] = static_cast<std::uint16_t>(bytes[base + 2 * i] | (bytes[base + 2 * i + 1] << 8));
  }
  validate(c);
  return c;
}

void write_csc(const std::filesystem::path& path, const CscMask& c) {
  const auto bytes = encode_csc(c);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

CscMask read_csc(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_csc(bytes);
}

double WorkloadSplit::dense_utilization() const {
  const std::size_t computed = dense_scores();
  if (computed == 0) return 1.0;
  return static_cast<double>(dense_mask_nnz()) / static_cast<double>(computed);
}

WorkloadSplit split_workloads(const MaskResult& r, DenseBlockPolicy policy) {
  if (r.n_gt > r.n || r.mask.rows() != r.n || r.mask.cols() != r.n) {
    throw ShapeError("split_workloads: inconsistent MaskResult");
  }
  WorkloadSplit s;
  s.n = r.n;
  s.n_gt = r.n_gt;
  s.dense_col_begin = 0;
  s.dense_col_end = r.n_gt;
  s.dense = to_csc(r.mask, 0, r.n_gt);
  s.sparse = to_csc(r.mask, r.n_gt, r.n);
  s.policy = policy;
  s.layer_id = r.layer_id;
  s.head_id = r.head_id;
  return s;
}

}  // namespace vitcod
