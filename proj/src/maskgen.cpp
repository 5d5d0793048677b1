#include "vitcod/maskgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "vitcod/errors.hpp"

namespace vitcod {

BinaryMatrix BinaryMatrix::identity(std::size_t n) {
  BinaryMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m.set(i, i);
  return m;
}

std::size_t BinaryMatrix::nnz() const {
  return static_cast<std::size_t>(std::count_if(bits_.begin(), bits_.end(),
                                                [](std::uint8_t b) { return b != 0; }));
}

std::vector<std::size_t> BinaryMatrix::column_counts() const {
  std::vector<std::size_t> counts(cols_, 0);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) counts[c] += bits_[r * cols_ + c] != 0;
  }
  return counts;
}

namespace {

// Indices of `values` ordered by descending value, ascending index on ties.
std::vector<std::size_t> descending_order(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return values[x] > values[y]; });
  return order;
}

// Number of leading entries of `order` accumulated before the running sum
// reaches `threshold`.
std::size_t accumulate_until(std::span<const double> values, std::span<const std::size_t> order,
                             double threshold) {
  double sum = 0.0;
  std::size_t taken = 0;
  while (sum < threshold && taken < order.size()) {
    sum += values[order[taken]];
    ++taken;
  }
  return taken;
}

}  // namespace

BinaryMatrix prune_mask(const AttentionMap& a, double theta_p, PruneMode mode) {
  if (!(theta_p > 0.0 && theta_p <= 1.0)) {
    throw ArgumentError("theta_p must be in (0, 1], got " + std::to_string(theta_p));
  }
  const std::size_t n = a.n();
  BinaryMatrix mask(n, n);
  if (mode == PruneMode::PerQuery) {
    for (std::size_t r = 0; r < n; ++r) {
      const auto row = a.row(r);
      const auto order = descending_order(row);
      const std::size_t kept = accumulate_until(row, order, theta_p);
      for (std::size_t k = 0; k < kept; ++k) mask.set(r, order[k]);
    }
  } else {
    // Rows each carry unit mass, so the whole map carries n.
    const auto scores = a.scores();
    const auto order = descending_order(scores);
    const std::size_t kept = accumulate_until(scores, order, theta_p * static_cast<double>(n));
    for (std::size_t k = 0; k < kept; ++k) mask.set(order[k] / n, order[k] % n);
  }
  return mask;
}

ReorderResult reorder(const AttentionMap& a, const BinaryMatrix& mask, std::size_t theta_d,
                      bool permute_rows) {
  const std::size_t n = a.n();
  if (mask.rows() != n || mask.cols() != n) {
    throw ShapeError("reorder: mask is " + std::to_string(mask.rows()) + "x" +
                     std::to_string(mask.cols()) + ", map is " + std::to_string(n) + "x" +
                     std::to_string(n));
  }

  // Support of mask (.) A; exact-zero test, the mask is already binary.
  std::vector<double> masked(n * n, 0.0);
  std::vector<std::size_t> col_nnz(n, 0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      if (mask.at(r, c)) {
        masked[r * n + c] = a.at(r, c);
        col_nnz[c] += masked[r * n + c] != 0.0;
      }
    }
  }

  ReorderResult out;
  out.perm.resize(n);
  std::iota(out.perm.begin(), out.perm.end(), std::size_t{0});
  for (std::size_t i = 0; i < n; ++i) {
    if (col_nnz[i] > theta_d) {
      std::swap(out.perm[out.n_gt], out.perm[i]);
      ++out.n_gt;
    }
  }

  out.mask = BinaryMatrix(n, n);
  out.scores.assign(n * n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t src_r = permute_rows ? out.perm[r] : r;
    for (std::size_t c = 0; c < n; ++c) {
      const double v = masked[src_r * n + out.perm[c]];
      out.scores[r * n + c] = v;
      out.mask.set(r, c, v != 0.0);
    }
  }
  return out;
}

MaskResult split_and_conquer(const AttentionMap& a, double theta_p, std::size_t theta_d,
                             SplitOptions options) {
  const auto pruned = prune_mask(a, theta_p, options.mode);
  auto reordered = reorder(a, pruned, theta_d, options.permute_rows);

  MaskResult r;
  r.n = a.n();
  r.mask = std::move(reordered.mask);
  r.perm = std::move(reordered.perm);
  r.n_gt = reordered.n_gt;
  r.theta_p = theta_p;
  r.theta_d = theta_d;
  r.mode = options.mode;
  r.rows_permuted = options.permute_rows;
  r.reordered_scores = std::move(reordered.scores);
  r.layer_id = a.layer_id();
  r.head_id = a.head_id();
  return r;
}

double sparsity(const BinaryMatrix& mask) {
  const std::size_t total = mask.rows() * mask.cols();
  if (total == 0) return 0.0;
  return static_cast<double>(total - mask.nnz()) / static_cast<double>(total);
}

double theta_for_sparsity(const AttentionMap& a, double target_sparsity, PruneMode mode) {
  if (!(target_sparsity >= 0.0 && target_sparsity < 1.0)) {
    throw ArgumentError("target sparsity must be in [0, 1)");
  }
  const double total = static_cast<double>(a.n() * a.n());
  const auto wanted = static_cast<std::size_t>(std::ceil((1.0 - target_sparsity) * total - 1e-9));
  double lo = 0.0, hi = 1.0;
  if (prune_mask(a, hi, mode).nnz() < wanted) return hi;
  for (int it = 0; it < 64 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (prune_mask(a, mid, mode).nnz() >= wanted) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

void check_invariants(const MaskResult& r) {
  const std::size_t n = r.n;
  if (r.mask.rows() != n || r.mask.cols() != n) throw DomainError("mask shape differs from n");
  if (r.perm.size() != n) throw DomainError("perm length differs from n");
  std::vector<bool> seen(n, false);
  for (auto p : r.perm) {
    if (p >= n || seen[p]) throw DomainError("perm is not a bijection");
    seen[p] = true;
  }
  if (r.n_gt > n) throw DomainError("n_gt exceeds n");
  const auto counts = r.mask.column_counts();
  for (std::size_t c = 0; c < n; ++c) {
    if (c < r.n_gt && counts[c] <= r.theta_d) {
      throw DomainError("global column " + std::to_string(c) + " is not denser than theta_d");
    }
    if (c >= r.n_gt && counts[c] > r.theta_d) {
      throw DomainError("sparse column " + std::to_string(c) + " is denser than theta_d");
    }
  }
  if (!r.reordered_scores.empty()) {
    if (r.reordered_scores.size() != n * n) throw DomainError("reordered_scores has wrong size");
    for (std::size_t i = 0; i < n * n; ++i) {
      if ((r.reordered_scores[i] != 0.0) != (r.mask.bits()[i] != 0)) {
        throw DomainError("reordered_scores support differs from mask");
      }
    }
  }
}

}  // namespace vitcod
