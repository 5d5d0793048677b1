#include "vitcod/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "vitcod/autoencoder.hpp"
#include "vitcod/errors.hpp"
#include "sim_detail.hpp"

namespace vitcod {

namespace {

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return b == 0 ? 0 : (a + b - 1) / b; }

}  // namespace

LayerShape LayerShape::make(std::size_t n, std::size_t h, std::size_t d_k, std::size_t mlp_hidden) {
  LayerShape s{n, h, d_k, h * d_k, mlp_hidden};
  s.validate();
  return s;
}

void LayerShape::validate() const {
  if (n == 0 || h == 0 || d_k == 0) throw ArgumentError("layer shape: n, h and d_k must be positive");
  if (d != h * d_k) throw ArgumentError("layer shape: d must equal h * d_k");
}

PhaseCost& PhaseCost::operator+=(const PhaseCost& o) {
  compute_cycles += o.compute_cycles;
  preprocess_cycles += o.preprocess_cycles;
  movement_cycles += o.movement_cycles;
  overlapped_cycles += o.overlapped_cycles;
  dram_bytes_in += o.dram_bytes_in;
  dram_bytes_out += o.dram_bytes_out;
  mac_ops += o.mac_ops;
  sram_bytes += o.sram_bytes;
  energy_pj += o.energy_pj;
  return *this;
}

Traffic& Traffic::operator+=(const Traffic& o) {
  q += o.q;
  k += o.k;
  v += o.v;
  scores += o.scores;
  outputs += o.outputs;
  index += o.index;
  weights += o.weights;
  activations += o.activations;
  q_forward_hits += o.q_forward_hits;
  q_forward_bytes += o.q_forward_bytes;
  return *this;
}

void SimReport::add_phase(const std::string& phase_name, PhaseCost cost, const HwConfig& hw) {
  // Perfect double buffering: compute hides movement (or vice versa);
  // preprocessing runs before either.
  cost.overlapped_cycles =
      std::max(cost.compute_cycles, cost.movement_cycles) + cost.preprocess_cycles;
  // On-chip traffic: every DRAM byte is staged through a buffer once, and
  // every MAC reads two operands.
  cost.sram_bytes = cost.dram_bytes_in + cost.dram_bytes_out + 2 * hw.elem_bytes * cost.mac_ops;
  cost.energy_pj = hw.energy.pj_per_mac * static_cast<double>(cost.mac_ops) +
                   hw.energy.pj_per_dram_byte *
                       static_cast<double>(cost.dram_bytes_in + cost.dram_bytes_out) +
                   hw.energy.pj_per_sram_byte * static_cast<double>(cost.sram_bytes);
  phases.emplace_back(phase_name, cost);
  total += cost;
  const double capacity = static_cast<double>(total.compute_cycles) * static_cast<double>(allocated_macs);
  utilization = capacity > 0.0 ? static_cast<double>(total.mac_ops) / capacity : 0.0;
}

void SimReport::append(const SimReport& other, const HwConfig& hw) {
  allocated_macs = std::max(allocated_macs, other.allocated_macs);
  for (const auto& [phase_name, cost] : other.phases) add_phase(phase_name, cost, hw);
  units.insert(units.end(), other.units.begin(), other.units.end());
  traffic += other.traffic;
}

const PhaseCost* SimReport::phase(const std::string& phase_name) const {
  for (const auto& [n, c] : phases) {
    if (n == phase_name) return &c;
  }
  return nullptr;
}

std::uint64_t chunks_per_score(std::size_t d_k, const HwConfig& hw) {
  return ceil_div(d_k, hw.macs_per_line);
}

EngineAlloc allocate_pes(const WorkloadSplit& split, const HwConfig& hw) {
  hw.validate();
  const auto wd = static_cast<double>(split.dense_scores());
  const auto ws = static_cast<double>(split.sparse_nnz());
  const std::size_t lines = hw.mac_lines;
  const std::uint64_t buffer = hw.buffers.qkv_input_bytes;
  EngineAlloc a;
  if (wd == 0.0 && ws == 0.0) throw ArgumentError("allocate_pes: both workloads are empty");
  if (ws == 0.0) {
    a.denser_lines = lines;
    a.denser_buffer_bytes = buffer;
    return a;
  }
  if (wd == 0.0) {
    a.sparser_lines = lines;
    a.sparser_buffer_bytes = buffer;
    return a;
  }
  if (lines == 1) {
    a.denser_lines = a.sparser_lines = 1;
    a.time_shared = true;
    a.denser_buffer_bytes = a.sparser_buffer_bytes = buffer;
    return a;
  }
  const auto share = std::llround(static_cast<double>(lines) * wd / (wd + ws));
  a.denser_lines = static_cast<std::size_t>(
      std::clamp<long long>(share, 1, static_cast<long long>(lines) - 1));
  a.sparser_lines = lines - a.denser_lines;
  a.denser_buffer_bytes = buffer * a.denser_lines / lines;
  a.sparser_buffer_bytes = buffer - a.denser_buffer_bytes;
  return a;
}

std::size_t SddmmTilePlan::q_rows_total() const {
  return std::accumulate(q_rows_per_pass.begin(), q_rows_per_pass.end(), std::size_t{0});
}

namespace detail {

EngineColumns denser_columns(const WorkloadSplit& split) {
  EngineColumns cols;
  cols.n = split.n;
  for (std::size_t c = 0; c < split.n_gt; ++c) {
    std::vector<std::uint16_t> rows;
    if (split.policy == DenseBlockPolicy::ComputeAll) {
      rows.resize(split.n);
      std::iota(rows.begin(), rows.end(), std::uint16_t{0});
    } else {
      const auto span = split.dense.column(c);
      rows.assign(span.begin(), span.end());
    }
    if (!rows.empty()) cols.rows.push_back(std::move(rows));
  }
  return cols;
}

EngineColumns sparser_columns(const WorkloadSplit& split) {
  EngineColumns cols;
  cols.n = split.n;
  for (std::size_t c = 0; c < split.sparse.n_cols; ++c) {
    const auto span = split.sparse.column(c);
    if (!span.empty()) cols.rows.emplace_back(span.begin(), span.end());
  }
  return cols;
}

PlanDetail plan_engine(const EngineColumns& cols, std::uint64_t buffer_bytes,
                       std::uint64_t row_bytes, const char* engine) {
  PlanDetail d;
  d.plan.active_columns = cols.rows.size();
  if (cols.rows.empty()) {
    d.plan.q_resident = true;
    return d;
  }
  if (buffer_bytes < 3 * row_bytes) {
    throw ConfigError(std::string("qkv_input_bytes: the ") + engine + " engine's share (" +
                      std::to_string(buffer_bytes) + " B) cannot hold one K column plus a "
                      "double-buffered Q row (" + std::to_string(3 * row_bytes) + " B)");
  }
  auto union_rows = [&](std::size_t first, std::size_t last) {
    std::vector<bool> used(cols.n, false);
    for (std::size_t c = first; c < last; ++c)
      for (auto r : cols.rows[c]) used[r] = true;
    return used;
  };
  const auto all = union_rows(0, cols.rows.size());
  const auto needed = static_cast<std::uint64_t>(std::count(all.begin(), all.end(), true));
  // Resident: all needed Q rows plus a double-buffered K column.
  if ((needed + 2) * row_bytes <= buffer_bytes) {
    d.plan.q_resident = true;
    d.plan.k_tile_columns = cols.rows.size();
    d.plan.passes = 1;
    d.plan.q_rows_per_pass = {static_cast<std::size_t>(needed)};
    d.pass_rows = {all};
    return d;
  }
  // Streaming: hold a K tile stationary, double-buffer Q rows past it.
  const std::size_t kt = static_cast<std::size_t>((buffer_bytes - 2 * row_bytes) / row_bytes);
  d.plan.k_tile_columns = kt;
  d.plan.passes = static_cast<std::size_t>(ceil_div(cols.rows.size(), kt));
  for (std::size_t p = 0; p < d.plan.passes; ++p) {
    auto used = union_rows(p * kt, std::min(cols.rows.size(), (p + 1) * kt));
    d.plan.q_rows_per_pass.push_back(static_cast<std::size_t>(std::count(used.begin(), used.end(), true)));
    d.pass_rows.push_back(std::move(used));
  }
  return d;
}

ScheduleDetail schedule(const WorkloadSplit& split, const LayerShape& shape, const HwConfig& hw,
                        const EngineAlloc& alloc) {
  hw.validate();
  shape.validate();
  if (split.n != shape.n) {
    throw ShapeError("workload has " + std::to_string(split.n) + " tokens, layer shape has " +
                     std::to_string(shape.n));
  }
  const std::uint64_t row_bytes = shape.h * shape.d_k * hw.elem_bytes;
  ScheduleDetail s;
  s.sched.alloc = alloc;
  auto& a = s.sched.alloc;
  // A proportional split can starve a small engine; each engine sharing the
  // buffer keeps at least one K column and a double-buffered Q row.
  if (!a.time_shared && a.denser_lines > 0 && a.sparser_lines > 0) {
    const std::uint64_t total = a.denser_buffer_bytes + a.sparser_buffer_bytes;
    const std::uint64_t floor_bytes = 3 * row_bytes;
    if (total < 2 * floor_bytes) {
      throw ConfigError("qkv_input_bytes: " + std::to_string(total) + " B cannot hold a minimal tile (" +
                        std::to_string(floor_bytes) + " B) for each of the two engines");
    }
    a.denser_buffer_bytes = std::clamp(a.denser_buffer_bytes, floor_bytes, total - floor_bytes);
    a.sparser_buffer_bytes = total - a.denser_buffer_bytes;
  }
  s.denser = plan_engine(denser_columns(split), a.denser_buffer_bytes, row_bytes, "denser");
  s.sparser = plan_engine(sparser_columns(split), a.sparser_buffer_bytes, row_bytes, "sparser");
  s.sched.denser = s.denser.plan;
  s.sched.sparser = s.sparser.plan;

  auto& b = s.sched.buffers;
  b.denser_input_bytes = a.denser_buffer_bytes;
  b.sparser_input_bytes = a.sparser_buffer_bytes;
  b.index_bytes_used = split.sparse.storage_bytes();
  if (split.policy == DenseBlockPolicy::SkipZeros) b.index_bytes_used += split.dense.storage_bytes();
  b.index_fits = b.index_bytes_used <= hw.buffers.index_bytes;

  const std::size_t lines = alloc.time_shared ? 1 : alloc.denser_lines + alloc.sparser_lines;
  s.sched.spmm_row_tile = lines;
  b.output_row_tile_bytes = static_cast<std::uint64_t>(lines) * shape.d_k * hw.elem_bytes;
  if (b.output_row_tile_bytes > hw.buffers.output_bytes) {
    throw ConfigError("output_bytes: " + std::to_string(hw.buffers.output_bytes) +
                      " B cannot hold one output row tile (" +
                      std::to_string(b.output_row_tile_bytes) + " B)");
  }
  s.sched.modes = {{"sddmm", AccumulationMode::InterPe}, {"spmm", AccumulationMode::IntraPe}};
  return s;
}

std::vector<std::uint64_t> spmm_row_costs(const WorkloadSplit& split, bool denser) {
  std::vector<std::uint64_t> cost(split.n, 0);
  if (denser) {
    if (split.policy == DenseBlockPolicy::ComputeAll) {
      std::fill(cost.begin(), cost.end(), split.n_gt);
    } else {
      for (auto r : split.dense.row_idx) ++cost[r];
    }
  } else {
    for (auto r : split.sparse.row_idx) ++cost[r];
  }
  return cost;
}

std::uint64_t spmm_engine_cycles(const std::vector<std::uint64_t>& row_nnz, std::size_t heads,
                                 std::size_t lines, std::uint64_t chunks) {
  const std::uint64_t total = std::accumulate(row_nnz.begin(), row_nnz.end(), std::uint64_t{0});
  if (total == 0) return 0;
  // Output rows (head-major) dealt round-robin to the lines.
  std::vector<std::uint64_t> busy(lines, 0);
  const std::size_t n = row_nnz.size();
  for (std::size_t item = 0; item < heads * n; ++item) busy[item % lines] += row_nnz[item % n];
  return *std::max_element(busy.begin(), busy.end()) * chunks;
}

}  // namespace detail

EngineSchedule derive_engine_config(const WorkloadSplit& split, const LayerShape& shape,
                                    const HwConfig& hw, const EngineAlloc& alloc) {
  return detail::schedule(split, shape, hw, alloc).sched;
}

EngineSchedule derive_engine_config(const MaskResult& r, const LayerShape& shape,
                                    const HwConfig& hw, DenseBlockPolicy policy) {
  const auto split = split_workloads(r, policy);
  return derive_engine_config(split, shape, hw, allocate_pes(split, hw));
}

SimReport sim_sddmm_kstationary(const WorkloadSplit& split, const LayerShape& shape,
                                const HwConfig& hw, const EngineAlloc& alloc,
                                const SimFlags& flags) {
  const auto s = detail::schedule(split, shape, hw, alloc);
  const std::uint64_t chunks = chunks_per_score(shape.d_k, hw);
  const std::uint64_t h = shape.h;
  const std::uint64_t dense_scores = h * split.dense_scores();
  const std::uint64_t sparse_scores = h * split.sparse_nnz();
  const std::uint64_t c_denser =
      dense_scores ? ceil_div(dense_scores, alloc.denser_lines) * chunks : 0;
  const std::uint64_t c_sparser =
      sparse_scores ? ceil_div(sparse_scores, alloc.sparser_lines) * chunks : 0;

  std::size_t h_eff = shape.h;
  if (flags.ae_on) {
    if (hw.dec_enc_lines == 0) throw ConfigError("dec_enc_lines is 0 but the autoencoder is on");
    h_eff = compressed_heads(shape.h, flags.ratio);
  }
  const std::uint64_t dram_row = h_eff * shape.d_k * hw.elem_bytes;

  // Query-based forwarding: a sparser-engine Q row is free when the denser
  // engine holds it in the co-scheduled pass.
  auto denser_rows_in_pass = [&](std::size_t p) -> const std::vector<bool>* {
    const auto& d = s.denser;
    if (d.plan.active_columns == 0 || !flags.forwarding_on) return nullptr;
    if (d.plan.q_resident) return &d.pass_rows.front();
    if (alloc.time_shared || p >= d.pass_rows.size()) return nullptr;
    return &d.pass_rows[p];
  };
  std::uint64_t q_rows_sparser = 0, hits = 0;
  for (std::size_t p = 0; p < s.sparser.pass_rows.size(); ++p) {
    const auto& mine = s.sparser.pass_rows[p];
    const auto* theirs = denser_rows_in_pass(p);
    for (std::size_t r = 0; r < mine.size(); ++r) {
      if (!mine[r]) continue;
      if (theirs && (*theirs)[r]) {
        ++hits;
      } else {
        ++q_rows_sparser;
      }
    }
  }
  const std::uint64_t q_rows = s.denser.plan.q_rows_total() + q_rows_sparser;
  const std::uint64_t k_rows = s.denser.plan.active_columns + s.sparser.plan.active_columns;

  SimReport rep;
  rep.allocated_macs = (alloc.time_shared ? 1 : alloc.denser_lines + alloc.sparser_lines) * hw.macs_per_line;
  rep.traffic.q = q_rows * dram_row;
  rep.traffic.k = k_rows * dram_row;
  rep.traffic.scores = (dense_scores + sparse_scores) * hw.elem_bytes;
  rep.traffic.q_forward_hits = hits;
  rep.traffic.q_forward_bytes = hits * dram_row;

  std::uint64_t decode_cycles = 0, decode_macs = 0;
  if (flags.ae_on) {
    // Q and K decoders run side by side, each on dec_enc_lines lines, and
    // restore every token once; the decoded rows are what the tiles hold.
    const std::uint64_t per_stream = h * h_eff * shape.n * shape.d_k;
    const std::uint64_t lanes = hw.dec_enc_lines * hw.macs_per_line;
    decode_cycles = ceil_div(per_stream, lanes);
    decode_macs = 2 * per_stream;
    rep.allocated_macs += 2 * lanes;
  }

  PhaseCost cost;
  const std::uint64_t engines = alloc.time_shared ? c_denser + c_sparser : std::max(c_denser, c_sparser);
  cost.compute_cycles = std::max(engines, decode_cycles);
  cost.dram_bytes_in = rep.traffic.q + rep.traffic.k;
  cost.dram_bytes_out = rep.traffic.scores;
  cost.movement_cycles = hw.movement_cycles(cost.dram_bytes_in + cost.dram_bytes_out);
  cost.mac_ops = (dense_scores + sparse_scores) * shape.d_k + decode_macs;
  rep.units.push_back({"sddmm", "denser", c_denser, dense_scores * shape.d_k});
  rep.units.push_back({"sddmm", "sparser", c_sparser, sparse_scores * shape.d_k});
  if (flags.ae_on) rep.units.push_back({"sddmm", "decoder", decode_cycles, decode_macs});
  rep.add_phase("sddmm", cost, hw);
  return rep;
}

SimReport sim_spmm_outputstationary(const WorkloadSplit& split, const LayerShape& shape,
                                    const HwConfig& hw, const EngineAlloc& alloc) {
  const auto s = detail::schedule(split, shape, hw, alloc);
  const std::uint64_t chunks = chunks_per_score(shape.d_k, hw);
  const auto dense_rows = detail::spmm_row_costs(split, true);
  const auto sparse_rows = detail::spmm_row_costs(split, false);
  const std::uint64_t c_denser =
      alloc.denser_lines ? detail::spmm_engine_cycles(dense_rows, shape.h, alloc.denser_lines, chunks) : 0;
  const std::uint64_t c_sparser =
      alloc.sparser_lines ? detail::spmm_engine_cycles(sparse_rows, shape.h, alloc.sparser_lines, chunks) : 0;
  const std::uint64_t scores = shape.h * split.total_scores();

  SimReport rep;
  rep.allocated_macs = (alloc.time_shared ? 1 : alloc.denser_lines + alloc.sparser_lines) * hw.macs_per_line;
  const std::uint64_t v_bytes = shape.h * shape.n * shape.d_k * hw.elem_bytes;
  rep.traffic.v = v_bytes;
  rep.traffic.outputs = v_bytes;
  // An index that did not fit on chip is streamed again for this phase.
  if (!s.sched.buffers.index_fits) rep.traffic.index = s.sched.buffers.index_bytes_used;

  PhaseCost cost;
  cost.compute_cycles = alloc.time_shared ? c_denser + c_sparser : std::max(c_denser, c_sparser);
  cost.dram_bytes_in = rep.traffic.v + rep.traffic.index;
  cost.dram_bytes_out = rep.traffic.outputs;
  cost.movement_cycles = hw.movement_cycles(cost.dram_bytes_in + cost.dram_bytes_out);
  cost.mac_ops = scores * shape.d_k;
  rep.units.push_back({"spmm", "denser", c_denser, shape.h * split.dense_scores() * shape.d_k});
  rep.units.push_back({"spmm", "sparser", c_sparser, shape.h * split.sparse_nnz() * shape.d_k});
  rep.add_phase("spmm", cost, hw);
  return rep;
}

SimReport sim_softmax(std::uint64_t nnz_total, const HwConfig& hw) {
  hw.validate();
  SimReport rep;
  PhaseCost cost;
  cost.compute_cycles = ceil_div(nnz_total, hw.softmax_units);
  rep.units.push_back({"softmax", "softmax", cost.compute_cycles, 0});
  rep.add_phase("softmax", cost, hw);
  return rep;
}

namespace detail {

SimReport gemm(std::size_t m, std::size_t k, std::size_t n_out, const HwConfig& hw,
               std::size_t lines, std::optional<std::uint64_t> output_bytes) {
  hw.validate();
  if (m == 0 || k == 0 || n_out == 0) throw ArgumentError("gemm: dimensions must be positive");
  if (lines == 0 || lines > hw.mac_lines) throw ArgumentError("gemm: lines must be in [1, mac_lines]");
  const std::uint64_t macs = static_cast<std::uint64_t>(m) * k * n_out;
  const std::uint64_t weight_bytes = static_cast<std::uint64_t>(k) * n_out * hw.elem_bytes;
  // Weight-stationary: each weight tile is loaded once and the input is
  // streamed past every tile.
  const std::uint64_t tiles = ceil_div(weight_bytes, hw.buffers.weight_gb_bytes);

  SimReport rep;
  rep.allocated_macs = lines * hw.macs_per_line;
  rep.traffic.weights = weight_bytes;
  rep.traffic.activations = static_cast<std::uint64_t>(m) * k * hw.elem_bytes * tiles;
  rep.traffic.outputs = output_bytes.value_or(static_cast<std::uint64_t>(m) * n_out * hw.elem_bytes);

  PhaseCost cost;
  cost.compute_cycles = ceil_div(macs, rep.allocated_macs);
  cost.dram_bytes_in = rep.traffic.weights + rep.traffic.activations;
  cost.dram_bytes_out = rep.traffic.outputs;
  cost.movement_cycles = hw.movement_cycles(cost.dram_bytes_in + cost.dram_bytes_out);
  cost.mac_ops = macs;
  rep.units.push_back({"gemm", "mac_lines", cost.compute_cycles, macs});
  rep.add_phase("gemm", cost, hw);
  return rep;
}

}  // namespace detail

SimReport sim_gemm_dense(std::size_t m, std::size_t k, std::size_t n_out, const HwConfig& hw,
                         std::size_t lines) {
  return detail::gemm(m, k, n_out, hw, lines, std::nullopt);
}

SimReport sim_encoder_engine(const LayerShape& shape, const HwConfig& hw, double ratio) {
  hw.validate();
  shape.validate();
  if (hw.dec_enc_lines == 0) throw ConfigError("dec_enc_lines is 0 but the autoencoder is on");
  const std::uint64_t h_c = compressed_heads(shape.h, ratio);
  const std::uint64_t lanes = hw.dec_enc_lines * hw.macs_per_line;
  // One stream's work: every (token, feature) column mixes h heads into h_c.
  const std::uint64_t per_stream = shape.h * h_c * shape.n * shape.d_k;
  SimReport rep;
  rep.allocated_macs = 2 * lanes;
  PhaseCost cost;
  cost.compute_cycles = ceil_div(per_stream, lanes);
  cost.mac_ops = 2 * per_stream;
  rep.units.push_back({"encode", "encoder", cost.compute_cycles, cost.mac_ops});
  rep.add_phase("encode", cost, hw);
  return rep;
}

std::pair<std::size_t, std::size_t> sstationary_grid(const HwConfig& hw) {
  const std::size_t pes = hw.total_macs();
  std::size_t cols = static_cast<std::size_t>(std::sqrt(static_cast<double>(pes)));
  while (cols > 1 && pes % cols != 0) --cols;
  return {pes / cols, cols};
}

}  // namespace vitcod
