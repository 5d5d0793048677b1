#include <algorithm>
#include <string>

#include "sim_detail.hpp"
#include "vitcod/autoencoder.hpp"
#include "vitcod/errors.hpp"
#include "vitcod/simulator.hpp"

namespace vitcod {

namespace {

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

void check_tokens(const MaskResult& r, const LayerShape& shape) {
  if (r.n != shape.n) {
    throw ShapeError("mask covers " + std::to_string(r.n) + " tokens, layer shape has " +
                     std::to_string(shape.n));
  }
}

// Runs `extra` units alongside the single phase of `rep`; the phase lasts as
// long as the slowest of them.
SimReport fold_units(const SimReport& rep, const std::string& phase_name, const SimReport& extra,
                     const HwConfig& hw) {
  SimReport out;
  out.allocated_macs = rep.allocated_macs + extra.allocated_macs;
  out.traffic = rep.traffic;
  out.traffic += extra.traffic;
  PhaseCost cost = rep.phases.front().second;
  const PhaseCost& other = extra.phases.front().second;
  cost.compute_cycles = std::max(cost.compute_cycles, other.compute_cycles);
  cost.dram_bytes_in += other.dram_bytes_in;
  cost.dram_bytes_out += other.dram_bytes_out;
  cost.movement_cycles = hw.movement_cycles(cost.dram_bytes_in + cost.dram_bytes_out);
  cost.mac_ops += other.mac_ops;
  for (auto u : rep.units) {
    u.phase = phase_name;
    out.units.push_back(u);
  }
  for (auto u : extra.units) {
    u.phase = phase_name;
    out.units.push_back(u);
  }
  out.add_phase(phase_name, cost, hw);
  return out;
}

SimReport named(SimReport rep, const std::string& phase_name, const HwConfig& hw) {
  SimReport out;
  out.allocated_macs = rep.allocated_macs;
  out.traffic = rep.traffic;
  for (auto u : rep.units) {
    u.phase = phase_name;
    out.units.push_back(u);
  }
  out.add_phase(phase_name, rep.phases.front().second, hw);
  return out;
}

}  // namespace

SimReport sim_sstationary_baseline(const LayerShape& shape, const HwConfig& hw,
                                   const std::optional<MaskResult>& mask_opt) {
  hw.validate();
  shape.validate();
  // The mask is accepted for interface parity only: execution is dense.
  if (mask_opt) check_tokens(*mask_opt, shape);
  const auto [pr, pc] = sstationary_grid(hw);
  const std::uint64_t scores = static_cast<std::uint64_t>(shape.h) * shape.n * shape.n;
  SimReport rep;
  rep.name = "s-stationary";
  rep.note = "vs. dense S-stationary";
  rep.allocated_macs = hw.total_macs();
  const std::uint64_t qk_bytes = static_cast<std::uint64_t>(shape.h) * shape.n * shape.d_k * hw.elem_bytes;
  rep.traffic.q = qk_bytes;
  rep.traffic.k = qk_bytes;
  PhaseCost cost;
  cost.compute_cycles = ceil_div(shape.n, pr) * ceil_div(shape.n, pc) * shape.d_k * shape.h;
  cost.dram_bytes_in = 2 * qk_bytes;
  cost.movement_cycles = hw.movement_cycles(cost.dram_bytes_in);
  cost.mac_ops = scores * shape.d_k;
  rep.units.push_back({"sddmm", "grid", cost.compute_cycles, cost.mac_ops});
  rep.add_phase("sddmm", cost, hw);
  return rep;
}

SimReport sim_sstationary_attention(const LayerShape& shape, const HwConfig& hw,
                                    const std::optional<MaskResult>& mask_opt) {
  const auto sddmm = sim_sstationary_baseline(shape, hw, mask_opt);
  const std::uint64_t scores = static_cast<std::uint64_t>(shape.h) * shape.n * shape.n;
  SimReport rep = fold_units(sddmm, "sddmm", sim_softmax(scores, hw), hw);
  rep.name = sddmm.name;
  rep.note = sddmm.note;
  rep.allocated_macs = hw.total_macs();

  // V' = S.V with output elements mapped on the grid; S stays on chip.
  const auto [pr, pc] = sstationary_grid(hw);
  SimReport spmm;
  spmm.allocated_macs = hw.total_macs();
  const std::uint64_t v_bytes = static_cast<std::uint64_t>(shape.h) * shape.n * shape.d_k * hw.elem_bytes;
  spmm.traffic.v = v_bytes;
  spmm.traffic.outputs = v_bytes;
  PhaseCost cost;
  cost.compute_cycles = ceil_div(shape.n, pr) * ceil_div(shape.d_k, pc) * shape.n * shape.h;
  cost.dram_bytes_in = v_bytes;
  cost.dram_bytes_out = v_bytes;
  cost.movement_cycles = hw.movement_cycles(2 * v_bytes);
  cost.mac_ops = scores * shape.d_k;
  spmm.units.push_back({"spmm", "grid", cost.compute_cycles, cost.mac_ops});
  spmm.add_phase("spmm", cost, hw);
  rep.append(spmm, hw);
  return rep;
}

SimReport sim_sstationary_block(const LayerShape& shape, const HwConfig& hw) {
  hw.validate();
  shape.validate();
  if (shape.mlp_hidden == 0) throw ArgumentError("layer shape: mlp_hidden must be positive");
  const std::size_t n = shape.n, d = shape.d, lines = hw.mac_lines;
  SimReport rep;
  rep.name = "s-stationary";
  rep.note = "vs. dense S-stationary";
  rep.append(named(sim_gemm_dense(n, d, 3 * d, hw, lines), "qkv_proj", hw), hw);
  rep.append(sim_sstationary_attention(shape, hw), hw);
  rep.append(named(sim_gemm_dense(n, d, d, hw, lines), "out_proj", hw), hw);
  rep.append(named(sim_gemm_dense(n, d, shape.mlp_hidden, hw, lines), "mlp_fc1", hw), hw);
  rep.append(named(sim_gemm_dense(n, shape.mlp_hidden, d, hw, lines), "mlp_fc2", hw), hw);
  return rep;
}

SimReport sim_attention_layer(const MaskResult& r, const LayerShape& shape, const HwConfig& hw,
                              const SimFlags& flags) {
  hw.validate();
  shape.validate();
  check_tokens(r, shape);
  const auto split = split_workloads(r, flags.dense_policy);
  const auto alloc = allocate_pes(split, hw);
  const auto sched = derive_engine_config(split, shape, hw, alloc);

  SimReport rep;
  rep.name = flags.ae_on ? "vitcod-ae" : "vitcod";
  rep.allocated_macs = (alloc.time_shared ? 1 : alloc.denser_lines + alloc.sparser_lines) * hw.macs_per_line;

  // Index load and schedule setup precede both engines.
  PhaseCost pre;
  const std::uint64_t index_bytes = sched.buffers.index_bytes_used;
  pre.preprocess_cycles = hw.movement_cycles(index_bytes) + hw.schedule_setup_cycles;
  pre.dram_bytes_in = index_bytes;
  rep.traffic.index = index_bytes;
  rep.add_phase("preprocess", pre, hw);

  const auto sddmm = sim_sddmm_kstationary(split, shape, hw, alloc, flags);
  const auto softmax = sim_softmax(shape.h * split.total_scores(), hw);
  SimReport merged = fold_units(sddmm, "sddmm", softmax, hw);
  merged.allocated_macs = sddmm.allocated_macs;
  rep.append(merged, hw);
  rep.append(sim_spmm_outputstationary(split, shape, hw, alloc), hw);
  return rep;
}

SimReport sim_vit_block(const LayerShape& shape, const MaskResult& r, const HwConfig& hw,
                        const SimFlags& flags) {
  hw.validate();
  shape.validate();
  if (shape.mlp_hidden == 0) throw ArgumentError("layer shape: mlp_hidden must be positive");
  const std::size_t n = shape.n, d = shape.d, lines = hw.mac_lines;

  SimReport rep;
  rep.name = flags.ae_on ? "vitcod-ae" : "vitcod";
  if (flags.ae_on) {
    // Q and K leave the projection compressed; V is untouched.
    const std::uint64_t h_c = compressed_heads(shape.h, flags.ratio);
    const std::uint64_t out_bytes = static_cast<std::uint64_t>(n) * shape.d_k * hw.elem_bytes * (shape.h + 2 * h_c);
    const auto qkv = named(detail::gemm(n, d, 3 * d, hw, lines, out_bytes), "qkv_proj", hw);
    rep.append(fold_units(qkv, "qkv_proj", sim_encoder_engine(shape, hw, flags.ratio), hw), hw);
  } else {
    rep.append(named(sim_gemm_dense(n, d, 3 * d, hw, lines), "qkv_proj", hw), hw);
  }
  rep.append(sim_attention_layer(r, shape, hw, flags), hw);
  rep.append(named(sim_gemm_dense(n, d, d, hw, lines), "out_proj", hw), hw);
  rep.append(named(sim_gemm_dense(n, d, shape.mlp_hidden, hw, lines), "mlp_fc1", hw), hw);
  rep.append(named(sim_gemm_dense(n, shape.mlp_hidden, d, hw, lines), "mlp_fc2", hw), hw);
  return rep;
}

}  // namespace vitcod
