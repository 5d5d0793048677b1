#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vitcod/hw_config.hpp"
#include "vitcod/maskgen.hpp"
#include "vitcod/sparse_format.hpp"

namespace vitcod {

// Attention/MLP dimensions of one transformer block.
struct LayerShape {
  std::size_t n = 0;
  std::size_t h = 0;
  std::size_t d_k = 0;
  std::size_t d = 0;  // h * d_k
  std::size_t mlp_hidden = 0;

  static LayerShape make(std::size_t n, std::size_t h, std::size_t d_k, std::size_t mlp_hidden);
  void validate() const;
};

struct EngineAlloc {
  std::size_t denser_lines = 0;
  std::size_t sparser_lines = 0;
  // A single MAC line serves both engines one after the other.
  bool time_shared = false;
  // Share of the Q/K/S/V input buffer owned by each engine.
  std::uint64_t denser_buffer_bytes = 0;
  std::uint64_t sparser_buffer_bytes = 0;
};

struct SimFlags {
  bool ae_on = false;
  double ratio = 0.5;
  bool forwarding_on = true;
  DenseBlockPolicy dense_policy = DenseBlockPolicy::ComputeAll;
};

// One row of the latency/energy breakdown.
struct PhaseCost {
  std::uint64_t compute_cycles = 0;
  std::uint64_t preprocess_cycles = 0;
  std::uint64_t movement_cycles = 0;
  std::uint64_t overlapped_cycles = 0;
  std::uint64_t dram_bytes_in = 0;
  std::uint64_t dram_bytes_out = 0;
  std::uint64_t mac_ops = 0;
  std::uint64_t sram_bytes = 0;
  double energy_pj = 0.0;

  PhaseCost& operator+=(const PhaseCost& o);
  friend bool operator==(const PhaseCost&, const PhaseCost&) = default;
};

// Named DRAM byte counters.
struct Traffic {
  std::uint64_t q = 0;
  std::uint64_t k = 0;
  std::uint64_t v = 0;
  std::uint64_t scores = 0;
  std::uint64_t outputs = 0;
  std::uint64_t index = 0;
  std::uint64_t weights = 0;
  std::uint64_t activations = 0;
  std::uint64_t q_forward_hits = 0;   // Q rows served from the denser engine's buffer
  std::uint64_t q_forward_bytes = 0;  // DRAM bytes those hits saved

  std::uint64_t qk() const { return q + k; }
  Traffic& operator+=(const Traffic& o);
  friend bool operator==(const Traffic&, const Traffic&) = default;
};

// Busy cycles of one hardware unit inside a phase. Units of one phase run
// concurrently; the phase's compute_cycles is their maximum.
struct UnitStat {
  std::string phase;
  std::string unit;
  std::uint64_t cycles = 0;
  std::uint64_t mac_ops = 0;
  friend bool operator==(const UnitStat&, const UnitStat&) = default;
};

struct SimReport {
  std::string name;
  std::vector<std::pair<std::string, PhaseCost>> phases;
  PhaseCost total;
  Traffic traffic;
  std::vector<UnitStat> units;
  std::uint64_t allocated_macs = 0;
  double utilization = 0.0;
  std::string note;

  // Appends a phase: fills overlapped/sram/energy per the cost rules and
  // folds it into the totals.
  void add_phase(const std::string& phase, PhaseCost cost, const HwConfig& hw);
  // Appends every phase, unit and traffic counter of `other`.
  void append(const SimReport& other, const HwConfig& hw);
  const PhaseCost* phase(const std::string& name) const;
  std::uint64_t overlapped_total() const { return total.overlapped_cycles; }

  friend bool operator==(const SimReport&, const SimReport&) = default;
};

// ceil(d_k / macs_per_line): cycles one MAC line spends per score or per
// nonzero, feature dimension spread across the line.
std::uint64_t chunks_per_score(std::size_t d_k, const HwConfig& hw);

// Lines split proportionally to the MAC workload of each engine.
EngineAlloc allocate_pes(const WorkloadSplit& split, const HwConfig& hw);

enum class AccumulationMode { InterPe, IntraPe };

// Tiling of one engine's K-stationary pass over its columns.
struct SddmmTilePlan {
  std::size_t active_columns = 0;  // columns with at least one score
  bool q_resident = false;         // every needed Q row fits at once
  std::size_t k_tile_columns = 0;  // K columns held stationary per pass
  std::size_t passes = 0;
  std::vector<std::size_t> q_rows_per_pass;
  std::size_t q_rows_total() const;
  std::size_t q_reloads() const { return passes; }
};

struct ModeSwitch {
  std::string phase;
  AccumulationMode mode;
};

struct BufferPartition {
  std::uint64_t denser_input_bytes = 0;
  std::uint64_t sparser_input_bytes = 0;
  std::uint64_t index_bytes_used = 0;
  bool index_fits = true;
  std::uint64_t output_row_tile_bytes = 0;
};

// Everything the simulator needs to run one attention layer.
struct EngineSchedule {
  EngineAlloc alloc;
  SddmmTilePlan denser;
  SddmmTilePlan sparser;
  std::size_t spmm_row_tile = 0;  // output rows in flight per pass (one per line)
  BufferPartition buffers;
  std::vector<ModeSwitch> modes;
};

EngineSchedule derive_engine_config(const WorkloadSplit& split, const LayerShape& shape,
                                    const HwConfig& hw, const EngineAlloc& alloc);
EngineSchedule derive_engine_config(const MaskResult& r, const LayerShape& shape,
                                    const HwConfig& hw,
                                    DenseBlockPolicy policy = DenseBlockPolicy::ComputeAll);

SimReport sim_sddmm_kstationary(const WorkloadSplit& split, const LayerShape& shape,
                                const HwConfig& hw, const EngineAlloc& alloc,
                                const SimFlags& flags = {});
SimReport sim_spmm_outputstationary(const WorkloadSplit& split, const LayerShape& shape,
                                    const HwConfig& hw, const EngineAlloc& alloc);
SimReport sim_softmax(std::uint64_t nnz_total, const HwConfig& hw);
SimReport sim_gemm_dense(std::size_t m, std::size_t k, std::size_t n_out, const HwConfig& hw,
                         std::size_t lines);
SimReport sim_encoder_engine(const LayerShape& shape, const HwConfig& hw, double ratio);

// Dense S-stationary baseline: scores mapped on a P_r x P_c grid.
std::pair<std::size_t, std::size_t> sstationary_grid(const HwConfig& hw);
SimReport sim_sstationary_baseline(const LayerShape& shape, const HwConfig& hw,
                                   const std::optional<MaskResult>& mask_opt = std::nullopt);
// Baseline SDDMM + softmax + dense SpMM, comparable to sim_attention_layer.
SimReport sim_sstationary_attention(const LayerShape& shape, const HwConfig& hw,
                                    const std::optional<MaskResult>& mask_opt = std::nullopt);

// Baseline attention between the same dense GEMMs as sim_vit_block.
SimReport sim_sstationary_block(const LayerShape& shape, const HwConfig& hw);

SimReport sim_attention_layer(const MaskResult& r, const LayerShape& shape, const HwConfig& hw,
                              const SimFlags& flags = {});
SimReport sim_vit_block(const LayerShape& shape, const MaskResult& r, const HwConfig& hw,
                        const SimFlags& flags = {});

}  // namespace vitcod
