#pragma once

// Internals shared by simulator.cpp and sim_layer.cpp.

#include <cstdint>
#include <optional>
#include <vector>

#include "vitcod/simulator.hpp"

namespace vitcod::detail {

// Rows touched by each active (nonempty) column of one engine.
struct EngineColumns {
  std::size_t n = 0;
  std::vector<std::vector<std::uint16_t>> rows;
};

struct PlanDetail {
  SddmmTilePlan plan;
  std::vector<std::vector<bool>> pass_rows;  // Q rows resident in each pass
};

struct ScheduleDetail {
  EngineSchedule sched;
  PlanDetail denser;
  PlanDetail sparser;
};

EngineColumns denser_columns(const WorkloadSplit& split);
EngineColumns sparser_columns(const WorkloadSplit& split);
PlanDetail plan_engine(const EngineColumns& cols, std::uint64_t buffer_bytes,
                       std::uint64_t row_bytes, const char* engine);
ScheduleDetail schedule(const WorkloadSplit& split, const LayerShape& shape, const HwConfig& hw,
                        const EngineAlloc& alloc);

// Per-output-row nonzeros (one head) an engine accumulates in SpMM.
std::vector<std::uint64_t> spmm_row_costs(const WorkloadSplit& split, bool denser);
std::uint64_t spmm_engine_cycles(const std::vector<std::uint64_t>& row_nnz, std::size_t heads,
                                 std::size_t lines, std::uint64_t chunks);

SimReport gemm(std::size_t m, std::size_t k, std::size_t n_out, const HwConfig& hw,
               std::size_t lines, std::optional<std::uint64_t> output_bytes);

}  // namespace vitcod::detail
