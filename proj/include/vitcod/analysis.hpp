#pragma once

#include <string>
#include <utility>
#include <vector>

#include "vitcod/hw_config.hpp"
#include "vitcod/simulator.hpp"

namespace vitcod {

enum class Bound { Memory, Compute };

struct RooflinePoint {
  std::string name;
  double flops = 0.0;  // 2 x mac_ops
  double dram_bytes = 0.0;
  double intensity = 0.0;
  double attainable = 0.0;
  Bound bound = Bound::Memory;
};

// Throws DomainError when the report moved no DRAM bytes.
RooflinePoint roofline(const SimReport& report, const HwConfig& hw);

// gnuplot data: a roof curve block, a blank-line pair, then one row per point.
std::string roofline_gnuplot(const std::vector<RooflinePoint>& points, const HwConfig& hw);

struct Breakdown {
  // Shares of compute + preprocess + movement (non-overlapped sums).
  double compute = 0.0;
  double preprocess = 0.0;
  double movement = 0.0;
  // Share of the overlapped total spent waiting on movement beyond compute.
  double movement_excess = 0.0;
  std::uint64_t overlapped_total = 0;
};

Breakdown breakdown(const SimReport& report);

struct SpeedupRow {
  std::string name;
  std::uint64_t overlapped_total = 0;
  double speedup = 0.0;
};

struct SpeedupTable {
  std::string baseline;
  std::vector<SpeedupRow> rows;  // descending speedup, ties by name
};

SpeedupTable compare(const std::vector<std::pair<std::string, SimReport>>& reports,
                     const std::string& baseline_name);
std::string speedup_csv(const SpeedupTable& t);
std::string speedup_json(const SpeedupTable& t);
// Fixed-width text table for the terminal.
std::string speedup_text(const SpeedupTable& t);

// Published speedups at 90% sparsity, shown next to our numbers for context.
struct ReferenceSpeedup {
  const char* versus;
  double speedup;
};
inline constexpr ReferenceSpeedup kReferenceSpeedups[] = {{"SpAtten", 10.1}, {"Sanger", 6.8}};

inline constexpr double kReportedPowerW = 0.3239;

// pj_per_mac that makes the report's average power equal target_w, holding
// the DRAM and SRAM energy fixed. Meant for a compute-bound dense run.
double calibrate_pj_per_mac(const HwConfig& hw, const SimReport& report,
                            double target_w = kReportedPowerW);

}  // namespace vitcod
