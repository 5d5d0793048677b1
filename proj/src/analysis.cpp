#include "vitcod/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include "json.hpp"
#include <sstream>

#include "vitcod/errors.hpp"
#include "vitcod/serialize.hpp"

namespace vitcod {

RooflinePoint roofline(const SimReport& report, const HwConfig& hw) {
  const std::uint64_t bytes = report.total.dram_bytes_in + report.total.dram_bytes_out;
  if (bytes == 0) throw DomainError("roofline: report moved no DRAM bytes, intensity is undefined");
  RooflinePoint p;
  p.name = report.name;
  p.flops = 2.0 * static_cast<double>(report.total.mac_ops);
  p.dram_bytes = static_cast<double>(bytes);
  p.intensity = p.flops / p.dram_bytes;
  const double peak = hw.peak_flops();
  const double roof = hw.dram_bw_bytes_per_s * p.intensity;
  p.attainable = std::min(peak, roof);
  p.bound = roof < peak ? Bound::Memory : Bound::Compute;
  return p;
}

std::string roofline_gnuplot(const std::vector<RooflinePoint>& points, const HwConfig& hw) {
  std::ostringstream out;
  const double peak = hw.peak_flops();
  const double ridge = peak / hw.dram_bw_bytes_per_s;
  out << "# roof: intensity attainable_flops\n";
  // Log-spaced samples from ridge/100 to ridge*100, with the ridge itself.
  for (int i = -20; i <= 20; ++i) {
    const double x = ridge * std::pow(10.0, i / 10.0);
    out << format_double(x) << ' ' << format_double(std::min(peak, hw.dram_bw_bytes_per_s * x)) << '\n';
  }
  out << "\n\n# points: intensity attainable_flops name bound\n";
  for (const auto& p : points) {
    out << format_double(p.intensity) << ' ' << format_double(p.attainable) << ' '
        << (p.name.empty() ? "-" : p.name) << ' '
        << (p.bound == Bound::Memory ? "memory" : "compute") << '\n';
  }
  return out.str();
}

Breakdown breakdown(const SimReport& report) {
  const auto& t = report.total;
  const double sum = static_cast<double>(t.compute_cycles) + static_cast<double>(t.preprocess_cycles) +
                     static_cast<double>(t.movement_cycles);
  if (sum == 0.0) throw DomainError("breakdown: report has no cycles");
  Breakdown b;
  b.compute = static_cast<double>(t.compute_cycles) / sum;
  b.preprocess = static_cast<double>(t.preprocess_cycles) / sum;
  b.movement = static_cast<double>(t.movement_cycles) / sum;
  b.overlapped_total = t.overlapped_cycles;
  std::uint64_t excess = 0;
  for (const auto& [name, c] : report.phases) {
    if (c.movement_cycles > c.compute_cycles) excess += c.movement_cycles - c.compute_cycles;
  }
  if (t.overlapped_cycles > 0) {
    b.movement_excess = static_cast<double>(excess) / static_cast<double>(t.overlapped_cycles);
  }
  return b;
}

SpeedupTable compare(const std::vector<std::pair<std::string, SimReport>>& reports,
                     const std::string& baseline_name) {
  const auto base = std::find_if(reports.begin(), reports.end(),
                                 [&](const auto& r) { return r.first == baseline_name; });
  if (base == reports.end()) throw ArgumentError("compare: baseline '" + baseline_name + "' not among the reports");
  const std::uint64_t base_total = base->second.overlapped_total();
  SpeedupTable t;
  t.baseline = baseline_name;
  for (const auto& [name, rep] : reports) {
    const std::uint64_t total = rep.overlapped_total();
    if (total == 0) throw DomainError("compare: report '" + name + "' has a zero total");
    t.rows.push_back({name, total, static_cast<double>(base_total) / static_cast<double>(total)});
  }
  std::stable_sort(t.rows.begin(), t.rows.end(), [](const SpeedupRow& a, const SpeedupRow& b) {
    if (a.speedup != b.speedup) return a.speedup > b.speedup;
    return a.name < b.name;
  });
  return t;
}

std::string speedup_csv(const SpeedupTable& t) {
  std::string out = "name,overlapped_total,speedup_vs_" + t.baseline + "\n";
  for (const auto& r : t.rows) {
    out += r.name + "," + std::to_string(r.overlapped_total) + "," + format_double(r.speedup) + "\n";
  }
  return out;
}

std::string speedup_json(const SpeedupTable& t) {
  nlohmann::ordered_json j;
  j["baseline"] = t.baseline;
  j["note"] = "vs. dense S-stationary";
  auto& rows = j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"name", r.name}, {"overlapped_total", r.overlapped_total}, {"speedup", r.speedup}});
  }
  auto& refs = j["reference_at_90pct_sparsity"] = nlohmann::ordered_json::object();
  for (const auto& ref : kReferenceSpeedups) refs[ref.versus] = ref.speedup;
  return j.dump(2) + "\n";
}

std::string speedup_text(const SpeedupTable& t) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-32s %16s %10s\n", "config", "cycles", "speedup");
  out += line;
  for (const auto& r : t.rows) {
    std::snprintf(line, sizeof line, "%-32s %16llu %9.3fx\n", r.name.c_str(),
                  static_cast<unsigned long long>(r.overlapped_total), r.speedup);
    out += line;
  }
  out += "(speedups vs. dense S-stationary baseline '" + t.baseline + "')\n";
  return out;
}

double calibrate_pj_per_mac(const HwConfig& hw, const SimReport& report, double target_w) {
  if (!(target_w > 0.0)) throw ArgumentError("calibrate_pj_per_mac: target power must be positive");
  const auto& t = report.total;
  if (t.overlapped_cycles == 0 || t.mac_ops == 0) {
    throw DomainError("calibrate_pj_per_mac: report has no cycles or no MACs");
  }
  const double seconds = static_cast<double>(t.overlapped_cycles) / hw.freq_hz;
  const double other_pj = hw.energy.pj_per_dram_byte * static_cast<double>(t.dram_bytes_in + t.dram_bytes_out) +
                          hw.energy.pj_per_sram_byte * static_cast<double>(t.sram_bytes);
  const double mac_pj = target_w * seconds * 1e12 - other_pj;
  if (mac_pj <= 0.0) {
    throw DomainError("calibrate_pj_per_mac: memory energy alone exceeds the target power");
  }
  return mac_pj / static_cast<double>(t.mac_ops);
}

}  // namespace vitcod
