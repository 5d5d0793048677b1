#pragma once

#include <cstddef>
#include <cstdint>

namespace vitcod {

struct BufferConfig {
  std::uint64_t act_gb0_gb1_bytes = 256 * 1024;  // Q/K/S/V + index + output
  std::uint64_t qkv_input_bytes = 128 * 1024;
  std::uint64_t index_bytes = 20 * 1024;
  std::uint64_t output_bytes = 108 * 1024;
  std::uint64_t weight_gb_bytes = 64 * 1024;
};

// Per-event energy. No defaults are calibrated against silicon; see
// calibrate_pj_per_mac() in analysis.hpp.
struct EnergyConfig {
  double pj_per_mac = 0.5;
  double pj_per_dram_byte = 20.0;
  double pj_per_sram_byte = 1.0;
};

struct HwConfig {
  std::size_t mac_lines = 64;
  std::size_t macs_per_line = 8;
  double freq_hz = 500e6;
  double dram_bw_bytes_per_s = 76.8e9;
  std::size_t elem_bytes = 2;
  std::uint64_t total_sram_bytes = 320 * 1024;
  BufferConfig buffers;
  std::size_t softmax_units = 16;
  EnergyConfig energy;
  // Lines per encoder/decoder stream; Q and K streams run side by side.
  std::size_t dec_enc_lines = 4;
  std::uint64_t schedule_setup_cycles = 100;

  std::size_t total_macs() const { return mac_lines * macs_per_line; }
  double bytes_per_cycle() const { return dram_bw_bytes_per_s / freq_hz; }
  // ceil(bytes / bytes_per_cycle), exact for representable ratios.
  std::uint64_t movement_cycles(std::uint64_t bytes) const;
  double peak_flops() const {
    return 2.0 * static_cast<double>(total_macs()) * freq_hz;
  }

  // Throws ConfigError naming the violated constraint.
  void validate() const;
};

// 64 MAC lines x 8 MACs, 500 MHz, 76.8 GB/s, 320 KB SRAM split as
// 128 KB Q/K/S/V + 20 KB index + 108 KB output + 64 KB weights.
inline HwConfig default_hw() { return HwConfig{}; }

}  // namespace vitcod
