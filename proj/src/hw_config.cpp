#include "vitcod/hw_config.hpp"

#include <cmath>
#include <string>

#include "vitcod/errors.hpp"

namespace vitcod {

std::uint64_t HwConfig::movement_cycles(std::uint64_t bytes) const {
  if (bytes == 0) return 0;
  const long double exact = static_cast<long double>(bytes) * static_cast<long double>(freq_hz) /
                            static_cast<long double>(dram_bw_bytes_per_s);
  // Shave rounding noise so integral ratios do not round up by one.
  return static_cast<std::uint64_t>(std::ceil(exact * (1.0L - 1e-15L)));
}

void HwConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("hw config: " + what);
  };
  require(mac_lines > 0, "mac_lines must be positive");
  require(macs_per_line > 0, "macs_per_line must be positive");
  require(freq_hz > 0.0 && std::isfinite(freq_hz), "freq_hz must be positive");
  require(dram_bw_bytes_per_s > 0.0 && std::isfinite(dram_bw_bytes_per_s),
          "dram_bw_bytes_per_s must be positive");
  require(elem_bytes == 1 || elem_bytes == 2 || elem_bytes == 4, "elem_bytes must be 1, 2 or 4");
  require(softmax_units > 0, "softmax_units must be positive");
  require(buffers.qkv_input_bytes > 0 && buffers.index_bytes > 0 && buffers.output_bytes > 0 &&
              buffers.weight_gb_bytes > 0 && buffers.act_gb0_gb1_bytes > 0,
          "buffer sizes must be positive");
  require(buffers.qkv_input_bytes + buffers.index_bytes + buffers.output_bytes <=
              buffers.act_gb0_gb1_bytes,
          "qkv_input + index + output exceeds act_gb0_gb1_bytes");
  require(buffers.act_gb0_gb1_bytes + buffers.weight_gb_bytes <= total_sram_bytes,
          "act_gb0_gb1 + weight_gb exceeds total_sram_bytes");
  require(energy.pj_per_mac >= 0.0 && energy.pj_per_dram_byte >= 0.0 &&
              energy.pj_per_sram_byte >= 0.0,
          "energy coefficients must be nonnegative");
}

}  // namespace vitcod
