#include "vitcod/serialize.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "vitcod/errors.hpp"
#include "vitcod/sparse_format.hpp"

namespace vitcod {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("cannot read " + path.string());
  return ss.str();
}

Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(what + ": " + e.what());
  }
}

namespace {

template <class T>
void read_field(const Json& j, const char* key, T& out, const std::string& ctx) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(ctx + "." + key + " has the wrong type");
  }
}

void reject_unknown(const Json& j, std::initializer_list<const char*> keys, const std::string& ctx) {
  if (!j.is_object()) throw ConfigError(ctx + " must be an object");
  for (const auto& [k, v] : j.items()) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known) throw ConfigError("unknown key " + ctx + "." + k);
  }
}

template <class T>
T need(const Json& j, const char* key, const std::string& ctx) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(ctx + ": missing '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw FormatError(ctx + ": '" + key + "' has the wrong type");
  }
}

const char* mode_name(PruneMode m) { return m == PruneMode::PerQuery ? "per-query" : "whole-map"; }

}  // namespace

Json to_json(const HwConfig& hw) {
  const auto& b = hw.buffers;
  const auto& e = hw.energy;
  return Json{
      {"mac_lines", hw.mac_lines},
      {"macs_per_line", hw.macs_per_line},
      {"freq_hz", hw.freq_hz},
      {"dram_bw_bytes_per_s", hw.dram_bw_bytes_per_s},
      {"elem_bytes", hw.elem_bytes},
      {"total_sram_bytes", hw.total_sram_bytes},
      {"buffers",
       {{"act_gb0_gb1_bytes", b.act_gb0_gb1_bytes},
        {"qkv_input_bytes", b.qkv_input_bytes},
        {"index_bytes", b.index_bytes},
        {"output_bytes", b.output_bytes},
        {"weight_gb_bytes", b.weight_gb_bytes}}},
      {"softmax_units", hw.softmax_units},
      {"energy",
       {{"pj_per_mac", e.pj_per_mac}, {"pj_per_dram_byte", e.pj_per_dram_byte}, {"pj_per_sram_byte", e.pj_per_sram_byte}}},
      {"dec_enc_lines", hw.dec_enc_lines},
      {"schedule_setup_cycles", hw.schedule_setup_cycles},
  };
}

HwConfig hw_from_json(const Json& j) {
  HwConfig hw;
  reject_unknown(j,
                 {"mac_lines", "macs_per_line", "freq_hz", "dram_bw_bytes_per_s", "elem_bytes",
                  "total_sram_bytes", "buffers", "softmax_units", "energy", "dec_enc_lines",
                  "schedule_setup_cycles"},
                 "hw");
  read_field(j, "mac_lines", hw.mac_lines, "hw");
  read_field(j, "macs_per_line", hw.macs_per_line, "hw");
  read_field(j, "freq_hz", hw.freq_hz, "hw");
  read_field(j, "dram_bw_bytes_per_s", hw.dram_bw_bytes_per_s, "hw");
  read_field(j, "elem_bytes", hw.elem_bytes, "hw");
  read_field(j, "total_sram_bytes", hw.total_sram_bytes, "hw");
  read_field(j, "softmax_units", hw.softmax_units, "hw");
  read_field(j, "dec_enc_lines", hw.dec_enc_lines, "hw");
  read_field(j, "schedule_setup_cycles", hw.schedule_setup_cycles, "hw");
  if (j.contains("buffers")) {
    const auto& b = j["buffers"];
    reject_unknown(b, {"act_gb0_gb1_bytes", "qkv_input_bytes", "index_bytes", "output_bytes", "weight_gb_bytes"},
                   "hw.buffers");
    read_field(b, "act_gb0_gb1_bytes", hw.buffers.act_gb0_gb1_bytes, "hw.buffers");
    read_field(b, "qkv_input_bytes", hw.buffers.qkv_input_bytes, "hw.buffers");
    read_field(b, "index_bytes", hw.buffers.index_bytes, "hw.buffers");
    read_field(b, "output_bytes", hw.buffers.output_bytes, "hw.buffers");
    read_field(b, "weight_gb_bytes", hw.buffers.weight_gb_bytes, "hw.buffers");
  }
  if (j.contains("energy")) {
    const auto& e = j["energy"];
    reject_unknown(e, {"pj_per_mac", "pj_per_dram_byte", "pj_per_sram_byte"}, "hw.energy");
    read_field(e, "pj_per_mac", hw.energy.pj_per_mac, "hw.energy");
    read_field(e, "pj_per_dram_byte", hw.energy.pj_per_dram_byte, "hw.energy");
    read_field(e, "pj_per_sram_byte", hw.energy.pj_per_sram_byte, "hw.energy");
  }
  hw.validate();
  return hw;
}

HwConfig load_hw(const std::filesystem::path& path) {
  return hw_from_json(parse_json(read_text(path), path.string()));
}

Json to_json(const MaskResult& r) {
  const auto csc = to_csc(r.mask);
  Json j{
      {"n", r.n},
      {"theta_p", r.theta_p},
      {"theta_d", r.theta_d},
      {"perm", r.perm},
      {"n_gt", r.n_gt},
      {"mask_csc", {{"col_ptr", csc.col_ptr}, {"row_idx", csc.row_idx}}},
      {"mode", mode_name(r.mode)},
      {"rows_permuted", r.rows_permuted},
  };
  if (r.layer_id) j["layer_id"] = *r.layer_id;
  if (r.head_id) j["head_id"] = *r.head_id;
  return j;
}

MaskResult mask_from_json(const Json& j) {
  const std::string ctx = "mask";
  MaskResult r;
  r.n = need<std::size_t>(j, "n", ctx);
  r.theta_p = need<double>(j, "theta_p", ctx);
  r.theta_d = need<std::size_t>(j, "theta_d", ctx);
  r.perm = need<std::vector<std::size_t>>(j, "perm", ctx);
  r.n_gt = need<std::size_t>(j, "n_gt", ctx);
  const auto m = need<Json>(j, "mask_csc", ctx);
  CscMask csc;
  csc.n_rows = r.n;
  csc.n_cols = r.n;
  csc.col_ptr = need<std::vector<std::uint32_t>>(m, "col_ptr", ctx + ".mask_csc");
  csc.row_idx = need<std::vector<std::uint16_t>>(m, "row_idx", ctx + ".mask_csc");
  r.mask = from_csc(csc);
  if (j.contains("mode")) {
    const auto mode = need<std::string>(j, "mode", ctx);
    if (mode == "per-query") {
      r.mode = PruneMode::PerQuery;
    } else if (mode == "whole-map") {
      r.mode = PruneMode::WholeMap;
    } else {
      throw FormatError("mask: unknown mode '" + mode + "'");
    }
  }
  if (j.contains("rows_permuted")) r.rows_permuted = need<bool>(j, "rows_permuted", ctx);
  if (j.contains("layer_id")) r.layer_id = need<int>(j, "layer_id", ctx);
  if (j.contains("head_id")) r.head_id = need<int>(j, "head_id", ctx);
  check_invariants(r);
  return r;
}

Json to_json(const AeModule& m) {
  return Json{{"h", m.h}, {"h_c", m.h_c}, {"w_enc", m.w_enc}, {"w_dec", m.w_dec}};
}

AeModule ae_from_json(const Json& j) {
  AeModule m;
  m.h = need<std::size_t>(j, "h", "ae");
  m.h_c = need<std::size_t>(j, "h_c", "ae");
  m.w_enc = need<std::vector<double>>(j, "w_enc", "ae");
  m.w_dec = need<std::vector<double>>(j, "w_dec", "ae");
  m.validate();
  return m;
}

namespace {

Json cost_json(const PhaseCost& c) {
  return Json{{"compute_cycles", c.compute_cycles},   {"preprocess_cycles", c.preprocess_cycles},
              {"movement_cycles", c.movement_cycles}, {"overlapped_cycles", c.overlapped_cycles},
              {"dram_bytes_in", c.dram_bytes_in},     {"dram_bytes_out", c.dram_bytes_out},
              {"mac_ops", c.mac_ops},                 {"sram_bytes", c.sram_bytes},
              {"energy_pj", c.energy_pj}};
}

PhaseCost cost_from(const Json& j) {
  const std::string ctx = "report phase";
  PhaseCost c;
  c.compute_cycles = need<std::uint64_t>(j, "compute_cycles", ctx);
  c.preprocess_cycles = need<std::uint64_t>(j, "preprocess_cycles", ctx);
  c.movement_cycles = need<std::uint64_t>(j, "movement_cycles", ctx);
  c.overlapped_cycles = need<std::uint64_t>(j, "overlapped_cycles", ctx);
  c.dram_bytes_in = need<std::uint64_t>(j, "dram_bytes_in", ctx);
  c.dram_bytes_out = need<std::uint64_t>(j, "dram_bytes_out", ctx);
  c.mac_ops = need<std::uint64_t>(j, "mac_ops", ctx);
  c.sram_bytes = need<std::uint64_t>(j, "sram_bytes", ctx);
  c.energy_pj = need<double>(j, "energy_pj", ctx);
  return c;
}

const char* kTrafficKeys[] = {"q",       "k",       "v",           "scores",         "outputs",
                              "index",   "weights", "activations", "q_forward_hits", "q_forward_bytes"};

std::uint64_t* traffic_fields(Traffic& t, std::size_t i) {
  std::uint64_t* f[] = {&t.q,     &t.k,       &t.v,           &t.scores,         &t.outputs,
                        &t.index, &t.weights, &t.activations, &t.q_forward_hits, &t.q_forward_bytes};
  return f[i];
}

}  // namespace

Json to_json(const SimReport& r) {
  Json phases = Json::array();
  for (const auto& [name, c] : r.phases) {
    Json p = cost_json(c);
    p["phase"] = name;
    phases.push_back(std::move(p));
  }
  Json traffic = Json::object();
  Traffic t = r.traffic;
  for (std::size_t i = 0; i < std::size(kTrafficKeys); ++i) traffic[kTrafficKeys[i]] = *traffic_fields(t, i);
  Json units = Json::array();
  for (const auto& u : r.units) {
    units.push_back({{"phase", u.phase}, {"unit", u.unit}, {"cycles", u.cycles}, {"mac_ops", u.mac_ops}});
  }
  return Json{{"name", r.name},
              {"note", r.note},
              {"allocated_macs", r.allocated_macs},
              {"utilization", r.utilization},
              {"total", cost_json(r.total)},
              {"phases", phases},
              {"traffic", traffic},
              {"units", units}};
}

SimReport report_from_json(const Json& j) {
  const std::string ctx = "report";
  SimReport r;
  r.name = need<std::string>(j, "name", ctx);
  if (j.contains("note")) r.note = need<std::string>(j, "note", ctx);
  r.allocated_macs = need<std::uint64_t>(j, "allocated_macs", ctx);
  r.utilization = need<double>(j, "utilization", ctx);
  r.total = cost_from(need<Json>(j, "total", ctx));
  const auto phases = need<Json>(j, "phases", ctx);
  if (!phases.is_array()) throw FormatError("report: 'phases' must be an array");
  for (const auto& p : phases) r.phases.emplace_back(need<std::string>(p, "phase", ctx), cost_from(p));
  if (j.contains("traffic")) {
    const auto& t = j["traffic"];
    for (std::size_t i = 0; i < std::size(kTrafficKeys); ++i) {
      *traffic_fields(r.traffic, i) = need<std::uint64_t>(t, kTrafficKeys[i], ctx + ".traffic");
    }
  }
  if (j.contains("units")) {
    for (const auto& u : j["units"]) {
      r.units.push_back({need<std::string>(u, "phase", ctx), need<std::string>(u, "unit", ctx),
                         need<std::uint64_t>(u, "cycles", ctx), need<std::uint64_t>(u, "mac_ops", ctx)});
    }
  }
  return r;
}

std::string report_csv(const SimReport& r) {
  std::string out = "phase,compute,preprocess,movement,overlapped,dram_in,dram_out,macs,energy_pj\n";
  auto row = [&](const std::string& name, const PhaseCost& c) {
    out += name + "," + std::to_string(c.compute_cycles) + "," + std::to_string(c.preprocess_cycles) + "," +
           std::to_string(c.movement_cycles) + "," + std::to_string(c.overlapped_cycles) + "," +
           std::to_string(c.dram_bytes_in) + "," + std::to_string(c.dram_bytes_out) + "," +
           std::to_string(c.mac_ops) + "," + format_double(c.energy_pj) + "\n";
  };
  for (const auto& [name, c] : r.phases) row(name, c);
  row("total", r.total);
  return out;
}

}  // namespace vitcod
