#include <cmath>
#include <numeric>

#include "doctest.h"
#include "event_sim.hpp"
#include "test_util.hpp"
#include "vitcod/errors.hpp"
#include "vitcod/maskgen.hpp"
#include "vitcod/simulator.hpp"

using namespace vitcod;

namespace {

MaskResult from_mask(const BinaryMatrix& m, std::size_t n_gt) {
  MaskResult r;
  r.n = m.rows();
  r.mask = m;
  r.perm.resize(r.n);
  std::iota(r.perm.begin(), r.perm.end(), std::size_t{0});
  r.n_gt = n_gt;
  return r;
}

MaskResult worked_result() {
  const AttentionMap a(4, {0.7, 0.1, 0.1, 0.1, 0.1, 0.6, 0.2, 0.1, 0.25, 0.25, 0.25, 0.25, 0.05, 0.05, 0.8, 0.1});
  return split_and_conquer(a, 0.7, 2);
}

HwConfig small_hw(std::size_t lines, std::size_t macs) {
  HwConfig hw;
  hw.mac_lines = lines;
  hw.macs_per_line = macs;
  return hw;
}

const UnitStat& unit(const SimReport& r, const std::string& phase, const std::string& name) {
  for (const auto& u : r.units)
    if (u.phase == phase && u.unit == name) return u;
  FAIL("missing unit " << phase << "/" << name);
  return r.units.front();
}

MaskResult deit_mask(double sparsity, std::uint64_t seed = 7) {
  const auto a = gen_synthetic_attention(197, 10, 5, 0.05, seed);
  return split_and_conquer(a, theta_for_sparsity(a, sparsity), 98);
}

const LayerShape kDeitBase = LayerShape::make(197, 12, 64, 3072);

}  // namespace

TEST_CASE("bandwidth constant") {
  const auto hw = default_hw();
  CHECK(hw.bytes_per_cycle() == doctest::Approx(153.6));
  CHECK(hw.total_macs() == 512);
  CHECK(hw.movement_cycles(0) == 0);
  CHECK(hw.movement_cycles(1536) == 10);
  CHECK(hw.movement_cycles(1537) == 11);
}

TEST_CASE("hw config validation") {
  CHECK_NOTHROW(default_hw().validate());
  auto hw = default_hw();
  hw.mac_lines = 0;
  CHECK_THROWS_AS(hw.validate(), ConfigError);
  hw = default_hw();
  hw.elem_bytes = 3;
  CHECK_THROWS_AS(hw.validate(), ConfigError);
  hw = default_hw();
  hw.buffers.output_bytes = 200 * 1024;
  CHECK_THROWS_AS(hw.validate(), ConfigError);
  hw = default_hw();
  hw.total_sram_bytes = 100 * 1024;
  CHECK_THROWS_AS(hw.validate(), ConfigError);
  hw = default_hw();
  hw.dram_bw_bytes_per_s = 0.0;
  CHECK_THROWS_AS(hw.validate(), ConfigError);
}

TEST_CASE("layer shape") {
  CHECK(kDeitBase.d == 768);
  CHECK_THROWS_AS(LayerShape::make(0, 12, 64, 3072), ArgumentError);
  LayerShape bad{4, 2, 8, 15, 0};
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
}

TEST_CASE("allocate_pes") {
  const auto hw = default_hw();
  SUBCASE("equal workloads split evenly") {
    BinaryMatrix m(8, 8);
    for (std::size_t r = 0; r < 8; ++r) m.set(r, 0);  // dense block: 8 scores
    for (std::size_t r = 0; r < 8; ++r) m.set(r, 1 + r % 7);
    const auto split = split_workloads(from_mask(m, 1));
    REQUIRE(split.dense_scores() == split.sparse_nnz());
    const auto a = allocate_pes(split, hw);
    CHECK(a.denser_lines == 32);
    CHECK(a.sparser_lines == 32);
    CHECK(a.denser_buffer_bytes + a.sparser_buffer_bytes == hw.buffers.qkv_input_bytes);
  }
  SUBCASE("proportional to workload") {
    BinaryMatrix m(197, 197);
    std::size_t placed = 0;
    for (std::size_t c = 20; c < 197 && placed < 1000; ++c)
      for (std::size_t r = 0; r < 197 && placed < 1000; r += 3, ++placed) m.set(r, c);
    const auto split = split_workloads(from_mask(m, 20));
    REQUIRE(split.dense_scores() == 3940);
    REQUIRE(split.sparse_nnz() == 1000);
    const auto a = allocate_pes(split, hw);
    CHECK(a.denser_lines == 51);
    CHECK(a.sparser_lines == 13);
  }
  SUBCASE("an empty region gives every line to the other engine") {
    const auto dense = allocate_pes(split_workloads(from_mask(BinaryMatrix(6, 6, 1), 6)), hw);
    CHECK(dense.denser_lines == 64);
    CHECK(dense.sparser_lines == 0);
    const auto sparse = allocate_pes(split_workloads(from_mask(BinaryMatrix::identity(6), 0)), hw);
    CHECK(sparse.denser_lines == 0);
    CHECK(sparse.sparser_lines == 64);
  }
  SUBCASE("both empty is an argument error") {
    CHECK_THROWS_AS(allocate_pes(split_workloads(from_mask(BinaryMatrix(6, 6), 0)), hw), ArgumentError);
  }
  SUBCASE("one line is time shared") {
    const auto a = allocate_pes(split_workloads(worked_result()), small_hw(1, 8));
    CHECK(a.time_shared);
  }
  SUBCASE("lines always sum to mac_lines") {
    Rng rng(3);
    for (int t = 0; t < 40; ++t) {
      const auto r = split_and_conquer(testutil::random_map(12, rng), rng.uniform(0.3, 0.95), rng.below(6));
      const auto split = split_workloads(r);
      if (split.total_scores() == 0) continue;
      const auto a = allocate_pes(split, hw);
      CHECK(a.denser_lines + a.sparser_lines == 64);
      if (split.dense_scores() > 0) CHECK(a.denser_lines >= 1);
      if (split.sparse_nnz() > 0) CHECK(a.sparser_lines >= 1);
    }
  }
}

TEST_CASE("sddmm compute cycles") {
  const auto hw = small_hw(1, 8);
  const auto shape = LayerShape::make(4, 1, 8, 16);
  SUBCASE("dense 4x4 on one line") {
    const auto split = split_workloads(from_mask(BinaryMatrix(4, 4, 1), 4));
    const auto rep = sim_sddmm_kstationary(split, shape, hw, allocate_pes(split, hw));
    CHECK(rep.phase("sddmm")->compute_cycles == 16);
    CHECK(unit(rep, "sddmm", "sparser").cycles == 0);
  }
  SUBCASE("worked example on one line") {
    const auto r = worked_result();
    REQUIRE(r.mask.nnz() == 7);
    const auto split = split_workloads(r);
    CHECK(split.dense_scores() == 4);
    CHECK(split.sparse_nnz() == 4);
    const auto rep = sim_sddmm_kstationary(split, shape, hw, allocate_pes(split, hw));
    CHECK(rep.phase("sddmm")->compute_cycles == 8);
    CHECK(rep.phase("sddmm")->mac_ops == 8 * 8);
  }
}

TEST_CASE("sddmm movement accounting") {
  const auto hw = default_hw();
  const auto shape = LayerShape::make(4, 1, 8, 16);
  const auto split = split_workloads(from_mask(BinaryMatrix(4, 4, 1), 4));
  const auto rep = sim_sddmm_kstationary(split, shape, hw, allocate_pes(split, hw));
  // Everything resident: Q and K once each, scores written back.
  CHECK(rep.traffic.q == 4 * 8 * 2);
  CHECK(rep.traffic.k == 4 * 8 * 2);
  CHECK(rep.traffic.scores == 16 * 2);
  const auto* p = rep.phase("sddmm");
  CHECK(p->dram_bytes_in == 128);
  CHECK(p->dram_bytes_out == 32);
  CHECK(p->movement_cycles == hw.movement_cycles(160));
}

TEST_CASE("autoencoder halves Q/K bytes exactly") {
  Rng rng(11);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 8 + rng.below(40);
    const std::size_t h = 2 * (1 + rng.below(6));
    const std::size_t d_k = 8 << rng.below(3);
    HwConfig hw;
    hw.mac_lines = 1 + rng.below(64);
    if (rng.uniform() < 0.5) hw.buffers.qkv_input_bytes = 16 * 1024;  // force Q reloads
    const auto shape = LayerShape::make(n, h, d_k, 4 * h * d_k);
    const auto r = split_and_conquer(testutil::random_map(n, rng), rng.uniform(0.4, 0.95), rng.below(n / 2));
    const auto split = split_workloads(r);
    const auto alloc = allocate_pes(split, hw);
    const auto off = sim_sddmm_kstationary(split, shape, hw, alloc, {false, 0.5, true});
    const auto on = sim_sddmm_kstationary(split, shape, hw, alloc, {true, 0.5, true});
    CAPTURE(t);
    CHECK(2 * on.traffic.q == off.traffic.q);
    CHECK(2 * on.traffic.k == off.traffic.k);
    CHECK(on.traffic.scores == off.traffic.scores);
    CHECK(unit(on, "sddmm", "denser").cycles == unit(off, "sddmm", "denser").cycles);
  }
}

TEST_CASE("query forwarding") {
  const auto hw = default_hw();
  const auto r = deit_mask(0.9);
  const auto split = split_workloads(r);
  const auto alloc = allocate_pes(split, hw);
  const auto on = sim_sddmm_kstationary(split, kDeitBase, hw, alloc, {false, 0.5, true});
  const auto off = sim_sddmm_kstationary(split, kDeitBase, hw, alloc, {false, 0.5, false});
  CHECK(off.traffic.q_forward_hits == 0);
  CHECK(on.traffic.q_forward_hits > 0);
  CHECK(on.traffic.q + on.traffic.q_forward_bytes == off.traffic.q);
  CHECK(on.traffic.k == off.traffic.k);
}

TEST_CASE("spmm compute cycles") {
  const auto hw = small_hw(1, 8);
  const auto shape = LayerShape::make(4, 1, 8, 16);
  SUBCASE("dense") {
    const auto split = split_workloads(from_mask(BinaryMatrix(4, 4, 1), 4));
    const auto rep = sim_spmm_outputstationary(split, shape, hw, allocate_pes(split, hw));
    CHECK(rep.phase("spmm")->compute_cycles == 16);
  }
  SUBCASE("eight nonzeros") {
    const auto split = split_workloads(worked_result());
    const auto rep = sim_spmm_outputstationary(split, shape, hw, allocate_pes(split, hw));
    CHECK(rep.phase("spmm")->compute_cycles == 8);
  }
  SUBCASE("empty S moves only V and V'") {
    const auto split = split_workloads(from_mask(BinaryMatrix(4, 4), 0));
    EngineAlloc alloc;
    alloc.denser_lines = 1;
    alloc.denser_buffer_bytes = hw.buffers.qkv_input_bytes;
    const auto rep = sim_spmm_outputstationary(split, shape, hw, alloc);
    const auto* p = rep.phase("spmm");
    CHECK(p->compute_cycles == 0);
    CHECK(p->dram_bytes_in == 64);
    CHECK(p->dram_bytes_out == 64);
    CHECK(p->movement_cycles == hw.movement_cycles(128));
  }
}

TEST_CASE("softmax") {
  HwConfig hw;
  CHECK(sim_softmax(0, hw).total.compute_cycles == 0);
  hw.softmax_units = 8;
  CHECK(sim_softmax(1536, hw).total.compute_cycles == 192);
  hw.softmax_units = 1;
  CHECK(sim_softmax(197 * 197, hw).total.compute_cycles == 197 * 197);
}

TEST_CASE("dense gemm") {
  CHECK(sim_gemm_dense(1, 1, 1, small_hw(1, 1), 1).total.compute_cycles == 1);
  const auto hw = default_hw();
  const auto full = sim_gemm_dense(197, 768, 768, hw, 64);
  CHECK(full.total.compute_cycles == 226944);
  CHECK(full.total.mac_ops == 116195328ull);
  const auto half = sim_gemm_dense(197, 768, 768, hw, 32);
  CHECK(half.total.compute_cycles == 2 * full.total.compute_cycles);
  const auto odd = sim_gemm_dense(3, 5, 7, hw, 2);
  CHECK(odd.total.compute_cycles == (105 + 15) / 16);
  CHECK(sim_gemm_dense(3, 5, 7, hw, 4).total.compute_cycles == (105 + 31) / 32);
  // 768x768 fp16 weights are 1.125 MB: 18 tiles of 64 KB, activations reloaded per tile.
  CHECK(full.traffic.weights == 768ull * 768 * 2);
  CHECK(full.traffic.activations == 197ull * 768 * 2 * 18);
  CHECK_THROWS_AS(sim_gemm_dense(0, 1, 1, hw, 1), ArgumentError);
}

TEST_CASE("s-stationary baseline") {
  SUBCASE("4x4 grid") {
    const auto hw = small_hw(2, 8);
    CHECK(sstationary_grid(hw) == std::pair<std::size_t, std::size_t>{4, 4});
    const auto rep = sim_sstationary_baseline(LayerShape::make(4, 1, 8, 16), hw);
    CHECK(rep.total.compute_cycles == 8);
  }
  SUBCASE("DeiT-Base on 512 PEs") {
    const auto hw = default_hw();
    CHECK(sstationary_grid(hw) == std::pair<std::size_t, std::size_t>{32, 16});
    const auto rep = sim_sstationary_baseline(kDeitBase, hw);
    CHECK(rep.total.compute_cycles == 69888);
    const auto masked = sim_sstationary_baseline(kDeitBase, hw, deit_mask(0.9));
    CHECK(masked.total.movement_cycles == rep.total.movement_cycles);
    CHECK(masked.total.dram_bytes_in == rep.total.dram_bytes_in);
    CHECK(masked.total == rep.total);
    CHECK_THROWS_AS(sim_sstationary_baseline(kDeitBase, hw, worked_result()), ShapeError);
  }
}

TEST_CASE("encoder engine") {
  const auto hw = default_hw();
  const auto rep = sim_encoder_engine(kDeitBase, hw, 0.5);
  // ceil(12 * 6 * 197 * 64 / 32)
  CHECK(rep.total.compute_cycles == 28368);
  CHECK(sim_encoder_engine(kDeitBase, hw, 1.0).total.compute_cycles == 56736);
  auto none = hw;
  none.dec_enc_lines = 0;
  CHECK_THROWS_AS(sim_encoder_engine(kDeitBase, none, 0.5), ConfigError);
  const auto r = deit_mask(0.9);
  CHECK_THROWS_AS(sim_attention_layer(r, kDeitBase, none, {true, 0.5, true}), ConfigError);
  CHECK_NOTHROW(sim_attention_layer(r, kDeitBase, none, {false, 0.5, true}));
}

TEST_CASE("derive_engine_config") {
  const auto hw = default_hw();
  SUBCASE("dense mask leaves the sparser engine idle") {
    const auto s = derive_engine_config(from_mask(BinaryMatrix(16, 16, 1), 16), LayerShape::make(16, 2, 8, 64), hw);
    CHECK(s.alloc.sparser_lines == 0);
    CHECK(s.sparser.active_columns == 0);
    CHECK(s.denser.q_resident);
  }
  SUBCASE("worked example fits in one tile") {
    const auto r = worked_result();
    const auto s = derive_engine_config(r, LayerShape::make(4, 1, 8, 16), hw);
    const auto alloc = allocate_pes(split_workloads(r), hw);
    CHECK(s.alloc.denser_lines == alloc.denser_lines);
    CHECK(s.alloc.sparser_lines == alloc.sparser_lines);
    CHECK(s.denser.q_resident);
    CHECK(s.sparser.q_resident);
    CHECK(s.denser.passes == 1);
    CHECK(s.modes.size() == 2);
    CHECK(s.modes[0].mode == AccumulationMode::InterPe);
    CHECK(s.modes[1].mode == AccumulationMode::IntraPe);
  }
  SUBCASE("a large layer needs several Q passes") {
    const auto shape = LayerShape::make(200, 12, 64, 3072);
    const auto s = derive_engine_config(from_mask(BinaryMatrix(200, 200, 1), 200), shape, hw);
    CHECK_FALSE(s.denser.q_resident);
    // (128 KB - 2 rows) / 1536 B rows = 83 K columns per pass.
    CHECK(s.denser.k_tile_columns == 83);
    CHECK(s.denser.passes == 3);
    CHECK(s.denser.q_reloads() > 1);
    CHECK(s.denser.q_rows_total() == 600);
  }
  SUBCASE("infeasible buffers name the constraint") {
    auto tiny = hw;
    tiny.buffers.qkv_input_bytes = 1024;
    try {
      derive_engine_config(worked_result(), LayerShape::make(4, 12, 64, 16), tiny);
      FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("qkv_input_bytes") != std::string::npos);
    }
    auto narrow = hw;
    narrow.buffers.output_bytes = 64;
    try {
      derive_engine_config(worked_result(), LayerShape::make(4, 1, 64, 16), narrow);
      FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("output_bytes") != std::string::npos);
    }
  }
}

TEST_CASE("attention layer accounting") {
  const auto hw = default_hw();
  for (double sp : {0.5, 0.9, 0.95}) {
    for (bool ae : {false, true}) {
      const auto rep = sim_attention_layer(deit_mask(sp), kDeitBase, hw, {ae, 0.5, true});
      CAPTURE(sp);
      CAPTURE(ae);
      CHECK(rep.name == (ae ? "vitcod-ae" : "vitcod"));
      REQUIRE(rep.phases.size() == 3);
      CHECK(rep.phases[0].first == "preprocess");
      CHECK(rep.phases[1].first == "sddmm");
      CHECK(rep.phases[2].first == "spmm");
      PhaseCost sum;
      double energy = 0.0;
      for (const auto& [name, c] : rep.phases) {
        CHECK(c.overlapped_cycles >= std::max(c.compute_cycles, c.movement_cycles));
        CHECK(c.overlapped_cycles <= c.compute_cycles + c.movement_cycles + c.preprocess_cycles);
        // The index load is charged as preprocessing, not as overlappable movement.
        if (name != "preprocess") CHECK(c.movement_cycles == hw.movement_cycles(c.dram_bytes_in + c.dram_bytes_out));
        const double e = hw.energy.pj_per_mac * c.mac_ops +
                         hw.energy.pj_per_dram_byte * (c.dram_bytes_in + c.dram_bytes_out) +
                         hw.energy.pj_per_sram_byte * c.sram_bytes;
        CHECK(c.energy_pj == doctest::Approx(e));
        energy += e;
        sum += c;
      }
      CHECK(sum.compute_cycles == rep.total.compute_cycles);
      CHECK(sum.movement_cycles == rep.total.movement_cycles);
      CHECK(sum.overlapped_cycles == rep.total.overlapped_cycles);
      CHECK(sum.mac_ops == rep.total.mac_ops);
      CHECK(rep.total.energy_pj == doctest::Approx(energy));
      CHECK(rep.utilization > 0.0);
      CHECK(rep.utilization <= 1.0);
      const auto& pre = *rep.phase("preprocess");
      CHECK(pre.movement_cycles == 0);
      CHECK(pre.preprocess_cycles == hw.movement_cycles(pre.dram_bytes_in) + hw.schedule_setup_cycles);
    }
  }
}

TEST_CASE("attention layer trends") {
  const auto hw = default_hw();
  std::uint64_t prev = UINT64_MAX;
  for (double sp : {0.5, 0.6, 0.7, 0.8, 0.9, 0.95}) {
    const auto t = sim_attention_layer(deit_mask(sp), kDeitBase, hw).overlapped_total();
    CHECK(t < prev);
    prev = t;
  }
  SUBCASE("an all-dense mask reduces to the denser engine") {
    const auto shape = LayerShape::make(16, 2, 8, 64);
    const auto r = from_mask(BinaryMatrix(16, 16, 1), 16);
    const auto rep = sim_attention_layer(r, shape, hw);
    const auto split = split_workloads(r);
    const auto alloc = allocate_pes(split, hw);
    CHECK(unit(rep, "sddmm", "sparser").cycles == 0);
    CHECK(unit(rep, "spmm", "sparser").cycles == 0);
    CHECK(rep.phase("spmm")->compute_cycles ==
          sim_spmm_outputstationary(split, shape, hw, alloc).total.compute_cycles);
  }
  SUBCASE("ae helps a movement-bound layer") {
    auto slow = hw;
    slow.dram_bw_bytes_per_s *= 0.05;
    const auto r = deit_mask(0.9);
    const auto off = sim_attention_layer(r, kDeitBase, slow, {false, 0.5, true});
    const auto on = sim_attention_layer(r, kDeitBase, slow, {true, 0.5, true});
    const auto* p = off.phase("sddmm");
    REQUIRE(p->movement_cycles > p->compute_cycles);
    CHECK(on.overlapped_total() < off.overlapped_total());
  }
  SUBCASE("skip-zeros never computes more than compute-all") {
    const auto r = deit_mask(0.9);
    const auto all = sim_attention_layer(r, kDeitBase, hw, {false, 0.5, true, DenseBlockPolicy::ComputeAll});
    const auto skip = sim_attention_layer(r, kDeitBase, hw, {false, 0.5, true, DenseBlockPolicy::SkipZeros});
    CHECK(skip.total.mac_ops <= all.total.mac_ops);
  }
  CHECK_THROWS_AS(sim_attention_layer(worked_result(), kDeitBase, hw), ShapeError);
}

TEST_CASE("analytic cycles match the event simulation") {
  Rng rng(2024);
  int checked = 0;
  for (std::size_t n = 2; n <= 16; n += 2) {
    for (std::size_t d_k : {4, 8, 16}) {
      for (std::size_t lines : {1, 2, 4}) {
        for (int rep = 0; rep < 3; ++rep) {
          auto hw = small_hw(lines, 8);
          hw.softmax_units = 1 + rng.below(4);
          const std::size_t h = 1 + rng.below(2);
          const auto policy = rep == 2 ? DenseBlockPolicy::SkipZeros : DenseBlockPolicy::ComputeAll;
          const auto r = split_and_conquer(testutil::random_map(n, rng), rng.uniform(0.3, 0.95), rng.below(n));
          const auto split = split_workloads(r, policy);
          if (split.total_scores() == 0) continue;
          const auto shape = LayerShape::make(n, h, d_k, 4 * h * d_k);
          const auto alloc = allocate_pes(split, hw);
          const auto sim = sim_attention_layer(r, shape, hw, {false, 0.5, true, policy});

          oracle::EventSetup es;
          es.n = n;
          es.h = h;
          es.d_k = d_k;
          es.macs_per_line = 8;
          es.mask.assign(r.mask.bits().begin(), r.mask.bits().end());
          es.n_gt = r.n_gt;
          es.compute_all = policy == DenseBlockPolicy::ComputeAll;
          es.denser_lines = alloc.denser_lines;
          es.sparser_lines = alloc.sparser_lines;
          es.time_shared = alloc.time_shared;
          es.softmax_units = hw.softmax_units;
          const auto ev = oracle::simulate_events(es);

          CAPTURE(n);
          CAPTURE(d_k);
          CAPTURE(lines);
          CHECK(unit(sim, "sddmm", "denser").cycles == ev.sddmm_denser);
          CHECK(unit(sim, "sddmm", "sparser").cycles == ev.sddmm_sparser);
          CHECK(unit(sim, "sddmm", "softmax").cycles == ev.softmax);
          CHECK(sim.phase("sddmm")->compute_cycles == ev.sddmm_phase);
          CHECK(unit(sim, "spmm", "denser").cycles == ev.spmm_denser);
          CHECK(unit(sim, "spmm", "sparser").cycles == ev.spmm_sparser);
          CHECK(sim.phase("spmm")->compute_cycles == ev.spmm_phase);
          ++checked;
        }
      }
    }
  }
  CHECK(checked > 150);
}

TEST_CASE("vit block") {
  const auto hw = default_hw();
  const auto dense = from_mask(BinaryMatrix(197, 197, 1), 197);
  const auto block = sim_vit_block(kDeitBase, dense, hw);
  const auto attn = sim_attention_layer(dense, kDeitBase, hw);
  CHECK(block.overlapped_total() >= attn.overlapped_total());
  CHECK(block.phase("qkv_proj") != nullptr);
  CHECK(block.phase("mlp_fc2") != nullptr);

  // FLOP accounting, written out independently.
  const double n = 197, d = 768, hid = 3072, heads = 12, dk = 64;
  const double mlp_flops = 2 * n * d * hid;
  const double all_flops = 3 * n * d * d + n * d * d + mlp_flops + 2 * heads * n * n * dk;
  const double mlp_cycles = static_cast<double>(block.phase("mlp_fc1")->compute_cycles +
                                                block.phase("mlp_fc2")->compute_cycles);
  const double share = mlp_cycles / static_cast<double>(block.total.compute_cycles);
  CHECK(share == doctest::Approx(mlp_flops / all_flops).epsilon(0.02));

  const auto base = sim_sstationary_block(kDeitBase, hw);
  CHECK(base.phase("mlp_fc1")->compute_cycles == block.phase("mlp_fc1")->compute_cycles);
  CHECK(base.overlapped_total() >= sim_sstationary_attention(kDeitBase, hw).overlapped_total());

  const auto ae = sim_vit_block(kDeitBase, deit_mask(0.9), hw, {true, 0.5, true});
  CHECK(ae.phase("qkv_proj")->dram_bytes_out == 197ull * 64 * 2 * (12 + 12));
  CHECK(unit(ae, "qkv_proj", "encoder").cycles == 28368);

  LayerShape no_mlp = kDeitBase;
  no_mlp.mlp_hidden = 0;
  CHECK_THROWS_AS(sim_vit_block(no_mlp, dense, hw), ArgumentError);
}
