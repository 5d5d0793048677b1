// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "alg1_trace.hpp"
#include "cli.hpp"
#include "event_sim.hpp"
#include "vitcod/analysis.hpp"
#include "vitcod/autoencoder.hpp"
#include "vitcod/maskgen.hpp"
#include "vitcod/presets.hpp"
#include "vitcod/rng.hpp"
#include "vitcod/serialize.hpp"
#include "vitcod/simulator.hpp"
#include "vitcod/sparse_format.hpp"
#include "vitcod/tensor_io.hpp"

using namespace vitcod;
namespace fs = std::filesystem;

namespace {

// Pinned limits.
constexpr double kAlg1MaxSeconds = 5.0;
constexpr double kAeMaxSeconds = 30.0;
constexpr double kAeNoiselessMse = 1e-6;
constexpr double kAeOptimalFactor = 1.05;
constexpr double kSweepMinGain = 2.0;
constexpr double kLowBandwidthScale = 0.05;
constexpr double kSweepSparsities[] = {0.5, 0.6, 0.7, 0.8, 0.9, 0.95};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

AttentionMap random_map(std::size_t n, Rng& rng) {
  std::vector<double> v(n * n);
  for (std::size_t r = 0; r < n; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      double x = rng.uniform() + 1e-3;
      if (rng.uniform() < 0.2) x *= 10.0;
      v[r * n + c] = x;
      sum += x;
    }
    for (std::size_t c = 0; c < n; ++c) v[r * n + c] /= sum;
  }
  return AttentionMap(n, std::move(v));
}

std::vector<AttentionMap> corpus() {
  Rng rng(2);
  std::vector<AttentionMap> maps;
  for (int i = 0; i < 50; ++i) maps.push_back(random_map(4 + rng.below(45), rng));
  return maps;
}

const LayerShape& deit_base() { return preset("deit-base").shape; }

MaskResult deit_mask(double target) {
  const auto a = gen_synthetic_attention(197, 10, 5, 0.05, 7);
  return split_and_conquer(a, theta_for_sparsity(a, target), 197 / 2);
}

Outcome alg1_equivalence() {
  Rng rng(1);
  int mismatches = 0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng.below(16);
    const auto a = random_map(n, rng);
    const double theta_p = rng.uniform(0.05, 1.0);
    const std::size_t theta_d = rng.below(n + 1);
    const bool whole = t % 3 == 2;
    const bool rows = t % 5 == 4;
    const auto got = split_and_conquer(a, theta_p, theta_d, {whole ? PruneMode::WholeMap : PruneMode::PerQuery, rows});
    const auto want =
        oracle::alg1(n, std::vector<double>(a.scores().begin(), a.scores().end()), theta_p, theta_d, whole, rows);
    const bool same = got.perm == want.idx_d && got.n_gt == want.n_gt &&
                      std::equal(got.mask.bits().begin(), got.mask.bits().end(), want.mask.begin(), want.mask.end()) &&
                      got.reordered_scores == want.reordered;
    mismatches += !same;
  }
  return {mismatches == 0, "200 maps, " + std::to_string(mismatches) + " mismatches"};
}

Outcome threshold_monotonicity() {
  int violations = 0, points = 0;
  for (const auto& a : corpus()) {
    for (auto mode : {PruneMode::PerQuery, PruneMode::WholeMap}) {
      std::size_t prev = 0;
      for (int i = 1; i <= 20; ++i) {
        const std::size_t nnz = prune_mask(a, i / 20.0, mode).nnz();
        violations += nnz < prev;
        prev = nnz;
        ++points;
      }
    }
  }
  return {violations == 0, std::to_string(points) + " sweep points, " + std::to_string(violations) + " violations"};
}

Outcome structural_invariant() {
  Rng rng(3);
  std::size_t columns = 0, bad = 0;
  for (const auto& a : corpus()) {
    for (int i = 1; i <= 20; ++i) {
      const std::size_t theta_d = rng.below(a.n());
      const auto r = split_and_conquer(a, i / 20.0, theta_d);
      for (std::size_t c = 0; c < r.n; ++c) {
        std::size_t count = 0;
        for (std::size_t row = 0; row < r.n; ++row) count += r.mask.at(row, c);
        const bool ok = c < r.n_gt ? count > theta_d : count <= theta_d;
        bad += !ok;
        ++columns;
      }
    }
  }
  return {bad == 0, std::to_string(columns) + " columns checked, " + std::to_string(bad) + " on the wrong side of n_gt"};
}

Outcome csc_round_trip() {
  Rng rng(4);
  int mismatches = 0;
  for (int t = 0; t < 500; ++t) {
    const std::size_t rows = 1 + rng.below(64), cols = 1 + rng.below(64);
    const double density = rng.uniform();
    BinaryMatrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) m.set(r, c, rng.uniform() < density);
    const auto csc = to_csc(m);
    mismatches += !(from_csc(csc) == m) || !(from_csc(decode_csc(encode_csc(csc))) == m);
  }
  return {mismatches == 0, "500 masks, " + std::to_string(mismatches) + " mismatches"};
}

const UnitStat* find_unit(const SimReport& r, const std::string& phase, const std::string& name) {
  for (const auto& u : r.units)
    if (u.phase == phase && u.unit == name) return &u;
  return nullptr;
}

Outcome simulator_oracle() {
  Rng rng(5);
  int instances = 0, mismatches = 0;
  for (std::size_t n = 1; n <= 16; ++n) {
    for (std::size_t d_k : {4, 8, 16}) {
      for (std::size_t lines : {1, 2, 4}) {
        for (int rep = 0; rep < 4; ++rep) {
          HwConfig hw;
          hw.mac_lines = lines;
          hw.softmax_units = 1 + rng.below(4);
          const auto policy = rep % 2 ? DenseBlockPolicy::SkipZeros : DenseBlockPolicy::ComputeAll;
          const std::size_t h = 1 + rng.below(3);
          const auto r = split_and_conquer(random_map(n, rng), rng.uniform(0.2, 1.0), rng.below(n + 1));
          const auto split = split_workloads(r, policy);
          if (split.total_scores() == 0) continue;
          const auto shape = LayerShape::make(n, h, d_k, 4 * h * d_k);
          const auto alloc = allocate_pes(split, hw);
          const auto sim = sim_attention_layer(r, shape, hw, {false, 0.5, true, policy});
          oracle::EventSetup es;
          es.n = n;
          es.h = h;
          es.d_k = d_k;
          es.macs_per_line = hw.macs_per_line;
          es.mask.assign(r.mask.bits().begin(), r.mask.bits().end());
          es.n_gt = r.n_gt;
          es.compute_all = policy == DenseBlockPolicy::ComputeAll;
          es.denser_lines = alloc.denser_lines;
          es.sparser_lines = alloc.sparser_lines;
          es.time_shared = alloc.time_shared;
          es.softmax_units = hw.softmax_units;
          const auto ev = oracle::simulate_events(es);
          const bool same = find_unit(sim, "sddmm", "denser")->cycles == ev.sddmm_denser &&
                            find_unit(sim, "sddmm", "sparser")->cycles == ev.sddmm_sparser &&
                            find_unit(sim, "sddmm", "softmax")->cycles == ev.softmax &&
                            sim.phase("sddmm")->compute_cycles == ev.sddmm_phase &&
                            find_unit(sim, "spmm", "denser")->cycles == ev.spmm_denser &&
                            find_unit(sim, "spmm", "sparser")->cycles == ev.spmm_sparser &&
                            sim.phase("spmm")->compute_cycles == ev.spmm_phase;
          mismatches += !same;
          ++instances;
        }
      }
    }
  }
  return {mismatches == 0 && instances > 0,
          std::to_string(instances) + " instances, " + std::to_string(mismatches) + " mismatches"};
}

Outcome ae_byte_law() {
  Rng rng(6);
  int bad = 0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 8 + rng.below(190);
    const std::size_t h = 2 * (1 + rng.below(6));
    const std::size_t d_k = 16 << rng.below(3);
    HwConfig hw;
    hw.mac_lines = 1 + rng.below(64);
    const auto shape = LayerShape::make(n, h, d_k, 4 * h * d_k);
    const auto r = split_and_conquer(random_map(n, rng), rng.uniform(0.3, 0.95), rng.below(n / 2));
    const auto split = split_workloads(r);
    const auto alloc = allocate_pes(split, hw);
    const auto off = sim_sddmm_kstationary(split, shape, hw, alloc, {false, 0.5, true});
    const auto on = sim_sddmm_kstationary(split, shape, hw, alloc, {true, 0.5, true});
    bad += 2 * on.traffic.qk() != off.traffic.qk();
  }
  return {bad == 0, "20 configs, " + std::to_string(bad) + " with Q/K bytes != exactly half"};
}

Outcome ae_trainer() {
  TrainConfig cfg;
  cfg.epochs = 2000;
  cfg.learning_rate = 0.05;
  const auto clean = make_mixture_samples(8, 4, 2, 16, 8, 0.0, 11);
  const double noiseless = train_ae(clean, 2, cfg).losses.back();
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto data = make_mixture_samples(8, 4, 2, 16, 8, 0.1 + 0.05 * static_cast<double>(seed), 100 + seed);
    cfg.seed = seed;
    const double trained = train_ae(data, 2, cfg).losses.back();
    const auto best = optimal_ae(data, 2);
    worst = std::max(worst, trained / qk_reconstruction_loss(data, best.q, best.k));
  }
  return {noiseless < kAeNoiselessMse && worst <= kAeOptimalFactor,
          "noiseless MSE " + fmt("%.3g", noiseless) + ", worst trained/optimal " + fmt("%.5f", worst) +
              " over 10 datasets"};
}

Outcome sparsity_trend() {
  const auto hw = default_hw();
  const auto base = sim_sstationary_attention(deit_base(), hw).overlapped_total();
  std::vector<double> speedups;
  std::string detail;
  for (double sp : kSweepSparsities) {
    const auto rep = sim_attention_layer(deit_mask(sp), deit_base(), hw);
    speedups.push_back(static_cast<double>(base) / static_cast<double>(rep.overlapped_total()));
    detail += fmt("%.0f%%:", sp * 100) + fmt("%.2fx ", speedups.back());
  }
  bool increasing = true;
  for (std::size_t i = 1; i < speedups.size(); ++i) increasing = increasing && speedups[i] > speedups[i - 1];
  const double gain = speedups[4] / speedups[0];
  return {increasing && gain >= kSweepMinGain, detail + "(90% / 50% = " + fmt("%.2f", gain) + ")"};
}

Outcome movement_share() {
  auto hw = default_hw();
  hw.dram_bw_bytes_per_s *= kLowBandwidthScale;
  const auto mask = deit_mask(0.9);
  const auto off = breakdown(sim_attention_layer(mask, deit_base(), hw, {false, 0.5, true}));
  const auto on = breakdown(sim_attention_layer(mask, deit_base(), hw, {true, 0.5, true}));
  return {on.movement < off.movement,
          "movement share " + fmt("%.3f", off.movement) + " -> " + fmt("%.3f", on.movement) + " with AE at " +
              fmt("%.2f", kLowBandwidthScale) + "x bandwidth"};
}

Outcome roofline_direction() {
  const auto hw = default_hw();
  const auto mask = deit_mask(0.9);
  const auto dense = roofline(sim_sstationary_attention(deit_base(), hw), hw);
  const auto plain = roofline(sim_attention_layer(mask, deit_base(), hw, {false, 0.5, true}), hw);
  const auto ae = roofline(sim_attention_layer(mask, deit_base(), hw, {true, 0.5, true}), hw);
  return {plain.intensity < dense.intensity && ae.intensity > plain.intensity,
          "intensity sparse " + fmt("%.2f", plain.intensity) + ", sparse+AE " + fmt("%.2f", ae.intensity) +
              ", dense " + fmt("%.2f", dense.intensity) + " flop/B"};
}

std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = read_text(e.path());
  }
  return files;
}

Outcome cli_determinism() {
  const fs::path root = fs::temp_directory_path() / ("vitcod_accept_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  {
    std::ofstream(root / "manifest.json") << R"({"preset": "deit-base", "sparsity": 0.9, "seed": 7, "scope": "block"})";
  }
  const std::string manifest = (root / "manifest.json").string();
  const std::vector<std::vector<std::string>> runs = {
      {"mask", "--synthetic", "n=197", "--seed", "7"},
      {"ae-train", "--synthetic", "noise=0.1", "--epochs", "200", "--seed", "7"},
      {"simulate", "--manifest", manifest},
  };
  int files = 0, diffs = 0, failures = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    std::map<std::string, std::string> first;
    for (int rep = 0; rep < 2; ++rep) {
      auto args = runs[i];
      args.insert(args.begin(), "vitcod");
      args.push_back("--out");
      args.push_back((root / (std::to_string(i) + "_" + std::to_string(rep))).string());
      std::ostringstream out, err;
      failures += cli::run(args, out, err) != 0;
      const auto t = tree(args.back());
      if (rep == 0) {
        first = t;
        files += static_cast<int>(t.size());
      } else {
        diffs += t != first;
      }
    }
  }
  fs::remove_all(root);
  return {failures == 0 && diffs == 0 && files > 0,
          "3 subcommands x 2 runs, " + std::to_string(files) + " files, " + std::to_string(diffs) +
              " differing, " + std::to_string(failures) + " failed runs"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> check;
    double max_seconds;
  };
  const std::vector<Criterion> criteria = {
      {1, "split-and-conquer matches the brute-force trace", alg1_equivalence, kAlg1MaxSeconds},
      {2, "pruned nnz is nondecreasing in theta_p", threshold_monotonicity, 0},
      {3, "global columns sit left of n_gt, sparse ones right", structural_invariant, 0},
      {4, "CSC round trip", csc_round_trip, 0},
      {5, "analytic cycles equal the event simulation", simulator_oracle, 0},
      {6, "AE halves Q/K DRAM bytes exactly", ae_byte_law, 0},
      {7, "AE trainer reaches the noiseless floor and the optimum", ae_trainer, kAeMaxSeconds},
      {8, "speedup over S-stationary rises with sparsity", sparsity_trend, 0},
      {9, "AE lowers the movement share at low bandwidth", movement_share, 0},
      {10, "roofline intensity ordering", roofline_direction, 0},
      {11, "CLI reruns are byte-identical", cli_determinism, 0},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.max_seconds > 0 && secs >= c.max_seconds) {
      o.pass = false;
      o.detail += fmt(", over the %.0f s limit", c.max_seconds);
    }
    failed += !o.pass;
    std::printf("%s  %2d  %-56s %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
