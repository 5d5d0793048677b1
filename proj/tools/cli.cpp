#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <filesystem>
#include <fstream>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <thread>
#include <unistd.h>

#include "vitcod/analysis.hpp"
#include "vitcod/autoencoder.hpp"
#include "vitcod/errors.hpp"
#include "vitcod/maskgen.hpp"
#include "vitcod/presets.hpp"
#include "vitcod/serialize.hpp"
#include "vitcod/simulator.hpp"
#include "vitcod/tensor_io.hpp"

namespace vitcod::cli {

namespace fs = std::filesystem;

namespace {

constexpr double kDefaultSparsity = 0.9;

// Every flag is optional so a value can be traced to the command line, the
// manifest or the built-in default, in that order.
struct Flags {
  std::optional<std::string> manifest;
  std::vector<std::string> input;
  std::optional<std::string> synthetic;
  std::optional<double> theta_p;
  std::optional<std::size_t> theta_d;
  std::optional<double> sparsity;
  std::optional<std::string> mode;
  std::optional<bool> permute_rows;
  std::optional<int> layer;
  std::optional<int> head;
  std::optional<std::string> ae;
  std::optional<double> ratio;
  std::optional<std::size_t> epochs;
  std::optional<double> lr;
  std::optional<std::size_t> batch_size;
  std::optional<bool> identity_init;
  std::optional<bool> shared;
  std::optional<std::string> hw;
  std::optional<std::string> preset;
  std::optional<std::string> mask;
  std::optional<std::string> policy;
  std::optional<std::string> scope;
  std::optional<bool> no_forwarding;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> baseline;
  std::vector<std::string> reports;
};

const char* kManifestKeys[] = {"input",    "synthetic",  "theta_p",       "theta_d", "sparsity",
                               "mode",     "permute_rows", "layer",       "head",    "ae",
                               "ratio",    "epochs",     "lr",            "batch_size", "identity_init",
                               "shared",   "hw",         "preset",        "mask",    "policy",
                               "scope",    "no_forwarding", "out",        "seed",    "baseline"};

class Settings {
 public:
  Settings(const Flags& f, Json manifest) : flags_(f), manifest_(std::move(manifest)) {
    if (!manifest_.is_object()) throw ArgumentError("manifest must be a JSON object");
    for (const auto& [key, value] : manifest_.items()) {
      if (std::find_if(std::begin(kManifestKeys), std::end(kManifestKeys),
                       [&](const char* k) { return key == k; }) == std::end(kManifestKeys)) {
        throw ArgumentError("unknown manifest key '" + key + "'");
      }
    }
  }

  template <class T>
  T get(const std::optional<T>& cli, const char* key, T fallback) const {
    if (cli) return *cli;
    if (auto m = from_manifest<T>(key)) return *m;
    return fallback;
  }

  template <class T>
  std::optional<T> get(const std::optional<T>& cli, const char* key) const {
    if (cli) return cli;
    return from_manifest<T>(key);
  }

  std::vector<std::string> inputs() const {
    if (!flags_.input.empty()) return flags_.input;
    if (!manifest_.contains("input")) return {};
    const auto& v = manifest_["input"];
    if (v.is_string()) return {v.get<std::string>()};
    return from_manifest<std::vector<std::string>>("input").value_or(std::vector<std::string>{});
  }

  const Flags& flags() const { return flags_; }

 private:
  template <class T>
  std::optional<T> from_manifest(const char* key) const {
    if (!manifest_.contains(key)) return std::nullopt;
    try {
      return manifest_[key].get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ArgumentError(std::string("manifest key '") + key + "' has the wrong type");
    }
  }

  const Flags& flags_;
  Json manifest_;
};

void write_atomic(const fs::path& path, const std::string& bytes) {
  const fs::path tmp = path.string() + ".tmp" + std::to_string(::getpid()) + "-" +
                       std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + tmp.string());
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    os.flush();
    if (!os) throw IoError("cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move output into place: " + path.string());
  }
}

void write_atomic(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  write_atomic(path, std::string(bytes.begin(), bytes.end()));
}

fs::path prepare_out(const Settings& s) {
  const fs::path dir = s.get(s.flags().out, "out", std::string("out"));
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
  return dir;
}

// "k=v,k=v" with values checked against the allowed keys.
std::map<std::string, double> parse_kv(const std::string& text, std::initializer_list<const char*> allowed) {
  std::map<std::string, double> kv;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ArgumentError("expected key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) == allowed.end()) {
      throw ArgumentError("unknown synthetic key '" + key + "'");
    }
    try {
      std::size_t used = 0;
      const std::string value = item.substr(eq + 1);
      kv[key] = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::logic_error&) {
      throw ArgumentError("bad number for synthetic key '" + key + "'");
    }
  }
  return kv;
}

std::size_t as_count(double v, const char* key) {
  if (!(v >= 0.0) || v != std::floor(v)) throw ArgumentError(std::string(key) + " must be a whole number");
  return static_cast<std::size_t>(v);
}

PruneMode parse_mode(const std::string& m) {
  if (m == "per-query") return PruneMode::PerQuery;
  if (m == "whole-map") return PruneMode::WholeMap;
  throw ArgumentError("--mode must be per-query or whole-map");
}

DenseBlockPolicy parse_policy(const std::string& p) {
  if (p == "compute-all") return DenseBlockPolicy::ComputeAll;
  if (p == "skip-zeros") return DenseBlockPolicy::SkipZeros;
  throw ArgumentError("--policy must be compute-all or skip-zeros");
}

std::string label(const AttentionMap& a, std::size_t index) {
  std::string s = "map " + std::to_string(index);
  if (a.layer_id()) s += " layer " + std::to_string(*a.layer_id());
  if (a.head_id()) s += " head " + std::to_string(*a.head_id());
  return s;
}

std::vector<AttentionMap> load_maps(const Settings& s, std::size_t default_n) {
  const auto inputs = s.inputs();
  if (inputs.size() > 1) throw ArgumentError("mask generation takes one --input");
  const auto synthetic = s.get(s.flags().synthetic, "synthetic");
  if (!inputs.empty() && synthetic) throw ArgumentError("--input and --synthetic are exclusive");
  if (!inputs.empty()) return attention_maps_from(load_array(inputs.front()));
  auto kv = parse_kv(synthetic.value_or(""), {"n", "global", "width", "noise"});
  const std::size_t n = kv.count("n") ? as_count(kv["n"], "n") : default_n;
  const std::size_t global = kv.count("global") ? as_count(kv["global"], "global") : std::max<std::size_t>(1, n / 20);
  const std::size_t width = kv.count("width") ? as_count(kv["width"], "width") : std::min<std::size_t>(5, n);
  const double noise = kv.count("noise") ? kv["noise"] : 0.05;
  return {gen_synthetic_attention(n, global, width, noise, s.get(s.flags().seed, "seed", std::uint64_t{0}))};
}

std::size_t select_map(const Settings& s, const std::vector<AttentionMap>& maps) {
  const auto layer = s.get(s.flags().layer, "layer");
  const auto head = s.get(s.flags().head, "head");
  for (std::size_t i = 0; i < maps.size(); ++i) {
    if (layer && maps[i].layer_id() != layer) continue;
    if (head && maps[i].head_id() != head) continue;
    return i;
  }
  throw ArgumentError("no attention map matches the requested --layer/--head");
}

MaskResult make_mask(const Settings& s, const AttentionMap& a) {
  const auto& f = s.flags();
  SplitOptions opt;
  opt.mode = parse_mode(s.get(f.mode, "mode", std::string("per-query")));
  opt.permute_rows = s.get(f.permute_rows, "permute_rows", false);
  const auto theta_p = s.get(f.theta_p, "theta_p");
  const auto target = s.get(f.sparsity, "sparsity");
  if (theta_p && target) throw ArgumentError("--theta-p and --sparsity are exclusive");
  if (theta_p && !(*theta_p > 0.0 && *theta_p <= 1.0)) throw ArgumentError("--theta-p must be in (0, 1]");
  const double tp = theta_p ? *theta_p : theta_for_sparsity(a, target.value_or(kDefaultSparsity), opt.mode);
  // Global tokens: columns kept by more than half of the queries.
  const std::size_t td = s.get(f.theta_d, "theta_d", a.n() / 2);
  return split_and_conquer(a, tp, td, opt);
}

DenseTensor mask_tensor(const MaskResult& r) {
  std::vector<double> bits(r.mask.bits().begin(), r.mask.bits().end());
  return DenseTensor({r.n, r.n}, std::move(bits));
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

int cmd_mask(const Settings& s, std::ostream& out) {
  const auto maps = load_maps(s, 197);
  const std::size_t chosen = select_map(s, maps);
  const fs::path dir = prepare_out(s);
  std::optional<MaskResult> picked;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    auto r = make_mask(s, maps[i]);
    out << label(maps[i], i) << ": theta_p=" << format_double(r.theta_p) << " theta_d=" << r.theta_d
        << " sparsity=" << format_double(sparsity(r.mask)) << " n_gt=" << r.n_gt << "\n";
    if (i == chosen) picked = std::move(r);
  }
  write_atomic(dir / "mask.json", dump(to_json(*picked)));
  write_atomic(dir / "mask.npy", encode_array(mask_tensor(*picked)));
  out << "wrote " << (dir / "mask.json").string() << " (" << label(maps[chosen], chosen) << ")\n";
  return kExitOk;
}

std::vector<QkSample> load_qk(const Settings& s) {
  const auto inputs = s.inputs();
  const auto synthetic = s.get(s.flags().synthetic, "synthetic");
  const double ratio = s.get(s.flags().ratio, "ratio", 0.5);
  if (!inputs.empty()) {
    if (synthetic) throw ArgumentError("--input and --synthetic are exclusive");
    if (inputs.size() != 2) throw ArgumentError("ae-train takes --input Q.npy --input K.npy");
    auto to_heads = [](const DenseTensor& t) {
      const auto& sh = t.shape();
      std::vector<HeadTensor> v;
      if (sh.size() == 3) {
        v.emplace_back(sh[0], sh[1], sh[2], std::vector<double>(t.data().begin(), t.data().end()));
      } else if (sh.size() == 4) {
        const std::size_t step = sh[1] * sh[2] * sh[3];
        for (std::size_t i = 0; i < sh[0]; ++i) {
          const auto part = t.data().subspan(i * step, step);
          v.emplace_back(sh[1], sh[2], sh[3], std::vector<double>(part.begin(), part.end()));
        }
      } else {
        throw ShapeError("Q/K arrays must be (h, n, d_k) or (samples, h, n, d_k)");
      }
      return v;
    };
    const auto q = to_heads(load_array(inputs[0]));
    const auto k = to_heads(load_array(inputs[1]));
    if (q.size() != k.size()) throw ShapeError("Q and K hold different sample counts");
    std::vector<QkSample> samples;
    for (std::size_t i = 0; i < q.size(); ++i) samples.push_back({q[i], k[i]});
    return samples;
  }
  auto kv = parse_kv(synthetic.value_or(""), {"count", "h", "n", "d_k", "noise"});
  const std::size_t h = kv.count("h") ? as_count(kv["h"], "h") : 4;
  return make_mixture_samples(kv.count("count") ? as_count(kv["count"], "count") : 8, h,
                              compressed_heads(h, ratio), kv.count("n") ? as_count(kv["n"], "n") : 16,
                              kv.count("d_k") ? as_count(kv["d_k"], "d_k") : 8,
                              kv.count("noise") ? kv["noise"] : 0.0,
                              s.get(s.flags().seed, "seed", std::uint64_t{0}));
}

int cmd_ae_train(const Settings& s, std::ostream& out) {
  const auto& f = s.flags();
  const double ratio = s.get(f.ratio, "ratio", 0.5);
  if (!(ratio > 0.0 && ratio <= 1.0)) throw ArgumentError("--ratio must be in (0, 1]");
  const auto samples = load_qk(s);
  if (samples.empty()) throw ArgumentError("no training samples");
  const std::size_t h_c = compressed_heads(samples.front().q.heads(), ratio);
  TrainConfig cfg;
  cfg.epochs = s.get(f.epochs, "epochs", cfg.epochs);
  cfg.learning_rate = s.get(f.lr, "lr", cfg.learning_rate);
  cfg.batch_size = s.get(f.batch_size, "batch_size", cfg.batch_size);
  cfg.seed = s.get(f.seed, "seed", cfg.seed);
  cfg.identity_init = s.get(f.identity_init, "identity_init", false);
  cfg.shared = s.get(f.shared, "shared", false);
  if (!(cfg.learning_rate > 0.0)) throw ArgumentError("--lr must be positive");
  const fs::path dir = prepare_out(s);
  const auto result = train_ae(samples, h_c, cfg);
  const auto best = optimal_ae(samples, h_c, cfg.shared);
  std::string csv = "epoch,loss\n";
  for (std::size_t e = 0; e < result.losses.size(); ++e) {
    csv += std::to_string(e) + "," + format_double(result.losses[e]) + "\n";
  }
  write_atomic(dir / "ae_q.json", dump(to_json(result.q)));
  write_atomic(dir / "ae_k.json", dump(to_json(result.k)));
  write_atomic(dir / "loss.csv", csv);
  out << "h=" << samples.front().q.heads() << " h_c=" << h_c << " epochs=" << cfg.epochs
      << " initial=" << format_double(result.losses.front()) << " final=" << format_double(result.losses.back())
      << " optimal=" << format_double(qk_reconstruction_loss(samples, best.q, best.k)) << "\n";
  return kExitOk;
}

struct Job {
  std::string name;
  std::function<SimReport()> run;
};

// Hardware threads, capped by VITCOD_SIM_THREADS when set.
std::size_t worker_limit() {
  std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  if (const char* cap = std::getenv("VITCOD_SIM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(cap, &end, 10);
    if (end == cap || *end != '\0' || v < 1) throw ArgumentError("VITCOD_SIM_THREADS must be a positive integer");
    workers = std::min<std::size_t>(workers, static_cast<std::size_t>(v));
  }
  return workers;
}

std::vector<SimReport> run_jobs(const std::vector<Job>& jobs, std::size_t workers) {
  workers = std::min(workers, jobs.size());
  std::vector<SimReport> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        results[i] = jobs[i].run();
        results[i].name = jobs[i].name;
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

int cmd_simulate(const Settings& s, std::ostream& out) {
  const auto& f = s.flags();
  const auto& model = preset(s.get(f.preset, "preset", std::string("deit-base")));
  const LayerShape shape = model.shape;
  const HwConfig hw = [&] {
    const auto path = s.get(f.hw, "hw");
    return path ? load_hw(*path) : default_hw();
  }();
  hw.validate();

  MaskResult mask;
  if (const auto path = s.get(f.mask, "mask")) {
    mask = mask_from_json(parse_json(read_text(*path), *path));
  } else {
    const auto maps = load_maps(s, shape.n);
    mask = make_mask(s, maps[select_map(s, maps)]);
  }
  if (mask.n != shape.n) {
    throw ShapeError("mask has " + std::to_string(mask.n) + " tokens, preset " + model.name + " has " +
                     std::to_string(shape.n));
  }

  const std::string ae = s.get(f.ae, "ae", std::string("on"));
  if (ae != "on" && ae != "off") throw ArgumentError("--ae must be on or off");
  const std::string baseline = s.get(f.baseline, "baseline", std::string("s-stationary"));
  if (baseline != "s-stationary" && baseline != "none") throw ArgumentError("--baseline must be s-stationary or none");
  const std::string scope = s.get(f.scope, "scope", std::string("attention"));
  if (scope != "attention" && scope != "block") throw ArgumentError("--scope must be attention or block");

  SimFlags flags;
  flags.ratio = s.get(f.ratio, "ratio", 0.5);
  if (!(flags.ratio > 0.0 && flags.ratio <= 1.0)) throw ArgumentError("--ratio must be in (0, 1]");
  flags.forwarding_on = !s.get(f.no_forwarding, "no_forwarding", false);
  flags.dense_policy = parse_policy(s.get(f.policy, "policy", std::string("compute-all")));
  const bool block = scope == "block";
  const std::size_t workers = worker_limit();
  const fs::path dir = prepare_out(s);

  std::vector<Job> jobs;
  jobs.push_back({"vitcod", [&, flags] {
                    return block ? sim_vit_block(shape, mask, hw, flags) : sim_attention_layer(mask, shape, hw, flags);
                  }});
  if (ae == "on") {
    SimFlags with_ae = flags;
    with_ae.ae_on = true;
    jobs.push_back({"vitcod-ae", [&, with_ae] {
                      return block ? sim_vit_block(shape, mask, hw, with_ae)
                                   : sim_attention_layer(mask, shape, hw, with_ae);
                    }});
  }
  if (baseline == "s-stationary") {
    jobs.push_back({"s-stationary", [&] {
                      return block ? sim_sstationary_block(shape, hw) : sim_sstationary_attention(shape, hw, mask);
                    }});
  }
  auto reports = run_jobs(jobs, workers);

  std::vector<RooflinePoint> points;
  std::vector<std::pair<std::string, SimReport>> named;
  for (auto& r : reports) {
    r.note = r.name == "s-stationary" ? "vs. dense S-stationary" : model.name + " " + scope;
    write_atomic(dir / (r.name + ".json"), dump(to_json(r)));
    write_atomic(dir / (r.name + ".csv"), report_csv(r));
    points.push_back(roofline(r, hw));
    named.emplace_back(r.name, r);
  }
  write_atomic(dir / "roofline.dat", roofline_gnuplot(points, hw));

  out << model.name << " " << scope << ", sparsity " << format_double(sparsity(mask.mask)) << ", n_gt "
      << mask.n_gt << "\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto b = breakdown(reports[i]);
    out << reports[i].name << ": " << reports[i].overlapped_total() << " cycles, movement share "
        << format_double(b.movement) << ", intensity " << format_double(points[i].intensity) << " flop/B\n";
  }
  if (baseline == "s-stationary") out << speedup_text(compare(named, "s-stationary"));
  return kExitOk;
}

int cmd_compare(const Settings& s, std::ostream& out) {
  const auto& files = s.flags().reports;
  if (files.size() < 2) throw ArgumentError("compare needs at least two report files");
  std::vector<std::pair<std::string, SimReport>> reports;
  std::map<std::string, int> stem_count;
  for (const auto& f : files) ++stem_count[fs::path(f).stem().string()];
  for (const auto& f : files) {
    const fs::path p(f);
    std::string name = p.stem().string();
    if (stem_count[name] > 1) name = (p.parent_path().filename() / p.stem()).string();
    reports.emplace_back(name, report_from_json(parse_json(read_text(p), f)));
  }
  std::string baseline = s.get(s.flags().baseline, "baseline", std::string("s-stationary"));
  if (std::none_of(reports.begin(), reports.end(), [&](const auto& r) { return r.first == baseline; })) {
    // Accept a bare stem when only one report carries it.
    std::vector<std::string> hits;
    for (const auto& r : reports) {
      if (fs::path(r.first).filename().string() == baseline) hits.push_back(r.first);
    }
    if (hits.size() != 1) throw ArgumentError("baseline '" + baseline + "' does not name exactly one report");
    baseline = hits.front();
  }
  const auto table = compare(reports, baseline);
  const fs::path dir = prepare_out(s);
  write_atomic(dir / "speedup.csv", speedup_csv(table));
  write_atomic(dir / "speedup.json", speedup_json(table));
  out << speedup_text(table);
  return kExitOk;
}

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--manifest", f.manifest, "JSON file supplying defaults for any flag");
  sub->add_option("--out", f.out, "output directory (default: out)");
  sub->add_option("--seed", f.seed, "RNG seed");
}

void add_mask_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--input", f.input, "attention map array file (.npy)");
  sub->add_option("--synthetic", f.synthetic, "synthetic map, e.g. n=197,global=10,width=5,noise=0.05");
  sub->add_option("--theta-p", f.theta_p, "cumulative-mass pruning threshold in (0, 1]");
  sub->add_option("--sparsity", f.sparsity, "target sparsity; picks theta_p (default 0.9)");
  sub->add_option("--theta-d", f.theta_d, "global-token column threshold (default n/2)");
  sub->add_option("--mode", f.mode, "per-query or whole-map");
  sub->add_flag("--permute-rows", f.permute_rows, "apply the token permutation to rows as well");
  sub->add_option("--layer", f.layer, "layer of the map to keep");
  sub->add_option("--head", f.head, "head of the map to keep");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Flags f;
  CLI::App app{"Sparse attention mask generation, Q/K auto-encoder training and accelerator simulation"};
  app.require_subcommand(1);

  auto* mask = app.add_subcommand("mask", "prune and reorder attention maps");
  add_common(mask, f);
  add_mask_flags(mask, f);

  auto* ae = app.add_subcommand("ae-train", "train the Q/K head auto-encoder");
  add_common(ae, f);
  ae->add_option("--input", f.input, "Q then K array files, (h,n,d_k) or (samples,h,n,d_k)");
  ae->add_option("--synthetic", f.synthetic, "mixture data, e.g. count=8,h=4,n=16,d_k=8,noise=0");
  ae->add_option("--ratio", f.ratio, "compression ratio h_c/h (default 0.5)");
  ae->add_option("--epochs", f.epochs, "training epochs (default 2000)");
  ae->add_option("--lr", f.lr, "learning rate (default 0.05)");
  ae->add_option("--batch-size", f.batch_size, "samples per step, 0 = full batch");
  ae->add_flag("--identity-init", f.identity_init, "start from the head selector");
  ae->add_flag("--shared", f.shared, "one module for both Q and K");

  auto* sim = app.add_subcommand("simulate", "simulate ViTCoD, ViTCoD+AE and the S-stationary baseline");
  add_common(sim, f);
  add_mask_flags(sim, f);
  sim->add_option("--mask", f.mask, "mask JSON from the mask subcommand");
  sim->add_option("--preset", f.preset, "model shape (default deit-base)");
  sim->add_option("--hw", f.hw, "hardware config JSON");
  sim->add_option("--ae", f.ae, "on: also run the auto-encoder config; off: skip it");
  sim->add_option("--ratio", f.ratio, "auto-encoder compression ratio (default 0.5)");
  sim->add_option("--baseline", f.baseline, "s-stationary or none");
  sim->add_option("--policy", f.policy, "dense block: compute-all or skip-zeros");
  sim->add_option("--scope", f.scope, "attention (default) or block");
  sim->add_flag("--no-forwarding", f.no_forwarding, "disable query forwarding between engines");

  auto* cmp = app.add_subcommand("compare", "speedup table over simulation reports");
  add_common(cmp, f);
  cmp->add_option("reports", f.reports, "report JSON files")->required();
  cmp->add_option("--baseline", f.baseline, "baseline report name (default s-stationary)");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    Json manifest = Json::object();
    if (f.manifest) manifest = parse_json(read_text(*f.manifest), *f.manifest);
    const Settings settings(f, std::move(manifest));
    if (*mask) return cmd_mask(settings, out);
    if (*ae) return cmd_ae_train(settings, out);
    if (*sim) return cmd_simulate(settings, out);
    return cmd_compare(settings, out);
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const CorruptionError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const UnsupportedError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const DivergenceError& e) {
    err << "error: training diverged: " << e.what() << "\n";
    return kExitDomain;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  }
}

}  // namespace vitcod::cli
