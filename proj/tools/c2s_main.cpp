// Command-line pipeline: simulate, train, eval, infer, bench, export.
// Exit codes: 0 success, 1 runtime failure, 2 usage/config error.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "c2s/channel.hpp"
#include "c2s/config.hpp"
#include "c2s/model.hpp"
#include "c2s/paths.hpp"
#include "c2s/sounding.hpp"
#include "c2s/train.hpp"

namespace {

using namespace c2s;

std::string now_utc() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void require_input_file(const std::string& path, const std::string& what) {
  if (!std::filesystem::exists(path))
    throw ConfigError(what + " not found: " + path);
}

struct Stopwatch {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

struct CommonArgs {
  std::string config_path;
  std::string out;
  uint64_t seed = 0;
  bool seed_given = false;
  bool quiet = false;

  void attach(CLI::App* cmd, bool out_required = true) {
    cmd->add_option("--config", config_path, "key=value config file");
    auto* o = cmd->add_option("--out", out, "output path");
    if (out_required) o->required();
    cmd->add_option("--seed", seed, "seed overriding the config value")
        ->each([this](const std::string&) { seed_given = true; });
    cmd->add_flag("--quiet", quiet, "suppress progress output");
  }

  KvMap load_config() const {
    return config_path.empty() ? KvMap{} : parse_config_file(config_path);
  }

  uint64_t resolve_seed(const KvMap& kv, uint64_t fallback = 1) const {
    return seed_given ? seed : kv_get_uint(kv, "seed", fallback);
  }

  void info(const std::string& msg) const {
    if (!quiet) std::cout << msg << "\n";
  }
};

void finish_manifest(const CommonArgs& args, const std::string& subcommand, const KvMap& resolved,
                     uint64_t seed, std::vector<std::string> inputs,
                     std::vector<std::string> outputs, const std::string& started,
                     const Stopwatch& sw) {
  RunManifest m;
  m.subcommand = subcommand;
  m.resolved_config = resolved;
  m.inputs = std::move(inputs);
  m.outputs = std::move(outputs);
  m.seed = seed;
  m.tool_version = version_string();
  m.started_utc = started;
  m.wall_clock_s = sw.seconds();
  write_manifest(m, manifest_path_for(args.out));
}

// ---------------------------------------------------------------------------
// simulate

const char* kSimulateKeys =
    "scenario=mixed (los|nlos|mixed)  n_trajectories=4  n_positions=60  n_pairs=4\n"
    "n_p=1  snr_db=25  mode=ideal (ideal|pn)  seed=1  csi_bin=0 (bin index or 'mid')\n"
    "periods=128  pn_degree=10  sampling_rate_hz=200e6  bandwidth_hz=160e6  carrier_hz=3.5e9\n"
    "start_distance_m=10  start_distance_max_m=0 (>start: per-trajectory jitter)  step_m=5\n"
    "n_paths_min=2  n_paths_max=8  delay_spread_s=120e-9  rician_k_db=6\n"
    "nlos_extra_loss_db=6  stats_holdout_fraction=0.3";

int run_simulate(const CommonArgs& args) {
  const Stopwatch sw;
  const std::string started = now_utc();
  KvMap kv = args.load_config();
  require_known_keys(
      kv, {"scenario", "n_trajectories", "n_positions", "n_pairs", "n_p", "snr_db", "mode", "seed",
           "csi_bin", "periods", "pn_degree", "sampling_rate_hz", "bandwidth_hz", "carrier_hz",
           "start_distance_m", "start_distance_max_m", "step_m", "n_paths_min", "n_paths_max",
           "delay_spread_s", "rician_k_db", "nlos_extra_loss_db", "stats_holdout_fraction"});

  const uint64_t seed = args.resolve_seed(kv);
  const std::string scenario = kv_get(kv, "scenario", "mixed");
  if (scenario != "los" && scenario != "nlos" && scenario != "mixed")
    throw ConfigError("scenario must be los, nlos, or mixed");
  const int n_traj = int(kv_get_int(kv, "n_trajectories", 4));
  const int n_positions = int(kv_get_int(kv, "n_positions", 60));
  const int n_p = int(kv_get_int(kv, "n_p", 1));
  if (n_traj < 1 || n_positions < 1) throw ConfigError("n_trajectories and n_positions must be >= 1");

  SoundingConfig cfg;
  cfg.sampling_rate_hz = kv_get_double(kv, "sampling_rate_hz", cfg.sampling_rate_hz);
  cfg.bandwidth_hz = kv_get_double(kv, "bandwidth_hz", cfg.bandwidth_hz);
  cfg.pn_degree = int(kv_get_int(kv, "pn_degree", cfg.pn_degree));
  cfg.n_bins = (1 << cfg.pn_degree) - 1;
  cfg.periods = int(kv_get_int(kv, "periods", cfg.periods));
  cfg.carrier_hz = kv_get_double(kv, "carrier_hz", cfg.carrier_hz);
  cfg.validate();

  ChannelStats stats;
  stats.n_paths_min = int(kv_get_int(kv, "n_paths_min", stats.n_paths_min));
  stats.n_paths_max = int(kv_get_int(kv, "n_paths_max", stats.n_paths_max));
  stats.delay_spread_s = kv_get_double(kv, "delay_spread_s", stats.delay_spread_s);
  stats.rician_k_db = kv_get_double(kv, "rician_k_db", stats.rician_k_db);
  stats.nlos_extra_loss_db = kv_get_double(kv, "nlos_extra_loss_db", stats.nlos_extra_loss_db);

  const double start_m = kv_get_double(kv, "start_distance_m", 10.0);
  const double start_max_m = kv_get_double(kv, "start_distance_max_m", 0.0);
  const double step_m = kv_get_double(kv, "step_m", 5.0);

  GenOptions opt;
  opt.n_pairs = int(kv_get_int(kv, "n_pairs", 4));
  opt.snr_db = kv_get_double(kv, "snr_db", 25.0);
  opt.seed = seed;
  const std::string mode = kv_get(kv, "mode", "ideal");
  if (mode != "ideal" && mode != "pn") throw ConfigError("mode must be ideal or pn");
  opt.mode = mode == "ideal" ? SoundingMode::kIdeal : SoundingMode::kPn;
  const std::string csi_bin = kv_get(kv, "csi_bin", "0");
  opt.csi_bin = csi_bin == "mid" ? csi_mid_bin(cfg.n_bins) : int(kv_get_int(kv, "csi_bin", 0));
  opt.stats_holdout_fraction = kv_get_double(kv, "stats_holdout_fraction", 0.3);

  std::vector<Trajectory> trajs;
  trajs.reserve(n_traj);
  for (int ti = 0; ti < n_traj; ++ti) {
    const Scenario sc = scenario == "mixed" ? (ti % 2 == 0 ? Scenario::kLos : Scenario::kNlos)
                                            : scenario_from_string(scenario);
    std::mt19937_64 rng(mix_seed(seed, uint64_t(ti), 0x7247));
    double start = start_m;
    if (start_max_m > start_m) {
      std::uniform_real_distribution<double> jitter(start_m, start_max_m);
      start = jitter(rng);
    }
    trajs.push_back(make_trajectory(sc, n_positions, cfg, rng, stats, start, step_m));
  }

  Dataset ds = build_dataset(trajs, cfg, n_p, opt);
  ds.provenance["scenario"] = scenario;
  ds.provenance["n_positions"] = std::to_string(n_positions);
  ds.provenance["mode"] = mode;
  ds.provenance["periods"] = std::to_string(cfg.periods);
  ds.provenance["start_distance_m"] = format_g(start_m);
  ds.provenance["start_distance_max_m"] = format_g(start_max_m);
  ds.provenance["step_m"] = format_g(step_m);
  write_dataset(ds, args.out);

  KvMap resolved = kv;
  resolved["seed"] = std::to_string(seed);
  finish_manifest(args, "simulate", resolved, seed, {}, {args.out}, started, sw);

  std::ostringstream ss;
  ss << "wrote " << ds.windows.size() << " windows (n_p=" << ds.n_p << ", " << ds.count_los()
     << " LoS) to " << args.out;
  args.info(ss.str());
  return 0;
}

// ---------------------------------------------------------------------------
// train

const char* kTrainKeys =
    "steps=2000  batch_size=8  lr=1e-3  n_p_schedule=1,2,4,8,16  eval_every=100  patience=0\n"
    "val_fraction=0.15  test_fraction=0.3  policy=spatial-extrapolation (|random)\n"
    "reduction=mean (|sum)  seed=1  model_seed=(seed)  n_layers=2  d_model=64  n_heads=4\n"
    "ffn_mult=4  precision=f32 (|f64)  lambda_latent=1.0";

TrainConfig train_config_from(const KvMap& kv, uint64_t seed) {
  TrainConfig t;
  t.steps = int(kv_get_int(kv, "steps", t.steps));
  t.batch_size = int(kv_get_int(kv, "batch_size", t.batch_size));
  t.lr = kv_get_double(kv, "lr", t.lr);
  t.seed = seed;
  t.n_p_schedule = parse_int_list(kv_get(kv, "n_p_schedule", "1,2,4,8,16"));
  t.eval_every = int(kv_get_int(kv, "eval_every", t.eval_every));
  t.patience = int(kv_get_int(kv, "patience", t.patience));
  t.val_fraction = kv_get_double(kv, "val_fraction", t.val_fraction);
  t.test_fraction = kv_get_double(kv, "test_fraction", t.test_fraction);
  t.policy = split_policy_from_string(kv_get(kv, "policy", "spatial-extrapolation"));
  const std::string red = kv_get(kv, "reduction", "mean");
  if (red != "mean" && red != "sum") throw ConfigError("reduction must be mean or sum");
  t.reduction = red == "mean" ? Reduction::kMean : Reduction::kSum;
  return t;
}

ModelConfig model_config_from(const KvMap& kv, uint64_t seed, int n_bins) {
  ModelConfig m;
  m.n_layers = int(kv_get_int(kv, "n_layers", m.n_layers));
  m.d_model = int(kv_get_int(kv, "d_model", m.d_model));
  m.n_heads = int(kv_get_int(kv, "n_heads", m.n_heads));
  m.ffn_mult = int(kv_get_int(kv, "ffn_mult", m.ffn_mult));
  m.n_bins = n_bins;
  m.precision = precision_from_string(kv_get(kv, "precision", "f32"));
  m.seed = kv_get_uint(kv, "model_seed", seed);
  m.lambda_latent = kv_get_double(kv, "lambda_latent", 1.0);
  m.validate();
  return m;
}

const std::vector<std::string> kTrainKnownKeys = {
    "steps",      "batch_size",    "lr",        "n_p_schedule", "eval_every",
    "patience",   "val_fraction",  "test_fraction", "policy",   "reduction",
    "seed",       "model_seed",    "n_layers",  "d_model",      "n_heads",
    "ffn_mult",   "precision",     "lambda_latent"};

int run_train(const CommonArgs& args, const std::string& data_path, const std::string& kind_str) {
  const Stopwatch sw;
  const std::string started = now_utc();
  const ModelKind kind = model_kind_from_string(kind_str);
  KvMap kv = args.load_config();
  require_known_keys(kv, kTrainKnownKeys);
  const uint64_t seed = args.resolve_seed(kv);
  const TrainConfig tcfg = train_config_from(kv, seed);

  require_input_file(data_path, "dataset");
  Dataset ds = read_dataset(data_path);
  if (ds.n_p != 1)
    throw ConfigError("training expects an atomic dataset (n_p=1), got n_p=" +
                      std::to_string(ds.n_p));
  const ModelConfig mcfg = model_config_from(kv, seed, ds.n_bins);

  SplitResult split = split_dataset(ds, tcfg);
  {
    std::ostringstream ss;
    ss << "split: " << split.train.windows.size() << " train / " << split.val.windows.size()
       << " val / " << split.test.windows.size() << " test windows";
    args.info(ss.str());
  }

  TrainResult res = train(kind, split.train, split.val, mcfg, tcfg);
  res.checkpoint.metadata["dataset"] = data_path;
  res.checkpoint.metadata["split_policy"] = to_string(tcfg.policy);
  write_checkpoint(res.checkpoint, args.out);

  const std::string curve_path = args.out + ".loss.tsv";
  {
    std::ofstream os(curve_path);
    if (!os) throw IoError(IoError::Kind::kOther, "cannot open " + curve_path + " for writing");
    os << "kind\tstep\tvalue\n";
    os.precision(10);
    for (size_t i = 0; i < res.train_curve.size(); ++i)
      os << "train\t" << (i + 1) << '\t' << res.train_curve[i] << "\n";
    for (const auto& [step, v] : res.val_curve) os << "val\t" << step << '\t' << v << "\n";
  }

  KvMap resolved = kv;
  resolved["seed"] = std::to_string(seed);
  resolved["kind"] = to_string(kind);
  finish_manifest(args, "train", resolved, seed, {data_path}, {args.out, curve_path}, started, sw);

  std::ostringstream ss;
  ss << "trained " << to_string(kind) << " for " << res.train_curve.size() << " steps; final loss "
     << (res.train_curve.empty() ? 0.0 : res.train_curve.back());
  if (res.best_step >= 0)
    ss << "; best val MSE " << res.best_val << " at step " << res.best_step;
  args.info(ss.str());
  return 0;
}

// ---------------------------------------------------------------------------
// eval

int run_eval(const CommonArgs& args, const std::string& ae_path, const std::string& base_path,
             const std::string& data_path, const std::string& n_p_str, int repeats, int warmup,
             const std::string& split_mode) {
  const Stopwatch sw;
  const std::string started = now_utc();
  KvMap kv = args.load_config();
  require_known_keys(kv, kTrainKnownKeys);
  const uint64_t seed = args.resolve_seed(kv);
  const std::vector<int> n_p_list = parse_int_list(n_p_str);
  if (split_mode != "test" && split_mode != "all")
    throw ConfigError("--split must be test or all");
  if (repeats < 0) throw ConfigError("--repeats must be >= 0");

  require_input_file(ae_path, "checkpoint");
  require_input_file(base_path, "checkpoint");
  require_input_file(data_path, "dataset");
  Checkpoint ae = read_checkpoint(ae_path);
  Checkpoint base = read_checkpoint(base_path);
  Dataset ds = read_dataset(data_path);

  Dataset eval_set;
  if (split_mode == "test") {
    TrainConfig tcfg = train_config_from(kv, seed);
    eval_set = split_dataset(ds, tcfg).test;
  } else {
    eval_set = ds;
  }

  EvalReport report = evaluate_mse(ae, base, eval_set, n_p_list);
  if (repeats > 0) {
    const auto bench = benchmark_inference(ae, n_p_list, repeats, warmup);
    for (auto& row : report.rows)
      for (const auto& b : bench)
        if (b.n_p == row.n_p) {
          row.latency_ms_mean = b.latency_ms_mean;
          row.latency_ms_std = b.latency_ms_std;
        }
  }
  report.provenance["split"] = split_mode;
  report.provenance["latency_repeats"] = std::to_string(repeats);
  write_eval_report(report, args.out);

  if (!args.quiet) {
    std::printf("%-6s %-14s %-14s %-13s %-12s\n", "N_p", "MSE(baseline)", "MSE(c2s-ae)",
                "improvement%", "latency ms");
    for (const auto& r : report.rows)
      std::printf("%-6d %-14.6f %-14.6f %-13.3f %.3f +/- %.3f\n", r.n_p, r.mse_baseline, r.mse_ae,
                  r.improvement_pct(), r.latency_ms_mean, r.latency_ms_std);
  }

  KvMap resolved = kv;
  resolved["seed"] = std::to_string(seed);
  resolved["n_p"] = n_p_str;
  resolved["split"] = split_mode;
  resolved["repeats"] = std::to_string(repeats);
  finish_manifest(args, "eval", resolved, seed, {ae_path, base_path, data_path}, {args.out},
                  started, sw);
  return 0;
}

// ---------------------------------------------------------------------------
// infer

std::vector<CsiSample> read_csi_text(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open CSI input " + path);
  std::vector<CsiSample> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    double mag = 0.0, phase = 0.0;
    if (!(ss >> mag)) continue;  // blank line
    if (!(ss >> phase))
      throw ConfigError("CSI line " + std::to_string(lineno) + " needs 'magnitude phase'");
    if (!std::isfinite(mag) || !std::isfinite(phase) || mag < 0.0)
      throw ConfigError("CSI line " + std::to_string(lineno) + " is not a valid sample");
    out.push_back({mag, phase});
  }
  if (out.empty()) throw ConfigError("CSI input " + path + " holds no samples");
  return out;
}

int run_infer(const CommonArgs& args, const std::string& ckpt_path, const std::string& csi_path,
              double threshold_db, int min_sep) {
  const Stopwatch sw;
  const std::string started = now_utc();

  require_input_file(ckpt_path, "checkpoint");
  require_input_file(csi_path, "CSI input");
  Checkpoint ckpt = read_checkpoint(ckpt_path);
  std::vector<CsiSample> csi = read_csi_text(csi_path);

  std::vector<DelayPowerSpectrum> dps = predict_dps(ckpt, csi);

  {
    std::ofstream os(args.out);
    if (!os) throw IoError(IoError::Kind::kOther, "cannot open " + args.out + " for writing");
    os << "# n_bins=" << ckpt.config.n_bins << " delta_tau_s=" << dps[0].delta_tau_s << "\n";
    os << "position";
    for (int k = 0; k < ckpt.config.n_bins; ++k) os << "\tp" << k;
    os << "\n";
    os.precision(9);
    for (size_t i = 0; i < dps.size(); ++i) {
      os << i;
      for (double v : dps[i].power) os << '\t' << v;
      os << "\n";
    }
  }

  const std::string paths_path = args.out + ".paths.tsv";
  {
    std::ofstream os(paths_path);
    if (!os) throw IoError(IoError::Kind::kOther, "cannot open " + paths_path + " for writing");
    os << "position\tdelay_s\trange_m\tpower\n";
    os.precision(9);
    for (size_t i = 0; i < dps.size(); ++i)
      for (const auto& p : extract_paths(dps[i], threshold_db, min_sep))
        os << i << '\t' << p.delay_s << '\t' << p.range_m << '\t' << p.power << "\n";
  }

  KvMap resolved;
  resolved["threshold_db"] = format_g(threshold_db);
  resolved["min_separation_bins"] = std::to_string(min_sep);
  finish_manifest(args, "infer", resolved, 0, {ckpt_path, csi_path}, {args.out, paths_path},
                  started, sw);

  std::ostringstream ss;
  ss << "predicted " << dps.size() << " spectra; paths in " << paths_path;
  args.info(ss.str());
  return 0;
}

// ---------------------------------------------------------------------------
// bench

int run_bench(const CommonArgs& args, const std::string& ckpt_path, const std::string& n_p_str,
              int repeats, int warmup) {
  const Stopwatch sw;
  const std::string started = now_utc();
  if (repeats < 1) throw ConfigError("--repeats must be >= 1");
  const std::vector<int> n_p_list = parse_int_list(n_p_str);

  require_input_file(ckpt_path, "checkpoint");
  Checkpoint ckpt = read_checkpoint(ckpt_path);
  const auto rows = benchmark_inference(ckpt, n_p_list, repeats, warmup);

  {
    std::ofstream os(args.out);
    if (!os) throw IoError(IoError::Kind::kOther, "cannot open " + args.out + " for writing");
    os << "n_p\tlatency_ms_mean\tlatency_ms_std\trepeats\n";
    os.precision(6);
    for (const auto& r : rows)
      os << r.n_p << '\t' << r.latency_ms_mean << '\t' << r.latency_ms_std << '\t' << r.repeats
         << "\n";
  }
  if (!args.quiet)
    for (const auto& r : rows)
      std::printf("N_p=%-4d %.3f ms +/- %.3f (%d repeats)\n", r.n_p, r.latency_ms_mean,
                  r.latency_ms_std, r.repeats);

  KvMap resolved;
  resolved["n_p"] = n_p_str;
  resolved["repeats"] = std::to_string(repeats);
  resolved["warmup"] = std::to_string(warmup);
  finish_manifest(args, "bench", resolved, 0, {ckpt_path}, {args.out}, started, sw);
  return 0;
}

// ---------------------------------------------------------------------------
// export

bool file_has_dataset_magic(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  char magic[8] = {};
  is.read(magic, 8);
  return is.gcount() == 8 && std::string(magic, 8) == "C2SDSET1";
}

int run_export(const CommonArgs& args, const std::string& in_path, bool db_scale, int window,
               int row) {
  const Stopwatch sw;
  const std::string started = now_utc();
  require_input_file(in_path, "input");

  if (file_has_dataset_magic(in_path)) {
    Dataset ds = read_dataset(in_path);
    if (window < 0 || size_t(window) >= ds.windows.size())
      throw ConfigError("--window out of range (dataset holds " +
                        std::to_string(ds.windows.size()) + " windows)");
    if (row < 0 || row >= ds.n_p)
      throw ConfigError("--row out of range (windows hold " + std::to_string(ds.n_p) + " rows)");
    DelayPowerSpectrum d;
    d.delta_tau_s = ds.delta_tau_s;
    d.power.resize(ds.n_bins);
    const auto& w = ds.windows[window];
    for (int k = 0; k < ds.n_bins; ++k) d.power[k] = double(w.dps[size_t(row) * ds.n_bins + k]);
    export_dps_text(d, args.out, db_scale);
    args.info("exported window " + std::to_string(window) + " row " + std::to_string(row) +
              " to " + args.out);
  } else {
    EvalReport r = read_eval_report(in_path);
    std::ofstream os(args.out);
    if (!os) throw IoError(IoError::Kind::kOther, "cannot open " + args.out + " for writing");
    os << "n_p\tmse_baseline\tmse_ae\timprovement_pct\n";
    os.precision(10);
    for (const auto& row_r : r.rows)
      os << row_r.n_p << '\t' << row_r.mse_baseline << '\t' << row_r.mse_ae << '\t'
         << row_r.improvement_pct() << "\n";
    args.info("exported " + std::to_string(r.rows.size()) + " report rows to " + args.out);
  }

  KvMap resolved;
  resolved["db"] = db_scale ? "true" : "false";
  resolved["window"] = std::to_string(window);
  resolved["row"] = std::to_string(row);
  finish_manifest(args, "export", resolved, 0, {in_path}, {args.out}, started, sw);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Desk-scale lab for CSI-to-DPS extrapolation: synthetic channel sounding, "
               "supervised-autoencoder training, evaluation, and ranging."};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_string());

  CommonArgs sim_args;
  auto* sim = app.add_subcommand("simulate", "generate a synthetic sounding dataset");
  sim_args.attach(sim);
  sim->footer(std::string("config keys (defaults):\n") + kSimulateKeys);

  CommonArgs train_args;
  std::string train_data, train_kind;
  auto* tr = app.add_subcommand("train", "train c2s-ae or the decoder-only baseline");
  tr->add_option("--data", train_data, "dataset file (atomic, n_p=1)")->required();
  tr->add_option("--kind", train_kind, "c2s-ae | baseline")->required();
  train_args.attach(tr);
  tr->footer(std::string("config keys (defaults):\n") + kTrainKeys);

  CommonArgs eval_args;
  std::string eval_ae, eval_base, eval_data, eval_np = "1,2,4,8,16,32", eval_split = "test";
  int eval_repeats = 100, eval_warmup = 5;
  auto* ev = app.add_subcommand("eval", "MSE per N_p for both models plus latency");
  ev->add_option("--ae", eval_ae, "c2s-ae checkpoint")->required();
  ev->add_option("--baseline", eval_base, "baseline checkpoint")->required();
  ev->add_option("--data", eval_data, "dataset file (atomic)")->required();
  ev->add_option("--n-p", eval_np, "comma-separated window lengths");
  ev->add_option("--repeats", eval_repeats, "latency repetitions (0 = skip timing)");
  ev->add_option("--warmup", eval_warmup, "untimed warmup runs");
  ev->add_option("--split", eval_split, "evaluate on 'test' split or 'all' windows");
  eval_args.attach(ev);
  ev->footer(std::string("split config keys as for train:\n") + kTrainKeys);

  CommonArgs infer_args;
  std::string infer_ckpt, infer_csi;
  double infer_threshold = -25.0;
  int infer_minsep = 2;
  auto* in = app.add_subcommand("infer", "extrapolate DPS from raw CSI and extract paths");
  in->add_option("--ckpt", infer_ckpt, "checkpoint")->required();
  in->add_option("--csi", infer_csi, "text file: one 'magnitude phase' pair per line")->required();
  in->add_option("--threshold-db", infer_threshold, "peak threshold relative to max");
  in->add_option("--min-sep", infer_minsep, "minimum peak separation in bins");
  infer_args.attach(in);

  CommonArgs bench_args;
  std::string bench_ckpt, bench_np = "1,2,4,8,16,32";
  int bench_repeats = 1000, bench_warmup = 10;
  auto* be = app.add_subcommand("bench", "decoder inference latency at batch size 1");
  be->add_option("--ckpt", bench_ckpt, "checkpoint")->required();
  be->add_option("--n-p", bench_np, "comma-separated window lengths");
  be->add_option("--repeats", bench_repeats, "timed repetitions");
  be->add_option("--warmup", bench_warmup, "untimed warmup runs");
  bench_args.attach(be);

  CommonArgs export_args;
  std::string export_in;
  bool export_db = false;
  int export_window = 0, export_row = 0;
  auto* ex = app.add_subcommand("export", "plot-ready text from a dataset or eval report");
  ex->add_option("--in", export_in, "dataset (binary) or eval report (tsv)")->required();
  ex->add_flag("--db", export_db, "emit DPS power in dB");
  ex->add_option("--window", export_window, "dataset window index");
  ex->add_option("--row", export_row, "row within the window");
  export_args.attach(ex);

  try {
    app.parse(argc, argv);
    if (sim->parsed()) return run_simulate(sim_args);
    if (tr->parsed()) return run_train(train_args, train_data, train_kind);
    if (ev->parsed())
      return run_eval(eval_args, eval_ae, eval_base, eval_data, eval_np, eval_repeats, eval_warmup,
                      eval_split);
    if (in->parsed()) return run_infer(infer_args, infer_ckpt, infer_csi, infer_threshold,
                                       infer_minsep);
    if (be->parsed()) return run_bench(bench_args, bench_ckpt, bench_np, bench_repeats,
                                       bench_warmup);
    if (ex->parsed())
      return run_export(export_args, export_in, export_db, export_window, export_row);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const SimError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
