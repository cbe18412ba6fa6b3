#include "c2s/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "c2s/config.hpp"

namespace c2s {

SplitPolicy split_policy_from_string(const std::string& s) {
  if (s == "spatial-extrapolation" || s == "spatial") return SplitPolicy::kSpatialExtrapolation;
  if (s == "random") return SplitPolicy::kRandom;
  throw ConfigError("unknown split policy '" + s + "'");
}

std::string to_string(SplitPolicy p) {
  return p == SplitPolicy::kSpatialExtrapolation ? "spatial-extrapolation" : "random";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "c2s-ae" || s == "ae") return ModelKind::kC2sAe;
  if (s == "baseline" || s == "c2s") return ModelKind::kBaseline;
  throw ConfigError("unknown model kind '" + s + "' (expected c2s-ae or baseline)");
}

std::string to_string(ModelKind k) { return k == ModelKind::kC2sAe ? "c2s-ae" : "baseline"; }

void TrainConfig::validate() const {
  if (steps < 0) throw ConfigError("steps must be >= 0");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (!(lr >= 0.0)) throw ConfigError("learning rate must be >= 0");
  if (n_p_schedule.empty()) throw ConfigError("n_p schedule must be nonempty");
  for (int n : n_p_schedule)
    if (n < 1) throw ConfigError("n_p schedule entries must be >= 1");
  if (eval_every < 0) throw ConfigError("eval_every must be >= 0");
  if (patience < 0) throw ConfigError("patience must be >= 0");
  if (!(val_fraction > 0.0 && val_fraction < 1.0))
    throw ConfigError("validation fraction must be in (0,1)");
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ConfigError("test fraction must be in (0,1)");
}

// ---------------------------------------------------------------------------
// Splitting

namespace {

Dataset subset_like(const Dataset& d, std::vector<SampleWindow> windows, const char* role) {
  Dataset out;
  out.n_p = d.n_p;
  out.n_bins = d.n_bins;
  out.delta_tau_s = d.delta_tau_s;
  out.windows = std::move(windows);
  out.stats = d.stats;
  out.provenance = d.provenance;
  out.provenance["split_role"] = role;
  return out;
}

}  // namespace

SplitResult split_dataset(const Dataset& d, const TrainConfig& cfg) {
  cfg.validate();
  if (d.windows.empty()) throw ConfigError("cannot split an empty dataset");

  std::vector<SampleWindow> train, val, test;

  if (cfg.policy == SplitPolicy::kSpatialExtrapolation) {
    int32_t max_pos = 0;
    for (const auto& w : d.windows) max_pos = std::max(max_pos, w.start_pos);
    const int64_t L = int64_t(max_pos) + d.n_p;  // position count per pair
    const int64_t n_test = std::llround(double(L) * cfg.test_fraction);
    const int64_t cut_test = L - n_test;  // first held-out position
    const int64_t rest = cut_test;
    const int64_t n_val = std::llround(double(rest) * cfg.val_fraction);
    const int64_t cut_val = rest - n_val;
    if (n_test < 1 || n_val < 1 || cut_val < d.n_p)
      throw ConfigError("too few positions for the spatial split (" + std::to_string(L) +
                        " positions, n_p " + std::to_string(d.n_p) + ")");
    for (const auto& w : d.windows) {
      const int64_t lo = w.start_pos, hi = w.start_pos + d.n_p;  // [lo, hi)
      if (hi <= cut_val)
        train.push_back(w);
      else if (lo >= cut_val && hi <= cut_test)
        val.push_back(w);
      else if (lo >= cut_test)
        test.push_back(w);
      // windows straddling a boundary are dropped
    }
  } else {
    std::vector<size_t> order(d.windows.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(mix_seed(cfg.seed, 0x59117));
    std::shuffle(order.begin(), order.end(), rng);
    const int64_t n = int64_t(order.size());
    const int64_t n_test = std::llround(double(n) * cfg.test_fraction);
    const int64_t n_val = std::llround(double(n - n_test) * cfg.val_fraction);
    for (int64_t i = 0; i < n; ++i) {
      const SampleWindow& w = d.windows[order[i]];
      if (i < n - n_test - n_val)
        train.push_back(w);
      else if (i < n - n_test)
        val.push_back(w);
      else
        test.push_back(w);
    }
  }

  if (train.empty() || test.empty())
    throw ConfigError("split produced an empty train or test set; too few positions");

  SplitResult r{subset_like(d, std::move(train), "train"), subset_like(d, std::move(val), "val"),
                subset_like(d, std::move(test), "test")};
  const NormStats stats = compute_norm_stats(r.train.windows, d.n_bins, d.stats.dps_floor_db);
  r.train.stats = stats;
  r.val.stats = stats;
  r.test.stats = stats;
  return r;
}

// ---------------------------------------------------------------------------
// Window gathering over an atomic dataset

namespace {

// Atomic windows of one pair, grouped into runs of consecutive positions.
// An anchor of length n_p is a flat offset whose next n_p rows are one run.
struct WindowTable {
  std::vector<size_t> flat;                       // atomic window indices, run-ordered
  std::vector<std::pair<size_t, size_t>> runs;    // [begin, end) into flat
  std::map<int, std::vector<size_t>> anchors;     // n_p -> flat offsets

  static WindowTable build(const Dataset& atomic) {
    if (atomic.n_p != 1)
      throw TrainError("training requires an atomic dataset (n_p == 1), got n_p = " +
                       std::to_string(atomic.n_p));
    std::map<int32_t, std::vector<size_t>> by_pair;
    for (size_t i = 0; i < atomic.windows.size(); ++i)
      by_pair[atomic.windows[i].pair].push_back(i);
    WindowTable t;
    for (auto& [pair, idx] : by_pair) {
      std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
        return atomic.windows[a].start_pos < atomic.windows[b].start_pos;
      });
      size_t run_begin = t.flat.size();
      for (size_t k = 0; k < idx.size(); ++k) {
        if (k > 0 &&
            atomic.windows[idx[k]].start_pos != atomic.windows[idx[k - 1]].start_pos + 1) {
          t.runs.emplace_back(run_begin, t.flat.size());
          run_begin = t.flat.size();
        }
        t.flat.push_back(idx[k]);
      }
      t.runs.emplace_back(run_begin, t.flat.size());
    }
    return t;
  }

  const std::vector<size_t>& anchors_for(int n_p) {
    auto it = anchors.find(n_p);
    if (it != anchors.end()) return it->second;
    std::vector<size_t> a;
    for (const auto& [b, e] : runs)
      for (size_t s = b; s + n_p <= e; ++s) a.push_back(s);
    return anchors.emplace(n_p, std::move(a)).first->second;
  }
};

template <class T>
Tensor<T> gather_dps(const Dataset& atomic, const WindowTable& t, size_t anchor, int n_p) {
  std::vector<T> v(size_t(n_p) * atomic.n_bins);
  for (int r = 0; r < n_p; ++r) {
    const SampleWindow& w = atomic.windows[t.flat[anchor + r]];
    for (int k = 0; k < atomic.n_bins; ++k)
      v[size_t(r) * atomic.n_bins + k] =
          T(dps_normalize_value(double(w.dps[k]), atomic.stats));
  }
  return Tensor<T>::input({n_p, atomic.n_bins}, std::move(v));
}

template <class T>
Tensor<T> gather_csi(const Dataset& atomic, const WindowTable& t, size_t anchor, int n_p) {
  std::vector<T> v(size_t(n_p) * 2);
  for (int r = 0; r < n_p; ++r) {
    const SampleWindow& w = atomic.windows[t.flat[anchor + r]];
    CsiSample norm = csi_normalize({double(w.csi[0]), double(w.csi[1])}, atomic.stats);
    v[size_t(r) * 2] = T(norm.magnitude);
    v[size_t(r) * 2 + 1] = T(norm.phase);
  }
  return Tensor<T>::input({n_p, 2}, std::move(v));
}

struct Fnv1a {
  uint64_t h = 14695981039346656037ULL;
  void bytes(const void* p, size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  }
  template <class V>
  void value(V v) {
    bytes(&v, sizeof v);
  }
};

template <class T>
double deployment_mse(const C2sModel<T>& m, const Dataset& atomic, WindowTable& t, int n_p) {
  const auto& anchors = t.anchors_for(n_p);
  if (anchors.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sq = 0.0;
  int64_t n = 0;
  for (size_t a : anchors) {
    Tensor<T> p = gather_dps<T>(atomic, t, a, n_p);
    Tensor<T> c = gather_csi<T>(atomic, t, a, n_p);
    Tensor<T> out = m.decode(c);
    for (size_t i = 0; i < out.value().size(); ++i) {
      const double e = double(out.value()[i]) - double(p.value()[i]);
      sq += e * e;
    }
    n += int64_t(out.value().size());
  }
  return sq / double(n);
}

template <class T>
TrainResult train_typed(ModelKind kind, const Dataset& train_set, const Dataset& val_set,
                        const ModelConfig& mcfg, const TrainConfig& tcfg) {
  WindowTable train_table = WindowTable::build(train_set);
  WindowTable val_table;
  const bool has_val = !val_set.windows.empty();
  if (has_val) {
    if (val_set.stats != train_set.stats)
      throw TrainError("validation set carries different NormStats than the train set");
    val_table = WindowTable::build(val_set);
  }
  for (int n_p : tcfg.n_p_schedule)
    if (train_table.anchors_for(n_p).empty())
      throw TrainError("train split has no windows of length n_p = " + std::to_string(n_p));

  C2sModel<T> model = C2sModel<T>::init(mcfg);
  std::vector<Tensor<T>> params =
      kind == ModelKind::kC2sAe ? model.parameters() : model.decoder_parameters();
  AdamConfig acfg;
  acfg.lr = tcfg.lr;
  OptimizerState<T> opt = make_adam_state(params, acfg);

  Fnv1a fp;
  fp.value(int64_t(tcfg.steps));
  fp.value(int64_t(tcfg.batch_size));
  fp.value(tcfg.lr);
  fp.value(tcfg.seed);
  fp.value(mcfg.seed);
  for (int n : tcfg.n_p_schedule) fp.value(int64_t(n));
  fp.value(int(tcfg.reduction));

  std::mt19937_64 rng(mix_seed(tcfg.seed, 0x7261));

  TrainResult res;
  res.train_curve.reserve(tcfg.steps);
  std::vector<std::vector<T>> best_values;
  int rounds_since_best = 0;
  auto run_validation = [&](int step) -> bool {
    if (!has_val) return false;
    double total = 0.0;
    int counted = 0;
    for (int n_p : tcfg.n_p_schedule) {
      const double v = deployment_mse(model, val_set, val_table, n_p);
      if (std::isfinite(v)) {
        total += v;
        ++counted;
      }
    }
    if (counted == 0) return false;
    const double val = total / counted;
    res.val_curve.emplace_back(step, val);
    if (res.best_step < 0 || val < res.best_val) {
      res.best_val = val;
      res.best_step = step;
      best_values.clear();
      for (auto& p : params) best_values.push_back(p.value());
      rounds_since_best = 0;
    } else {
      ++rounds_since_best;
    }
    return tcfg.patience > 0 && rounds_since_best >= tcfg.patience;
  };

  for (int step = 0; step < tcfg.steps; ++step) {
    const int n_p = tcfg.n_p_schedule[size_t(step) % tcfg.n_p_schedule.size()];
    const auto& anchors = train_table.anchors_for(n_p);
    std::uniform_int_distribution<size_t> pick(0, anchors.size() - 1);

    zero_grads(params);
    std::vector<Tensor<T>> losses;
    losses.reserve(tcfg.batch_size);
    fp.value(int64_t(step));
    fp.value(int64_t(n_p));
    for (int b = 0; b < tcfg.batch_size; ++b) {
      const size_t a = anchors[pick(rng)];
      fp.value(uint64_t(a));
      Tensor<T> p = gather_dps<T>(train_set, train_table, a, n_p);
      Tensor<T> c = gather_csi<T>(train_set, train_table, a, n_p);
      if (kind == ModelKind::kC2sAe)
        losses.push_back(joint_loss(model, p, c, tcfg.reduction).total);
      else
        losses.push_back(baseline_loss(model, p, c, tcfg.reduction));
    }
    Tensor<T> loss = average(losses);
    const double loss_v = double(loss.item());
    if (!std::isfinite(loss_v))
      throw TrainError("training diverged: non-finite loss at step " + std::to_string(step));
    loss.backward();
    adam_step(params, opt);
    res.train_curve.push_back(loss_v);

    if (tcfg.eval_every > 0 && (step + 1) % tcfg.eval_every == 0)
      if (run_validation(step + 1)) break;
  }
  if (has_val && (tcfg.eval_every == 0 || res.val_curve.empty() ||
                  res.val_curve.back().first != int(res.train_curve.size())))
    run_validation(int(res.train_curve.size()));

  if (!best_values.empty())
    for (size_t i = 0; i < params.size(); ++i) params[i].value() = best_values[i];

  res.fingerprint = fp.h;

  std::map<std::string, std::string> meta;
  meta["kind"] = to_string(kind);
  meta["steps"] = std::to_string(res.train_curve.size());
  meta["seed"] = std::to_string(tcfg.seed);
  meta["lr"] = format_g(tcfg.lr);
  meta["batch_size"] = std::to_string(tcfg.batch_size);
  {
    std::ostringstream ss;
    for (size_t i = 0; i < tcfg.n_p_schedule.size(); ++i)
      ss << (i ? "," : "") << tcfg.n_p_schedule[i];
    meta["n_p_schedule"] = ss.str();
  }
  {
    std::ostringstream ss;
    ss << std::hex << res.fingerprint;
    meta["fingerprint"] = ss.str();
  }
  meta["final_train_loss"] =
      res.train_curve.empty() ? "nan" : format_g(res.train_curve.back());
  meta["best_step"] = std::to_string(res.best_step);
  meta["best_val_mse"] = res.best_step < 0 ? "nan" : format_g(res.best_val);
  meta["delta_tau_s"] = format_g(train_set.delta_tau_s);
  meta["n_train_windows"] = std::to_string(train_set.windows.size());
  meta["n_val_windows"] = std::to_string(val_set.windows.size());
  meta["reduction"] = tcfg.reduction == Reduction::kMean ? "mean" : "sum";

  res.checkpoint = to_checkpoint(model, train_set.stats, std::move(meta));
  return res;
}

}  // namespace

TrainResult train(ModelKind kind, const Dataset& train_set, const Dataset& val_set,
                  const ModelConfig& mcfg, const TrainConfig& tcfg) {
  mcfg.validate();
  tcfg.validate();
  if (train_set.n_bins != mcfg.n_bins)
    throw TrainError("dataset n_bins " + std::to_string(train_set.n_bins) +
                     " does not match model n_bins " + std::to_string(mcfg.n_bins));
  return mcfg.precision == Precision::kF32 ? train_typed<float>(kind, train_set, val_set, mcfg, tcfg)
                                           : train_typed<double>(kind, train_set, val_set, mcfg, tcfg);
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

template <class T>
void accumulate_model_mse(const Checkpoint& ckpt, const Dataset& test, int n_p, bool with_encoder,
                          double& mse_decode, double& mse_roundtrip, int64_t& n_windows) {
  C2sModel<T> m = model_from_checkpoint<T>(ckpt);
  WindowTable t = WindowTable::build(test);
  const auto& anchors = t.anchors_for(n_p);
  if (anchors.empty())
    throw ConfigError("test set has no windows of length n_p = " + std::to_string(n_p));
  double sq_dec = 0.0, sq_rt = 0.0;
  int64_t n = 0;
  for (size_t a : anchors) {
    Tensor<T> p = gather_dps<T>(test, t, a, n_p);
    Tensor<T> c = gather_csi<T>(test, t, a, n_p);
    Tensor<T> dec = m.decode(c);
    for (size_t i = 0; i < dec.value().size(); ++i) {
      const double e = double(dec.value()[i]) - double(p.value()[i]);
      sq_dec += e * e;
    }
    if (with_encoder) {
      Tensor<T> rt = m.decode(m.encode(p));
      for (size_t i = 0; i < rt.value().size(); ++i) {
        const double e = double(rt.value()[i]) - double(p.value()[i]);
        sq_rt += e * e;
      }
    }
    n += int64_t(dec.value().size());
  }
  mse_decode = sq_dec / double(n);
  mse_roundtrip = with_encoder ? sq_rt / double(n) : 0.0;
  n_windows = int64_t(anchors.size());
}

void model_mse(const Checkpoint& ckpt, const Dataset& test, int n_p, bool with_encoder,
               double& mse_decode, double& mse_roundtrip, int64_t& n_windows) {
  if (ckpt.config.precision == Precision::kF32)
    accumulate_model_mse<float>(ckpt, test, n_p, with_encoder, mse_decode, mse_roundtrip, n_windows);
  else
    accumulate_model_mse<double>(ckpt, test, n_p, with_encoder, mse_decode, mse_roundtrip, n_windows);
}

}  // namespace

EvalReport evaluate_mse(const Checkpoint& ckpt_ae, const Checkpoint& ckpt_base,
                        const Dataset& test_atomic, const std::vector<int>& n_p_list) {
  if (!(ckpt_ae.stats == ckpt_base.stats))
    throw ConfigError("checkpoints carry different NormStats; their MSEs are not comparable");
  if (n_p_list.empty()) throw ConfigError("n_p list must be nonempty");

  Dataset test = test_atomic;
  test.stats = ckpt_ae.stats;  // evaluation units come from the checkpoints

  EvalReport r;
  for (int n_p : n_p_list) {
    if (n_p < 1) throw ConfigError("n_p must be >= 1");
    EvalRow row;
    row.n_p = n_p;
    double rt = 0.0;
    int64_t nw = 0;
    model_mse(ckpt_ae, test, n_p, true, row.mse_ae, row.mse_ae_roundtrip, nw);
    model_mse(ckpt_base, test, n_p, false, row.mse_baseline, rt, nw);
    row.n_windows = nw;
    r.rows.push_back(row);
  }
  for (const auto& [k, v] : test_atomic.provenance) r.provenance["dataset." + k] = v;
  auto copy_meta = [&](const Checkpoint& c, const std::string& prefix) {
    for (const char* key : {"kind", "seed", "steps", "fingerprint"}) {
      auto it = c.metadata.find(key);
      if (it != c.metadata.end()) r.provenance[prefix + key] = it->second;
    }
  };
  copy_meta(ckpt_ae, "ae.");
  copy_meta(ckpt_base, "baseline.");
  return r;
}

// ---------------------------------------------------------------------------
// Benchmarking

namespace {

template <class T>
std::vector<BenchRow> benchmark_typed(const Checkpoint& ckpt, const std::vector<int>& n_p_list,
                                      int repeats, int warmup) {
  C2sModel<T> m = model_from_checkpoint<T>(ckpt);
  std::vector<BenchRow> rows;
  for (int n_p : n_p_list) {
    if (n_p < 1) throw ConfigError("n_p must be >= 1");
    std::mt19937_64 rng(mix_seed(ckpt.config.seed, uint64_t(n_p), 0xBE9C4));
    std::normal_distribution<double> mag(0.0, 1.0);
    std::uniform_real_distribution<double> phase(-M_PI, M_PI);
    std::vector<T> z(size_t(n_p) * 2);
    for (int i = 0; i < n_p; ++i) {
      z[size_t(i) * 2] = T(mag(rng));
      z[size_t(i) * 2 + 1] = T(phase(rng));
    }
    Tensor<T> c = Tensor<T>::input({n_p, 2}, z);

    for (int i = 0; i < warmup; ++i) (void)m.decode(c);
    std::vector<double> ms(repeats);
    for (int i = 0; i < repeats; ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      (void)m.decode(c);
      const auto t1 = std::chrono::steady_clock::now();
      ms[i] = std::chrono::duration<double, std::milli>(t1 - t0).count();
    }
    BenchRow row;
    row.n_p = n_p;
    row.repeats = repeats;
    double mean = 0.0;
    for (double v : ms) mean += v;
    mean /= repeats;
    double var = 0.0;
    for (double v : ms) var += (v - mean) * (v - mean);
    row.latency_ms_mean = mean;
    row.latency_ms_std = repeats > 1 ? std::sqrt(var / (repeats - 1)) : 0.0;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

std::vector<BenchRow> benchmark_inference(const Checkpoint& ckpt, const std::vector<int>& n_p_list,
                                          int repeats, int warmup) {
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
  if (warmup < 0) throw ConfigError("warmup must be >= 0");
  return ckpt.config.precision == Precision::kF32
             ? benchmark_typed<float>(ckpt, n_p_list, repeats, warmup)
             : benchmark_typed<double>(ckpt, n_p_list, repeats, warmup);
}

// ---------------------------------------------------------------------------
// Report persistence

void write_eval_report(const EvalReport& r, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError(IoError::Kind::kOther, "cannot open " + path + " for writing");
  for (const auto& [k, v] : r.provenance) os << "# " << k << "=" << v << "\n";
  os << "n_p\tmse_baseline\tmse_ae\timprovement_pct\tlatency_ms_mean\tlatency_ms_std\n";
  os.precision(10);
  for (const auto& row : r.rows)
    os << row.n_p << '\t' << row.mse_baseline << '\t' << row.mse_ae << '\t'
       << row.improvement_pct() << '\t' << row.latency_ms_mean << '\t' << row.latency_ms_std
       << "\n";
  if (!os) throw IoError(IoError::Kind::kOther, "write failed for " + path);
}

EvalReport read_eval_report(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError(IoError::Kind::kOther, "cannot open " + path);
  EvalReport r;
  std::string line;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) {
        std::string key = line.substr(1, eq - 1);
        while (!key.empty() && key.front() == ' ') key.erase(key.begin());
        r.provenance[key] = line.substr(eq + 1);
      }
      continue;
    }
    if (!header_seen) {
      header_seen = true;  // column header row
      continue;
    }
    std::istringstream ss(line);
    EvalRow row;
    double improvement_ignored = 0.0;
    if (!(ss >> row.n_p >> row.mse_baseline >> row.mse_ae >> improvement_ignored >>
          row.latency_ms_mean >> row.latency_ms_std))
      throw IoError(IoError::Kind::kOther, "unparseable report row: " + line);
    r.rows.push_back(row);
  }
  if (!header_seen) throw IoError(IoError::Kind::kOther, "report has no header row: " + path);
  return r;
}

}  // namespace c2s
