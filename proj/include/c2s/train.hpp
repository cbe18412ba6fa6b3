// Deterministic training for the autoencoder and the decoder-only baseline,
// dataset splitting, MSE evaluation across window lengths, and inference
// latency benchmarking.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "c2s/model.hpp"
#include "c2s/sounding.hpp"

namespace c2s {

enum class SplitPolicy { kSpatialExtrapolation, kRandom };
enum class ModelKind { kC2sAe, kBaseline };

SplitPolicy split_policy_from_string(const std::string& s);
std::string to_string(SplitPolicy p);
ModelKind model_kind_from_string(const std::string& s);
std::string to_string(ModelKind k);

struct TrainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  int steps = 2000;
  int batch_size = 8;  // windows per step
  double lr = 1e-3;
  uint64_t seed = 1;
  std::vector<int> n_p_schedule = {1, 2, 4, 8, 16};  // cycled across steps
  int eval_every = 100;   // validation cadence in steps (0 = never)
  int patience = 0;       // validation rounds without improvement before stop (0 = off)
  double val_fraction = 0.15;
  double test_fraction = 0.3;
  SplitPolicy policy = SplitPolicy::kSpatialExtrapolation;
  Reduction reduction = Reduction::kMean;

  void validate() const;
};

// ---------------------------------------------------------------------------
// Splitting

struct SplitResult {
  Dataset train, val, test;
};

// Spatial-extrapolation policy holds out the trailing test_fraction of
// position indices; validation is carved from the tail of the remaining
// region. Windows straddling a boundary are dropped, so no test position
// ever appears in a train window. The random policy shuffles whole windows.
// NormStats are recomputed on the train windows and stamped on all three.
SplitResult split_dataset(const Dataset& d, const TrainConfig& cfg);

// ---------------------------------------------------------------------------
// Training

struct TrainResult {
  Checkpoint checkpoint;                          // best-validation parameters
  std::vector<double> train_curve;                // total loss per step
  std::vector<std::pair<int, double>> val_curve;  // (step, deployment MSE)
  uint64_t fingerprint = 0;  // data order + budget hash, model-kind independent
  int best_step = -1;
  double best_val = 0.0;
};

// Both kinds run the identical sampling stream, step count, optimizer, and
// seed; only the loss differs. Train/val datasets must be atomic (n_p == 1);
// windows are gathered per step at the scheduled n_p. Throws TrainError on
// divergence (non-finite loss).
TrainResult train(ModelKind kind, const Dataset& train_set, const Dataset& val_set,
                  const ModelConfig& mcfg, const TrainConfig& tcfg);

// ---------------------------------------------------------------------------
// Evaluation

struct EvalRow {
  int n_p = 0;
  double mse_baseline = 0.0;
  double mse_ae = 0.0;
  double mse_ae_roundtrip = 0.0;  // decode(encode(P)); logged, not compared
  double latency_ms_mean = 0.0;
  double latency_ms_std = 0.0;
  int64_t n_windows = 0;

  // Recomputed on demand, never stored.
  double improvement_pct() const {
    return mse_baseline != 0.0 ? (mse_baseline - mse_ae) / mse_baseline * 100.0 : 0.0;
  }
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::map<std::string, std::string> provenance;
};

// Test MSE in normalized units through the deployment path decode(true CSI)
// for both checkpoints. The test dataset must be atomic; windows are regrouped
// per requested n_p. Throws ConfigError if the checkpoints carry different
// NormStats (the two MSE columns would be in different units).
EvalReport evaluate_mse(const Checkpoint& ckpt_ae, const Checkpoint& ckpt_base,
                        const Dataset& test_atomic, const std::vector<int>& n_p_list);

// One row per n_p: decoder forward at batch size 1, `repeats` timed runs
// after `warmup` untimed ones.
struct BenchRow {
  int n_p = 0;
  double latency_ms_mean = 0.0;
  double latency_ms_std = 0.0;
  int repeats = 0;
};

std::vector<BenchRow> benchmark_inference(const Checkpoint& ckpt, const std::vector<int>& n_p_list,
                                          int repeats = 1000, int warmup = 10);

// Report persistence: tab-separated, one row per n_p, improvement recomputed
// at write time.
void write_eval_report(const EvalReport& r, const std::string& path);
EvalReport read_eval_report(const std::string& path);

}  // namespace c2s
