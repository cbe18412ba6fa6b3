// Measurement post-processing: CIR -> DPS, CIR -> CSI, dB-domain
// normalization, and the windowed dataset container with its on-disk format.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "c2s/channel.hpp"

namespace c2s {

struct IoError : std::runtime_error {
  enum class Kind { kBadMagic, kBadVersion, kTruncated, kOther };
  Kind kind;
  IoError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

// ---------------------------------------------------------------------------
// Domain types

// Nonnegative power per delay bin, averaged over repetition periods.
struct DelayPowerSpectrum {
  std::vector<double> power;
  double delta_tau_s = 0.0;
};

// One complex channel observation as (magnitude, wrapped phase).
struct CsiSample {
  double magnitude = 0.0;
  double phase = 0.0;  // radians in (-pi, pi]
};

// Normalization statistics a model is trained under. DPS is standardized in
// dB with a floor; CSI magnitude is standardized, phase passes through raw.
struct NormStats {
  double dps_floor_db = -120.0;
  double dps_mean_db = 0.0;
  double dps_std_db = 1.0;
  double csi_mag_mean = 0.0;
  double csi_mag_std = 1.0;
  std::string version = "1";

  bool operator==(const NormStats&) const = default;
};

// N_p consecutive positions of one antenna pair.
struct SampleWindow {
  std::vector<float> dps;  // [n_p * n_bins], linear power
  std::vector<float> csi;  // [n_p * 2], (magnitude, phase)
  int32_t pair = 0;        // globally unique antenna-pair id
  int32_t start_pos = 0;   // position index of the first row
  bool is_los = false;
};

struct Dataset {
  int n_p = 1;
  int n_bins = 1023;
  double delta_tau_s = 5e-9;
  std::vector<SampleWindow> windows;
  NormStats stats;
  std::map<std::string, std::string> provenance;

  int64_t count_los() const;
  void validate() const;
};

// ---------------------------------------------------------------------------
// CIR post-processing

// power[k] = mean over periods of |taps[p,k]|^2.
DelayPowerSpectrum cir_to_dps(const Cir& c);

// DFT of the period-averaged CIR over the delay axis, evaluated at one
// frequency bin (default 0: baseband DC, the downconverted RF center).
CsiSample cir_to_csi(const Cir& c, int freq_bin = 0);

// Mid-band alternative bin index, floor(n_bins / 2).
int csi_mid_bin(int n_bins);

// ---------------------------------------------------------------------------
// Normalization

// x = (10*log10(max(power, floor)) - mean) / std, elementwise.
std::vector<double> dps_normalize(const DelayPowerSpectrum& d, const NormStats& s);
// Exact inverse for values above the floor; output is positive by construction.
DelayPowerSpectrum dps_denormalize(const std::vector<double>& x, double delta_tau_s,
                                   const NormStats& s);

double dps_normalize_value(double power, const NormStats& s);
double dps_denormalize_value(double x, const NormStats& s);
CsiSample csi_normalize(const CsiSample& c, const NormStats& s);
CsiSample csi_denormalize(const CsiSample& c, const NormStats& s);

// Statistics over a set of windows (training split only, by protocol).
NormStats compute_norm_stats(const std::vector<SampleWindow>& windows, int n_bins,
                             double floor_db = -120.0);

// ---------------------------------------------------------------------------
// Dataset construction

enum class SoundingMode { kIdeal, kPn };

struct GenOptions {
  int n_pairs = 1;
  double snr_db = 25.0;
  uint64_t seed = 1;
  SoundingMode mode = SoundingMode::kIdeal;
  int csi_bin = 0;
  // Fraction of trailing positions reserved for testing; NormStats are
  // computed from windows that lie entirely before the cut.
  double stats_holdout_fraction = 0.3;
};

// Sliding windows of n_p consecutive positions per antenna pair, one DPS/CSI
// row per position. Pairs share each trajectory's geometry with per-pair
// random phase offsets. Throws SimError if a trajectory is shorter than n_p.
Dataset build_dataset(const std::vector<Trajectory>& trajectories, const SoundingConfig& cfg,
                      int n_p, const GenOptions& opt);

// Window count formula: pairs * (positions - n_p + 1) per trajectory.
int64_t expected_window_count(int64_t n_positions, int64_t n_pairs, int64_t n_p);

// Regroup an atomic dataset (n_p == 1) into sliding windows of length n_p.
Dataset rewindow(const Dataset& atomic, int n_p);

// ---------------------------------------------------------------------------
// Persistence (bit-exact round trip)

void write_dataset(const Dataset& d, const std::string& path);
Dataset read_dataset(const std::string& path);

// Delimited-text exporter: one row per delay bin, power per window row.
void export_dps_text(const DelayPowerSpectrum& d, const std::string& path, bool db_scale);

}  // namespace c2s
