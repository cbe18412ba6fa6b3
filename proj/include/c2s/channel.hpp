// Synthetic multipath channel generation and PN spread-spectrum sounding
// emulation. Produces CIR records with known ground-truth paths so that
// paired DPS/CSI data exists at desk scale.

#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace c2s {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

struct SimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Deterministic seed splitting so positions/pairs can be generated in any
// order (or in parallel) with identical results.
uint64_t mix_seed(uint64_t seed, uint64_t a, uint64_t b = 0, uint64_t c = 0);

// ---------------------------------------------------------------------------
// Domain types

struct Path {
  double delay_s = 0.0;
  std::complex<double> gain;
  bool is_los = false;
};

// Multipath geometry for one Tx/Rx placement: delays sorted ascending,
// at most one path flagged line-of-sight.
struct PathSet {
  std::vector<Path> paths;
  double carrier_hz = 3.5e9;
  double max_delay_spread_s = 0.0;  // span between first and last path

  double total_power() const;
  void validate(double grid_max_s) const;
};

struct SoundingConfig {
  double sampling_rate_hz = 200e6;
  double bandwidth_hz = 160e6;
  int pn_degree = 10;
  int periods = 128;
  int n_bins = 1023;  // must equal 2^pn_degree - 1
  double carrier_hz = 3.5e9;

  double delta_tau_s() const { return 1.0 / sampling_rate_hz; }
  double grid_max_s() const { return n_bins * delta_tau_s(); }
  void validate() const;
};

// One antenna pair's CIR record: complex taps per repetition period.
struct Cir {
  std::vector<std::complex<double>> taps;  // [periods * n_bins], row-major
  int periods = 0;
  int n_bins = 0;
  double delta_tau_s = 0.0;
  int position_index = 0;

  std::complex<double>& at(int period, int bin) { return taps[size_t(period) * n_bins + bin]; }
  const std::complex<double>& at(int period, int bin) const {
    return taps[size_t(period) * n_bins + bin];
  }
};

enum class Scenario { kLos, kNlos };

Scenario scenario_from_string(const std::string& s);
std::string to_string(Scenario s);

// Statistics of the synthetic channel generator. These are simulator
// choices, not measurement-derived values.
struct ChannelStats {
  int n_paths_min = 2;
  int n_paths_max = 8;
  double delay_spread_s = 120e-9;    // mean of the exponential excess-delay law
  double rician_k_db = 6.0;          // direct-to-scattered power ratio (LoS)
  double nlos_extra_loss_db = 6.0;   // extra attenuation of NLoS channels
  double pathloss_ref_m = 1.0;       // amplitude scale = ref / distance
};

struct TrajectoryPoint {
  int position_index = 0;
  double distance_m = 0.0;
  PathSet paths;
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;
  double step_m = 5.0;
  double start_distance_m = 10.0;
  Scenario scenario = Scenario::kLos;
};

// ---------------------------------------------------------------------------
// Operations

// Draw a random multipath channel at the given Tx-Rx distance.
PathSet sample_channel(Scenario scenario, double distance_m, const SoundingConfig& cfg,
                       std::mt19937_64& rng, const ChannelStats& stats = {});

// Exact circular band-limited interpolation kernel (Dirichlet / periodic
// sinc) evaluated at integer bin m for a path at fractional bin u.
double dirichlet_kernel(int m, double u, int n_bins);

// Noiseless channel taps for one period: each path placed with the
// band-limited kernel at its (possibly fractional) delay.
std::vector<std::complex<double>> clean_taps(const PathSet& p, const SoundingConfig& cfg);

// Ideal CIR: band-limited tap placement plus independent complex Gaussian
// noise per period. snr_db is total channel energy over per-bin noise power
// (reference power 1.0 when the path set is empty); +inf disables noise.
Cir synth_cir(const PathSet& p, const SoundingConfig& cfg, double snr_db, std::mt19937_64& rng);

// Maximal-length PN sequence as +/-1 chips, length 2^degree - 1.
// `taps` lists the exponents of the feedback polynomial x^degree + ... + 1,
// e.g. {10, 3} for x^10 + x^3 + 1. Throws SimError if the polynomial is not
// primitive (sequence repeats early).
std::vector<int8_t> generate_pn_sequence(int degree, const std::vector<int>& taps);

// Default feedback taps for common degrees (3..12).
std::vector<int> default_pn_taps(int degree);

// Sounded CIR estimate: transmit the PN sequence through the channel with
// per-chip receiver noise at snr_db, then circularly correlate and normalize
// by the sequence length. Agrees with synth_cir up to the m-sequence
// sidelobe floor plus correlation noise.
Cir sound_cir(const PathSet& p, const SoundingConfig& cfg, double snr_db, std::mt19937_64& rng);

// Smoothly evolving channel along a straight move-away path: positions at
// start + step*k meters; the direct-path delay tracks distance exactly,
// scatterer delays drift with bounded increments and gains follow an AR(1)
// process, so consecutive windows carry usable spatial correlation.
Trajectory make_trajectory(Scenario scenario, int n_positions, const SoundingConfig& cfg,
                           std::mt19937_64& rng, const ChannelStats& stats = {},
                           double start_distance_m = 10.0, double step_m = 5.0);

// Per-antenna-pair variant of a base path set: same geometry, per-pair
// phase offsets on every path.
PathSet apply_pair_phases(const PathSet& base, const std::vector<double>& phase_offsets);

}  // namespace c2s
