#include "c2s/channel.hpp"

#include <algorithm>
#include <cmath>

namespace c2s {

uint64_t mix_seed(uint64_t seed, uint64_t a, uint64_t b, uint64_t c) {
  // SplitMix64 finalizer over a simple combine.
  uint64_t x = seed;
  for (uint64_t v : {a + 1, b + 1, c + 1}) {
    x += 0x9e3779b97f4a7c15ULL * v;
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
  }
  return x;
}

double PathSet::total_power() const {
  double p = 0.0;
  for (const auto& path : paths) p += std::norm(path.gain);
  return p;
}

void PathSet::validate(double grid_max_s) const {
  int n_los = 0;
  double prev = -1.0;
  for (const auto& p : paths) {
    if (p.delay_s < 0.0 || p.delay_s >= grid_max_s)
      throw SimError("path delay " + std::to_string(p.delay_s) + " s outside delay grid [0, " +
                     std::to_string(grid_max_s) + ")");
    if (p.delay_s < prev) throw SimError("path list not sorted by delay");
    prev = p.delay_s;
    if (p.is_los) ++n_los;
  }
  if (n_los > 1) throw SimError("more than one path flagged LoS");
}

void SoundingConfig::validate() const {
  if (pn_degree < 2 || pn_degree > 20) throw SimError("pn_degree out of range");
  if (n_bins != (1 << pn_degree) - 1)
    throw SimError("n_bins " + std::to_string(n_bins) + " must equal 2^pn_degree-1 = " +
                   std::to_string((1 << pn_degree) - 1));
  if (sampling_rate_hz < bandwidth_hz)
    throw SimError("sampling rate below bandwidth");
  if (periods < 1) throw SimError("periods must be >= 1");
}

Scenario scenario_from_string(const std::string& s) {
  if (s == "los" || s == "LoS" || s == "LOS") return Scenario::kLos;
  if (s == "nlos" || s == "NLoS" || s == "NLOS") return Scenario::kNlos;
  throw SimError("unknown scenario '" + s + "' (expected los or nlos)");
}

std::string to_string(Scenario s) { return s == Scenario::kLos ? "los" : "nlos"; }

// ---------------------------------------------------------------------------

PathSet sample_channel(Scenario scenario, double distance_m, const SoundingConfig& cfg,
                       std::mt19937_64& rng, const ChannelStats& stats) {
  if (distance_m <= 0.0) throw SimError("distance must be > 0");
  const double direct_delay = distance_m / kSpeedOfLight;
  const double grid_max = cfg.grid_max_s();
  if (direct_delay >= grid_max)
    throw SimError("distance " + std::to_string(distance_m) +
                   " m places the direct path outside the delay grid");

  std::uniform_int_distribution<int> n_paths_dist(stats.n_paths_min, stats.n_paths_max);
  std::exponential_distribution<double> excess_dist(1.0 / stats.delay_spread_s);
  std::uniform_real_distribution<double> phase_dist(-M_PI, M_PI);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const int n_paths = n_paths_dist(rng);
  const bool los = scenario == Scenario::kLos;
  const int n_scatter = los ? n_paths - 1 : n_paths;

  // Scattered paths: exponential excess delays, complex Gaussian gains with
  // exponentially decaying mean power over excess delay.
  std::vector<Path> scatter;
  scatter.reserve(n_scatter);
  double scattered_mean_power = 0.0;
  for (int i = 0; i < n_scatter; ++i) {
    double excess = excess_dist(rng);
    int guard = 0;
    while (direct_delay + excess >= grid_max && ++guard < 64) excess = excess_dist(rng);
    if (direct_delay + excess >= grid_max) excess = 0.5 * (grid_max - direct_delay);
    const double mean_power = std::exp(-excess / stats.delay_spread_s);
    scattered_mean_power += mean_power;
    const double sigma = std::sqrt(mean_power / 2.0);
    Path p;
    p.delay_s = direct_delay + excess;
    p.gain = {sigma * gauss(rng), sigma * gauss(rng)};
    scatter.push_back(p);
  }

  PathSet out;
  out.carrier_hz = cfg.carrier_hz;
  const double amp_scale = stats.pathloss_ref_m / distance_m;

  if (los) {
    const double k_lin = std::pow(10.0, stats.rician_k_db / 10.0);
    const double los_power = k_lin * scattered_mean_power;
    // Normalize so the total mean power equals the pathloss target.
    const double norm = amp_scale / std::sqrt(los_power + scattered_mean_power);
    Path direct;
    direct.delay_s = direct_delay;
    direct.gain = std::polar(std::sqrt(los_power) * norm, phase_dist(rng));
    direct.is_los = true;
    out.paths.push_back(direct);
    for (auto& p : scatter) {
      p.gain *= norm;
      out.paths.push_back(p);
    }
  } else {
    const double extra = std::pow(10.0, -stats.nlos_extra_loss_db / 20.0);
    const double norm = amp_scale * extra / std::sqrt(scattered_mean_power);
    for (auto& p : scatter) {
      p.gain *= norm;
      out.paths.push_back(p);
    }
  }

  std::sort(out.paths.begin(), out.paths.end(),
            [](const Path& a, const Path& b) { return a.delay_s < b.delay_s; });
  out.max_delay_spread_s =
      out.paths.empty() ? 0.0 : out.paths.back().delay_s - out.paths.front().delay_s;
  out.validate(grid_max);
  return out;
}

double dirichlet_kernel(int m, double u, int n_bins) {
  // sin(pi x) / (N sin(pi x / N)) for odd N; exact delta at x == 0 (mod N).
  const double x = double(m) - u;
  const double r = std::remainder(x, double(n_bins));
  if (std::fabs(r) < 1e-12) return 1.0;
  return std::sin(M_PI * x) / (n_bins * std::sin(M_PI * x / n_bins));
}

std::vector<std::complex<double>> clean_taps(const PathSet& p, const SoundingConfig& cfg) {
  p.validate(cfg.grid_max_s());
  std::vector<std::complex<double>> h(cfg.n_bins, {0.0, 0.0});
  const double dt = cfg.delta_tau_s();
  for (const auto& path : p.paths) {
    const double u = path.delay_s / dt;
    for (int m = 0; m < cfg.n_bins; ++m) h[m] += path.gain * dirichlet_kernel(m, u, cfg.n_bins);
  }
  return h;
}

namespace {

double noise_power_per_bin(const PathSet& p, double snr_db) {
  if (std::isinf(snr_db)) return 0.0;
  const double ref = p.paths.empty() ? 1.0 : p.total_power();
  return ref / std::pow(10.0, snr_db / 10.0);
}

}  // namespace

Cir synth_cir(const PathSet& p, const SoundingConfig& cfg, double snr_db, std::mt19937_64& rng) {
  cfg.validate();
  const auto clean = clean_taps(p, cfg);
  const double npow = noise_power_per_bin(p, snr_db);
  const double sigma = std::sqrt(npow / 2.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Cir cir;
  cir.periods = cfg.periods;
  cir.n_bins = cfg.n_bins;
  cir.delta_tau_s = cfg.delta_tau_s();
  cir.taps.resize(size_t(cfg.periods) * cfg.n_bins);
  for (int per = 0; per < cfg.periods; ++per)
    for (int k = 0; k < cfg.n_bins; ++k) {
      std::complex<double> n =
          sigma > 0.0 ? std::complex<double>(sigma * gauss(rng), sigma * gauss(rng))
                      : std::complex<double>(0.0, 0.0);
      cir.at(per, k) = clean[k] + n;
    }
  return cir;
}

// ---------------------------------------------------------------------------
// PN sequences

std::vector<int> default_pn_taps(int degree) {
  // Primitive polynomial exponents (x^degree + x^t + ... + 1) per degree.
  switch (degree) {
    case 3:  return {3, 1};
    case 4:  return {4, 1};
    case 5:  return {5, 2};
    case 6:  return {6, 1};
    case 7:  return {7, 1};
    case 8:  return {8, 6, 5, 4};
    case 9:  return {9, 4};
    case 10: return {10, 3};
    case 11: return {11, 2};
    case 12: return {12, 7, 4, 3};
    default: throw SimError("no default PN taps for degree " + std::to_string(degree));
  }
}

std::vector<int8_t> generate_pn_sequence(int degree, const std::vector<int>& taps) {
  if (degree < 2 || degree > 20) throw SimError("pn degree out of range");
  bool has_degree_term = false;
  std::vector<int> low_taps;
  for (int t : taps) {
    if (t < 1 || t > degree) throw SimError("feedback tap exponent out of range");
    if (t == degree)
      has_degree_term = true;
    else if (std::find(low_taps.begin(), low_taps.end(), t) == low_taps.end())
      low_taps.push_back(t);
  }
  if (!has_degree_term) throw SimError("feedback polynomial must include the x^degree term");

  // Recurrence for f(x) = x^d + sum x^e + 1:  s[m] = s[m-d] xor sum_e s[m-d+e].
  const int n = (1 << degree) - 1;
  std::vector<uint8_t> bits(size_t(n) + degree);
  for (int i = 0; i < degree; ++i) bits[i] = 1;
  for (int m = degree; m < n + degree; ++m) {
    uint8_t b = bits[m - degree];
    for (int e : low_taps) b ^= bits[m - degree + e];
    bits[m] = b;
  }

  // The d-bit state must first return to the seed after exactly n steps.
  auto state_matches_seed = [&](int t) {
    for (int i = 0; i < degree; ++i)
      if (bits[t + i] != bits[i]) return false;
    return true;
  };
  for (int t = 1; t < n; ++t)
    if (state_matches_seed(t))
      throw SimError("degenerate feedback polynomial: sequence period " + std::to_string(t) +
                     " < " + std::to_string(n));
  if (!state_matches_seed(n))
    throw SimError("degenerate feedback polynomial: state does not recur at 2^degree-1");

  std::vector<int8_t> seq(n);
  for (int i = 0; i < n; ++i) seq[i] = int8_t(1 - 2 * int(bits[i]));  // 0 -> +1, 1 -> -1
  return seq;
}

Cir sound_cir(const PathSet& p, const SoundingConfig& cfg, double snr_db, std::mt19937_64& rng) {
  cfg.validate();
  const auto pn = generate_pn_sequence(cfg.pn_degree, default_pn_taps(cfg.pn_degree));
  const int n = cfg.n_bins;
  if (int(pn.size()) != n) throw SimError("PN length does not match delay grid");

  // Steady-state periodic transmission: circular convolution of the channel
  // with the chip sequence, computed once (the channel is static within a
  // record), plus fresh receiver noise per period.
  const auto h = clean_taps(p, cfg);
  std::vector<std::complex<double>> clean_rx(n, {0.0, 0.0});
  for (int k = 0; k < n; ++k) {
    if (h[k] == std::complex<double>(0.0, 0.0)) continue;
    const std::complex<double> hk = h[k];
    for (int t = 0; t < n; ++t) {
      int idx = t - k;
      if (idx < 0) idx += n;
      clean_rx[t] += hk * double(pn[idx]);
    }
  }

  const double npow = noise_power_per_bin(p, snr_db);
  const double sigma = std::sqrt(npow / 2.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Cir cir;
  cir.periods = cfg.periods;
  cir.n_bins = n;
  cir.delta_tau_s = cfg.delta_tau_s();
  cir.taps.resize(size_t(cfg.periods) * n);

  std::vector<std::complex<double>> rx(n);
  for (int per = 0; per < cfg.periods; ++per) {
    for (int t = 0; t < n; ++t) {
      std::complex<double> w =
          sigma > 0.0 ? std::complex<double>(sigma * gauss(rng), sigma * gauss(rng))
                      : std::complex<double>(0.0, 0.0);
      rx[t] = clean_rx[t] + w;
    }
    // Circular correlation with the chip sequence, normalized by length.
    for (int m = 0; m < n; ++m) {
      std::complex<double> acc = 0.0;
      for (int t = 0; t < n; ++t) {
        int idx = t - m;
        if (idx < 0) idx += n;
        acc += rx[t] * double(pn[idx]);
      }
      cir.at(per, m) = acc / double(n);
    }
  }
  return cir;
}

// ---------------------------------------------------------------------------
// Trajectories

Trajectory make_trajectory(Scenario scenario, int n_positions, const SoundingConfig& cfg,
                           std::mt19937_64& rng, const ChannelStats& stats,
                           double start_distance_m, double step_m) {
  if (n_positions < 1) throw SimError("n_positions must be >= 1");
  cfg.validate();

  Trajectory traj;
  traj.step_m = step_m;
  traj.start_distance_m = start_distance_m;
  traj.scenario = scenario;
  traj.points.reserve(n_positions);

  PathSet base = sample_channel(scenario, start_distance_m, cfg, rng, stats);
  const double grid_max = cfg.grid_max_s();
  const double dt = cfg.delta_tau_s();

  // Scatterer evolution: AR(1) complex gains around the per-path mean power,
  // and a bounded random walk on excess delays (sub-bin increments).
  const double rho = 0.9;
  const double innov = std::sqrt(1.0 - rho * rho);
  std::uniform_real_distribution<double> drift(-0.6 * dt, 0.6 * dt);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Track per-path excess delay and unscaled gain; rebuild the PathSet with
  // the distance-dependent amplitude scale at every position.
  struct ScatterState {
    double excess_s;
    std::complex<double> unit_gain;  // CN with mean power matching the decay law
    double mean_power;
  };
  std::vector<ScatterState> sc;
  double direct_delay0 = start_distance_m / kSpeedOfLight;
  double scattered_mean_power = 0.0;
  for (const auto& p : base.paths) {
    if (p.is_los) continue;
    ScatterState s;
    s.excess_s = p.delay_s - direct_delay0;
    s.mean_power = std::exp(-s.excess_s / stats.delay_spread_s);
    scattered_mean_power += s.mean_power;
    s.unit_gain = {std::sqrt(s.mean_power / 2.0) * gauss(rng),
                   std::sqrt(s.mean_power / 2.0) * gauss(rng)};
    sc.push_back(s);
  }
  const bool los = scenario == Scenario::kLos;
  const double k_lin = std::pow(10.0, stats.rician_k_db / 10.0);
  const double nlos_extra = std::pow(10.0, -stats.nlos_extra_loss_db / 20.0);

  for (int k = 0; k < n_positions; ++k) {
    const double dist = start_distance_m + step_m * k;
    const double direct_delay = dist / kSpeedOfLight;
    if (direct_delay >= grid_max - dt)
      throw SimError("trajectory position " + std::to_string(k) + " leaves the delay grid");

    if (k > 0) {
      const double excess_max = grid_max - direct_delay - 0.05 * dt;
      for (auto& s : sc) {
        double e = s.excess_s + drift(rng);
        e = std::clamp(e, 0.05 * dt, excess_max);
        s.excess_s = e;
        const double sigma = std::sqrt(s.mean_power / 2.0);
        s.unit_gain = rho * s.unit_gain +
                      innov * std::complex<double>(sigma * gauss(rng), sigma * gauss(rng));
      }
    }

    PathSet ps;
    ps.carrier_hz = cfg.carrier_hz;
    const double amp_scale = stats.pathloss_ref_m / dist;
    if (los) {
      const double los_power = k_lin * scattered_mean_power;
      const double norm = amp_scale / std::sqrt(los_power + scattered_mean_power);
      Path direct;
      direct.delay_s = direct_delay;
      // Deterministic geometric carrier phase; encodes sub-wavelength motion.
      direct.gain = std::polar(std::sqrt(los_power) * norm,
                               std::remainder(-2.0 * M_PI * cfg.carrier_hz * direct_delay, 2.0 * M_PI));
      direct.is_los = true;
      ps.paths.push_back(direct);
      for (const auto& s : sc) {
        Path p;
        p.delay_s = direct_delay + s.excess_s;
        p.gain = s.unit_gain * norm;
        ps.paths.push_back(p);
      }
    } else {
      const double norm = amp_scale * nlos_extra / std::sqrt(scattered_mean_power);
      for (const auto& s : sc) {
        Path p;
        p.delay_s = direct_delay + s.excess_s;
        p.gain = s.unit_gain * norm;
        ps.paths.push_back(p);
      }
    }
    std::sort(ps.paths.begin(), ps.paths.end(),
              [](const Path& a, const Path& b) { return a.delay_s < b.delay_s; });
    ps.max_delay_spread_s =
        ps.paths.empty() ? 0.0 : ps.paths.back().delay_s - ps.paths.front().delay_s;
    ps.validate(grid_max);

    TrajectoryPoint tp;
    tp.position_index = k;
    tp.distance_m = dist;
    tp.paths = std::move(ps);
    traj.points.push_back(std::move(tp));
  }
  return traj;
}

PathSet apply_pair_phases(const PathSet& base, const std::vector<double>& phase_offsets) {
  if (phase_offsets.size() != base.paths.size())
    throw SimError("phase offset count does not match path count");
  PathSet out = base;
  for (size_t i = 0; i < out.paths.size(); ++i)
    out.paths[i].gain *= std::polar(1.0, phase_offsets[i]);
  return out;
}

}  // namespace c2s
