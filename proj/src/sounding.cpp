#include "c2s/sounding.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "c2s/config.hpp"

static_assert(std::endian::native == std::endian::little,
              "dataset format is little-endian; big-endian hosts are not supported");

namespace c2s {

using nlohmann::json;

int64_t Dataset::count_los() const {
  int64_t n = 0;
  for (const auto& w : windows) n += w.is_los ? 1 : 0;
  return n;
}

void Dataset::validate() const {
  for (const auto& w : windows) {
    if (int64_t(w.dps.size()) != int64_t(n_p) * n_bins)
      throw IoError(IoError::Kind::kOther, "window DPS size does not match n_p * n_bins");
    if (int64_t(w.csi.size()) != int64_t(n_p) * 2)
      throw IoError(IoError::Kind::kOther, "window CSI size does not match n_p * 2");
  }
  if (stats.dps_std_db <= 0.0 || stats.csi_mag_std <= 0.0)
    throw IoError(IoError::Kind::kOther, "normalization std must be > 0");
}

// ---------------------------------------------------------------------------

DelayPowerSpectrum cir_to_dps(const Cir& c) {
  if (c.periods < 1 || c.n_bins < 1) throw SimError("cir_to_dps: empty CIR");
  DelayPowerSpectrum d;
  d.delta_tau_s = c.delta_tau_s;
  d.power.assign(c.n_bins, 0.0);
  for (int p = 0; p < c.periods; ++p)
    for (int k = 0; k < c.n_bins; ++k) d.power[k] += std::norm(c.at(p, k));
  for (auto& v : d.power) v /= c.periods;
  return d;
}

CsiSample cir_to_csi(const Cir& c, int freq_bin) {
  if (c.periods < 1 || c.n_bins < 1) throw SimError("cir_to_csi: empty CIR");
  if (freq_bin < 0 || freq_bin >= c.n_bins) throw SimError("cir_to_csi: frequency bin out of range");
  // Single-bin DFT of the period-averaged CIR.
  std::complex<double> h = 0.0;
  const double w = -2.0 * M_PI * double(freq_bin) / double(c.n_bins);
  for (int k = 0; k < c.n_bins; ++k) {
    std::complex<double> mean = 0.0;
    for (int p = 0; p < c.periods; ++p) mean += c.at(p, k);
    mean /= double(c.periods);
    h += mean * std::polar(1.0, w * k);
  }
  CsiSample s;
  s.magnitude = std::abs(h);
  s.phase = std::arg(h);
  if (s.phase <= -M_PI) s.phase = M_PI;  // wrap to (-pi, pi]
  return s;
}

int csi_mid_bin(int n_bins) { return n_bins / 2; }

// ---------------------------------------------------------------------------

double dps_normalize_value(double power, const NormStats& s) {
  const double floor_lin = std::pow(10.0, s.dps_floor_db / 10.0);
  const double db = 10.0 * std::log10(std::max(power, floor_lin));
  return (db - s.dps_mean_db) / s.dps_std_db;
}

double dps_denormalize_value(double x, const NormStats& s) {
  return std::pow(10.0, (x * s.dps_std_db + s.dps_mean_db) / 10.0);
}

std::vector<double> dps_normalize(const DelayPowerSpectrum& d, const NormStats& s) {
  std::vector<double> out(d.power.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = dps_normalize_value(d.power[i], s);
  return out;
}

DelayPowerSpectrum dps_denormalize(const std::vector<double>& x, double delta_tau_s,
                                   const NormStats& s) {
  DelayPowerSpectrum d;
  d.delta_tau_s = delta_tau_s;
  d.power.resize(x.size());
  for (size_t i = 0; i < x.size(); ++i) d.power[i] = dps_denormalize_value(x[i], s);
  return d;
}

CsiSample csi_normalize(const CsiSample& c, const NormStats& s) {
  return {(c.magnitude - s.csi_mag_mean) / s.csi_mag_std, c.phase};
}

CsiSample csi_denormalize(const CsiSample& c, const NormStats& s) {
  return {c.magnitude * s.csi_mag_std + s.csi_mag_mean, c.phase};
}

NormStats compute_norm_stats(const std::vector<SampleWindow>& windows, int n_bins,
                             double floor_db) {
  NormStats s;
  s.dps_floor_db = floor_db;
  const double floor_lin = std::pow(10.0, floor_db / 10.0);

  double sum = 0.0, sum2 = 0.0;
  int64_t n = 0;
  double msum = 0.0, msum2 = 0.0;
  int64_t mn = 0;
  for (const auto& w : windows) {
    if (n_bins < 1 || w.dps.size() % size_t(n_bins) != 0)
      throw SimError("compute_norm_stats: window size is not a multiple of n_bins");
    for (float p : w.dps) {
      const double db = 10.0 * std::log10(std::max(double(p), floor_lin));
      sum += db;
      sum2 += db * db;
      ++n;
    }
    for (size_t i = 0; i + 1 < w.csi.size(); i += 2) {
      msum += w.csi[i];
      msum2 += double(w.csi[i]) * w.csi[i];
      ++mn;
    }
  }
  if (n == 0 || mn == 0)
    throw SimError("compute_norm_stats: no windows");
  s.dps_mean_db = sum / n;
  s.dps_std_db = std::sqrt(std::max(sum2 / n - s.dps_mean_db * s.dps_mean_db, 0.0));
  s.csi_mag_mean = msum / mn;
  s.csi_mag_std = std::sqrt(std::max(msum2 / mn - s.csi_mag_mean * s.csi_mag_mean, 0.0));
  s.dps_std_db = std::max(s.dps_std_db, 1e-6);
  s.csi_mag_std = std::max(s.csi_mag_std, 1e-9);
  return s;
}

// ---------------------------------------------------------------------------

int64_t expected_window_count(int64_t n_positions, int64_t n_pairs, int64_t n_p) {
  if (n_positions < n_p) return 0;
  return n_pairs * (n_positions - n_p + 1);
}

Dataset build_dataset(const std::vector<Trajectory>& trajectories, const SoundingConfig& cfg,
                      int n_p, const GenOptions& opt) {
  cfg.validate();
  if (n_p < 1) throw SimError("n_p must be >= 1");
  if (trajectories.empty()) throw SimError("no trajectories");
  for (const auto& t : trajectories)
    if (int(t.points.size()) < n_p)
      throw SimError("trajectory shorter than N_p (" + std::to_string(t.points.size()) + " < " +
                     std::to_string(n_p) + ")");

  Dataset ds;
  ds.n_p = n_p;
  ds.n_bins = cfg.n_bins;
  ds.delta_tau_s = cfg.delta_tau_s();

  std::uniform_real_distribution<double> phase_dist(-M_PI, M_PI);

  for (size_t ti = 0; ti < trajectories.size(); ++ti) {
    const Trajectory& traj = trajectories[ti];
    const int n_positions = int(traj.points.size());
    const bool is_los = traj.scenario == Scenario::kLos;

    for (int pair = 0; pair < opt.n_pairs; ++pair) {
      const int32_t global_pair = int32_t(ti) * opt.n_pairs + pair;

      // Fixed per-pair phase offsets across the whole trajectory.
      std::mt19937_64 pair_rng(mix_seed(opt.seed, ti, uint64_t(pair), 0xA11CE));
      std::vector<double> offsets(traj.points.empty() ? 0 : traj.points[0].paths.paths.size());
      for (auto& o : offsets) o = phase_dist(pair_rng);

      // One DPS/CSI row per position.
      std::vector<float> dps_rows(size_t(n_positions) * cfg.n_bins);
      std::vector<float> csi_rows(size_t(n_positions) * 2);
      for (int pos = 0; pos < n_positions; ++pos) {
        std::mt19937_64 rng(mix_seed(opt.seed, ti, uint64_t(pair), uint64_t(pos)));
        PathSet ps = apply_pair_phases(traj.points[pos].paths, offsets);
        Cir cir = opt.mode == SoundingMode::kIdeal ? synth_cir(ps, cfg, opt.snr_db, rng)
                                                   : sound_cir(ps, cfg, opt.snr_db, rng);
        cir.position_index = traj.points[pos].position_index;
        DelayPowerSpectrum dps = cir_to_dps(cir);
        CsiSample csi = cir_to_csi(cir, opt.csi_bin);
        for (int k = 0; k < cfg.n_bins; ++k)
          dps_rows[size_t(pos) * cfg.n_bins + k] = float(dps.power[k]);
        csi_rows[size_t(pos) * 2] = float(csi.magnitude);
        csi_rows[size_t(pos) * 2 + 1] = float(csi.phase);
      }

      for (int start = 0; start + n_p <= n_positions; ++start) {
        SampleWindow w;
        w.pair = global_pair;
        w.start_pos = traj.points[start].position_index;
        w.is_los = is_los;
        w.dps.assign(dps_rows.begin() + size_t(start) * cfg.n_bins,
                     dps_rows.begin() + size_t(start + n_p) * cfg.n_bins);
        w.csi.assign(csi_rows.begin() + size_t(start) * 2,
                     csi_rows.begin() + size_t(start + n_p) * 2);
        ds.windows.push_back(std::move(w));
      }
    }
  }

  // NormStats from windows that lie entirely inside the leading stats region
  // (the spatial-extrapolation training split recomputes identically).
  std::vector<SampleWindow> stats_windows;
  {
    const int n_positions = int(trajectories[0].points.size());
    const int n_test = std::clamp(int(std::llround(n_positions * opt.stats_holdout_fraction)), 1,
                                  n_positions - 1);
    const int cut = n_positions - n_test;  // first position index of the holdout
    for (const auto& w : ds.windows)
      if (w.start_pos + n_p <= cut) stats_windows.push_back(w);
  }
  ds.stats = compute_norm_stats(stats_windows.empty() ? ds.windows : stats_windows, cfg.n_bins);

  ds.provenance["generator"] = opt.mode == SoundingMode::kIdeal ? "ideal" : "pn";
  ds.provenance["seed"] = std::to_string(opt.seed);
  ds.provenance["snr_db"] = format_g(opt.snr_db);
  ds.provenance["n_pairs"] = std::to_string(opt.n_pairs);
  ds.provenance["n_trajectories"] = std::to_string(trajectories.size());
  ds.provenance["csi_bin"] = std::to_string(opt.csi_bin);
  ds.provenance["stats_holdout_fraction"] = format_g(opt.stats_holdout_fraction);
  ds.validate();
  return ds;
}

Dataset rewindow(const Dataset& atomic, int n_p) {
  if (atomic.n_p != 1)
    throw SimError("rewindow requires an atomic dataset (n_p == 1), got n_p = " +
                   std::to_string(atomic.n_p));
  if (n_p < 1) throw SimError("n_p must be >= 1");

  Dataset out;
  out.n_p = n_p;
  out.n_bins = atomic.n_bins;
  out.delta_tau_s = atomic.delta_tau_s;
  out.stats = atomic.stats;
  out.provenance = atomic.provenance;
  out.provenance["rewindow_n_p"] = std::to_string(n_p);

  // Group by pair, order by position, emit windows over maximal runs of
  // consecutive positions.
  std::map<int32_t, std::vector<const SampleWindow*>> by_pair;
  for (const auto& w : atomic.windows) by_pair[w.pair].push_back(&w);
  for (auto& [pair, rows] : by_pair) {
    std::sort(rows.begin(), rows.end(),
              [](const SampleWindow* a, const SampleWindow* b) { return a->start_pos < b->start_pos; });
    size_t run_start = 0;
    for (size_t i = 1; i <= rows.size(); ++i) {
      const bool brk = i == rows.size() || rows[i]->start_pos != rows[i - 1]->start_pos + 1;
      if (!brk) continue;
      const int64_t run_len = int64_t(i - run_start);
      for (int64_t s = 0; s + n_p <= run_len; ++s) {
        SampleWindow w;
        w.pair = pair;
        w.start_pos = rows[run_start + s]->start_pos;
        w.is_los = rows[run_start + s]->is_los;
        w.dps.reserve(size_t(n_p) * atomic.n_bins);
        w.csi.reserve(size_t(n_p) * 2);
        for (int64_t r = 0; r < n_p; ++r) {
          const SampleWindow& src = *rows[run_start + s + r];
          w.dps.insert(w.dps.end(), src.dps.begin(), src.dps.end());
          w.csi.insert(w.csi.end(), src.csi.begin(), src.csi.end());
        }
        out.windows.push_back(std::move(w));
      }
      run_start = i;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

constexpr char kDatasetMagic[8] = {'C', '2', 'S', 'D', 'S', 'E', 'T', '1'};
constexpr int kDatasetVersion = 1;

json stats_to_json(const NormStats& s) {
  return json{{"dps_floor_db", s.dps_floor_db}, {"dps_mean_db", s.dps_mean_db},
              {"dps_std_db", s.dps_std_db},     {"csi_mag_mean", s.csi_mag_mean},
              {"csi_mag_std", s.csi_mag_std},   {"version", s.version}};
}

NormStats stats_from_json(const json& j) {
  NormStats s;
  s.dps_floor_db = j.at("dps_floor_db").get<double>();
  s.dps_mean_db = j.at("dps_mean_db").get<double>();
  s.dps_std_db = j.at("dps_std_db").get<double>();
  s.csi_mag_mean = j.at("csi_mag_mean").get<double>();
  s.csi_mag_std = j.at("csi_mag_std").get<double>();
  s.version = j.at("version").get<std::string>();
  return s;
}

void write_u64(std::ostream& os, uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }

}  // namespace

void write_dataset(const Dataset& d, const std::string& path) {
  d.validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError(IoError::Kind::kOther, "cannot open " + path + " for writing");

  json header;
  header["version"] = kDatasetVersion;
  header["n_windows"] = d.windows.size();
  header["n_p"] = d.n_p;
  header["n_bins"] = d.n_bins;
  header["delta_tau_s"] = d.delta_tau_s;
  header["stats"] = stats_to_json(d.stats);
  header["provenance"] = d.provenance;
  header["counts"] = {{"los", d.count_los()}, {"nlos", int64_t(d.windows.size()) - d.count_los()}};
  std::vector<int32_t> pairs, starts;
  pairs.reserve(d.windows.size());
  starts.reserve(d.windows.size());
  for (const auto& w : d.windows) {
    pairs.push_back(w.pair);
    starts.push_back(w.start_pos);
  }
  header["windows"] = {{"pair", pairs}, {"start_pos", starts}};

  const std::string hs = header.dump();
  os.write(kDatasetMagic, 8);
  write_u64(os, hs.size());
  os.write(hs.data(), std::streamsize(hs.size()));
  for (const auto& w : d.windows)
    os.write(reinterpret_cast<const char*>(w.dps.data()), std::streamsize(w.dps.size() * 4));
  for (const auto& w : d.windows)
    os.write(reinterpret_cast<const char*>(w.csi.data()), std::streamsize(w.csi.size() * 4));
  for (const auto& w : d.windows) {
    const float label = w.is_los ? 1.0f : 0.0f;
    os.write(reinterpret_cast<const char*>(&label), 4);
  }
  if (!os) throw IoError(IoError::Kind::kOther, "write failed for " + path);
}

Dataset read_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(IoError::Kind::kOther, "cannot open " + path);

  char magic[8];
  is.read(magic, 8);
  if (is.gcount() != 8 || std::memcmp(magic, kDatasetMagic, 8) != 0)
    throw IoError(IoError::Kind::kBadMagic, "bad magic in " + path);

  uint64_t hlen = 0;
  is.read(reinterpret_cast<char*>(&hlen), 8);
  if (is.gcount() != 8) throw IoError(IoError::Kind::kTruncated, "truncated header length");
  std::string hs(hlen, '\0');
  is.read(hs.data(), std::streamsize(hlen));
  if (uint64_t(is.gcount()) != hlen)
    throw IoError(IoError::Kind::kTruncated, "truncated header payload");

  json header;
  try {
    header = json::parse(hs);
  } catch (const json::exception& e) {
    throw IoError(IoError::Kind::kOther, std::string("unparseable header: ") + e.what());
  }
  if (header.at("version").get<int>() != kDatasetVersion)
    throw IoError(IoError::Kind::kBadVersion,
                  "unsupported dataset version " + header.at("version").dump());

  Dataset d;
  const uint64_t n_windows = header.at("n_windows").get<uint64_t>();
  d.n_p = header.at("n_p").get<int>();
  d.n_bins = header.at("n_bins").get<int>();
  d.delta_tau_s = header.at("delta_tau_s").get<double>();
  d.stats = stats_from_json(header.at("stats"));
  d.provenance = header.at("provenance").get<std::map<std::string, std::string>>();
  const auto pairs = header.at("windows").at("pair").get<std::vector<int32_t>>();
  const auto starts = header.at("windows").at("start_pos").get<std::vector<int32_t>>();
  if (pairs.size() != n_windows || starts.size() != n_windows)
    throw IoError(IoError::Kind::kOther, "window index arrays do not match n_windows");

  const uint64_t dps_floats = n_windows * uint64_t(d.n_p) * d.n_bins;
  const uint64_t csi_floats = n_windows * uint64_t(d.n_p) * 2;
  const uint64_t total_bytes = (dps_floats + csi_floats + n_windows) * 4;
  const auto payload_start = is.tellg();
  is.seekg(0, std::ios::end);
  const uint64_t available = uint64_t(is.tellg() - payload_start);
  if (available != total_bytes)
    throw IoError(IoError::Kind::kTruncated,
                  "truncated payload: header declares " + std::to_string(total_bytes) +
                      " bytes, file holds " + std::to_string(available));
  is.seekg(payload_start);

  d.windows.resize(n_windows);
  for (uint64_t i = 0; i < n_windows; ++i) {
    d.windows[i].dps.resize(size_t(d.n_p) * d.n_bins);
    is.read(reinterpret_cast<char*>(d.windows[i].dps.data()),
            std::streamsize(d.windows[i].dps.size() * 4));
  }
  for (uint64_t i = 0; i < n_windows; ++i) {
    d.windows[i].csi.resize(size_t(d.n_p) * 2);
    is.read(reinterpret_cast<char*>(d.windows[i].csi.data()),
            std::streamsize(d.windows[i].csi.size() * 4));
  }
  for (uint64_t i = 0; i < n_windows; ++i) {
    float label = 0.0f;
    is.read(reinterpret_cast<char*>(&label), 4);
    d.windows[i].is_los = label != 0.0f;
    d.windows[i].pair = pairs[i];
    d.windows[i].start_pos = starts[i];
  }
  if (!is) throw IoError(IoError::Kind::kTruncated, "payload read failed");
  d.validate();
  return d;
}

void export_dps_text(const DelayPowerSpectrum& d, const std::string& path, bool db_scale) {
  std::ofstream os(path);
  if (!os) throw IoError(IoError::Kind::kOther, "cannot open " + path + " for writing");
  os << "delay_s\tpower" << (db_scale ? "_db" : "") << "\n";
  os.precision(12);
  for (size_t k = 0; k < d.power.size(); ++k) {
    const double v = db_scale ? 10.0 * std::log10(std::max(d.power[k], 1e-30)) : d.power[k];
    os << double(k) * d.delta_tau_s << '\t' << v << '\n';
  }
}

}  // namespace c2s
