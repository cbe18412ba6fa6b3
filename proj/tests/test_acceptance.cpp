// Acceptance harness: one test case per release criterion, each printing a
// single [ACCEPTANCE] pass/fail line with the measured numbers. Criterion 7
// (the monotone-trend check) is a soft criterion: violations are printed but
// never fail the build. All tolerances are pinned as named constants below.
//
// Criteria 6 and 7 share one experiment (six training runs: two model kinds
// times five seeds on a fixed spatial-extrapolation dataset), so they live
// in a single test case that prints two lines.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "c2s/channel.hpp"
#include "c2s/model.hpp"
#include "c2s/nn.hpp"
#include "c2s/paths.hpp"
#include "c2s/sounding.hpp"
#include "c2s/tensor.hpp"
#include "c2s/train.hpp"

#ifndef C2S_CLI_PATH
#error "C2S_CLI_PATH must be defined by the build"
#endif

namespace {

using namespace c2s;

// --- pinned tolerances and budgets -----------------------------------------

constexpr double kGradRelTol = 1e-4;       // criterion 1
constexpr double kGradFdStep = 1e-5;       // criterion 1
constexpr double kGradBudgetS = 60.0;      // criterion 1
constexpr double kPermTol = 1e-10;         // criterion 2
constexpr int kPermCount = 20;             // criterion 2
constexpr double kCsiDftTol = 1e-10;       // criterion 3
constexpr double kDpsLoopTol = 1e-12;      // criterion 3
constexpr double kParsevalRelTol = 1e-9;   // criterion 3
constexpr int kParsevalTrials = 100;       // criterion 3
constexpr int kPnTrials = 200;             // criterion 4
constexpr int kPnHitsNeeded = 190;         // criterion 4 (>= 95%)
constexpr double kPnSnrDb = 20.0;          // criterion 4
constexpr double kOverfitMse = 1e-2;       // criterion 5
constexpr int kOverfitMaxSteps = 2000;     // criterion 5
constexpr double kOverfitBudgetS = 300.0;  // criterion 5
constexpr double kTableBudgetS = 2700.0;   // criterion 6
constexpr int kRangingTrials = 500;        // criterion 8
constexpr int kRangingHitsNeeded = 475;    // criterion 8 (>= 95%)
constexpr double kRangingSnrDb = 25.0;     // criterion 8 (>= 20 dB required)
constexpr int kBenchRepeats = 1000;        // criterion 10

void report(int idx, const char* name, bool pass, const std::string& details) {
  std::printf("[ACCEPTANCE] criterion %2d (%s): %s — %s\n", idx, name, pass ? "PASS" : "FAIL",
              details.c_str());
  std::fflush(stdout);
}

void report_soft(int idx, const char* name, const std::string& details) {
  std::printf("[ACCEPTANCE] criterion %2d (%s): SOFT — %s\n", idx, name, details.c_str());
  std::fflush(stdout);
}

struct Stopwatch {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

std::filesystem::path scratch_dir() {
  auto p = std::filesystem::temp_directory_path() / "c2s_acceptance";
  std::filesystem::create_directories(p);
  return p;
}

Tensor<double> random_input(int64_t rows, int64_t cols, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(size_t(rows * cols));
  for (auto& x : v) x = g(rng);
  return Tensor<double>::input({rows, cols}, v);
}

}  // namespace

// ---------------------------------------------------------------------------
// Criterion 1: analytic gradients of the joint loss on a micro model match
// central finite differences to < 1e-4 relative error, in under a minute.

TEST_CASE("criterion 1: gradient correctness") {
  Stopwatch sw;
  ModelConfig cfg;
  cfg.d_model = 8;
  cfg.n_layers = 1;
  cfg.n_heads = 2;
  cfg.n_bins = 16;
  cfg.precision = Precision::kF64;
  cfg.seed = 41;
  const int n_p = 2;

  C2sModel<double> m = C2sModel<double>::init(cfg);
  Tensor<double> p = random_input(n_p, cfg.n_bins, 101);
  Tensor<double> c = random_input(n_p, cfg.csi_dim, 102);

  GradCheckResult res = grad_check([&] { return joint_loss(m, p, c).total; }, m.parameters(),
                                   kGradFdStep, /*max_coords_per_param=*/0);
  const double el = sw.seconds();
  const bool pass = res.max_rel_error < kGradRelTol && el < kGradBudgetS;
  report(1, "gradient correctness", pass,
         fmt("max_rel_err=%.3e (tol %.0e), %lld coords, %.1fs", res.max_rel_error, kGradRelTol,
             static_cast<long long>(res.coords_checked), el));
  CHECK(res.max_rel_error < kGradRelTol);
  CHECK(el < kGradBudgetS);
}

// ---------------------------------------------------------------------------
// Criterion 2: encoder and decoder outputs permute exactly with their input
// rows under 20 random permutations (64-bit, deviation < 1e-10).

TEST_CASE("criterion 2: permutation equivariance") {
  ModelConfig cfg;  // full-size stacks, 64-bit
  cfg.precision = Precision::kF64;
  cfg.seed = 42;
  const int n_p = 8;

  C2sModel<double> m = C2sModel<double>::init(cfg);
  Tensor<double> p = random_input(n_p, cfg.n_bins, 201);
  Tensor<double> z = m.encode(p);
  Tensor<double> d = m.decode(z);

  std::mt19937_64 rng(202);
  double worst = 0.0;
  for (int t = 0; t < kPermCount; ++t) {
    std::vector<size_t> perm(static_cast<size_t>(n_p));
    for (size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);

    auto permute_rows = [&](const std::vector<double>& v, int64_t w) {
      std::vector<double> out(v.size());
      for (int i = 0; i < n_p; ++i)
        for (int64_t j = 0; j < w; ++j) out[size_t(i) * w + j] = v[perm[size_t(i)] * w + j];
      return out;
    };

    Tensor<double> pp = Tensor<double>::input({n_p, cfg.n_bins}, permute_rows(p.value(), cfg.n_bins));
    Tensor<double> zp = Tensor<double>::input({n_p, cfg.csi_dim}, permute_rows(z.value(), cfg.csi_dim));

    const auto ze = m.encode(pp).value();
    const auto zr = permute_rows(z.value(), cfg.csi_dim);
    for (size_t i = 0; i < ze.size(); ++i) worst = std::max(worst, std::abs(ze[i] - zr[i]));

    const auto de = m.decode(zp).value();
    const auto dr = permute_rows(d.value(), cfg.n_bins);
    for (size_t i = 0; i < de.size(); ++i) worst = std::max(worst, std::abs(de[i] - dr[i]));
  }
  const bool pass = worst < kPermTol;
  report(2, "permutation equivariance", pass,
         fmt("max_abs_dev=%.3e (tol %.0e), %d permutations", worst, kPermTol, kPermCount));
  CHECK(worst < kPermTol);
}

// ---------------------------------------------------------------------------
// Criterion 3: cir_to_csi against a direct DFT at the selected bin, cir_to_dps
// against a scalar loop, and Parseval's identity on 100 random CIRs.

TEST_CASE("criterion 3: signal-processing oracles") {
  SoundingConfig cfg;  // 1023 bins
  std::mt19937_64 rng(301);
  std::normal_distribution<double> g(0.0, 1.0);

  auto random_cir = [&](int periods) {
    Cir c;
    c.periods = periods;
    c.n_bins = cfg.n_bins;
    c.delta_tau_s = cfg.delta_tau_s();
    c.taps.resize(size_t(periods) * cfg.n_bins);
    for (auto& t : c.taps) t = {g(rng), g(rng)};
    return c;
  };

  // (a) CSI vs direct DFT of the period-averaged taps at the selected bin.
  double worst_csi = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    Cir c = random_cir(2);
    for (int bin : {0, csi_mid_bin(cfg.n_bins)}) {
      std::complex<double> oracle = 0.0;
      for (int m = 0; m < c.n_bins; ++m) {
        std::complex<double> avg = 0.0;
        for (int p = 0; p < c.periods; ++p) avg += c.at(p, m);
        avg /= double(c.periods);
        const double ang = -2.0 * M_PI * double(bin) * double(m) / double(c.n_bins);
        oracle += avg * std::complex<double>(std::cos(ang), std::sin(ang));
      }
      const CsiSample s = cir_to_csi(c, bin);
      const std::complex<double> est = std::polar(s.magnitude, s.phase);
      worst_csi = std::max(worst_csi, std::abs(est - oracle) / std::max(1.0, std::abs(oracle)));
    }
  }

  // (b) DPS vs a scalar loop: mean |tap|^2 over periods, per bin.
  double worst_dps = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    Cir c = random_cir(3);
    DelayPowerSpectrum d = cir_to_dps(c);
    for (int m = 0; m < c.n_bins; ++m) {
      double acc = 0.0;
      for (int p = 0; p < c.periods; ++p) acc += std::norm(c.at(p, m));
      acc /= double(c.periods);
      worst_dps = std::max(worst_dps, std::abs(d.power[size_t(m)] - acc) / std::max(1.0, acc));
    }
  }

  // (c) Parseval: sum |h|^2 == (1/N) sum |H_k|^2 with H from an O(n^2) DFT.
  double worst_pars = 0.0;
  for (int trial = 0; trial < kParsevalTrials; ++trial) {
    Cir c = random_cir(1);
    double time_energy = 0.0;
    for (int m = 0; m < c.n_bins; ++m) time_energy += std::norm(c.at(0, m));
    double freq_energy = 0.0;
    for (int k = 0; k < c.n_bins; ++k) {
      std::complex<double> h = 0.0;
      for (int m = 0; m < c.n_bins; ++m) {
        const double ang = -2.0 * M_PI * double(k) * double(m) / double(c.n_bins);
        h += c.at(0, m) * std::complex<double>(std::cos(ang), std::sin(ang));
      }
      freq_energy += std::norm(h);
    }
    freq_energy /= double(c.n_bins);
    worst_pars = std::max(worst_pars, std::abs(time_energy - freq_energy) / time_energy);
  }

  const bool pass = worst_csi < kCsiDftTol && worst_dps < kDpsLoopTol && worst_pars < kParsevalRelTol;
  report(3, "signal-processing oracles", pass,
         fmt("csi_dft=%.2e (tol %.0e), dps_loop=%.2e (tol %.0e), parseval=%.2e (tol %.0e, %d CIRs)",
             worst_csi, kCsiDftTol, worst_dps, kDpsLoopTol, worst_pars, kParsevalRelTol,
             kParsevalTrials));
  CHECK(worst_csi < kCsiDftTol);
  CHECK(worst_dps < kDpsLoopTol);
  CHECK(worst_pars < kParsevalRelTol);
}

// ---------------------------------------------------------------------------
// Criterion 4: the degree-10 m-sequence has period 1023 with two-valued
// circular autocorrelation, and PN sounding resolves a 2-path channel at
// 20 dB SNR to within one bin for both paths in at least 95% of 200 trials.

TEST_CASE("criterion 4: pn sounding") {
  const auto seq = generate_pn_sequence(10, default_pn_taps(10));
  const int n = int(seq.size());
  bool ac_exact = (n == 1023);
  for (int lag = 0; lag < n && ac_exact; ++lag) {
    long long acc = 0;
    for (int i = 0; i < n; ++i) acc += (long long)(seq[size_t(i)]) * seq[size_t((i + lag) % n)];
    ac_exact = (acc == (lag == 0 ? 1023LL : -1LL));
  }

  SoundingConfig cfg;  // degree 10, 1023 bins
  cfg.periods = 4;     // deliberately few periods: less averaging than deployment
  int hits = 0;
  for (int trial = 0; trial < kPnTrials; ++trial) {
    std::mt19937_64 rng(mix_seed(400, uint64_t(trial)));
    std::uniform_real_distribution<double> ubin(5.0, 800.0);
    std::uniform_real_distribution<double> usep(3.0, 200.0);
    std::uniform_real_distribution<double> uph(-M_PI, M_PI);
    const double b1 = ubin(rng);
    const double b2 = b1 + usep(rng);
    PathSet p;
    p.paths.push_back({b1 * cfg.delta_tau_s(), std::polar(1.0, uph(rng)), false});
    p.paths.push_back({b2 * cfg.delta_tau_s(), std::polar(0.7, uph(rng)), false});
    p.max_delay_spread_s = (b2 - b1) * cfg.delta_tau_s();

    Cir rx = sound_cir(p, cfg, kPnSnrDb, rng);
    DelayPowerSpectrum d = cir_to_dps(rx);
    const auto est = extract_paths(d, -10.0, 2);
    const RangingReport rep = ranging_error(p, est);
    bool ok = rep.missed_delays_s.empty() && rep.matches.size() == 2;
    for (const auto& mch : rep.matches)
      ok = ok && mch.delay_error_s <= cfg.delta_tau_s() * (1.0 + 1e-9);
    hits += ok ? 1 : 0;
  }

  const bool pass = ac_exact && hits >= kPnHitsNeeded;
  report(4, "pn sounding", pass,
         fmt("period/autocorr %s, 2-path hits %d/%d (need >= %d) at %.0f dB SNR",
             ac_exact ? "exact" : "BROKEN", hits, kPnTrials, kPnHitsNeeded, kPnSnrDb));
  CHECK(ac_exact);
  CHECK(hits >= kPnHitsNeeded);
}

// ---------------------------------------------------------------------------
// Criterion 5: the autoencoder overfits 32 synthetic windows to a normalized
// reconstruction MSE below 1e-2 within 2,000 steps, in under five minutes.

TEST_CASE("criterion 5: overfit sanity") {
  Stopwatch sw;
  SoundingConfig scfg;
  scfg.periods = 8;

  // Noiseless closely spaced windows: the probe measures whether the
  // optimizer can drive reconstruction error toward zero, so the data
  // carries no unlearnable noise. The latent-alignment term is a
  // regularizer toward the deployment interface and, like weight decay in
  // any overfit probe, is disabled here; its gradients are covered by
  // criterion 1 and its training effect by criterion 6.
  std::mt19937_64 rng(500);
  Trajectory traj = make_trajectory(Scenario::kLos, 32, scfg, rng, {}, 10.0, 0.1);
  GenOptions opt;
  opt.n_pairs = 1;
  opt.snr_db = std::numeric_limits<double>::infinity();
  opt.seed = 501;
  Dataset ds = build_dataset({traj}, scfg, 1, opt);
  REQUIRE(ds.windows.size() == 32);

  ModelConfig mcfg;  // full-size model
  mcfg.seed = 502;
  mcfg.lambda_latent = 0.0;
  TrainConfig tcfg;
  tcfg.steps = kOverfitMaxSteps;
  tcfg.batch_size = 8;
  tcfg.lr = 5e-3;
  tcfg.n_p_schedule = {1};
  tcfg.eval_every = 0;
  tcfg.seed = 503;

  TrainResult tr = train(ModelKind::kC2sAe, ds, ds, mcfg, tcfg);
  C2sModel<float> m = model_from_checkpoint<float>(tr.checkpoint);

  double sq = 0.0;
  int64_t cnt = 0;
  for (const auto& w : ds.windows) {
    DelayPowerSpectrum d;
    d.power.assign(w.dps.begin(), w.dps.end());
    d.delta_tau_s = ds.delta_tau_s;
    const std::vector<double> xn = dps_normalize(d, tr.checkpoint.stats);
    std::vector<float> xf(xn.begin(), xn.end());
    Tensor<float> p = Tensor<float>::input({1, ds.n_bins}, xf);
    const auto rec = m.decode(m.encode(p)).value();
    for (size_t i = 0; i < rec.size(); ++i) {
      const double e = double(rec[i]) - xn[i];
      sq += e * e;
    }
    cnt += int64_t(rec.size());
  }
  const double recon = sq / double(cnt);
  const double el = sw.seconds();
  const bool pass = recon < kOverfitMse && el < kOverfitBudgetS;
  report(5, "overfit sanity", pass,
         fmt("recon_mse=%.3e (tol %.0e) after %d steps, %.1fs", recon, kOverfitMse, tcfg.steps, el));
  CHECK(recon < kOverfitMse);
  CHECK(el < kOverfitBudgetS);
}

// ---------------------------------------------------------------------------
// Criteria 6 and 7: directional comparison against the decoder-only baseline
// on a spatial-extrapolation split (averaged over five seeds), plus the soft
// monotone-trend check across window lengths.

TEST_CASE("criteria 6+7: directional comparison and trend") {
  Stopwatch sw;
  SoundingConfig scfg;
  scfg.periods = 8;

  // 16 trajectories (8 LoS, 8 NLoS), all sharing the same start distance so
  // the trailing-position test split is a genuine extrapolation: every test
  // position is farther than every training position. 110 positions and
  // 8 antenna pairs -> 14,080 atomic windows.
  std::vector<Trajectory> trajs;
  for (int k = 0; k < 16; ++k) {
    std::mt19937_64 rng(mix_seed(600, uint64_t(k)));
    const Scenario sc = (k % 2 == 0) ? Scenario::kLos : Scenario::kNlos;
    trajs.push_back(make_trajectory(sc, 110, scfg, rng, {}, 10.0, 0.5));
  }
  GenOptions opt;
  opt.n_pairs = 8;
  opt.snr_db = 25.0;
  opt.seed = 601;
  Dataset atomic = build_dataset(trajs, scfg, 1, opt);

  TrainConfig tcfg;
  tcfg.steps = 1200;
  tcfg.batch_size = 8;
  tcfg.lr = 1e-3;
  tcfg.n_p_schedule = {1, 4, 16};
  tcfg.eval_every = 200;
  tcfg.patience = 0;  // fixed budget: no early stopping
  SplitResult split = split_dataset(atomic, tcfg);

  const int64_t n_train = int64_t(split.train.windows.size());
  const int64_t n_test = int64_t(split.test.windows.size());
  std::printf("  [criterion 6] dataset: %lld train / %lld val / %lld test atomic windows\n",
              static_cast<long long>(n_train), static_cast<long long>(split.val.windows.size()),
              static_cast<long long>(n_test));
  std::fflush(stdout);
  REQUIRE(n_train >= 8000);
  REQUIRE(n_test >= 2000);

  const std::vector<int> eval_np = {1, 2, 4, 8, 16, 32};
  // Five seeds: enough replicates that one unlucky optimization draw cannot
  // dominate the mean (training outcomes are seed-sensitive at this scale).
  const std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
  std::map<int, std::vector<double>> ae_mse, base_mse;  // n_p -> per-seed values

  for (uint64_t seed : seeds) {
    ModelConfig mcfg;
    mcfg.seed = seed;
    // A strong latent-alignment weight keeps the encoder from smuggling
    // reconstruction side-information into the latent, which would train the
    // decoder on inputs whose geometry differs from true CSI and wreck the
    // deployment path. Both model kinds share every other hyperparameter.
    mcfg.lambda_latent = 24.0;
    TrainConfig tc = tcfg;
    tc.seed = seed;
    TrainResult ae = train(ModelKind::kC2sAe, split.train, split.val, mcfg, tc);
    TrainResult base = train(ModelKind::kBaseline, split.train, split.val, mcfg, tc);
    REQUIRE(ae.fingerprint == base.fingerprint);  // identical training budget

    EvalReport rep = evaluate_mse(ae.checkpoint, base.checkpoint, split.test, eval_np);
    for (const auto& row : rep.rows) {
      ae_mse[row.n_p].push_back(row.mse_ae);
      base_mse[row.n_p].push_back(row.mse_baseline);
    }
    std::printf("  [criterion 6] seed %llu done (%.0fs elapsed)\n",
                static_cast<unsigned long long>(seed), sw.seconds());
    std::fflush(stdout);
  }

  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / double(v.size());
  };
  auto sstd = [&](const std::vector<double>& v) {
    const double mu = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - mu) * (x - mu);
    return v.size() > 1 ? std::sqrt(s / double(v.size() - 1)) : 0.0;
  };

  // Criterion 6: mean AE MSE <= mean baseline MSE at n_p in {1, 4, 16};
  // strictly positive mean improvement for at least two of the three.
  bool all_leq = true;
  int n_positive = 0;
  std::ostringstream det;
  for (int np : {1, 4, 16}) {
    const double ma = mean(ae_mse[np]);
    const double mb = mean(base_mse[np]);
    const double imp = (mb - ma) / mb * 100.0;
    all_leq = all_leq && (ma <= mb);
    n_positive += (imp > 0.0) ? 1 : 0;
    det << fmt("n_p=%d ae=%.4f base=%.4f imp=%+.2f%%; ", np, ma, mb, imp);
  }
  const double el = sw.seconds();
  const bool pass6 = all_leq && n_positive >= 2 && el < kTableBudgetS;
  report(6, "directional comparison", pass6,
         det.str() + fmt("positive for %d/3 (need >= 2), 5 seeds, %.0fs", n_positive, el));
  CHECK(all_leq);
  CHECK(n_positive >= 2);
  CHECK(el < kTableBudgetS);

  // Criterion 7 (soft): AE test MSE non-increasing in n_p within one
  // seed-std. Violations are reported, never failing.
  std::ostringstream trend;
  int violations = 0;
  for (size_t i = 0; i + 1 < eval_np.size(); ++i) {
    const int a = eval_np[i], b = eval_np[i + 1];
    const double ma = mean(ae_mse[a]), mb = mean(ae_mse[b]);
    const double sa = sstd(ae_mse[a]);
    if (mb > ma + sa) {
      ++violations;
      trend << fmt("n_p %d->%d: %.4f -> %.4f (allow +%.4f); ", a, b, ma, mb, sa);
    }
  }
  std::ostringstream series;
  for (int np : eval_np) series << fmt("%d:%.4f ", np, mean(ae_mse[np]));
  report_soft(7, "trend check",
              violations == 0
                  ? "AE MSE non-increasing in n_p within one seed-std [" + series.str() + "]"
                  : fmt("%d violation(s): ", violations) + trend.str() + "[" + series.str() + "]");
  CHECK(true);  // soft criterion: never build-failing
}

// ---------------------------------------------------------------------------
// Criterion 8: path extraction recovers every path delay within one bin
// (range error <= ~1.50 m) in at least 95% of 500 synthetic instances with
// path separations >= 3 bins at >= 20 dB SNR.

TEST_CASE("criterion 8: ranging") {
  SoundingConfig cfg;
  cfg.periods = 8;

  int hits = 0;
  for (int trial = 0; trial < kRangingTrials; ++trial) {
    std::mt19937_64 rng(mix_seed(800, uint64_t(trial)));
    std::uniform_int_distribution<int> npaths(2, 5);
    std::uniform_int_distribution<int> ubin(5, 900);
    std::uniform_real_distribution<double> ufrac(-0.4, 0.4);
    std::uniform_real_distribution<double> umag(0.35, 1.0);
    std::uniform_real_distribution<double> uph(-M_PI, M_PI);

    const int n = npaths(rng);
    std::vector<int> bins;
    while (int(bins.size()) < n) {
      const int b = ubin(rng);
      bool ok = true;
      for (int o : bins) ok = ok && std::abs(b - o) >= 4;  // >= 3 bins after fractional jitter
      if (ok) bins.push_back(b);
    }
    std::sort(bins.begin(), bins.end());

    PathSet p;
    for (int b : bins)
      p.paths.push_back({(double(b) + ufrac(rng)) * cfg.delta_tau_s(),
                         std::polar(umag(rng), uph(rng)), false});
    std::sort(p.paths.begin(), p.paths.end(),
              [](const Path& a, const Path& b) { return a.delay_s < b.delay_s; });
    p.max_delay_spread_s = p.paths.back().delay_s - p.paths.front().delay_s;

    Cir rx = synth_cir(p, cfg, kRangingSnrDb, rng);
    DelayPowerSpectrum d = cir_to_dps(rx);
    const auto est = extract_paths(d);  // library default threshold/separation
    const RangingReport rep = ranging_error(p, est);
    bool ok = rep.missed_delays_s.empty() && int(rep.matches.size()) == n;
    for (const auto& mch : rep.matches)
      ok = ok && mch.delay_error_s <= cfg.delta_tau_s() * (1.0 + 1e-9);
    hits += ok ? 1 : 0;
  }

  const double bin_range_m = kSpeedOfLight * 5e-9;
  const bool pass = hits >= kRangingHitsNeeded;
  report(8, "ranging", pass,
         fmt("every-path-within-1-bin in %d/%d (need >= %d); 1 bin = %.3f m range error", hits,
             kRangingTrials, kRangingHitsNeeded, bin_range_m));
  CHECK(hits >= kRangingHitsNeeded);
}

// ---------------------------------------------------------------------------
// Criterion 9: dataset and checkpoint files round-trip bit-exact; corrupted
// magic and truncation produce their designated error kinds.

TEST_CASE("criterion 9: persistence") {
  namespace fs = std::filesystem;
  const fs::path dir = scratch_dir();

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  auto dump = [](const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(bytes.data(), std::streamsize(bytes.size()));
  };
  auto kind_of = [](auto&& fn) {
    try {
      fn();
    } catch (const IoError& e) {
      return e.kind;
    }
    return IoError::Kind::kOther;
  };

  // Dataset round trip.
  SoundingConfig scfg;
  scfg.pn_degree = 6;
  scfg.n_bins = 63;
  scfg.periods = 4;
  std::mt19937_64 rng(900);
  Trajectory traj = make_trajectory(Scenario::kLos, 8, scfg, rng, {}, 10.0, 0.5);
  GenOptions opt;
  opt.n_pairs = 2;
  opt.seed = 901;
  Dataset ds = build_dataset({traj}, scfg, 1, opt);

  const fs::path dpath = dir / "roundtrip.dset";
  write_dataset(ds, dpath.string());
  Dataset back = read_dataset(dpath.string());
  const fs::path dpath2 = dir / "roundtrip2.dset";
  write_dataset(back, dpath2.string());
  const std::string dbytes = slurp(dpath);
  const bool ds_exact = !dbytes.empty() && dbytes == slurp(dpath2);

  std::string corrupt = dbytes;
  corrupt[0] ^= 0x5A;
  dump(dir / "badmagic.dset", corrupt);
  const bool ds_badmagic =
      kind_of([&] { (void)read_dataset((dir / "badmagic.dset").string()); }) ==
      IoError::Kind::kBadMagic;
  dump(dir / "trunc.dset", dbytes.substr(0, dbytes.size() - 7));
  const bool ds_trunc = kind_of([&] { (void)read_dataset((dir / "trunc.dset").string()); }) ==
                        IoError::Kind::kTruncated;

  // Checkpoint round trip.
  ModelConfig mcfg;
  mcfg.n_bins = 63;
  mcfg.d_model = 16;
  mcfg.n_heads = 2;
  mcfg.n_layers = 1;
  mcfg.seed = 902;
  C2sModel<float> m = C2sModel<float>::init(mcfg);
  Checkpoint ck = to_checkpoint(m, ds.stats, {{"kind", "c2s-ae"}});
  const fs::path cpath = dir / "roundtrip.ckpt";
  write_checkpoint(ck, cpath.string());
  Checkpoint cback = read_checkpoint(cpath.string());
  const fs::path cpath2 = dir / "roundtrip2.ckpt";
  write_checkpoint(cback, cpath2.string());
  const std::string cbytes = slurp(cpath);
  const bool ck_exact = !cbytes.empty() && cbytes == slurp(cpath2);

  corrupt = cbytes;
  corrupt[0] ^= 0x5A;
  dump(dir / "badmagic.ckpt", corrupt);
  const bool ck_badmagic =
      kind_of([&] { (void)read_checkpoint((dir / "badmagic.ckpt").string()); }) ==
      IoError::Kind::kBadMagic;
  dump(dir / "trunc.ckpt", cbytes.substr(0, cbytes.size() - 7));
  const bool ck_trunc = kind_of([&] { (void)read_checkpoint((dir / "trunc.ckpt").string()); }) ==
                        IoError::Kind::kTruncated;

  const bool pass = ds_exact && ds_badmagic && ds_trunc && ck_exact && ck_badmagic && ck_trunc;
  report(9, "persistence", pass,
         fmt("dataset[exact=%d badmagic=%d trunc=%d] checkpoint[exact=%d badmagic=%d trunc=%d]",
             ds_exact, ds_badmagic, ds_trunc, ck_exact, ck_badmagic, ck_trunc));
  CHECK(ds_exact);
  CHECK(ds_badmagic);
  CHECK(ds_trunc);
  CHECK(ck_exact);
  CHECK(ck_badmagic);
  CHECK(ck_trunc);
}

// ---------------------------------------------------------------------------
// Criterion 10: the bench subcommand emits one latency row per window length
// in {1, 2, 4, 8, 16, 32} at batch size 1, averaged over 1,000 repetitions.
// No absolute latency is asserted.

TEST_CASE("criterion 10: benchmark harness") {
  namespace fs = std::filesystem;
  const fs::path dir = scratch_dir();

  ModelConfig mcfg;  // full-size decoder
  mcfg.seed = 1000;
  C2sModel<float> m = C2sModel<float>::init(mcfg);
  NormStats st;
  Checkpoint ck = to_checkpoint(m, st, {{"kind", "c2s-ae"}, {"delta_tau_s", "5e-09"}});
  const fs::path cpath = dir / "bench.ckpt";
  write_checkpoint(ck, cpath.string());

  const fs::path out = dir / "bench.tsv";
  const std::string cmd = std::string(C2S_CLI_PATH) + " bench --ckpt " + cpath.string() +
                          " --out " + out.string() + " --n-p 1,2,4,8,16,32 --repeats " +
                          std::to_string(kBenchRepeats) + " > " + (dir / "bench.log").string() +
                          " 2>&1";
  const int rc = std::system(cmd.c_str());
  const bool exited_ok = (rc != -1) && WIFEXITED(rc) && WEXITSTATUS(rc) == 0;

  std::ifstream in(out);
  std::string line;
  std::vector<std::string> rows;
  std::string header;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header.empty())
      header = line;
    else
      rows.push_back(line);
  }
  const bool header_ok = header == "n_p\tlatency_ms_mean\tlatency_ms_std\trepeats";
  const std::vector<int> want = {1, 2, 4, 8, 16, 32};
  bool rows_ok = rows.size() == want.size();
  for (size_t i = 0; rows_ok && i < rows.size(); ++i) {
    std::istringstream ss(rows[i]);
    int np = 0, reps = 0;
    double mean_ms = 0.0, std_ms = 0.0;
    ss >> np >> mean_ms >> std_ms >> reps;
    rows_ok = bool(ss) && np == want[i] && reps == kBenchRepeats && mean_ms > 0.0 &&
              std::isfinite(mean_ms) && std_ms >= 0.0 && std::isfinite(std_ms);
  }

  const bool pass = exited_ok && header_ok && rows_ok;
  report(10, "benchmark harness", pass,
         fmt("exit=%d header_ok=%d rows=%zu/%zu repeats=%d", exited_ok ? 0 : 1, header_ok,
             rows.size(), want.size(), kBenchRepeats));
  CHECK(exited_ok);
  CHECK(header_ok);
  CHECK(rows_ok);
}
