#include "c2s/paths.hpp"

#include <algorithm>
#include <cmath>

namespace c2s {

std::vector<PathEstimate> extract_paths(const DelayPowerSpectrum& d, double threshold_db,
                                        int min_separation_bins) {
  if (!(threshold_db < 0.0)) throw SimError("threshold_db must be < 0 (relative to the maximum)");
  if (min_separation_bins < 1) throw SimError("min_separation_bins must be >= 1");
  const int n = int(d.power.size());
  if (n == 0) return {};

  double peak = 0.0;
  for (double v : d.power) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw SimError("DPS entries must be finite and >= 0");
    peak = std::max(peak, v);
  }
  if (peak == 0.0) return {};
  const double floor = peak * std::pow(10.0, threshold_db / 10.0);

  // Local maxima above the relative floor (plateau edges count once).
  std::vector<int> cand;
  for (int k = 0; k < n; ++k) {
    if (d.power[k] < floor) continue;
    const double left = k > 0 ? d.power[k - 1] : -1.0;
    const double right = k + 1 < n ? d.power[k + 1] : -1.0;
    if (d.power[k] > left && d.power[k] >= right) cand.push_back(k);
  }
  std::sort(cand.begin(), cand.end(),
            [&](int a, int b) { return d.power[a] != d.power[b] ? d.power[a] > d.power[b] : a < b; });

  std::vector<int> kept;
  for (int k : cand) {
    bool blocked = false;
    for (int j : kept)
      if (std::abs(k - j) < min_separation_bins) {
        blocked = true;
        break;
      }
    if (!blocked) kept.push_back(k);
  }
  std::sort(kept.begin(), kept.end());

  std::vector<PathEstimate> out;
  out.reserve(kept.size());
  for (int k : kept) {
    PathEstimate e;
    e.delay_s = double(k) * d.delta_tau_s;
    e.power = d.power[k];
    e.range_m = kSpeedOfLight * e.delay_s;
    out.push_back(e);
  }
  return out;
}

double RangingReport::max_range_error_m() const {
  double m = 0.0;
  for (const auto& x : matches) m = std::max(m, x.range_error_m);
  return m;
}

RangingReport ranging_error(const PathSet& truth, const std::vector<PathEstimate>& est) {
  if (truth.paths.empty()) throw SimError("ranging_error requires a nonempty true path set");

  RangingReport r;
  std::vector<bool> used(est.size(), false);
  // Strongest true paths match first, each to the nearest unused estimate.
  std::vector<size_t> order(truth.paths.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return std::norm(truth.paths[a].gain) > std::norm(truth.paths[b].gain);
  });

  for (size_t i : order) {
    const double td = truth.paths[i].delay_s;
    int best = -1;
    double best_err = 0.0;
    for (size_t j = 0; j < est.size(); ++j) {
      if (used[j]) continue;
      const double err = std::abs(est[j].delay_s - td);
      if (best < 0 || err < best_err) {
        best = int(j);
        best_err = err;
      }
    }
    if (best < 0) {
      r.missed_delays_s.push_back(td);
      continue;
    }
    used[best] = true;
    RangingReport::Match m;
    m.true_delay_s = td;
    m.est_delay_s = est[best].delay_s;
    m.delay_error_s = best_err;
    m.range_error_m = kSpeedOfLight * best_err;
    r.matches.push_back(m);
  }
  std::sort(r.matches.begin(), r.matches.end(),
            [](const auto& a, const auto& b) { return a.true_delay_s < b.true_delay_s; });
  std::sort(r.missed_delays_s.begin(), r.missed_delays_s.end());
  return r;
}

}  // namespace c2s
