// Sensing payoff: per-path delay/strength extraction from a delay power
// spectrum and delay/range error against ground truth.

#pragma once

#include <vector>

#include "c2s/channel.hpp"
#include "c2s/sounding.hpp"

namespace c2s {

struct PathEstimate {
  double delay_s = 0.0;
  double power = 0.0;    // linear
  double range_m = 0.0;  // kSpeedOfLight * delay_s
};

// Local maxima above max_power * 10^(threshold_db/10), greedy strongest-first
// with an exclusion radius of min_separation_bins, returned sorted by delay.
// All-zero input yields an empty list.
std::vector<PathEstimate> extract_paths(const DelayPowerSpectrum& d, double threshold_db = -25.0,
                                        int min_separation_bins = 2);

struct RangingReport {
  struct Match {
    double true_delay_s = 0.0;
    double est_delay_s = 0.0;
    double delay_error_s = 0.0;  // |est - true|
    double range_error_m = 0.0;  // kSpeedOfLight * delay_error_s
  };
  std::vector<Match> matches;       // one per matched true path
  std::vector<double> missed_delays_s;  // true paths without an estimate

  double max_range_error_m() const;
};

// Greedy nearest-delay matching of estimates to true paths; each estimate is
// used at most once, leftover true paths are reported as misses.
RangingReport ranging_error(const PathSet& truth, const std::vector<PathEstimate>& est);

}  // namespace c2s
