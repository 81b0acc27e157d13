#pragma once

#include <optional>
#include <vector>

#include "mbcs/core.hpp"
#include "mbcs/mbc.hpp"

namespace mbcs {

/// Strictly increasing positive bandwidth candidates.
struct BandwidthGrid {
  std::vector<double> values;

  explicit BandwidthGrid(std::vector<double> v);
  static BandwidthGrid log_spaced(double lo, double hi, std::size_t count);
  static BandwidthGrid linear(double lo, double hi, std::size_t count);
};

/// Fallback grid when nothing better is known: 30 log-spaced points on
/// [0.2, 3] times the n^{-1/5} * range scale. Reproduction suites and the
/// CLI pin explicit grids instead.
BandwidthGrid default_grid(const SampleSet& data);

/// One cross-validation evaluation: h0 alone for the single-bandwidth fit,
/// (h0, h1) for the two-stage fit.
struct CvRow {
  double h0 = 0;
  std::optional<double> h1;
  double score = 0;
};

/// Exhaustive grid-search result; `selected` attains the table minimum, ties
/// broken toward the smallest bandwidth (lexicographically for pairs).
struct CvResult {
  CvRow selected;
  std::vector<CvRow> table;
};

/// Mean squared leave-one-out residual of the local linear fit: each score
/// term refits on the n-1 remaining points (honest refit, no hat-matrix
/// shortcut). A degenerate deleted fit makes the score +infinity.
double loo_score_ll(const SampleSet& data, double h);

/// Same criterion for the two-stage estimator; the whole pilot/ratio/
/// correction pipeline is re-run without observation i. The clamp is fixed
/// once from the full data (default_pilot_clamp) unless given explicitly.
double loo_score_mbc(const SampleSet& data, double h0, double h1,
                     std::optional<double> pilot_clamp = std::nullopt);

CvResult select_ll(const SampleSet& data, const BandwidthGrid& grid);

/// Search over grid0 x grid1. Deleted pilot fits are shared across the h1
/// axis (they depend on h0 only), which changes nothing numerically.
/// `threads`: 0 = hardware concurrency, 1 = serial; the scored table is
/// identical either way.
CvResult select_mbc(const SampleSet& data, const BandwidthGrid& grid0,
                    const BandwidthGrid& grid1, unsigned threads = 1,
                    std::optional<double> pilot_clamp = std::nullopt);

}  // namespace mbcs
