#include "mbcs/bandwidth.hpp"

#include <cmath>
#include <limits>

#include "mbcs/parallel.hpp"

namespace mbcs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Compacted leave-one-out copies, built once per dataset and reused across
// the whole bandwidth grid. Each deleted fit below is an honest refit on
// these n-1 points; only the copying is shared.
struct DeletedSets {
  std::vector<std::vector<double>> xs;
  std::vector<std::vector<double>> ys;
  std::vector<double> range;

  explicit DeletedSets(const SampleSet& data) {
    const std::size_t n = data.size();
    xs.resize(n);
    ys.resize(n);
    range.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      xs[i].reserve(n - 1);
      ys[i].reserve(n - 1);
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        xs[i].push_back(data.xs[j]);
        ys[i].push_back(data.ys[j]);
      }
      range[i] = xs[i].back() - xs[i].front();
    }
  }
};

double score_ll(const DeletedSets& ws, const SampleSet& data, double h) {
  const std::size_t n = data.size();
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto pf =
        detail::fit_point(ws.xs[i], ws.ys[i], ws.range[i], data.xs[i], h);
    if (pf.degenerate) return kInf;
    const double r = data.ys[i] - pf.value;
    acc += r * r;
  }
  return acc / static_cast<double>(n);
}

// Deleted pilot fits and ratio series for one h0; shared across h1 values.
// Each deleted refit determines its own ratio shift from its own pilot,
// exactly as a standalone mbc_fit on the deleted sample would.
struct PilotCache {
  std::vector<std::vector<double>> ratios;
  std::vector<double> pilot_at_xi;
  std::vector<double> shift;
  std::vector<char> ok;
};

PilotCache build_pilot_cache(const DeletedSets& ws, const SampleSet& data,
                             double h0, double clamp) {
  const std::size_t n = data.size();
  PilotCache cache;
  cache.ratios.resize(n);
  cache.pilot_at_xi.assign(n, 0.0);
  cache.shift.assign(n, 0.0);
  cache.ok.assign(n, 1);
  std::vector<double> pilot;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& dx = ws.xs[i];
    const auto& dy = ws.ys[i];
    pilot.resize(dx.size());
    for (std::size_t j = 0; j < dx.size(); ++j) {
      const auto pf = detail::fit_point(dx, dy, ws.range[i], dx[j], h0);
      if (pf.degenerate) {
        cache.ok[i] = 0;
        break;
      }
      pilot[j] = pf.value;
    }
    if (!cache.ok[i]) continue;
    const auto pf = detail::fit_point(dx, dy, ws.range[i], data.xs[i], h0);
    if (pf.degenerate) {
      cache.ok[i] = 0;
      continue;
    }
    cache.pilot_at_xi[i] = pf.value;
    cache.shift[i] = ratio_shift(pilot, clamp);
    cache.ratios[i] =
        detail::shifted_ratios(dy, pilot, clamp, cache.shift[i]).values;
  }
  return cache;
}

double score_mbc_cached(const DeletedSets& ws, const SampleSet& data,
                        const PilotCache& cache, double h1) {
  const std::size_t n = data.size();
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!cache.ok[i]) return kInf;
    const auto alpha = detail::fit_point(ws.xs[i], cache.ratios[i],
                                         ws.range[i], data.xs[i], h1);
    if (alpha.degenerate) return kInf;
    const double pred =
        alpha.value * (cache.pilot_at_xi[i] + cache.shift[i]) -
        cache.shift[i];
    const double r = data.ys[i] - pred;
    acc += r * r;
  }
  return acc / static_cast<double>(n);
}

void require_loo_size(const SampleSet& data) {
  if (data.size() < 4) {
    throw Error("leave-one-out needs at least 4 observations");
  }
}

}  // namespace

BandwidthGrid::BandwidthGrid(std::vector<double> v) : values(std::move(v)) {
  if (values.empty()) throw Error("bandwidth grid must be non-empty");
  double prev = 0;
  for (const double h : values) {
    if (!(h > 0.0) || !std::isfinite(h)) {
      throw Error("bandwidth grid entries must be positive and finite");
    }
    if (!(h > prev)) throw Error("bandwidth grid must be strictly increasing");
    prev = h;
  }
}

BandwidthGrid BandwidthGrid::log_spaced(double lo, double hi,
                                        std::size_t count) {
  if (!(lo > 0.0) || !(hi >= lo) || count == 0) {
    throw Error("invalid log-spaced grid parameters");
  }
  std::vector<double> v(count);
  if (count == 1) {
    v[0] = lo;
  } else {
    const double step = std::log(hi / lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) {
      v[i] = lo * std::exp(step * static_cast<double>(i));
    }
    v.back() = hi;
  }
  return BandwidthGrid(std::move(v));
}

BandwidthGrid BandwidthGrid::linear(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi >= lo) || count == 0) {
    throw Error("invalid linear grid parameters");
  }
  std::vector<double> v(count);
  if (count == 1) {
    v[0] = lo;
  } else {
    const double step = (hi - lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) {
      v[i] = lo + step * static_cast<double>(i);
    }
    v.back() = hi;
  }
  return BandwidthGrid(std::move(v));
}

BandwidthGrid default_grid(const SampleSet& data) {
  const double scale =
      std::pow(static_cast<double>(data.size()), -0.2) * data.range();
  return BandwidthGrid::log_spaced(0.2 * scale, 3.0 * scale, 30);
}

double loo_score_ll(const SampleSet& data, double h) {
  require_loo_size(data);
  if (!(h > 0.0)) throw Error("bandwidth must be positive");
  const DeletedSets ws(data);
  return score_ll(ws, data, h);
}

double loo_score_mbc(const SampleSet& data, double h0, double h1,
                     std::optional<double> pilot_clamp) {
  require_loo_size(data);
  if (!(h0 > 0.0) || !(h1 > 0.0)) throw Error("bandwidths must be positive");
  const double clamp = pilot_clamp.value_or(default_pilot_clamp(data));
  if (!(clamp > 0.0)) throw Error("clamp must be positive");
  const DeletedSets ws(data);
  const PilotCache cache = build_pilot_cache(ws, data, h0, clamp);
  return score_mbc_cached(ws, data, cache, h1);
}

CvResult select_ll(const SampleSet& data, const BandwidthGrid& grid) {
  require_loo_size(data);
  const DeletedSets ws(data);

  CvResult result;
  result.table.reserve(grid.values.size());
  std::size_t best = grid.values.size();
  for (std::size_t g = 0; g < grid.values.size(); ++g) {
    const double score = score_ll(ws, data, grid.values[g]);
    result.table.push_back({grid.values[g], std::nullopt, score});
    if (std::isfinite(score) &&
        (best == grid.values.size() || score < result.table[best].score)) {
      best = g;
    }
  }
  if (best == grid.values.size()) {
    throw AllDegenerate("every bandwidth in the grid scored +inf");
  }
  result.selected = result.table[best];
  return result;
}

CvResult select_mbc(const SampleSet& data, const BandwidthGrid& grid0,
                    const BandwidthGrid& grid1, unsigned threads,
                    std::optional<double> pilot_clamp) {
  require_loo_size(data);
  const double clamp = pilot_clamp.value_or(default_pilot_clamp(data));
  if (!(clamp > 0.0)) throw Error("clamp must be positive");
  const DeletedSets ws(data);

  const std::size_t n0 = grid0.values.size();
  const std::size_t n1 = grid1.values.size();
  std::vector<double> scores(n0 * n1);

  parallel_for(n0, threads, [&](std::size_t i0) {
    const PilotCache cache =
        build_pilot_cache(ws, data, grid0.values[i0], clamp);
    for (std::size_t i1 = 0; i1 < n1; ++i1) {
      scores[i0 * n1 + i1] =
          score_mbc_cached(ws, data, cache, grid1.values[i1]);
    }
  });

  CvResult result;
  result.table.reserve(n0 * n1);
  std::size_t best = n0 * n1;
  for (std::size_t i0 = 0; i0 < n0; ++i0) {
    for (std::size_t i1 = 0; i1 < n1; ++i1) {
      const std::size_t idx = i0 * n1 + i1;
      result.table.push_back(
          {grid0.values[i0], grid1.values[i1], scores[idx]});
      if (std::isfinite(scores[idx]) &&
          (best == n0 * n1 || scores[idx] < result.table[best].score)) {
        best = idx;
      }
    }
  }
  if (best == n0 * n1) {
    throw AllDegenerate("every bandwidth pair in the grid scored +inf");
  }
  result.selected = result.table[best];
  return result;
}

}  // namespace mbcs
