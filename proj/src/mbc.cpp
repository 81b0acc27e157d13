#include "mbcs/mbc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mbcs {

// Ratios below the noise floor carry no information about the relative
// estimation error, only noise amplified by 1/|pilot|; a pilot crossing
// zero near a data point would otherwise inject arbitrarily large V_j and
// wreck the corrected curve for a whole kernel width around the crossing.
// Clamping at the first-difference noise scale bounds every ratio by
// |Y|/sigma while leaving any region with real signal (|pilot| > sigma)
// untouched. Scales linearly with the responses, so the corrected
// estimator stays scale-equivariant.
double default_pilot_clamp(const SampleSet& data) {
  return std::max(1e-8, sigma_first_difference(data));
}

MbcConfig::MbcConfig(double h0_in, double h1_in, double clamp_in)
    : h0(h0_in), h1(h1_in), pilot_clamp(clamp_in) {
  if (!(h0 > 0.0) || !(h1 > 0.0)) throw Error("bandwidths must be positive");
  if (!(pilot_clamp > 0.0)) throw Error("pilot_clamp must be positive");
}

MbcConfig MbcConfig::with_default_clamp(double h0, double h1,
                                        const SampleSet& data) {
  return MbcConfig(h0, h1, default_pilot_clamp(data));
}

FitCurve pilot_fit(const SampleSet& data, double h0,
                   std::span<const double> at) {
  return local_linear_fit(data, h0, at);
}

namespace detail {

RatioSeries shifted_ratios(std::span<const double> ys,
                           std::span<const double> pilot, double clamp,
                           double shift) {
  RatioSeries rs;
  rs.values.resize(ys.size());
  for (std::size_t j = 0; j < ys.size(); ++j) {
    const double p = pilot[j] + shift;
    double denom = std::max(std::fabs(p), clamp);
    if (std::signbit(p)) denom = -denom;
    if (std::fabs(p) < clamp) ++rs.clamp_engaged;
    rs.values[j] = (ys[j] + shift) / denom;
  }
  return rs;
}

}  // namespace detail

RatioSeries ratio_series(const SampleSet& data,
                         std::span<const double> pilot_at_data, double clamp) {
  if (pilot_at_data.size() != data.size()) {
    throw Error("pilot values must align with the data");
  }
  if (!(clamp > 0.0)) throw Error("clamp must be positive");
  return detail::shifted_ratios(data.ys, pilot_at_data, clamp, 0.0);
}

double ratio_shift(std::span<const double> pilot_at_data, double clamp) {
  if (pilot_at_data.empty()) throw Error("empty pilot");
  double pmin = pilot_at_data[0];
  for (const double p : pilot_at_data) pmin = std::min(pmin, p);
  return pmin >= clamp ? 0.0 : clamp - pmin;
}

FitCurve mbc_fit(const SampleSet& data, const MbcConfig& config,
                 std::span<const double> grid) {
  const FitCurve pilot_data = pilot_fit(data, config.h0, data.xs);
  const double shift = ratio_shift(pilot_data.values, config.pilot_clamp);
  const RatioSeries ratios = detail::shifted_ratios(
      data.ys, pilot_data.values, config.pilot_clamp, shift);
  FitCurve pilot_grid = pilot_fit(data, config.h0, grid);

  FitCurve fit;
  fit.grid = std::move(pilot_grid.grid);
  fit.values.resize(grid.size());
  fit.method = FitMethod::Mbc;
  fit.bandwidths = {config.h0, config.h1};
  fit.clamp_engaged = ratios.clamp_engaged;
  fit.outside_range = pilot_grid.outside_range;
  fit.shift = shift;

  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto alpha = detail::fit_point(data.xs, ratios.values, data.range(),
                                         grid[i], config.h1);
    if (alpha.degenerate) throw DegenerateDesign(grid[i], config.h1);
    fit.values[i] = alpha.value * (pilot_grid.values[i] + shift) - shift;
    if (!std::isfinite(fit.values[i])) {
      throw Error("non-finite MBC value at x=" + std::to_string(grid[i]));
    }
  }
  return fit;
}

}  // namespace mbcs
