#pragma once

#include <span>
#include <vector>

#include "mbcs/core.hpp"

namespace mbcs {

/// Default lower bound for |pilot| when forming ratios:
/// max(1e-8, 1e-6 * median|ys|).
double default_pilot_clamp(const SampleSet& data);

/// Configuration of the two-stage multiplicative bias-corrected estimator.
struct MbcConfig {
  double h0;           ///< pilot bandwidth (over-smoothing stage)
  double h1;           ///< correction bandwidth
  double pilot_clamp;  ///< lower bound for |pilot| at the data points

  MbcConfig(double h0_in, double h1_in, double clamp_in);

  /// The supporting theory wants the pilot to smooth more than the
  /// correction (h1/h0 -> 0); h1 >= h0 is allowed but worth flagging.
  bool regime_ok() const noexcept { return h1 < h0; }

  static MbcConfig with_default_clamp(double h0, double h1,
                                      const SampleSet& data);
};

/// Ratios V_j = Y_j / clamped pilot(X_j).
struct RatioSeries {
  std::vector<double> values;
  int clamp_engaged = 0;  ///< data points where |pilot| fell below the clamp
};

/// First-stage over-smoothed local linear fit (bandwidth h0).
FitCurve pilot_fit(const SampleSet& data, double h0,
                   std::span<const double> at);

/// V_j = Y_j / (sign(p_j) * max(|p_j|, clamp)). The sign is preserved so a
/// pilot dipping negative cannot silently flip the correction; a pilot of
/// exactly zero counts as positive.
RatioSeries ratio_series(const SampleSet& data,
                         std::span<const double> pilot_at_data, double clamp);

/// Offset added to responses and pilot before forming ratios when the
/// pilot does not clear the noise floor everywhere: zero when
/// min(pilot) >= clamp, else clamp - min(pilot). Ratios of a smoother that
/// dips to (or below) the noise scale carry no usable relative-error
/// information, so the correction is applied on a shifted scale instead.
/// Shifting leaves the curvature, and hence the bias being corrected,
/// untouched, and vanishes for the positive regression functions the
/// method is designed for.
double ratio_shift(std::span<const double> pilot_at_data, double clamp);

/// Two-stage estimator: pilot at h0, ratios (on the shifted scale when the
/// pilot demands one), correction factor smoothed at h1, then
/// alpha(x) * (pilot(x) + shift) - shift over the grid. The clamp
/// engagement count and the shift are attached to the returned curve.
FitCurve mbc_fit(const SampleSet& data, const MbcConfig& config,
                 std::span<const double> grid);

namespace detail {

/// Ratio loop shared by mbc_fit, the cross-validation scorer and the
/// simulation lab: V_j = (y_j + shift) / clamped(p_j + shift).
RatioSeries shifted_ratios(std::span<const double> ys,
                           std::span<const double> pilot, double clamp,
                           double shift);

}  // namespace detail

}  // namespace mbcs
