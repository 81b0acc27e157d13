#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mbcs/errors.hpp"

namespace mbcs {

inline constexpr double kInvSqrt2Pi = 0.3989422804014326779;

/// Gaussian density exp(-u^2/2)/sqrt(2*pi). Strictly positive for finite u.
double gaussian_kernel(double u);

/// A symmetric probability density used to weight observations. The library
/// ships the Gaussian only; anything else goes through a generic scalar
/// path instead of the vectorized one.
struct Kernel {
  const char* name;
  double (*evaluate)(double);
};

const Kernel& gaussian();

/// Paired regression observations (X_i, Y_i), covariates sorted ascending.
struct SampleSet {
  std::vector<double> xs;
  std::vector<double> ys;

  /// Validates: equal lengths, n >= 3, finite values, xs non-decreasing.
  SampleSet(std::vector<double> xs_in, std::vector<double> ys_in);

  std::size_t size() const noexcept { return xs.size(); }
  double range() const noexcept { return xs.back() - xs.front(); }

  /// Copy with observation i removed (leave-one-out refits).
  SampleSet without(std::size_t i) const;
};

/// Kernel-weighted local moments S_k(x;h) = sum_j (X_j-x)^k K_h(X_j-x),
/// k = 0..3, with K_h(u) = K(u/h)/h.
struct MomentSums {
  double s0, s1, s2, s3;
};

MomentSums moment_sums(std::span<const double> xs, double x, double h,
                       const Kernel& kernel = gaussian());
MomentSums moment_sums(const SampleSet& data, double x, double h,
                       const Kernel& kernel = gaussian());

/// Local linear weights at one evaluation point; entries may be negative.
/// Satisfies sum w_j = 1 and sum (X_j-x) w_j = 0 up to roundoff.
struct WeightVector {
  double eval_point;
  double bandwidth;
  std::vector<double> weights;
};

WeightVector local_linear_weights(const SampleSet& data, double x, double h,
                                  const Kernel& kernel = gaussian());

enum class FitMethod { LocalLinear, Mbc };

/// Estimator values over an evaluation grid, with provenance.
struct FitCurve {
  std::vector<double> grid;
  std::vector<double> values;
  FitMethod method = FitMethod::LocalLinear;
  std::vector<double> bandwidths;  ///< {h} for LL, {h0, h1} for MBC
  int clamp_engaged = 0;   ///< MBC: data points where the pilot was clamped
  int outside_range = 0;   ///< grid points beyond [min(xs)-h, max(xs)+h]
  double shift = 0.0;      ///< MBC: ratio shift applied (0 = plain ratios)
};

/// Local linear estimate over a grid. Grid points outside the widened data
/// range are evaluated anyway and counted in outside_range. Throws
/// DegenerateDesign (with the offending point) when the normal equations
/// are singular at some grid point.
FitCurve local_linear_fit(const SampleSet& data, double h,
                          std::span<const double> grid,
                          const Kernel& kernel = gaussian());

/// Pointwise asymptotic confidence band around a fitted curve.
struct CiBand {
  std::vector<double> grid;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> tau_sq;  ///< n*h*sum_j w_j(x)^2 per grid point
  double level;
};

/// Half-width Z_{1-a/2} * sigma_hat * sqrt(sum_j w_j(x)^2) with weights at
/// the curve's smoothing bandwidth (h for LL, h1 for MBC).
CiBand pointwise_ci(const FitCurve& fit, const SampleSet& data,
                    double sigma_hat, double level);

/// Normalized first-difference noise-scale estimate:
/// sigma^2 = sum (y_{i+1]-y_i)^2 / (2(n-1)).
double sigma_first_difference(const SampleSet& data);

namespace detail {

/// Singularity guard. The design is degenerate at (x, h) unless the
/// determinant D = S2*S0 - S1^2 clears both an absolute scale,
/// D > kRidgeEps * (S0 * range)^2, and a conditioning bound,
/// D > kConditionEps * S2*S0. The second keeps every accepted weight
/// vector accurate enough for the sum identities to hold at 1e-10; a
/// configuration failing it has its kernel mass effectively on one point.
inline constexpr double kRidgeEps = 1e-12;
inline constexpr double kConditionEps = 1e-4;

struct PointFit {
  double value;
  bool degenerate;
};

/// Closed-form local linear estimate at one point from fused moment sums;
/// the workhorse behind fits and cross-validation scores.
PointFit fit_point(std::span<const double> xs, std::span<const double> ys,
                   double range, double x, double h);

bool is_gaussian(const Kernel& kernel);

}  // namespace detail

}  // namespace mbcs
