#include "mbcs/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mbcs/rng.hpp"
#include "mbcs/simd/backend.hpp"

namespace mbcs {

DegenerateDesign::DegenerateDesign(double eval_point, double bandwidth)
    : Error("degenerate design at x=" + std::to_string(eval_point) +
            ", h=" + std::to_string(bandwidth)),
      eval_point_(eval_point),
      bandwidth_(bandwidth) {}

ParseError::ParseError(std::size_t line, const std::string& what)
    : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

double gaussian_kernel(double u) {
  return kInvSqrt2Pi * std::exp(-0.5 * u * u);
}

const Kernel& gaussian() {
  static const Kernel k{"gaussian", &gaussian_kernel};
  return k;
}

namespace detail {

bool is_gaussian(const Kernel& kernel) {
  return kernel.evaluate == &gaussian_kernel;
}

PointFit fit_point(std::span<const double> xs, std::span<const double> ys,
                   double range, double x, double h) {
  const auto s = simd::active_backend().fit_sums(xs.data(), ys.data(),
                                                 xs.size(), x, h);
  const double det = s.s2 * s.s0 - s.s1 * s.s1;
  const double scale = s.s0 * range;
  if (!(det > kRidgeEps * scale * scale) ||
      !(det > kConditionEps * s.s2 * s.s0)) {
    return {0.0, true};
  }
  return {(s.s2 * s.t0 - s.s1 * s.t1) / det, false};
}

}  // namespace detail

namespace {

void require_bandwidth(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw Error("bandwidth must be positive and finite");
}

// Generic-kernel K_h values; the Gaussian goes through the SIMD backend.
void kernel_values(const Kernel& kernel, std::span<const double> xs, double x,
                   double h, double* out) {
  if (detail::is_gaussian(kernel)) {
    simd::active_backend().kernel_values(xs.data(), xs.size(), x, h, out);
    return;
  }
  const double inv_h = 1.0 / h;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    out[j] = kernel.evaluate((xs[j] - x) * inv_h) * inv_h;
  }
}

}  // namespace

SampleSet::SampleSet(std::vector<double> xs_in, std::vector<double> ys_in)
    : xs(std::move(xs_in)), ys(std::move(ys_in)) {
  if (xs.size() != ys.size()) throw Error("xs and ys must have equal length");
  if (xs.size() < 3) throw Error("need at least 3 observations");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) {
      throw Error("observations must be finite");
    }
    if (i > 0 && xs[i] < xs[i - 1]) {
      throw Error("covariates must be sorted ascending");
    }
  }
}

SampleSet SampleSet::without(std::size_t i) const {
  std::vector<double> x2(xs), y2(ys);
  x2.erase(x2.begin() + static_cast<std::ptrdiff_t>(i));
  y2.erase(y2.begin() + static_cast<std::ptrdiff_t>(i));
  return SampleSet(std::move(x2), std::move(y2));
}

MomentSums moment_sums(std::span<const double> xs, double x, double h,
                       const Kernel& kernel) {
  require_bandwidth(h);
  if (detail::is_gaussian(kernel)) {
    const auto s =
        simd::active_backend().fit_sums(xs.data(), nullptr, xs.size(), x, h);
    return {s.s0, s.s1, s.s2, s.s3};
  }
  const double inv_h = 1.0 / h;
  MomentSums acc{0, 0, 0, 0};
  for (const double xj : xs) {
    const double d = xj - x;
    const double k = kernel.evaluate(d * inv_h) * inv_h;
    const double dk = d * k;
    const double ddk = d * dk;
    acc.s0 += k;
    acc.s1 += dk;
    acc.s2 += ddk;
    acc.s3 += d * ddk;
  }
  return acc;
}

MomentSums moment_sums(const SampleSet& data, double x, double h,
                       const Kernel& kernel) {
  return moment_sums(std::span<const double>(data.xs), x, h, kernel);
}

WeightVector local_linear_weights(const SampleSet& data, double x, double h,
                                  const Kernel& kernel) {
  require_bandwidth(h);
  const std::size_t n = data.size();
  WeightVector wv{x, h, std::vector<double>(n)};
  kernel_values(kernel, data.xs, x, h, wv.weights.data());

  // Moments from the very kernel values used below, so the weight identities
  // hold to roundoff no matter how K was evaluated.
  double s0 = 0, s1 = 0, s2 = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double d = data.xs[j] - x;
    const double k = wv.weights[j];
    s0 += k;
    s1 += d * k;
    s2 += d * d * k;
  }
  const double det = s2 * s0 - s1 * s1;
  const double scale = s0 * data.range();
  if (!(det > detail::kRidgeEps * scale * scale) ||
      !(det > detail::kConditionEps * s2 * s0)) {
    throw DegenerateDesign(x, h);
  }
  for (std::size_t j = 0; j < n; ++j) {
    const double d = data.xs[j] - x;
    wv.weights[j] *= (s2 - d * s1) / det;
  }
  return wv;
}

FitCurve local_linear_fit(const SampleSet& data, double h,
                          std::span<const double> grid, const Kernel& kernel) {
  require_bandwidth(h);
  FitCurve fit;
  fit.grid.assign(grid.begin(), grid.end());
  fit.values.resize(grid.size());
  fit.method = FitMethod::LocalLinear;
  fit.bandwidths = {h};

  const double lo = data.xs.front() - h;
  const double hi = data.xs.back() + h;
  const bool fast = detail::is_gaussian(kernel);
  std::vector<double> kvals;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid[i];
    if (x < lo || x > hi) ++fit.outside_range;
    if (fast) {
      const auto pf = detail::fit_point(data.xs, data.ys, data.range(), x, h);
      if (pf.degenerate) throw DegenerateDesign(x, h);
      fit.values[i] = pf.value;
    } else {
      const WeightVector wv = local_linear_weights(data, x, h, kernel);
      double acc = 0;
      for (std::size_t j = 0; j < data.size(); ++j) {
        acc += wv.weights[j] * data.ys[j];
      }
      fit.values[i] = acc;
    }
    if (!std::isfinite(fit.values[i])) {
      throw Error("non-finite fit value at x=" + std::to_string(x));
    }
  }
  return fit;
}

CiBand pointwise_ci(const FitCurve& fit, const SampleSet& data,
                    double sigma_hat, double level) {
  if (!(sigma_hat > 0.0)) throw Error("sigma_hat must be positive");
  if (!(level > 0.0 && level < 1.0)) throw Error("level must be in (0,1)");
  if (fit.bandwidths.empty()) throw Error("fit has no bandwidth recorded");

  const double h = fit.bandwidths.back();
  const double z = normal_quantile(0.5 + 0.5 * level);
  const double n = static_cast<double>(data.size());

  CiBand band;
  band.grid = fit.grid;
  band.level = level;
  band.lower.resize(fit.grid.size());
  band.upper.resize(fit.grid.size());
  band.tau_sq.resize(fit.grid.size());
  for (std::size_t i = 0; i < fit.grid.size(); ++i) {
    const WeightVector wv = local_linear_weights(data, fit.grid[i], h);
    double ssq = 0;
    for (const double w : wv.weights) ssq += w * w;
    const double half = z * sigma_hat * std::sqrt(ssq);
    band.lower[i] = fit.values[i] - half;
    band.upper[i] = fit.values[i] + half;
    band.tau_sq[i] = n * h * ssq;
  }
  return band;
}

double sigma_first_difference(const SampleSet& data) {
  const std::size_t n = data.size();
  double acc = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double d = data.ys[i + 1] - data.ys[i];
    acc += d * d;
  }
  return std::sqrt(acc / (2.0 * static_cast<double>(n - 1)));
}

}  // namespace mbcs
