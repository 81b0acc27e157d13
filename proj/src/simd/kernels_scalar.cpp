#include "mbcs/simd/backend.hpp"

#include <cmath>

namespace mbcs::simd {
namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779;

FitSums fit_sums_scalar(const double* xs, const double* ys, std::size_t n,
                        double x, double h) {
  const double inv_h = 1.0 / h;
  const double c = kInvSqrt2Pi * inv_h;
  FitSums acc;
  if (ys != nullptr) {
    for (std::size_t j = 0; j < n; ++j) {
      const double d = xs[j] - x;
      const double t = d * inv_h;
      const double k = c * std::exp(-0.5 * (t * t));
      const double dk = d * k;
      const double ddk = d * dk;
      acc.s0 += k;
      acc.s1 += dk;
      acc.s2 += ddk;
      acc.s3 += d * ddk;
      acc.t0 += k * ys[j];
      acc.t1 += dk * ys[j];
    }
  } else {
    for (std::size_t j = 0; j < n; ++j) {
      const double d = xs[j] - x;
      const double t = d * inv_h;
      const double k = c * std::exp(-0.5 * (t * t));
      const double dk = d * k;
      const double ddk = d * dk;
      acc.s0 += k;
      acc.s1 += dk;
      acc.s2 += ddk;
      acc.s3 += d * ddk;
    }
  }
  return acc;
}

void kernel_values_scalar(const double* xs, std::size_t n, double x, double h,
                          double* out) {
  const double inv_h = 1.0 / h;
  const double c = kInvSqrt2Pi * inv_h;
  for (std::size_t j = 0; j < n; ++j) {
    const double t = (xs[j] - x) * inv_h;
    out[j] = c * std::exp(-0.5 * (t * t));
  }
}

}  // namespace

const Backend& scalar_backend() {
  static const Backend backend{"scalar", &fit_sums_scalar,
                               &kernel_values_scalar};
  return backend;
}

}  // namespace mbcs::simd
