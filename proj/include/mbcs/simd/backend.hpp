#pragma once

#include <cstddef>
#include <vector>

namespace mbcs::simd {

/// Fused Gaussian-kernel moment accumulation at one evaluation point x:
///
///   k_j = exp(-((xs[j]-x)/h)^2 / 2) / (h * sqrt(2*pi))
///   s_m = sum_j (xs[j]-x)^m * k_j            m = 0..3
///   t0  = sum_j k_j * ys[j]                  (0 when ys == nullptr)
///   t1  = sum_j (xs[j]-x) * k_j * ys[j]
///
/// This is the inner loop of every smoother and cross-validation score in
/// the library, so it is the one primitive with vectorized variants.
struct FitSums {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  double t0 = 0, t1 = 0;
};

struct Backend {
  const char* name;
  FitSums (*fit_sums)(const double* xs, const double* ys, std::size_t n,
                      double x, double h);
  /// out[j] = k_j as defined above.
  void (*kernel_values)(const double* xs, std::size_t n, double x, double h,
                        double* out);
};

/// Reference implementation (plain loops, std::exp). Always available.
const Backend& scalar_backend();

/// Backends compiled in and runnable on this CPU; scalar is always first.
std::vector<const Backend*> available_backends();

/// The backend the library routes through. Resolved once per process: the
/// widest runnable vector backend, unless overridden with
/// MBCS_SIMD=scalar|avx2|neon in the environment.
const Backend& active_backend();

}  // namespace mbcs::simd
