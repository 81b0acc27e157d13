// NEON (aarch64) variant of the kernel-moment primitives. Mirrors the AVX2
// implementation lane-for-lane at width 2.

#include "registry.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>
#include <cstddef>

namespace mbcs::simd {
namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779;

inline float64x2_t exp2(float64x2_t x) {
  const float64x2_t max_x = vdupq_n_f64(709.436);
  const float64x2_t min_x = vdupq_n_f64(-708.396);
  const float64x2_t log2e = vdupq_n_f64(1.4426950408889634074);
  const float64x2_t ln2_hi = vdupq_n_f64(6.93145751953125e-1);
  const float64x2_t ln2_lo = vdupq_n_f64(1.42860682030941723212e-6);

  const float64x2_t p0 = vdupq_n_f64(1.26177193074810590878e-4);
  const float64x2_t p1 = vdupq_n_f64(3.02994407707441961300e-2);
  const float64x2_t p2 = vdupq_n_f64(9.99999999999999999910e-1);
  const float64x2_t q0 = vdupq_n_f64(3.00198505138664455042e-6);
  const float64x2_t q1 = vdupq_n_f64(2.52448340349684104192e-3);
  const float64x2_t q2 = vdupq_n_f64(2.27265548208155028766e-1);
  const float64x2_t q3 = vdupq_n_f64(2.00000000000000000005e0);

  const float64x2_t xin = x;
  x = vminq_f64(x, max_x);
  x = vmaxq_f64(x, min_x);

  const float64x2_t nf = vrndnq_f64(vmulq_f64(x, log2e));
  float64x2_t r = vfmsq_f64(x, nf, ln2_hi);
  r = vfmsq_f64(r, nf, ln2_lo);

  const float64x2_t rr = vmulq_f64(r, r);
  float64x2_t px = vfmaq_f64(p1, p0, rr);
  px = vfmaq_f64(p2, px, rr);
  px = vmulq_f64(px, r);
  float64x2_t qx = vfmaq_f64(q1, q0, rr);
  qx = vfmaq_f64(q2, qx, rr);
  qx = vfmaq_f64(q3, qx, rr);

  float64x2_t e = vdivq_f64(px, vsubq_f64(qx, px));
  e = vfmaq_f64(vdupq_n_f64(1.0), vdupq_n_f64(2.0), e);

  const int64x2_t n64 = vcvtnq_s64_f64(nf);
  const int64x2_t bits = vshlq_n_s64(n64, 52);
  float64x2_t res =
      vreinterpretq_f64_s64(vaddq_s64(vreinterpretq_s64_f64(e), bits));

  const uint64x2_t under = vcltq_f64(xin, min_x);
  res = vbslq_f64(under, vdupq_n_f64(0.0), res);
  const uint64x2_t over = vcgtq_f64(xin, max_x);
  res = vbslq_f64(over, vdupq_n_f64(HUGE_VAL), res);
  return res;
}

FitSums fit_sums_neon(const double* xs, const double* ys, std::size_t n,
                      double x, double h) {
  const double inv_h = 1.0 / h;
  const double c = kInvSqrt2Pi * inv_h;
  const float64x2_t vx = vdupq_n_f64(x);
  const float64x2_t vinv = vdupq_n_f64(inv_h);
  const float64x2_t vc = vdupq_n_f64(c);
  const float64x2_t vneg_half = vdupq_n_f64(-0.5);

  float64x2_t s0 = vdupq_n_f64(0.0);
  float64x2_t s1 = vdupq_n_f64(0.0);
  float64x2_t s2 = vdupq_n_f64(0.0);
  float64x2_t s3 = vdupq_n_f64(0.0);
  float64x2_t t0 = vdupq_n_f64(0.0);
  float64x2_t t1 = vdupq_n_f64(0.0);

  std::size_t j = 0;
  for (; j + 2 <= n; j += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(xs + j), vx);
    const float64x2_t t = vmulq_f64(d, vinv);
    const float64x2_t q = vmulq_f64(vneg_half, vmulq_f64(t, t));
    const float64x2_t k = vmulq_f64(vc, exp2(q));
    const float64x2_t dk = vmulq_f64(d, k);
    const float64x2_t ddk = vmulq_f64(d, dk);
    s0 = vaddq_f64(s0, k);
    s1 = vaddq_f64(s1, dk);
    s2 = vaddq_f64(s2, ddk);
    s3 = vfmaq_f64(s3, d, ddk);
    if (ys != nullptr) {
      const float64x2_t y = vld1q_f64(ys + j);
      t0 = vfmaq_f64(t0, k, y);
      t1 = vfmaq_f64(t1, dk, y);
    }
  }

  FitSums acc;
  acc.s0 = vaddvq_f64(s0);
  acc.s1 = vaddvq_f64(s1);
  acc.s2 = vaddvq_f64(s2);
  acc.s3 = vaddvq_f64(s3);
  acc.t0 = vaddvq_f64(t0);
  acc.t1 = vaddvq_f64(t1);

  for (; j < n; ++j) {
    const double d = xs[j] - x;
    const double t = d * inv_h;
    const double k = c * std::exp(-0.5 * (t * t));
    const double dk = d * k;
    const double ddk = d * dk;
    acc.s0 += k;
    acc.s1 += dk;
    acc.s2 += ddk;
    acc.s3 += d * ddk;
    if (ys != nullptr) {
      acc.t0 += k * ys[j];
      acc.t1 += dk * ys[j];
    }
  }
  return acc;
}

void kernel_values_neon(const double* xs, std::size_t n, double x, double h,
                        double* out) {
  const double inv_h = 1.0 / h;
  const double c = kInvSqrt2Pi * inv_h;
  const float64x2_t vx = vdupq_n_f64(x);
  const float64x2_t vinv = vdupq_n_f64(inv_h);
  const float64x2_t vc = vdupq_n_f64(c);
  const float64x2_t vneg_half = vdupq_n_f64(-0.5);

  std::size_t j = 0;
  for (; j + 2 <= n; j += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(xs + j), vx);
    const float64x2_t t = vmulq_f64(d, vinv);
    const float64x2_t q = vmulq_f64(vneg_half, vmulq_f64(t, t));
    vst1q_f64(out + j, vmulq_f64(vc, exp2(q)));
  }
  for (; j < n; ++j) {
    const double t = (xs[j] - x) * inv_h;
    out[j] = c * std::exp(-0.5 * (t * t));
  }
}

}  // namespace

const Backend* neon_backend() {
  // Advanced SIMD with double lanes is architectural on aarch64.
  static const Backend backend{"neon", &fit_sums_neon, &kernel_values_neon};
  return &backend;
}

}  // namespace mbcs::simd

#endif  // __aarch64__
