// AVX2+FMA variant of the kernel-moment primitives. Compiled with
// -mavx2 -mfma; only dispatched to after a runtime CPU check.

#include "registry.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>
#include <cstddef>

namespace mbcs::simd {
namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779;

// exp() for 4 doubles, Cephes-style: reduce x = n*ln2 + r, evaluate a
// rational approximation of exp(r) on |r| <= ln2/2, scale by 2^n through
// the exponent bits. Inputs below the cutoff flush to 0, above it to +inf.
// Accuracy ~1 ulp on the representable range.
inline __m256d exp4(__m256d x) {
  const __m256d max_x = _mm256_set1_pd(709.436);
  const __m256d min_x = _mm256_set1_pd(-708.396);
  const __m256d log2e = _mm256_set1_pd(1.4426950408889634074);
  const __m256d ln2_hi = _mm256_set1_pd(6.93145751953125e-1);
  const __m256d ln2_lo = _mm256_set1_pd(1.42860682030941723212e-6);

  const __m256d p0 = _mm256_set1_pd(1.26177193074810590878e-4);
  const __m256d p1 = _mm256_set1_pd(3.02994407707441961300e-2);
  const __m256d p2 = _mm256_set1_pd(9.99999999999999999910e-1);
  const __m256d q0 = _mm256_set1_pd(3.00198505138664455042e-6);
  const __m256d q1 = _mm256_set1_pd(2.52448340349684104192e-3);
  const __m256d q2 = _mm256_set1_pd(2.27265548208155028766e-1);
  const __m256d q3 = _mm256_set1_pd(2.00000000000000000005e0);

  const __m256d xin = x;
  x = _mm256_min_pd(x, max_x);
  x = _mm256_max_pd(x, min_x);

  __m256d nf = _mm256_round_pd(_mm256_mul_pd(x, log2e),
                               _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(nf, ln2_hi, x);
  r = _mm256_fnmadd_pd(nf, ln2_lo, r);

  const __m256d rr = _mm256_mul_pd(r, r);
  __m256d px = _mm256_fmadd_pd(p0, rr, p1);
  px = _mm256_fmadd_pd(px, rr, p2);
  px = _mm256_mul_pd(px, r);
  __m256d qx = _mm256_fmadd_pd(q0, rr, q1);
  qx = _mm256_fmadd_pd(qx, rr, q2);
  qx = _mm256_fmadd_pd(qx, rr, q3);

  __m256d e = _mm256_div_pd(px, _mm256_sub_pd(qx, px));
  e = _mm256_fmadd_pd(_mm256_set1_pd(2.0), e, _mm256_set1_pd(1.0));

  // 2^n through the exponent field; the clamp above keeps results normal.
  const __m128i n32 = _mm256_cvtpd_epi32(nf);
  const __m256i n64 = _mm256_cvtepi32_epi64(n32);
  const __m256i bits = _mm256_slli_epi64(n64, 52);
  __m256d res =
      _mm256_castsi256_pd(_mm256_add_epi64(_mm256_castpd_si256(e), bits));

  const __m256d under = _mm256_cmp_pd(xin, min_x, _CMP_LT_OQ);
  res = _mm256_andnot_pd(under, res);
  const __m256d over = _mm256_cmp_pd(xin, max_x, _CMP_GT_OQ);
  res = _mm256_blendv_pd(res, _mm256_set1_pd(HUGE_VAL), over);
  return res;
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

FitSums fit_sums_avx2(const double* xs, const double* ys, std::size_t n,
                      double x, double h) {
  const double inv_h = 1.0 / h;
  const double c = kInvSqrt2Pi * inv_h;
  const __m256d vx = _mm256_set1_pd(x);
  const __m256d vinv = _mm256_set1_pd(inv_h);
  const __m256d vc = _mm256_set1_pd(c);
  const __m256d vneg_half = _mm256_set1_pd(-0.5);

  __m256d s0 = _mm256_setzero_pd();
  __m256d s1 = _mm256_setzero_pd();
  __m256d s2 = _mm256_setzero_pd();
  __m256d s3 = _mm256_setzero_pd();
  __m256d t0 = _mm256_setzero_pd();
  __m256d t1 = _mm256_setzero_pd();

  std::size_t j = 0;
  if (ys != nullptr) {
    for (; j + 4 <= n; j += 4) {
      const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(xs + j), vx);
      const __m256d t = _mm256_mul_pd(d, vinv);
      const __m256d q = _mm256_mul_pd(vneg_half, _mm256_mul_pd(t, t));
      const __m256d k = _mm256_mul_pd(vc, exp4(q));
      const __m256d dk = _mm256_mul_pd(d, k);
      const __m256d ddk = _mm256_mul_pd(d, dk);
      const __m256d y = _mm256_loadu_pd(ys + j);
      s0 = _mm256_add_pd(s0, k);
      s1 = _mm256_add_pd(s1, dk);
      s2 = _mm256_add_pd(s2, ddk);
      s3 = _mm256_fmadd_pd(d, ddk, s3);
      t0 = _mm256_fmadd_pd(k, y, t0);
      t1 = _mm256_fmadd_pd(dk, y, t1);
    }
  } else {
    for (; j + 4 <= n; j += 4) {
      const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(xs + j), vx);
      const __m256d t = _mm256_mul_pd(d, vinv);
      const __m256d q = _mm256_mul_pd(vneg_half, _mm256_mul_pd(t, t));
      const __m256d k = _mm256_mul_pd(vc, exp4(q));
      const __m256d dk = _mm256_mul_pd(d, k);
      const __m256d ddk = _mm256_mul_pd(d, dk);
      s0 = _mm256_add_pd(s0, k);
      s1 = _mm256_add_pd(s1, dk);
      s2 = _mm256_add_pd(s2, ddk);
      s3 = _mm256_fmadd_pd(d, ddk, s3);
    }
  }

  FitSums acc;
  acc.s0 = hsum(s0);
  acc.s1 = hsum(s1);
  acc.s2 = hsum(s2);
  acc.s3 = hsum(s3);
  acc.t0 = hsum(t0);
  acc.t1 = hsum(t1);

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

void kernel_values_avx2(const double* xs, std::size_t n, double x, double h,
                        double* out) {
  const double inv_h = 1.0 / h;
  const double c = kInvSqrt2Pi * inv_h;
  const __m256d vx = _mm256_set1_pd(x);
  const __m256d vinv = _mm256_set1_pd(inv_h);
  const __m256d vc = _mm256_set1_pd(c);
  const __m256d vneg_half = _mm256_set1_pd(-0.5);

  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(xs + j), vx);
    const __m256d t = _mm256_mul_pd(d, vinv);
    const __m256d q = _mm256_mul_pd(vneg_half, _mm256_mul_pd(t, t));
    _mm256_storeu_pd(out + j, _mm256_mul_pd(vc, exp4(q)));
  }
  for (; j < n; ++j) {
    const double t = (xs[j] - x) * inv_h;
    out[j] = c * std::exp(-0.5 * (t * t));
  }
}

}  // namespace

const Backend* avx2_backend() {
  static const bool runnable =
      __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  if (!runnable) return nullptr;
  static const Backend backend{"avx2", &fit_sums_avx2, &kernel_values_avx2};
  return &backend;
}

}  // namespace mbcs::simd

#endif  // x86_64
