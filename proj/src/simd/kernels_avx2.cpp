// AVX2 variants of the row kernels. Compiled with -mavx2 only; no FMA so the
// elementwise kernels round exactly like the scalar reference.
#include <immintrin.h>

#include <cmath>

#include "hessvar/simd/kernels.hpp"

namespace hessvar::simd {
namespace {

void second_difference(const double* lo, const double* mid, const double* hi, double* out,
                       std::size_t n, double scale) {
  const __m256d vs = _mm256_set1_pd(scale);
  const __m256d two = _mm256_set1_pd(2.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d a = _mm256_loadu_pd(lo + i);
    __m256d m = _mm256_loadu_pd(mid + i);
    __m256d b = _mm256_loadu_pd(hi + i);
    __m256d r = _mm256_add_pd(_mm256_sub_pd(a, _mm256_mul_pd(two, m)), b);
    _mm256_storeu_pd(out + i, _mm256_mul_pd(vs, r));
  }
  for (; i < n; ++i) out[i] = scale * ((lo[i] - 2.0 * mid[i]) + hi[i]);
}

void cross_difference(const double* pp, const double* pm, const double* mp, const double* mm,
                      double* out, std::size_t n, double scale) {
  const __m256d vs = _mm256_set1_pd(scale);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d r = _mm256_sub_pd(_mm256_loadu_pd(pp + i), _mm256_loadu_pd(pm + i));
    r = _mm256_sub_pd(r, _mm256_loadu_pd(mp + i));
    r = _mm256_add_pd(r, _mm256_loadu_pd(mm + i));
    _mm256_storeu_pd(out + i, _mm256_mul_pd(vs, r));
  }
  for (; i < n; ++i) out[i] = scale * (((pp[i] - pm[i]) - mp[i]) + mm[i]);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256d y0 = _mm256_loadu_pd(y + i);
    __m256d y1 = _mm256_loadu_pd(y + i + 4);
    y0 = _mm256_add_pd(y0, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    y1 = _mm256_add_pd(y1, _mm256_mul_pd(va, _mm256_loadu_pd(x + i + 4)));
    _mm256_storeu_pd(y + i, y0);
    _mm256_storeu_pd(y + i + 4, y1);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void xpby(const double* x, double beta, double* y, std::size_t n) {
  const __m256d vb = _mm256_set1_pd(beta);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d r = _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_mul_pd(vb, _mm256_loadu_pd(y + i)));
    _mm256_storeu_pd(y + i, r);
  }
  for (; i < n; ++i) y[i] = x[i] + beta * y[i];
}

void multiply(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

double horizontal_sum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    acc1 = _mm256_add_pd(acc1,
                         _mm256_mul_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
  }
  double s = horizontal_sum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

double max_abs(const double* x, std::size_t n) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d m = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    // max_pd returns its second operand when the first is NaN, matching the
    // scalar loop which skips NaN entries.
    m = _mm256_max_pd(_mm256_andnot_pd(sign, _mm256_loadu_pd(x + i)), m);
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, m);
  double r = 0.0;
  for (double v : lanes) {
    if (v > r) r = v;
  }
  for (; i < n; ++i) {
    const double a = std::fabs(x[i]);
    if (a > r) r = a;
  }
  return r;
}

}  // namespace

const KernelTable& avx2_kernel_table() {
  static const KernelTable table{Isa::Avx2, "avx2",   second_difference, cross_difference, axpy,
                                 xpby,      multiply, dot,               max_abs};
  return table;
}

}  // namespace hessvar::simd
