#include "hessvar/simd/kernels.hpp"

#include <cmath>

namespace hessvar::simd {
namespace {

void second_difference(const double* lo, const double* mid, const double* hi, double* out,
                       std::size_t n, double scale) {
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = scale * ((lo[i] - 2.0 * mid[i]) + hi[i]);
  }
}

void cross_difference(const double* pp, const double* pm, const double* mp, const double* mm,
                      double* out, std::size_t n, double scale) {
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = scale * (((pp[i] - pm[i]) - mp[i]) + mm[i]);
  }
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void xpby(const double* x, double beta, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + beta * y[i];
}

void multiply(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

double dot(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

double max_abs(const double* x, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = std::fabs(x[i]);
    if (a > m) m = a;
  }
  return m;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{Isa::Scalar,      "scalar", second_difference, cross_difference,
                                 axpy,             xpby,     multiply,          dot,
                                 max_abs};
  return table;
}

}  // namespace hessvar::simd
