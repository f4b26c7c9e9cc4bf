#pragma once
// Row kernels for the grid stencils and the Krylov vector updates.
//
// Every kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant. The table used by the library is chosen once at startup from the
// CPU feature bits; HESSVAR_SIMD=scalar forces the reference path.
// Elementwise kernels are bit-identical across tables; reductions (dot) only
// differ by summation order.

#include <cstddef>
#include <string_view>

namespace hessvar::simd {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
  Isa isa;
  const char* name;

  /// out[i] = scale * ((lo[i] - 2 mid[i]) + hi[i])
  void (*second_difference)(const double* lo, const double* mid, const double* hi,
                            double* out, std::size_t n, double scale);
  /// out[i] = scale * (((pp[i] - pm[i]) - mp[i]) + mm[i])
  void (*cross_difference)(const double* pp, const double* pm, const double* mp,
                           const double* mm, double* out, std::size_t n, double scale);
  /// y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  /// y[i] = x[i] + beta * y[i]
  void (*xpby)(const double* x, double beta, double* y, std::size_t n);
  /// out[i] = a[i] * b[i]
  void (*multiply)(const double* a, const double* b, double* out, std::size_t n);
  double (*dot)(const double* x, const double* y, std::size_t n);
  double (*max_abs)(const double* x, std::size_t n);
};

const KernelTable& scalar_kernels();
/// nullptr when the AVX2 table was not compiled in or the CPU lacks AVX2.
const KernelTable* avx2_kernels();

/// The table the library currently dispatches to.
const KernelTable& active();

/// Overrides dispatch for the lifetime of the guard (tests, benchmarks).
class ScopedIsa {
 public:
  explicit ScopedIsa(Isa isa);
  ~ScopedIsa();
  ScopedIsa(const ScopedIsa&) = delete;
  ScopedIsa& operator=(const ScopedIsa&) = delete;

 private:
  const KernelTable* previous_;
};

std::string_view isa_name(Isa isa);

}  // namespace hessvar::simd
