#pragma once
// Internal: row-wise application of the Hessian stencils through the SIMD
// kernel table. Shared by grid, solver and hamstat.

#include <cstddef>
#include <span>
#include <vector>

#include "hessvar/grid.hpp"
#include "hessvar/simd/kernels.hpp"

namespace hessvar::detail {

/// Calls fn(base, len) for each maximal run of nodes along the last axis whose
/// ring depth is >= 1 (all 3^n neighbours exist).
template <class Fn>
void for_each_inner_row(const GridGeometry& g, Fn&& fn) {
  const int last = g.dim - 1;
  const std::size_t len = static_cast<std::size_t>(g.extents[last] - 2);
  Index idx{0, 0, 0};
  if (g.dim == 2) {
    for (int i = 1; i < g.extents[0] - 1; ++i) {
      idx = {i, 1, 0};
      fn(g.linear(idx), len);
    }
  } else {
    for (int i = 1; i < g.extents[0] - 1; ++i)
      for (int j = 1; j < g.extents[1] - 1; ++j) {
        idx = {i, j, 1};
        fn(g.linear(idx), len);
      }
  }
}

/// out = D_a in on all nodes of ring depth >= 1. Other entries of `out` are
/// left untouched.
inline void apply_hessian_component(const GridGeometry& g, int a, std::span<const double> in,
                                    std::span<double> out) {
  const auto& k = simd::active();
  const auto p = packed_pair(g.dim, a);
  const double h = g.spacing;
  const double* src = in.data();
  double* dst = out.data();
  if (p[0] == p[1]) {
    const std::size_t s = g.stride(p[0]);
    const double scale = 1.0 / (h * h);
    for_each_inner_row(g, [&](std::size_t base, std::size_t len) {
      k.second_difference(src + base - s, src + base, src + base + s, dst + base, len, scale);
    });
  } else {
    const std::size_t si = g.stride(p[0]);
    const std::size_t sj = g.stride(p[1]);
    const double scale = 1.0 / (4.0 * h * h);
    for_each_inner_row(g, [&](std::size_t base, std::size_t len) {
      k.cross_difference(src + base + si + sj, src + base + si - sj, src + base - si + sj,
                         src + base - si - sj, dst + base, len, scale);
    });
  }
}

/// Hessian planes of a flat nodal vector (no validity tracking).
inline std::vector<std::vector<double>> hessian_planes(const GridGeometry& g,
                                                       std::span<const double> values) {
  std::vector<std::vector<double>> planes(packed_size(g.dim),
                                          std::vector<double>(g.node_count(), 0.0));
  for (int a = 0; a < packed_size(g.dim); ++a) apply_hessian_component(g, a, values, planes[a]);
  return planes;
}

/// out += scale * sum_a w_a D_a(planes[a]) on interior nodes; the transpose of
/// hessian_planes restricted to interior unknowns (every stencil is symmetric).
inline void accumulate_adjoint(const GridGeometry& g, const std::vector<std::vector<double>>& planes,
                               double scale, std::span<double> out) {
  const auto& k = simd::active();
  std::vector<double> tmp(g.node_count(), 0.0);
  for (int a = 0; a < packed_size(g.dim); ++a) {
    apply_hessian_component(g, a, planes[a], tmp);
    k.axpy(scale * packed_weight(g.dim, a), tmp.data(), out.data(), out.size());
  }
}

inline void zero_non_interior(const GridGeometry& g, std::span<double> v) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!g.is_interior(i)) v[i] = 0.0;
}

}  // namespace hessvar::detail
