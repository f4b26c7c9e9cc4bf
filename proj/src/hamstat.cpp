#include "hessvar/hamstat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "hessvar/energy.hpp"
#include "hessvar/errors.hpp"
#include "hessvar/parallel.hpp"
#include "hessvar/sampling.hpp"

namespace hessvar {

namespace {

const EnergyModel& area_model(int n) {
  static const EnergyModel two = EnergyModel::area(2);
  static const EnergyModel three = EnergyModel::area(3);
  if (n == 2) return two;
  if (n == 3) return three;
  throw PreconditionError("dimension must be 2 or 3");
}

bool all_valid(const ScalarGrid& s, std::size_t x, const GridGeometry& g) {
  // x and its full 3^n neighbourhood
  if (g.ring_depth(x) < 1) return false;
  const Index c = g.multi(x);
  for (int i = -1; i <= 1; ++i)
    for (int j = -1; j <= 1; ++j)
      for (int k = (g.dim == 3 ? -1 : 0); k <= (g.dim == 3 ? 1 : 0); ++k) {
        Index idx = c;
        idx[0] += i;
        idx[1] += j;
        if (g.dim == 3) idx[2] += k;
        if (!s.valid(g.linear(idx))) return false;
      }
  return true;
}

}  // namespace

MetricField induced_metric(const SymMatField& hessian) {
  const GridGeometry& geom = hessian.geometry();
  const int n = geom.dim;
  MetricField mf;
  mf.geometry = geom;
  const std::size_t count = hessian.size();
  mf.g.assign(count, SymMat::identity(n));
  mf.g_inv.assign(count, SymMat::identity(n));
  mf.sqrt_det.assign(count, 1.0);
  mf.valid.assign(count, 0);
  parallel_for(count, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      if (!hessian.valid(i)) continue;
      const SymMat m = hessian.at(i);
      const SymMat g = SymMat::identity(n) + square(m);
      mf.g[i] = g;
      mf.g_inv[i] = inverse(g);
      mf.sqrt_det[i] = std::sqrt(determinant(g));
      mf.valid[i] = 1;
    }
  });
  return mf;
}

double volume_integrand(const SymMat& m) { return area_model(m.dim()).value_unchecked(m); }

double phase_of(const SymMat& m) {
  const auto ev = eigenvalues(m);
  double t = 0.0;
  for (int i = 0; i < m.dim(); ++i) t += std::atan(ev[i]);
  return t;
}

PhaseField lagrangian_phase(const SymMatField& hessian) {
  const GridGeometry& g = hessian.geometry();
  PhaseField pf;
  pf.theta = ScalarGrid(g, 0.0);
  pf.eigenvalues.assign(hessian.size(), {0.0, 0.0, 0.0});
  parallel_for(hessian.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      pf.theta.set_valid(i, hessian.valid(i));
      if (!hessian.valid(i)) continue;
      const auto ev = eigenvalues(hessian.at(i));
      pf.eigenvalues[i] = ev;
      double t = 0.0;
      for (int k = 0; k < g.dim; ++k) t += std::atan(ev[k]);
      pf.theta[i] = t;
    }
  });
  return pf;
}

std::vector<double> hamstat_residual(const ScalarGrid& u, const TestFunctionSet& tests) {
  static const DoubleDivergenceModel two = DoubleDivergenceModel::hamiltonian_stationary(2);
  static const DoubleDivergenceModel three = DoubleDivergenceModel::hamiltonian_stationary(3);
  return dd_weak_residual(u, u.dim() == 2 ? two : three, tests);
}

ScalarGrid laplace_beltrami(const ScalarGrid& phi, const MetricField& metric) {
  const GridGeometry& g = phi.geometry();
  if (!(metric.geometry == g)) throw PreconditionError("metric and scalar live on different grids");
  const int n = g.dim;
  const double h = g.spacing;
  ScalarGrid out(g, 0.0);
  // c^{ij} = sqrt(g) g^{ij}
  auto coeff = [&](std::size_t x, int i, int j) { return metric.sqrt_det[x] * metric.g_inv[x](i, j); };
  parallel_for(g.node_count(), [&](std::size_t b, std::size_t e) {
    for (std::size_t x = b; x < e; ++x) {
      bool ok = all_valid(phi, x, g) && metric.valid[x];
      for (int i = 0; ok && i < n; ++i)
        ok = metric.valid[x + g.stride(i)] && metric.valid[x - g.stride(i)];
      out.set_valid(x, ok);
      if (!ok) {
        out[x] = 0.0;
        continue;
      }
      double div = 0.0;
      for (int i = 0; i < n; ++i) {
        const std::size_t si = g.stride(i);
        // flux through the face between y and y + e_i
        auto flux = [&](std::size_t y) {
          double f = 0.0;
          for (int j = 0; j < n; ++j) {
            const double c = 0.5 * (coeff(y, i, j) + coeff(y + si, i, j));
            double d;
            if (j == i) {
              d = (phi[y + si] - phi[y]) / h;
            } else {
              const std::size_t sj = g.stride(j);
              d = ((phi[y + sj] - phi[y - sj]) + (phi[y + si + sj] - phi[y + si - sj])) / (4.0 * h);
            }
            f += c * d;
          }
          return f;
        };
        div += (flux(x) - flux(x - si)) / h;
      }
      out[x] = div / metric.sqrt_det[x];
    }
  });
  return out;
}

ScalarGrid laplace_beltrami_expanded(const ScalarGrid& phi, const SymMatField& hessian,
                                     const ScalarGrid& theta) {
  const GridGeometry& g = phi.geometry();
  if (!(hessian.geometry() == g) || !(theta.geometry() == g))
    throw PreconditionError("fields live on different grids");
  const int n = g.dim;
  const double h = g.spacing;
  ScalarGrid out(g, 0.0);
  parallel_for(g.node_count(), [&](std::size_t b, std::size_t e) {
    for (std::size_t x = b; x < e; ++x) {
      bool ok = all_valid(phi, x, g) && hessian.valid(x);
      for (int q = 0; ok && q < n; ++q)
        ok = theta.valid(x + g.stride(q)) && theta.valid(x - g.stride(q));
      out.set_valid(x, ok);
      if (!ok) {
        out[x] = 0.0;
        continue;
      }
      const SymMat u2 = hessian.at(x);
      const SymMat gi = inverse(SymMat::identity(n) + square(u2));
      std::array<double, kMaxDim> dphi{}, dtheta{};
      for (int q = 0; q < n; ++q) {
        const std::size_t s = g.stride(q);
        dphi[q] = (phi[x + s] - phi[x - s]) / (2.0 * h);
        dtheta[q] = (theta[x + s] - theta[x - s]) / (2.0 * h);
      }
      double v = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const std::size_t si = g.stride(i), sj = g.stride(j);
          double d2;
          if (i == j) {
            d2 = ((phi[x - si] - 2.0 * phi[x]) + phi[x + si]) / (h * h);
          } else {
            d2 = (((phi[x + si + sj] - phi[x + si - sj]) - phi[x - si + sj]) + phi[x - si - sj]) /
                 (4.0 * h * h);
          }
          v += gi(i, j) * d2;
        }
      for (int j = 0; j < n; ++j)
        for (int p = 0; p < n; ++p)
          for (int q = 0; q < n; ++q) v -= gi(j, p) * dtheta[q] * u2(p, q) * dphi[j];
      out[x] = v;
    }
  });
  return out;
}

ResidualSummary phase_harmonicity_residual(const ScalarGrid& u, double inner_fraction) {
  if (!(inner_fraction > 0.0 && inner_fraction <= 1.0))
    throw PreconditionError("inner fraction must lie in (0,1]");
  const GridGeometry& g = u.geometry();
  const SymMatField hess = hessian_field(u);
  const PhaseField phase = lagrangian_phase(hess);
  const MetricField metric = induced_metric(hess);
  const ScalarGrid lb = laplace_beltrami(phase.theta, metric);
  const double half = inner_fraction * g.interior_half_width() * (1.0 + 1e-12);
  ResidualSummary r;
  double sum2 = 0.0;
  for (std::size_t i = 0; i < lb.size(); ++i) {
    if (!lb.valid(i)) continue;
    const Point x = g.position(i);
    bool inside = true;
    for (int a = 0; a < g.dim; ++a) inside = inside && std::fabs(x[a]) <= half;
    if (!inside) continue;
    r.sup = std::max(r.sup, std::fabs(lb[i]));
    sum2 += lb[i] * lb[i];
    ++r.nodes;
  }
  if (r.nodes == 0) throw PreconditionError("no valid nodes in the inner region");
  r.l2 = std::sqrt(std::pow(g.spacing, g.dim) * sum2);
  return r;
}

VolumeDerivatives closed_form_dV(const std::vector<double>& lambda) {
  const int n = static_cast<int>(lambda.size());
  if (n < 1 || n > kMaxDim) throw PreconditionError("eigenvalue vector must have 1 to 3 entries");
  VolumeDerivatives d;
  d.n = n;
  d.v = 1.0;
  for (double l : lambda) {
    if (!std::isfinite(l)) throw PreconditionError("eigenvalues must be finite");
    d.v *= std::sqrt(1.0 + l * l);
  }
  for (int i = 0; i < n; ++i) {
    const double l = lambda[i];
    d.e[i] = l / (1.0 + l * l);
    d.first[i] = d.e[i] * d.v;
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) {
        const double l = lambda[i];
        d.second[i * n + j] = (1.0 / (1.0 + l * l) - 2.0 * d.e[i] * d.e[i]) * d.v + d.e[i] * d.e[i] * d.v;
      } else {
        d.second[i * n + j] = d.v * d.e[i] * d.e[j];
      }
    }
  return d;
}

double convexity_bound(double eta) {
  const double l2 = (1.0 - eta) * (1.0 - eta);
  return (1.0 - l2) / ((1.0 + l2) * (1.0 + l2));
}

ConvexityCertificate convexity_certificate(double eta, int n, int sample_count, std::uint64_t seed) {
  if (!(eta > 0.0 && eta <= 1.0)) throw PreconditionError("eta must lie in (0,1]");
  if (n != 2 && n != 3) throw PreconditionError("dimension must be 2 or 3");
  if (sample_count < 1) throw PreconditionError("certificate needs at least one sample");
  const EnergyModel& model = area_model(n);
  const double radius = 1.0 - eta;
  const double c_eta = convexity_bound(eta);

  struct Sample {
    double eig = 0.0, eig_norm = 0.0, diag_min = 0.0;
    bool diag_ok = true;
    SymMat m;
  };
  std::vector<Sample> out(static_cast<std::size_t>(sample_count));
  parallel_for(out.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      std::array<double, kMaxDim> lambda{};
      SymMat m(n);
      if (k > 0 && radius > 0.0) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
        std::mt19937_64 rng(seq);
        std::uniform_real_distribution<double> uni(-radius, radius);
        for (int i = 0; i < n; ++i) lambda[i] = uni(rng);
        const auto rot = random_rotation(n, rng);
        m = rotate_diagonal(n, std::span<const double>(lambda.data(), n),
                            std::span<const double>(rot.data(), n * n));
      }
      Sample& s = out[k];
      s.m = m;
      const double v = model.value_unchecked(m);
      s.eig = legendre_min_eigenvalue(model.second_derivative_unchecked(m));
      s.eig_norm = s.eig / v;

      // Exact check in eigenvalue coordinates.
      const VolumeDerivatives d = closed_form_dV(std::vector<double>(lambda.begin(), lambda.begin() + n));
      std::array<double, kMaxDim * kMaxDim> hv{};
      for (int i = 0; i < n * n; ++i) hv[i] = d.second[i] / d.v;
      std::array<double, kMaxDim> ev{};
      jacobi_eigen(std::span<double>(hv.data(), n * n), n, std::span<double>(ev.data(), n));
      s.diag_min = ev[0];
      double bound_min = std::numeric_limits<double>::infinity();
      for (int i = 0; i < n; ++i) {
        const double l2 = lambda[i] * lambda[i];
        const double bound = (1.0 - l2) / ((1.0 + l2) * (1.0 + l2));
        bound_min = std::min(bound_min, bound);
        if (d.second[i * n + i] / d.v < bound - 1e-12) s.diag_ok = false;
      }
      if (s.diag_min < bound_min - 1e-12 || bound_min < c_eta - 1e-12) s.diag_ok = false;
    }
  });

  ConvexityCertificate c;
  c.eta = eta;
  c.n = n;
  c.samples = sample_count;
  c.seed = seed;
  c.c_eta = c_eta;
  c.min_eig = std::numeric_limits<double>::infinity();
  c.min_eig_normalized = std::numeric_limits<double>::infinity();
  c.diagonal_min = std::numeric_limits<double>::infinity();
  c.diagonal_check = true;
  for (const Sample& s : out) {
    if (s.eig < c.min_eig) {
      c.min_eig = s.eig;
      c.worst = s.m;
    }
    c.min_eig_normalized = std::min(c.min_eig_normalized, s.eig_norm);
    c.diagonal_min = std::min(c.diagonal_min, s.diag_min);
    c.diagonal_check = c.diagonal_check && s.diag_ok;
  }
  return c;
}

}  // namespace hessvar
