#include "hessvar/solver.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "hessvar/errors.hpp"
#include "hessvar/parallel.hpp"
#include "hessvar/simd/kernels.hpp"
#include "stencil.hpp"

namespace hessvar {

namespace {

using Planes = std::vector<std::vector<double>>;

double cell_volume(const GridGeometry& g) { return std::pow(g.spacing, g.dim); }

SymMat matrix_at(const Planes& planes, int n, std::size_t node) {
  SymMat m(n);
  for (int a = 0; a < m.size(); ++a) m.packed(a) = planes[a][node];
  return m;
}

std::string describe_node(const GridGeometry& g, std::size_t node) {
  std::ostringstream os;
  const Index idx = g.multi(node);
  const Point x = g.position(node);
  os << "node (";
  for (int a = 0; a < g.dim; ++a) os << (a ? "," : "") << idx[a];
  os << ") at x = (";
  for (int a = 0; a < g.dim; ++a) os << (a ? ", " : "") << x[a];
  os << ")";
  return os.str();
}

/// First energy-region node whose Hessian is not admissible, if any.
std::optional<std::size_t> find_inadmissible(const GridGeometry& g, const Planes& planes,
                                             const std::function<bool(const SymMat&)>& ok) {
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    if (!g.in_energy_region(i)) continue;
    if (!ok(matrix_at(planes, g.dim, i))) return i;
  }
  return std::nullopt;
}

void require_model_dim(const GridGeometry& g, int model_dim) {
  if (g.dim != model_dim) throw PreconditionError("grid and model dimensions differ");
}

void require_all_valid(const ScalarGrid& u) {
  for (std::size_t i = 0; i < u.size(); ++i)
    if (!u.valid(i)) throw PreconditionError("operation needs a grid that is valid at every node");
}

double energy_from_planes(const GridGeometry& g, const Planes& planes, const EnergyModel& model) {
  const double hn = cell_volume(g);
  return hn * parallel_sum(g.node_count(), [&](std::size_t b, std::size_t e) {
           double s = 0.0;
           for (std::size_t i = b; i < e; ++i)
             if (g.in_energy_region(i)) s += model.value_unchecked(matrix_at(planes, g.dim, i));
           return s;
         });
}

std::vector<double> gradient_from_planes(const GridGeometry& g, const Planes& planes,
                                         const EnergyModel& model) {
  const int m = packed_size(g.dim);
  const double hn = cell_volume(g);
  Planes flux(m, std::vector<double>(g.node_count(), 0.0));
  parallel_for(g.node_count(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      if (!g.in_energy_region(i)) continue;
      const SymMat d = model.first_derivative_unchecked(matrix_at(planes, g.dim, i));
      for (int a = 0; a < m; ++a) flux[a][i] = hn * d.packed(a);
    }
  });
  std::vector<double> grad(g.node_count(), 0.0);
  detail::accumulate_adjoint(g, flux, 1.0, grad);
  detail::zero_non_interior(g, grad);
  return grad;
}

/// Stencil weight of entry a at offset o (o in {-1, 0, 1}^n).
double stencil_weight(int n, int a, const Index& o, double h) {
  const auto p = packed_pair(n, a);
  if (p[0] == p[1]) {
    for (int k = 0; k < n; ++k)
      if (k != p[0] && o[k] != 0) return 0.0;
    const int oi = o[p[0]];
    return (oi == 0 ? -2.0 : 1.0) / (h * h);
  }
  for (int k = 0; k < n; ++k)
    if (k != p[0] && k != p[1] && o[k] != 0) return 0.0;
  const int oi = o[p[0]], oj = o[p[1]];
  if (oi == 0 || oj == 0) return 0.0;
  return (oi == oj ? 1.0 : -1.0) / (4.0 * h * h);
}

std::vector<Index> stencil_offsets(int n) {
  std::vector<Index> out;
  for (int i = -1; i <= 1; ++i)
    for (int j = -1; j <= 1; ++j)
      for (int k = (n == 3 ? -1 : 0); k <= (n == 3 ? 1 : 0); ++k) out.push_back({i, j, k});
  return out;
}

/// v -> h^n sum_y D^T (T(y) D v)(y) over the energy region, restricted to
/// interior unknowns. T(y) is assumed to have major symmetry.
class Stiffness {
 public:
  Stiffness(const GridGeometry& g, std::vector<Tensor4> tensors)
      : g_(g), t_(std::move(tensors)), hn_(cell_volume(g)) {}

  void apply(std::span<const double> v, std::span<double> out) const {
    const int n = g_.dim;
    const int m = packed_size(n);
    Planes planes = detail::hessian_planes(g_, v);
    parallel_for(g_.node_count(), [&](std::size_t b, std::size_t e) {
      std::array<double, kMaxPacked> d{};
      for (std::size_t i = b; i < e; ++i) {
        if (!g_.in_energy_region(i)) {
          for (int a = 0; a < m; ++a) planes[a][i] = 0.0;
          continue;
        }
        for (int a = 0; a < m; ++a) d[a] = packed_weight(n, a) * planes[a][i];
        const Tensor4& t = t_[i];
        for (int c = 0; c < m; ++c) {
          double s = 0.0;
          for (int a = 0; a < m; ++a) s += d[a] * t(a, c);
          planes[c][i] = hn_ * s;
        }
      }
    });
    std::fill(out.begin(), out.end(), 0.0);
    detail::accumulate_adjoint(g_, planes, 1.0, out);
    detail::zero_non_interior(g_, out);
  }

  std::vector<double> diagonal() const {
    const int n = g_.dim;
    const int m = packed_size(n);
    const auto offsets = stencil_offsets(n);
    // Per offset: the stencil weights c_a(o).
    std::vector<std::array<double, kMaxPacked>> c(offsets.size());
    for (std::size_t k = 0; k < offsets.size(); ++k)
      for (int a = 0; a < m; ++a) c[k][a] = stencil_weight(n, a, offsets[k], g_.spacing);
    std::vector<double> diag(g_.node_count(), 0.0);
    parallel_for(g_.node_count(), [&](std::size_t b, std::size_t e) {
      for (std::size_t x = b; x < e; ++x) {
        if (!g_.is_interior(x)) continue;
        const Index xi = g_.multi(x);
        double s = 0.0;
        for (std::size_t k = 0; k < offsets.size(); ++k) {
          Index yi = xi;
          for (int a = 0; a < n; ++a) yi[a] += offsets[k][a];
          const std::size_t y = g_.linear(yi);
          if (!g_.in_energy_region(y)) continue;
          const Tensor4& t = t_[y];
          for (int a = 0; a < m; ++a) {
            const double ca = packed_weight(n, a) * c[k][a];
            if (ca == 0.0) continue;
            for (int bb = 0; bb < m; ++bb) s += ca * t(a, bb) * packed_weight(n, bb) * c[k][bb];
          }
        }
        diag[x] = hn_ * s;
      }
    });
    return diag;
  }

 private:
  const GridGeometry& g_;
  std::vector<Tensor4> t_;
  double hn_;
};

struct CgOutcome {
  int iterations = 0;
  double residual = 0.0;  ///< final recursive residual 2-norm
  bool converged = false;
};

/// Jacobi-preconditioned CG for A x = b on interior unknowns; x holds the
/// initial guess on entry.
CgOutcome pcg(const Stiffness& a, std::span<const double> b, std::span<double> x, double abs_tol,
              int max_iter) {
  const auto& k = simd::active();
  const std::size_t n = b.size();
  std::vector<double> inv_diag = a.diagonal();
  for (double& d : inv_diag) d = d > 0.0 ? 1.0 / d : 0.0;

  std::vector<double> r(n), z(n), p(n), ap(n);
  a.apply(x, ap);
  for (std::size_t i = 0; i < n; ++i) r[i] = inv_diag[i] != 0.0 ? b[i] - ap[i] : 0.0;
  CgOutcome out;
  double rnorm = std::sqrt(k.dot(r.data(), r.data(), n));
  out.residual = rnorm;
  if (rnorm <= abs_tol) {
    out.converged = true;
    return out;
  }
  k.multiply(inv_diag.data(), r.data(), z.data(), n);
  p = z;
  double rz = k.dot(r.data(), z.data(), n);
  for (int it = 1; it <= max_iter; ++it) {
    a.apply(p, ap);
    const double pap = k.dot(p.data(), ap.data(), n);
    if (!(pap > 0.0)) break;  // loss of positive-definiteness or breakdown
    const double alpha = rz / pap;
    k.axpy(alpha, p.data(), x.data(), n);
    k.axpy(-alpha, ap.data(), r.data(), n);
    rnorm = std::sqrt(k.dot(r.data(), r.data(), n));
    out.iterations = it;
    out.residual = rnorm;
    if (rnorm <= abs_tol) {
      out.converged = true;
      return out;
    }
    k.multiply(inv_diag.data(), r.data(), z.data(), n);
    const double rz_new = k.dot(r.data(), z.data(), n);
    const double beta = rz_new / rz;
    rz = rz_new;
    k.xpby(z.data(), beta, p.data(), n);
  }
  return out;
}

/// D^2 of nodal values at one node, if the node has depth >= 1 and every
/// stencil point is valid.
bool hessian_at(const GridGeometry& g, std::span<const double> v, std::span<const std::uint8_t> valid,
                std::size_t y, std::array<double, kMaxPacked>& out) {
  if (g.ring_depth(y) < 1) return false;
  const double h2 = g.spacing * g.spacing;
  auto ok = [&](std::size_t i) { return valid.empty() || valid[i] != 0; };
  if (!ok(y)) return false;
  for (int a = 0; a < packed_size(g.dim); ++a) {
    const auto p = packed_pair(g.dim, a);
    const std::size_t si = g.stride(p[0]);
    if (p[0] == p[1]) {
      if (!ok(y + si) || !ok(y - si)) return false;
      out[a] = ((v[y - si] - 2.0 * v[y]) + v[y + si]) / h2;
    } else {
      const std::size_t sj = g.stride(p[1]);
      if (!ok(y + si + sj) || !ok(y + si - sj) || !ok(y - si + sj) || !ok(y - si - sj)) return false;
      out[a] = (((v[y + si + sj] - v[y + si - sj]) - v[y - si + sj]) + v[y - si - sj]) / (4.0 * h2);
    }
  }
  return true;
}

/// result_k = h^n sum_y <flux(y), D^2 eta_k(y)> over energy-region nodes where
/// D^2 eta_k(y) != 0. `flux(y)` returns the packed flux (or throws).
template <class FluxAt>
std::vector<double> pair_with_tests(const GridGeometry& g, const TestFunctionSet& tests, FluxAt&& flux) {
  if (!(tests.geometry() == g)) throw PreconditionError("test functions live on a different grid");
  const int n = g.dim;
  const int m = packed_size(n);
  const double hn = cell_volume(g);
  const auto offsets = stencil_offsets(n);
  std::vector<double> result(tests.size(), 0.0);
  std::vector<std::uint32_t> mark(g.node_count(), 0);
  std::vector<std::size_t> nodes;
  for (std::size_t k = 0; k < tests.size(); ++k) {
    const auto eta = tests[k];
    const std::uint32_t stamp = static_cast<std::uint32_t>(k + 1);
    nodes.clear();
    for (std::size_t x = 0; x < eta.size(); ++x) {
      if (eta[x] == 0.0) continue;
      const Index xi = g.multi(x);
      for (const Index& o : offsets) {
        Index yi = xi;
        for (int a = 0; a < n; ++a) yi[a] += o[a];
        const std::size_t y = g.linear(yi);
        if (mark[y] != stamp && g.in_energy_region(y)) {
          mark[y] = stamp;
          nodes.push_back(y);
        }
      }
    }
    std::sort(nodes.begin(), nodes.end());
    double s = 0.0;
    std::array<double, kMaxPacked> d{};
    for (std::size_t y : nodes) {
      hessian_at(g, eta, {}, y, d);
      bool nonzero = false;
      for (int a = 0; a < m; ++a) nonzero = nonzero || d[a] != 0.0;
      if (!nonzero) continue;
      const SymMat f = flux(y);
      for (int a = 0; a < m; ++a) s += packed_weight(n, a) * f.packed(a) * d[a];
    }
    result[k] = hn * s;
  }
  return result;
}

}  // namespace

// ---------------------------------------------------------------------------
// boundary data

ClampedBoundaryData ClampedBoundaryData::from_function(const GridGeometry& g,
                                                       const std::function<double(const Point&)>& f) {
  ClampedBoundaryData bc;
  bc.geometry = g;
  bc.values.assign(g.node_count(), 0.0);
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    if (g.is_interior(i)) continue;
    const double v = f(g.position(i));
    if (!std::isfinite(v)) throw PreconditionError("boundary data must be finite");
    bc.values[i] = v;
  }
  return bc;
}

ClampedBoundaryData ClampedBoundaryData::from_grid(const ScalarGrid& u) {
  const GridGeometry& g = u.geometry();
  ClampedBoundaryData bc;
  bc.geometry = g;
  bc.values.assign(g.node_count(), 0.0);
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    if (g.is_interior(i)) continue;
    if (!u.valid(i) || !std::isfinite(u[i]))
      throw PreconditionError("boundary rings must be valid and finite");
    bc.values[i] = u[i];
  }
  return bc;
}

void ClampedBoundaryData::apply(ScalarGrid& u) const {
  if (!(u.geometry() == geometry)) throw PreconditionError("boundary data ring geometry does not match the grid");
  for (std::size_t i = 0; i < u.size(); ++i)
    if (!geometry.is_interior(i)) u[i] = values[i];
}

ScalarGrid ClampedBoundaryData::initial_guess(double interior) const {
  ScalarGrid u(geometry, interior);
  apply(u);
  return u;
}

bool ClampedBoundaryData::satisfied_by(const ScalarGrid& u, double tol) const {
  if (!(u.geometry() == geometry)) return false;
  for (std::size_t i = 0; i < u.size(); ++i)
    if (!geometry.is_interior(i) && !(std::fabs(u[i] - values[i]) <= tol)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// energy

double assemble_energy(const ScalarGrid& u, const EnergyModel& model) {
  const GridGeometry& g = u.geometry();
  require_model_dim(g, model.dim());
  require_all_valid(u);
  const Planes planes = detail::hessian_planes(g, u.values());
  if (auto bad = find_inadmissible(g, planes, [&](const SymMat& m) { return model.admissible(m); }))
    throw AdmissibilityError("Hessian outside the admissible set at " + describe_node(g, *bad), *bad);
  return energy_from_planes(g, planes, model);
}

std::vector<double> energy_gradient(const ScalarGrid& u, const EnergyModel& model) {
  const GridGeometry& g = u.geometry();
  require_model_dim(g, model.dim());
  require_all_valid(u);
  const Planes planes = detail::hessian_planes(g, u.values());
  if (auto bad = find_inadmissible(g, planes, [&](const SymMat& m) { return model.admissible(m); }))
    throw AdmissibilityError("Hessian outside the admissible set at " + describe_node(g, *bad), *bad);
  return gradient_from_planes(g, planes, model);
}

double interior_sup_norm(const GridGeometry& g, const std::vector<double>& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (g.is_interior(i)) s = std::max(s, std::fabs(v[i]));
  return s;
}

// ---------------------------------------------------------------------------
// Newton

SolveResult minimize_clamped(const EnergyModel& model, const ClampedBoundaryData& bc,
                             const ScalarGrid& init, const SolveOptions& opt) {
  const GridGeometry& g = init.geometry();
  require_model_dim(g, model.dim());
  require_all_valid(init);
  if (!(bc.geometry == g)) throw PreconditionError("boundary data ring geometry does not match the grid");
  double scale = 0.0;
  for (std::size_t i = 0; i < init.size(); ++i) scale = std::max(scale, std::fabs(init[i]));
  if (!bc.satisfied_by(init, 1e-12 * (1.0 + scale)))
    throw PreconditionError("initial guess does not satisfy the clamped boundary data");
  if (opt.max_iter < 0) throw PreconditionError("max_iter must be nonnegative");

  const double margin = opt.admissibility_margin;
  auto admissible = [&](const SymMat& m) { return model.admissible(m, margin); };
  const std::size_t unknowns = [&] {
    std::size_t c = 0;
    for (std::size_t i = 0; i < g.node_count(); ++i) c += g.is_interior(i) ? 1 : 0;
    return c;
  }();
  const int cg_max = opt.cg_max_iter > 0 ? opt.cg_max_iter : static_cast<int>(20 * unknowns);

  SolveResult res;
  res.u = init;
  SolveReport& rep = res.report;
  rep.cg_rel_tol = opt.cg_rel_tol;
  rep.cg_max_iter = cg_max;

  Planes planes = detail::hessian_planes(g, res.u.values());
  if (auto bad = find_inadmissible(g, planes, admissible))
    throw AdmissibilityError("initial Hessian outside the admissible set at " + describe_node(g, *bad),
                             *bad);
  double energy = energy_from_planes(g, planes, model);
  std::vector<double> grad = gradient_from_planes(g, planes, model);
  double gnorm = interior_sup_norm(g, grad);
  auto tolerance = [&](double e) { return opt.grad_tol > 0.0 ? opt.grad_tol : 1e-10 * (1.0 + std::fabs(e)); };
  rep.steps.push_back({0, energy, gnorm, 0.0, 0, 0.0});

  const auto& k = simd::active();
  const std::size_t n = g.node_count();
  int it = 0;
  while (gnorm > tolerance(energy) && it < opt.max_iter) {
    ++it;
    std::vector<Tensor4> tensors(n);
    parallel_for(n, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i)
        if (g.in_energy_region(i))
          tensors[i] = model.second_derivative_unchecked(matrix_at(planes, g.dim, i));
    });
    const Stiffness hess(g, std::move(tensors));
    std::vector<double> rhs(n), dir(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = -grad[i];
    const double gnorm2 = std::sqrt(k.dot(grad.data(), grad.data(), n));
    const CgOutcome cg =
        pcg(hess, rhs, dir, std::max(opt.cg_rel_tol * gnorm2, 0.1 * tolerance(energy)), cg_max);
    double slope = k.dot(grad.data(), dir.data(), n);
    if (!(slope < 0.0)) {
      // Inexact solve lost descent; fall back to steepest descent.
      for (std::size_t i = 0; i < n; ++i) dir[i] = -grad[i];
      slope = -gnorm2 * gnorm2;
    }

    double t = 1.0;
    bool accepted = false;
    bool blocked_by_admissibility = false;
    std::size_t blocked_node = 0;
    ScalarGrid trial = res.u;
    Planes trial_planes;
    double trial_energy = energy;
    std::vector<double> trial_grad;
    for (int bt = 0; bt <= opt.max_backtracks; ++bt, t *= 0.5) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = res.u[i] + t * dir[i];
      trial_planes = detail::hessian_planes(g, trial.values());
      if (auto bad = find_inadmissible(g, trial_planes, admissible)) {
        blocked_by_admissibility = true;
        blocked_node = *bad;
        continue;
      }
      blocked_by_admissibility = false;
      trial_energy = energy_from_planes(g, trial_planes, model);
      if (trial_energy <= energy + opt.armijo * t * slope) {
        accepted = true;
      } else if (std::fabs(trial_energy - energy) <= 1e-13 * (1.0 + std::fabs(energy))) {
        // Energy differences are at round-off; accept if the gradient shrinks.
        trial_grad = gradient_from_planes(g, trial_planes, model);
        accepted = interior_sup_norm(g, trial_grad) < gnorm;
      }
      if (accepted) break;
      trial_grad.clear();
    }
    if (!accepted) {
      if (blocked_by_admissibility)
        throw AdmissibilityError("step shortening stalled at the admissibility boundary at " +
                                     describe_node(g, blocked_node),
                                 blocked_node);
      throw ConvergenceError("line search failed to decrease the energy");
    }
    res.u = std::move(trial);
    planes = std::move(trial_planes);
    energy = trial_energy;
    grad = trial_grad.empty() ? gradient_from_planes(g, planes, model) : std::move(trial_grad);
    gnorm = interior_sup_norm(g, grad);
    rep.steps.push_back({it, energy, gnorm, t, cg.iterations, cg.residual});
  }
  rep.iterations = it;
  rep.energy = energy;
  rep.grad_norm = gnorm;
  rep.grad_tol = tolerance(energy);
  rep.converged = gnorm <= rep.grad_tol;
  rep.max_iter_reached = !rep.converged;
  return res;
}

// ---------------------------------------------------------------------------
// weak forms

std::vector<double> weak_residual(const ScalarGrid& u, const EnergyModel& model,
                                  const TestFunctionSet& tests) {
  const GridGeometry& g = u.geometry();
  require_model_dim(g, model.dim());
  std::array<double, kMaxPacked> d{};
  return pair_with_tests(g, tests, [&](std::size_t y) {
    if (!hessian_at(g, u.values(), u.valid_mask(), y, d))
      throw PreconditionError("Hessian of u undefined where a test function is supported");
    const SymMat m = SymMat::from_packed(g.dim, std::span<const double>(d.data(), packed_size(g.dim)));
    if (!model.admissible(m))
      throw AdmissibilityError("Hessian outside the admissible set at " + describe_node(g, y), y);
    return model.first_derivative_unchecked(m);
  });
}

std::vector<double> dd_weak_residual(const ScalarGrid& u, const DoubleDivergenceModel& model,
                                     const TestFunctionSet& tests) {
  const GridGeometry& g = u.geometry();
  require_model_dim(g, model.dim());
  std::array<double, kMaxPacked> d{};
  return pair_with_tests(g, tests, [&](std::size_t y) {
    if (!hessian_at(g, u.values(), u.valid_mask(), y, d))
      throw PreconditionError("Hessian of u undefined where a test function is supported");
    const SymMat m = SymMat::from_packed(g.dim, std::span<const double>(d.data(), packed_size(g.dim)));
    if (!model.admissible(m))
      throw AdmissibilityError("Hessian outside the admissible set at " + describe_node(g, y), y);
    return model.flux(m, m);
  });
}

Tensor4Field::Tensor4Field(GridGeometry geometry)
    : geom_(geometry), values_(geometry.node_count(), Tensor4(geometry.dim)),
      valid_(geometry.node_count(), 0) {}

Tensor4Field Tensor4Field::constant(GridGeometry geometry, const Tensor4& t) {
  if (t.dim() != geometry.dim) throw PreconditionError("tensor and grid dimensions differ");
  Tensor4Field f(geometry);
  std::fill(f.values_.begin(), f.values_.end(), t);
  std::fill(f.valid_.begin(), f.valid_.end(), 1);
  return f;
}

Tensor4Field linearized_coefficient_field(const EnergyModel& model, const ScalarGrid& u, int direction,
                                          double step, int quad_nodes) {
  const GridGeometry& g = u.geometry();
  require_model_dim(g, model.dim());
  if (direction < 0 || direction >= g.dim) throw PreconditionError("direction out of range");
  const double ratio = step / g.spacing;
  const int s = static_cast<int>(std::lround(ratio));
  if (s < 1 || std::fabs(ratio - s) > 1e-9 || s > g.boundary_width)
    throw PreconditionError("shift must be a positive multiple of the spacing within the ghost rings");
  const SymMatField hess = hessian_field(u);
  Tensor4Field out(g);
  const std::size_t shift = static_cast<std::size_t>(s) * g.stride(direction);
  std::vector<std::size_t> nodes;
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    const Index idx = g.multi(i);
    if (idx[direction] + s >= g.extents[direction]) continue;
    if (hess.valid(i) && hess.valid(i + shift)) nodes.push_back(i);
  }
  parallel_for(nodes.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const std::size_t i = nodes[k];
      out[i] = linearized_coefficients(model, hess.at(i), hess.at(i + shift), quad_nodes);
      out.set_valid(i, true);
    }
  });
  return out;
}

std::vector<double> linearized_residual(const ScalarGrid& f, const Tensor4Field& b,
                                        const TestFunctionSet& tests) {
  const GridGeometry& g = f.geometry();
  if (!(b.geometry() == g)) throw PreconditionError("coefficient field and f live on different grids");
  std::array<double, kMaxPacked> d{};
  return pair_with_tests(g, tests, [&](std::size_t y) {
    if (!hessian_at(g, f.values(), f.valid_mask(), y, d))
      throw PreconditionError("Hessian of f undefined where a test function is supported");
    if (!b.valid(y)) throw PreconditionError("coefficient field undefined where a test function is supported");
    return b[y].apply(SymMat::from_packed(g.dim, std::span<const double>(d.data(), packed_size(g.dim))));
  });
}

// ---------------------------------------------------------------------------

ScalarGrid solve_constant_coeff_bvp(const Tensor4& c0, const ClampedBoundaryData& bc, double rel_tol,
                                    LinearSolveReport* report) {
  const GridGeometry& g = bc.geometry;
  if (c0.dim() != g.dim) throw PreconditionError("tensor and grid dimensions differ");
  if (!c0.finite()) throw PreconditionError("coefficient tensor must be finite");
  Tensor4 sym(g.dim);
  for (int a = 0; a < sym.packed(); ++a)
    for (int b = 0; b < sym.packed(); ++b) sym(a, b) = 0.5 * (c0(a, b) + c0(b, a));
  if (!(legendre_min_eigenvalue(sym) > 0.0))
    throw PreconditionError("coefficient tensor fails the Legendre ellipticity check");

  const std::size_t n = g.node_count();
  std::vector<Tensor4> tensors(n, sym);
  const Stiffness a(g, std::move(tensors));

  // A (w0 + x) = 0 with w0 the ring data: A x = -A w0.
  ScalarGrid w = bc.initial_guess(0.0);
  std::vector<double> rhs(n);
  a.apply(w.values(), rhs);
  const auto& k = simd::active();
  for (double& v : rhs) v = -v;
  const double bnorm = std::sqrt(k.dot(rhs.data(), rhs.data(), n));
  std::vector<double> x(n, 0.0);
  std::size_t unknowns = 0;
  for (std::size_t i = 0; i < n; ++i) unknowns += g.is_interior(i) ? 1 : 0;
  const int max_iter = static_cast<int>(std::max<std::size_t>(1000, 20 * unknowns));
  CgOutcome cg;
  if (bnorm > 0.0) {
    cg = pcg(a, rhs, x, rel_tol * bnorm, max_iter);
    if (!cg.converged) throw ConvergenceError("conjugate gradients stagnated in the comparison problem");
  }
  if (report) {
    report->iterations = cg.iterations;
    report->relative_residual = bnorm > 0.0 ? cg.residual / bnorm : 0.0;
  }
  for (std::size_t i = 0; i < n; ++i)
    if (g.is_interior(i)) w[i] = x[i];
  return w;
}

}  // namespace hessvar
