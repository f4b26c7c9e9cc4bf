#include <doctest.h>

#include <cmath>
#include <random>
#include <string>

#include "hessvar/errors.hpp"
#include "hessvar/sampling.hpp"
#include "hessvar/solver.hpp"

using namespace hessvar;

namespace {

double cubic_target(const Point& x) { return x[0] * x[0] * x[0] * x[1]; }

// Naive quadratic energy with the stencils written out by hand.
double naive_quadratic_energy(const ScalarGrid& u) {
  const GridGeometry& g = u.geometry();
  const double h = g.spacing;
  const auto at = [&](int i, int j) { return u[g.linear({i, j, 0})]; };
  double e = 0.0;
  for (int i = 1; i < g.extents[0] - 1; ++i)
    for (int j = 1; j < g.extents[1] - 1; ++j) {
      const double u11 = (at(i + 1, j) - 2 * at(i, j) + at(i - 1, j)) / (h * h);
      const double u22 = (at(i, j + 1) - 2 * at(i, j) + at(i, j - 1)) / (h * h);
      const double u12 =
          (at(i + 1, j + 1) - at(i + 1, j - 1) - at(i - 1, j + 1) + at(i - 1, j - 1)) / (4 * h * h);
      e += 0.5 * (u11 * u11 + 2 * u12 * u12 + u22 * u22);
    }
  return h * h * e;
}

ScalarGrid random_grid(int dim, int nodes, double scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  ScalarGrid u = make_grid(dim, nodes, 1.0);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = scale * uni(rng);
  return u;
}

std::vector<double> compact_random(const GridGeometry& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<double> v(g.node_count(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i)
    if (g.is_interior(i)) v[i] = uni(rng);
  return v;
}

}  // namespace

TEST_CASE("energy of trivial fields") {
  const ScalarGrid zero = make_grid(2, 33, 1.0);
  CHECK(assemble_energy(zero, EnergyModel::quadratic(2)) == 0.0);
  // Area of the square: node measure of the energy region, O(h) from 4.
  std::vector<double> err;
  for (int nodes : {33, 65, 129}) {
    const ScalarGrid u = make_grid(2, nodes, 1.0);
    const double h = u.spacing();
    const double measure = h * h * (nodes - 2) * (nodes - 2);
    CHECK(assemble_energy(u, EnergyModel::area(2)) == doctest::Approx(measure).epsilon(1e-14));
    err.push_back(std::fabs(measure - 4.0));
  }
  CHECK(err[0] / err[1] == doctest::Approx(2.0).epsilon(0.05));
  CHECK(err[1] / err[2] == doctest::Approx(2.0).epsilon(0.05));

  ScalarGrid q = make_grid(2, 65, 1.0);
  q.fill([](const Point& x) { return 0.5 * x[0] * x[0]; });
  const double h = q.spacing();
  CHECK(assemble_energy(q, EnergyModel::quadratic(2)) == doctest::Approx(0.5 * h * h * 63 * 63));
}

TEST_CASE("quadratic energy matches the hand-written stencil") {
  const ScalarGrid u = random_grid(2, 13, 1.0, 4);
  CHECK(assemble_energy(u, EnergyModel::quadratic(2)) == doctest::Approx(naive_quadratic_energy(u)).epsilon(1e-13));
}

TEST_CASE("quadratic gradient is the composed bi-Laplacian stencil") {
  ScalarGrid u = random_grid(2, 13, 1.0, 8);
  const std::vector<double> grad = energy_gradient(u, EnergyModel::quadratic(2));
  const GridGeometry& g = u.geometry();
  // The naive energy is quadratic: the exact partial is a symmetric difference.
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (!g.is_interior(k)) {
      CHECK(grad[k] == 0.0);
      continue;
    }
    const double base = u[k];
    u[k] = base + 1.0;
    const double ep = naive_quadratic_energy(u);
    u[k] = base - 1.0;
    const double em = naive_quadratic_energy(u);
    u[k] = base;
    CHECK(grad[k] == doctest::Approx(0.5 * (ep - em)).epsilon(1e-10).scale(1.0));
  }
}

TEST_CASE("gradient matches finite differences of the energy") {
  for (int dim = 2; dim <= 3; ++dim) {
    const ScalarGrid u = random_grid(dim, 11, 0.002, 10 + dim);
    const EnergyModel model = EnergyModel::area(dim);
    const std::vector<double> grad = energy_gradient(u, model);
    for (int trial = 0; trial < 10; ++trial) {
      const std::vector<double> delta = compact_random(u.geometry(), 100 + trial);
      const auto energy_at = [&](double eps) {
        ScalarGrid v = u;
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += eps * delta[i];
        return assemble_energy(v, model);
      };
      const auto central = [&](double eps) { return (energy_at(eps) - energy_at(-eps)) / (2 * eps); };
      const double eps = 1e-4;
      const double fd = (4.0 * central(eps / 2) - central(eps)) / 3.0;
      double exact = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) exact += grad[i] * delta[i];
      CHECK(exact == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("admissibility violations name the node") {
  ScalarGrid u = make_grid(2, 17, 1.0);
  u.fill([](const Point& x) { return x[0] * x[0]; });
  const EnergyModel model = EnergyModel::area(2, 1.0);
  try {
    assemble_energy(u, model);
    FAIL("expected AdmissibilityError");
  } catch (const AdmissibilityError& e) {
    CHECK(e.node() >= 0);
    CHECK(std::string(e.what()).find("node") != std::string::npos);
  }
  CHECK_THROWS_AS(energy_gradient(u, model), AdmissibilityError);
}

TEST_CASE("clamped boundary data") {
  const GridGeometry g = make_geometry(2, 17, 1.0);
  const auto bc = ClampedBoundaryData::from_function(g, cubic_target);
  ScalarGrid u = bc.initial_guess(3.0);
  CHECK(bc.satisfied_by(u));
  CHECK(u[g.linear(g.center_index())] == 3.0);
  u[0] += 1e-3;
  CHECK_FALSE(bc.satisfied_by(u));
  bc.apply(u);
  CHECK(bc.satisfied_by(u));
  const auto again = ClampedBoundaryData::from_grid(u);
  CHECK(again.values[0] == bc.values[0]);
  const ScalarGrid wrong = make_grid(2, 17, 1.0);
  CHECK_THROWS_AS(minimize_clamped(EnergyModel::quadratic(2), bc, wrong), PreconditionError);
}

TEST_CASE("quadratic minimizer reproduces a biharmonic cubic") {
  const GridGeometry g = make_geometry(2, 33, 1.0);
  const auto bc = ClampedBoundaryData::from_function(g, cubic_target);
  const SolveResult r = minimize_clamped(EnergyModel::quadratic(2), bc, bc.initial_guess());
  CHECK(r.report.converged);
  CHECK(r.report.grad_norm <= r.report.grad_tol);
  double err = 0.0;
  for (std::size_t i = 0; i < r.u.size(); ++i)
    err = std::max(err, std::fabs(r.u[i] - cubic_target(g.position(i))));
  CHECK(err < 1e-9);
  // Strict decrease except for steps accepted at round-off level.
  for (std::size_t k = 1; k < r.report.steps.size(); ++k) {
    const double prev = r.report.steps[k - 1].energy;
    CHECK(r.report.steps[k].energy <= prev + 1e-13 * (1.0 + std::fabs(prev)));
  }
  CHECK(r.report.steps[1].energy < r.report.steps[0].energy);

  // The same minimizer from the linear solver.
  const ScalarGrid w = solve_constant_coeff_bvp(Tensor4::identity(2), bc);
  double diff = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) diff = std::max(diff, std::fabs(w[i] - r.u[i]));
  CHECK(diff < 1e-9);
}

TEST_CASE("trivial solves") {
  const GridGeometry g = make_geometry(2, 17, 1.0);
  const auto zero = ClampedBoundaryData::from_function(g, [](const Point&) { return 0.0; });
  ScalarGrid init = zero.initial_guess(0.1);
  const SolveResult r = minimize_clamped(EnergyModel::quadratic(2), zero, init);
  CHECK(interior_sup_norm(g, std::vector<double>(r.u.values().begin(), r.u.values().end())) < 1e-10);

  const auto quad = [](const Point& x) { return 0.2 * x[0] * x[0] - 0.1 * x[0] * x[1] + 0.3 * x[1] * x[1] + x[0]; };
  const auto bc = ClampedBoundaryData::from_function(g, quad);
  ScalarGrid q = make_grid(2, 17, 1.0);
  q.fill(quad);
  for (const EnergyModel& m : {EnergyModel::quadratic(2), EnergyModel::area(2)}) {
    const SolveResult s = minimize_clamped(m, bc, q);
    CHECK(s.report.converged);
    CHECK(s.report.iterations == 0);
  }
}

TEST_CASE("area minimizer is unique and satisfies the weak equation") {
  const GridGeometry g = make_geometry(2, 21, 1.0);
  const auto data = [](const Point& x) { return 0.15 * std::sin(x[0] + 0.5 * x[1]); };
  const auto bc = ClampedBoundaryData::from_function(g, data);
  const EnergyModel model = EnergyModel::area(2);
  const SolveResult a = minimize_clamped(model, bc, bc.initial_guess(0.0));
  const SolveResult b = minimize_clamped(model, bc, bc.initial_guess(0.05));
  REQUIRE(a.report.converged);
  REQUIRE(b.report.converged);
  double diff = 0.0;
  for (std::size_t i = 0; i < a.u.size(); ++i) diff = std::max(diff, std::fabs(a.u[i] - b.u[i]));
  CHECK(diff <= 10.0 * std::max(a.report.grad_tol, 1e-12) / (g.spacing * g.spacing));
  for (std::size_t k = 1; k < a.report.steps.size(); ++k)
    CHECK(a.report.steps[k].energy <= a.report.steps[k - 1].energy);

  // Nodal tests reproduce the gradient exactly.
  std::vector<std::size_t> nodes;
  for (std::size_t i = 0; i < g.node_count(); i += 7)
    if (g.is_interior(i)) nodes.push_back(i);
  const TestFunctionSet hats = TestFunctionSet::nodal_hats(g, nodes);
  const std::vector<double> res = weak_residual(a.u, model, hats);
  const std::vector<double> grad = energy_gradient(a.u, model);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    CHECK(std::fabs(res[k] - grad[nodes[k]]) <= 1e-14);
    CHECK(std::fabs(res[k]) <= a.report.grad_tol);
  }
}

TEST_CASE("weak residuals on smooth bumps decay with h") {
  std::vector<double> err;
  for (int nodes : {33, 65}) {
    ScalarGrid u = make_grid(2, nodes, 1.0);
    u.fill(cubic_target);
    const Point c{0.1, -0.2, 0.0};
    const TestFunctionSet bumps = TestFunctionSet::smooth_bumps(u.geometry(), std::span<const Point>(&c, 1), 0.5);
    const auto r = weak_residual(u, EnergyModel::quadratic(2), bumps);
    err.push_back(std::fabs(r[0]) / bumps.hessian_l1_norm(0));
  }
  // The cubic is reproduced exactly, so the residual is at round-off.
  CHECK(err[0] < 1e-10);
  CHECK(err[1] < 1e-10);
}

TEST_CASE("double-divergence residuals") {
  const GridGeometry g = make_geometry(2, 17, 1.0);
  const ScalarGrid u = random_grid(2, 17, 0.01, 30);
  TestFunctionSet tests(g);
  tests.add(compact_random(g, 31));
  tests.add(compact_random(g, 32));

  const auto id = DoubleDivergenceModel::constant(Tensor4::identity(2));
  const auto a = dd_weak_residual(u, id, tests);
  const auto b = weak_residual(u, EnergyModel::quadratic(2), tests);
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-12));

  // Constant Hessians pair to zero against compactly supported tests.
  ScalarGrid q = make_grid(2, 17, 1.0);
  q.fill([](const Point& x) { return 0.3 * x[0] * x[0] - 0.4 * x[0] * x[1]; });
  for (double r : dd_weak_residual(q, DoubleDivergenceModel::hamiltonian_stationary(2), tests))
    CHECK(std::fabs(r) < 1e-11);

  // Summation by parts: with constant symmetric T the pairing is symmetric.
  std::mt19937_64 rng(33);
  Tensor4 t = Tensor4::identity(2);
  const SymMat s = random_entries(2, 0.3, rng);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) t(i, j) += s.packed(std::min(i, j)) * s.packed(std::max(i, j));
  const auto tm = DoubleDivergenceModel::constant(t);
  ScalarGrid e1(g), e2(g);
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    e1[i] = tests[0][i];
    e2[i] = tests[1][i];
  }
  TestFunctionSet only1(g), only2(g);
  only1.add(std::vector<double>(tests[0].begin(), tests[0].end()));
  only2.add(std::vector<double>(tests[1].begin(), tests[1].end()));
  CHECK(dd_weak_residual(e1, tm, only2)[0] == doctest::Approx(dd_weak_residual(e2, tm, only1)[0]).epsilon(1e-12));
}

TEST_CASE("linearized residual matches a naive triple loop") {
  const GridGeometry g = make_geometry(2, 13, 1.0);
  const ScalarGrid f = random_grid(2, 13, 1.0, 40);
  std::mt19937_64 rng(41);
  Tensor4Field b(g);
  for (std::size_t i = 0; i < b.size(); ++i) {
    Tensor4 t(2);
    for (int p = 0; p < 3; ++p)
      for (int q = 0; q < 3; ++q) t(p, q) = std::uniform_real_distribution<double>(-1, 1)(rng);
    b[i] = t;
    b.set_valid(i, true);
  }
  TestFunctionSet tests(g);
  tests.add(compact_random(g, 42));
  const double res = linearized_residual(f, b, tests)[0];

  ScalarGrid eta(g);
  for (std::size_t i = 0; i < g.node_count(); ++i) eta[i] = tests[0][i];
  const SymMatField hf = hessian_field(f), he = hessian_field(eta);
  double naive = 0.0;
  for (std::size_t x = 0; x < g.node_count(); ++x) {
    if (!he.valid(x)) continue;
    const SymMat a = hf.at(x), e = he.at(x);
    for (int p = 0; p < 3; ++p)
      for (int q = 0; q < 3; ++q) naive += packed_weight(2, p) * packed_weight(2, q) * b[x](p, q) * a.packed(p) * e.packed(q);
  }
  naive *= g.spacing * g.spacing;
  CHECK(res == doctest::Approx(naive).epsilon(1e-12));

  ScalarGrid q = make_grid(2, 13, 1.0);
  q.fill([](const Point& x) { return x[0] * x[1] - x[1] * x[1]; });
  CHECK(std::fabs(linearized_residual(q, Tensor4Field::constant(g, Tensor4::identity(2)), tests)[0]) < 1e-11);

  Tensor4Field partial(g);
  CHECK_THROWS_AS(linearized_residual(f, partial, tests), PreconditionError);
}

TEST_CASE("difference quotients of a quadratic minimizer solve the linearized equation") {
  const GridGeometry g = make_geometry(2, 21, 1.0);
  const auto bc = ClampedBoundaryData::from_function(g, [](const Point& x) { return std::exp(x[0]) * std::sin(x[1]); });
  const SolveResult r = minimize_clamped(EnergyModel::quadratic(2), bc, bc.initial_guess());
  REQUIRE(r.report.converged);
  const double h = g.spacing;
  const ScalarGrid f = difference_quotient(r.u, 0, h);
  const Tensor4Field b = linearized_coefficient_field(EnergyModel::quadratic(2), r.u, 0, h);
  std::vector<std::size_t> nodes;
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    const Index idx = g.multi(i);
    if (idx[0] >= 4 && idx[0] <= 15 && idx[1] >= 4 && idx[1] <= 16 && (i % 5 == 0)) nodes.push_back(i);
  }
  const auto res = linearized_residual(f, b, TestFunctionSet::nodal_hats(g, nodes));
  for (double v : res) CHECK(std::fabs(v) <= 2.0 * r.report.grad_tol / h);
}

TEST_CASE("constant-coefficient comparison problem") {
  const GridGeometry g = make_geometry(2, 33, 1.0);
  const auto bc = ClampedBoundaryData::from_function(g, cubic_target);
  LinearSolveReport rep;
  const ScalarGrid w = solve_constant_coeff_bvp(Tensor4::identity(2), bc, 1e-12, &rep);
  CHECK(rep.relative_residual <= 1e-12);
  double err = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) err = std::max(err, std::fabs(w[i] - cubic_target(g.position(i))));
  CHECK(err < 1e-9);

  const ScalarGrid w5 = solve_constant_coeff_bvp(5.0 * Tensor4::identity(2), bc);
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(w5[i] == doctest::Approx(w[i]).scale(1.0).epsilon(1e-10));

  const auto zero = ClampedBoundaryData::from_function(g, [](const Point&) { return 0.0; });
  const ScalarGrid z = solve_constant_coeff_bvp(Tensor4::identity(2), zero);
  for (std::size_t i = 0; i < z.size(); ++i) CHECK(z[i] == 0.0);

  CHECK_THROWS_AS(solve_constant_coeff_bvp(-1.0 * Tensor4::identity(2), bc), PreconditionError);
}
