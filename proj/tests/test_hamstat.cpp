#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hessvar/errors.hpp"
#include "hessvar/hamstat.hpp"
#include "hessvar/sampling.hpp"

using namespace hessvar;

namespace {

SymMatField constant_field(const GridGeometry& g, const SymMat& m) {
  SymMatField f(g);
  f.fill([&](const Point&) { return m; });
  return f;
}

// Harmonic cubic Re((x1 + i x2)^3) scaled so |D^2u|_op <= 0.9 on [-1,1]^2.
double harmonic_cubic(const Point& x) { return 0.1 * (x[0] * x[0] * x[0] - 3.0 * x[0] * x[1] * x[1]); }

std::array<double, 9> dense(const SymMat& m) {
  std::array<double, 9> d{};
  const int n = m.dim();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) d[i * 3 + j] = m(std::min(i, j), std::max(i, j));
  return d;
}

}  // namespace

TEST_CASE("induced metric") {
  const GridGeometry g = make_geometry(3, 11, 1.0);
  const MetricField flat = induced_metric(constant_field(g, SymMat(3)));
  const std::size_t c = g.linear(g.center_index());
  CHECK(flat.sqrt_det[c] == 1.0);
  CHECK(flat.g[c] == SymMat::identity(3));

  const std::array<double, 2> ab{0.5, -2.0};
  const MetricField diag = induced_metric(constant_field(make_geometry(2, 11, 1.0), SymMat::diagonal(ab)));
  CHECK(diag.g[0](0, 0) == doctest::Approx(1.25));
  CHECK(diag.g[0](1, 1) == doctest::Approx(5.0));
  CHECK(diag.g[0](0, 1) == 0.0);
  CHECK(diag.sqrt_det[0] == doctest::Approx(std::sqrt(1.25 * 5.0)));

  // Dense oracle: g = I + M M, g g^{-1} = I.
  std::mt19937_64 rng(1);
  SymMatField f(g);
  for (std::size_t i = 0; i < f.size(); ++i) {
    f.set(i, random_entries(3, 2.0, rng));
    f.set_valid(i, true);
  }
  const MetricField m = induced_metric(f);
  for (std::size_t i = 0; i < f.size(); i += 37) {
    const auto a = dense(f.at(i)), gi = dense(m.g_inv[i]);
    std::array<double, 9> gd{};
    for (int r = 0; r < 3; ++r)
      for (int s = 0; s < 3; ++s) {
        double v = r == s ? 1.0 : 0.0;
        for (int k = 0; k < 3; ++k) v += a[r * 3 + k] * a[k * 3 + s];
        gd[r * 3 + s] = v;
        CHECK(m.g[i](std::min(r, s), std::max(r, s)) == doctest::Approx(v).epsilon(1e-13));
      }
    for (int r = 0; r < 3; ++r)
      for (int s = 0; s < 3; ++s) {
        double v = 0.0;
        for (int k = 0; k < 3; ++k) v += gd[r * 3 + k] * gi[k * 3 + s];
        CHECK(std::fabs(v - (r == s ? 1.0 : 0.0)) < 1e-12);
      }
    const double det = gd[0] * (gd[4] * gd[8] - gd[5] * gd[7]) - gd[1] * (gd[3] * gd[8] - gd[5] * gd[6]) +
                       gd[2] * (gd[3] * gd[7] - gd[4] * gd[6]);
    CHECK(m.sqrt_det[i] == doctest::Approx(std::sqrt(det)).epsilon(1e-12));
    CHECK(m.sqrt_det[i] >= 1.0);
  }
}

TEST_CASE("volume integrand") {
  CHECK(volume_integrand(SymMat(2)) == 1.0);
  CHECK(volume_integrand(SymMat::identity(2)) == doctest::Approx(2.0));
  std::mt19937_64 rng(2);
  for (int k = 0; k < 50; ++k) {
    const SymMat m = random_entries(3, 3.0, rng);
    const auto l = eigenvalues(m);
    const double oracle = std::sqrt((1 + l[0] * l[0]) * (1 + l[1] * l[1]) * (1 + l[2] * l[2]));
    CHECK(volume_integrand(m) == doctest::Approx(oracle).epsilon(1e-12));
  }
}

TEST_CASE("Lagrangian phase") {
  CHECK(phase_of(SymMat(2)) == 0.0);
  CHECK(phase_of(SymMat::identity(2)) == doctest::Approx(std::numbers::pi / 2));
  std::mt19937_64 rng(3);
  for (int k = 0; k < 50; ++k) {
    const int n = 2 + k % 2;
    const SymMat m = random_entries(n, 50.0, rng);
    const double theta = phase_of(m);
    CHECK(std::fabs(theta) < n * std::numbers::pi / 2);
    // Rotation invariance via a random orthogonal conjugation.
    const auto q = random_rotation(n, rng);
    const auto l = eigenvalues(m);
    const SymMat r = rotate_diagonal(n, std::span<const double>(l.data(), n), q);
    CHECK(phase_of(r) == doctest::Approx(theta).epsilon(1e-12));
    CHECK(volume_integrand(r) == doctest::Approx(volume_integrand(m)).epsilon(1e-12));
  }

  ScalarGrid u = make_grid(2, 65, 1.0);
  u.fill(harmonic_cubic);
  const PhaseField p = lagrangian_phase(hessian_field(u));
  double sup = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!p.theta.valid(i)) continue;
    sup = std::max(sup, std::fabs(p.theta[i]));
    CHECK(p.eigenvalues[i][0] == doctest::Approx(-p.eigenvalues[i][1]).scale(1.0).epsilon(1e-12));
  }
  CHECK(sup <= 1e-12);
}

TEST_CASE("Laplace-Beltrami on flat and conformal metrics") {
  const GridGeometry g = make_geometry(2, 33, 1.0);
  ScalarGrid phi(g);
  for (std::size_t i = 0; i < phi.size(); ++i) phi.set_valid(i, true);

  const MetricField flat = induced_metric(constant_field(g, SymMat(2)));
  phi.fill([](const Point& x) { return x[0] * x[0]; });
  ScalarGrid lb = laplace_beltrami(phi, flat);
  std::size_t valid = 0;
  for (std::size_t i = 0; i < lb.size(); ++i) {
    if (!lb.valid(i)) continue;
    ++valid;
    CHECK(lb[i] == doctest::Approx(2.0).epsilon(1e-10));
  }
  CHECK(valid > 0u);
  phi.fill([](const Point& x) { return x[0] * x[0] - x[1] * x[1]; });
  lb = laplace_beltrami(phi, flat);
  for (std::size_t i = 0; i < lb.size(); ++i)
    if (lb.valid(i)) CHECK(std::fabs(lb[i]) < 1e-10);

  // g = c I from M = sqrt(c - 1) I: Delta_g phi = Delta phi / c.
  const double cfac = 3.0;
  const SymMat m = std::sqrt(cfac - 1.0) * SymMat::identity(2);
  const SymMatField hm = constant_field(g, m);
  const MetricField conf = induced_metric(hm);
  phi.fill([](const Point& x) { return x[0] * x[0] + x[0] * x[1]; });
  lb = laplace_beltrami(phi, conf);
  ScalarGrid theta(g, phase_of(m));
  for (std::size_t i = 0; i < theta.size(); ++i) theta.set_valid(i, true);
  const ScalarGrid ex = laplace_beltrami_expanded(phi, hm, theta);
  for (std::size_t i = 0; i < lb.size(); ++i) {
    if (!lb.valid(i)) continue;
    CHECK(lb[i] == doctest::Approx(2.0 / cfac).epsilon(1e-10));
    if (ex.valid(i)) CHECK(ex[i] == doctest::Approx(2.0 / cfac).epsilon(1e-10));
  }
}

TEST_CASE("flux and expanded forms agree on a curved graph") {
  std::vector<double> err;
  for (int nodes : {33, 65}) {
    ScalarGrid u = make_grid(2, nodes, 1.0);
    u.fill([](const Point& x) { return 0.1 * std::sin(x[0]) * std::cos(0.5 * x[1]); });
    const SymMatField h = hessian_field(u);
    const PhaseField p = lagrangian_phase(h);
    ScalarGrid phi(u.geometry());
    phi.fill([](const Point& x) { return x[0] * x[0] * x[1]; });
    for (std::size_t i = 0; i < phi.size(); ++i) phi.set_valid(i, true);
    const ScalarGrid a = laplace_beltrami(phi, induced_metric(h));
    const ScalarGrid b = laplace_beltrami_expanded(phi, h, p.theta);
    double e = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a.valid(i) && b.valid(i)) e = std::max(e, std::fabs(a[i] - b[i]));
    err.push_back(e);
  }
  CHECK(err[1] < err[0]);
  CHECK(err[1] < 1e-3);
}

TEST_CASE("hstat residual is the area-model Euler-Lagrange pairing") {
  const GridGeometry g = make_geometry(2, 17, 1.0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const EnergyModel area = EnergyModel::area(2);
  for (int trial = 0; trial < 20; ++trial) {
    ScalarGrid u(g);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = 0.01 * uni(rng);
    TestFunctionSet tests(g);
    std::vector<double> eta(g.node_count(), 0.0);
    for (std::size_t i = 0; i < eta.size(); ++i)
      if (g.is_interior(i)) eta[i] = uni(rng);
    tests.add(eta);
    const double r = hamstat_residual(u, tests)[0];
    const std::vector<double> grad = energy_gradient(u, area);
    double pairing = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < eta.size(); ++i) {
      pairing += grad[i] * eta[i];
      scale += std::fabs(grad[i] * eta[i]);
    }
    CHECK(std::fabs(r - pairing) <= 1e-12 * scale);
  }
}

TEST_CASE("hstat residual of special Lagrangian and quadratic graphs") {
  ScalarGrid q = make_grid(2, 33, 1.0);
  q.fill([](const Point& x) { return 0.3 * x[0] * x[0] + 0.2 * x[0] * x[1] - 0.1 * x[1] * x[1]; });
  const Point c0{0.0, 0.0, 0.0};
  const auto bump = TestFunctionSet::smooth_bumps(q.geometry(), std::span<const Point>(&c0, 1), 0.5);
  CHECK(std::fabs(hamstat_residual(q, bump)[0]) < 1e-12);
  const ResidualSummary rq = phase_harmonicity_residual(q);
  CHECK(rq.sup < 1e-10);
  CHECK(rq.nodes > 0u);

  // In 2D, trace-free Hessians give a(M) M = M, so on the harmonic cubic the
  // residual is the discrete bi-Laplacian pairing of a cubic: round-off.
  // A non-polynomial harmonic potential shows the genuine O(h^2) decay.
  std::vector<double> err;
  for (int nodes : {17, 33, 65}) {
    const Point c{0.1, -0.05, 0.0};
    ScalarGrid u = make_grid(2, nodes, 1.0);
    u.fill(harmonic_cubic);
    const auto tests = TestFunctionSet::smooth_bumps(u.geometry(), std::span<const Point>(&c, 1), 0.5);
    CHECK(std::fabs(hamstat_residual(u, tests)[0]) < 1e-13);
    u.fill([](const Point& x) { return 0.1 * std::exp(x[0]) * std::cos(x[1]); });
    err.push_back(std::fabs(hamstat_residual(u, tests)[0]) / tests.hessian_l1_norm(0));
  }
  CHECK(std::log2(err[0] / err[1]) >= 1.8);
  CHECK(std::log2(err[1] / err[2]) >= 1.8);

  ScalarGrid u = make_grid(2, 65, 1.0);
  u.fill(harmonic_cubic);
  CHECK(phase_harmonicity_residual(u).sup < 1e-9);
}

TEST_CASE("closed-form derivatives of the volume in the eigenvalues") {
  const VolumeDerivatives zero = closed_form_dV({0.0, 0.0});
  CHECK(zero.v == 1.0);
  CHECK(zero.first[0] == 0.0);
  CHECK(zero.second[0] == 1.0);
  CHECK(zero.second[1] == 0.0);

  const VolumeDerivatives one = closed_form_dV({1.0, 1.0});
  CHECK(one.v == doctest::Approx(2.0));
  CHECK(one.e[0] == doctest::Approx(0.5));
  CHECK(one.second[1] == doctest::Approx(0.5));
  CHECK(one.second[0] == doctest::Approx(0.5));

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> uni(-2.0, 2.0);
  for (int k = 0; k < 50; ++k) {
    const int n = 2 + k % 2;
    std::vector<double> l(n);
    for (double& x : l) x = uni(rng);
    const VolumeDerivatives d = closed_form_dV(l);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double identity = d.e[i] * d.e[j] + (i == j ? 1.0 / (1 + l[i] * l[i]) - 2 * d.e[i] * d.e[i] : 0.0);
        CHECK(d.second[i * n + j] / d.v == doctest::Approx(identity).epsilon(1e-14));
      }
    // Finite differences of the volume integrand along diagonal perturbations.
    const auto vol = [&](std::vector<double> x) { return volume_integrand(SymMat::diagonal(std::span<const double>(x.data(), n))); };
    const double eps = 1e-4;
    for (int i = 0; i < n; ++i) {
      auto p = l, m = l;
      p[i] += eps;
      m[i] -= eps;
      CHECK(d.first[i] == doctest::Approx((vol(p) - vol(m)) / (2 * eps)).epsilon(1e-7));
    }
  }
}

TEST_CASE("convexity certificate") {
  CHECK(convexity_bound(1.0) == 1.0);
  CHECK(convexity_bound(0.1) == doctest::Approx(0.19 / (1.81 * 1.81)));
  CHECK(convexity_bound(0.1) == doctest::Approx(0.0580).epsilon(1e-3));

  const ConvexityCertificate trivial = convexity_certificate(1.0, 2, 10, 1);
  CHECK(trivial.min_eig == doctest::Approx(1.0));
  CHECK(trivial.c_eta == 1.0);

  const ConvexityCertificate c = convexity_certificate(0.1, 2, 1000, 7);
  CHECK(c.samples == 1000);
  CHECK(c.diagonal_check);
  CHECK(c.min_eig > 0.0);
  CHECK(c.diagonal_min >= c.c_eta - 1e-12);
  CHECK(operator_norm(c.worst) <= 0.9 + 1e-12);
  const ConvexityCertificate again = convexity_certificate(0.1, 2, 1000, 7);
  CHECK(again.min_eig == c.min_eig);

  for (int n : {2, 3}) {
    const ConvexityCertificate k = convexity_certificate(0.25, n, 2000, 11);
    CHECK(k.min_eig >= 0.0);
    CHECK(k.diagonal_check);
  }
  CHECK_THROWS_AS(convexity_certificate(0.0, 2, 10, 1), PreconditionError);
}
