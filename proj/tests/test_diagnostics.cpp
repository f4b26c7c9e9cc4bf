#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hessvar/diagnostics.hpp"
#include "hessvar/errors.hpp"
#include "hessvar/solver.hpp"

using namespace hessvar;

namespace {

// |A|_F = 1.
SymMat unit_matrix(int n) {
  SymMat a(n);
  a.set(0, 0, 0.6);
  a.set(0, 1, 0.4);
  a.set(1, 1, std::sqrt(1.0 - 0.36 - 2 * 0.16));
  return a;
}

SymMatField scalar_times(const GridGeometry& g, const std::function<double(const Point&)>& s,
                         const SymMat& a) {
  SymMatField f(g);
  f.fill([&](const Point& x) { return s(x) * a; });
  return f;
}

SymMatField random_field(const GridGeometry& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  SymMatField f(g);
  for (std::size_t i = 0; i < f.size(); ++i) {
    for (int a = 0; a < f.components(); ++a) f.plane(a)[i] = uni(rng);
    f.set_valid(i, true);
  }
  return f;
}

SymMatField plus_constant(SymMatField f, const SymMat& c) {
  for (std::size_t i = 0; i < f.size(); ++i)
    for (int a = 0; a < f.components(); ++a) f.plane(a)[i] += c.packed(a);
  return f;
}

}  // namespace

TEST_CASE("mean oscillation closed forms") {
  const GridGeometry g = make_geometry(2, 129, 1.0);
  const SymMat a = 2.0 * unit_matrix(2);
  const Index c = g.center_index();
  const Ball ball{c, 0.25};  // 16 h

  const SymMatField constant = scalar_times(g, [](const Point&) { return 1.0; }, a);
  for (double p : {1.0, 2.0, 3.5}) CHECK(mean_oscillation(constant, ball, p) == 0.0);

  // Mean of |x1| over a disk of radius rho is 4 rho / (3 pi).
  const SymMatField linear = scalar_times(g, [](const Point& x) { return x[0]; }, a);
  CHECK(mean_oscillation(linear, ball, 1.0) == doctest::Approx(2.0 * 0.25 * 4.0 / (3.0 * std::numbers::pi)).epsilon(0.03));

  const SymMatField jump = scalar_times(g, [](const Point& x) { return x[0] > 0 ? 1.0 : (x[0] < 0 ? -1.0 : 0.0); }, a);
  CHECK(mean_oscillation(jump, ball, 1.0) == doctest::Approx(2.0).epsilon(2.0 * g.spacing / 0.25));

  CHECK_THROWS_AS(mean_oscillation(linear, ball, 0.5), PreconditionError);
  CHECK_THROWS_AS(mean_oscillation(linear, Ball{c, 2.0}, 1.0), PreconditionError);
}

TEST_CASE("power means are monotone in p") {
  const GridGeometry g = make_geometry(3, 17, 1.0);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const SymMatField f = random_field(g, seed);
    const Ball ball{g.center_index(), 0.5};
    double last = 0.0;
    for (double p : {1.0, 2.0, 3.0}) {
      const double m = std::pow(mean_oscillation(f, ball, p), 1.0 / p);
      CHECK(m >= last * (1.0 - 1e-14));
      last = m;
    }
  }
}

TEST_CASE("BMO modulus") {
  const GridGeometry g = make_geometry(2, 65, 1.0);
  BallFamilyRule rule;
  rule.center_stride = 8;
  rule.r_min = 0.125;
  rule.r_max = 0.5;
  rule.container_half_width = 0.5;
  const BallFamily family = ball_family(g, rule);
  const SymMat a = unit_matrix(2);

  CHECK(bmo_modulus(scalar_times(g, [](const Point&) { return 3.0; }, a), family).omega == 0.0);

  const SymMatField f = random_field(g, 3);
  const BmoResult base = bmo_modulus(f, family);
  CHECK(base.balls == family.balls.size());
  SymMat shift(2);
  shift.packed(0) = 0.5;
  shift.packed(1) = -0.25;
  CHECK(bmo_modulus(plus_constant(f, shift), family).omega == doctest::Approx(base.omega).epsilon(1e-13));
  SymMatField doubled(g);
  for (std::size_t i = 0; i < f.size(); ++i) {
    doubled.set(i, 2.0 * f.at(i));
    doubled.set_valid(i, true);
  }
  CHECK(bmo_modulus(doubled, family).omega == 2.0 * base.omega);

  BallFamily subset = family;
  subset.balls.resize(family.balls.size() / 2);
  CHECK(bmo_modulus(f, subset).omega <= base.omega);

  // Linear field: attained at the largest ball, proportional to its radius.
  const SymMatField lin = scalar_times(g, [](const Point& x) { return x[0] + 0.5 * x[1]; }, a);
  BallFamilyRule centre{0, 0.125, 0.5, 0.0};
  const BmoResult big = bmo_modulus(lin, ball_family(g, centre));
  CHECK(big.ball.radius == doctest::Approx(0.5));
  centre.r_max = 0.25;
  const BmoResult small = bmo_modulus(lin, ball_family(g, centre));
  CHECK(big.omega / small.omega == doctest::Approx(2.0).epsilon(0.03));
}

TEST_CASE("John-Nirenberg ratio") {
  const GridGeometry g = make_geometry(2, 65, 1.0);
  BallFamilyRule rule{4, 0.125, 0.5, 0.5};
  const BallFamily family = ball_family(g, rule);
  const SymMat a = unit_matrix(2);
  const JohnNirenbergResult deg = john_nirenberg_ratio(scalar_times(g, [](const Point&) { return 1.0; }, a), family, 2.0);
  CHECK(deg.degenerate);
  CHECK(deg.verdict == "zero oscillation");

  const SymMatField f = random_field(g, 4);
  CHECK(john_nirenberg_ratio(f, family, 1.0).cbar == doctest::Approx(1.0));

  std::vector<double> cbar;
  for (int nodes : {65, 129}) {
    const GridGeometry gg = make_geometry(2, nodes, 1.0);
    const SymMatField lin = scalar_times(gg, [](const Point& x) { return x[0] * x[0] - x[1]; }, a);
    cbar.push_back(john_nirenberg_ratio(lin, ball_family(gg, BallFamilyRule{(nodes - 1) / 16, 0.125, 0.5, 0.5}), 2.0).cbar);
  }
  CHECK(std::isfinite(cbar[0]));
  CHECK(cbar[1] == doctest::Approx(cbar[0]).epsilon(0.1));
}

TEST_CASE("power-law fits") {
  const std::vector<double> x{1.0, 2.0, 4.0, 8.0};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::pow(v, 2.5));
  const DecayFit fit = fit_power_law(x, y);
  CHECK(fit.slope == doctest::Approx(2.5));
  CHECK(fit.constant == doctest::Approx(3.0));
  CHECK(fit.residual < 1e-12);
  y[1] = 0.0;
  CHECK(fit_power_law(x, y).degenerate);
  CHECK_THROWS_AS(fit_power_law({1.0, 2.0}, {1.0, 2.0}), PreconditionError);
}

TEST_CASE("Campanato decay") {
  const GridGeometry g = make_geometry(2, 129, 1.0);
  const Index c = g.center_index();
  const std::vector<double> radii{0.25, 0.125, 0.0625, 0.03125 * 1.5};
  const SymMat a = unit_matrix(2);

  const CampanatoResult zero = campanato_decay(scalar_times(g, [](const Point&) { return 1.0; }, a), c, radii, 2.0);
  CHECK(zero.fit.degenerate);

  const SymMatField lin = scalar_times(g, [](const Point& x) { return 2.0 * x[0] - x[1]; }, a);
  for (double p : {1.0, 2.0, 3.0}) {
    const CampanatoResult r = campanato_decay(lin, c, radii, p);
    CHECK(r.fit.slope == doctest::Approx(2.0 + p).epsilon(0.1 / (2.0 + p)));
    CHECK(r.curve.radii.front() > r.curve.radii.back());
  }
  SymMat shift(2);
  shift.packed(2) = 7.0;
  const CampanatoResult r1 = campanato_decay(lin, c, radii, 2.0);
  const CampanatoResult r2 = campanato_decay(plus_constant(lin, shift), c, radii, 2.0);
  for (std::size_t k = 0; k < radii.size(); ++k)
    CHECK(r2.curve.integrals[k] == doctest::Approx(r1.curve.integrals[k]).epsilon(1e-10));
  CHECK_THROWS_AS(campanato_decay(lin, c, {0.25, 0.125}, 2.0), PreconditionError);
}

TEST_CASE("reverse Hoelder constants") {
  CHECK(gehring_exponent(2) == 1.0);
  CHECK(gehring_exponent(3) == doctest::Approx(1.2));
  const GridGeometry g = make_geometry(3, 33, 1.0);
  const SymMatField f = scalar_times(g, [](const Point&) { return -2.0; }, SymMat::identity(3));
  const ReverseHolderResult r = reverse_holder_check(f, {g.center_index()}, {0.2, 0.3});
  CHECK(r.pbar == doctest::Approx(1.2));
  for (const auto& e : r.entries) CHECK(e.constant == doctest::Approx(1.0).epsilon(1e-13));
  const SymMatField z(g);
  SymMatField zero = z;
  for (std::size_t i = 0; i < zero.size(); ++i) zero.set_valid(i, true);
  CHECK(reverse_holder_check(zero, {g.center_index()}, {0.2}).any_degenerate);
}

TEST_CASE("higher-integrability exponent") {
  const GridGeometry g = make_geometry(2, 257, 1.0);
  const Index c = g.center_index();
  const std::vector<double> radii{0.4, 0.2, 0.1, 0.05};
  const SymMat a = unit_matrix(2);

  const P0Estimate flat = fit_p0(scalar_times(g, [](const Point&) { return 2.0; }, a), c, radii);
  CHECK(flat.certified);
  CHECK(flat.p0 == doctest::Approx(4.0));

  // Bounded field: K_p <= sup|f| / min_r (mean |f|^2 on B_r)^{1/2}.
  const SymMatField bounded = scalar_times(g, [](const Point& x) { return 1.0 + x[0] * x[0]; }, a);
  const P0Estimate b = fit_p0(bounded, c, radii);
  CHECK(b.p0 == doctest::Approx(4.0));
  for (double k : b.constants) CHECK(k <= 1.0 + 0.16 + 1e-12);

  // Spike |x - s|^{-2/5}, singular between nodes: in L^q only for q < 5.
  // Continuum K_p = (1 - p/5)^{-1/p} (3/5)^{1/2} (r_max / r_min)^{2/5}.
  const double h = g.spacing;
  const SymMatField spike = scalar_times(g, [&](const Point& x) {
    return std::pow(std::hypot(x[0] - 0.5 * h, x[1] - 0.5 * h), -0.4);
  }, a);
  const auto oracle = [](double p) { return std::pow(1.0 - p / 5.0, -1.0 / p) * std::sqrt(0.6) * std::pow(8.0, 0.4); };
  P0Options opts;
  for (int k = 21; k <= 49; ++k) opts.scan.push_back(k / 10.0);
  const P0Estimate wide = fit_p0(spike, c, radii, opts);
  CHECK(wide.certified);
  for (std::size_t k = 0; k < wide.scan.size(); ++k) {
    if (k > 0) CHECK(wide.constants[k] > wide.constants[k - 1]);
    if (wide.scan[k] > 4.0 + 1e-9) continue;
    CHECK(wide.constants[k] == doctest::Approx(oracle(wide.scan[k])).epsilon(0.1));
  }
  // Near p = 5 the grid caps the singularity, so the discrete K_p grows more
  // slowly than the continuum; a K_max between the two regimes still cuts the
  // scan off before 5.
  opts.k_max = oracle(3.5);
  const P0Estimate tight = fit_p0(spike, c, radii, opts);
  CHECK(tight.certified);
  CHECK(tight.p0 >= 3.0);
  CHECK(tight.p0 < 4.9);
  CHECK(tight.constants.back() > opts.k_max);
  // Default K_max certifies the whole default scan.
  CHECK(fit_p0(spike, c, radii).p0 == doctest::Approx(4.0));

  opts.k_max = 0.5;
  const P0Estimate none = fit_p0(spike, c, radii, opts);
  CHECK_FALSE(none.certified);
  CHECK(none.verdict == "no exponent certified");
}

TEST_CASE("singular set of a hyperplane jump") {
  const GridGeometry g = make_geometry(2, 129, 1.0);
  const double h = g.spacing;
  const SymMat a = unit_matrix(2);
  // Jump across x1 = h/2, between two node columns.
  const SymMatField jump = scalar_times(g, [&](const Point& x) { return x[0] > 0.5 * h ? 1.0 : -1.0; }, a);
  const double p0 = 2.0;
  // Continuum r^{-n} int |f - avg|^{p0} at the jump is |A|^{p0} |B_1| for unit |A|... with +-A, |2A|^2/4 * 4 = pi.
  const double tau = 0.5 * std::numbers::pi;
  const SingularMask m = singular_set(jump, p0, {4 * h, 3 * h}, tau);
  std::size_t near = 0, near_hit = 0, far = 0, far_hit = 0;
  for (std::size_t i = 0; i < m.mask.size(); ++i) {
    if (!m.defined[i]) continue;
    const double d = std::fabs(g.position(i)[0] - 0.5 * h);
    if (d <= h) {
      ++near;
      near_hit += m.mask[i];
    } else if (d > 4 * h) {
      ++far;
      far_hit += m.mask[i];
    }
  }
  REQUIRE(near > 0);
  CHECK(double(near_hit) >= 0.9 * near);
  CHECK(double(far_hit) <= 0.05 * far);
  const BoxDimension bd = box_counting_dimension(m);
  CHECK_FALSE(bd.empty);
  CHECK(bd.dimension == doctest::Approx(1.0).epsilon(0.3));

  SymMat shift(2);
  shift.packed(0) = 0.75;
  CHECK(singular_set(plus_constant(jump, shift), p0, {4 * h, 3 * h}, tau).mask == m.mask);
  SymMatField scaled(g);
  for (std::size_t i = 0; i < jump.size(); ++i) {
    scaled.set(i, -3.0 * jump.at(i));
    scaled.set_valid(i, true);
  }
  CHECK(singular_set(scaled, p0, {4 * h, 3 * h}, 9.0 * tau).mask == m.mask);

  const SymMatField smooth = scalar_times(g, [](const Point&) { return 0.3; }, a);
  const SingularMask s = singular_set(smooth, p0, {0.125, 0.0625}, 1e-6);
  CHECK(s.count == 0u);
  CHECK(box_counting_dimension(s).empty);
  CHECK_THROWS_AS(singular_set(jump, p0, {4 * h, 2 * h}, tau), PreconditionError);
}

TEST_CASE("Hoelder seminorm estimates") {
  const GridGeometry g = make_geometry(2, 21, 1.0);
  const SymMat a = unit_matrix(2);
  CHECK(holder_seminorm(scalar_times(g, [](const Point&) { return 5.0; }, a), 0.5, 500).seminorm == 0.0);

  const SymMatField lin = scalar_times(g, [](const Point& x) { return x[0]; }, a);
  // Exhaustive oracle over the same region.
  const double half = 0.75 * g.interior_half_width() * (1.0 + 1e-12);
  std::vector<std::size_t> region;
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    const Point x = g.position(i);
    if (g.is_interior(i) && std::fabs(x[0]) <= half && std::fabs(x[1]) <= half) region.push_back(i);
  }
  double best = 0.0;
  for (std::size_t i : region)
    for (std::size_t j : region) {
      if (i == j) continue;
      const Point x = g.position(i), y = g.position(j);
      best = std::max(best, std::fabs(x[0] - y[0]) / std::sqrt(std::hypot(x[0] - y[0], x[1] - y[1])));
    }
  const HolderEstimate est = holder_seminorm(lin, 0.5, 300, 7);
  CHECK(est.seminorm <= best * (1.0 + 1e-12));
  CHECK(est.seminorm >= 0.9 * best);
  CHECK(est.pairs > 0u);
  const HolderEstimate again = holder_seminorm(lin, 0.5, 300, 7);
  CHECK(again.seminorm == est.seminorm);

  const GridGeometry wide = make_geometry(2, 41, 2.0);
  const SymMatField lw = scalar_times(wide, [](const Point& x) { return x[0] - 2.0 * x[1]; }, a);
  double last = std::numeric_limits<double>::infinity();
  for (double alpha : {0.2, 0.4, 0.6, 0.8}) {
    const double s = holder_seminorm(lw, alpha, 400, 1).seminorm;
    CHECK(s <= last);
    last = s;
  }
  CHECK_THROWS_AS(holder_seminorm(lin, 1.0, 10), PreconditionError);
}

TEST_CASE("iteration lemma checker") {
  IterationLemmaInput in;
  in.A = 1.0;
  in.kappa = 4.0;
  in.gamma = 2.0;
  for (int k = 0; k < 10; ++k) {
    const double r = std::pow(0.5, k);
    in.radii.push_back(r);
    in.phi.push_back(std::pow(r, in.kappa));
  }
  const IterationLemmaResult power = iteration_lemma_check(in);
  CHECK(power.theta == doctest::Approx(std::pow(2.0, -0.5)));
  CHECK(power.epsilon0 == doctest::Approx(0.25));
  CHECK(power.epsilon <= 1e-12);
  CHECK(power.hypothesis_ok);
  CHECK(power.pairs > 0u);
  // (tau/r)^kappa / (tau/r)^gamma is largest at tau = theta r.
  CHECK(power.c <= std::pow(power.theta, 2.0) * (1.0 + 1e-12));
  CHECK(std::isfinite(power.c));

  IterationLemmaInput flat = in;
  for (double& v : flat.phi) v = 1.0;
  // With phi constant the extracted epsilon is 1/A - theta^kappa, which
  // exceeds epsilon0 = theta^kappa once A >= 1/2.
  flat.A = 2.0;
  const IterationLemmaResult f = iteration_lemma_check(flat);
  CHECK_FALSE(f.hypothesis_ok);
  CHECK(f.verdict == "epsilon too large");

  IterationLemmaInput bad = in;
  bad.phi[3] = 10.0;
  CHECK_THROWS_AS(iteration_lemma_check(bad), PreconditionError);
  bad = in;
  bad.gamma = 5.0;
  CHECK_THROWS_AS(iteration_lemma_check(bad), PreconditionError);
}
