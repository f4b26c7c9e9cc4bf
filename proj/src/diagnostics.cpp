#include "hessvar/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "hessvar/errors.hpp"
#include "hessvar/parallel.hpp"

namespace hessvar {

namespace {

double norm_of(const SymMatField& f, std::size_t node, const SymMat* shift = nullptr) {
  const int n = f.dim();
  double s = 0.0;
  for (int a = 0; a < f.components(); ++a) {
    const double v = f.plane(a)[node] - (shift ? shift->packed(a) : 0.0);
    s += packed_weight(n, a) * v * v;
  }
  return std::sqrt(s);
}

std::vector<std::size_t> checked_ball(const SymMatField& f, const Ball& b) {
  const GridGeometry& g = f.geometry();
  require_valid_ball(g, b);
  auto nodes = ball_nodes(g, b);
  if (nodes.empty()) throw PreconditionError("empty ball");
  for (std::size_t i : nodes)
    if (!f.valid(i)) throw PreconditionError("ball leaves the valid region of the field");
  return nodes;
}

SymMat average_over(const SymMatField& f, const std::vector<std::size_t>& nodes) {
  // Summed relative to the first node so constant fields average exactly.
  SymMat avg(f.dim());
  for (int a = 0; a < f.components(); ++a) {
    const double base = f.plane(a)[nodes.front()];
    double s = 0.0;
    for (std::size_t i : nodes) s += f.plane(a)[i] - base;
    avg.packed(a) = base + s / static_cast<double>(nodes.size());
  }
  return avg;
}

double power(double x, double p) { return p == 1.0 ? x : p == 2.0 ? x * x : std::pow(x, p); }

/// sum |f - f_B|^p over nodes (no h^n factor).
double oscillation_sum(const SymMatField& f, const std::vector<std::size_t>& nodes, double p) {
  const SymMat avg = average_over(f, nodes);
  double s = 0.0;
  for (std::size_t i : nodes) s += power(norm_of(f, i, &avg), p);
  return s;
}

double mean_power(const SymMatField& f, const std::vector<std::size_t>& nodes, double p) {
  double s = 0.0;
  for (std::size_t i : nodes) s += power(norm_of(f, i), p);
  return s / static_cast<double>(nodes.size());
}

void require_exponent(double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw PreconditionError("exponent p must be >= 1");
}

std::vector<double> sorted_decreasing(std::vector<double> radii, std::size_t minimum) {
  std::sort(radii.begin(), radii.end(), std::greater<>());
  radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
  if (radii.size() < minimum)
    throw PreconditionError("need at least " + std::to_string(minimum) + " distinct radii");
  if (!(radii.back() > 0.0)) throw PreconditionError("radii must be positive");
  return radii;
}

}  // namespace

double mean_oscillation(const SymMatField& f, const Ball& ball, double p) {
  require_exponent(p);
  const auto nodes = checked_ball(f, ball);
  return oscillation_sum(f, nodes, p) / static_cast<double>(nodes.size());
}

SymMat ball_average(const SymMatField& f, const Ball& ball) { return average_over(f, checked_ball(f, ball)); }

BmoResult bmo_modulus(const SymMatField& f, const BallFamily& family) {
  if (family.balls.empty()) throw PreconditionError("empty ball family");
  std::vector<double> osc(family.balls.size());
  parallel_for(osc.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) osc[k] = mean_oscillation(f, family.balls[k], 1.0);
  });
  BmoResult r;
  r.balls = osc.size();
  const auto it = std::max_element(osc.begin(), osc.end());
  r.omega = *it;
  r.ball = family.balls[static_cast<std::size_t>(it - osc.begin())];
  return r;
}

JohnNirenbergResult john_nirenberg_ratio(const SymMatField& f, const BallFamily& family, double p) {
  require_exponent(p);
  const BmoResult bmo = bmo_modulus(f, family);
  JohnNirenbergResult r;
  r.p = p;
  r.omega = bmo.omega;
  if (!(bmo.omega > 0.0)) {
    r.degenerate = true;
    r.verdict = "zero oscillation";
    return r;
  }
  std::vector<double> ratio(family.balls.size());
  parallel_for(ratio.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k)
      ratio[k] = std::pow(mean_oscillation(f, family.balls[k], p), 1.0 / p) / bmo.omega;
  });
  const auto it = std::max_element(ratio.begin(), ratio.end());
  r.cbar = *it;
  r.ball = family.balls[static_cast<std::size_t>(it - ratio.begin())];
  r.verdict = "finite";
  return r;
}

DecayFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw PreconditionError("fit needs matching samples");
  if (x.size() < 3) throw PreconditionError("fit needs at least 3 points");
  DecayFit fit;
  fit.points = static_cast<int>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!(y[i] > 0.0) || !(x[i] > 0.0)) {
      fit.degenerate = true;
      return fit;
    }
  double sx = 0.0, sy = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += std::log(x[i]);
    sy += std::log(y[i]);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(y[i]) - my);
  }
  if (!(sxx > 0.0)) throw PreconditionError("fit needs distinct abscissae");
  fit.slope = sxy / sxx;
  const double intercept = my - fit.slope * mx;
  fit.constant = std::exp(intercept);
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double res = std::log(y[i]) - (intercept + fit.slope * std::log(x[i]));
    rss += res * res;
  }
  fit.residual = std::sqrt(rss / n);
  return fit;
}

CampanatoResult campanato_decay(const SymMatField& f, const Index& center, std::vector<double> radii,
                                double p) {
  require_exponent(p);
  CampanatoResult r;
  r.curve.center = center;
  r.curve.p = p;
  r.curve.radii = sorted_decreasing(std::move(radii), 3);
  const double hn = std::pow(f.geometry().spacing, f.dim());
  for (double rho : r.curve.radii) {
    const auto nodes = checked_ball(f, Ball{center, rho});
    const double s = oscillation_sum(f, nodes, p);
    r.curve.values.push_back(s / static_cast<double>(nodes.size()));
    r.curve.integrals.push_back(hn * s);
  }
  r.fit = fit_power_law(r.curve.radii, r.curve.integrals);
  return r;
}

double gehring_exponent(int n) { return 2.0 * n / (n + 2.0); }

ReverseHolderResult reverse_holder_check(const SymMatField& f, const std::vector<Index>& centers,
                                         const std::vector<double>& scales) {
  if (centers.empty() || scales.empty()) throw PreconditionError("need at least one centre and scale");
  ReverseHolderResult r;
  r.pbar = gehring_exponent(f.dim());
  for (const Index& c : centers)
    for (double s : scales) {
      if (!(s > 0.0)) throw PreconditionError("scales must be positive");
      ReverseHolderEntry e;
      e.center = c;
      e.scale = s;
      const auto inner = checked_ball(f, Ball{c, s});
      const auto outer = checked_ball(f, Ball{c, 2.0 * s});
      const double num = std::sqrt(mean_power(f, inner, 2.0));
      const double den = std::pow(mean_power(f, outer, r.pbar), 1.0 / r.pbar);
      if (!(den > 0.0)) {
        e.degenerate = true;
        r.any_degenerate = true;
      } else {
        e.constant = num / den;
        r.max_constant = std::max(r.max_constant, e.constant);
      }
      r.entries.push_back(e);
    }
  return r;
}

P0Estimate fit_p0(const SymMatField& f, const Index& center, std::vector<double> radii,
                  const P0Options& options) {
  radii = sorted_decreasing(std::move(radii), 3);
  P0Estimate est;
  est.k_max = options.k_max;
  est.scan = options.scan;
  if (est.scan.empty())
    for (int k = 21; k <= 40; ++k) est.scan.push_back(k / 10.0);
  std::sort(est.scan.begin(), est.scan.end());
  for (double p : est.scan) require_exponent(p);

  std::vector<std::vector<std::size_t>> balls;
  for (double r : radii) balls.push_back(checked_ball(f, Ball{center, r}));
  std::vector<double> l2(radii.size());
  for (std::size_t i = 0; i < radii.size(); ++i) l2[i] = std::sqrt(mean_power(f, balls[i], 2.0));

  bool prefix = true;
  for (double p : est.scan) {
    double k = 0.0;
    for (std::size_t i = 0; i < radii.size(); ++i) {      // rho
      const double lp = std::pow(mean_power(f, balls[i], p), 1.0 / p);
      for (std::size_t j = 0; j <= i; ++j) {                // r >= rho
        if (l2[j] > 0.0) {
          k = std::max(k, lp / l2[j]);
        } else if (lp > 0.0) {
          k = std::numeric_limits<double>::infinity();
        } else {
          k = std::max(k, 1.0);  // both sides vanish
        }
      }
    }
    est.constants.push_back(k);
    if (prefix && k <= options.k_max) {
      est.p0 = p;
      est.certified = true;
    } else {
      prefix = false;
    }
  }
  est.verdict = est.certified ? "certified" : "no exponent certified";
  return est;
}

SingularMask singular_set(const SymMatField& f, double p0, std::vector<double> radii, double tau) {
  require_exponent(p0);
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw PreconditionError("threshold must be finite and >= 0");
  const GridGeometry& g = f.geometry();
  radii = sorted_decreasing(std::move(radii), 2);
  if (radii.back() < 3.0 * g.spacing * (1.0 - 1e-9))
    throw PreconditionError("singular-set radii must be at least 3h");
  const std::vector<double> used{radii[radii.size() - 2], radii.back()};

  // Node offsets of each ball, same inclusion rule as ball_nodes.
  std::vector<std::vector<std::ptrdiff_t>> offsets(used.size());
  for (std::size_t k = 0; k < used.size(); ++k) {
    const double r = used[k];
    const int reach = static_cast<int>(std::floor(r / g.spacing + 1e-9));
    const double r2 = r * r * (1.0 + 1e-12) + 1e-300;
    for (int i = -reach; i <= reach; ++i)
      for (int j = -reach; j <= reach; ++j)
        for (int l = (g.dim == 3 ? -reach : 0); l <= (g.dim == 3 ? reach : 0); ++l) {
          const double d2 = (double(i) * i + double(j) * j + double(l) * l) * g.spacing * g.spacing;
          if (d2 > r2) continue;
          std::ptrdiff_t off = i * static_cast<std::ptrdiff_t>(g.stride(0)) +
                               j * static_cast<std::ptrdiff_t>(g.stride(1));
          if (g.dim == 3) off += l * static_cast<std::ptrdiff_t>(g.stride(2));
          offsets[k].push_back(off);
        }
  }

  SingularMask out;
  out.geometry = g;
  out.p0 = p0;
  out.radii = used;
  out.tau = tau;
  out.mask.assign(g.node_count(), 0);
  out.defined.assign(g.node_count(), 0);
  const double hn = std::pow(g.spacing, g.dim);
  const int m = f.components();
  parallel_for(g.node_count(), [&](std::size_t b, std::size_t e) {
    for (std::size_t x = b; x < e; ++x) {
      if (!g.is_interior(x)) continue;
      if (interior_distance(g, g.multi(x)) < used[0] * (1.0 - 1e-12)) continue;
      bool ok = true;
      for (std::ptrdiff_t off : offsets[0]) ok = ok && f.valid(x + off);
      if (!ok) continue;
      out.defined[x] = 1;
      double q_min = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < used.size(); ++k) {
        std::array<double, kMaxPacked> avg{};
        for (std::ptrdiff_t off : offsets[k])
          for (int a = 0; a < m; ++a) avg[a] += f.plane(a)[x + off] - f.plane(a)[x];
        for (int a = 0; a < m; ++a) avg[a] = f.plane(a)[x] + avg[a] / static_cast<double>(offsets[k].size());
        double s = 0.0;
        for (std::ptrdiff_t off : offsets[k]) {
          double d2 = 0.0;
          for (int a = 0; a < m; ++a) {
            const double d = f.plane(a)[x + off] - avg[a];
            d2 += packed_weight(g.dim, a) * d * d;
          }
          s += power(std::sqrt(d2), p0);
        }
        q_min = std::min(q_min, hn * s / std::pow(used[k], g.dim));
      }
      out.mask[x] = q_min > tau ? 1 : 0;
    }
  });
  out.count = static_cast<std::size_t>(std::count(out.mask.begin(), out.mask.end(), 1));
  return out;
}

BoxDimension box_counting_dimension(const SingularMask& mask) {
  const GridGeometry& g = mask.geometry;
  BoxDimension bd;
  bd.empty = mask.count == 0;
  if (bd.empty) return bd;
  int min_extent = g.extents[0];
  for (int a = 0; a < g.dim; ++a) min_extent = std::min(min_extent, g.extents[a]);
  for (int s = 1; 4 * s <= min_extent; s *= 2) {
    Index boxes{1, 1, 1};
    for (int a = 0; a < g.dim; ++a) boxes[a] = (g.extents[a] + s - 1) / s;
    std::vector<std::uint8_t> hit(static_cast<std::size_t>(boxes[0]) * boxes[1] * boxes[2], 0);
    for (std::size_t i = 0; i < mask.mask.size(); ++i) {
      if (!mask.mask[i]) continue;
      const Index idx = g.multi(i);
      std::size_t b = 0;
      for (int a = 0; a < g.dim; ++a) b = b * boxes[a] + idx[a] / s;
      hit[b] = 1;
    }
    bd.box_sizes.push_back(s * g.spacing);
    bd.counts.push_back(static_cast<double>(std::count(hit.begin(), hit.end(), 1)));
  }
  if (bd.box_sizes.size() < 3) {
    bd.dimension = 0.0;
    return bd;
  }
  // N(s) ~ s^{-d}
  bd.dimension = -fit_power_law(bd.box_sizes, bd.counts).slope;
  return bd;
}

HolderEstimate holder_seminorm(const SymMatField& f, double alpha, std::size_t pair_budget,
                               std::uint64_t seed, double region_fraction) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw PreconditionError("alpha must lie in (0,1)");
  if (!(region_fraction > 0.0 && region_fraction <= 1.0))
    throw PreconditionError("region fraction must lie in (0,1]");
  if (pair_budget < 1) throw PreconditionError("pair budget must be positive");
  const GridGeometry& g = f.geometry();
  const double half = region_fraction * g.interior_half_width() * (1.0 + 1e-12);
  std::vector<std::size_t> region;
  std::vector<std::size_t> slot(g.node_count(), SIZE_MAX);
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    if (!g.is_interior(i) || !f.valid(i)) continue;
    const Point x = g.position(i);
    bool inside = true;
    for (int a = 0; a < g.dim; ++a) inside = inside && std::fabs(x[a]) <= half;
    if (inside) {
      slot[i] = region.size();
      region.push_back(i);
    }
  }
  if (region.size() < 2) throw PreconditionError("Hoelder region holds fewer than two nodes");

  HolderEstimate est;
  est.alpha = alpha;
  est.seed = seed;
  auto consider = [&](std::size_t x, std::size_t y) {
    if (x == y) return;
    const Point px = g.position(x), py = g.position(y);
    double d2 = 0.0;
    for (int a = 0; a < g.dim; ++a) d2 += (px[a] - py[a]) * (px[a] - py[a]);
    double diff = 0.0;
    for (int a = 0; a < f.components(); ++a) {
      const double d = f.plane(a)[x] - f.plane(a)[y];
      diff += packed_weight(g.dim, a) * d * d;
    }
    const double q = std::sqrt(diff) / std::pow(std::sqrt(d2), alpha);
    ++est.pairs;
    if (q > est.seminorm) {
      est.seminorm = q;
      est.x = g.multi(x);
      est.y = g.multi(y);
    }
  };

  const std::size_t share = std::max<std::size_t>(1, pair_budget / 3);
  // Antipodal pairs through the centre node.
  {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    const Index c = g.center_index();
    for (std::size_t x : region) {
      Index m = g.multi(x);
      for (int a = 0; a < g.dim; ++a) m[a] = 2 * c[a] - m[a];
      const std::size_t y = g.linear(m);
      if (x < y && slot[y] != SIZE_MAX) pairs.emplace_back(x, y);
    }
    // Farthest pairs first, then a uniform stride through the rest.
    std::stable_sort(pairs.begin(), pairs.end(), [&](const auto& p, const auto& q) {
      const Point a = g.position(p.first), b = g.position(q.first);
      double da = 0.0, db = 0.0;
      for (int k = 0; k < g.dim; ++k) {
        da += a[k] * a[k];
        db += b[k] * b[k];
      }
      return da > db;
    });
    const std::size_t stride = std::max<std::size_t>(1, pairs.size() / share);
    for (std::size_t k = 0; k < pairs.size() && k / stride < share; k += stride)
      consider(pairs[k].first, pairs[k].second);
    // Axis-aligned extreme pairs are always included.
    const int m_half = static_cast<int>(std::floor(half / g.spacing + 1e-9));
    for (int a = 0; a < g.dim; ++a) {
      Index lo = c, hi = c;
      lo[a] -= m_half;
      hi[a] += m_half;
      if (lo[a] < 0 || hi[a] >= g.extents[a]) continue;
      const std::size_t x = g.linear(lo), y = g.linear(hi);
      if (slot[x] != SIZE_MAX && slot[y] != SIZE_MAX) consider(x, y);
    }
  }
  // Nearest-neighbour pairs.
  {
    const std::size_t total = region.size() * g.dim;
    const std::size_t stride = std::max<std::size_t>(1, total / share);
    for (std::size_t k = 0; k < total; k += stride) {
      const std::size_t x = region[k / g.dim];
      const int a = static_cast<int>(k % g.dim);
      const std::size_t y = x + g.stride(a);
      if (y < g.node_count() && slot[y] != SIZE_MAX) consider(x, y);
    }
  }
  // Seeded random pairs for the remaining budget.
  {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, region.size() - 1);
    const std::size_t remaining = pair_budget > 2 * share ? pair_budget - 2 * share : share;
    for (std::size_t k = 0; k < remaining; ++k) consider(region[pick(rng)], region[pick(rng)]);
  }
  return est;
}

IterationLemmaResult iteration_lemma_check(const IterationLemmaInput& in) {
  if (in.radii.size() != in.phi.size() || in.radii.empty())
    throw PreconditionError("iteration lemma needs matching radii and samples");
  if (!(in.kappa > in.gamma && in.gamma > in.beta && in.beta >= 0.0))
    throw PreconditionError("iteration lemma needs kappa > gamma > beta >= 0");
  if (!(in.A > 0.0) || !(in.B >= 0.0)) throw PreconditionError("iteration lemma needs A > 0, B >= 0");
  std::vector<std::size_t> order(in.radii.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return in.radii[a] < in.radii[b]; });
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (!(in.radii[order[k]] > 0.0) || !(in.phi[order[k]] >= 0.0))
      throw PreconditionError("iteration lemma needs positive radii and nonnegative samples");
    if (k > 0 && in.phi[order[k]] < in.phi[order[k - 1]])
      throw PreconditionError("iteration lemma samples are not monotone nondecreasing");
  }

  IterationLemmaResult r;
  r.theta = in.beta == 0.0 ? std::pow(2.0 * in.A, -2.0 / in.kappa)
                           : std::pow(2.0 * in.A, -1.0 / (in.kappa - in.gamma));
  r.epsilon0 = std::pow(r.theta, in.kappa);
  const double slack = 1e-12;
  for (std::size_t i = 0; i < in.radii.size(); ++i)
    for (std::size_t j = 0; j < in.radii.size(); ++j) {
      const double tau = in.radii[i], rr = in.radii[j];
      if (!(tau <= r.theta * rr * (1.0 + slack))) continue;
      ++r.pairs;
      const double ft = in.phi[i], fr = in.phi[j];
      const double ratio = tau / rr;
      // Hypothesis: ft <= A[(tau/r)^kappa + eps] fr + B r^beta.
      const double excess = ft - in.B * std::pow(rr, in.beta);
      if (excess > 0.0) {
        const double eps = fr > 0.0 ? excess / (in.A * fr) - std::pow(ratio, in.kappa)
                                    : std::numeric_limits<double>::infinity();
        r.epsilon = std::max(r.epsilon, eps);
      }
      // Conclusion: ft <= c[(tau/r)^gamma fr + B tau^beta].
      const double den = std::pow(ratio, in.gamma) * fr + in.B * std::pow(tau, in.beta);
      if (den > 0.0) {
        r.c = std::max(r.c, ft / den);
      } else if (ft > 0.0) {
        r.c = std::numeric_limits<double>::infinity();
      }
    }
  r.epsilon = std::max(r.epsilon, 0.0);
  if (r.pairs == 0) {
    r.verdict = "no sample pairs with tau <= theta r";
    return r;
  }
  r.hypothesis_ok = r.epsilon < r.epsilon0;
  r.verdict = r.hypothesis_ok ? "hypothesis holds with epsilon < epsilon0" : "epsilon too large";
  return r;
}

}  // namespace hessvar
