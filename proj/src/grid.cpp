#include "hessvar/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hessvar/errors.hpp"
#include "stencil.hpp"

namespace hessvar {

std::size_t GridGeometry::node_count() const {
  std::size_t n = 1;
  for (int a = 0; a < dim; ++a) n *= static_cast<std::size_t>(extents[a]);
  return n;
}

std::size_t GridGeometry::stride(int axis) const {
  std::size_t s = 1;
  for (int a = dim - 1; a > axis; --a) s *= static_cast<std::size_t>(extents[a]);
  return s;
}

std::size_t GridGeometry::linear(const Index& idx) const {
  std::size_t lin = 0;
  for (int a = 0; a < dim; ++a) lin = lin * static_cast<std::size_t>(extents[a]) + idx[a];
  return lin;
}

Index GridGeometry::multi(std::size_t lin) const {
  Index idx{0, 0, 0};
  for (int a = dim - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(lin % static_cast<std::size_t>(extents[a]));
    lin /= static_cast<std::size_t>(extents[a]);
  }
  return idx;
}

double GridGeometry::coord(int idx, int axis) const {
  return (idx - 0.5 * (extents[axis] - 1)) * spacing;
}

Point GridGeometry::position(std::size_t lin) const {
  const Index idx = multi(lin);
  Point p{0.0, 0.0, 0.0};
  for (int a = 0; a < dim; ++a) p[a] = coord(idx[a], a);
  return p;
}

int GridGeometry::ring_depth(std::size_t lin) const {
  const Index idx = multi(lin);
  int d = extents[0];
  for (int a = 0; a < dim; ++a) d = std::min({d, idx[a], extents[a] - 1 - idx[a]});
  return d;
}

NodeClass GridGeometry::node_class(std::size_t lin) const {
  const int d = ring_depth(lin);
  if (d >= boundary_width) return NodeClass::Interior;
  if (d == boundary_width - 1) return NodeClass::Boundary;
  return NodeClass::Ghost;
}

Index GridGeometry::center_index() const {
  Index c{0, 0, 0};
  for (int a = 0; a < dim; ++a) c[a] = (extents[a] - 1) / 2;
  return c;
}

double GridGeometry::interior_half_width() const {
  double r = 1e300;
  for (int a = 0; a < dim; ++a) r = std::min(r, (0.5 * (extents[a] - 1) - boundary_width) * spacing);
  return r;
}

ScalarGrid::ScalarGrid(GridGeometry geometry, double fill)
    : geom_(geometry), values_(geometry.node_count(), fill), valid_(geometry.node_count(), 1) {}

std::vector<NodeClass> ScalarGrid::domain_mask() const {
  std::vector<NodeClass> mask(size());
  for (std::size_t i = 0; i < size(); ++i) mask[i] = geom_.node_class(i);
  return mask;
}

void ScalarGrid::fill(const std::function<double(const Point&)>& f) {
  for (std::size_t i = 0; i < size(); ++i) values_[i] = f(geom_.position(i));
}

SymMatField::SymMatField(GridGeometry geometry)
    : geom_(geometry),
      planes_(packed_size(geometry.dim), std::vector<double>(geometry.node_count(), 0.0)),
      valid_(geometry.node_count(), 0) {}

SymMat SymMatField::at(std::size_t node) const {
  SymMat m(geom_.dim);
  for (int a = 0; a < components(); ++a) m.packed(a) = planes_[a][node];
  return m;
}

void SymMatField::set(std::size_t node, const SymMat& m) {
  for (int a = 0; a < components(); ++a) planes_[a][node] = m.packed(a);
}

void SymMatField::fill(const std::function<SymMat(const Point&)>& f) {
  for (std::size_t i = 0; i < size(); ++i) {
    set(i, f(geom_.position(i)));
    valid_[i] = 1;
  }
}

GridGeometry make_geometry(int dim, int nodes_per_axis, double half_width, int boundary_width) {
  if (dim != 2 && dim != 3) throw PreconditionError("grid dimension must be 2 or 3");
  if (!(half_width > 0.0)) throw PreconditionError("half_width must be positive");
  if (boundary_width < 2) throw PreconditionError("boundary_width must be at least 2");
  if (nodes_per_axis < 11 || nodes_per_axis < 2 * boundary_width + 3)
    throw PreconditionError("too few nodes per axis (" + std::to_string(nodes_per_axis) +
                            "); need at least 11 and 2*boundary_width+3");
  GridGeometry g;
  g.dim = dim;
  g.extents = {1, 1, 1};
  for (int a = 0; a < dim; ++a) g.extents[a] = nodes_per_axis;
  g.spacing = 2.0 * half_width / (nodes_per_axis - 1);
  g.boundary_width = boundary_width;
  return g;
}

ScalarGrid make_grid(int dim, int nodes_per_axis, double half_width) {
  return ScalarGrid(make_geometry(dim, nodes_per_axis, half_width));
}

ScalarGrid extract_centered_box(const ScalarGrid& u, int nodes_per_axis) {
  const GridGeometry& g = u.geometry();
  GridGeometry sub = make_geometry(g.dim, nodes_per_axis, 0.5 * (nodes_per_axis - 1) * g.spacing);
  sub.spacing = g.spacing;
  Index offset{0, 0, 0};
  for (int a = 0; a < g.dim; ++a) {
    if (nodes_per_axis > g.extents[a] || (g.extents[a] - nodes_per_axis) % 2 != 0)
      throw PreconditionError("sub-box must be centred and fit inside the grid");
    offset[a] = (g.extents[a] - nodes_per_axis) / 2;
  }
  ScalarGrid out(sub);
  for (std::size_t i = 0; i < out.size(); ++i) {
    Index idx = sub.multi(i);
    for (int a = 0; a < g.dim; ++a) idx[a] += offset[a];
    const std::size_t src = g.linear(idx);
    out[i] = u[src];
    out.set_valid(i, u.valid(src));
  }
  return out;
}

namespace {

bool stencil_valid(const GridGeometry& g, std::span<const std::uint8_t> valid, std::size_t lin) {
  if (g.ring_depth(lin) < 1 || !valid[lin]) return false;
  for (int i = 0; i < g.dim; ++i) {
    const std::size_t si = g.stride(i);
    if (!valid[lin + si] || !valid[lin - si]) return false;
    for (int j = i + 1; j < g.dim; ++j) {
      const std::size_t sj = g.stride(j);
      if (!valid[lin + si + sj] || !valid[lin + si - sj] || !valid[lin - si + sj] ||
          !valid[lin - si - sj])
        return false;
    }
  }
  return true;
}

int shift_steps(const GridGeometry& g, int direction, double step) {
  if (direction < 0 || direction >= g.dim) throw PreconditionError("direction out of range");
  const double ratio = step / g.spacing;
  const int s = static_cast<int>(std::lround(ratio));
  if (s < 1 || std::fabs(ratio - s) > 1e-9 * std::max(1.0, ratio))
    throw PreconditionError("difference-quotient step must be a positive multiple of the spacing");
  if (s > g.boundary_width)
    throw PreconditionError("difference-quotient shift exceeds the ghost layers");
  return s;
}

}  // namespace

SymMatField hessian_field(const ScalarGrid& u) {
  const GridGeometry& g = u.geometry();
  SymMatField out(g);
  for (int a = 0; a < out.components(); ++a)
    detail::apply_hessian_component(g, a, u.values(), out.plane(a));
  const auto valid = u.valid_mask();
  const bool all_valid = std::all_of(valid.begin(), valid.end(), [](std::uint8_t v) { return v; });
  for (std::size_t i = 0; i < out.size(); ++i) {
    const bool ok = all_valid ? g.ring_depth(i) >= 1 : stencil_valid(g, valid, i);
    out.set_valid(i, ok);
    if (!ok)
      for (int a = 0; a < out.components(); ++a) out.plane(a)[i] = 0.0;
  }
  return out;
}

ScalarGrid difference_quotient(const ScalarGrid& u, int direction, double step) {
  const GridGeometry& g = u.geometry();
  const int s = shift_steps(g, direction, step);
  const std::size_t off = g.stride(direction) * static_cast<std::size_t>(s);
  ScalarGrid f(g);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Index idx = g.multi(i);
    const bool ok = idx[direction] + s < g.extents[direction] && u.valid(i) && u.valid(i + off);
    f.set_valid(i, ok);
    f[i] = ok ? (u[i + off] - u[i]) / step : 0.0;
  }
  return f;
}

SymMatField difference_quotient(const SymMatField& field, int direction, double step) {
  const GridGeometry& g = field.geometry();
  const int s = shift_steps(g, direction, step);
  const std::size_t off = g.stride(direction) * static_cast<std::size_t>(s);
  SymMatField f(g);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Index idx = g.multi(i);
    const bool ok =
        idx[direction] + s < g.extents[direction] && field.valid(i) && field.valid(i + off);
    f.set_valid(i, ok);
    for (int a = 0; a < f.components(); ++a)
      f.plane(a)[i] = ok ? (field.plane(a)[i + off] - field.plane(a)[i]) / step : 0.0;
  }
  return f;
}

double interior_distance(const GridGeometry& g, const Index& center) {
  int d = g.extents[0];
  for (int a = 0; a < g.dim; ++a)
    d = std::min({d, center[a] - g.boundary_width, g.extents[a] - 1 - g.boundary_width - center[a]});
  return d * g.spacing;
}

std::vector<std::size_t> ball_nodes(const GridGeometry& g, const Ball& b) {
  std::vector<std::size_t> nodes;
  const int reach = static_cast<int>(std::floor(b.radius / g.spacing + 1e-9));
  const double r2 = b.radius * b.radius * (1.0 + 1e-12) + 1e-300;
  Index lo{0, 0, 0}, hi{0, 0, 0};
  for (int a = 0; a < g.dim; ++a) {
    lo[a] = std::max(b.center[a] - reach, g.boundary_width);
    hi[a] = std::min(b.center[a] + reach, g.extents[a] - 1 - g.boundary_width);
  }
  auto visit = [&](const Index& idx) {
    double d2 = 0.0;
    for (int a = 0; a < g.dim; ++a) {
      const double dx = (idx[a] - b.center[a]) * g.spacing;
      d2 += dx * dx;
    }
    if (d2 <= r2) nodes.push_back(g.linear(idx));
  };
  if (g.dim == 2) {
    for (int i = lo[0]; i <= hi[0]; ++i)
      for (int j = lo[1]; j <= hi[1]; ++j) visit({i, j, 0});
  } else {
    for (int i = lo[0]; i <= hi[0]; ++i)
      for (int j = lo[1]; j <= hi[1]; ++j)
        for (int k = lo[2]; k <= hi[2]; ++k) visit({i, j, k});
  }
  return nodes;
}

void require_valid_ball(const GridGeometry& g, const Ball& b) {
  for (int a = 0; a < g.dim; ++a)
    if (b.center[a] < g.boundary_width || b.center[a] > g.extents[a] - 1 - g.boundary_width)
      throw PreconditionError("ball centre is not an interior node");
  if (!(b.radius >= 0.0)) throw PreconditionError("ball radius must be nonnegative");
  if (b.radius > interior_distance(g, b.center) * (1.0 + 1e-12) + 1e-14)
    throw PreconditionError("ball does not fit inside the interior");
}

double integrate(const ScalarGrid& field, const Ball& region) {
  const GridGeometry& g = field.geometry();
  require_valid_ball(g, region);
  const auto nodes = ball_nodes(g, region);
  if (nodes.empty()) throw PreconditionError("empty integration region");
  double s = 0.0;
  for (std::size_t n : nodes) {
    if (!field.valid(n)) throw PreconditionError("integration region leaves the valid mask");
    s += field[n];
  }
  return s * std::pow(g.spacing, g.dim);
}

double integrate(const ScalarGrid& field) {
  const GridGeometry& g = field.geometry();
  double s = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (g.is_interior(i) && field.valid(i)) {
      s += field[i];
      ++count;
    }
  }
  if (count == 0) throw PreconditionError("empty integration region");
  return s * std::pow(g.spacing, g.dim);
}

BallFamily ball_family(const GridGeometry& g, const BallFamilyRule& rule) {
  const double h = g.spacing;
  const double slack = 1e-9 * h;
  if (rule.r_min > rule.r_max) throw PreconditionError("r_min exceeds r_max");
  if (rule.r_min < 3.0 * h - slack) throw PreconditionError("r_min must be at least 3h");
  const double container = rule.container_half_width > 0.0
                               ? std::min(rule.container_half_width, g.interior_half_width())
                               : g.interior_half_width();
  if (rule.r_max > container + slack)
    throw PreconditionError("r_max exceeds the inradius of the container");

  const Index c = g.center_index();
  auto distance_to_edge = [&](const Index& idx) {
    double d = interior_distance(g, idx);
    for (int a = 0; a < g.dim; ++a) d = std::min(d, container - std::fabs(g.coord(idx[a], a)));
    return d;
  };

  std::vector<Index> centers;
  if (rule.center_stride <= 0) {
    centers.push_back(c);
  } else {
    const int s = rule.center_stride;
    for (std::size_t lin = 0; lin < g.node_count(); ++lin) {
      if (!g.is_interior(lin)) continue;
      const Index idx = g.multi(lin);
      bool on_lattice = true;
      for (int a = 0; a < g.dim; ++a) on_lattice = on_lattice && ((idx[a] - c[a]) % s == 0);
      if (on_lattice) centers.push_back(idx);
    }
  }

  BallFamily family;
  family.rule = rule;
  for (const Index& idx : centers) {
    const double dist = distance_to_edge(idx);
    if (dist < rule.r_min - slack) continue;
    double last = 1e300;
    for (double r = rule.r_max; r >= rule.r_min - slack; r *= 0.5) {
      const double clipped = std::min(r, dist);
      if (clipped < rule.r_min - slack) break;
      if (clipped < last - slack) {
        family.balls.push_back({idx, clipped});
        last = clipped;
      }
      if (rule.r_min <= 0.0) break;
    }
  }
  if (family.balls.empty()) throw PreconditionError("empty ball family");
  return family;
}

TestFunctionSet TestFunctionSet::nodal_hats(const GridGeometry& g,
                                            std::span<const std::size_t> nodes) {
  TestFunctionSet set(g);
  for (std::size_t n : nodes) {
    if (!g.is_interior(n)) throw PreconditionError("nodal test function must sit on an interior node");
    std::vector<double> v(g.node_count(), 0.0);
    v[n] = 1.0;
    set.add(std::move(v), "hat@" + std::to_string(n));
  }
  return set;
}

TestFunctionSet TestFunctionSet::smooth_bumps(const GridGeometry& g, std::span<const Point> centers,
                                              double scale) {
  if (!(scale > 0.0)) throw PreconditionError("bump scale must be positive");
  TestFunctionSet set(g);
  for (const Point& c : centers) {
    std::vector<double> v(g.node_count(), 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) {
      const Point x = g.position(i);
      double r2 = 0.0;
      for (int a = 0; a < g.dim; ++a) r2 += (x[a] - c[a]) * (x[a] - c[a]);
      const double t = 1.0 - r2 / (scale * scale);
      if (t > 0.0) v[i] = t * t * t * t;
    }
    set.add(std::move(v), "bump");
  }
  return set;
}

void TestFunctionSet::add(std::vector<double> values, std::string_view description) {
  if (values.size() != geom_.node_count()) throw PreconditionError("test function size mismatch");
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!geom_.is_interior(i) && values[i] != 0.0)
      throw PreconditionError("test function must vanish outside the interior");
  tests_.push_back(std::move(values));
  descriptions_.emplace_back(description);
}

double TestFunctionSet::hessian_l1_norm(std::size_t k) const {
  const auto planes = detail::hessian_planes(geom_, tests_.at(k));
  double s = 0.0;
  for (std::size_t i = 0; i < geom_.node_count(); ++i) {
    if (!geom_.in_energy_region(i)) continue;
    double f2 = 0.0;
    for (int a = 0; a < packed_size(geom_.dim); ++a)
      f2 += packed_weight(geom_.dim, a) * planes[a][i] * planes[a][i];
    s += std::sqrt(f2);
  }
  return s * std::pow(geom_.spacing, geom_.dim);
}

}  // namespace hessvar
