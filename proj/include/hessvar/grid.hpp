#pragma once
// Uniform Cartesian grids centred at the origin, the fields living on them,
// and the finite-difference / quadrature / ball machinery shared by the
// solver and the diagnostics.
//
// Node layout is row-major with axis 0 slowest. The outer `boundary_width`
// rings hold clamped data: ring 0 .. bw-2 are ghost nodes, ring bw-1 is the
// boundary ring, everything deeper is interior.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hessvar/sym_mat.hpp"

namespace hessvar {

enum class NodeClass : std::uint8_t { Interior, Boundary, Ghost };

using Index = std::array<int, kMaxDim>;
using Point = std::array<double, kMaxDim>;

struct GridGeometry {
  int dim = 2;
  Index extents{1, 1, 1};
  double spacing = 1.0;
  int boundary_width = 2;

  std::size_t node_count() const;
  std::size_t stride(int axis) const;
  std::size_t linear(const Index& idx) const;
  Index multi(std::size_t lin) const;
  double coord(int idx, int axis) const;
  Point position(std::size_t lin) const;
  /// Distance (in nodes) to the nearest array face.
  int ring_depth(std::size_t lin) const;
  NodeClass node_class(std::size_t lin) const;
  bool is_interior(std::size_t lin) const { return ring_depth(lin) >= boundary_width; }
  /// Nodes where the energy is summed: interior plus the boundary ring.
  bool in_energy_region(std::size_t lin) const { return ring_depth(lin) >= boundary_width - 1; }
  /// Index of the node closest to the origin.
  Index center_index() const;
  /// Half-width of the interior box, measured from the origin.
  double interior_half_width() const;

  friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

/// Scalar samples with a validity mask (difference quotients shrink it).
class ScalarGrid {
 public:
  ScalarGrid() = default;
  explicit ScalarGrid(GridGeometry geometry, double fill = 0.0);

  const GridGeometry& geometry() const { return geom_; }
  int dim() const { return geom_.dim; }
  double spacing() const { return geom_.spacing; }
  std::size_t size() const { return values_.size(); }

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  bool valid(std::size_t i) const { return valid_[i] != 0; }
  void set_valid(std::size_t i, bool v) { valid_[i] = v ? 1 : 0; }
  std::span<const std::uint8_t> valid_mask() const { return valid_; }

  std::vector<NodeClass> domain_mask() const;

  /// Samples f at every node.
  void fill(const std::function<double(const Point&)>& f);

 private:
  GridGeometry geom_;
  std::vector<double> values_;
  std::vector<std::uint8_t> valid_;
};

/// Grid of symmetric matrices, stored as one plane per packed entry.
class SymMatField {
 public:
  SymMatField() = default;
  explicit SymMatField(GridGeometry geometry);

  const GridGeometry& geometry() const { return geom_; }
  int dim() const { return geom_.dim; }
  int components() const { return packed_size(geom_.dim); }
  std::size_t size() const { return valid_.size(); }

  SymMat at(std::size_t node) const;
  void set(std::size_t node, const SymMat& m);
  std::span<const double> plane(int a) const { return planes_[a]; }
  std::span<double> plane(int a) { return planes_[a]; }

  bool valid(std::size_t i) const { return valid_[i] != 0; }
  void set_valid(std::size_t i, bool v) { valid_[i] = v ? 1 : 0; }
  std::span<const std::uint8_t> valid_mask() const { return valid_; }

  void fill(const std::function<SymMat(const Point&)>& f);

 private:
  GridGeometry geom_;
  std::vector<std::vector<double>> planes_;
  std::vector<std::uint8_t> valid_;
};

/// Grid over [-half_width, half_width]^dim with boundary_width = 2.
ScalarGrid make_grid(int dim, int nodes_per_axis, double half_width);
GridGeometry make_geometry(int dim, int nodes_per_axis, double half_width, int boundary_width = 2);

/// The centred sub-box of `nodes_per_axis` nodes per axis (same spacing and
/// coordinates, boundary_width 2). Both extents must have the same parity.
ScalarGrid extract_centered_box(const ScalarGrid& u, int nodes_per_axis);

/// Central second differences; mixed entries use the 4-point cross stencil.
/// Defined where the node and every stencil neighbour are valid.
SymMatField hessian_field(const ScalarGrid& u);

/// (u(x + step e_m) - u(x)) / step; `step` must be a positive integer multiple
/// of the spacing no larger than boundary_width spacings.
ScalarGrid difference_quotient(const ScalarGrid& u, int direction, double step);
/// Same, applied entrywise to a matrix field.
SymMatField difference_quotient(const SymMatField& f, int direction, double step);

struct Ball {
  Index center{0, 0, 0};
  double radius = 0.0;
};

/// Interior nodes with |x - x0| <= r.
std::vector<std::size_t> ball_nodes(const GridGeometry& g, const Ball& b);
/// Largest radius keeping the ball inside the interior box.
double interior_distance(const GridGeometry& g, const Index& center);
/// Throws PreconditionError unless the ball fits the interior and is nonempty.
void require_valid_ball(const GridGeometry& g, const Ball& b);

/// h^n-weighted node sum (midpoint rule) over the valid nodes of a ball.
double integrate(const ScalarGrid& field, const Ball& region);
/// Same over every valid interior node.
double integrate(const ScalarGrid& field);

struct BallFamilyRule {
  int center_stride = 0;  ///< 0: the single centre node
  double r_min = 0.0;
  double r_max = 0.0;
  /// Balls must fit in [-container, container]^n; <= 0 means the interior box.
  double container_half_width = 0.0;
};

struct BallFamily {
  std::vector<Ball> balls;
  BallFamilyRule rule;
};

/// Dyadic radii r_max, r_max/2, ... >= r_min at strided centres, clipped to fit.
BallFamily ball_family(const GridGeometry& g, const BallFamilyRule& rule);

/// Compactly supported discrete test functions sharing one geometry.
class TestFunctionSet {
 public:
  TestFunctionSet() = default;
  explicit TestFunctionSet(GridGeometry geometry) : geom_(geometry) {}

  /// eta = indicator of one interior node.
  static TestFunctionSet nodal_hats(const GridGeometry& g, std::span<const std::size_t> nodes);
  /// eta(x) = (1 - |x - c|^2 / s^2)^4 inside |x - c| < s.
  static TestFunctionSet smooth_bumps(const GridGeometry& g, std::span<const Point> centers,
                                      double scale);

  /// Adds a test function; throws if it is nonzero outside the interior.
  void add(std::vector<double> values, std::string_view description = {});

  const GridGeometry& geometry() const { return geom_; }
  std::size_t size() const { return tests_.size(); }
  std::span<const double> operator[](std::size_t k) const { return tests_[k]; }
  const std::vector<std::string>& descriptions() const { return descriptions_; }

  /// h^n * sum |D^2 eta| over the energy region.
  double hessian_l1_norm(std::size_t k) const;

 private:
  GridGeometry geom_;
  std::vector<std::vector<double>> tests_;
  std::vector<std::string> descriptions_;
};

}  // namespace hessvar
