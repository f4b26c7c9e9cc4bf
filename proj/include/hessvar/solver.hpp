#pragma once
// Discrete energy E(u) = h^n sum_{energy region} F(D^2_h u), its exact
// gradient, clamped minimization by damped Newton-CG, weak residuals in
// double-divergence form, and the constant-coefficient comparison problem.

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "hessvar/energy.hpp"
#include "hessvar/grid.hpp"

namespace hessvar {

/// u prescribed on every non-interior node (the boundary and ghost rings),
/// which fixes u and Du on the boundary to second order.
struct ClampedBoundaryData {
  GridGeometry geometry;
  std::vector<double> values;  ///< node_count entries; interior entries unused

  static ClampedBoundaryData from_function(const GridGeometry& g,
                                           const std::function<double(const Point&)>& f);
  /// Takes the rings of an existing grid (every ring node must be valid).
  static ClampedBoundaryData from_grid(const ScalarGrid& u);

  /// Overwrites the rings of u.
  void apply(ScalarGrid& u) const;
  /// Grid filled with the ring data and `interior` elsewhere.
  ScalarGrid initial_guess(double interior = 0.0) const;
  bool satisfied_by(const ScalarGrid& u, double tol = 0.0) const;
};

struct SolveOptions {
  /// <= 0 selects 1e-10 (1 + |E|) at the current iterate.
  double grad_tol = 0.0;
  int max_iter = 50;
  double cg_rel_tol = 1e-10;
  int cg_max_iter = 0;  ///< 0: 20 * unknowns
  double admissibility_margin = 1e-6;
  double armijo = 1e-4;
  int max_backtracks = 50;
};

struct StepRecord {
  int iteration = 0;
  double energy = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;
  int cg_iterations = 0;
  double cg_residual = 0.0;
};

struct SolveReport {
  int iterations = 0;
  double grad_norm = 0.0;
  double grad_tol = 0.0;
  double energy = 0.0;
  bool converged = false;
  bool max_iter_reached = false;
  double cg_rel_tol = 0.0;
  int cg_max_iter = 0;
  std::vector<StepRecord> steps;  ///< steps[0] is the initial state
};

struct SolveResult {
  ScalarGrid u;
  SolveReport report;
};

/// Throws AdmissibilityError naming the first node whose Hessian leaves U.
double assemble_energy(const ScalarGrid& u, const EnergyModel& model);

/// dE/du at interior nodes (zero elsewhere), node_count entries.
std::vector<double> energy_gradient(const ScalarGrid& u, const EnergyModel& model);

/// Sup-norm of a nodal vector over interior nodes.
double interior_sup_norm(const GridGeometry& g, const std::vector<double>& v);

SolveResult minimize_clamped(const EnergyModel& model, const ClampedBoundaryData& bc,
                             const ScalarGrid& init, const SolveOptions& options = {});

/// h^n sum_{energy region} <dF(D^2 u), D^2 eta_k> for each test function.
std::vector<double> weak_residual(const ScalarGrid& u, const EnergyModel& model,
                                  const TestFunctionSet& tests);

/// h^n sum <a(D^2 u) D^2 u, D^2 eta_k>.
std::vector<double> dd_weak_residual(const ScalarGrid& u, const DoubleDivergenceModel& model,
                                     const TestFunctionSet& tests);

/// One coefficient tensor per node with a validity mask.
class Tensor4Field {
 public:
  Tensor4Field() = default;
  explicit Tensor4Field(GridGeometry geometry);
  /// Every node valid and equal to t.
  static Tensor4Field constant(GridGeometry geometry, const Tensor4& t);

  const GridGeometry& geometry() const { return geom_; }
  std::size_t size() const { return values_.size(); }
  const Tensor4& operator[](std::size_t i) const { return values_[i]; }
  Tensor4& operator[](std::size_t i) { return values_[i]; }
  bool valid(std::size_t i) const { return valid_[i] != 0; }
  void set_valid(std::size_t i, bool v) { valid_[i] = v ? 1 : 0; }

 private:
  GridGeometry geom_;
  std::vector<Tensor4> values_;
  std::vector<std::uint8_t> valid_;
};

/// beta(x) = int_0^1 d2F(D^2u(x) + t(D^2u(x + step e_m) - D^2u(x))) dt wherever both
/// Hessians exist.
Tensor4Field linearized_coefficient_field(const EnergyModel& model, const ScalarGrid& u,
                                          int direction, double step, int quad_nodes = 8);

/// h^n sum <b D^2 f, D^2 eta_k> over nodes where D^2 eta_k != 0. Throws
/// PreconditionError if f's Hessian or b is missing at such a node.
std::vector<double> linearized_residual(const ScalarGrid& f, const Tensor4Field& b,
                                        const TestFunctionSet& tests);

struct LinearSolveReport {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Minimizer of (1/2) h^n sum <c0 D^2 w, D^2 w> with clamped ring data (the
/// symmetric part of c0 is used). CG to `rel_tol`. Throws PreconditionError if
/// c0 fails the Legendre check and ConvergenceError if CG stagnates.
ScalarGrid solve_constant_coeff_bvp(const Tensor4& c0, const ClampedBoundaryData& bc,
                                    double rel_tol = 1e-12, LinearSolveReport* report = nullptr);

}  // namespace hessvar
