#pragma once
// Integrands F(D^2 u), their matrix derivatives, double-divergence coefficient
// models a^{ij,kl}(M) and the linearized coefficient tensors built from them.
//
// Derivatives follow the symmetric-variable convention of sym_mat.hpp:
// <dF(M), s> is the directional derivative of F along symmetric s, and
// T = d2F(M) satisfies T.contract(s, t) = D^2 F(M)[s, t].

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "hessvar/sym_mat.hpp"

namespace hessvar {

enum class ModelKind { Quadratic, Area, Custom };

const char* model_kind_name(ModelKind kind);

/// Values of a scalar function on a uniform lattice over packed matrix
/// coordinates: every packed entry ranges over `points` values in [lo, hi].
/// Flattened index = sum_a k_a * points^(m-1-a), k_a the lattice step of entry a.
struct CoefficientTable {
  int dim = 2;
  int points = 0;
  double lo = -1.0;
  double hi = 1.0;
  std::vector<double> values;

  double spacing() const { return (hi - lo) / (points - 1); }
  std::size_t expected_size() const;
};

/// CSV: `dim,points,lo,hi` / values / `index,value` / one row per lattice point.
CoefficientTable read_coefficient_table(std::istream& is);
void write_coefficient_table(std::ostream& os, const CoefficientTable& table);

/// Multilinear interpolation; throws AdmissibilityError outside the lattice box.
double interpolate(const CoefficientTable& table, const SymMat& m);

class EnergyModel {
 public:
  using ScalarFn = std::function<double(const SymMat&)>;

  /// F(M) = |M|^2 / 2.
  static EnergyModel quadratic(int n, double admissible_radius = kUnbounded);
  /// F(M) = sqrt(det(I + M^2)).
  static EnergyModel area(int n, double admissible_radius = kUnbounded);
  /// Derivatives by central differences with step 1e-5 (1 + |M|) (first) and
  /// 1e-3 (1 + |M|) (second), both Richardson-extrapolated.
  static EnergyModel custom(int n, double admissible_radius, ScalarFn f, std::string name);
  /// Multilinear table; derivatives by central differences at the lattice spacing.
  static EnergyModel from_table(CoefficientTable table, double admissible_radius,
                                std::string name = "table");

  static constexpr double kUnbounded = std::numeric_limits<double>::infinity();

  /// -F, for integrands supplied as uniformly concave.
  EnergyModel negated() const;

  ModelKind kind() const { return kind_; }
  int dim() const { return n_; }
  const std::string& name() const { return name_; }
  /// U = {M : |M|_op < rho_U}.
  double admissible_radius() const { return radius_; }
  bool negated_input() const { return sign_ < 0.0; }

  /// |M|_op <= rho_U - margin (strict when margin == 0).
  bool admissible(const SymMat& m, double margin = 0.0) const;

  double value(const SymMat& m) const;
  SymMat first_derivative(const SymMat& m) const;
  Tensor4 second_derivative(const SymMat& m) const;

  /// The same evaluators without the admissibility check.
  double value_unchecked(const SymMat& m) const;
  SymMat first_derivative_unchecked(const SymMat& m) const;
  Tensor4 second_derivative_unchecked(const SymMat& m) const;

 private:
  void require_admissible(const SymMat& m) const;

  ModelKind kind_ = ModelKind::Quadratic;
  int n_ = 2;
  double radius_ = kUnbounded;
  double sign_ = 1.0;
  std::string name_;
  std::shared_ptr<const ScalarFn> f_;
  std::shared_ptr<const CoefficientTable> table_;
};

/// Matrix-entry finite differences used for models without closed forms.
struct DifferenceSteps {
  double first_relative = 1e-5;
  double second_relative = 1e-3;
  double absolute = 0.0;  ///< > 0 overrides the relative steps
  bool richardson = true;
};
SymMat numeric_first_derivative(const std::function<double(const SymMat&)>& f, const SymMat& m,
                                const DifferenceSteps& steps = {});
Tensor4 numeric_second_derivative(const std::function<double(const SymMat&)>& f, const SymMat& m,
                                  const DifferenceSteps& steps = {});

struct EllipticityEstimate {
  double lambda = 0.0;
  bool uniformly_convex = false;
  int samples = 0;
  std::uint64_t seed = 0;
  SymMat worst;  ///< sample attaining the minimum
  std::string verdict;
};

/// Minimum Legendre eigenvalue of d2F over `sample_count` matrices drawn
/// uniformly (in eigenvalues, Haar in eigenvectors) from the operator-norm
/// ball of radius rho_U (radius 1 when U is unbounded). Sample 0 is M = 0.
EllipticityEstimate ellipticity_constant(const EnergyModel& model, int sample_count,
                                         std::uint64_t seed);

/// beta = int_0^1 d2F(M + t(M_shift - M)) dt by Gauss-Legendre.
Tensor4 linearized_coefficients(const EnergyModel& model, const SymMat& m, const SymMat& m_shift,
                                int quad_nodes = 8);

/// a^{ij,kl}(M) for the double-divergence equation
/// int a^{ij,kl}(D^2 u) u_ij eta_kl = 0.
class DoubleDivergenceModel {
 public:
  using CoefficientFn = std::function<Tensor4(const SymMat&)>;

  DoubleDivergenceModel() = default;
  DoubleDivergenceModel(int n, double admissible_radius, CoefficientFn a, std::string name);

  /// a(M) = c for all M.
  static DoubleDivergenceModel constant(const Tensor4& c, std::string name = "constant");
  /// a^{ij,kl}(M) = sqrt(det g) g^{ik} delta^{jl} symmetrized, g = I + M^2:
  /// the Hamiltonian-stationary equation for Lagrangian gradient graphs.
  static DoubleDivergenceModel hamiltonian_stationary(int n,
                                                      double admissible_radius = EnergyModel::kUnbounded);

  int dim() const { return n_; }
  const std::string& name() const { return name_; }
  double admissible_radius() const { return radius_; }
  bool is_constant() const { return constant_; }
  bool admissible(const SymMat& m, double margin = 0.0) const;

  Tensor4 coefficients(const SymMat& m) const;
  Tensor4 coefficients_unchecked(const SymMat& m) const;

  /// Z(X, M)_b = sum_a w_a a(X)[a][b] M_a, the flux a(X) M.
  SymMat flux(const SymMat& x, const SymMat& m) const;

 private:
  int n_ = 2;
  double radius_ = EnergyModel::kUnbounded;
  bool constant_ = false;
  std::string name_;
  std::shared_ptr<const CoefficientFn> a_;
};

/// b^{ij,kl} = int_0^1 d/dX_ij [a^{pq,kl}(X) M_pq] at X = M + t(M_shift - M),
/// with the multiplier M_pq frozen at the base point.
Tensor4 linearized_coefficients_dd(const DoubleDivergenceModel& model, const SymMat& m,
                                   const SymMat& m_shift, int quad_nodes = 8);

/// Throws AdmissibilityError unless both endpoints are admissible (U is convex).
void require_segment_admissible(double radius, const SymMat& m, const SymMat& m_shift);

}  // namespace hessvar
