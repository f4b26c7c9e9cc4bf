#pragma once
// Lagrangian gradient graphs x -> (x, Du(x)): induced metric g = I + (D^2u)^2,
// Lagrangian phase, the variational Hamiltonian-stationary residual, the
// Laplace-Beltrami operator of g and the convexity certificate of the
// volume integrand.

#include <array>
#include <cstdint>
#include <vector>

#include "hessvar/grid.hpp"
#include "hessvar/solver.hpp"

namespace hessvar {

struct MetricField {
  GridGeometry geometry;
  std::vector<SymMat> g;
  std::vector<SymMat> g_inv;
  std::vector<double> sqrt_det;
  std::vector<std::uint8_t> valid;
};

MetricField induced_metric(const SymMatField& hessian);

/// sqrt(det(I + M^2)), evaluated by the area energy model.
double volume_integrand(const SymMat& m);

struct PhaseField {
  ScalarGrid theta;  ///< valid where the Hessian is
  std::vector<std::array<double, kMaxDim>> eigenvalues;  ///< ascending
};

PhaseField lagrangian_phase(const SymMatField& hessian);

/// sum_i arctan(lambda_i).
double phase_of(const SymMat& m);

/// dd_weak_residual with a^{ij,kl} = sqrt(det g) g^{ik} delta^{jl} (symmetrized).
std::vector<double> hamstat_residual(const ScalarGrid& u, const TestFunctionSet& tests);

/// (1/sqrt g) d_i (sqrt g g^{ij} d_j phi) in flux form with face-averaged
/// coefficients. Valid where phi is valid on the 3^n neighbourhood and the
/// metric on the 2n face neighbours.
ScalarGrid laplace_beltrami(const ScalarGrid& phi, const MetricField& metric);

/// g^{ij} d_ij phi - g^{jp} Theta_q u_pq d_j phi by central differences
/// (valid only on Lagrangian graphs, where Theta is the phase of u_pq).
ScalarGrid laplace_beltrami_expanded(const ScalarGrid& phi, const SymMatField& hessian,
                                     const ScalarGrid& theta);

struct ResidualSummary {
  double sup = 0.0;
  double l2 = 0.0;  ///< (h^n sum r^2)^{1/2}
  std::size_t nodes = 0;
};

/// Laplace-Beltrami of the phase over the concentric box of
/// `inner_fraction` times the interior half-width.
ResidualSummary phase_harmonicity_residual(const ScalarGrid& u, double inner_fraction = 0.5);

struct VolumeDerivatives {
  int n = 0;
  double v = 0.0;
  std::array<double, kMaxDim> first{};        ///< d_i V
  std::array<double, kMaxDim * kMaxDim> second{};  ///< d_ij V, row-major
  std::array<double, kMaxDim> e{};            ///< lambda_i / (1 + lambda_i^2)
};

/// Derivatives of V(lambda) = prod sqrt(1 + lambda_i^2) in the eigenvalues.
/// d_ii V uses the rewritten form (1/(1+l^2) - 2 e^2) V + e^2 V.
VolumeDerivatives closed_form_dV(const std::vector<double>& lambda);

/// (1 - (1-eta)^2) / (1 + (1-eta)^2)^2.
double convexity_bound(double eta);

struct ConvexityCertificate {
  double eta = 0.0;
  int n = 2;
  int samples = 0;
  std::uint64_t seed = 0;
  /// min over samples of the smallest eigenvalue of D^2 V on symmetric matrices
  double min_eig = 0.0;
  /// the same divided by V at the sample
  double min_eig_normalized = 0.0;
  double c_eta = 0.0;
  /// min over samples of the smallest eigenvalue of (d_ij V / V) in eigenvalue space
  double diagonal_min = 0.0;
  bool diagonal_check = false;
  SymMat worst;
};

/// Samples M with |M|_op <= 1 - eta (uniform eigenvalues, random rotations);
/// sample 0 is M = 0. Per-sample generators are derived from `seed`.
ConvexityCertificate convexity_certificate(double eta, int n, int sample_count, std::uint64_t seed);

}  // namespace hessvar
