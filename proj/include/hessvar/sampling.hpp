#pragma once
// Deterministic random symmetric matrices for sampled certificates and tests.

#include <array>
#include <random>

#include "hessvar/sym_mat.hpp"

namespace hessvar {

/// Haar-ish random rotation (column-major), via Gram-Schmidt of a Gaussian matrix.
std::array<double, kMaxDim * kMaxDim> random_rotation(int n, std::mt19937_64& rng);

/// R diag(lambda) R^T with lambda_i uniform in [-radius, radius].
SymMat random_symmetric(int n, double radius, std::mt19937_64& rng);

/// Entries i.i.d. uniform in [-scale, scale].
SymMat random_entries(int n, double scale, std::mt19937_64& rng);

}  // namespace hessvar
