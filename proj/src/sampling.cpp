#include "hessvar/sampling.hpp"

#include <cmath>

namespace hessvar {

std::array<double, kMaxDim * kMaxDim> random_rotation(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::array<double, kMaxDim * kMaxDim> q{};
  for (int c = 0; c < n; ++c) {
    double* col = q.data() + c * n;
    double norm = 0.0;
    do {
      for (int r = 0; r < n; ++r) col[r] = normal(rng);
      for (int p = 0; p < c; ++p) {
        const double* prev = q.data() + p * n;
        double d = 0.0;
        for (int r = 0; r < n; ++r) d += prev[r] * col[r];
        for (int r = 0; r < n; ++r) col[r] -= d * prev[r];
      }
      norm = 0.0;
      for (int r = 0; r < n; ++r) norm += col[r] * col[r];
      norm = std::sqrt(norm);
    } while (norm < 1e-8);
    for (int r = 0; r < n; ++r) col[r] /= norm;
  }
  return q;
}

SymMat random_symmetric(int n, double radius, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(-radius, radius);
  std::array<double, kMaxDim> lambda{};
  for (int i = 0; i < n; ++i) lambda[i] = radius > 0.0 ? uni(rng) : 0.0;
  const auto r = random_rotation(n, rng);
  return rotate_diagonal(n, std::span<const double>(lambda.data(), n),
                         std::span<const double>(r.data(), n * n));
}

SymMat random_entries(int n, double scale, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(-scale, scale);
  SymMat m(n);
  for (int a = 0; a < m.size(); ++a) m.packed(a) = uni(rng);
  return m;
}

}  // namespace hessvar
