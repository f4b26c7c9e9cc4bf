#pragma once
// Small symmetric matrices (n <= 3) and fourth-order coefficient tensors.
//
// Storage is packed upper-triangular, row-major: for n = 3 the packed order is
// m11, m12, m13, m22, m23, m33. Every contraction in the library uses the
// symmetric-variable convention: the packed entry a = (i, j) stands for both
// M_ij and M_ji, so a Frobenius inner product over packed storage carries the
// multiplicity weight w_a (1 on the diagonal, 2 off it).

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace hessvar {

inline constexpr int kMaxDim = 3;
inline constexpr int kMaxPacked = 6;

constexpr int packed_size(int n) { return n * (n + 1) / 2; }

constexpr int packed_index(int n, int i, int j) {
  if (i > j) {
    const int t = i;
    i = j;
    j = t;
  }
  return i * n - i * (i - 1) / 2 + (j - i);
}

/// Row/column pair (i <= j) of packed entry a.
std::array<int, 2> packed_pair(int n, int a);

/// Multiplicity of packed entry a in a full n x n sum.
inline double packed_weight(int n, int a) {
  const auto p = packed_pair(n, a);
  return p[0] == p[1] ? 1.0 : 2.0;
}

class SymMat {
 public:
  SymMat() = default;
  explicit SymMat(int n);

  static SymMat identity(int n);
  static SymMat diagonal(std::span<const double> d);
  static SymMat from_packed(int n, std::span<const double> packed);
  /// Frobenius-orthonormal basis element a: E_ii, or (E_ij + E_ji)/sqrt(2).
  static SymMat unit_basis(int n, int a);
  /// Symmetric perturbation S_a = (E_ij + E_ji)/2 (E_ii on the diagonal).
  static SymMat direction(int n, int a);

  int dim() const { return n_; }
  int size() const { return packed_size(n_); }

  double operator()(int i, int j) const { return p_[packed_index(n_, i, j)]; }
  void set(int i, int j, double v) { p_[packed_index(n_, i, j)] = v; }
  double packed(int a) const { return p_[a]; }
  double& packed(int a) { return p_[a]; }
  std::span<const double> packed_view() const { return {p_.data(), std::size_t(size())}; }

  SymMat& operator+=(const SymMat& o);
  SymMat& operator-=(const SymMat& o);
  SymMat& operator*=(double s);
  friend SymMat operator+(SymMat a, const SymMat& b) { return a += b; }
  friend SymMat operator-(SymMat a, const SymMat& b) { return a -= b; }
  friend SymMat operator*(double s, SymMat a) { return a *= s; }
  friend bool operator==(const SymMat& a, const SymMat& b);

  bool finite() const;

 private:
  int n_ = 0;
  std::array<double, kMaxPacked> p_{};
};

double inner(const SymMat& a, const SymMat& b);
double frobenius_norm(const SymMat& m);
/// Spectral norm, max |eigenvalue|.
double operator_norm(const SymMat& m);
/// M * M, symmetric for symmetric M.
SymMat square(const SymMat& m);
/// A * B * C for symmetric arguments, returned as the symmetric part.
SymMat sym_product(const SymMat& a, const SymMat& b, const SymMat& c);
/// Trace of A * B (not necessarily symmetric product).
double trace_product(const SymMat& a, const SymMat& b);
double trace_product(const SymMat& a, const SymMat& b, const SymMat& c);
double determinant(const SymMat& m);
SymMat inverse(const SymMat& m);

/// Ascending eigenvalues; closed form for n <= 2, cyclic Jacobi for n = 3.
std::array<double, kMaxDim> eigenvalues(const SymMat& m);

struct SymEigen {
  std::array<double, kMaxDim> values{};
  /// Column-major n x n orthogonal matrix; column k belongs to values[k].
  std::array<double, kMaxDim * kMaxDim> vectors{};
};
SymEigen eigen_decomposition(const SymMat& m);

/// R diag(values) R^T for a column-major rotation R.
SymMat rotate_diagonal(int n, std::span<const double> values, std::span<const double> rotation);

/// Cyclic Jacobi on a dense symmetric m x m matrix (row-major, overwritten).
/// Writes ascending eigenvalues; `vectors` (optional, column-major) receives
/// the eigenvectors. Throws ConvergenceError after `max_sweeps`.
void jacobi_eigen(std::span<double> a, int m, std::span<double> values,
                  std::span<double> vectors = {}, int max_sweeps = 30);

/// Coefficient tensor T^{ij,kl} with T^{ij,kl} = T^{ji,kl} = T^{ij,lk},
/// stored as a packed m x m block T[a][b]. The major symmetry
/// T^{ij,kl} = T^{kl,ij} is not assumed.
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(int n);

  /// <T s, s> = |s|^2 on symmetric matrices.
  static Tensor4 identity(int n);

  int dim() const { return n_; }
  int packed() const { return packed_size(n_); }

  double operator()(int a, int b) const { return t_[a * kMaxPacked + b]; }
  double& operator()(int a, int b) { return t_[a * kMaxPacked + b]; }
  double entry(int i, int j, int k, int l) const {
    return (*this)(packed_index(n_, i, j), packed_index(n_, k, l));
  }

  /// sum_{ijkl} T^{ij,kl} s_ij t_kl
  double contract(const SymMat& s, const SymMat& t) const;
  /// (T s)_kl = sum_{ij} T^{ij,kl} s_ij
  SymMat apply(const SymMat& s) const;

  Tensor4& operator+=(const Tensor4& o);
  Tensor4& operator*=(double s);
  friend Tensor4 operator*(double s, Tensor4 t) { return t *= s; }

  double max_abs() const;
  bool finite() const;

 private:
  int n_ = 0;
  std::array<double, kMaxPacked * kMaxPacked> t_{};
};

/// Smallest eigenvalue of the form s -> <T s, s> on symmetric matrices with
/// the Frobenius norm (the Legendre ellipticity constant at one point).
double legendre_min_eigenvalue(const Tensor4& t);

struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};
/// Gauss-Legendre rule with `count` points on [0, 1].
Quadrature gauss_legendre_unit(int count);

}  // namespace hessvar
