#include "hessvar/sym_mat.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hessvar/errors.hpp"

namespace hessvar {
namespace {

using Dense = std::array<double, kMaxDim * kMaxDim>;

Dense to_dense(const SymMat& m) {
  Dense d{};
  const int n = m.dim();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) d[i * kMaxDim + j] = m(i, j);
  return d;
}

Dense multiply(const Dense& a, const Dense& b, int n) {
  Dense c{};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += a[i * kMaxDim + k] * b[k * kMaxDim + j];
      c[i * kMaxDim + j] = s;
    }
  return c;
}

SymMat symmetric_part(const Dense& d, int n) {
  SymMat m(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) m.set(i, j, 0.5 * (d[i * kMaxDim + j] + d[j * kMaxDim + i]));
  return m;
}

}  // namespace

std::array<int, 2> packed_pair(int n, int a) {
  for (int i = 0; i < n; ++i) {
    const int row = n - i;
    if (a < row) return {i, i + a};
    a -= row;
  }
  throw PreconditionError("packed index out of range");
}

SymMat::SymMat(int n) : n_(n) {
  if (n < 1 || n > kMaxDim) throw PreconditionError("SymMat dimension must be 1..3");
}

SymMat SymMat::identity(int n) {
  SymMat m(n);
  for (int i = 0; i < n; ++i) m.set(i, i, 1.0);
  return m;
}

SymMat SymMat::diagonal(std::span<const double> d) {
  SymMat m(static_cast<int>(d.size()));
  for (int i = 0; i < m.dim(); ++i) m.set(i, i, d[i]);
  return m;
}

SymMat SymMat::from_packed(int n, std::span<const double> packed) {
  SymMat m(n);
  if (static_cast<int>(packed.size()) != m.size()) throw PreconditionError("packed size mismatch");
  std::copy(packed.begin(), packed.end(), m.p_.begin());
  return m;
}

SymMat SymMat::unit_basis(int n, int a) {
  SymMat m(n);
  const auto p = packed_pair(n, a);
  m.p_[a] = p[0] == p[1] ? 1.0 : std::numbers::sqrt2 / 2.0;
  return m;
}

SymMat SymMat::direction(int n, int a) {
  SymMat m(n);
  const auto p = packed_pair(n, a);
  m.p_[a] = p[0] == p[1] ? 1.0 : 0.5;
  return m;
}

SymMat& SymMat::operator+=(const SymMat& o) {
  for (int a = 0; a < size(); ++a) p_[a] += o.p_[a];
  return *this;
}

SymMat& SymMat::operator-=(const SymMat& o) {
  for (int a = 0; a < size(); ++a) p_[a] -= o.p_[a];
  return *this;
}

SymMat& SymMat::operator*=(double s) {
  for (int a = 0; a < size(); ++a) p_[a] *= s;
  return *this;
}

bool operator==(const SymMat& a, const SymMat& b) { return a.n_ == b.n_ && a.p_ == b.p_; }

bool SymMat::finite() const {
  for (int a = 0; a < size(); ++a)
    if (!std::isfinite(p_[a])) return false;
  return true;
}

double inner(const SymMat& a, const SymMat& b) {
  const int n = a.dim();
  double s = 0.0;
  for (int k = 0; k < a.size(); ++k) s += packed_weight(n, k) * a.packed(k) * b.packed(k);
  return s;
}

double frobenius_norm(const SymMat& m) { return std::sqrt(inner(m, m)); }

double operator_norm(const SymMat& m) {
  const auto ev = eigenvalues(m);
  double r = 0.0;
  for (int i = 0; i < m.dim(); ++i) r = std::max(r, std::fabs(ev[i]));
  return r;
}

SymMat square(const SymMat& m) {
  const Dense d = to_dense(m);
  return symmetric_part(multiply(d, d, m.dim()), m.dim());
}

SymMat sym_product(const SymMat& a, const SymMat& b, const SymMat& c) {
  const int n = a.dim();
  return symmetric_part(multiply(multiply(to_dense(a), to_dense(b), n), to_dense(c), n), n);
}

double trace_product(const SymMat& a, const SymMat& b) {
  // tr(AB) = <A, B> for symmetric A, B.
  return inner(a, b);
}

double trace_product(const SymMat& a, const SymMat& b, const SymMat& c) {
  const int n = a.dim();
  const Dense ab = multiply(to_dense(a), to_dense(b), n);
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) s += ab[i * kMaxDim + k] * c(k, i);
  return s;
}

double determinant(const SymMat& m) {
  switch (m.dim()) {
    case 1:
      return m(0, 0);
    case 2:
      return m(0, 0) * m(1, 1) - m(0, 1) * m(0, 1);
    default:
      return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(1, 2)) -
             m(0, 1) * (m(0, 1) * m(2, 2) - m(1, 2) * m(0, 2)) +
             m(0, 2) * (m(0, 1) * m(1, 2) - m(1, 1) * m(0, 2));
  }
}

SymMat inverse(const SymMat& m) {
  const int n = m.dim();
  const double det = determinant(m);
  if (det == 0.0 || !std::isfinite(det)) throw PreconditionError("singular matrix");
  SymMat r(n);
  switch (n) {
    case 1:
      r.set(0, 0, 1.0 / m(0, 0));
      break;
    case 2:
      r.set(0, 0, m(1, 1) / det);
      r.set(1, 1, m(0, 0) / det);
      r.set(0, 1, -m(0, 1) / det);
      break;
    default:
      r.set(0, 0, (m(1, 1) * m(2, 2) - m(1, 2) * m(1, 2)) / det);
      r.set(0, 1, (m(0, 2) * m(1, 2) - m(0, 1) * m(2, 2)) / det);
      r.set(0, 2, (m(0, 1) * m(1, 2) - m(0, 2) * m(1, 1)) / det);
      r.set(1, 1, (m(0, 0) * m(2, 2) - m(0, 2) * m(0, 2)) / det);
      r.set(1, 2, (m(0, 1) * m(0, 2) - m(0, 0) * m(1, 2)) / det);
      r.set(2, 2, (m(0, 0) * m(1, 1) - m(0, 1) * m(0, 1)) / det);
      break;
  }
  return r;
}

void jacobi_eigen(std::span<double> a, int m, std::span<double> values, std::span<double> vectors,
                  int max_sweeps) {
  const bool want_vectors = !vectors.empty();
  if (want_vectors) {
    std::fill(vectors.begin(), vectors.begin() + m * m, 0.0);
    for (int i = 0; i < m; ++i) vectors[i * m + i] = 1.0;
  }
  auto at = [&](int i, int j) -> double& { return a[i * m + j]; };
  double total = 0.0;
  for (int i = 0; i < m * m; ++i) total += a[i] * a[i];
  const double floor = 1e-32 * total;

  bool converged = false;
  for (int sweep = 0; sweep <= max_sweeps; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < m; ++p)
      for (int q = p + 1; q < m; ++q) off += at(p, q) * at(p, q);
    if (off <= floor || off == 0.0) {
      converged = true;
      break;
    }
    if (sweep == max_sweeps) break;
    for (int p = 0; p < m; ++p) {
      for (int q = p + 1; q < m; ++q) {
        const double apq = at(p, q);
        if (apq == 0.0) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::fabs(theta) + std::hypot(theta, 1.0));
        const double c = 1.0 / std::hypot(t, 1.0);
        const double s = t * c;
        for (int k = 0; k < m; ++k) {
          const double akp = at(k, p);
          const double akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < m; ++k) {
          const double apk = at(p, k);
          const double aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
        if (want_vectors) {
          for (int k = 0; k < m; ++k) {
            const double vkp = vectors[k * m + p];
            const double vkq = vectors[k * m + q];
            vectors[k * m + p] = c * vkp - s * vkq;
            vectors[k * m + q] = s * vkp + c * vkq;
          }
        }
      }
    }
  }
  if (!converged) throw ConvergenceError("Jacobi eigenvalue iteration did not converge");

  // Sort ascending, carrying eigenvector columns.
  std::array<int, kMaxPacked * 2> order{};
  for (int i = 0; i < m; ++i) order[i] = i;
  std::sort(order.begin(), order.begin() + m, [&](int x, int y) { return at(x, x) < at(y, y); });
  std::array<double, kMaxPacked * kMaxPacked> vcopy{};
  if (want_vectors) std::copy(vectors.begin(), vectors.begin() + m * m, vcopy.begin());
  for (int k = 0; k < m; ++k) {
    values[k] = at(order[k], order[k]);
    if (want_vectors)
      for (int r = 0; r < m; ++r) vectors[r * m + k] = vcopy[r * m + order[k]];
  }
}

std::array<double, kMaxDim> eigenvalues(const SymMat& m) {
  std::array<double, kMaxDim> ev{};
  const int n = m.dim();
  if (n == 1) {
    ev[0] = m(0, 0);
  } else if (n == 2) {
    const double mean = 0.5 * (m(0, 0) + m(1, 1));
    const double rad = std::hypot(0.5 * (m(0, 0) - m(1, 1)), m(0, 1));
    ev[0] = mean - rad;
    ev[1] = mean + rad;
  } else {
    Dense d = to_dense(m);
    std::array<double, 9> a{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) a[i * 3 + j] = d[i * kMaxDim + j];
    jacobi_eigen(a, 3, std::span<double>(ev.data(), 3));
  }
  return ev;
}

SymEigen eigen_decomposition(const SymMat& m) {
  const int n = m.dim();
  SymEigen out;
  std::array<double, 9> a{};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a[i * n + j] = m(i, j);
  std::array<double, 9> vec{};
  jacobi_eigen(std::span<double>(a.data(), n * n), n, std::span<double>(out.values.data(), n),
               std::span<double>(vec.data(), n * n));
  // Jacobi writes row-major n x n with eigenvectors in columns; re-pack column-major.
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) out.vectors[c * n + r] = vec[r * n + c];
  return out;
}

SymMat rotate_diagonal(int n, std::span<const double> values, std::span<const double> rotation) {
  SymMat m(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += rotation[k * n + i] * values[k] * rotation[k * n + j];
      m.set(i, j, s);
    }
  return m;
}

Tensor4::Tensor4(int n) : n_(n) {
  if (n < 1 || n > kMaxDim) throw PreconditionError("Tensor4 dimension must be 1..3");
}

Tensor4 Tensor4::identity(int n) {
  // T^{ij,kl} = (d_ik d_jl + d_il d_jk)/2
  Tensor4 t(n);
  for (int a = 0; a < t.packed(); ++a) {
    const auto p = packed_pair(n, a);
    t(a, a) = p[0] == p[1] ? 1.0 : 0.5;
  }
  return t;
}

double Tensor4::contract(const SymMat& s, const SymMat& t) const {
  double r = 0.0;
  const int m = packed();
  for (int a = 0; a < m; ++a) {
    const double sa = packed_weight(n_, a) * s.packed(a);
    if (sa == 0.0) continue;
    for (int b = 0; b < m; ++b) r += sa * (*this)(a, b) * packed_weight(n_, b) * t.packed(b);
  }
  return r;
}

SymMat Tensor4::apply(const SymMat& s) const {
  SymMat out(n_);
  const int m = packed();
  for (int b = 0; b < m; ++b) {
    double v = 0.0;
    for (int a = 0; a < m; ++a) v += packed_weight(n_, a) * (*this)(a, b) * s.packed(a);
    out.packed(b) = v;
  }
  return out;
}

Tensor4& Tensor4::operator+=(const Tensor4& o) {
  for (std::size_t i = 0; i < t_.size(); ++i) t_[i] += o.t_[i];
  return *this;
}

Tensor4& Tensor4::operator*=(double s) {
  for (double& v : t_) v *= s;
  return *this;
}

double Tensor4::max_abs() const {
  double r = 0.0;
  for (double v : t_) r = std::max(r, std::fabs(v));
  return r;
}

bool Tensor4::finite() const {
  for (double v : t_)
    if (!std::isfinite(v)) return false;
  return true;
}

double legendre_min_eigenvalue(const Tensor4& t) {
  const int n = t.dim();
  const int m = t.packed();
  std::array<SymMat, kMaxPacked> basis;
  for (int a = 0; a < m; ++a) basis[a] = SymMat::unit_basis(n, a);
  std::array<double, kMaxPacked * kMaxPacked> gram{};
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) gram[a * m + b] = t.contract(basis[a], basis[b]);
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b) {
      const double s = 0.5 * (gram[a * m + b] + gram[b * m + a]);
      gram[a * m + b] = gram[b * m + a] = s;
    }
  std::array<double, kMaxPacked> ev{};
  jacobi_eigen(std::span<double>(gram.data(), m * m), m, std::span<double>(ev.data(), m));
  return ev[0];
}

Quadrature gauss_legendre_unit(int count) {
  if (count < 1) throw PreconditionError("quadrature needs at least one node");
  Quadrature q;
  q.nodes.resize(count);
  q.weights.resize(count);
  for (int i = 0; i < (count + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (count + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= count; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = count * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged root for the weight.
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= count; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = count * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // Map [-1, 1] -> [0, 1].
    q.nodes[i] = 0.5 * (1.0 - x);
    q.nodes[count - 1 - i] = 0.5 * (1.0 + x);
    q.weights[i] = q.weights[count - 1 - i] = 0.5 * w;
  }
  std::sort(q.nodes.begin(), q.nodes.end());
  return q;
}

}  // namespace hessvar
