#include "hessvar/energy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "hessvar/errors.hpp"
#include "hessvar/sampling.hpp"

namespace hessvar {

namespace {

using Dense = std::array<double, kMaxDim * kMaxDim>;

Dense to_dense(const SymMat& s) {
  Dense d{};
  const int n = s.dim();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) d[i * n + j] = s(i, j);
  return d;
}

Dense mul(int n, const Dense& a, const Dense& b) {
  Dense c{};
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      const double aik = a[i * n + k];
      for (int j = 0; j < n; ++j) c[i * n + j] += aik * b[k * n + j];
    }
  return c;
}

double trace_mul(int n, const Dense& a, const Dense& b) {
  double t = 0.0;
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) t += a[i * n + k] * b[k * n + i];
  return t;
}

SymMat symmetric_part(int n, const Dense& d) {
  SymMat s(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) s.set(i, j, 0.5 * (d[i * n + j] + d[j * n + i]));
  return s;
}

double area_value(const SymMat& m) {
  const int n = m.dim();
  return std::sqrt(determinant(SymMat::identity(n) + square(m)));
}

SymMat area_first(const SymMat& m) {
  const int n = m.dim();
  const SymMat ginv = inverse(SymMat::identity(n) + square(m));
  const double v = area_value(m);
  // g^{-1} and M commute, so g^{-1} M is symmetric.
  return v * symmetric_part(n, mul(n, to_dense(ginv), to_dense(m)));
}

Tensor4 area_second(const SymMat& m) {
  const int n = m.dim();
  const int p = packed_size(n);
  const SymMat g = SymMat::identity(n) + square(m);
  const double v = std::sqrt(determinant(g));
  const Dense gi = to_dense(inverse(g));
  const Dense md = to_dense(m);
  const Dense k = mul(n, gi, md);
  const Dense pm = mul(n, md, k);  // M g^{-1} M

  std::array<Dense, kMaxPacked> s{}, z{}, y{}, ps{};
  std::array<double, kMaxPacked> kc{};
  for (int a = 0; a < p; ++a) {
    s[a] = to_dense(SymMat::direction(n, a));
    z[a] = mul(n, gi, s[a]);
    y[a] = mul(n, k, s[a]);
    ps[a] = mul(n, pm, s[a]);
    kc[a] = trace_mul(n, k, s[a]);
  }
  Tensor4 t(n);
  for (int a = 0; a < p; ++a)
    for (int b = a; b < p; ++b) {
      const double val = kc[a] * kc[b] - trace_mul(n, z[b], ps[a]) - trace_mul(n, y[b], y[a]) +
                         trace_mul(n, z[b], s[a]);
      t(a, b) = t(b, a) = v * val;
    }
  return t;
}

double step_for(const SymMat& m, double relative, const DifferenceSteps& steps) {
  if (steps.absolute > 0.0) return steps.absolute;
  return relative * (1.0 + frobenius_norm(m));
}

}  // namespace

const char* model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::Quadratic: return "quadratic";
    case ModelKind::Area: return "area";
    case ModelKind::Custom: return "custom";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// coefficient tables

std::size_t CoefficientTable::expected_size() const {
  std::size_t s = 1;
  for (int a = 0; a < packed_size(dim); ++a) s *= static_cast<std::size_t>(points);
  return s;
}

CoefficientTable read_coefficient_table(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "dim,points,lo,hi")
    throw PreconditionError("coefficient table must start with 'dim,points,lo,hi'");
  CoefficientTable t;
  if (!std::getline(is, line)) throw PreconditionError("coefficient table missing metadata row");
  {
    std::istringstream row(line);
    char c1 = 0, c2 = 0, c3 = 0;
    if (!(row >> t.dim >> c1 >> t.points >> c2 >> t.lo >> c3 >> t.hi) || c1 != ',' || c2 != ',' ||
        c3 != ',')
      throw PreconditionError("malformed coefficient table metadata: " + line);
  }
  if (t.dim < 2 || t.dim > kMaxDim) throw PreconditionError("coefficient table dimension must be 2 or 3");
  if (t.points < 2) throw PreconditionError("coefficient table needs at least 2 points per entry");
  if (!(t.hi > t.lo)) throw PreconditionError("coefficient table needs hi > lo");
  if (!std::getline(is, line) || line != "index,value")
    throw PreconditionError("coefficient table column header must be 'index,value'");
  const std::size_t total = t.expected_size();
  t.values.assign(total, 0.0);
  std::vector<std::uint8_t> seen(total, 0);
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    long long idx = -1;
    char comma = 0;
    double value = 0.0;
    if (!(row >> idx >> comma >> value) || comma != ',')
      throw PreconditionError("malformed coefficient table row: " + line);
    if (idx < 0 || static_cast<std::size_t>(idx) >= total)
      throw PreconditionError("coefficient table index out of range");
    if (seen[idx]) throw PreconditionError("coefficient table lists an index twice");
    if (!std::isfinite(value)) throw PreconditionError("coefficient table values must be finite");
    seen[idx] = 1;
    t.values[idx] = value;
    ++rows;
  }
  if (rows != total) throw PreconditionError("coefficient table does not cover the lattice");
  return t;
}

void write_coefficient_table(std::ostream& os, const CoefficientTable& t) {
  os << "dim,points,lo,hi\n" << t.dim << ',' << t.points << ',';
  os.precision(17);
  os << t.lo << ',' << t.hi << "\nindex,value\n";
  for (std::size_t i = 0; i < t.values.size(); ++i) os << i << ',' << t.values[i] << '\n';
}

double interpolate(const CoefficientTable& t, const SymMat& m) {
  const int p = packed_size(t.dim);
  const double h = t.spacing();
  std::array<int, kMaxPacked> base{};
  std::array<double, kMaxPacked> frac{};
  for (int a = 0; a < p; ++a) {
    const double x = m.packed(a);
    if (!(x >= t.lo - 1e-12 * h && x <= t.hi + 1e-12 * h))
      throw AdmissibilityError("matrix outside the coefficient table lattice");
    double s = (x - t.lo) / h;
    int k = static_cast<int>(std::floor(s));
    k = std::clamp(k, 0, t.points - 2);
    base[a] = k;
    frac[a] = std::clamp(s - k, 0.0, 1.0);
  }
  double result = 0.0;
  for (int corner = 0; corner < (1 << p); ++corner) {
    double w = 1.0;
    std::size_t flat = 0;
    for (int a = 0; a < p; ++a) {
      const int bit = (corner >> a) & 1;
      w *= bit ? frac[a] : 1.0 - frac[a];
      flat = flat * t.points + static_cast<std::size_t>(base[a] + bit);
    }
    if (w != 0.0) result += w * t.values[flat];
  }
  return result;
}

// ---------------------------------------------------------------------------
// finite differences

SymMat numeric_first_derivative(const std::function<double(const SymMat&)>& f, const SymMat& m,
                                const DifferenceSteps& steps) {
  const int n = m.dim();
  const double d = step_for(m, steps.first_relative, steps);
  SymMat out(n);
  for (int a = 0; a < m.size(); ++a) {
    const SymMat s = SymMat::direction(n, a);
    auto central = [&](double e) { return (f(m + e * s) - f(m - e * s)) / (2.0 * e); };
    const double coarse = central(d);
    out.packed(a) = steps.richardson ? (4.0 * central(0.5 * d) - coarse) / 3.0 : coarse;
  }
  return out;
}

Tensor4 numeric_second_derivative(const std::function<double(const SymMat&)>& f, const SymMat& m,
                                  const DifferenceSteps& steps) {
  const int n = m.dim();
  const double d = step_for(m, steps.second_relative, steps);
  Tensor4 t(n);
  for (int a = 0; a < m.size(); ++a) {
    const SymMat sa = SymMat::direction(n, a);
    for (int b = a; b < m.size(); ++b) {
      const SymMat sb = SymMat::direction(n, b);
      auto mixed = [&](double e) {
        return (f(m + e * sa + e * sb) - f(m + e * sa - e * sb) - f(m - e * sa + e * sb) +
                f(m - e * sa - e * sb)) /
               (4.0 * e * e);
      };
      const double coarse = mixed(d);
      const double v = steps.richardson ? (4.0 * mixed(0.5 * d) - coarse) / 3.0 : coarse;
      t(a, b) = t(b, a) = v;
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// EnergyModel

namespace {
void check_dim(int n) {
  if (n < 2 || n > kMaxDim) throw PreconditionError("model dimension must be 2 or 3");
}
void check_radius(double r) {
  if (!(r >= 0.0)) throw PreconditionError("admissible radius must be nonnegative");
}
}  // namespace

EnergyModel EnergyModel::quadratic(int n, double admissible_radius) {
  check_dim(n);
  check_radius(admissible_radius);
  EnergyModel m;
  m.kind_ = ModelKind::Quadratic;
  m.n_ = n;
  m.radius_ = admissible_radius;
  m.name_ = "quadratic";
  return m;
}

EnergyModel EnergyModel::area(int n, double admissible_radius) {
  check_dim(n);
  check_radius(admissible_radius);
  EnergyModel m;
  m.kind_ = ModelKind::Area;
  m.n_ = n;
  m.radius_ = admissible_radius;
  m.name_ = "area";
  return m;
}

EnergyModel EnergyModel::custom(int n, double admissible_radius, ScalarFn f, std::string name) {
  check_dim(n);
  check_radius(admissible_radius);
  if (!f) throw PreconditionError("custom model needs an integrand");
  EnergyModel m;
  m.kind_ = ModelKind::Custom;
  m.n_ = n;
  m.radius_ = admissible_radius;
  m.name_ = std::move(name);
  m.f_ = std::make_shared<const ScalarFn>(std::move(f));
  return m;
}

EnergyModel EnergyModel::from_table(CoefficientTable table, double admissible_radius, std::string name) {
  check_dim(table.dim);
  check_radius(admissible_radius);
  if (table.values.size() != table.expected_size())
    throw PreconditionError("coefficient table size does not match its lattice");
  const double h = table.spacing();
  // Central differences reach one lattice step past M in each entry.
  const double reach = std::min(-table.lo, table.hi) - 2.0 * h;
  if (!(reach > 0.0)) throw PreconditionError("coefficient table lattice leaves no difference stencil around M = 0");
  EnergyModel m;
  m.kind_ = ModelKind::Custom;
  m.n_ = table.dim;
  m.radius_ = std::min(admissible_radius, reach);
  m.name_ = std::move(name);
  m.table_ = std::make_shared<const CoefficientTable>(std::move(table));
  auto tab = m.table_;
  m.f_ = std::make_shared<const ScalarFn>([tab](const SymMat& x) { return interpolate(*tab, x); });
  return m;
}

EnergyModel EnergyModel::negated() const {
  EnergyModel m = *this;
  m.sign_ = -sign_;
  return m;
}

bool EnergyModel::admissible(const SymMat& m, double margin) const {
  if (m.dim() != n_ || !m.finite()) return false;
  if (std::isinf(radius_)) return true;
  const double op = operator_norm(m);
  return margin > 0.0 ? op <= radius_ - margin : op < radius_;
}

void EnergyModel::require_admissible(const SymMat& m) const {
  if (m.dim() != n_) throw PreconditionError("matrix dimension does not match the model");
  if (!admissible(m))
    throw AdmissibilityError("matrix outside the admissible set (operator norm >= " +
                             std::to_string(radius_) + ")");
}

double EnergyModel::value(const SymMat& m) const {
  require_admissible(m);
  return value_unchecked(m);
}
SymMat EnergyModel::first_derivative(const SymMat& m) const {
  require_admissible(m);
  return first_derivative_unchecked(m);
}
Tensor4 EnergyModel::second_derivative(const SymMat& m) const {
  require_admissible(m);
  return second_derivative_unchecked(m);
}

double EnergyModel::value_unchecked(const SymMat& m) const {
  switch (kind_) {
    case ModelKind::Quadratic: return sign_ * 0.5 * inner(m, m);
    case ModelKind::Area: return sign_ * area_value(m);
    case ModelKind::Custom: return sign_ * (*f_)(m);
  }
  return 0.0;
}

SymMat EnergyModel::first_derivative_unchecked(const SymMat& m) const {
  SymMat d;
  switch (kind_) {
    case ModelKind::Quadratic: d = m; break;
    case ModelKind::Area: d = area_first(m); break;
    case ModelKind::Custom:
      if (table_) {
        DifferenceSteps s;
        s.absolute = table_->spacing();
        s.richardson = false;
        d = numeric_first_derivative(*f_, m, s);
      } else {
        d = numeric_first_derivative(*f_, m);
      }
      break;
  }
  return sign_ * d;
}

Tensor4 EnergyModel::second_derivative_unchecked(const SymMat& m) const {
  Tensor4 t;
  switch (kind_) {
    case ModelKind::Quadratic: t = Tensor4::identity(n_); break;
    case ModelKind::Area: t = area_second(m); break;
    case ModelKind::Custom:
      if (table_) {
        DifferenceSteps s;
        s.absolute = table_->spacing();
        s.richardson = false;
        t = numeric_second_derivative(*f_, m, s);
      } else {
        t = numeric_second_derivative(*f_, m);
      }
      break;
  }
  if (sign_ < 0.0) t *= -1.0;
  return t;
}

// ---------------------------------------------------------------------------

EllipticityEstimate ellipticity_constant(const EnergyModel& model, int sample_count, std::uint64_t seed) {
  if (sample_count < 1) throw PreconditionError("ellipticity estimate needs at least one sample");
  const int n = model.dim();
  const double radius = std::isinf(model.admissible_radius()) ? 1.0 : model.admissible_radius();
  std::mt19937_64 rng(seed);
  EllipticityEstimate est;
  est.samples = sample_count;
  est.seed = seed;
  est.lambda = std::numeric_limits<double>::infinity();
  for (int k = 0; k < sample_count; ++k) {
    // Stay strictly inside the open ball.
    const SymMat m = k == 0 ? SymMat(n) : random_symmetric(n, radius * (1.0 - 1e-12), rng);
    const double lam = legendre_min_eigenvalue(model.second_derivative_unchecked(m));
    if (lam < est.lambda) {
      est.lambda = lam;
      est.worst = m;
    }
  }
  est.uniformly_convex = est.lambda > 0.0;
  est.verdict = est.uniformly_convex ? "uniformly convex on sampled U"
                                     : "not uniformly convex on sampled U";
  return est;
}

void require_segment_admissible(double radius, const SymMat& m, const SymMat& m_shift) {
  if (m.dim() != m_shift.dim()) throw PreconditionError("segment endpoints differ in dimension");
  if (!m.finite() || !m_shift.finite()) throw AdmissibilityError("segment endpoint is not finite");
  if (std::isinf(radius)) return;
  if (!(operator_norm(m) < radius) || !(operator_norm(m_shift) < radius))
    throw AdmissibilityError("segment [M, M_shift] leaves the admissible set");
}

Tensor4 linearized_coefficients(const EnergyModel& model, const SymMat& m, const SymMat& m_shift,
                                int quad_nodes) {
  if (m.dim() != model.dim()) throw PreconditionError("matrix dimension does not match the model");
  require_segment_admissible(model.admissible_radius(), m, m_shift);
  const Quadrature q = gauss_legendre_unit(quad_nodes);
  const SymMat diff = m_shift - m;
  Tensor4 beta(model.dim());
  for (std::size_t k = 0; k < q.nodes.size(); ++k) {
    Tensor4 t = model.second_derivative_unchecked(m + q.nodes[k] * diff);
    t *= q.weights[k];
    beta += t;
  }
  return beta;
}

// ---------------------------------------------------------------------------
// DoubleDivergenceModel

DoubleDivergenceModel::DoubleDivergenceModel(int n, double admissible_radius, CoefficientFn a,
                                             std::string name)
    : n_(n), radius_(admissible_radius), name_(std::move(name)) {
  check_dim(n);
  check_radius(admissible_radius);
  if (!a) throw PreconditionError("double-divergence model needs a coefficient function");
  a_ = std::make_shared<const CoefficientFn>(std::move(a));
}

DoubleDivergenceModel DoubleDivergenceModel::constant(const Tensor4& c, std::string name) {
  if (!c.finite()) throw PreconditionError("constant coefficient tensor must be finite");
  DoubleDivergenceModel m(c.dim(), EnergyModel::kUnbounded, [c](const SymMat&) { return c; },
                          std::move(name));
  m.constant_ = true;
  return m;
}

DoubleDivergenceModel DoubleDivergenceModel::hamiltonian_stationary(int n, double admissible_radius) {
  return DoubleDivergenceModel(
      n, admissible_radius,
      [n](const SymMat& m) {
        const int p = packed_size(n);
        const SymMat g = SymMat::identity(n) + square(m);
        const double root = std::sqrt(determinant(g));
        const Dense gi = to_dense(inverse(g));
        std::array<Dense, kMaxPacked> s{}, z{};
        for (int a = 0; a < p; ++a) {
          s[a] = to_dense(SymMat::direction(n, a));
          z[a] = mul(n, gi, s[a]);
        }
        Tensor4 t(n);
        for (int a = 0; a < p; ++a)
          for (int b = a; b < p; ++b) t(a, b) = t(b, a) = root * trace_mul(n, z[b], s[a]);
        return t;
      },
      "hstat");
}

bool DoubleDivergenceModel::admissible(const SymMat& m, double margin) const {
  if (m.dim() != n_ || !m.finite()) return false;
  if (std::isinf(radius_)) return true;
  const double op = operator_norm(m);
  return margin > 0.0 ? op <= radius_ - margin : op < radius_;
}

Tensor4 DoubleDivergenceModel::coefficients(const SymMat& m) const {
  if (m.dim() != n_) throw PreconditionError("matrix dimension does not match the model");
  if (!admissible(m)) throw AdmissibilityError("matrix outside the admissible set of the coefficient model");
  return coefficients_unchecked(m);
}

Tensor4 DoubleDivergenceModel::coefficients_unchecked(const SymMat& m) const { return (*a_)(m); }

SymMat DoubleDivergenceModel::flux(const SymMat& x, const SymMat& m) const {
  return coefficients_unchecked(x).apply(m);
}

Tensor4 linearized_coefficients_dd(const DoubleDivergenceModel& model, const SymMat& m,
                                   const SymMat& m_shift, int quad_nodes) {
  if (m.dim() != model.dim()) throw PreconditionError("matrix dimension does not match the model");
  require_segment_admissible(model.admissible_radius(), m, m_shift);
  const int n = model.dim();
  const int p = packed_size(n);
  const Quadrature q = gauss_legendre_unit(quad_nodes);
  const SymMat diff = m_shift - m;
  Tensor4 b(n);
  for (std::size_t k = 0; k < q.nodes.size(); ++k) {
    const SymMat x = m + q.nodes[k] * diff;
    Tensor4 term = model.coefficients_unchecked(x);
    if (!model.is_constant()) {
      const double d = 1e-5 * (1.0 + frobenius_norm(x));
      for (int c = 0; c < p; ++c) {
        const SymMat s = SymMat::direction(n, c);
        auto central = [&](double e) {
          SymMat z = model.flux(x + e * s, m);
          z -= model.flux(x - e * s, m);
          return (1.0 / (2.0 * e)) * z;
        };
        const SymMat coarse = central(d);
        const SymMat fine = central(0.5 * d);
        for (int col = 0; col < p; ++col)
          term(c, col) += (4.0 * fine.packed(col) - coarse.packed(col)) / 3.0;
      }
    }
    term *= q.weights[k];
    b += term;
  }
  return b;
}

}  // namespace hessvar
