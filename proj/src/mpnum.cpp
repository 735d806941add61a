#include "oppq/mpnum.hpp"

#include <algorithm>
#include <sstream>
#include <utility>

namespace oppq {

void set_working_precision(unsigned digits) {
  if (digits < kMinPrecision)
    throw std::invalid_argument("working precision must be at least " +
                                std::to_string(kMinPrecision) + " digits, got " +
                                std::to_string(digits));
  BigReal::default_precision(digits);
}

unsigned working_precision() { return BigReal::default_precision(); }

PrecisionScope::PrecisionScope(unsigned digits) : saved_(BigReal::default_precision()) {
  BigReal::default_precision(digits);
}

PrecisionScope::~PrecisionScope() { BigReal::default_precision(saved_); }

BigReal parse_real(std::string_view text) {
  std::string s(text);
  auto first = s.find_first_not_of(" \t");
  auto last = s.find_last_not_of(" \t");
  if (first == std::string::npos)
    throw std::invalid_argument("empty decimal literal");
  s = s.substr(first, last - first + 1);
  try {
    return BigReal(s);
  } catch (const std::exception &) {
    throw std::invalid_argument("malformed decimal literal '" + s + "'");
  }
}

std::string to_decimal(const BigReal &x, unsigned digits) {
  if (digits == 0)
    digits = working_precision();
  return x.str(static_cast<std::streamsize>(digits), std::ios_base::fmtflags(0));
}

BigReal pow10(int exponent) { return boost::multiprecision::pow(BigReal(10), exponent); }

BigReal rounded(const BigReal &x) {
  // Plain assignment would copy x's precision along with its value.
  BigReal r;
  mpfr_set(r.backend().data(), x.backend().data(), MPFR_RNDN);
  return r;
}

NotPositiveDefinite::NotPositiveDefinite(std::size_t row, const BigReal &pivot)
    : NumericError("matrix is not positive definite: pivot " + to_decimal(pivot, 12) +
                   " at row " + std::to_string(row) +
                   " (raise the precision or lower the order)"),
      row_(row), pivot_(pivot) {}

DimensionMismatch::DimensionMismatch(std::size_t expected, std::size_t actual)
    : NumericError("dimension mismatch: expected " + std::to_string(expected) + ", got " +
                   std::to_string(actual)) {}

NoConvergence::NoConvergence(std::size_t iterations)
    : NumericError("no convergence after " + std::to_string(iterations) + " iterations"),
      iterations_(iterations) {}

// ---------------------------------------------------------------------------

SymMatrix::SymMatrix(std::size_t dim) : dim_(dim), data_(dim * (dim + 1) / 2, BigReal(0)) {}

SymMatrix SymMatrix::identity(std::size_t dim) {
  SymMatrix m(dim);
  for (std::size_t i = 0; i < dim; ++i)
    m(i, i) = 1;
  return m;
}

SymMatrix SymMatrix::leading(std::size_t dim) const {
  if (dim > dim_)
    throw DimensionMismatch(dim_, dim);
  SymMatrix m(dim);
  std::copy_n(data_.begin(), dim * (dim + 1) / 2, m.data_.begin());
  return m;
}

Vector SymMatrix::multiply(std::span<const BigReal> x) const {
  if (x.size() != dim_)
    throw DimensionMismatch(dim_, x.size());
  Vector y(dim_, BigReal(0));
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = 0; j < dim_; ++j)
      y[i] += (*this)(i, j) * x[j];
  return y;
}

BigReal SymMatrix::quadratic_form(std::span<const BigReal> x) const {
  return dot(x, multiply(x));
}

BigReal SymMatrix::norm_inf() const {
  BigReal best = 0;
  for (std::size_t i = 0; i < dim_; ++i) {
    BigReal s = 0;
    for (std::size_t j = 0; j < dim_; ++j)
      s += abs((*this)(i, j));
    if (s > best)
      best = s;
  }
  return best;
}

LowerTriangular::LowerTriangular(std::size_t dim)
    : dim_(dim), data_(dim * (dim + 1) / 2, BigReal(0)) {}

BigReal LowerTriangular::at(std::size_t i, std::size_t j) const {
  return j > i ? BigReal(0) : (*this)(i, j);
}

SymMatrix LowerTriangular::gram() const {
  SymMatrix g(dim_);
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      BigReal s = 0;
      for (std::size_t k = 0; k <= j; ++k)
        s += (*this)(i, k) * (*this)(j, k);
      g(i, j) = s;
    }
  return g;
}

LowerTriangular cholesky(const SymMatrix &w) {
  const std::size_t n = w.dim();
  if (n == 0)
    throw DimensionMismatch(1, 0);
  LowerTriangular c(n);
  BigReal s;
  for (std::size_t j = 0; j < n; ++j) {
    s = w(j, j);
    auto rj = c.row(j);
    for (std::size_t k = 0; k < j; ++k)
      s -= rj[k] * rj[k];
    if (s <= 0)
      throw NotPositiveDefinite(j, s);
    c(j, j) = sqrt(s);
    const BigReal &djj = c(j, j);
    for (std::size_t i = j + 1; i < n; ++i) {
      s = w(i, j);
      auto ri = c.row(i);
      for (std::size_t k = 0; k < j; ++k)
        s -= ri[k] * rj[k];
      c(i, j) = s / djj;
    }
  }
  return c;
}

Vector solve_lower(const LowerTriangular &c, std::span<const BigReal> b) {
  const std::size_t n = c.dim();
  if (b.size() != n)
    throw DimensionMismatch(n, b.size());
  Vector x(n);
  for (std::size_t i = 0; i < n; ++i) {
    BigReal s = b[i];
    for (std::size_t k = 0; k < i; ++k)
      s -= c(i, k) * x[k];
    x[i] = s / c(i, i);
  }
  return x;
}

Vector solve_lower_transposed(const LowerTriangular &c, std::span<const BigReal> b) {
  const std::size_t n = c.dim();
  if (b.size() != n)
    throw DimensionMismatch(n, b.size());
  Vector x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    BigReal s = b[ii];
    for (std::size_t k = ii + 1; k < n; ++k)
      s -= c(k, ii) * x[k];
    x[ii] = s / c(ii, ii);
  }
  return x;
}

LowerTriangular invert_lower(const LowerTriangular &c) {
  const std::size_t n = c.dim();
  LowerTriangular inv(n);
  BigReal s;
  // Row i of C^{-1} from C^{-1} C = I, solved right to left.
  for (std::size_t i = 0; i < n; ++i) {
    inv(i, i) = 1 / c(i, i);
    for (std::size_t jj = i; jj-- > 0;) {
      s = 0;
      for (std::size_t k = jj + 1; k <= i; ++k)
        s += inv(i, k) * c(k, jj);
      inv(i, jj) = -s / c(jj, jj);
    }
  }
  return inv;
}

Vector spd_solve(const SymMatrix &a, std::span<const BigReal> b) {
  if (b.size() != a.dim())
    throw DimensionMismatch(a.dim(), b.size());
  auto c = cholesky(a);
  auto y = solve_lower(c, b);
  return solve_lower_transposed(c, y);
}

std::size_t count_below(const SymMatrix &p, const BigReal &shift) {
  const std::size_t n = p.dim();
  // LDL^T of P - shift I without pivoting; a zero pivot is nudged negative
  // so that the count stays a strict "below" count.
  const BigReal tiny = pow10(-static_cast<int>(working_precision())) * (p.norm_inf() + 1);
  std::vector<BigReal> d(n);
  std::vector<Vector> l(n, Vector(n, BigReal(0)));
  std::size_t negatives = 0;
  for (std::size_t k = 0; k < n; ++k) {
    BigReal dk = p(k, k) - shift;
    for (std::size_t j = 0; j < k; ++j)
      dk -= l[k][j] * l[k][j] * d[j];
    if (dk == 0)
      dk = -tiny;
    d[k] = dk;
    if (dk < 0)
      ++negatives;
    for (std::size_t i = k + 1; i < n; ++i) {
      BigReal s = p(i, k);
      for (std::size_t j = 0; j < k; ++j)
        s -= l[i][j] * l[k][j] * d[j];
      l[i][k] = s / dk;
    }
  }
  return negatives;
}

namespace {

// Dense solve with partial pivoting; returns false on an exactly zero pivot.
bool dense_solve(std::vector<Vector> a, Vector b, Vector &x) {
  const std::size_t n = b.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (abs(a[i][k]) > abs(a[piv][k]))
        piv = i;
    if (a[piv][k] == 0)
      return false;
    std::swap(a[k], a[piv]);
    std::swap(b[k], b[piv]);
    for (std::size_t i = k + 1; i < n; ++i) {
      BigReal f = a[i][k] / a[k][k];
      for (std::size_t j = k; j < n; ++j)
        a[i][j] -= f * a[k][j];
      b[i] -= f * b[k];
    }
  }
  x.assign(n, BigReal(0));
  for (std::size_t ii = n; ii-- > 0;) {
    BigReal s = b[ii];
    for (std::size_t j = ii + 1; j < n; ++j)
      s -= a[ii][j] * x[j];
    x[ii] = s / a[ii][ii];
  }
  return true;
}

void normalize(Vector &v) {
  BigReal nrm = norm2(v);
  for (auto &x : v)
    x /= nrm;
}

} // namespace

Eigenpair smallest_eigenvalue(const SymMatrix &p) {
  const std::size_t n = p.dim();
  if (n == 0)
    throw DimensionMismatch(1, 0);
  if (n == 1)
    return {p(0, 0), Vector{BigReal(1)}, p(0, 0), p(0, 0)};

  BigReal lo = p(0, 0), hi = p(0, 0);
  for (std::size_t i = 0; i < n; ++i) {
    BigReal radius = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i)
        radius += abs(p(i, j));
    lo = min(lo, BigReal(p(i, i) - radius));
    hi = min(hi, p(i, i));
  }
  const BigReal scale = p.norm_inf();
  const BigReal tol = pow10(-static_cast<int>(working_precision())) * scale;
  hi += tol;
  lo -= tol;

  const std::size_t max_iter = 64 + 4 * working_precision();
  std::size_t iter = 0;
  while (hi - lo > tol) {
    if (++iter > max_iter)
      throw NoConvergence(iter);
    BigReal mid = (lo + hi) / 2;
    if (count_below(p, mid) >= 1)
      hi = mid;
    else
      lo = mid;
  }

  // Inverse iteration just below the bracket.
  std::vector<Vector> shifted(n, Vector(n));
  BigReal sigma = lo - tol;
  Vector v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = BigReal(1) + BigReal(i) / (2 * n);
  normalize(v);
  for (int sweep = 0; sweep < 4; ++sweep) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        shifted[i][j] = p(i, j) - (i == j ? sigma : BigReal(0));
    Vector next;
    if (!dense_solve(shifted, v, next)) {
      sigma -= tol;
      continue;
    }
    v = std::move(next);
    normalize(v);
  }
  // Sign convention: largest-magnitude component positive.
  std::size_t big = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (abs(v[i]) > abs(v[big]))
      big = i;
  if (v[big] < 0)
    for (auto &x : v)
      x = -x;

  BigReal value = p.quadratic_form(v);
  return {value, std::move(v), lo, hi};
}

BigReal dot(std::span<const BigReal> a, std::span<const BigReal> b) {
  if (a.size() != b.size())
    throw DimensionMismatch(a.size(), b.size());
  BigReal s = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += a[i] * b[i];
  return s;
}

BigReal norm2(std::span<const BigReal> a) { return sqrt(dot(a, a)); }

BigReal norm_inf(std::span<const BigReal> a) {
  BigReal m = 0;
  for (const auto &x : a)
    if (abs(x) > m)
      m = abs(x);
  return m;
}

} // namespace oppq
