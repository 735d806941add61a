#pragma once

// Arbitrary-precision scalar facade and the small dense SPD kernel used by
// every other part of the library.

#include <boost/multiprecision/mpfr.hpp>

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace oppq {

using BigReal = boost::multiprecision::mpfr_float;
using Vector = std::vector<BigReal>;

/// Smallest working precision (decimal digits) accepted anywhere.
inline constexpr unsigned kMinPrecision = 30;

/// Sets the process-wide working precision in decimal digits.
void set_working_precision(unsigned digits);
unsigned working_precision();

/// Temporarily changes the working precision; restores it on scope exit.
class PrecisionScope {
public:
  explicit PrecisionScope(unsigned digits);
  ~PrecisionScope();
  PrecisionScope(const PrecisionScope &) = delete;
  PrecisionScope &operator=(const PrecisionScope &) = delete;

private:
  unsigned saved_;
};

/// Parses a decimal literal ("1.25", "-3e-4") at the current precision.
BigReal parse_real(std::string_view text);

/// Decimal string with `digits` significant digits (0 means working precision).
std::string to_decimal(const BigReal &x, unsigned digits = 0);

/// 10^exponent at working precision.
BigReal pow10(int exponent);

/// Re-rounds x to the current working precision.
BigReal rounded(const BigReal &x);

// ---------------------------------------------------------------------------
// Errors

class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class NotPositiveDefinite : public NumericError {
public:
  NotPositiveDefinite(std::size_t row, const BigReal &pivot);
  std::size_t row() const noexcept { return row_; }
  const BigReal &pivot() const noexcept { return pivot_; }

private:
  std::size_t row_;
  BigReal pivot_;
};

class DimensionMismatch : public NumericError {
public:
  DimensionMismatch(std::size_t expected, std::size_t actual);
};

class NoConvergence : public NumericError {
public:
  explicit NoConvergence(std::size_t iterations);
  std::size_t iterations() const noexcept { return iterations_; }

private:
  std::size_t iterations_;
};

// ---------------------------------------------------------------------------
// Matrices

/// Symmetric matrix, packed lower storage so (i,j) and (j,i) share one value.
class SymMatrix {
public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }
  const BigReal &operator()(std::size_t i, std::size_t j) const {
    return data_[index(i, j)];
  }
  BigReal &operator()(std::size_t i, std::size_t j) { return data_[index(i, j)]; }

  static SymMatrix identity(std::size_t dim);
  /// Leading principal block of size `dim`.
  SymMatrix leading(std::size_t dim) const;

  Vector multiply(std::span<const BigReal> x) const;
  BigReal quadratic_form(std::span<const BigReal> x) const;
  BigReal norm_inf() const;

private:
  static std::size_t index(std::size_t i, std::size_t j) noexcept {
    return i >= j ? i * (i + 1) / 2 + j : j * (j + 1) / 2 + i;
  }
  std::size_t dim_ = 0;
  std::vector<BigReal> data_;
};

/// Lower-triangular matrix with packed row storage.
class LowerTriangular {
public:
  LowerTriangular() = default;
  explicit LowerTriangular(std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }
  /// Zero above the diagonal.
  BigReal at(std::size_t i, std::size_t j) const;
  BigReal &operator()(std::size_t i, std::size_t j) { return data_[i * (i + 1) / 2 + j]; }
  const BigReal &operator()(std::size_t i, std::size_t j) const {
    return data_[i * (i + 1) / 2 + j];
  }
  /// Entries j = 0..i of row i.
  std::span<const BigReal> row(std::size_t i) const {
    return {data_.data() + i * (i + 1) / 2, i + 1};
  }

  /// Reconstructs L * L^T.
  SymMatrix gram() const;

private:
  std::size_t dim_ = 0;
  std::vector<BigReal> data_;
};

/// W = C C^T with strictly positive diagonal; throws NotPositiveDefinite.
LowerTriangular cholesky(const SymMatrix &w);

/// Forward substitution C x = b.
Vector solve_lower(const LowerTriangular &c, std::span<const BigReal> b);

/// Back substitution C^T x = b.
Vector solve_lower_transposed(const LowerTriangular &c, std::span<const BigReal> b);

/// C^{-1}, itself lower triangular.
LowerTriangular invert_lower(const LowerTriangular &c);

/// Returns x with A x = b for positive definite A.
Vector spd_solve(const SymMatrix &a, std::span<const BigReal> b);

/// Number of eigenvalues of P strictly below `shift` (Sylvester inertia of
/// the LDL^T factorization of P - shift I).
std::size_t count_below(const SymMatrix &p, const BigReal &shift);

struct Eigenpair {
  BigReal value;
  Vector vector; ///< unit 2-norm
  BigReal lower; ///< certified bracket: value lies in [lower, upper]
  BigReal upper;
};

/// Smallest eigenvalue by inertia bisection, eigenvector by inverse iteration.
Eigenpair smallest_eigenvalue(const SymMatrix &p);

// Small vector helpers.
BigReal dot(std::span<const BigReal> a, std::span<const BigReal> b);
BigReal norm2(std::span<const BigReal> a);
BigReal norm_inf(std::span<const BigReal> a);

} // namespace oppq
