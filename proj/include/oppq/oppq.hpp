#pragma once

// Orthogonal-polynomial projection quantization with bounds: orthonormal
// bases, projection coefficients, partial-sum energy functions and the
// minimum / bound extraction built on them.

#include "oppq/mer.hpp"
#include "oppq/mpnum.hpp"
#include "oppq/refweight.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace oppq {

enum class NormalizationMode {
  UnitMissingMomentVector, ///< sum mu_l^2 = 1, smallest eigenvalue of P_I(E)
  FirstMomentOne,          ///< mu_0 = 1, constrained minimum of the quadratic form
};

// ---------------------------------------------------------------------------
// Orthonormal basis

/// P_i = sum_j xi(i, j) * monomial_j, orthonormal against the weight.
class OrthonormalBasis {
public:
  explicit OrthonormalBasis(LowerTriangular xi) : xi_(std::move(xi)) {}
  std::size_t size() const noexcept { return xi_.dim(); }
  const LowerTriangular &xi() const noexcept { return xi_; }
  const BigReal &operator()(std::size_t i, std::size_t j) const { return xi_(i, j); }

private:
  LowerTriangular xi_;
};

/// W_ij = w(i + j); needs w up to 2(dim - 1).
SymMatrix hankel_moment_matrix(const WeightMoments1D &weight, std::size_t dim);
/// W_ij = w(m_i + m_j, n_i + n_j) over the antidiagonal monomial order.
SymMatrix qzm_moment_matrix(const QzmWeightMoments &weight, std::size_t dim);

/// Xi = C^{-1} where W = C C^T; throws NotPositiveDefinite.
OrthonormalBasis build_basis(const SymMatrix &moment_matrix);

/// max_{I,J} |<Xi^(I)|W|Xi^(J)> - delta_IJ|.
BigReal gram_residual(const OrthonormalBasis &basis, const SymMatrix &moment_matrix);

// ---------------------------------------------------------------------------
// Projection coefficients

class CoverageMismatch : public NumericError {
public:
  using NumericError::NumericError;
};

/// Lambda(i, l) = sum_{j <= i} Xi(i, j) M(j, l) with its energy derivative.
class LambdaTable {
public:
  LambdaTable(std::size_t rows, std::size_t cols);
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  const BigReal &at(std::size_t i, std::size_t l) const { return values_[i * cols_ + l]; }
  BigReal &at(std::size_t i, std::size_t l) { return values_[i * cols_ + l]; }
  const BigReal &d_at(std::size_t i, std::size_t l) const { return derivs_[i * cols_ + l]; }
  BigReal &d_at(std::size_t i, std::size_t l) { return derivs_[i * cols_ + l]; }
  std::span<const BigReal> row(std::size_t i) const { return {values_.data() + i * cols_, cols_}; }
  /// Missing-moment order actually needed by row i.
  std::size_t row_order(std::size_t i) const { return row_order_[i]; }
  std::vector<std::size_t> &row_orders() { return row_order_; }

private:
  std::size_t rows_, cols_;
  Vector values_, derivs_;
  std::vector<std::size_t> row_order_;
};

/// Rows 0..rows-1. The transfer table must carry its derivative companion.
LambdaTable lambda_table(const OrthonormalBasis &basis, const TransferTable &transfer,
                         std::size_t rows);

/// P = sum_i Lambda_i Lambda_i^T and dP = sum_i (dLambda_i Lambda_i^T + Lambda_i dLambda_i^T).
std::pair<SymMatrix, SymMatrix> dyad_sum(const LambdaTable &lambda, std::size_t rows);

/// <mu|D|mu> = C + 2 B.u + u^T A u with mu = (1, u).
struct QuadraticFormBundle {
  BigReal c, dc;
  Vector b, db;
  SymMatrix a, da;
};

QuadraticFormBundle split_quadratic_form(const SymMatrix &d, const SymMatrix &dd);

/// One evaluation of an energy function S(E).
struct EnergySample {
  BigReal energy;
  BigReal value;
  BigReal derivative;
  Vector missing_moments; ///< minimizing missing-moment vector
  bool degenerate = false; ///< derivative came from finite differences
};

/// lambda(E): smallest eigenvalue of P with Hellmann-Feynman derivative.
EnergySample smallest_eigen_sample(const BigReal &energy, const SymMatrix &p,
                                   const SymMatrix &dp);
/// L(E) = C - B^T A^{-1} B with the envelope-theorem derivative.
EnergySample constrained_minimum_sample(const BigReal &energy, const QuadraticFormBundle &q);

// ---------------------------------------------------------------------------
// Energy functions

class DomainError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class EnergyFunction {
public:
  virtual ~EnergyFunction() = default;
  virtual EnergySample evaluate(const BigReal &energy) const = 0;
  /// Energies below this are outside the valid domain.
  virtual std::optional<BigReal> domain_floor() const { return std::nullopt; }
};

/// Wraps a callable; used for probe functions in tests.
class CallableEnergyFunction final : public EnergyFunction {
public:
  explicit CallableEnergyFunction(std::function<EnergySample(const BigReal &)> fn)
      : fn_(std::move(fn)) {}
  EnergySample evaluate(const BigReal &energy) const override { return fn_(energy); }

private:
  std::function<EnergySample(const BigReal &)> fn_;
};

/// S_I(E) for a one-dimensional moment recurrence.
class OneDimEnergyFunction final : public EnergyFunction {
public:
  OneDimEnergyFunction(Recurrence1D rec, std::shared_ptr<const OrthonormalBasis> basis,
                       std::size_t order,
                       NormalizationMode mode = NormalizationMode::UnitMissingMomentVector);
  EnergySample evaluate(const BigReal &energy) const override;
  std::size_t order() const noexcept { return order_; }
  /// Lambda rows at energy E (rows 0..order), for c_i(E) diagnostics.
  LambdaTable projection(const BigReal &energy) const;

private:
  Recurrence1D rec_;
  std::shared_ptr<const OrthonormalBasis> basis_;
  std::size_t order_;
  NormalizationMode mode_;
};

/// L_{I_{m_s}}(eps) for the quadratic Zeeman system (eps = binding energy).
class QzmEnergyFunction final : public EnergyFunction {
public:
  QzmEnergyFunction(QzmSystem sys, std::shared_ptr<const OrthonormalBasis> basis,
                    std::size_t missing_order,
                    NormalizationMode mode = NormalizationMode::FirstMomentOne);
  EnergySample evaluate(const BigReal &eps) const override;
  std::optional<BigReal> domain_floor() const override;
  std::size_t missing_order() const noexcept { return ms_; }
  /// Full quadratic-form bundle at eps (for certificate checks).
  QuadraticFormBundle quadratic_form(const BigReal &eps) const;

private:
  QzmSystem sys_;
  std::shared_ptr<const OrthonormalBasis> basis_;
  std::size_t ms_;
};

/// eps0 (1 + 1e-6).
BigReal qzm_domain_floor(const QzmSystem &sys);

// ---------------------------------------------------------------------------
// Problems: basis built once at the largest order, shared by every order.

class Problem {
public:
  virtual ~Problem() = default;
  virtual std::string name() const = 0;
  virtual std::unique_ptr<EnergyFunction> at_order(std::size_t order) const = 0;
  virtual std::size_t max_order() const = 0;
  virtual std::optional<BigReal> domain_floor() const { return std::nullopt; }
  /// Orthonormality residual of the shared basis.
  virtual BigReal gram_residual() const = 0;
};

using WeightGenerator = std::function<WeightMoments1D(std::size_t p_max)>;

std::unique_ptr<Problem> make_one_dim_problem(
    std::string name, Recurrence1D rec, const WeightGenerator &weight, std::size_t max_order,
    NormalizationMode mode = NormalizationMode::UnitMissingMomentVector);

std::unique_ptr<Problem> make_qzm_problem(QzmSystem sys, std::size_t max_missing_order);

// ---------------------------------------------------------------------------
// Minimum, upper bound estimate, bounds

class NoSignChange : public NumericError {
public:
  using NumericError::NumericError;
};

struct MinimumResult {
  BigReal e_min;
  BigReal s_min;
  BigReal width;      ///< final bracket width
  BigReal derivative; ///< derivative at e_min
  std::size_t iterations = 0;
};

/// Bisection on the sign of dS/dE over [lo, hi]; needs dS < 0 at lo and
/// dS > 0 at hi. An exactly vanishing derivative ends the search.
MinimumResult find_minimum(const EnergyFunction &fn, BigReal lo, BigReal hi, const BigReal &tol);

struct BuPolicy {
  BigReal theta = BigReal("1e-8"); ///< relative successive difference for convergence
  BigReal kappa = 10;
  int digits = 15;
};

class NotConverged : public NumericError {
public:
  NotConverged(const std::string &what, Vector sequence)
      : NumericError(what), sequence_(std::move(sequence)) {}
  const Vector &sequence() const noexcept { return sequence_; }

private:
  Vector sequence_;
};

/// B_U = last + kappa * max(last difference, 10^-digits * last) once the
/// sequence has converged to relative tolerance theta.
BigReal estimate_bu(std::span<const BigReal> sequence, const BuPolicy &policy = {});

struct BoundInterval {
  BigReal lower;
  BigReal upper;
};

class NoUpperCrossing : public NumericError {
public:
  enum class Side { Lower, Upper };
  NoUpperCrossing(Side side, const std::string &detail);
  Side side() const noexcept { return side_; }

private:
  Side side_;
};

/// The two crossings S(E) = b_u either side of e_min within [domain_lo, domain_hi].
/// The outward search starts at tol and grows fourfold per probe, never
/// beyond max_step (default: a 64th of the domain) so neighbouring wells are
/// not jumped over. Each returned end lies just outside the level set.
BoundInterval extract_bounds(const EnergyFunction &fn, const BigReal &e_min, const BigReal &b_u,
                             const BigReal &domain_lo, const BigReal &domain_hi,
                             const BigReal &tol,
                             const std::optional<BigReal> &max_step = std::nullopt);

struct ScanPoint {
  BigReal energy;
  BigReal value;
  BigReal log10_value;
  BigReal derivative;
};

/// Samples S on a strictly increasing grid; rejects grids below the domain floor.
std::vector<ScanPoint> scan(const EnergyFunction &fn, std::span<const BigReal> grid);

/// `points` equally spaced energies over [lo, hi] (a single point when points == 1).
Vector uniform_grid(const BigReal &lo, const BigReal &hi, std::size_t points);

/// Brackets [a, b] around every derivative sign change from - to +.
std::vector<std::pair<BigReal, BigReal>> find_wells(std::span<const ScanPoint> samples);

// ---------------------------------------------------------------------------
// Bound report

struct OrderRecord {
  std::size_t order = 0;
  BigReal e_min, s_min, width, derivative;
  std::optional<BoundInterval> bounds;
  std::string bounds_error;
};

struct BoundReport {
  std::vector<OrderRecord> records;
  std::optional<BigReal> b_u;

  /// S_min strictly increasing across consecutive records.
  bool s_min_increasing() const;
  /// Per-record flag: record i exceeds record i-1 (true for the first).
  std::vector<bool> increasing_flags() const;
  /// Human-readable invariant violations (empty when all hold).
  std::vector<std::string> violations() const;
};

} // namespace oppq
