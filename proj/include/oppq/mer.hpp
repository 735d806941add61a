#pragma once

// Moment equation representations: transfer coefficients that express every
// power moment as a linear combination of the missing moments.

#include "oppq/mpnum.hpp"

#include <optional>
#include <utility>
#include <variant>
#include <vector>

namespace oppq {

/// One term coef * p^p_power * E^e_power of a step coefficient a_k(p, E).
struct RecurrenceTerm {
  std::size_t lag = 0; ///< k in mu(p - k)
  BigReal coef;
  unsigned p_power = 0;
  unsigned e_power = 0;
};

/// mu(p+1) = sum_k a_k(p, E) mu(p-k) for p >= missing_order, with each a_k a
/// polynomial in p and E.
class Recurrence1D {
public:
  Recurrence1D(std::size_t missing_order, std::vector<RecurrenceTerm> terms);

  /// Even-parity Stieltjes moments of -Psi'' + x^2 Psi = E Psi:
  /// u(p+1) = E u(p) + 2p(2p-1) u(p-1).
  static Recurrence1D harmonic_even();
  /// Even-parity moments of -Psi'' + x^4 Psi = E Psi:
  /// u(q+1) = E u(q-1) + 2(q-1)(2q-3) u(q-2), two missing moments.
  static Recurrence1D quartic_even();

  std::size_t missing_order() const noexcept { return missing_order_; }
  std::size_t depth() const noexcept { return depth_; }
  const std::vector<RecurrenceTerm> &terms() const noexcept { return terms_; }

  /// a_k(p, E) for k = 0..depth.
  Vector coefficients(std::size_t p, const BigReal &energy) const;
  /// d a_k(p, E) / dE.
  Vector coefficient_derivatives(std::size_t p, const BigReal &energy) const;

private:
  std::size_t missing_order_;
  std::size_t depth_ = 0;
  std::vector<RecurrenceTerm> terms_;
};

/// Quadratic Zeeman parameters; the weight is frozen at binding energy eps0.
struct QzmSystem {
  BigReal field;  ///< B
  BigReal charge; ///< Z
  BigReal eps0;

  QzmSystem(BigReal b, BigReal z, BigReal e0);
};

enum class TransferKind { OneDim, TwoDim };

/// (m, n) lattice points with m + n <= 2 m_s + 1, by antidiagonal sum and
/// descending m within each antidiagonal.
std::vector<std::pair<std::size_t, std::size_t>> antidiagonal_order(std::size_t missing_order);

/// Position of (m, n) in antidiagonal order.
constexpr std::size_t antidiagonal_index(std::size_t m, std::size_t n) noexcept {
  const std::size_t d = m + n;
  return d * (d + 1) / 2 + n;
}

/// I_{m_s} + 1 = (m_s + 1)(2 m_s + 3).
constexpr std::size_t qzm_basis_size(std::size_t missing_order) noexcept {
  return (missing_order + 1) * (2 * missing_order + 3);
}

/// M(row, l): row is p (1-D) or the antidiagonal index of (m, n) (2-D).
class TransferTable {
public:
  using Source = std::variant<Recurrence1D, QzmSystem>;

  TransferTable(TransferKind kind, std::size_t order, BigReal energy, std::size_t rows,
                Source source);

  TransferKind kind() const noexcept { return kind_; }
  std::size_t order() const noexcept { return order_; }
  std::size_t columns() const noexcept { return order_ + 1; }
  std::size_t rows() const noexcept { return rows_; }
  const BigReal &energy() const noexcept { return energy_; }
  const Source &source() const noexcept { return source_; }

  const BigReal &at(std::size_t row, std::size_t l) const { return entries_[row * columns() + l]; }
  BigReal &at(std::size_t row, std::size_t l) { return entries_[row * columns() + l]; }
  /// 2-D lookup.
  const BigReal &at(std::size_t m, std::size_t n, std::size_t l) const {
    return at(antidiagonal_index(m, n), l);
  }

  bool has_derivative() const noexcept { return d_entries_.has_value(); }
  const BigReal &d_at(std::size_t row, std::size_t l) const {
    return (*d_entries_)[row * columns() + l];
  }
  const BigReal &d_at(std::size_t m, std::size_t n, std::size_t l) const {
    return d_at(antidiagonal_index(m, n), l);
  }

  std::span<const BigReal> row(std::size_t r) const {
    return {entries_.data() + r * columns(), columns()};
  }
  std::span<const BigReal> d_row(std::size_t r) const {
    return {d_entries_->data() + r * columns(), columns()};
  }

private:
  friend TransferTable build_derivative(TransferTable table);
  friend TransferTable build_1d(const Recurrence1D &, const BigReal &, std::size_t);
  friend TransferTable build_qzm(const QzmSystem &, const BigReal &, std::size_t);

  TransferKind kind_;
  std::size_t order_;
  BigReal energy_;
  std::size_t rows_;
  Source source_;
  std::vector<BigReal> entries_;
  std::optional<std::vector<BigReal>> d_entries_;
};

class RecurrenceBreakdown : public NumericError {
public:
  RecurrenceBreakdown(std::size_t m, std::size_t n);
};

/// M_E(p, l) for p = 0..p_max from the Kronecker seed block.
TransferTable build_1d(const Recurrence1D &rec, const BigReal &energy, std::size_t p_max);

/// M_eps(m, n, l) on {m + n <= 2 m_s + 1} by antidiagonal sweeps of the
/// five-point moment stencil, with M(l, l, l') = delta.
TransferTable build_qzm(const QzmSystem &sys, const BigReal &eps, std::size_t missing_order);

/// Fills the energy-derivative companion by differentiating the same
/// recurrence; missing-moment rows have zero derivative.
TransferTable build_derivative(TransferTable table);

/// Largest |stencil residual| over interior lattice points, each divided by
/// the magnitude of its largest term.
BigReal qzm_stencil_residual(const QzmSystem &sys, const TransferTable &table);

} // namespace oppq
