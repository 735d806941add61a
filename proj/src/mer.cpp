#include "oppq/mer.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace oppq {

Recurrence1D::Recurrence1D(std::size_t missing_order, std::vector<RecurrenceTerm> terms)
    : missing_order_(missing_order), terms_(std::move(terms)) {
  if (terms_.empty())
    throw std::invalid_argument("recurrence needs at least one term");
  for (const auto &t : terms_)
    depth_ = std::max(depth_, t.lag);
}

Recurrence1D Recurrence1D::harmonic_even() {
  // a_0 = E, a_1 = 4p^2 - 2p
  return Recurrence1D(0, {{0, BigReal(1), 0, 1}, {1, BigReal(4), 2, 0}, {1, BigReal(-2), 1, 0}});
}

Recurrence1D Recurrence1D::quartic_even() {
  // a_1 = E, a_2 = 4q^2 - 10q + 6
  return Recurrence1D(1, {{1, BigReal(1), 0, 1},
                          {2, BigReal(4), 2, 0},
                          {2, BigReal(-10), 1, 0},
                          {2, BigReal(6), 0, 0}});
}

Vector Recurrence1D::coefficients(std::size_t p, const BigReal &energy) const {
  Vector a(depth_ + 1, BigReal(0));
  for (const auto &t : terms_)
    a[t.lag] += t.coef * pow(BigReal(p), t.p_power) * pow(energy, t.e_power);
  return a;
}

Vector Recurrence1D::coefficient_derivatives(std::size_t p, const BigReal &energy) const {
  Vector a(depth_ + 1, BigReal(0));
  for (const auto &t : terms_)
    if (t.e_power > 0)
      a[t.lag] += t.coef * t.e_power * pow(BigReal(p), t.p_power) * pow(energy, t.e_power - 1);
  return a;
}

QzmSystem::QzmSystem(BigReal b, BigReal z, BigReal e0)
    : field(std::move(b)), charge(std::move(z)), eps0(std::move(e0)) {
  if (field <= 0)
    throw std::invalid_argument("QZM field B must be positive");
  if (charge <= 0)
    throw std::invalid_argument("QZM charge Z must be positive");
  if (eps0 <= 0)
    throw std::invalid_argument("QZM weight energy eps0 must be positive");
}

std::vector<std::pair<std::size_t, std::size_t>> antidiagonal_order(std::size_t missing_order) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(qzm_basis_size(missing_order));
  for (std::size_t d = 0; d <= 2 * missing_order + 1; ++d)
    for (std::size_t n = 0; n <= d; ++n)
      out.emplace_back(d - n, n);
  return out;
}

TransferTable::TransferTable(TransferKind kind, std::size_t order, BigReal energy,
                             std::size_t rows, Source source)
    : kind_(kind), order_(order), energy_(std::move(energy)), rows_(rows),
      source_(std::move(source)), entries_(rows * (order + 1), BigReal(0)) {}

RecurrenceBreakdown::RecurrenceBreakdown(std::size_t m, std::size_t n)
    : NumericError("moment recurrence breaks down at (" + std::to_string(m) + ", " +
                   std::to_string(n) + "): vanishing division coefficient") {}

namespace {

void check_lag(std::size_t p, std::size_t k, const BigReal &a) {
  if (k > p && a != 0)
    throw std::logic_error("recurrence step at p = " + std::to_string(p) +
                           " references a negative moment index (lag " + std::to_string(k) +
                           ")");
}

// One antidiagonal sweep of the five-point stencil
//   m^2 M(m-1,n) + n^2 M(m,n-1) - (Bm+eps)/2 M(m,n+1) - (Bn+eps)/2 M(m+1,n) + Z M(m,n) = 0
// solved for M(m+1,n) with m >= n, mirrored to (n,m+1). When `base` is given
// the sweep produces the eps-derivative of `base` instead.
void qzm_sweep(const QzmSystem &sys, const BigReal &eps, std::size_t ms, std::size_t cols,
               std::vector<BigReal> &v, const std::vector<BigReal> *base) {
  const BigReal &b = sys.field;
  const BigReal &z = sys.charge;
  auto at = [&](std::vector<BigReal> &vec, std::size_t m, std::size_t n, std::size_t l)
      -> BigReal & { return vec[antidiagonal_index(m, n) * cols + l]; };
  auto cat = [&](const std::vector<BigReal> &vec, std::size_t m, std::size_t n,
                 std::size_t l) -> const BigReal & {
    return vec[antidiagonal_index(m, n) * cols + l];
  };
  BigReal s;
  for (std::size_t d = 0; d <= 2 * ms; ++d) {
    std::size_t m = (d + 1) / 2;
    if (d % 2 == 0) {
      // Centre (j, j): the two unknowns coincide by reflection symmetry.
      const std::size_t j = d / 2;
      BigReal denom = b * j + eps;
      if (denom == 0)
        throw RecurrenceBreakdown(j, j);
      for (std::size_t l = 0; l < cols; ++l) {
        s = z * cat(v, j, j, l);
        if (j > 0)
          s += 2 * j * j * cat(v, j, j - 1, l);
        if (base)
          s -= cat(*base, j + 1, j, l);
        at(v, j + 1, j, l) = s / denom;
        at(v, j, j + 1, l) = cat(v, j + 1, j, l);
      }
      m = j + 1;
    }
    for (; m <= d; ++m) {
      const std::size_t n = d - m;
      BigReal half_bn = (b * n + eps) / 2;
      if (half_bn == 0)
        throw RecurrenceBreakdown(m, n);
      BigReal half_bm = (b * m + eps) / 2;
      for (std::size_t l = 0; l < cols; ++l) {
        s = z * cat(v, m, n, l) - half_bm * cat(v, m, n + 1, l);
        if (m > 0)
          s += m * m * cat(v, m - 1, n, l);
        if (n > 0)
          s += n * n * cat(v, m, n - 1, l);
        if (base)
          s -= (cat(*base, m, n + 1, l) + cat(*base, m + 1, n, l)) / 2;
        at(v, m + 1, n, l) = s / half_bn;
        at(v, n, m + 1, l) = cat(v, m + 1, n, l);
      }
    }
  }
}

} // namespace

TransferTable build_1d(const Recurrence1D &rec, const BigReal &energy, std::size_t p_max) {
  const std::size_t ms = rec.missing_order();
  if (p_max < ms)
    throw std::invalid_argument("p_max must be at least the missing-moment order");
  TransferTable t(TransferKind::OneDim, ms, energy, p_max + 1, rec);
  for (std::size_t l = 0; l <= ms; ++l)
    t.at(l, l) = 1;
  for (std::size_t p = ms; p < p_max; ++p) {
    Vector a = rec.coefficients(p, energy);
    for (std::size_t k = 0; k < a.size(); ++k)
      check_lag(p, k, a[k]);
    for (std::size_t l = 0; l <= ms; ++l) {
      BigReal s = 0;
      for (std::size_t k = 0; k < a.size() && k <= p; ++k)
        s += a[k] * t.at(p - k, l);
      t.at(p + 1, l) = s;
    }
  }
  return t;
}

TransferTable build_qzm(const QzmSystem &sys, const BigReal &eps, std::size_t missing_order) {
  if (eps <= 0)
    throw std::invalid_argument("QZM binding energy must be positive");
  const std::size_t ms = missing_order;
  TransferTable t(TransferKind::TwoDim, ms, eps, qzm_basis_size(ms), sys);
  for (std::size_t l = 0; l <= ms; ++l)
    t.at(antidiagonal_index(l, l), l) = 1;
  qzm_sweep(sys, eps, ms, ms + 1, t.entries_, nullptr);
  return t;
}

TransferTable build_derivative(TransferTable table) {
  const std::size_t cols = table.columns();
  std::vector<BigReal> d(table.entries_.size(), BigReal(0));
  if (table.kind_ == TransferKind::OneDim) {
    const auto &rec = std::get<Recurrence1D>(table.source_);
    const std::size_t ms = rec.missing_order();
    for (std::size_t p = ms; p + 1 < table.rows_; ++p) {
      Vector a = rec.coefficients(p, table.energy_);
      Vector da = rec.coefficient_derivatives(p, table.energy_);
      for (std::size_t l = 0; l < cols; ++l) {
        BigReal s = 0;
        for (std::size_t k = 0; k < a.size() && k <= p; ++k)
          s += da[k] * table.at(p - k, l) + a[k] * d[(p - k) * cols + l];
        d[(p + 1) * cols + l] = s;
      }
    }
  } else {
    const auto &sys = std::get<QzmSystem>(table.source_);
    qzm_sweep(sys, table.energy_, table.order_, cols, d, &table.entries_);
  }
  table.d_entries_ = std::move(d);
  return table;
}

BigReal qzm_stencil_residual(const QzmSystem &sys, const TransferTable &t) {
  if (t.kind() != TransferKind::TwoDim)
    throw std::invalid_argument("stencil residual needs a 2-D table");
  const BigReal &eps = t.energy();
  BigReal worst = 0;
  BigReal terms[5];
  for (std::size_t d = 0; d + 1 <= 2 * t.order() + 1; ++d)
    for (std::size_t m = 0; m <= d; ++m) {
      const std::size_t n = d - m;
      for (std::size_t l = 0; l < t.columns(); ++l) {
        terms[0] = m > 0 ? BigReal(m * m * t.at(m - 1, n, l)) : BigReal(0);
        terms[1] = n > 0 ? BigReal(n * n * t.at(m, n - 1, l)) : BigReal(0);
        terms[2] = -(sys.field * m + eps) / 2 * t.at(m, n + 1, l);
        terms[3] = -(sys.field * n + eps) / 2 * t.at(m + 1, n, l);
        terms[4] = sys.charge * t.at(m, n, l);
        BigReal sum = 0, scale = 0;
        for (const auto &x : terms) {
          sum += x;
          if (abs(x) > scale)
            scale = abs(x);
        }
        if (scale > 0) {
          BigReal r = abs(sum) / scale;
          if (r > worst)
            worst = r;
        }
      }
    }
  return worst;
}

} // namespace oppq
