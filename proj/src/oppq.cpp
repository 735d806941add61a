#include "oppq/oppq.hpp"

#include <algorithm>
#include <sstream>

namespace oppq {

// ---------------------------------------------------------------------------
// Basis

SymMatrix hankel_moment_matrix(const WeightMoments1D &weight, std::size_t dim) {
  if (dim == 0 || weight.w.size() < 2 * dim - 1)
    throw DimensionMismatch(2 * dim - 1, weight.w.size());
  SymMatrix h(dim);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j <= i; ++j)
      h(i, j) = weight.w[i + j];
  return h;
}

SymMatrix qzm_moment_matrix(const QzmWeightMoments &weight, std::size_t dim) {
  const auto order = antidiagonal_order((dim + 1) / 2 + 1);
  if (dim > order.size())
    throw DimensionMismatch(order.size(), dim);
  SymMatrix w(dim);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const std::size_t m = order[i].first + order[j].first;
      const std::size_t n = order[i].second + order[j].second;
      if (m + n > weight.max_total)
        throw CoverageMismatch("weight moment (" + std::to_string(m) + ", " +
                               std::to_string(n) + ") outside the generated grid");
      w(i, j) = weight.w(m, n);
    }
  return w;
}

OrthonormalBasis build_basis(const SymMatrix &moment_matrix) {
  return OrthonormalBasis(invert_lower(cholesky(moment_matrix)));
}

BigReal gram_residual(const OrthonormalBasis &basis, const SymMatrix &w) {
  const std::size_t n = basis.size();
  if (w.dim() < n)
    throw DimensionMismatch(n, w.dim());
  const auto &xi = basis.xi();
  // T = Xi W (row i of T uses Xi row i), then G = T Xi^T.
  std::vector<Vector> t(n, Vector(n, BigReal(0)));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      BigReal s = 0;
      for (std::size_t j = 0; j <= i; ++j)
        s += xi(i, j) * w(j, k);
      t[i][k] = s;
    }
  BigReal worst = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t jj = 0; jj <= i; ++jj) {
      BigReal s = 0;
      for (std::size_t k = 0; k <= jj; ++k)
        s += t[i][k] * xi(jj, k);
      if (i == jj)
        s -= 1;
      if (abs(s) > worst)
        worst = abs(s);
    }
  return worst;
}

// ---------------------------------------------------------------------------
// Lambda

LambdaTable::LambdaTable(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), values_(rows * cols, BigReal(0)),
      derivs_(rows * cols, BigReal(0)), row_order_(rows, 0) {}

LambdaTable lambda_table(const OrthonormalBasis &basis, const TransferTable &transfer,
                         std::size_t rows) {
  if (rows > basis.size())
    throw CoverageMismatch("basis has " + std::to_string(basis.size()) + " polynomials, " +
                           std::to_string(rows) + " requested");
  if (rows > transfer.rows())
    throw CoverageMismatch("transfer table covers " + std::to_string(transfer.rows()) +
                           " moments, " + std::to_string(rows) + " requested");
  if (!transfer.has_derivative())
    throw std::logic_error("lambda_table needs a transfer table with derivatives");
  const std::size_t cols = transfer.columns();
  LambdaTable out(rows, cols);
  Vector acc(cols), dacc(cols);
  BigReal tmp;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t l = 0; l < cols; ++l) {
      acc[l] = 0;
      dacc[l] = 0;
    }
    auto xrow = basis.xi().row(i);
    for (std::size_t j = 0; j <= i; ++j) {
      const BigReal &x = xrow[j];
      if (x == 0)
        continue;
      auto mrow = transfer.row(j);
      auto drow = transfer.d_row(j);
      for (std::size_t l = 0; l < cols; ++l) {
        mpfr_fma(acc[l].backend().data(), x.backend().data(), mrow[l].backend().data(),
                 acc[l].backend().data(), MPFR_RNDN);
        mpfr_fma(dacc[l].backend().data(), x.backend().data(), drow[l].backend().data(),
                 dacc[l].backend().data(), MPFR_RNDN);
      }
    }
    for (std::size_t l = 0; l < cols; ++l) {
      out.at(i, l) = acc[l];
      out.d_at(i, l) = dacc[l];
    }
    if (transfer.kind() == TransferKind::OneDim) {
      out.row_orders()[i] = std::min(i, transfer.order());
    } else {
      std::size_t d = 0;
      while ((d + 1) * (d + 2) / 2 <= i)
        ++d;
      out.row_orders()[i] = d / 2;
    }
  }
  return out;
}

std::pair<SymMatrix, SymMatrix> dyad_sum(const LambdaTable &lambda, std::size_t rows) {
  if (rows > lambda.rows())
    throw DimensionMismatch(lambda.rows(), rows);
  const std::size_t k = lambda.cols();
  SymMatrix p(k), dp(k);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b <= a; ++b) {
      BigReal s = 0, ds = 0;
      for (std::size_t i = 0; i < rows; ++i) {
        s += lambda.at(i, a) * lambda.at(i, b);
        ds += lambda.d_at(i, a) * lambda.at(i, b) + lambda.at(i, a) * lambda.d_at(i, b);
      }
      p(a, b) = s;
      dp(a, b) = ds;
    }
  return {std::move(p), std::move(dp)};
}

QuadraticFormBundle split_quadratic_form(const SymMatrix &d, const SymMatrix &dd) {
  const std::size_t k = d.dim();
  if (dd.dim() != k)
    throw DimensionMismatch(k, dd.dim());
  QuadraticFormBundle q;
  q.c = d(0, 0);
  q.dc = dd(0, 0);
  q.b.resize(k - 1);
  q.db.resize(k - 1);
  q.a = SymMatrix(k - 1);
  q.da = SymMatrix(k - 1);
  for (std::size_t i = 1; i < k; ++i) {
    q.b[i - 1] = d(i, 0);
    q.db[i - 1] = dd(i, 0);
    for (std::size_t j = 1; j <= i; ++j) {
      q.a(i - 1, j - 1) = d(i, j);
      q.da(i - 1, j - 1) = dd(i, j);
    }
  }
  return q;
}

EnergySample smallest_eigen_sample(const BigReal &energy, const SymMatrix &p,
                                   const SymMatrix &dp) {
  auto eig = smallest_eigenvalue(p);
  EnergySample s;
  s.energy = energy;
  s.value = eig.value;
  s.derivative = dp.quadratic_form(eig.vector);
  if (p.dim() > 1) {
    BigReal gap = pow10(-static_cast<int>(working_precision()) / 2);
    if (abs(eig.value) > 1)
      gap *= abs(eig.value);
    s.degenerate = count_below(p, eig.upper + gap) >= 2;
  }
  s.missing_moments = std::move(eig.vector);
  return s;
}

EnergySample constrained_minimum_sample(const BigReal &energy, const QuadraticFormBundle &q) {
  EnergySample s;
  s.energy = energy;
  if (q.b.empty()) {
    s.value = q.c;
    s.derivative = q.dc;
    s.missing_moments = {BigReal(1)};
    return s;
  }
  Vector u = spd_solve(q.a, q.b);
  for (auto &x : u)
    x = -x;
  s.value = q.c + dot(q.b, u);
  s.derivative = q.dc + 2 * dot(q.db, u) + q.da.quadratic_form(u);
  s.missing_moments.reserve(u.size() + 1);
  s.missing_moments.push_back(BigReal(1));
  for (auto &x : u)
    s.missing_moments.push_back(std::move(x));
  return s;
}

// ---------------------------------------------------------------------------
// Energy functions

OneDimEnergyFunction::OneDimEnergyFunction(Recurrence1D rec,
                                           std::shared_ptr<const OrthonormalBasis> basis,
                                           std::size_t order, NormalizationMode mode)
    : rec_(std::move(rec)), basis_(std::move(basis)), order_(order), mode_(mode) {
  if (order_ < rec_.missing_order())
    throw std::invalid_argument("order I must be at least the missing-moment order");
  if (order_ + 1 > basis_->size())
    throw CoverageMismatch("basis too small for order " + std::to_string(order_));
}

LambdaTable OneDimEnergyFunction::projection(const BigReal &energy) const {
  auto table = build_derivative(build_1d(rec_, energy, order_));
  return lambda_table(*basis_, table, order_ + 1);
}

EnergySample OneDimEnergyFunction::evaluate(const BigReal &energy) const {
  auto lambda = projection(energy);
  auto [p, dp] = dyad_sum(lambda, order_ + 1);
  if (mode_ == NormalizationMode::FirstMomentOne)
    return constrained_minimum_sample(energy, split_quadratic_form(p, dp));
  auto s = smallest_eigen_sample(energy, p, dp);
  if (s.degenerate) {
    // Nearly degenerate lowest pair: Hellmann-Feynman is unreliable.
    const BigReal h = pow10(-static_cast<int>(working_precision()) / 3);
    auto value_at = [&](const BigReal &e) {
      auto lam = projection(e);
      return smallest_eigenvalue(dyad_sum(lam, order_ + 1).first).value;
    };
    s.derivative = (value_at(energy + h) - value_at(energy - h)) / (2 * h);
  }
  return s;
}

BigReal qzm_domain_floor(const QzmSystem &sys) { return sys.eps0 * (1 + pow10(-6)); }

QzmEnergyFunction::QzmEnergyFunction(QzmSystem sys, std::shared_ptr<const OrthonormalBasis> basis,
                                     std::size_t missing_order, NormalizationMode mode)
    : sys_(std::move(sys)), basis_(std::move(basis)), ms_(missing_order) {
  if (mode != NormalizationMode::FirstMomentOne)
    throw std::invalid_argument(
        "multi-dimensional problems need the mu_0 = 1 normalization (FirstMomentOne)");
  if (qzm_basis_size(ms_) > basis_->size())
    throw CoverageMismatch("basis has " + std::to_string(basis_->size()) +
                           " polynomials, order m_s = " + std::to_string(ms_) + " needs " +
                           std::to_string(qzm_basis_size(ms_)));
}

std::optional<BigReal> QzmEnergyFunction::domain_floor() const { return qzm_domain_floor(sys_); }

QuadraticFormBundle QzmEnergyFunction::quadratic_form(const BigReal &eps) const {
  if (eps < qzm_domain_floor(sys_))
    throw DomainError("binding energy " + to_decimal(eps, 20) +
                      " lies below the weight floor eps0 (1 + 1e-6)");
  auto table = build_derivative(build_qzm(sys_, eps, ms_));
  const std::size_t rows = qzm_basis_size(ms_);
  auto lambda = lambda_table(*basis_, table, rows);
  auto [d, dd] = dyad_sum(lambda, rows);
  return split_quadratic_form(d, dd);
}

EnergySample QzmEnergyFunction::evaluate(const BigReal &eps) const {
  return constrained_minimum_sample(eps, quadratic_form(eps));
}

// ---------------------------------------------------------------------------
// Problems

namespace {

class OneDimProblem final : public Problem {
public:
  OneDimProblem(std::string name, Recurrence1D rec, const WeightGenerator &weight,
                std::size_t max_order, NormalizationMode mode)
      : name_(std::move(name)), rec_(std::move(rec)), max_order_(max_order), mode_(mode) {
      auto w = weight(2 * max_order);
      moments_ = hankel_moment_matrix(w, max_order + 1);
      basis_ = std::make_shared<OrthonormalBasis>(build_basis(moments_));
  }
  std::string name() const override { return name_; }
  std::size_t max_order() const override { return max_order_; }
  std::unique_ptr<EnergyFunction> at_order(std::size_t order) const override {
    if (order > max_order_)
      throw CoverageMismatch("order " + std::to_string(order) + " exceeds the prepared maximum " +
                             std::to_string(max_order_));
    return std::make_unique<OneDimEnergyFunction>(rec_, basis_, order, mode_);
  }
  BigReal gram_residual() const override { return oppq::gram_residual(*basis_, moments_); }

private:
  std::string name_;
  Recurrence1D rec_;
  std::size_t max_order_;
  NormalizationMode mode_;
  SymMatrix moments_;
  std::shared_ptr<const OrthonormalBasis> basis_;
};

class QzmProblem final : public Problem {
public:
  QzmProblem(QzmSystem sys, std::size_t max_ms) : sys_(std::move(sys)), max_ms_(max_ms) {
    auto weight = qzm_weight_moments(sys_, max_ms_);
    moments_ = qzm_moment_matrix(weight, qzm_basis_size(max_ms_));
    basis_ = std::make_shared<OrthonormalBasis>(build_basis(moments_));
  }
  std::string name() const override { return "qzm"; }
  std::size_t max_order() const override { return max_ms_; }
  std::optional<BigReal> domain_floor() const override { return qzm_domain_floor(sys_); }
  std::unique_ptr<EnergyFunction> at_order(std::size_t ms) const override {
    if (ms > max_ms_)
      throw CoverageMismatch("m_s = " + std::to_string(ms) + " exceeds the prepared maximum " +
                             std::to_string(max_ms_));
    return std::make_unique<QzmEnergyFunction>(sys_, basis_, ms);
  }
  BigReal gram_residual() const override { return oppq::gram_residual(*basis_, moments_); }

private:
  QzmSystem sys_;
  std::size_t max_ms_;
  SymMatrix moments_;
  std::shared_ptr<const OrthonormalBasis> basis_;
};

} // namespace

std::unique_ptr<Problem> make_one_dim_problem(std::string name, Recurrence1D rec,
                                              const WeightGenerator &weight,
                                              std::size_t max_order, NormalizationMode mode) {
  return std::make_unique<OneDimProblem>(std::move(name), std::move(rec), weight, max_order,
                                         mode);
}

std::unique_ptr<Problem> make_qzm_problem(QzmSystem sys, std::size_t max_missing_order) {
  return std::make_unique<QzmProblem>(std::move(sys), max_missing_order);
}

// ---------------------------------------------------------------------------
// Minimum search and bounds

namespace {

bool effectively_zero(const EnergySample &s) {
  BigReal floor = pow10(10 - static_cast<int>(working_precision()));
  if (abs(s.value) > 1)
    floor *= abs(s.value);
  return abs(s.derivative) <= floor;
}

constexpr std::size_t kMaxBisections = 20000;

} // namespace

MinimumResult find_minimum(const EnergyFunction &fn, BigReal lo, BigReal hi, const BigReal &tol) {
  if (!(lo < hi))
    throw std::invalid_argument("find_minimum needs lo < hi");
  auto slo = fn.evaluate(lo);
  auto shi = fn.evaluate(hi);
  if (!(slo.derivative < 0 && shi.derivative > 0))
    throw NoSignChange("derivative does not change sign from - to + on [" + to_decimal(lo, 20) +
                       ", " + to_decimal(hi, 20) + "]; widen or re-bracket the window");
  MinimumResult r;
  std::optional<EnergySample> exact;
  while (hi - lo > tol) {
    if (++r.iterations > kMaxBisections)
      throw NoConvergence(r.iterations);
    BigReal mid = (lo + hi) / 2;
    auto s = fn.evaluate(mid);
    if (s.derivative == 0 || effectively_zero(s)) {
      exact = std::move(s);
      break;
    }
    if (s.derivative < 0)
      lo = mid;
    else
      hi = mid;
  }
  EnergySample at = exact ? std::move(*exact) : fn.evaluate((lo + hi) / 2);
  r.e_min = at.energy;
  r.s_min = at.value;
  r.derivative = at.derivative;
  r.width = exact ? BigReal(0) : BigReal(hi - lo);
  return r;
}

BigReal estimate_bu(std::span<const BigReal> seq, const BuPolicy &policy) {
  Vector copy(seq.begin(), seq.end());
  if (seq.size() < 3)
    throw NotConverged("B_U estimation needs at least three sequence entries", copy);
  for (std::size_t i = 1; i < seq.size(); ++i)
    if (seq[i] < seq[i - 1])
      throw NotConverged("S_min sequence is not increasing at entry " + std::to_string(i), copy);
  const BigReal &last = seq.back();
  BigReal diff = last - seq[seq.size() - 2];
  if (diff / abs(last) >= policy.theta)
    throw NotConverged("S_min sequence has not converged (relative step " +
                           to_decimal(diff / abs(last), 6) + " >= theta); supply B_U manually",
                       copy);
  BigReal floor = pow10(-policy.digits) * abs(last);
  return last + policy.kappa * (diff > floor ? diff : floor);
}

NoUpperCrossing::NoUpperCrossing(Side side, const std::string &detail)
    : NumericError(std::string("no crossing of B_U on the ") +
                   (side == Side::Lower ? "lower" : "upper") + " side: " + detail),
      side_(side) {}

namespace {

BigReal crossing(const EnergyFunction &fn, const BigReal &e_min, const BigReal &b_u,
                 const BigReal &edge, const BigReal &tol, const BigReal &max_step,
                 NoUpperCrossing::Side side) {
  const int dir = side == NoUpperCrossing::Side::Lower ? -1 : 1;
  BigReal inner = e_min;
  BigReal outer;
  BigReal step = tol;
  for (;;) {
    BigReal probe = inner + dir * step;
    bool at_edge = dir < 0 ? probe <= edge : probe >= edge;
    if (at_edge)
      probe = edge;
    if (fn.evaluate(probe).value > b_u) {
      outer = probe;
      break;
    }
    if (at_edge)
      throw NoUpperCrossing(side, "S stays below B_U up to the scan edge " + to_decimal(edge, 20));
    inner = probe;
    step *= 4;
    if (step > max_step)
      step = max_step;
  }
  std::size_t iter = 0;
  while (abs(outer - inner) > tol) {
    if (++iter > kMaxBisections)
      throw NoConvergence(iter);
    BigReal mid = (inner + outer) / 2;
    if (fn.evaluate(mid).value > b_u)
      outer = mid;
    else
      inner = mid;
  }
  // The outer end lies outside the level set, so the interval stays conservative.
  return outer;
}

} // namespace

BoundInterval extract_bounds(const EnergyFunction &fn, const BigReal &e_min, const BigReal &b_u,
                             const BigReal &domain_lo, const BigReal &domain_hi,
                             const BigReal &tol, const std::optional<BigReal> &max_step) {
  BigReal lo = domain_lo;
  if (auto floor = fn.domain_floor(); floor && lo < *floor)
    lo = *floor;
  if (!(lo < e_min && e_min < domain_hi))
    throw std::invalid_argument("E_min lies outside the bound-search domain");
  auto centre = fn.evaluate(e_min);
  if (!(centre.value < b_u))
    throw NoUpperCrossing(NoUpperCrossing::Side::Lower,
                          "S(E_min) = " + to_decimal(centre.value, 20) + " is not below B_U");
  const BigReal cap = max_step ? *max_step : BigReal((domain_hi - lo) / 64);
  BoundInterval out;
  out.lower = crossing(fn, e_min, b_u, lo, tol, cap, NoUpperCrossing::Side::Lower);
  out.upper = crossing(fn, e_min, b_u, domain_hi, tol, cap, NoUpperCrossing::Side::Upper);
  return out;
}

std::vector<ScanPoint> scan(const EnergyFunction &fn, std::span<const BigReal> grid) {
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i - 1] < grid[i]))
      throw std::invalid_argument("scan grid must be strictly increasing");
  if (auto floor = fn.domain_floor(); floor && !grid.empty() && grid.front() < *floor)
    throw DomainError("scan grid starts at " + to_decimal(grid.front(), 20) +
                      ", below the domain floor " + to_decimal(*floor, 20));
  std::vector<ScanPoint> out;
  out.reserve(grid.size());
  for (const auto &e : grid) {
    auto s = fn.evaluate(e);
    ScanPoint p{e, s.value, BigReal(0), s.derivative};
    p.log10_value = s.value > 0 ? BigReal(log10(s.value)) : BigReal(0);
    out.push_back(std::move(p));
  }
  return out;
}

Vector uniform_grid(const BigReal &lo, const BigReal &hi, std::size_t points) {
  if (points == 0)
    throw std::invalid_argument("grid needs at least one point");
  if (points == 1)
    return {lo};
  if (!(lo < hi))
    throw std::invalid_argument("grid needs lo < hi");
  Vector g(points);
  for (std::size_t i = 0; i < points; ++i)
    g[i] = lo + (hi - lo) * i / (points - 1);
  g.back() = hi;
  return g;
}

std::vector<std::pair<BigReal, BigReal>> find_wells(std::span<const ScanPoint> s) {
  std::vector<std::pair<BigReal, BigReal>> wells;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    if (s[i].derivative < 0 && s[i + 1].derivative > 0)
      wells.emplace_back(s[i].energy, s[i + 1].energy);
    else if (s[i].derivative < 0 && s[i + 1].derivative == 0 && i + 2 < s.size() &&
             s[i + 2].derivative > 0)
      wells.emplace_back(s[i].energy, s[i + 2].energy);
  }
  return wells;
}

// ---------------------------------------------------------------------------

std::vector<bool> BoundReport::increasing_flags() const {
  std::vector<bool> flags(records.size(), true);
  for (std::size_t i = 1; i < records.size(); ++i)
    flags[i] = records[i].s_min > records[i - 1].s_min;
  return flags;
}

bool BoundReport::s_min_increasing() const {
  auto f = increasing_flags();
  return std::all_of(f.begin(), f.end(), [](bool b) { return b; });
}

std::vector<std::string> BoundReport::violations() const {
  std::vector<std::string> out;
  auto flags = increasing_flags();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto &r = records[i];
    if (!flags[i])
      out.push_back("S_min does not increase at order " + std::to_string(r.order));
    if (r.bounds && !(r.bounds->lower < r.e_min && r.e_min < r.bounds->upper))
      out.push_back("interval at order " + std::to_string(r.order) + " does not contain E_min");
    if (b_u && !(r.s_min < *b_u))
      out.push_back("B_U does not exceed S_min at order " + std::to_string(r.order));
  }
  return out;
}

} // namespace oppq
