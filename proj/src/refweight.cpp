#include "oppq/refweight.hpp"

#include <cmath>
#include <sstream>

namespace oppq {

namespace {

BigReal const_pi() {
  BigReal r;
  mpfr_const_pi(r.backend().data(), MPFR_RNDN);
  return r;
}

BigReal const_euler() {
  BigReal r;
  mpfr_const_euler(r.backend().data(), MPFR_RNDN);
  return r;
}

constexpr std::size_t kSeriesBudget = 200000;

// e^x E1(x).
BigReal scaled_e1(const BigReal &x) {
  if (x <= 0)
    throw std::invalid_argument("E1 needs a positive argument");
  const unsigned digits = working_precision();
  if (x <= 4) {
    BigReal sum;
    {
      PrecisionScope guard(digits + 12);
      const BigReal eps = pow10(-static_cast<int>(digits) - 8);
      // E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
      BigReal term = 1; // (-x)^k / k!
      BigReal series = 0;
      BigReal xx = x;
      std::size_t k = 1;
      for (;; ++k) {
        if (k > kSeriesBudget)
          throw PrecisionExhausted("E1 power series did not converge");
        term *= -xx / k;
        BigReal contrib = term / k;
        series += contrib;
        if (abs(contrib) < eps * abs(series))
          break;
      }
      sum = (-const_euler() - log(xx) - series) * exp(xx);
    }
    return rounded(sum);
  }
  // Modified Lentz on E1(x) = e^{-x} / (x + 1 - 1^2/(x + 3 - 2^2/(x + 5 - ...)))
  PrecisionScope guard(digits + 6);
  const BigReal eps = pow10(-static_cast<int>(digits) - 4);
  const BigReal tiny = pow10(-static_cast<int>(4 * digits));
  BigReal b = x + 1;
  BigReal c = 1 / tiny;
  BigReal d = 1 / b;
  BigReal h = d;
  for (std::size_t i = 1;; ++i) {
    if (i > kSeriesBudget)
      throw PrecisionExhausted("E1 continued fraction did not converge");
    BigReal an = -BigReal(i) * i;
    b += 2;
    d = an * d + b;
    if (d == 0)
      d = tiny;
    c = b + an / c;
    if (c == 0)
      c = tiny;
    d = 1 / d;
    BigReal delta = c * d;
    h *= delta;
    if (abs(delta - 1) < eps)
      break;
  }
  BigReal out;
  {
    PrecisionScope back(digits);
    out = rounded(h);
  }
  return out;
}

} // namespace

WeightMoments1D harmonic_weight_moments(std::size_t p_max) {
  WeightMoments1D out;
  out.description = "exp(-xi/2)/sqrt(xi) on [0, inf)";
  out.w.resize(p_max + 1);
  BigReal gamma_half = sqrt(const_pi()); // Gamma(p + 1/2)
  BigReal two_pow = sqrt(BigReal(2));    // 2^{p + 1/2}
  for (std::size_t p = 0; p <= p_max; ++p) {
    if (p > 0) {
      gamma_half *= BigReal(p) - BigReal(1) / 2;
      two_pow *= 2;
    }
    out.w[p] = two_pow * gamma_half;
  }
  return out;
}

WeightMoments1D gamma_weight_moments(const BigReal &shift, const BigReal &rate,
                                     std::size_t p_max) {
  if (shift <= -1)
    throw std::invalid_argument("gamma weight shift must exceed -1");
  if (rate <= 0)
    throw std::invalid_argument("gamma weight rate must be positive");
  WeightMoments1D out;
  std::ostringstream desc;
  desc << "xi^(" << to_decimal(shift, 12) << ") exp(-" << to_decimal(rate, 12)
       << " xi) on [0, inf)";
  out.description = desc.str();
  out.w.resize(p_max + 1);
  BigReal gamma_val = boost::multiprecision::tgamma(BigReal(shift + 1));
  BigReal rate_pow = pow(rate, BigReal(shift + 1));
  for (std::size_t p = 0; p <= p_max; ++p) {
    if (p > 0) {
      gamma_val *= BigReal(p) + shift;
      rate_pow *= rate;
    }
    out.w[p] = gamma_val / rate_pow;
  }
  return out;
}

BigReal exponential_integral_e1(const BigReal &x) { return scaled_e1(x) * exp(-x); }

BigReal gamma_seed(const BigReal &g) {
  if (g <= 0)
    throw std::invalid_argument("gamma_seed needs g > 0");
  BigReal x = 1 / g;
  BigReal seed = x * scaled_e1(x);
  if (!(seed > 0 && seed < 1))
    throw PrecisionExhausted("Gamma(0,1,g) outside (0,1): " + to_decimal(seed, 20));
  return seed;
}

GammaGrid::GammaGrid(std::size_t max_m, std::size_t max_n)
    : max_m_(max_m), max_n_(max_n), values_((max_m + 1) * (max_n + 1), BigReal(0)) {}

GammaGrid gamma_grid(const BigReal &g, std::size_t max_m, std::size_t max_n,
                     const BigReal &seed) {
  if (g <= 0)
    throw std::invalid_argument("gamma_grid needs g > 0");
  GammaGrid grid(max_m, max_n);
  const BigReal inv_g = 1 / g;

  // m = 0 row:
  // Gamma(0,n+1) = sum_{j=1}^n (-1)^{j+1} g^{-j} (n-j)!/n! + (-1)^n g^{-n} Gamma(0,1)/n!
  BigReal n_fact = 1;
  for (std::size_t n = 0; n <= max_n; ++n) {
    if (n > 0)
      n_fact *= n;
    BigReal sum = 0;
    BigReal g_pow = 1;
    BigReal tail_fact = n_fact; // (n - j)! for j = 0
    for (std::size_t j = 1; j <= n; ++j) {
      g_pow *= inv_g;
      tail_fact /= (n - j + 1);
      BigReal term = g_pow * tail_fact / n_fact;
      if (j % 2 == 1)
        sum += term;
      else
        sum -= term;
    }
    BigReal last = g_pow * seed / n_fact;
    if (n % 2 == 1)
      sum -= last;
    else
      sum += last;
    if (!(sum > 0))
      throw PrecisionExhausted("Gamma(0," + std::to_string(n + 1) +
                               ",g) lost all significance (alternating sum cancelled)");
    grid(0, n) = sum;
  }

  // Gamma(m+1,n+1) = delta_{m0}/g + (m/g) Gamma(m-1,n+1) + (m - n - 1/g) Gamma(m,n+1)
  for (std::size_t n = 0; n <= max_n; ++n)
    for (std::size_t m = 0; m < max_m; ++m) {
      BigReal next = (BigReal(m) - BigReal(n) - inv_g) * grid(m, n);
      if (m == 0)
        next += inv_g;
      else
        next += BigReal(m) * inv_g * grid(m - 1, n);
      if (!(next > 0))
        throw PrecisionExhausted("Gamma(" + std::to_string(m + 1) + "," +
                                 std::to_string(n + 1) + ",g) came out non-positive");
      grid(m + 1, n) = next;
    }
  return grid;
}

QzmWeightMoments qzm_weight_moments(const QzmSystem &sys, std::size_t missing_order) {
  BigReal alpha = sqrt(sys.eps0 / 2);
  BigReal beta = sys.field / 2;
  return qzm_weight_moments(alpha, beta, 2 * (2 * missing_order + 1));
}

QzmWeightMoments qzm_weight_moments(const BigReal &alpha, const BigReal &beta,
                                    std::size_t max_total) {
  if (alpha <= 0 || beta <= 0)
    throw std::invalid_argument("QZM weight needs alpha, beta > 0");
  const unsigned digits = working_precision();
  const BigReal audit_tol = pow10(10 - static_cast<int>(digits));
  const std::size_t count = (max_total + 1) * (max_total + 2) / 2;

  unsigned guard = 2 * digits;
  for (int attempt = 0; attempt < 4; ++attempt, guard *= 2) {
    Vector w(count);
    GammaGrid grid(0, 0);
    {
      PrecisionScope scope(guard);
      BigReal a(alpha, guard), b(beta, guard);
      BigReal g = b / (a * a);
      BigReal seed = gamma_seed(g);
      GammaGrid hi = gamma_grid(g, max_total, max_total, seed);
      BigReal n_fact = 1;
      Vector inv_alpha_pow(max_total + 3);
      inv_alpha_pow[0] = 1;
      for (std::size_t k = 1; k < inv_alpha_pow.size(); ++k)
        inv_alpha_pow[k] = inv_alpha_pow[k - 1] / a;
      for (std::size_t n = 0; n <= max_total; ++n) {
        if (n > 0)
          n_fact *= n;
        for (std::size_t m = 0; m + n <= max_total; ++m)
          w[antidiagonal_index(m, n)] = n_fact * hi(m, n) * inv_alpha_pow[m + n + 2];
      }
      PrecisionScope back(digits);
      for (auto &x : w)
        x = rounded(x);
      grid = GammaGrid(max_total, max_total);
      for (std::size_t m = 0; m <= max_total; ++m)
        for (std::size_t n = 0; n <= max_total; ++n)
          grid(m, n) = rounded(hi(m, n));
    }
    bool symmetric = true;
    for (std::size_t m = 0; m <= max_total && symmetric; ++m)
      for (std::size_t n = 0; m + n <= max_total; ++n) {
        const BigReal &a = w[antidiagonal_index(m, n)];
        const BigReal &b = w[antidiagonal_index(n, m)];
        if (!(a > 0) || abs(a - b) > audit_tol * a) {
          symmetric = false;
          break;
        }
      }
    if (!symmetric)
      continue;
    QzmWeightMoments out(std::move(grid), std::move(w));
    out.alpha = alpha;
    out.beta = beta;
    out.g = beta / (alpha * alpha);
    out.max_total = max_total;
    out.guard_digits = guard;
    return out;
  }
  throw PrecisionExhausted("QZM weight moments fail the reflection-symmetry audit even at " +
                           std::to_string(guard / 2) + " digits");
}

} // namespace oppq
