#pragma once

// Reference-function weights and their exact power moments.

#include "oppq/mer.hpp"
#include "oppq/mpnum.hpp"

#include <string>

namespace oppq {

class PrecisionExhausted : public NumericError {
public:
  using NumericError::NumericError;
};

/// w(p) = integral of x^p R(x) over the half line, p = 0..p_max.
struct WeightMoments1D {
  Vector w;
  std::string description;
};

/// Weight exp(-xi/2)/sqrt(xi): w(p) = 2^{p+1/2} Gamma(p+1/2).
WeightMoments1D harmonic_weight_moments(std::size_t p_max);

/// Weight xi^shift exp(-rate xi): w(p) = Gamma(p+shift+1) / rate^{p+shift+1}.
WeightMoments1D gamma_weight_moments(const BigReal &shift, const BigReal &rate,
                                     std::size_t p_max);

/// Exponential integral E1(x), x > 0: power series for x <= 4, modified Lentz
/// continued fraction beyond.
BigReal exponential_integral_e1(const BigReal &x);

/// Gamma(0,1,g) = integral_0^inf e^{-x}/(1+gx) dx = (1/g) e^{1/g} E1(1/g).
BigReal gamma_seed(const BigReal &g);

/// Gamma(m, n+1, g) = integral_0^inf x^m e^{-x} (1+gx)^{-(n+1)} dx on
/// 0 <= m <= max_m, 0 <= n <= max_n.
class GammaGrid {
public:
  GammaGrid(std::size_t max_m, std::size_t max_n);
  std::size_t max_m() const noexcept { return max_m_; }
  std::size_t max_n() const noexcept { return max_n_; }
  const BigReal &operator()(std::size_t m, std::size_t n) const {
    return values_[m * (max_n_ + 1) + n];
  }
  BigReal &operator()(std::size_t m, std::size_t n) { return values_[m * (max_n_ + 1) + n]; }

private:
  std::size_t max_m_, max_n_;
  Vector values_;
};

/// Builds the grid from the seed: the alternating sum for the m = 0 row, then
/// the three-term recursion in m for each n. Runs at the current precision;
/// throws PrecisionExhausted if a Gamma(0, n+1, g) comes out non-positive.
GammaGrid gamma_grid(const BigReal &g, std::size_t max_m, std::size_t max_n,
                     const BigReal &seed);

/// Power moments of R = exp(-beta xi eta - alpha (xi + eta)).
class QzmWeightMoments {
public:
  BigReal alpha; ///< sqrt(eps0 / 2)
  BigReal beta;  ///< B / 2
  BigReal g;     ///< B / eps0
  std::size_t max_total = 0;
  unsigned guard_digits = 0; ///< precision the grid was generated at

  /// w(m, n) for m + n <= max_total.
  const BigReal &w(std::size_t m, std::size_t n) const { return w_[antidiagonal_index(m, n)]; }
  const GammaGrid &gamma() const noexcept { return gamma_; }

  QzmWeightMoments(GammaGrid gamma, Vector w) : gamma_(std::move(gamma)), w_(std::move(w)) {}

private:
  GammaGrid gamma_;
  Vector w_;
};

/// w(m, n) = n! Gamma(m, n+1, g) / alpha^{m+n+2} for every index pair needed
/// by the order-m_s basis (m + n <= 2(2 m_s + 1)). The grid is generated at
/// twice the working precision (more if the w(m,n) = w(n,m) audit fails) and
/// rounded back.
QzmWeightMoments qzm_weight_moments(const QzmSystem &sys, std::size_t missing_order);

/// Same, parameterized directly by (alpha, beta) and the largest total degree.
QzmWeightMoments qzm_weight_moments(const BigReal &alpha, const BigReal &beta,
                                    std::size_t max_total);

} // namespace oppq
