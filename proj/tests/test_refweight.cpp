#include "doctest.h"

#include "oppq/refweight.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

using namespace oppq;
using Oracle = boost::multiprecision::cpp_bin_float_50;

namespace {

// Independent reference values: Boost's own special functions and exp-sinh
// quadrature in a different number type.

Oracle to_oracle(const BigReal &x) { return Oracle(to_decimal(x, 50)); }

int agreeing_digits(const BigReal &x, const Oracle &ref) {
  Oracle diff = abs(to_oracle(x) - ref) / abs(ref);
  if (diff == 0)
    return 50;
  return static_cast<int>(-log10(diff).convert_to<double>());
}

Oracle gamma_quadrature(unsigned m, unsigned n, const Oracle &g) {
  boost::math::quadrature::exp_sinh<Oracle> integrator;
  auto f = [&](const Oracle &x) {
    if (x > 5000) // e^-x below the oracle's resolution; avoids inf * 0
      return Oracle(0);
    return Oracle(pow(x, m) * exp(-x) / pow(1 + g * x, n + 1));
  };
  return integrator.integrate(f, Oracle(0), std::numeric_limits<Oracle>::infinity(),
                              Oracle("1e-45"));
}

// w(m, n) as a genuine double integral over the quarter plane.
Oracle weight_quadrature_2d(unsigned m, unsigned n, const Oracle &alpha, const Oracle &beta) {
  boost::math::quadrature::exp_sinh<Oracle> outer, inner;
  const Oracle inf = std::numeric_limits<Oracle>::infinity();
  auto row = [&](const Oracle &xi) {
    if (xi > 5000)
      return Oracle(0);
    auto f = [&](const Oracle &eta) {
      if (eta > 5000)
        return Oracle(0);
      return Oracle(pow(xi, m) * pow(eta, n) * exp(-beta * xi * eta - alpha * (xi + eta)));
    };
    return inner.integrate(f, Oracle(0), inf, Oracle("1e-40"));
  };
  return outer.integrate(row, Oracle(0), inf, Oracle("1e-40"));
}

} // namespace

TEST_CASE("harmonic weight moments equal 2^(p+1/2) Gamma(p+1/2)") {
  PrecisionScope s(60);
  auto w = harmonic_weight_moments(12);
  REQUIRE(w.w.size() == 13);
  for (unsigned p = 0; p <= 12; ++p) {
    Oracle ref = pow(Oracle(2), Oracle(p) + Oracle(0.5)) * boost::math::tgamma(Oracle(p) + Oracle(0.5));
    CHECK(agreeing_digits(w.w[p], ref) >= 45);
  }
}

TEST_CASE("gamma weight moments") {
  PrecisionScope s(60);
  auto w = gamma_weight_moments(BigReal("0.25"), BigReal(3), 6);
  for (unsigned p = 0; p <= 6; ++p) {
    Oracle ref = boost::math::tgamma(Oracle(p) + Oracle("1.25")) / pow(Oracle(3), Oracle(p) + Oracle("1.25"));
    CHECK(agreeing_digits(w.w[p], ref) >= 45);
  }
  CHECK_THROWS_AS(gamma_weight_moments(BigReal(-1), BigReal(1), 3), std::invalid_argument);
  CHECK_THROWS_AS(gamma_weight_moments(BigReal(0), BigReal(0), 3), std::invalid_argument);
}

TEST_CASE("E1 agrees with Boost expint on both sides of the series/fraction switch") {
  PrecisionScope s(50);
  for (const char *x : {"0.001", "0.5", "1", "3.999", "4", "4.001", "7.5", "25", "120"}) {
    BigReal mine = exponential_integral_e1(BigReal(x));
    Oracle ref = boost::math::expint(1, Oracle(x));
    CHECK_MESSAGE(agreeing_digits(mine, ref) >= 45, "x = " << std::string(x));
  }
  CHECK_THROWS_AS(exponential_integral_e1(BigReal(0)), std::invalid_argument);
}

TEST_CASE("Gamma seed and grid against quadrature, M, N <= 4") {
  for (unsigned digits : {60u, 120u}) {
    PrecisionScope s(digits);
    for (const char *gs : {"2", "0.04", "50"}) {
      BigReal g(gs);
      auto seed = gamma_seed(g);
      CHECK(agreeing_digits(seed, gamma_quadrature(0, 0, Oracle(gs))) >= 40);
      auto grid = gamma_grid(g, 4, 4, seed);
      for (unsigned m = 0; m <= 4; ++m)
        for (unsigned n = 0; n <= 4; ++n)
          CHECK_MESSAGE(agreeing_digits(grid(m, n), gamma_quadrature(m, n, Oracle(gs))) >= 15,
                        "g = " << std::string(gs) << " m = " << m << " n = " << n);
    }
  }
  PrecisionScope s(40);
  CHECK_THROWS_AS(gamma_seed(BigReal(0)), std::invalid_argument);
}

TEST_CASE("Gamma m = 0 recursion step") {
  // Gamma(1,n+1,g) = 1/g + (-n - 1/g) Gamma(0,n+1,g)
  PrecisionScope s(60);
  BigReal g(2);
  auto grid = gamma_grid(g, 1, 3, gamma_seed(g));
  for (unsigned n = 0; n <= 3; ++n)
    CHECK(abs(grid(1, n) - (1 / g + (-BigReal(n) - 1 / g) * grid(0, n))) < pow10(-55));
}

TEST_CASE("QZM weight moments against 2-D quadrature") {
  PrecisionScope s(60);
  QzmSystem sys(BigReal(2), BigReal(1), BigReal(1));
  auto w = qzm_weight_moments(sys, 1);
  CHECK(w.max_total == 6);
  CHECK(abs(w.alpha - sqrt(BigReal("0.5"))) < pow10(-55));
  CHECK(w.beta == 1);
  CHECK(abs(w.g - 2) < pow10(-55));
  Oracle alpha = sqrt(Oracle("0.5")), beta = 1;
  CHECK(agreeing_digits(w.w(0, 0), weight_quadrature_2d(0, 0, alpha, beta)) >= 20);
  CHECK(agreeing_digits(w.w(2, 1), weight_quadrature_2d(2, 1, alpha, beta)) >= 20);
  // alpha^2 w(0,0) is the seed.
  CHECK(abs(w.alpha * w.alpha * w.w(0, 0) - gamma_seed(w.g)) < pow10(-50));
}

TEST_CASE("QZM weight moments are reflection symmetric") {
  for (unsigned digits : {60u, 120u}) {
    PrecisionScope s(digits);
    auto w = qzm_weight_moments(QzmSystem(BigReal("0.02"), BigReal(1), BigReal("0.5")), 4);
    CHECK(w.guard_digits >= 2 * digits);
    for (std::size_t m = 0; m <= w.max_total; ++m)
      for (std::size_t n = 0; m + n <= w.max_total; ++n)
        CHECK(abs(w.w(m, n) - w.w(n, m)) <= pow10(10 - static_cast<int>(digits)) * w.w(m, n));
    CHECK(w.w(2, 1).precision() == digits);
  }
}

TEST_CASE("alternating sum that cancels completely is reported") {
  PrecisionScope s(30);
  BigReal g("0.001");
  CHECK_THROWS_AS(gamma_grid(g, 0, 60, gamma_seed(g)), PrecisionExhausted);
}
