#include "doctest.h"

#include "oppq/mpnum.hpp"

#include <boost/math/constants/constants.hpp>

#include <random>

using namespace oppq;

namespace {

// Hilbert matrix H_ij = 1/(i+j+1): badly conditioned, known integer inverse.
SymMatrix hilbert(std::size_t n) {
  SymMatrix h(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j)
      h(i, j) = BigReal(1) / (i + j + 1);
  return h;
}

BigReal binom(long n, long k) {
  if (k < 0 || k > n)
    return 0;
  BigReal r = 1;
  for (long i = 1; i <= k; ++i)
    r = r * (n - k + i) / i;
  return r;
}

BigReal hilbert_inverse(long n, long i, long j) {
  BigReal v = BigReal(i + j + 1) * binom(n + i, n - j - 1) * binom(n + j, n - i - 1) *
              binom(i + j, i) * binom(i + j, i);
  return (i + j) % 2 ? BigReal(-v) : v;
}

// Second-difference matrix: eigenvalues 2 - 2 cos(k pi / (n+1)).
SymMatrix second_difference(std::size_t n) {
  SymMatrix t(n);
  for (std::size_t i = 0; i < n; ++i) {
    t(i, i) = 2;
    if (i > 0)
      t(i, i - 1) = -1;
  }
  return t;
}

BigReal pi() { return boost::math::constants::pi<BigReal>(); }

} // namespace

TEST_CASE("precision scope restores the previous precision") {
  set_working_precision(60);
  {
    PrecisionScope s(200);
    CHECK(working_precision() == 200);
    BigReal x = 1;
    CHECK(x.precision() == 200);
  }
  CHECK(working_precision() == 60);
  CHECK_THROWS_AS(set_working_precision(10), std::invalid_argument);
}

TEST_CASE("decimal round trip keeps every digit") {
  PrecisionScope s(60);
  const std::string text = "1.02221390766512912345678901234567890123456789";
  BigReal x = parse_real(text);
  CHECK(to_decimal(x, 40) == "1.022213907665129123456789012345678901235");
  CHECK(parse_real(to_decimal(x)) == x);
  CHECK_THROWS(parse_real("1.2.3"));
  CHECK_THROWS(parse_real(""));
  CHECK(pow10(-5) * 100000 == 1);
}

TEST_CASE("rounded() drops to the working precision") {
  PrecisionScope s(40);
  BigReal hi;
  {
    PrecisionScope t(120);
    hi = BigReal(1) / 3;
  }
  BigReal r = rounded(hi);
  CHECK(r.precision() == 40);
}

TEST_CASE("cholesky reproduces the Hilbert matrix and its exact inverse") {
  PrecisionScope s(80);
  const std::size_t n = 10;
  auto h = hilbert(n);
  auto c = cholesky(h);
  auto back = c.gram();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j)
      CHECK(abs(back(i, j) - h(i, j)) < pow10(-70));

  // Column k of H^-1 from spd_solve against the closed form.
  for (std::size_t k = 0; k < n; k += 3) {
    Vector e(n, BigReal(0));
    e[k] = 1;
    auto x = spd_solve(h, e);
    for (std::size_t i = 0; i < n; ++i) {
      BigReal exact = hilbert_inverse(n, i, k);
      CHECK(abs(x[i] - exact) <= pow10(-50) * abs(exact));
    }
  }
}

TEST_CASE("triangular solves and inverse agree") {
  PrecisionScope s(50);
  auto c = cholesky(hilbert(6));
  auto inv = invert_lower(c);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  Vector b(6);
  for (auto &x : b)
    x = u(rng);
  auto x = solve_lower(c, b);
  auto y = solve_lower_transposed(c, b);
  for (std::size_t i = 0; i < 6; ++i) {
    BigReal ax = 0, aty = 0, direct = 0;
    for (std::size_t j = 0; j <= i; ++j) {
      ax += c(i, j) * x[j];
      direct += inv(i, j) * b[j];
    }
    for (std::size_t j = i; j < 6; ++j)
      aty += c(j, i) * y[j];
    CHECK(abs(ax - b[i]) < pow10(-40));
    CHECK(abs(aty - b[i]) < pow10(-40));
    CHECK(abs(direct - x[i]) < pow10(-35));
  }
}

TEST_CASE("cholesky rejects an indefinite matrix and names the row") {
  PrecisionScope s(40);
  SymMatrix m(3);
  m(0, 0) = 1;
  m(1, 1) = 1;
  m(2, 2) = -1;
  try {
    (void)cholesky(m);
    FAIL("expected NotPositiveDefinite");
  } catch (const NotPositiveDefinite &e) {
    CHECK(e.row() == 2);
  }
}

TEST_CASE("dimension checks") {
  PrecisionScope s(40);
  Vector b(3, BigReal(1));
  CHECK_THROWS_AS(spd_solve(SymMatrix::identity(2), b), DimensionMismatch);
  CHECK_THROWS_AS(solve_lower(cholesky(SymMatrix::identity(2)), b), DimensionMismatch);
}

TEST_CASE("inertia count matches the closed-form spectrum") {
  PrecisionScope s(60);
  const std::size_t n = 12;
  auto t = second_difference(n);
  for (std::size_t k = 1; k <= n; ++k) {
    BigReal ev = 2 - 2 * cos(k * pi() / (n + 1));
    CHECK(count_below(t, ev - pow10(-30)) == k - 1);
    CHECK(count_below(t, ev + pow10(-30)) == k);
  }
}

TEST_CASE("smallest eigenpair of the second-difference matrix") {
  for (unsigned digits : {60u, 120u}) {
    PrecisionScope s(digits);
    const std::size_t n = 15;
    auto t = second_difference(n);
    auto e = smallest_eigenvalue(t);
    BigReal exact = 2 - 2 * cos(pi() / (n + 1));
    CHECK(abs(e.value - exact) < pow10(8 - static_cast<int>(digits)));
    CHECK(e.lower <= exact);
    CHECK(exact <= e.upper);
    // Eigenvector sin(j pi/(n+1)) normalized, positive sign convention.
    BigReal norm = 0;
    for (std::size_t j = 1; j <= n; ++j)
      norm += sin(j * pi() / (n + 1)) * sin(j * pi() / (n + 1));
    norm = sqrt(norm);
    for (std::size_t j = 0; j < n; ++j)
      CHECK(abs(e.vector[j] - sin((j + 1) * pi() / (n + 1)) / norm) <
            pow10(8 - static_cast<int>(digits)));
  }
}

TEST_CASE("smallest eigenvalue of a 2x2 against the quadratic formula") {
  PrecisionScope s(50);
  SymMatrix m(2);
  m(0, 0) = 3;
  m(1, 0) = BigReal(1) / 7;
  m(1, 1) = BigReal("3.000000000000000000001");
  auto e = smallest_eigenvalue(m);
  BigReal tr = m(0, 0) + m(1, 1), det = m(0, 0) * m(1, 1) - m(1, 0) * m(1, 0);
  BigReal exact = (tr - sqrt(tr * tr - 4 * det)) / 2;
  CHECK(abs(e.value - exact) < pow10(-45));
  CHECK(abs(norm2(e.vector) - 1) < pow10(-45));
}

TEST_CASE("vector helpers") {
  PrecisionScope s(40);
  Vector a = {BigReal(3), BigReal(-4)};
  CHECK(norm2(a) == 5);
  CHECK(norm_inf(a) == 4);
  CHECK(dot(a, a) == 25);
  auto m = SymMatrix::identity(2);
  CHECK(m.quadratic_form(a) == 25);
  CHECK(m.multiply(a)[1] == -4);
  CHECK(m.leading(1).dim() == 1);
}
