#include "doctest.h"

#include "oppq/mer.hpp"

using namespace oppq;

namespace {

BigReal rel(const BigReal &a, const BigReal &b) {
  BigReal scale = abs(b) > 1 ? BigReal(abs(b)) : BigReal(1);
  return abs(a - b) / scale;
}

} // namespace

TEST_CASE("harmonic moments by hand") {
  PrecisionScope s(60);
  const BigReal e("2.5");
  auto t = build_1d(Recurrence1D::harmonic_even(), e, 4);
  // u(p+1) = E u(p) + 2p(2p-1) u(p-1), u(0) = 1
  CHECK(t.at(0, 0) == 1);
  CHECK(t.at(1, 0) == e);
  CHECK(t.at(2, 0) == e * e + 2);
  CHECK(rel(t.at(3, 0), e * e * e + 14 * e) < pow10(-55));
  CHECK(rel(t.at(4, 0), e * t.at(3, 0) + 30 * t.at(2, 0)) < pow10(-55));
}

TEST_CASE("harmonic ground state is an exact moment solution at E = 1") {
  PrecisionScope s(60);
  // psi = exp(-x^2/2): u(p) = <x^2p> / <1> = (2p-1)!!
  auto t = build_1d(Recurrence1D::harmonic_even(), BigReal(1), 10);
  BigReal expected = 1;
  for (std::size_t p = 0; p <= 10; ++p) {
    if (p > 0)
      expected *= 2 * p - 1;
    CHECK(rel(t.at(p, 0), expected) < pow10(-55));
  }
}

TEST_CASE("quartic recurrence with two missing moments") {
  PrecisionScope s(50);
  const BigReal e("1.25");
  auto t = build_1d(Recurrence1D::quartic_even(), e, 5);
  CHECK(t.columns() == 2);
  // u(q+1) = E u(q-1) + 2(q-1)(2q-3) u(q-2)
  CHECK(t.at(0, 0) == 1);
  CHECK(t.at(1, 1) == 1);
  CHECK(t.at(2, 0) == e);
  CHECK(t.at(2, 1) == 0);
  CHECK(t.at(3, 0) == 2);  // q = 2: E u(1) + 2 u(0)
  CHECK(t.at(3, 1) == e);
  CHECK(rel(t.at(4, 0), e * t.at(2, 0) + 12 * t.at(1, 0)) < pow10(-45));
  CHECK(rel(t.at(4, 1), e * t.at(2, 1) + 12 * t.at(1, 1)) < pow10(-45));
}

TEST_CASE("recurrence rejects a reference below index zero") {
  PrecisionScope s(40);
  Recurrence1D bad(0, {{0, BigReal(1), 0, 1}, {1, BigReal(1), 0, 0}});
  CHECK_THROWS_AS(build_1d(bad, BigReal(1), 3), std::logic_error);
  CHECK_THROWS_AS(Recurrence1D(0, {}), std::invalid_argument);
  CHECK_THROWS_AS(build_1d(Recurrence1D::quartic_even(), BigReal(1), 0), std::invalid_argument);
}

TEST_CASE("1-D energy derivative matches central differences") {
  PrecisionScope s(80);
  const BigReal h = pow10(-25);
  for (auto rec : {Recurrence1D::harmonic_even(), Recurrence1D::quartic_even()}) {
    for (const char *es : {"0.7", "3.3", "11.9"}) {
      BigReal e(es);
      auto t = build_derivative(build_1d(rec, e, 12));
      auto plus = build_1d(rec, e + h, 12);
      auto minus = build_1d(rec, e - h, 12);
      for (std::size_t p = 0; p <= 12; ++p)
        for (std::size_t l = 0; l < t.columns(); ++l) {
          BigReal fd = (plus.at(p, l) - minus.at(p, l)) / (2 * h);
          CHECK(rel(t.d_at(p, l), fd) < pow10(-40));
        }
    }
  }
}

TEST_CASE("antidiagonal indexing") {
  CHECK(antidiagonal_index(0, 0) == 0);
  CHECK(antidiagonal_index(1, 0) == 1);
  CHECK(antidiagonal_index(0, 1) == 2);
  CHECK(antidiagonal_index(2, 0) == 3);
  CHECK(antidiagonal_index(0, 3) == 9);
  auto order = antidiagonal_order(2);
  REQUIRE(order.size() == qzm_basis_size(2));
  CHECK(qzm_basis_size(2) == 21);
  for (std::size_t i = 0; i < order.size(); ++i)
    CHECK(antidiagonal_index(order[i].first, order[i].second) == i);
}

TEST_CASE("QZM lattice by hand for m_s = 1") {
  PrecisionScope s(60);
  const BigReal b(2), z(1), eps("1.3");
  QzmSystem sys(b, z, BigReal(1));
  auto t = build_qzm(sys, eps, 1);
  CHECK(t.rows() == 10);
  // Column 0 (mu_0 = M(0,0) = 1, mu_1 = M(1,1) = 0)
  BigReal m10 = z / eps;
  BigReal m20 = 2 * (z * z / eps + 1) / eps;
  BigReal m21 = 2 * z / (eps * (b + eps));
  BigReal m30 = (z * m20 - (2 * b + eps) / 2 * m21 + 4 * m10) / (eps / 2);
  CHECK(rel(t.at(1, 0, 0), m10) < pow10(-55));
  CHECK(rel(t.at(2, 0, 0), m20) < pow10(-55));
  CHECK(t.at(1, 1, 0) == 0);
  CHECK(rel(t.at(2, 1, 0), m21) < pow10(-55));
  CHECK(rel(t.at(3, 0, 0), m30) < pow10(-55));
  // Column 1 only sees the seed M(1,1) = 1 from d = 2 onward.
  CHECK(t.at(1, 0, 1) == 0);
  CHECK(t.at(1, 1, 1) == 1);
  CHECK(rel(t.at(2, 1, 1), z / (b + eps)) < pow10(-55));
}

TEST_CASE("QZM lattice is reflection symmetric and satisfies the stencil") {
  for (unsigned digits : {60u, 120u}) {
    PrecisionScope s(digits);
    QzmSystem sys(BigReal("0.2"), BigReal(1), BigReal("0.5"));
    for (std::size_t ms = 0; ms <= 6; ++ms) {
      auto t = build_qzm(sys, BigReal("0.59"), ms);
      for (std::size_t d = 0; d <= 2 * ms + 1; ++d)
        for (std::size_t m = 0; m <= d; ++m)
          for (std::size_t l = 0; l <= ms; ++l)
            CHECK(t.at(m, d - m, l) == t.at(d - m, m, l));
      CHECK(qzm_stencil_residual(sys, t) < pow10(8 - static_cast<int>(digits)));
    }
  }
}

TEST_CASE("QZM derivative lattice matches central differences") {
  PrecisionScope s(90);
  QzmSystem sys(BigReal(2), BigReal(1), BigReal(1));
  const BigReal eps("1.05"), h = pow10(-30);
  auto t = build_derivative(build_qzm(sys, eps, 3));
  auto plus = build_qzm(sys, eps + h, 3);
  auto minus = build_qzm(sys, eps - h, 3);
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t l = 0; l < t.columns(); ++l) {
      BigReal fd = (plus.at(r, l) - minus.at(r, l)) / (2 * h);
      CHECK(rel(t.d_at(r, l), fd) < pow10(-45));
    }
}

TEST_CASE("QZM rejects bad parameters") {
  PrecisionScope s(40);
  CHECK_THROWS_AS(QzmSystem(BigReal(0), BigReal(1), BigReal(1)), std::invalid_argument);
  CHECK_THROWS_AS(QzmSystem(BigReal(1), BigReal(-1), BigReal(1)), std::invalid_argument);
  CHECK_THROWS_AS(QzmSystem(BigReal(1), BigReal(1), BigReal(0)), std::invalid_argument);
  QzmSystem sys(BigReal(2), BigReal(1), BigReal(1));
  CHECK_THROWS_AS(build_qzm(sys, BigReal(0), 2), std::invalid_argument);
  auto t = build_1d(Recurrence1D::harmonic_even(), BigReal(1), 3);
  CHECK_THROWS_AS(qzm_stencil_residual(sys, t), std::invalid_argument);
}
