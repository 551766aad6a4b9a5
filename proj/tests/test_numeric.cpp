#include <doctest.h>

#include <cmath>
#include <random>

#include "coarse/numeric.hpp"

using namespace coarse;

TEST_CASE("rationals parse and print in lowest terms") {
  CHECK(to_string(parse_rational("6/4")) == "3/2");
  CHECK(to_string(parse_rational("-10/5")) == "-2");
  CHECK(to_string(parse_rational("0")) == "0");
  CHECK(parse_rational("4/21") == Rational(4, 21));
  CHECK(ceil_rational(Rational(7, 3)) == Rational(3));
  CHECK(ceil_rational(Rational(-7, 3)) == Rational(-2));
  CHECK_THROWS(parse_rational("1/0"));
  CHECK_THROWS(parse_rational("abc"));
}

TEST_CASE("checked integers refuse to overflow") {
  Rational big(Integer{std::int64_t{1} << 62});
  CHECK_THROWS(big * big);
}

TEST_CASE("square roots of rationals stay exact") {
  auto s = Surd::sqrt_of(Rational(1, 21));
  CHECK(s.square() == Rational(1, 21));
  CHECK(s.radicand() == 21);
  CHECK(s.coef() == Rational(1, 21));
  CHECK(Surd::sqrt_of(Rational(9, 4)).radicand() == 1);
  CHECK(to_string(Surd::sqrt_of(Rational(2))) == "1*sqrt(2)");
  CHECK(parse_surd("1/21*sqrt(21)") == s);
  CHECK((s * s).radicand() == 1);
  CHECK((s * s).coef() == Rational(1, 21));
}

TEST_CASE("square_split separates the squarefree part") {
  CHECK(square_split(72) == std::make_pair<std::uint64_t, std::uint64_t>(6, 2));
  CHECK(square_split(1) == std::make_pair<std::uint64_t, std::uint64_t>(1, 1));
  CHECK(square_split(30) == std::make_pair<std::uint64_t, std::uint64_t>(1, 30));
}

TEST_CASE("surd sums decide sign exactly on random inputs") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> coef(-40, 40);
  std::uniform_int_distribution<int> rad(1, 30);
  for (int trial = 0; trial < 400; ++trial) {
    SurdSum s;
    double approx = 0;
    for (int t = 0; t < 3; ++t) {
      int c = coef(rng);
      int r = rad(rng);
      auto [sq, free] = square_split(static_cast<std::uint64_t>(r));
      s += Surd(Rational(c) * Rational(Integer{static_cast<std::int64_t>(sq)}), free);
      approx += c * std::sqrt(static_cast<double>(r));
    }
    if (std::abs(approx) > 1e-9) {
      CHECK(s.sign() == (approx > 0 ? 1 : -1));
    } else {
      CHECK(s.sign() == 0);
    }
    CHECK(s.approx() == doctest::Approx(approx));
    auto ub = s.upper_bound(6);
    CHECK(compare(s, SurdSum(ub)) <= 0);
    CHECK(to_double(ub) - approx < 2e-6);
  }
}

TEST_CASE("sum and difference identities") {
  SurdSum a = Surd(Rational(3), 2);
  SurdSum b = Surd(Rational(-1, 2), 3);
  CHECK((a + b) - b == a);
  CHECK((a - a).is_zero());
  CHECK((a * a) == SurdSum(Rational(18)));
  CHECK(compare(a, b) > 0);
  CHECK(SurdSum(Rational(1, 3)).is_rational());
  CHECK(!(a + b).is_rational());
}
