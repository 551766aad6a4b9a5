#pragma once

// Exact scalars: checked rationals, single surds c*sqrt(r), and finite sums
// of surds (elements of a multiquadratic field) with exact sign decisions.

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/rational.hpp>
#include <boost/safe_numerics/safe_integer.hpp>

namespace coarse {

using Integer = boost::safe_numerics::safe<std::int64_t>;
using Rational = boost::rational<Integer>;

// boost::rational's mixed (integer, rational) equality recurses forever under
// C++20 reversed-operator rewriting; these exact matches take precedence.
inline bool operator==(const Rational& a, int b) { return a.denominator() == 1 && a.numerator() == b; }
inline bool operator==(const Rational& a, long b) { return a.denominator() == 1 && a.numerator() == b; }
inline bool operator==(int a, const Rational& b) { return b == a; }
inline bool operator==(long a, const Rational& b) { return b == a; }

Rational parse_rational(std::string_view text);
std::string to_string(const Rational& q);
double to_double(const Rational& q);
int sign(const Rational& q);
Rational rational_abs(const Rational& q);
Rational ceil_rational(const Rational& q);

// Largest s with s*s dividing n, and the squarefree cofactor n / s^2.
std::pair<std::uint64_t, std::uint64_t> square_split(std::uint64_t n);
std::vector<std::uint64_t> prime_factors(std::uint64_t n);

/// c * sqrt(r) with r squarefree. A zero surd always has r == 1.
class Surd {
 public:
  Surd() = default;
  Surd(Rational coef) : coef_(std::move(coef)) {}  // NOLINT(google-explicit-constructor)
  Surd(Rational coef, std::uint64_t radicand);

  /// The nonnegative square root of q >= 0, exactly.
  static Surd sqrt_of(const Rational& q);

  const Rational& coef() const { return coef_; }
  std::uint64_t radicand() const { return radicand_; }
  bool is_zero() const { return coef_ == 0; }

  Rational square() const;
  Surd abs() const;
  Surd operator-() const;
  double approx() const;

  friend Surd operator*(const Surd& a, const Surd& b);
  friend bool operator==(const Surd& a, const Surd& b) = default;

 private:
  Rational coef_{0};
  std::uint64_t radicand_ = 1;
};

std::string to_string(const Surd& s);
Surd parse_surd(std::string_view text);

/// Finite sum of surds with distinct squarefree radicands. Square roots of
/// distinct squarefree integers are linearly independent over Q, so the
/// representation is canonical and equality is structural.
class SurdSum {
 public:
  SurdSum() = default;
  SurdSum(const Rational& q);  // NOLINT(google-explicit-constructor)
  SurdSum(const Surd& s);      // NOLINT(google-explicit-constructor)

  bool is_zero() const { return terms_.empty(); }
  bool is_rational() const;
  /// Rational part (radicand 1).
  Rational rational_part() const;
  const std::vector<std::pair<std::uint64_t, Rational>>& terms() const { return terms_; }

  SurdSum& operator+=(const SurdSum& other);
  SurdSum& operator-=(const SurdSum& other);
  SurdSum& operator+=(const Surd& s);
  SurdSum operator-() const;
  friend SurdSum operator+(SurdSum a, const SurdSum& b) { return a += b; }
  friend SurdSum operator-(SurdSum a, const SurdSum& b) { return a -= b; }
  friend SurdSum operator*(const SurdSum& a, const SurdSum& b);
  friend bool operator==(const SurdSum& a, const SurdSum& b) = default;

  int sign() const;
  SurdSum abs() const;
  double approx() const;

  /// Smallest multiple of 10^-digits that is >= this value.
  Rational upper_bound(int digits = 12) const;

 private:
  // sorted by radicand, no zero coefficients
  std::vector<std::pair<std::uint64_t, Rational>> terms_;
};

int compare(const SurdSum& a, const SurdSum& b);
inline bool operator<(const SurdSum& a, const SurdSum& b) { return compare(a, b) < 0; }
inline bool operator<=(const SurdSum& a, const SurdSum& b) { return compare(a, b) <= 0; }
std::string to_string(const SurdSum& s);

}  // namespace coarse
