#include "coarse/numeric.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace coarse {

namespace {

std::int64_t parse_int(std::string_view text) {
  std::int64_t value = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || first == last) {
    throw std::invalid_argument("not an integer: '" + std::string(text) + "'");
  }
  return value;
}

std::string trim(std::string_view text) {
  auto b = text.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  auto e = text.find_last_not_of(" \t");
  return std::string(text.substr(b, e - b + 1));
}

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t out = 0;
  if (__builtin_mul_overflow(a, b, &out)) throw std::overflow_error("radicand overflow");
  return out;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  std::string t = trim(text);
  auto slash = t.find('/');
  if (slash == std::string::npos) return Rational(Integer(parse_int(t)));
  std::int64_t num = parse_int(std::string_view(t).substr(0, slash));
  std::int64_t den = parse_int(std::string_view(t).substr(slash + 1));
  if (den == 0) throw std::invalid_argument("zero denominator in '" + t + "'");
  return Rational(Integer(num), Integer(den));
}

std::string to_string(const Rational& q) {
  std::int64_t num = q.numerator();
  std::int64_t den = q.denominator();
  if (den == 1) return std::to_string(num);
  return std::to_string(num) + "/" + std::to_string(den);
}

double to_double(const Rational& q) {
  return static_cast<double>(static_cast<std::int64_t>(q.numerator())) /
         static_cast<double>(static_cast<std::int64_t>(q.denominator()));
}

int sign(const Rational& q) {
  if (q.numerator() > 0) return 1;
  if (q.numerator() < 0) return -1;
  return 0;
}

Rational rational_abs(const Rational& q) { return q < 0 ? -q : q; }

Rational ceil_rational(const Rational& q) {
  std::int64_t num = q.numerator();
  std::int64_t den = q.denominator();
  std::int64_t f = num / den;
  if (num % den != 0 && num > 0) ++f;
  return Rational(Integer(f));
}

std::pair<std::uint64_t, std::uint64_t> square_split(std::uint64_t n) {
  if (n == 0) return {0, 1};
  std::uint64_t square = 1;
  std::uint64_t free = 1;
  for (std::uint64_t p = 2; p * p <= n; p += (p == 2 ? 1 : 2)) {
    int e = 0;
    while (n % p == 0) {
      n /= p;
      ++e;
    }
    for (int k = 0; k < e / 2; ++k) square *= p;
    if (e % 2 == 1) free *= p;
  }
  free *= n;
  return {square, free};
}

std::vector<std::uint64_t> prime_factors(std::uint64_t n) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t p = 2; p * p <= n; p += (p == 2 ? 1 : 2)) {
    if (n % p == 0) {
      out.push_back(p);
      while (n % p == 0) n /= p;
    }
  }
  if (n > 1) out.push_back(n);
  return out;
}

// ---------------------------------------------------------------- Surd

Surd::Surd(Rational coef, std::uint64_t radicand) : coef_(std::move(coef)), radicand_(radicand) {
  if (radicand_ == 0) {
    coef_ = 0;
    radicand_ = 1;
  }
  if (coef_ == 0) {
    radicand_ = 1;
    return;
  }
  auto [s, r] = square_split(radicand_);
  if (s != 1) coef_ *= Rational(Integer(static_cast<std::int64_t>(s)));
  radicand_ = r;
}

Surd Surd::sqrt_of(const Rational& q) {
  if (q < 0) throw std::domain_error("square root of a negative rational");
  if (q == 0) return {};
  // sqrt(a/b) = sqrt(a*b) / b
  auto a = static_cast<std::uint64_t>(static_cast<std::int64_t>(q.numerator()));
  auto b = static_cast<std::uint64_t>(static_cast<std::int64_t>(q.denominator()));
  auto [s, r] = square_split(checked_mul(a, b));
  return Surd(Rational(Integer(static_cast<std::int64_t>(s)), Integer(static_cast<std::int64_t>(b))), r);
}

Rational Surd::square() const {
  return coef_ * coef_ * Rational(Integer(static_cast<std::int64_t>(radicand_)));
}

Surd Surd::abs() const {
  Surd out = *this;
  if (out.coef_ < 0) out.coef_ = -out.coef_;
  return out;
}

Surd Surd::operator-() const {
  Surd out = *this;
  out.coef_ = -out.coef_;
  return out;
}

double Surd::approx() const {
  return to_double(coef_) * std::sqrt(static_cast<double>(radicand_));
}

Surd operator*(const Surd& a, const Surd& b) {
  if (a.is_zero() || b.is_zero()) return {};
  if (a.radicand_ == 1 && b.radicand_ == 1) return Surd(a.coef_ * b.coef_);
  std::uint64_t g = std::gcd(a.radicand_, b.radicand_);
  Surd out;
  out.coef_ = a.coef_ * b.coef_ * Rational(Integer(static_cast<std::int64_t>(g)));
  out.radicand_ = checked_mul(a.radicand_ / g, b.radicand_ / g);
  return out;
}

std::string to_string(const Surd& s) {
  if (s.radicand() == 1) return to_string(s.coef());
  return to_string(s.coef()) + "*sqrt(" + std::to_string(s.radicand()) + ")";
}

Surd parse_surd(std::string_view text) {
  std::string t = trim(text);
  auto star = t.find("*sqrt(");
  if (star == std::string::npos) {
    if (t.rfind("sqrt(", 0) == 0 && t.back() == ')') {
      return Surd(Rational(1), static_cast<std::uint64_t>(parse_int(t.substr(5, t.size() - 6))));
    }
    return Surd(parse_rational(t));
  }
  if (t.back() != ')') throw std::invalid_argument("malformed surd '" + t + "'");
  Rational coef = parse_rational(std::string_view(t).substr(0, star));
  std::int64_t r = parse_int(std::string_view(t).substr(star + 6, t.size() - star - 7));
  if (r <= 0) throw std::invalid_argument("nonpositive radicand in '" + t + "'");
  return Surd(coef, static_cast<std::uint64_t>(r));
}

// ---------------------------------------------------------------- SurdSum

SurdSum::SurdSum(const Rational& q) {
  if (q != 0) terms_.emplace_back(1, q);
}

SurdSum::SurdSum(const Surd& s) {
  if (!s.is_zero()) terms_.emplace_back(s.radicand(), s.coef());
}

bool SurdSum::is_rational() const {
  return terms_.empty() || (terms_.size() == 1 && terms_.front().first == 1);
}

Rational SurdSum::rational_part() const {
  if (!terms_.empty() && terms_.front().first == 1) return terms_.front().second;
  return Rational(0);
}

SurdSum& SurdSum::operator+=(const Surd& s) {
  if (s.is_zero()) return *this;
  auto it = std::lower_bound(terms_.begin(), terms_.end(), s.radicand(),
                             [](const auto& t, std::uint64_t r) { return t.first < r; });
  if (it != terms_.end() && it->first == s.radicand()) {
    it->second += s.coef();
    if (it->second == 0) terms_.erase(it);
  } else {
    terms_.insert(it, {s.radicand(), s.coef()});
  }
  return *this;
}

SurdSum& SurdSum::operator+=(const SurdSum& other) {
  for (const auto& [r, c] : other.terms_) {
    auto it = std::lower_bound(terms_.begin(), terms_.end(), r,
                               [](const auto& t, std::uint64_t v) { return t.first < v; });
    if (it != terms_.end() && it->first == r) {
      it->second += c;
      if (it->second == 0) terms_.erase(it);
    } else {
      terms_.insert(it, {r, c});
    }
  }
  return *this;
}

SurdSum SurdSum::operator-() const {
  SurdSum out = *this;
  for (auto& t : out.terms_) t.second = -t.second;
  return out;
}

SurdSum& SurdSum::operator-=(const SurdSum& other) { return *this += -other; }

SurdSum operator*(const SurdSum& a, const SurdSum& b) {
  SurdSum out;
  for (const auto& [ra, ca] : a.terms_) {
    for (const auto& [rb, cb] : b.terms_) {
      out += Surd(ca, ra) * Surd(cb, rb);
    }
  }
  return out;
}

namespace {

int sign_of_terms(const std::vector<std::pair<std::uint64_t, Rational>>& terms) {
  if (terms.empty()) return 0;
  if (terms.size() == 1) return sign(terms.front().second);
  // floating filter: rounding error is below 8n ulp of the magnitude sum,
  // far under the 1e-12 relative cutoff, so a clear sign is exact
  double value = 0;
  double magnitude = 0;
  for (const auto& [r, c] : terms) {
    double t = to_double(c) * std::sqrt(static_cast<double>(r));
    value += t;
    magnitude += std::fabs(t);
  }
  if (std::fabs(value) > 1e-12 * magnitude) return value > 0 ? 1 : -1;
  std::uint64_t p = 0;
  for (const auto& t : terms) {
    for (auto f : prime_factors(t.first)) p = std::max(p, f);
  }
  // x = A + B*sqrt(p), where neither A nor B involves sqrt(p)
  SurdSum a;
  SurdSum b;
  for (const auto& [r, c] : terms) {
    if (r % p == 0) {
      b += Surd(c, r / p);
    } else {
      a += Surd(c, r);
    }
  }
  int sa = a.sign();
  int sb = b.sign();
  if (sb == 0) return sa;
  if (sa == 0 || sa == sb) return sb;
  SurdSum diff = a * a - b * b * SurdSum(Rational(Integer(static_cast<std::int64_t>(p))));
  return sa * diff.sign();
}

}  // namespace

int SurdSum::sign() const { return sign_of_terms(terms_); }

SurdSum SurdSum::abs() const { return sign() < 0 ? -*this : *this; }

double SurdSum::approx() const {
  double v = 0;
  for (const auto& [r, c] : terms_) v += to_double(c) * std::sqrt(static_cast<double>(r));
  return v;
}

Rational SurdSum::upper_bound(int digits) const {
  if (is_rational()) return rational_part();
  std::int64_t scale = 1;
  for (int i = 0; i < digits; ++i) scale *= 10;
  Rational unit(Integer(1), Integer(scale));
  auto k = static_cast<std::int64_t>(std::ceil(approx() * static_cast<double>(scale)));
  Rational q = Rational(Integer(k)) * unit;
  while (compare(SurdSum(q), *this) < 0) q += unit;
  while (compare(SurdSum(q - unit), *this) >= 0) q -= unit;
  return q;
}

int compare(const SurdSum& a, const SurdSum& b) {
  if (a == b) return 0;
  return (a - b).sign();
}

std::string to_string(const SurdSum& s) {
  if (s.is_zero()) return "0";
  std::string out;
  for (const auto& [r, c] : s.terms()) {
    std::string term = to_string(Surd(c, r));
    if (!out.empty()) {
      if (term.front() == '-') {
        out += " - " + term.substr(1);
        continue;
      }
      out += " + ";
    }
    out += term;
  }
  return out;
}

}  // namespace coarse
