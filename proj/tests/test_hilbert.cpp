#include <doctest.h>

#include <cmath>
#include <random>

#include "coarse/errors.hpp"
#include "coarse/hilbert.hpp"

using namespace coarse;

namespace {

UniversePtr labels(int n) {
  std::vector<std::string> l;
  for (int i = 0; i < n; ++i) l.push_back("u" + std::to_string(i));
  return std::make_shared<Universe>("test", l);
}

/// Random vector with surd coefficients (sqrt of small rationals, random sign).
SparseVector random_vector(const UniversePtr& u, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, static_cast<int>(u->size()) - 1);
  std::uniform_int_distribution<int> num(1, 9), den(1, 6), flip(0, 1);
  std::vector<std::pair<Index, Surd>> e;
  std::vector<bool> used(u->size(), false);
  int n = 1 + pick(rng) % 5;
  for (int i = 0; i < n; ++i) {
    auto k = static_cast<Index>(pick(rng));
    if (used[k]) continue;
    used[k] = true;
    auto s = Surd::sqrt_of(Rational(num(rng), den(rng)));
    e.emplace_back(k, flip(rng) ? -s : s);
  }
  return SparseVector(u, e);
}

}  // namespace

TEST_CASE("inner products of point masses and uniform vectors") {
  auto u = labels(6);
  SparseVector a(u, {{0, Surd(Rational(1))}});
  SparseVector b(u, {{3, Surd(Rational(1))}});
  CHECK(inner(a, a) == SurdSum(Rational(1)));
  CHECK(inner(a, b).is_zero());
  auto w = normalized_indicator(u, {1, 2, 4, 5});
  CHECK(inner(w, w) == SurdSum(Rational(1)));
  CHECK(w.norm_sq() == Rational(1));
  CHECK(dist_sq(a, a).is_zero());
  CHECK(dist_sq(a, b) == SurdSum(Rational(2)));
  CHECK(dist_norm(a, b) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("unit vectors at inner product 19/21 are 4/21 apart in squared norm") {
  auto u = labels(23);
  std::vector<Index> A, B;
  for (Index i = 0; i < 21; ++i) A.push_back(i);
  for (Index i = 2; i < 23; ++i) B.push_back(i);
  auto x = normalized_indicator(u, A);
  auto y = normalized_indicator(u, B);
  CHECK(inner(x, y) == SurdSum(Rational(19, 21)));
  CHECK(dist_sq(x, y) == SurdSum(Rational(4, 21)));
}

TEST_CASE("tail mass and mixed tails") {
  auto u = labels(4);
  auto w = normalized_indicator(u, {0, 1, 2, 3});
  CHECK(tail_mass(w, [](Index) { return true; }) == Rational(0));
  CHECK(tail_mass(w, [](Index) { return false; }) == Rational(1));
  CHECK(tail_mass(w, [](Index k) { return k < 2; }) == Rational(1, 2));
  auto allowed = [](Index k) { return k == 0; };
  CHECK(mixed_tail(w, w, allowed) == SurdSum(tail_mass(w, allowed)));
  CHECK(mixed_tail(w, w, allowed) == SurdSum(Rational(3, 4)));
  SparseVector a(u, {{0, Surd(Rational(1))}});
  SparseVector b(u, {{1, Surd(Rational(1))}});
  CHECK(mixed_tail(a, b, [](Index) { return false; }).is_zero());
}

TEST_CASE("polarization and Cauchy-Schwarz on random vectors") {
  auto u = labels(12);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 300; ++t) {
    auto x = random_vector(u, rng);
    auto y = random_vector(u, rng);
    auto ip = inner(x, y);
    CHECK(dist_sq(x, y) == SurdSum(x.norm_sq()) - ip - ip + SurdSum(y.norm_sq()));
    // |<x, y>|^2 <= |x|^2 |y|^2
    CHECK(compare(ip * ip, SurdSum(x.norm_sq() * y.norm_sq())) <= 0);
    CHECK(inner(x, y) == inner(y, x));
  }
}

TEST_CASE("mixed tail is bounded by the two single tails for unit vectors") {
  auto u = labels(10);
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> bit(0, 1);
  for (int t = 0; t < 200; ++t) {
    auto x = random_vector(u, rng);
    auto y = random_vector(u, rng);
    std::vector<Index> xs(x.indices()), ys(y.indices());
    auto ux = normalized_indicator(u, xs);
    auto uy = normalized_indicator(u, ys);
    std::vector<bool> A(10), B(10);
    for (int k = 0; k < 10; ++k) {
      A[k] = bit(rng);
      B[k] = bit(rng);
    }
    auto in_a = [&](Index k) { return static_cast<bool>(A[k]); };
    auto in_b = [&](Index k) { return static_cast<bool>(B[k]); };
    auto in_both = [&](Index k) { return A[k] && B[k]; };
    auto m = mixed_tail(ux, uy, in_both);
    auto bound = SurdSum(Surd::sqrt_of(tail_mass(ux, in_a))) + SurdSum(Surd::sqrt_of(tail_mass(uy, in_b)));
    CHECK(compare(m, bound) <= 0);
  }
}

TEST_CASE("vectors refuse mismatched universes and duplicate indices") {
  auto u = labels(3);
  auto v = std::make_shared<Universe>("other", u->labels());
  SparseVector a(u, {{0, Surd(Rational(1))}});
  SparseVector b(v, {{0, Surd(Rational(1))}});
  CHECK_THROWS_AS(inner(a, b), DomainError);
  CHECK_THROWS(SparseVector(u, {{0, Surd(Rational(1))}, {0, Surd(Rational(1))}}));
  CHECK_THROWS_AS(normalized_indicator(u, {}), DomainError);
}

TEST_CASE("vectors round-trip through JSON") {
  auto u = labels(5);
  auto w = normalized_indicator(u, {0, 2, 3});
  auto back = vector_from_json(vector_to_json(w), u);
  CHECK(inner(back, w) == SurdSum(Rational(1)));
  CHECK(back.indices() == w.indices());
}
