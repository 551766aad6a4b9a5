#include <doctest.h>

#include <set>

#include "coarse/combinators.hpp"
#include "coarse/errors.hpp"
#include "coarse/generators.hpp"
#include "coarse/verify.hpp"
#include "oracles.hpp"

using namespace coarse;

namespace {

/// Max |A_x sym-diff A_y| / |A_x| over window pairs with |x - y| <= R, for
/// A_x = [x - N, x + N], counted with std::set on the valid part of [-w, w].
Rational interval_ratio_oracle(int N, int w, int R) {
  std::int64_t best_num = 0, best_den = 1;
  for (int x = -(w - N); x <= w - N; ++x) {
    for (int y = x - R; y <= x + R; ++y) {
      if (y < -(w - N) || y > w - N) continue;
      auto a = oracle::box({x}, N);
      auto b = oracle::box({y}, N);
      std::int64_t num = static_cast<std::int64_t>(oracle::sym_diff(a, b));
      std::int64_t den = static_cast<std::int64_t>(a.size());
      if (num * best_den > best_num * den) {
        best_num = num;
        best_den = den;
      }
    }
  }
  return Rational(Integer{best_num}, Integer{best_den});
}

StrongEmbedCert uniform_on_discrete(int n) {
  std::vector<std::string> labels;
  std::vector<std::vector<Rational>> d(n, std::vector<Rational>(n, Rational(2)));
  for (int i = 0; i < n; ++i) {
    labels.push_back("p" + std::to_string(i));
    d[i][i] = Rational(0);
  }
  return uniform_strong(explicit_space(labels, d), Rational(1), {Rational(1)});
}

}  // namespace

TEST_CASE("Følner intervals on a Z window") {
  auto cert = folner_prop_a(1, 10, 50, Rational(2));
  cert.eps = Rational(1, 5);
  auto rep = verify(cert);
  CHECK(rep.pass());
  const auto* near = rep.find("near");
  REQUIRE(near);
  CHECK(*near->worst == SurdSum(interval_ratio_oracle(10, 50, 2)));
  CHECK(*near->worst == SurdSum(Rational(4, 21)));
  CHECK(*near->witness_distance == Rational(2));
}

TEST_CASE("constant sets on a finite group pass with ratio zero") {
  auto space = cyclic_space(6);
  PropASetCert cert;
  cert.space = space;
  cert.R = Rational(3);
  cert.eps = Rational(0);
  cert.S = Rational(3);
  std::vector<std::pair<Index, std::int64_t>> all;
  for (Index x = 0; x < space->size(); ++x) all.emplace_back(x, 1);
  cert.sets.assign(space->size(), all);
  auto rep = verify(cert);
  CHECK(rep.pass());
  CHECK(rep.find("near")->worst->is_zero());
  CHECK(rep.find("near")->equality());
}

TEST_CASE("short intervals fail with ratio 4/3 at distance 2") {
  auto cert = folner_prop_a(1, 1, 20, Rational(2));
  cert.eps = Rational(1, 5);
  auto rep = verify(cert);
  CHECK(!rep.pass());
  const auto* near = rep.find("near");
  CHECK(*near->worst == SurdSum(interval_ratio_oracle(1, 20, 2)));
  CHECK(*near->worst == SurdSum(Rational(4, 3)));
  CHECK(*near->witness_distance == Rational(2));
}

TEST_CASE("vector form of the Følner certificate") {
  auto v = sets_to_vector(folner_prop_a(1, 10, 50, Rational(2)));
  auto rep = verify(v);
  CHECK(rep.pass());
  auto zero = v.field.space->index("0");
  auto two = v.field.space->index("2");
  // |A_0 cap A_2| / sqrt(|A_0| |A_2|)
  auto a = oracle::box({0}, 10), b = oracle::box({2}, 10);
  auto expected = Rational(static_cast<std::int64_t>(oracle::intersection(a, b)), static_cast<std::int64_t>(a.size()));
  CHECK(inner(*v.field.at(zero), *v.field.at(two)) == SurdSum(expected));
  CHECK(expected == Rational(19, 21));
  CHECK(v.near.eps == Rational(2, 21));
  CHECK(v.S == Rational(21));
  auto far = v.field.space->index("21");
  CHECK(inner(*v.field.at(zero), *v.field.at(far)).is_zero());
}

TEST_CASE("point masses: orthogonal but never near") {
  auto space = group_ball_space(std::make_shared<const GroupBall>(lattice_group(1), 10));
  PropAVectorCert cert;
  cert.field = delta_field(space);
  cert.S = Rational(1);
  cert.near = {Rational(1), Rational(99, 100), NearForm::Inner};
  auto rep = verify(cert);
  CHECK(rep.find("orthogonality")->pass());
  CHECK(!rep.find("near")->pass());
  CHECK(*rep.find("near")->worst == SurdSum(Rational(1)));
  cert.near.eps = Rational(1);
  CHECK(verify(cert).pass());
}

TEST_CASE("single point space passes any parameters") {
  auto space = explicit_space({"p"}, {{Rational(0)}});
  PropAVectorCert cert;
  cert.field = delta_field(space);
  cert.near = {Rational(100), Rational(0), NearForm::Inner};
  cert.S = Rational(0);
  CHECK(verify(cert).pass());
  StrongEmbedCert s;
  s.field = cert.field;
  s.tails = {{Rational(0), Rational(0)}};
  CHECK(verify(s).pass());
}

TEST_CASE("uniform vector tails") {
  auto c = uniform_on_discrete(100);
  CHECK(c.tails.front().delta == Rational(99, 100));
  CHECK(verify(c).pass());
  c.tails = {{Rational(1), Rational(1, 2)}};
  CHECK(!verify(c).pass());

  // Z/100 with generator 1: |B_1(x)| = 3
  auto z = uniform_strong(cyclic_space(100), Rational(1), {Rational(1)});
  const auto& X = *z.field.space;
  auto b1 = static_cast<std::int64_t>(X.ball(0, Rational(1)).size());
  CHECK(z.tails.front().delta == Rational(Integer{100 - b1}, Integer{100}));
  CHECK(z.tails.front().delta == Rational(97, 100));
}

TEST_CASE("norm tolerance 2 always passes for unit fields") {
  auto space = group_ball_space(std::make_shared<const GroupBall>(free_group(2), 3));
  StrongEmbedCert s;
  s.field = delta_field(space);
  s.near = {Rational(6), Rational(2), NearForm::Norm};
  s.tails = {{Rational(0), Rational(0)}};
  CHECK(verify(s).pass());
}

TEST_CASE("inner and norm phrasings agree under eps <-> eps^2 / 2") {
  auto v = sets_to_vector(folner_prop_a(1, 6, 30, Rational(3)));
  for (auto eps : {Rational(1, 2), Rational(1, 3), Rational(2, 5), Rational(1, 5), Rational(3, 5)}) {
    StrongEmbedCert norm;
    norm.field = v.field;
    norm.margin = v.margin;
    norm.tails = {{v.S, Rational(0)}};
    norm.near = {Rational(3), eps, NearForm::Norm};
    PropAVectorCert inner_form = v;
    inner_form.near = {Rational(3), eps * eps / Rational(2), NearForm::Inner};
    auto rn = verify(norm);
    auto ri = verify(inner_form);
    CHECK(rn.find("near")->pass() == ri.find("near")->pass());
    CHECK(*rn.find("near")->worst == *ri.find("near")->worst + *ri.find("near")->worst);
    CHECK(inner_equivalent(norm.near) == inner_form.near.eps);
  }
}

TEST_CASE("verifiers are monotone in their tolerances") {
  std::vector<PropASetCert> certs{folner_prop_a(1, 3, 20, Rational(2)), folner_prop_a(2, 2, 8, Rational(1)),
                                  tree_ray_prop_a(2, 4, 6, Rational(1))};
  for (auto& c : certs) {
    for (auto eps : {Rational(1, 10), Rational(1, 4), Rational(1, 2)}) {
      c.eps = eps;
      bool at = verify(c).pass();
      c.eps = eps + eps;
      if (at) CHECK(verify(c).pass());
    }
    auto v = sets_to_vector(c);
    auto s = prop_a_to_strong(v);
    auto tight = s;
    tight.near.eps = s.near.eps / Rational(2);
    if (verify(tight).pass()) CHECK(verify(s).pass());
    CHECK(verify(s).pass());
    auto loose = s;
    loose.near.eps = s.near.eps + s.near.eps;
    loose.tails.front().delta = Rational(1, 10);
    CHECK(verify(loose).pass());
  }
}

TEST_CASE("reported witnesses reproduce the reported worst value") {
  auto v = sets_to_vector(folner_prop_a(2, 3, 12, Rational(2)));
  auto rep = verify(v);
  const auto* near = rep.find("near");
  REQUIRE(near->witness.size() == 2);
  const auto& X = *v.field.space;
  auto x = X.index(near->witness[0]);
  auto y = X.index(near->witness[1]);
  auto value = SurdSum(Rational(1)) - inner(*v.field.at(x), *v.field.at(y));
  CHECK(value.abs() == *near->worst);
  CHECK(X.dist(x, y) == *near->witness_distance);
  CHECK(compare(*near->slack(), SurdSum(Rational(0))) >= 0);
}

TEST_CASE("points below the margin are skipped, not failed") {
  auto v = sets_to_vector(folner_prop_a(1, 4, 10, Rational(1)));
  auto rep = verify(v);
  CHECK(rep.find("coverage")->checked == v.field.space->count_valid(v.margin));
  CHECK(rep.pass());
  auto missing = v;
  missing.field.vectors[missing.field.space->index("0")].reset();
  CHECK(!verify(missing).pass());
}

TEST_CASE("malformed strong certificates are rejected") {
  auto space = group_ball_space(std::make_shared<const GroupBall>(lattice_group(1), 5));
  StrongEmbedCert s;
  s.field = delta_field(space);
  s.tails = {{Rational(1), Rational(0)}, {Rational(2), Rational(1, 2)}};
  CHECK_THROWS_AS(verify(s), MalformedCertificate);
  s.tails = {{Rational(0), Rational(0)}};
  std::vector<std::string> labels(space->labels());
  s.field.universe = std::make_shared<Universe>("bare", labels);
  for (Index x = 0; x < space->size(); ++x) {
    s.field.vectors[x] = SparseVector(s.field.universe, {{x, Surd(Rational(1))}});
  }
  CHECK_THROWS_AS(verify(s), DomainError);
}

TEST_CASE("two-prime lemma on the uniform and point-mass fields") {
  auto u = uniform_on_discrete(100);
  auto tp = verify_two_prime(u, Rational(1));
  // on the diagonal the mixed tail is the single tail, 99/100; off it the
  // balls B_1(x), B_1(y) are disjoint and every product 1/100 counts
  CHECK(tp.tail_sup == Rational(99, 100));
  CHECK(tp.diagonal_equal);
  CHECK(tp.mixed_sup == SurdSum(Rational(100, 100)));
  CHECK(tp.pair_sum_form);

  auto two = explicit_space({"a", "b"}, {{Rational(0), Rational(1)}, {Rational(1), Rational(0)}});
  StrongEmbedCert d;
  d.field = delta_field(two);
  d.tails = {{Rational(0), Rational(0)}};
  auto td = verify_two_prime(d, Rational(0));
  CHECK(td.mixed_sup.is_zero());
  CHECK(td.pair_sum_form);
}
