#include <doctest.h>

#include <set>

#include "coarse/combinators.hpp"
#include "coarse/errors.hpp"
#include "coarse/generators.hpp"
#include "coarse/verify.hpp"
#include "oracles.hpp"

using namespace coarse;

TEST_CASE("Følner boxes in Z^2") {
  auto c = folner_prop_a(2, 5, 12, Rational(1));
  // neighbouring boxes differ by two 11-point columns out of 121
  std::size_t worst = 0;
  auto a = oracle::box({0, 0}, 5);
  for (std::vector<std::int64_t> y : {std::vector<std::int64_t>{1, 0}, {0, 1}, {-1, 0}, {0, -1}}) {
    worst = std::max(worst, oracle::sym_diff(a, oracle::box(y, 5)));
  }
  CHECK(c.eps == Rational(static_cast<std::int64_t>(worst), static_cast<std::int64_t>(a.size())));
  CHECK(c.eps == Rational(22, 121));
  CHECK(c.S == Rational(10));
  CHECK(verify(c).pass());
}

TEST_CASE("Følner boxes at R = 0 have ratio zero") {
  CHECK(folner_prop_a(1, 10, 20, Rational(0)).eps == Rational(0));
  CHECK(folner_prop_a(1, 10, 30, Rational(2)).eps == Rational(4, 21));
}

TEST_CASE("Følner measured epsilon shrinks as N grows") {
  Rational prev(3);
  for (int N : {2, 5, 10, 20}) {
    auto c = folner_prop_a(1, N, N + 6, Rational(2));
    CHECK(c.eps <= prev);
    CHECK(c.eps == Rational(4, 2 * N + 1));
    prev = c.eps;
  }
}

TEST_CASE("Følner generator refuses small windows") {
  CHECK_THROWS_AS(folner_prop_a(2, 5, 9, Rational(1)), TruncationError);
  Caps caps;
  caps.max_radius = 20;
  CHECK_THROWS_AS(folner_prop_a(1, 5, 30, Rational(1), caps), ResourceError);
}

TEST_CASE("tree rays head toward a^inf") {
  auto model = free_group(2);
  auto ray = tree_ray(model->identity(), 3);
  std::vector<std::string> got;
  for (const auto& g : ray) got.push_back(model->format(g));
  CHECK(got == std::vector<std::string>{"e", "a", "aa"});
  auto from_b = tree_ray(model->parse("ab"), 4);
  got.clear();
  for (const auto& g : from_b) got.push_back(model->format(g));
  CHECK(got == std::vector<std::string>{"ab", "a", "aa", "aaa"});
}

TEST_CASE("rays from points on the same ray overlap in N - d vertices") {
  auto model = free_group(2);
  const int N = 6;
  for (int d = 0; d <= N; ++d) {
    Element g(d, 1);
    auto ra = tree_ray(model->identity(), N);
    auto rb = tree_ray(g, N);
    std::set<Element> a(ra.begin(), ra.end()), b(rb.begin(), rb.end());
    CHECK(oracle::sym_diff(a, b) == static_cast<std::size_t>(2 * d));
  }
}

TEST_CASE("tree ray ratio is at most 2R/N") {
  for (int N : {4, 6, 8}) {
    auto c = tree_ray_prop_a(2, N, N + 1, Rational(1));
    CHECK(c.eps <= Rational(2, N));
    CHECK(verify(c).pass());
  }
}

TEST_CASE("every generator passes its own verifier") {
  std::vector<PropASetCert> sets{folner_prop_a(1, 4, 12, Rational(2)), folner_prop_a(2, 3, 8, Rational(1)),
                                 tree_ray_prop_a(2, 5, 6, Rational(1)), tree_ray_prop_a(3, 3, 3, Rational(1))};
  auto z2 = group_ball_space(std::make_shared<const GroupBall>(lattice_group(2), 8));
  sets.push_back(folner_balls(z2, Rational(3), Rational(1)));
  for (const auto& c : sets) {
    CHECK(verify(c).pass());
    auto v = sets_to_vector(c);
    CHECK(verify(v).pass());
  }
  CHECK(verify(uniform_strong(cyclic_space(12), Rational(2), {Rational(1), Rational(3)})).pass());

  auto ball = std::make_shared<const GroupBall>(lattice_group(2), 10);
  auto fam = quotient_family(group_ball_space(ball), {quotient_space(ball, coordinate_subgroup({1}))});
  auto fb = fiber_ball_family(fam, Rational(3), Rational(1));
  CHECK(verify(fb).pass());
  // shifting by one drops one of the 2N + 1 nearby fibers
  CHECK(fb.near.eps == Rational(1, 2 * 3 + 1));
}

TEST_CASE("point masses") {
  auto space = group_ball_space(std::make_shared<const GroupBall>(lattice_group(1), 4));
  auto f = delta_field(space);
  for (Index x = 0; x < space->size(); ++x) {
    CHECK(tail_mass(*f.at(x), [&](Index k) { return f.universe->location(k) == x; }) == Rational(0));
    for (Index y = 0; y < space->size(); ++y) {
      if (x == y) continue;
      CHECK(inner(*f.at(x), *f.at(y)).is_zero());
      CHECK(dist_sq(*f.at(x), *f.at(y)) == SurdSum(Rational(2)));
    }
  }
}

TEST_CASE("uniform certificates need complete spaces") {
  auto window = group_ball_space(std::make_shared<const GroupBall>(lattice_group(1), 4));
  CHECK_THROWS_AS(uniform_strong(window, Rational(1), {Rational(1)}), DomainError);
  auto q = group_ball_space(std::make_shared<const GroupBall>(lattice_group(1), 4));
  CHECK_THROWS_AS(folner_balls(q, Rational(5), Rational(1)), TruncationError);
}
