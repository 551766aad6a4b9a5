#include <doctest.h>

#include <cstdlib>

#include "coarse/action.hpp"
#include "coarse/errors.hpp"
#include "coarse/family.hpp"
#include "coarse/generators.hpp"
#include "coarse/verify.hpp"

using namespace coarse;

namespace {

SpacePtr window(const GroupPtr& g, int radius) {
  return group_ball_space(std::make_shared<const GroupBall>(g, radius));
}

GroupAction index_two(int group_radius, int space_radius) {
  return affine_action(window(lattice_group(1), group_radius), window(lattice_group(1), space_radius), {{2}});
}

std::int64_t ceil_half(std::int64_t m) { return (m + 1) / 2; }

}  // namespace

TEST_CASE("orbits") {
  SUBCASE("translation of Z is transitive") {
    auto a = left_translation(window(lattice_group(1), 30));
    CHECK_FALSE(check_action(a, 1));
    auto o = orbit_decomposition(a);
    CHECK(o.representatives.size() == 1);
    CHECK(o.stabilizer_members[0].size() == 1);
  }
  SUBCASE("doubling splits Z into evens and odds") {
    auto a = index_two(20, 40);
    CHECK_FALSE(check_action(a, 1));
    auto o = orbit_decomposition(a);
    REQUIRE(o.representatives.size() == 2);
    std::size_t evens = 0;
    auto parity = [&](Index x) { return std::abs(std::stoll(a.space()->label(x))) % 2; };
    for (Index x = 0; x < a.space()->size(); ++x) {
      if (parity(x) == 0) ++evens;
      bool same = o.orbit_of[x] == o.orbit_of[0];
      CHECK(same == (parity(x) == parity(0)));
    }
    CHECK(evens == 41);
  }
  SUBCASE("finite group acting on itself") {
    auto a = left_translation(window(cyclic_group(6), 3));
    auto o = orbit_decomposition(a);
    CHECK(o.representatives.size() == 1);
    CHECK(o.stabilizer_members[0].size() == 1);
  }
}

TEST_CASE("T_k for translation") {
  auto a = left_translation(window(lattice_group(1), 40));
  auto o = orbit_decomposition(a);
  auto tk = compute_tk(a, o);
  CHECK_FALSE(tk.inclusion_violation);
  REQUIRE(tk.m_max > 0);
  for (std::int64_t m = 0; m <= tk.m_max; ++m) CHECK(tk.N[m] == m);
  for (std::size_t k = 0; k < tk.T.size(); ++k) CHECK(tk.T[k] == static_cast<std::int64_t>(k));
}

TEST_CASE("T_k for the index-two action") {
  auto a = index_two(20, 40);
  auto o = orbit_decomposition(a);
  auto tk = compute_tk(a, o);
  CHECK_FALSE(tk.inclusion_violation);
  CHECK(tk.inclusion_checks > 0);
  for (std::int64_t m = 0; m <= tk.m_max; ++m) CHECK(tk.N[m] == ceil_half(m));
  for (std::size_t k = 0; k < tk.T.size(); ++k) {
    if (2 * static_cast<std::int64_t>(k) + 1 <= tk.m_max) CHECK(tk.T[k] == 2 * static_cast<std::int64_t>(k));
  }
}

TEST_CASE("N_m grows with the window for infinite orbits") {
  std::int64_t last = -1;
  for (int r : {10, 20, 40}) {
    auto a = index_two(r, 2 * r);
    auto o = orbit_decomposition(a);
    auto tk = compute_tk(a, o, false);
    CHECK(tk.N[tk.m_max] > last);
    last = tk.N[tk.m_max];
  }
}

TEST_CASE("T_k is eventually constant for a finite transitive action") {
  auto a = left_translation(window(cyclic_group(7), 3));
  auto o = orbit_decomposition(a);
  auto tk = compute_tk(a, o);
  CHECK_FALSE(tk.inclusion_violation);
  CHECK(tk.N.back() == 3);
  CHECK(tk.T.back() == tk.m_max);
}

TEST_CASE("displacement constant") {
  SUBCASE("left translation") {
    auto a = left_translation(window(lattice_group(2), 8));
    auto o = orbit_decomposition(a);
    CHECK(displacement_constant(a, o) == 1);
  }
  SUBCASE("index two") {
    auto a = index_two(20, 40);
    auto o = orbit_decomposition(a);
    CHECK(displacement_constant(a, o) == 2);
    auto ratio = displacement_ratio_exhaustive(a, o);
    CHECK(ratio <= Rational(2));
    CHECK(ratio > Rational(1));
  }
  SUBCASE("trivial action on a finite space") {
    auto gs = window(lattice_group(1), 5);
    auto X = cyclic_space(5);
    GroupAction a(gs, X, [](const Element&, Index x) { return std::optional<Index>(x); }, {{"preset", "trivial"}});
    auto o = orbit_decomposition(a);
    CHECK(o.representatives.size() == 5);
    CHECK(displacement_constant(a, o) == 2);
  }
}

TEST_CASE("finite quotient exact certificates") {
  auto ball = std::make_shared<const GroupBall>(lattice_group(1), 20);
  auto gs = group_ball_space(ball);
  auto two = finite_quotient_exact_cert(quotient_family(gs, {quotient_space(ball, multiples_subgroup(2))}));
  CHECK(two.S == Rational(1));
  CHECK(verify(two).pass());
  auto all = finite_quotient_exact_cert(quotient_family(gs, {quotient_space(ball, whole_group())}));
  CHECK(all.S == Rational(0));
  CHECK(verify(all).pass());
}

TEST_CASE("action family from Z^2 acting on Z by projection") {
  auto gs = window(lattice_group(2), 10);
  auto X = window(lattice_group(1), 40);
  auto a = affine_action(gs, X, {{1, 0}});
  CHECK_FALSE(check_action(a, 3));
  auto o = orbit_decomposition(a);
  REQUIRE(o.representatives.size() == 1);
  auto tk = compute_tk(a, o);
  CHECK_FALSE(tk.inclusion_violation);
  auto C = displacement_constant(a, o);
  CHECK(C == 1);

  auto base = prop_a_to_strong(sets_to_vector(folner_balls(X, Rational(5), Rational(3))));
  NearBound target{Rational(2), Rational(1, 2), NearForm::Inner};
  auto fam = action_to_se_family(a, o, tk, base, target);
  CHECK(verify(fam).pass());

  // d_G(g, g') <= R forces d_X(g x_1, g' x_1) <= C (R + 1)
  const auto& ball = a.ball();
  auto x1 = o.representatives[0];
  for (Index g = 0; g < ball.size(); ++g) {
    for (Index h = 0; h < ball.size(); ++h) {
      if (gs->dist(g, h) > target.R) continue;
      auto gx = a.act(g, x1), hx = a.act(h, x1);
      REQUIRE(gx);
      REQUIRE(hx);
      const auto& eg = ball.element(g);
      const auto& eh = ball.element(h);
      CHECK(Rational(std::abs(eg[0] - eh[0])) == X->dist(*gx, *hx));
      CHECK(X->dist(*gx, *hx) <= Rational(C) * (target.R + Rational(1)));
    }
  }

  NearBound too_wide{Rational(6), Rational(1, 2), NearForm::Inner};
  CHECK_THROWS_AS(action_to_se_family(a, o, tk, base, too_wide), ParameterMismatch);
}

TEST_CASE("coset transport preserves slack") {
  auto ball = std::make_shared<const GroupBall>(lattice_group(2), 20);
  auto gs = group_ball_space(ball);
  auto H = coordinate_subgroup({1});
  auto fam = quotient_family(gs, {quotient_space(ball, H)});
  auto base = sets_to_vector(folner_balls(subgroup_space(gs, H), Rational(4), Rational(2)));
  auto base_rep = verify(base);
  auto fibers = transport_coset_certs(fam, 0, base);
  auto rep = verify(fibers);
  CHECK(rep.pass());
  REQUIRE(rep.find("near"));
  REQUIRE(base_rep.find("near"));
  CHECK(compare(*rep.find("near")->worst, *base_rep.find("near")->worst) == 0);
}

TEST_CASE("extension pipeline degenerate subgroups") {
  auto ball = std::make_shared<const GroupBall>(lattice_group(2), 12);
  auto gs = group_ball_space(ball);
  CombineTargets targets{Rational(2), Rational(1, 2), Rational(1), Negotiation::Analytic};

  SUBCASE("H = G") {
    auto H = whole_group();
    auto q = quotient_space(ball, H);
    auto qcert = uniform_strong(q.space, Rational(2), {Rational(0)});
    auto hcert = prop_a_to_strong(sets_to_vector(folner_balls(subgroup_space(gs, H), Rational(4), Rational(2))));
    auto res = extension_pipeline(gs, H, q, qcert, hcert, targets);
    CHECK(res.path == "subgroup");
    CHECK(verify(res.cert).pass());
  }
  SUBCASE("H trivial") {
    auto H = trivial_subgroup();
    auto q = quotient_space(ball, H);
    auto hs = subgroup_space(gs, H);
    auto qcert = prop_a_to_strong(sets_to_vector(folner_balls(q.space, Rational(4), Rational(2))));
    auto hcert = uniform_strong(hs, Rational(2), {Rational(0)});
    auto res = extension_pipeline(gs, H, q, qcert, hcert, targets);
    CHECK(res.path == "quotient");
    CHECK(verify(res.cert).pass());
  }
}
