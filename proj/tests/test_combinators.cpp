#include <doctest.h>

#include "coarse/action.hpp"
#include "coarse/combinators.hpp"
#include "coarse/errors.hpp"
#include "coarse/generators.hpp"
#include "coarse/verify.hpp"

using namespace coarse;

namespace {

/// Each fiber of a family is a single point carrying the unit vector 1.
EquiFamilyCert singleton_fibers(const FamilyPtr& family, EquiFlavor flavor) {
  const auto& X = family->domain();
  std::vector<std::string> labels;
  std::vector<Index> loc;
  for (Index y = 0; y < family->universe_size(); ++y) {
    labels.push_back(family->universe_labels()[y] + "|*");
    loc.push_back(family->fiber(y).front());
  }
  EquiFamilyCert out;
  out.family = family;
  out.flavor = flavor;
  out.near = {Rational(1000), Rational(0), NearForm::Inner};
  out.universe = std::make_shared<Universe>("single", labels, loc);
  if (flavor != EquiFlavor::Exact) out.profile = {{Rational(0), Rational(0)}};
  for (Index y = 0; y < family->universe_size(); ++y) {
    REQUIRE(family->fiber(y).size() == 1);
    PieceField p;
    p.y = y;
    p.vectors = {SparseVector(out.universe, {{y, Surd(Rational(1))}})};
    out.pieces.push_back(p);
  }
  (void)X;
  return out;
}

struct LineSetup {
  SpacePtr space;
  FamilyPtr family;
  SpacePtr line;
};

/// Z^2 window, projection to the first coordinate, fibers = vertical lines.
LineSetup lines(int radius) {
  auto ball = std::make_shared<const GroupBall>(lattice_group(2), radius);
  auto gs = group_ball_space(ball);
  auto H = coordinate_subgroup({1});
  return {gs, quotient_family(gs, {quotient_space(ball, H)}), subgroup_space(gs, H)};
}

}  // namespace

TEST_CASE("identical sets give zero near tolerance") {
  auto space = cyclic_space(5);
  PropASetCert c;
  c.space = space;
  c.R = Rational(2);
  c.S = Rational(2);
  std::vector<std::pair<Index, std::int64_t>> all;
  for (Index x = 0; x < 5; ++x) all.emplace_back(x, 1);
  c.sets.assign(5, all);
  auto v = sets_to_vector(c);
  CHECK(v.near.eps == Rational(0));
  CHECK(verify(v).pass());
}

TEST_CASE("property A vectors are strong certificates with a zero tail") {
  auto v = sets_to_vector(folner_prop_a(1, 10, 40, Rational(2)));
  auto s = prop_a_to_strong(v);
  REQUIRE(s.tails.size() == 1);
  CHECK(s.tails[0].S == Rational(10));
  CHECK(s.tails[0].delta == Rational(0));
  CHECK(verify(s).pass());

  auto point = explicit_space({"p"}, {{Rational(0)}});
  PropAVectorCert one;
  one.field = delta_field(point);
  auto sp = prop_a_to_strong(one);
  CHECK(sp.tails[0].S == Rational(0));
  CHECK(sp.tails[0].delta == Rational(0));
}

TEST_CASE("strong to coarse decay entries") {
  auto s = prop_a_to_strong(sets_to_vector(folner_prop_a(1, 3, 20, Rational(1))));
  auto c = strong_to_coarse(s);
  REQUIRE(c.decay.size() == 1);
  CHECK(c.decay[0].S == Rational(2 * 3 + 1));
  CHECK(c.decay[0].delta == Rational(0));
  CHECK(verify(c).pass());

  auto u = uniform_strong(cyclic_space(100), Rational(1), {Rational(1)});
  auto cu = strong_to_coarse(u);
  CHECK(cu.decay[0].S == Rational(3));
  CHECK(cu.decay[0].delta == Rational(1));
  CHECK(verify(cu).pass());

  auto two = explicit_space({"a", "b"}, {{Rational(0), Rational(5)}, {Rational(5), Rational(0)}});
  StrongEmbedCert d;
  d.field = delta_field(two);
  d.tails = {{Rational(0), Rational(0)}};
  d.near = {Rational(0), Rational(0), NearForm::Norm};
  auto cd = strong_to_coarse(d);
  CHECK(cd.decay[0].delta == Rational(0));
  CHECK(inner(*d.field.at(0), *d.field.at(1)).is_zero());
}

TEST_CASE("identity family reinterpretation") {
  auto v = sets_to_vector(folner_prop_a(1, 4, 20, Rational(2)));
  auto e = as_identity_family(v);
  CHECK(verify(e).pass());
  CHECK(e.S == Rational(4));
  auto se = exact_to_se(e);
  CHECK(verify(se).pass());
  auto back = se_to_exact(se);
  REQUIRE(back);
  CHECK(verify(*back).pass());
}

TEST_CASE("combine_exact on Z^2 lines") {
  auto L = lines(26);
  auto outer = fiber_ball_family(L.family, Rational(2), Rational(2));
  CHECK(outer.near.eps == Rational(2, 5));
  auto base = sets_to_vector(folner_balls(L.line, Rational(6), Rational(6)));
  auto fibers = transport_coset_certs(L.family, 0, base);
  CHECK(verify(outer).pass());
  CHECK(verify(fibers).pass());

  CombineTargets t{Rational(2), Rational(1), Rational(1), Negotiation::Analytic};
  auto out = combine_exact(outer, fibers, t);
  auto rep = verify(out);
  CHECK(rep.pass());
  CHECK(rep.find("orthogonality")->worst->is_zero());
  CHECK(out.S <= outer.S + outer.S + fibers.S);
  CHECK(out.provenance["threshold"] == to_string(outer.S + outer.S + fibers.S));

  // unit norms are exact
  for (Index x = 0; x < out.field.vectors.size(); ++x) {
    if (out.field.at(x)) CHECK(out.field.at(x)->norm_sq() == Rational(1));
  }
  // worst output slack within the sum of the two measured input slacks
  SurdSum stage_sum;
  for (const auto& st : out.provenance["realized"]) stage_sum += SurdSum(parse_rational(st["value"].get<std::string>()));
  CHECK(compare(*rep.find("near")->worst, stage_sum) <= 0);

  // property A => strong => coarse without loss
  auto strong = prop_a_to_strong(out);
  CHECK(verify(strong).pass());
  CHECK(verify(strong_to_coarse(strong)).pass());
}

TEST_CASE("combine_exact refuses targets its inputs cannot support") {
  auto L = lines(20);
  auto outer = fiber_ball_family(L.family, Rational(2), Rational(2));
  auto fibers = transport_coset_certs(L.family, 0, sets_to_vector(folner_balls(L.line, Rational(6), Rational(6))));
  CombineTargets tight{Rational(2), Rational(1, 10), Rational(1), Negotiation::Analytic};
  CHECK_THROWS_AS(combine_exact(outer, fibers, tight), ParameterMismatch);
  CombineTargets wide{Rational(5), Rational(1), Rational(1), Negotiation::Analytic};
  CHECK_THROWS_AS(combine_exact(outer, fibers, wide), ParameterMismatch);
}

TEST_CASE("singleton fibers reproduce the outer field") {
  auto v = sets_to_vector(folner_prop_a(1, 3, 20, Rational(2)));
  auto outer = as_identity_family(v);
  auto fibers = singleton_fibers(outer.family, EquiFlavor::Exact);
  CHECK(verify(fibers).pass());
  auto out = combine_exact(outer, fibers, {Rational(2), Rational(1), Rational(1), Negotiation::Analytic});
  const auto& X = *v.field.space;
  for (Index x = 0; x < X.size(); ++x) {
    if (!out.field.at(x)) continue;
    for (Index y = 0; y < X.size(); ++y) {
      if (!out.field.at(y) || !outer.field.at(x) || !outer.field.at(y)) continue;
      CHECK(inner(*out.field.at(x), *out.field.at(y)) == inner(*outer.field.at(x), *outer.field.at(y)));
    }
  }
  CHECK(out.S == Rational(2 * 3 + 1));
  CHECK(verify(out).pass());
}

TEST_CASE("combine_se_coarse reports each stage of the split") {
  auto L = lines(34);
  auto outer = exact_to_se(fiber_ball_family(L.family, Rational(6), Rational(2)));
  auto base = strong_to_coarse(prop_a_to_strong(sets_to_vector(folner_balls(L.line, Rational(6), Rational(14)))));
  auto fibers = transport_coset_certs(L.family, 0, base);
  CHECK(verify(fibers).pass());
  CombineTargets t{Rational(2), Rational(1), Rational(1, 10), Negotiation::Realized};
  auto out = combine_se_coarse(outer, fibers, t);
  auto rep = verify(out);
  CHECK(rep.pass());
  for (const auto& st : out.provenance["realized"]) CHECK(st["pass"] == true);
  bool saw_third = false;
  for (const auto& st : out.provenance["realized"]) {
    if (st["bound"] == to_string(t.eps / Rational(3))) saw_third = true;
  }
  CHECK(saw_third);
  CHECK(compare(*rep.find("near")->worst, SurdSum(t.eps)) <= 0);

  // delta = 1 makes the far condition vacuous
  CombineTargets vacuous{Rational(2), Rational(1), Rational(1), Negotiation::Realized};
  CHECK(verify(combine_se_coarse(outer, fibers, vacuous)).pass());
}

TEST_CASE("combine_se_strong on zero-tail inputs has a zero tail at the threshold") {
  auto L = lines(34);
  auto outer = exact_to_se(fiber_ball_family(L.family, Rational(6), Rational(2)));
  auto base = prop_a_to_strong(sets_to_vector(folner_balls(L.line, Rational(6), Rational(14))));
  auto fibers = transport_coset_certs(L.family, 0, base);
  CombineTargets t{Rational(2), Rational(1), Rational(1), Negotiation::Realized};
  auto out = combine_se_strong(outer, fibers, t);
  auto rep = verify(out);
  CHECK(rep.pass());
  bool zero_at_threshold = false;
  for (const auto& e : out.tails) {
    if (e.delta == 0 && e.S <= Rational(6 + 6 + 6)) zero_at_threshold = true;
  }
  CHECK(zero_at_threshold);
  for (Index x = 0; x < out.field.vectors.size(); ++x) {
    if (out.field.at(x)) CHECK(out.field.at(x)->norm_sq() == Rational(1));
  }
}

TEST_CASE("combine_se_strong with singleton fibers keeps the outer tails") {
  auto s = prop_a_to_strong(sets_to_vector(folner_prop_a(1, 3, 20, Rational(2))));
  auto outer = as_identity_family(s);
  auto fibers = singleton_fibers(outer.family, EquiFlavor::Strong);
  auto out = combine_se_strong(outer, fibers, {Rational(2), Rational(2), Rational(1), Negotiation::Realized});
  CHECK(verify(out).pass());
  REQUIRE(!out.tails.empty());
  CHECK(out.tails.front().delta == Rational(0));
  CHECK(out.tails.front().S <= s.tails.front().S);
}
