#include <doctest.h>

#include <set>

#include "coarse/errors.hpp"
#include "coarse/space.hpp"
#include "oracles.hpp"

using namespace coarse;

namespace {

SpacePtr ball_space(GroupPtr g, int r) { return group_ball_space(std::make_shared<const GroupBall>(g, r)); }

}  // namespace

TEST_CASE("ball sizes match independent enumeration") {
  CHECK(GroupBall(lattice_group(1), 5).size() == 11);
  CHECK(GroupBall(lattice_group(1), 5).length_of({3}) == 3);
  for (int r = 0; r <= 6; ++r) {
    CHECK(GroupBall(lattice_group(2), r).size() == oracle::l1_ball(2, r).size());
    CHECK(GroupBall(lattice_group(3), r).size() == oracle::l1_ball(3, r).size());
  }
  CHECK(GroupBall(lattice_group(2), 2).size() == 13);
  for (int r = 0; r <= 4; ++r) CHECK(GroupBall(free_group(2), r).size() == oracle::free_ball(2, r).size());
  CHECK(GroupBall(free_group(2), 3).size() == 53);
}

TEST_CASE("closed balls in windows") {
  auto z = ball_space(lattice_group(1), 50);
  auto zero = z->index("0");
  std::set<std::string> got;
  for (auto i : z->ball(zero, Rational(3))) got.insert(z->label(i));
  CHECK(got == std::set<std::string>{"-3", "-2", "-1", "0", "1", "2", "3"});
  CHECK(z->ball(zero, Rational(0)) == std::vector<Index>{zero});

  auto f = ball_space(free_group(2), 4);
  CHECK(f->ball(f->index(f->label(0)), Rational(2)).size() == 17);
}

TEST_CASE("validity radius is the distance to the window edge") {
  auto z = ball_space(lattice_group(1), 10);
  CHECK(*z->validity(z->index("0")) == Rational(10));
  CHECK(*z->validity(z->index("-7")) == Rational(3));
  CHECK(z->valid_at(z->index("4"), Rational(6)));
  CHECK(!z->valid_at(z->index("4"), Rational(7)));
  CHECK(z->count_valid(Rational(8)) == 5);
  auto c = ball_space(cyclic_group(7), 10);
  CHECK(c->size() == 7);
  CHECK(!c->validity(0).has_value());
}

TEST_CASE("word length is inversion invariant and balls agree with the metric") {
  for (auto g : {lattice_group(2), free_group(2), cyclic_group(9)}) {
    GroupBall b(g, 4);
    for (Index i = 0; i < b.size(); ++i) {
      CHECK(b.length_of(g->inverse(b.element(i))) == b.length(i));
    }
    auto s = ball_space(g, 4);
    for (Index x = 0; x < s->size(); ++x) {
      for (int r = 0; r <= 2; ++r) {
        Rational R(Integer{r});
        if (!s->valid_at(x, R)) continue;
        std::vector<Index> scan;
        for (Index y = 0; y < s->size(); ++y) {
          if (s->dist(x, y) <= R) scan.push_back(y);
        }
        CHECK(s->ball(x, R) == scan);
      }
    }
  }
}

TEST_CASE("metric axioms hold on constructed spaces") {
  for (auto g : {lattice_group(1), lattice_group(2), free_group(2), cyclic_group(12)}) {
    auto s = ball_space(g, 3);
    auto mc = check_metric(*s, 1);
    CHECK(!mc.violation);
    CHECK(mc.min_gap == Rational(1));
  }
  auto bad = explicit_space({"a", "b", "c"}, {{Rational(0), Rational(1), Rational(5)},
                                              {Rational(1), Rational(0), Rational(1)},
                                              {Rational(5), Rational(1), Rational(0)}});
  CHECK(check_metric(*bad, 1).violation.has_value());
}

TEST_CASE("random explicit path metrics pass the axiom check") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<int> w(1, 9);
    int n = 6;
    std::vector<int> pos{0};
    for (int i = 1; i < n; ++i) pos.push_back(pos.back() + w(rng));
    std::vector<std::string> labels;
    std::vector<std::vector<Rational>> d(n, std::vector<Rational>(n, Rational(0)));
    for (int i = 0; i < n; ++i) {
      labels.push_back("p" + std::to_string(i));
      for (int j = 0; j < n; ++j) d[i][j] = Rational(std::abs(pos[i] - pos[j]));
    }
    CHECK(!check_metric(*explicit_space(labels, d), 1).violation);
  }
}

TEST_CASE("quotient of Z by 2Z") {
  auto ball = std::make_shared<const GroupBall>(lattice_group(1), 10);
  auto q = quotient_space(ball, multiples_subgroup(2));
  REQUIRE(q.members.size() == 2);
  CHECK(q.space->dist(0, 1) == Rational(1));
  CHECK(q.normal);
  auto whole = quotient_space(ball, whole_group());
  CHECK(whole.members.size() == 1);
  CHECK(!whole.space->validity(0).has_value());
}

TEST_CASE("quotient of Z^2 by the second axis is the first coordinate line") {
  auto ball = std::make_shared<const GroupBall>(lattice_group(2), 8);
  auto q = quotient_space(ball, coordinate_subgroup({1}));
  CHECK(q.members.size() == 17);
  const auto& model = ball->model();
  for (Index a = 0; a < q.members.size(); ++a) {
    auto xa = model.parse(q.space->label(a).substr(1, q.space->label(a).size() - 2))[0];
    for (Index b = 0; b < q.members.size(); ++b) {
      auto xb = model.parse(q.space->label(b).substr(1, q.space->label(b).size() - 2))[0];
      // oracle: min l1 distance between the two vertical lines
      CHECK(q.space->dist(a, b) == Rational(std::abs(xa - xb)));
      if (a != b) CHECK(q.space->dist(a, b) >= Rational(1));
    }
  }
}

TEST_CASE("subgroup and induced subspaces keep the ambient metric") {
  auto gs = ball_space(lattice_group(2), 6);
  auto h = subgroup_space(gs, coordinate_subgroup({1}));
  CHECK(h->size() == 13);
  for (Index a = 0; a < h->size(); ++a) {
    for (Index b = 0; b < h->size(); ++b) {
      CHECK(h->dist(a, b) == gs->dist(gs->index(h->label(a)), gs->index(h->label(b))));
    }
  }
}

TEST_CASE("space descriptors rebuild the same space") {
  auto gs = ball_space(free_group(2), 3);
  auto rebuilt = build_space(space_to_json(*gs));
  CHECK(rebuilt->labels() == gs->labels());
  CHECK_THROWS_AS(build_space(nlohmann::json{{"kind", "nope"}}), MalformedCertificate);
  Caps caps;
  caps.max_radius = 2;
  CHECK_THROWS_AS(build_space(space_to_json(*gs), caps), ResourceError);
}
