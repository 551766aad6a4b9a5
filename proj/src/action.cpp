#include "coarse/action.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <unordered_map>

#include "coarse/errors.hpp"
#include "coarse/parallel.hpp"
#include "coarse/verify.hpp"

namespace coarse {

GroupAction::GroupAction(SpacePtr group_space, SpacePtr space, ActFn act, nlohmann::json descriptor)
    : group_space_(std::move(group_space)),
      space_(std::move(space)),
      act_(std::move(act)),
      descriptor_(std::move(descriptor)) {
  if (!group_space_ || !group_space_->group_ball()) throw DomainError("actions need a Cayley window for the group");
}

GroupAction left_translation(const SpacePtr& group_space) {
  const auto ball = group_space->group_ball();
  if (!ball) throw DomainError("left translation needs a Cayley window");
  auto act = [ball](const Element& g, Index x) { return ball->find(ball->model().multiply(g, ball->element(x))); };
  nlohmann::json d{{"preset", "left"}, {"group", ball->model().descriptor()}, {"radius", ball->radius()}};
  return GroupAction(group_space, group_space, act, d);
}

GroupAction affine_action(const SpacePtr& group_space, const SpacePtr& lattice_space,
                          std::vector<std::vector<std::int64_t>> matrix) {
  const auto gball = group_space->group_ball();
  const auto xball = lattice_space->group_ball();
  if (!gball || !xball) throw DomainError("affine actions need lattice windows");
  const auto m = xball->model().identity().size();
  const auto n = gball->model().identity().size();
  if (matrix.size() != m) throw DomainError("action matrix needs one row per coordinate of the space");
  for (const auto& row : matrix) {
    if (row.size() != n) throw DomainError("action matrix needs one column per coordinate of the group");
  }
  auto act = [xball, matrix](const Element& g, Index x) -> std::optional<Index> {
    Element y = xball->element(x);
    for (std::size_t r = 0; r < y.size(); ++r) {
      for (std::size_t c = 0; c < g.size(); ++c) y[r] += matrix[r][c] * g[c];
    }
    return xball->find(y);
  };
  nlohmann::json d{{"preset", "affine"},
                   {"group", gball->model().descriptor()},
                   {"radius", gball->radius()},
                   {"space", lattice_space->descriptor()},
                   {"matrix", matrix}};
  return GroupAction(group_space, lattice_space, act, d);
}

GroupAction quotient_action(const SpacePtr& group_space, const CosetSpace& quotient) {
  const auto ball = group_space->group_ball();
  if (!ball) throw DomainError("quotient actions need a Cayley window");
  auto members = quotient.members;
  auto coset_of = quotient.coset_of;
  auto act = [ball, members, coset_of](const Element& g, Index c) -> std::optional<Index> {
    // (g m) H is the same coset for every member m; the first member landing
    // inside the window decides it
    for (auto m : members[c]) {
      auto k = ball->find(ball->model().multiply(g, ball->element(m)));
      if (k) return coset_of[*k];
    }
    return std::nullopt;
  };
  nlohmann::json d{{"preset", "quotient"},
                   {"group", ball->model().descriptor()},
                   {"radius", ball->radius()},
                   {"subgroup", quotient.subgroup->descriptor()}};
  return GroupAction(group_space, quotient.space, act, d);
}

GroupAction build_action(const nlohmann::json& j, const Caps& caps) {
  if (!j.is_object()) throw MalformedCertificate("action must be a JSON object");
  auto preset = j.value("preset", "");
  auto model = make_group(j.at("group"));
  int radius = j.at("radius").get<int>();
  if (radius > caps.max_radius) throw ResourceError("ball radius exceeds the configured cap");
  auto ball = std::make_shared<const GroupBall>(model, radius, caps.max_points);
  auto gspace = group_ball_space(ball);
  if (preset == "left") return left_translation(gspace);
  if (preset == "affine") {
    auto space = build_space(j.at("space"), caps);
    return affine_action(gspace, space, j.at("matrix").get<std::vector<std::vector<std::int64_t>>>());
  }
  if (preset == "quotient") {
    auto q = quotient_space(ball, make_subgroup(*model, j.at("subgroup")));
    return quotient_action(gspace, q);
  }
  throw MalformedCertificate("unknown action preset '" + preset + "'");
}

std::optional<std::string> check_action(const GroupAction& action, std::uint64_t seed, std::size_t limit) {
  const auto& ball = action.ball();
  const auto& model = ball.model();
  const auto& X = *action.space();
  auto e = model.identity();
  for (Index x = 0; x < X.size(); ++x) {
    auto y = action.act(e, x);
    if (!y || *y != x) return "identity moves " + X.label(x);
  }
  auto check = [&](Index g, Index h, Index x) -> std::optional<std::string> {
    auto hx = action.act(h, x);
    if (!hx) return std::nullopt;
    auto lhs = action.act(g, *hx);
    auto gh = model.multiply(ball.element(g), ball.element(h));
    auto rhs = action.act(gh, x);
    if (lhs && rhs && *lhs != *rhs) {
      return "g(hx) != (gh)x at g=" + model.format(ball.element(g)) + ", h=" + model.format(ball.element(h)) +
             ", x=" + X.label(x);
    }
    return std::nullopt;
  };
  const std::size_t total = ball.size() * ball.size() * X.size();
  if (total <= limit) {
    for (Index g = 0; g < ball.size(); ++g) {
      for (Index h = 0; h < ball.size(); ++h) {
        for (Index x = 0; x < X.size(); ++x) {
          if (auto v = check(g, h, x)) return v;
        }
      }
    }
    return std::nullopt;
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Index> pick_g(0, static_cast<Index>(ball.size() - 1));
  std::uniform_int_distribution<Index> pick_x(0, static_cast<Index>(X.size() - 1));
  for (std::size_t t = 0; t < limit; ++t) {
    if (auto v = check(pick_g(rng), pick_g(rng), pick_x(rng))) return v;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------- orbits

namespace {

struct UnionFind {
  std::vector<Index> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), Index{0}); }
  Index find(Index a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  }
  void unite(Index a, Index b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent[b] = a;  // smallest index stays the root
  }
};

}  // namespace

OrbitData orbit_decomposition(const GroupAction& action) {
  const auto& ball = action.ball();
  const auto& X = *action.space();
  const auto& gens = ball.model().generators();
  UnionFind uf(X.size());
  Rational reach(0);
  std::vector<std::pair<Index, std::size_t>> missing;
  for (Index x = 0; x < X.size(); ++x) {
    for (std::size_t s = 0; s < gens.size(); ++s) {
      auto y = action.act(gens[s], x);
      if (!y) {
        missing.emplace_back(x, s);
        continue;
      }
      reach = std::max(reach, X.dist(x, *y));
      uf.unite(x, *y);
    }
  }
  for (const auto& [x, s] : missing) {
    if (X.valid_at(x, reach)) {
      throw TruncationError("action table incomplete: " + ball.model().format(gens[s]) + " . " + X.label(x) +
                            " is not stored");
    }
  }
  OrbitData out;
  out.orbit_of.resize(X.size());
  std::map<Index, std::size_t> root_to_orbit;
  for (Index x = 0; x < X.size(); ++x) {
    auto r = uf.find(x);
    auto [it, fresh] = root_to_orbit.emplace(r, out.representatives.size());
    if (fresh) out.representatives.push_back(x);
    out.orbit_of[x] = static_cast<Index>(it->second);
  }
  for (auto rep : out.representatives) {
    std::vector<Index> members;
    for (Index g = 0; g < ball.size(); ++g) {
      auto y = action.act(g, rep);
      if (y && *y == rep) members.push_back(g);
    }
    SubgroupPtr h;
    if (members.size() == 1) {
      h = trivial_subgroup();
    } else if (members.size() == ball.size() && ball.complete()) {
      h = whole_group();
    } else {
      const GroupAction* a = &action;
      h = predicate_subgroup(
          [a, rep](const Element& g) {
            auto y = a->act(g, rep);
            return y && *y == rep;
          },
          {{"kind", "stabilizer"}, {"point", X.label(rep)}});
    }
    out.stabilizers.push_back(h);
    out.stabilizer_members.push_back(std::move(members));
  }
  return out;
}

nlohmann::json OrbitData::to_json(const GroupAction& action) const {
  const auto& X = *action.space();
  const auto& ball = action.ball();
  nlohmann::json orbits = nlohmann::json::array();
  for (std::size_t i = 0; i < representatives.size(); ++i) {
    std::size_t size = std::count(orbit_of.begin(), orbit_of.end(), static_cast<Index>(i));
    nlohmann::json stab = nlohmann::json::array();
    for (auto g : stabilizer_members[i]) {
      if (stab.size() >= 20) break;
      stab.push_back(ball.model().format(ball.element(g)));
    }
    orbits.push_back({{"representative", X.label(representatives[i])},
                      {"stored_points", size},
                      {"stabilizer_stored", stabilizer_members[i].size()},
                      {"stabilizer_sample", stab},
                      {"stabilizer_trivial", stabilizer_members[i].size() == 1}});
  }
  return {{"orbits", orbits}, {"count", representatives.size()}};
}

// ---------------------------------------------------------------- T_k

TkProfile compute_tk(const GroupAction& action, const OrbitData& orbits, bool exhaustive_inclusion) {
  const auto& ball = action.ball();
  const auto& X = *action.space();
  const auto& reps = orbits.representatives;
  if (reps.empty()) throw DomainError("no orbits");
  TkProfile out;
  out.translator.assign(X.size(), std::nullopt);
  for (Index g = 0; g < ball.size(); ++g) {
    for (std::size_t i = 0; i < reps.size(); ++i) {
      auto w = action.act(g, reps[i]);
      if (w && !out.translator[*w]) out.translator[*w] = std::make_pair(g, i);
    }
  }
  const Index x1 = reps.front();
  Rational far(0);
  for (Index w = 0; w < X.size(); ++w) far = std::max(far, X.dist(x1, w));
  for (std::int64_t m = 0;; ++m) {
    Rational rm(Integer{m});
    if (!X.valid_at(x1, rm)) break;
    bool ok = true;
    std::int64_t n = 0;
    for (auto w : X.ball(x1, rm)) {
      if (!out.translator[w]) {
        ok = false;
        break;
      }
      n = std::max(n, ball.length(out.translator[w]->first));
    }
    if (!ok) break;
    out.N.push_back(n);
    if (rm >= far) break;  // the whole (finite) space is covered
  }
  if (out.N.size() < 2) throw ResourceError("window too small for the T_k profile (no m >= 1)");
  out.m_max = static_cast<std::int64_t>(out.N.size()) - 1;
  for (std::int64_t k = 0; k <= out.N.back(); ++k) {
    std::int64_t t = 0;
    for (std::int64_t m = 0; m <= out.m_max; ++m) {
      if (out.N[m] <= k) t = m;
    }
    out.T.push_back(t);
  }

  // inclusion B_{T_k}(g x_1) in the union over i of B_k(g) x_i
  std::vector<Index> gs;
  if (exhaustive_inclusion) {
    gs.resize(ball.size());
    std::iota(gs.begin(), gs.end(), Index{0});
  } else {
    gs.push_back(0);
  }
  const auto& model = ball.model();
  struct Local {
    std::uint64_t checks = 0;
    std::optional<std::string> violation;
  };
  auto per = parallel_map<Local>(gs.size(), [&](std::size_t gi) {
    Local l;
    auto g = gs[gi];
    auto gx = action.act(g, x1);
    if (!gx) return l;
    const auto& ge = ball.element(g);
    std::vector<char> covered(X.size(), 0);
    std::size_t done = 0;  // ball elements h already applied
    for (std::int64_t k = 0; k < static_cast<std::int64_t>(out.T.size()); ++k) {
      if (!X.valid_at(*gx, Rational(Integer{out.T[k]}))) break;
      if (!ball.complete() && Rational(Integer{ball.radius() - ball.length(g)}) < Rational(Integer{k})) break;
      auto upto = ball.count_within(k);
      for (; done < upto; ++done) {
        auto gh = model.multiply(ge, ball.element(static_cast<Index>(done)));
        for (auto r : reps) {
          auto w = action.act(gh, r);
          if (w) covered[*w] = 1;
        }
      }
      ++l.checks;
      for (auto w : X.ball(*gx, Rational(Integer{out.T[k]}))) {
        if (!covered[w]) {
          if (!l.violation) {
            l.violation = "B_" + std::to_string(out.T[k]) + "(" + X.label(*gx) + ") not covered at k=" +
                          std::to_string(k) + ": missing " + X.label(w);
          }
          break;
        }
      }
    }
    return l;
  });
  for (const auto& l : per) {
    out.inclusion_checks += l.checks;
    if (!out.inclusion_violation && l.violation) out.inclusion_violation = l.violation;
  }
  return out;
}

nlohmann::json TkProfile::to_json(const GroupAction& action) const {
  const auto& X = *action.space();
  const auto& ball = action.ball();
  nlohmann::json translators = nlohmann::json::object();
  for (Index w = 0; w < X.size() && translators.size() < 200; ++w) {
    if (!translator[w]) continue;
    translators[X.label(w)] = {{"g", ball.model().format(ball.element(translator[w]->first))},
                               {"orbit", translator[w]->second}};
  }
  nlohmann::json j{{"N", N},
                   {"T", T},
                   {"m_max", m_max},
                   {"inclusion_checks", inclusion_checks},
                   {"inclusion_holds", !inclusion_violation.has_value()},
                   {"translators", translators}};
  if (inclusion_violation) j["inclusion_violation"] = *inclusion_violation;
  return j;
}

// ---------------------------------------------------------------- displacement

std::int64_t displacement_constant(const GroupAction& action, const OrbitData& orbits) {
  const auto& ball = action.ball();
  const auto& X = *action.space();
  const auto& reps = orbits.representatives;
  auto per = parallel_map<Rational>(ball.size(), [&](std::size_t hi) {
    auto h = static_cast<Index>(hi);
    Rational best(0);
    Rational denom(Integer{ball.length(h) + 1});
    for (auto xj : reps) {
      auto y = action.act(h, xj);
      if (!y) continue;
      for (auto xi : reps) best = std::max(best, X.dist(xi, *y) / denom);
    }
    return best;
  });
  Rational best(0);
  for (const auto& b : per) best = std::max(best, b);
  auto c = static_cast<std::int64_t>(ceil_rational(best).numerator());
  return std::max<std::int64_t>(c, 1);
}

Rational displacement_ratio_exhaustive(const GroupAction& action, const OrbitData& orbits) {
  const auto& ball = action.ball();
  const auto& X = *action.space();
  const auto& reps = orbits.representatives;
  std::vector<std::vector<std::optional<Index>>> img(ball.size());
  for (Index g = 0; g < ball.size(); ++g) {
    for (auto r : reps) img[g].push_back(action.act(g, r));
  }
  auto per = parallel_map<Rational>(ball.size(), [&](std::size_t gi) {
    Rational best(0);
    for (Index h = 0; h < ball.size(); ++h) {
      Rational denom(Integer{ball.distance(static_cast<Index>(gi), h) + 1});
      for (const auto& a : img[gi]) {
        if (!a) continue;
        for (const auto& b : img[h]) {
          if (b) best = std::max(best, X.dist(*a, *b) / denom);
        }
      }
    }
    return best;
  });
  Rational best(0);
  for (const auto& b : per) best = std::max(best, b);
  return best;
}

// ---------------------------------------------------------------- families

FamilyPtr orbit_family(const GroupAction& action, const OrbitData& orbits) {
  const auto& ball = action.ball();
  const auto& X = *action.space();
  std::vector<FamilyComponent> comps;
  nlohmann::json cj = nlohmann::json::array();
  for (std::size_t i = 0; i < orbits.representatives.size(); ++i) {
    auto rep = orbits.representatives[i];
    std::vector<Index> image(ball.size());
    std::vector<char> hit(X.size(), 0);
    for (Index g = 0; g < ball.size(); ++g) {
      auto y = action.act(g, rep);
      if (!y) {
        throw TruncationError("the space window is too small: " + ball.model().format(ball.element(g)) + " . " +
                              X.label(rep) + " is not stored");
      }
      image[g] = *y;
      hit[*y] = 1;
    }
    FamilyComponent c;
    c.name = "pi" + std::to_string(i + 1);
    std::vector<Index> to_cod(X.size(), 0);
    for (Index w = 0; w < X.size(); ++w) {
      if (!hit[w]) continue;
      to_cod[w] = static_cast<Index>(c.codomain.size());
      c.codomain.push_back(X.label(w));
    }
    c.map.resize(ball.size());
    nlohmann::json map = nlohmann::json::object();
    for (Index g = 0; g < ball.size(); ++g) {
      c.map[g] = to_cod[image[g]];
      map[action.group_space()->label(g)] = X.label(image[g]);
    }
    cj.push_back({{"name", c.name}, {"codomain", c.codomain}, {"map", map}});
    comps.push_back(std::move(c));
  }
  nlohmann::json d{{"kind", "explicit"}, {"space", action.group_space()->descriptor()}, {"components", cj}};
  return std::make_shared<SetMapFamily>(action.group_space(), std::move(comps), std::move(d));
}

ExactFamilyCert finite_quotient_exact_cert(const FamilyPtr& family) {
  const auto& G = family->domain();
  std::vector<Index> all;
  for (Index y = 0; y < family->universe_size(); ++y) {
    if (family->fiber(y).empty()) throw TruncationError("coset '" + family->universe_labels()[y] + "' misses the window");
    all.push_back(y);
  }
  ExactFamilyCert cert;
  cert.family = family;
  cert.field.space = family->domain_ptr();
  cert.field.universe = std::make_shared<Universe>("codomains", family->universe_labels());
  auto v = normalized_indicator(cert.field.universe, all);
  cert.field.vectors.assign(G.size(), v);
  // distances to cosets are exact once the ball of that radius is stored
  auto per = parallel_map<Rational>(G.size(), [&](std::size_t x) {
    Rational best(0);
    for (auto y : all) best = std::max(best, family->dist_to_fiber(static_cast<Index>(x), y));
    return best;
  });
  Rational reach(0);
  for (const auto& r : per) reach = std::max(reach, r);
  cert.margin = reach;
  cert.S = Rational(0);
  for (Index x = 0; x < G.size(); ++x) {
    if (G.valid_at(x, cert.margin)) cert.S = std::max(cert.S, per[x]);
  }
  Rational diameter(0);
  if (auto ball = G.group_ball()) diameter = Rational(Integer{2 * static_cast<std::int64_t>(ball->radius())});
  cert.near = {diameter, Rational(0), NearForm::Norm};
  cert.provenance = {{"construction", "finite-quotient"}, {"cosets", all.size()}};
  return cert;
}

SEFamilyCert action_to_se_family(const GroupAction& action, const OrbitData& orbits, const TkProfile& tk,
                                 const StrongEmbedCert& base, const NearBound& target) {
  const auto& X = *action.space();
  const auto& G = *action.group_space();
  bool finite = true;
  for (Index x = 0; x < X.size(); ++x) finite = finite && !X.validity(x).has_value();
  auto family = orbit_family(action, orbits);
  if (finite) {
    std::size_t reached = family->universe_size();
    if (reached != X.size()) throw TruncationError("some orbit points are not reached from the window");
    auto exact = finite_quotient_exact_cert(family);
    auto se = exact_to_se(exact);
    se.provenance["dispatch"] = "finite";
    return se;
  }
  if (base.field.space.get() != action.space().get() && base.field.space->labels() != X.labels()) {
    throw DomainError("base certificate is not on the acted-on space");
  }
  if (!base.field.universe->located()) throw DomainError("base certificate is not located; refused");

  const auto C = displacement_constant(action, orbits);
  const Rational needed_R = Rational(Integer{C}) * (target.R + Rational(1));
  std::string mismatch;
  if (base.near.R < needed_R) {
    mismatch += " base near-range " + to_string(base.near.R) + " < C(R+1) = " + to_string(needed_R) + ";";
  }
  if (inner_equivalent(base.near) > inner_equivalent(target)) {
    mismatch += " base tolerance " + to_string(inner_equivalent(base.near)) + " > target " +
                to_string(inner_equivalent(target)) + " (inner form);";
  }
  if (!mismatch.empty()) throw ParameterMismatch("action_to_se_family:" + mismatch);

  // base universe index -> flat codomain index, through the location
  const auto& bu = *base.field.universe;
  std::vector<std::int64_t> flat_of_point(X.size(), -1);
  for (std::size_t i = 0; i < orbits.representatives.size(); ++i) {
    const auto& comp = family->component(i);
    for (Index w = 0; w < comp.codomain.size(); ++w) {
      flat_of_point[X.index(comp.codomain[w])] = family->flat(i, w);
    }
  }
  std::vector<char> seen(X.size(), 0);
  for (auto l : bu.locations()) {
    if (seen[l]) throw DomainError("base universe has two indices at one point; reindexing would merge them");
    seen[l] = 1;
  }
  auto universe = std::make_shared<Universe>("codomains", family->universe_labels());
  const Index x1 = orbits.representatives.front();

  struct PerG {
    bool deficient = false;
    std::optional<SparseVector> v;
  };
  auto per = parallel_map<PerG>(G.size(), [&](std::size_t gi) {
    PerG p;
    auto y = action.act(static_cast<Index>(gi), x1);
    if (!y || !base.field.at(*y) || !X.valid_at(*y, base.margin)) {
      p.deficient = true;
      return p;
    }
    const auto& b = *base.field.at(*y);
    std::vector<std::pair<Index, Surd>> entries;
    for (std::size_t e = 0; e < b.size(); ++e) {
      auto f = flat_of_point[bu.location(b.indices()[e])];
      if (f < 0) {
        p.deficient = true;
        return p;
      }
      entries.emplace_back(static_cast<Index>(f), b.coefs()[e]);
    }
    p.v = SparseVector(universe, std::move(entries));
    return p;
  });
  Rational margin(0);
  for (Index g = 0; g < G.size(); ++g) {
    if (!per[g].deficient) continue;
    const auto& r = G.validity(g);
    if (!r) throw TruncationError("base vector unavailable at a point with a complete ball");
    margin = std::max(margin, *r + Rational(1));
  }

  SEFamilyCert out;
  out.family = family;
  out.margin = margin;
  out.field.space = action.group_space();
  out.field.universe = universe;
  out.field.vectors.resize(G.size());
  for (Index g = 0; g < G.size(); ++g) {
    if (G.valid_at(g, margin)) out.field.vectors[g] = std::move(per[g].v);
  }

  // tails: k* = min{k : T_k >= S_b}
  nlohmann::json tail_log = nlohmann::json::array();
  for (const auto& e : base.tails) {
    std::optional<std::int64_t> kstar;
    for (std::int64_t k = 0; k < static_cast<std::int64_t>(tk.T.size()); ++k) {
      if (Rational(Integer{tk.T[k]}) >= e.S) {
        kstar = k;
        break;
      }
    }
    if (!kstar) continue;
    Rational S(Integer{*kstar});
    if (!out.tails.empty() && out.tails.back().S == S) {
      out.tails.back().delta = std::min(out.tails.back().delta, e.delta);
    } else {
      out.tails.push_back({S, e.delta});
    }
  }
  out.near = {target.R, inner_equivalent(target), NearForm::Inner};
  auto rep = verify(out);
  for (auto& e : out.tails) {
    const auto* c = rep.find("tail@" + to_string(e.S));
    nlohmann::json entry{{"S", to_string(e.S)}, {"analytic", to_string(e.delta)}};
    if (c && c->worst) {
      entry["measured"] = to_string(*c->worst);
      e.delta = std::min(e.delta, c->worst->rational_part());
    }
    tail_log.push_back(entry);
  }
  auto near = measure_near_inner(out.field, out.margin, target.R);
  if (near) {
    auto q = near->is_rational() ? near->rational_part() : near->upper_bound(6);
    out.near.eps = std::min(out.near.eps, q);
  }
  out.provenance = {{"construction", "action-to-se-family"},
                    {"action", action.descriptor()},
                    {"C", C},
                    {"base_near_range_needed", to_string(needed_R)},
                    {"T", tk.T},
                    {"N", tk.N},
                    {"tails", tail_log},
                    {"margin", to_string(margin)},
                    {"base", base.provenance}};
  return out;
}

// ---------------------------------------------------------------- coset transport

namespace {

struct BaseView {
  const UnitField* field = nullptr;
  NearBound near;
  Rational margin{0};
  EquiFlavor flavor = EquiFlavor::Exact;
  Rational S{0};
  Profile profile;
  nlohmann::json provenance;
};

EquiFamilyCert transport(const FamilyPtr& family, std::size_t component, const BaseView& base) {
  const auto& G = family->domain();
  const auto ball = G.group_ball();
  if (!ball) throw DomainError("coset transport needs a Cayley window as the family domain");
  const auto& model = ball->model();
  const auto& B = *base.field->space;
  const auto& bu = *base.field->universe;
  if (base.flavor == EquiFlavor::Strong && !bu.located()) throw DomainError("strong base certificate is not located");

  std::unordered_map<Element, Index, ElementHash> base_index;
  std::vector<Element> base_elem(B.size());
  for (Index b = 0; b < B.size(); ++b) {
    base_elem[b] = model.parse(B.label(b));
    base_index.emplace(base_elem[b], b);
  }
  // suffix of each base universe label after its location label
  std::vector<std::string> suffix(bu.size());
  if (bu.located()) {
    for (Index k = 0; k < bu.size(); ++k) {
      const auto& l = bu.label(k);
      const auto& p = B.label(bu.location(k));
      suffix[k] = l.compare(0, p.size(), p) == 0 ? l.substr(p.size()) : "|" + l;
    }
  }

  struct Key {
    Index a;  // located: domain point; otherwise codomain index
    Index k;  // base universe index
    bool operator<(const Key& o) const { return a != o.a ? a < o.a : k < o.k; }
    bool operator==(const Key& o) const { return a == o.a && k == o.k; }
  };
  const auto& comp = family->component(component);
  struct Piece {
    Index y;
    std::vector<std::optional<std::vector<std::pair<Key, Surd>>>> vecs;
  };
  std::vector<Piece> raw(comp.codomain.size());
  parallel_for(comp.codomain.size(), [&](std::size_t w) {
    auto y = family->flat(component, static_cast<Index>(w));
    const auto& fib = family->fiber(y);
    Piece p{y, {}};
    p.vecs.resize(fib.size());
    if (fib.empty()) {
      raw[w] = std::move(p);
      return;
    }
    const auto& r = ball->element(fib.front());
    auto rinv = model.inverse(r);
    for (std::size_t i = 0; i < fib.size(); ++i) {
      auto s = fib[i];
      if (!G.valid_at(s, base.margin)) continue;
      auto h = model.multiply(rinv, ball->element(s));
      auto it = base_index.find(h);
      if (it == base_index.end() || !base.field->at(it->second)) {
        throw TruncationError("coset of " + model.format(r) + " is not isometric to the subgroup window at " +
                              G.label(s));
      }
      const auto& v = *base.field->at(it->second);
      std::vector<std::pair<Key, Surd>> entries;
      for (std::size_t e = 0; e < v.size(); ++e) {
        auto k = v.indices()[e];
        Key key{y, k};
        if (bu.located()) {
          auto t = ball->find(model.multiply(r, base_elem[bu.location(k)]));
          if (!t) throw TruncationError("transported support leaves the window near " + G.label(s));
          key.a = *t;
        }
        entries.emplace_back(key, v.coefs()[e]);
      }
      p.vecs[i] = std::move(entries);
    }
    raw[w] = std::move(p);
  });

  std::vector<Key> keys;
  for (const auto& p : raw) {
    for (const auto& v : p.vecs) {
      if (!v) continue;
      for (const auto& [key, c] : *v) keys.push_back(key);
    }
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  std::vector<std::string> labels;
  std::vector<Index> loc;
  labels.reserve(keys.size());
  for (const auto& key : keys) {
    if (bu.located()) {
      labels.push_back(G.label(key.a) + suffix[key.k]);
      loc.push_back(key.a);
    } else {
      labels.push_back(family->universe_labels()[key.a] + "|" + bu.label(key.k));
    }
  }
  auto universe = std::make_shared<Universe>("transported", std::move(labels), std::move(loc));

  EquiFamilyCert out;
  out.family = family;
  out.flavor = base.flavor;
  out.near = base.near;
  out.S = base.S;
  out.profile = base.profile;
  out.margin = base.margin;
  out.universe = universe;
  for (auto& p : raw) {
    if (p.vecs.empty()) continue;
    PieceField pf;
    pf.y = p.y;
    pf.vectors.resize(p.vecs.size());
    for (std::size_t i = 0; i < p.vecs.size(); ++i) {
      if (!p.vecs[i]) continue;
      std::vector<std::pair<Index, Surd>> entries;
      for (auto& [key, c] : *p.vecs[i]) {
        auto idx = std::lower_bound(keys.begin(), keys.end(), key) - keys.begin();
        entries.emplace_back(static_cast<Index>(idx), c);
      }
      pf.vectors[i] = SparseVector(universe, std::move(entries));
    }
    out.pieces.push_back(std::move(pf));
  }
  out.provenance = {{"construction", "coset-transport"},
                    {"component", family->component(component).name},
                    {"cosets", out.pieces.size()},
                    {"base", base.provenance}};
  return out;
}

}  // namespace

EquiFamilyCert transport_coset_certs(const FamilyPtr& family, std::size_t component, const PropAVectorCert& base) {
  BaseView v{&base.field, base.near, base.margin, EquiFlavor::Exact, base.S, {}, base.provenance};
  return transport(family, component, v);
}

EquiFamilyCert transport_coset_certs(const FamilyPtr& family, std::size_t component, const CoarseWitness& base) {
  BaseView v{&base.field, base.near, base.margin, EquiFlavor::Coarse, Rational(0), base.decay, base.provenance};
  return transport(family, component, v);
}

EquiFamilyCert transport_coset_certs(const FamilyPtr& family, std::size_t component, const StrongEmbedCert& base) {
  BaseView v{&base.field, base.near, base.margin, EquiFlavor::Strong, Rational(0), base.tails, base.provenance};
  return transport(family, component, v);
}

// ---------------------------------------------------------------- extension pipeline

namespace {

/// Move a certificate onto another space along a bijection of points.
StrongEmbedCert rehome(const StrongEmbedCert& cert, const SpacePtr& target, const std::vector<Index>& point_map) {
  const auto& u = *cert.field.universe;
  std::vector<Index> loc;
  if (u.located()) {
    for (auto l : u.locations()) loc.push_back(point_map[l]);
  }
  auto universe = std::make_shared<Universe>(u.tag(), u.labels(), std::move(loc));
  StrongEmbedCert out = cert;
  out.field.space = target;
  out.field.universe = universe;
  out.field.vectors.assign(target->size(), std::nullopt);
  for (Index x = 0; x < cert.field.vectors.size(); ++x) {
    const auto& v = cert.field.vectors[x];
    if (!v) continue;
    std::vector<std::pair<Index, Surd>> entries;
    for (std::size_t e = 0; e < v->size(); ++e) entries.emplace_back(v->indices()[e], v->coefs()[e]);
    auto y = point_map[x];
    if (!target->valid_at(y, cert.margin)) continue;
    out.field.vectors[y] = SparseVector(universe, std::move(entries));
  }
  return out;
}

nlohmann::json summary(const VerificationReport& rep) {
  return {{"kind", rep.kind}, {"verdict", rep.pass() ? "pass" : "fail"}};
}

template <class F>
auto stage(const std::string& name, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ParameterMismatch& e) {
    throw ParameterMismatch("stage " + name + ": " + e.what());
  } catch (const TruncationError& e) {
    throw TruncationError("stage " + name + ": " + e.what());
  } catch (const DomainError& e) {
    throw DomainError("stage " + name + ": " + e.what());
  }
}

}  // namespace

PipelineResult extension_pipeline(const SpacePtr& group_space, const SubgroupPtr& H, const CosetSpace& quotient,
                                  const StrongEmbedCert& quotient_cert, const StrongEmbedCert& sub_cert,
                                  const CombineTargets& targets) {
  const auto ball = group_space->group_ball();
  if (!ball) throw DomainError("the extension pipeline needs a Cayley window");
  if (!H->declared_normal() && !check_normal(*ball, *H, 1)) {
    throw InvalidSubgroup("the extension pipeline needs a normal subgroup");
  }
  PipelineResult res;
  res.log = {{"targets", {{"R", to_string(targets.R)}, {"epsilon", to_string(targets.eps)},
                          {"negotiation", to_string(targets.mode)}}}};

  auto q_rep = stage("verify-quotient", [&] { return verify(quotient_cert); });
  auto s_rep = stage("verify-subgroup", [&] { return verify(sub_cert); });
  res.log["quotient_input"] = summary(q_rep);
  res.log["subgroup_input"] = summary(s_rep);
  if (!q_rep.pass()) throw ParameterMismatch("stage verify-quotient: quotient certificate fails verification");
  if (!s_rep.pass()) throw ParameterMismatch("stage verify-subgroup: subgroup certificate fails verification");

  if (quotient.members.size() == 1) {
    // H = G on the window: the subgroup certificate is the answer
    std::vector<Index> map(sub_cert.field.space->size());
    for (Index x = 0; x < map.size(); ++x) map[x] = group_space->index(sub_cert.field.space->label(x));
    res.cert = rehome(sub_cert, group_space, map);
    res.path = "subgroup";
    res.log["path"] = res.path;
    return res;
  }
  bool trivial = std::all_of(quotient.members.begin(), quotient.members.end(),
                             [](const auto& m) { return m.size() == 1; });
  if (trivial) {
    // G -> G/H is a bijection: pull the quotient certificate back
    std::vector<Index> map(quotient.members.size());
    for (Index c = 0; c < map.size(); ++c) map[c] = quotient.members[c].front();
    res.cert = rehome(quotient_cert, group_space, map);
    res.path = "quotient";
    res.log["path"] = res.path;
    return res;
  }

  auto action = quotient_action(group_space, quotient);
  auto orbits = stage("orbits", [&] { return orbit_decomposition(action); });
  auto tk = stage("tk", [&] { return compute_tk(action, orbits, false); });
  auto C = displacement_constant(action, orbits);
  res.log["orbits"] = orbits.to_json(action);
  res.log["T"] = tk.T;
  res.log["N"] = tk.N;
  res.log["C"] = C;

  const Rational eps_inner = targets.eps * targets.eps / Rational(2);
  NearBound family_target{targets.R, eps_inner / Rational(3), NearForm::Inner};
  if (targets.mode == Negotiation::Realized) family_target.eps = std::max(family_target.eps, inner_equivalent(quotient_cert.near));
  auto outer = stage("action-to-family", [&] { return action_to_se_family(action, orbits, tk, quotient_cert, family_target); });
  auto outer_rep = verify(outer);
  res.log["outer"] = summary(outer_rep);
  res.log["outer_provenance"] = outer.provenance;
  if (!outer_rep.pass()) throw ParameterMismatch("stage action-to-family: family certificate fails verification");

  auto fibers = stage("coset-transport", [&] { return transport_coset_certs(outer.family, 0, sub_cert); });
  auto fiber_rep = verify(fibers);
  res.log["fibers"] = summary(fiber_rep);
  if (!fiber_rep.pass()) throw ParameterMismatch("stage coset-transport: transported certificates fail verification");

  res.cert = stage("combine", [&] { return combine_se_strong(outer, fibers, targets); });
  auto final_rep = verify(res.cert);
  res.log["final"] = summary(final_rep);
  res.log["combine_provenance"] = res.cert.provenance;
  res.path = "combined";
  res.log["path"] = res.path;
  res.outer = std::move(outer);
  res.fibers = std::move(fibers);
  return res;
}

}  // namespace coarse
