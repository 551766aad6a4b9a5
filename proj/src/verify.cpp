#include "coarse/verify.hpp"

#include <algorithm>

#include "coarse/errors.hpp"
#include "coarse/parallel.hpp"

namespace coarse {

// ---------------------------------------------------------------- small helpers

Rational inner_equivalent(const NearBound& nb) {
  switch (nb.form) {
    case NearForm::Inner:
      return nb.eps;
    case NearForm::Norm:
      return nb.eps * nb.eps / Rational(2);
    case NearForm::Ratio:
      break;
  }
  throw DomainError("set-ratio bounds have no inner-product equivalent");
}

std::string to_string(NearForm form) {
  switch (form) {
    case NearForm::Ratio:
      return "ratio";
    case NearForm::Inner:
      return "inner";
    case NearForm::Norm:
      return "norm";
  }
  return "?";
}

NearForm parse_near_form(const std::string& text) {
  if (text == "ratio") return NearForm::Ratio;
  if (text == "inner") return NearForm::Inner;
  if (text == "norm") return NearForm::Norm;
  throw MalformedCertificate("unknown near form '" + text + "'");
}

std::string to_string(EquiFlavor flavor) {
  switch (flavor) {
    case EquiFlavor::Exact:
      return "exact";
    case EquiFlavor::Coarse:
      return "coarse";
    case EquiFlavor::Strong:
      return "strong";
  }
  return "?";
}

const SparseVector* EquiFamilyCert::at(Index y, Index x) const {
  for (const auto& p : pieces) {
    if (p.y != y) continue;
    const auto& f = family->fiber(y);
    auto it = std::lower_bound(f.begin(), f.end(), x);
    if (it == f.end() || *it != x) return nullptr;
    const auto& v = p.vectors[static_cast<std::size_t>(it - f.begin())];
    return v ? &*v : nullptr;
  }
  return nullptr;
}

std::optional<SurdSum> Condition::slack() const {
  if (!worst) return std::nullopt;
  return *worst - bound;
}

nlohmann::json Condition::to_json() const {
  nlohmann::json j{{"name", name},
                   {"quantity", quantity},
                   {"bound", to_string(bound)},
                   {"checked", checked},
                   {"skipped", skipped},
                   {"pass", pass()}};
  if (worst) {
    j["worst"] = to_string(*worst);
    j["slack"] = to_string(*slack());
    j["equality"] = equality();
  } else {
    j["worst"] = nullptr;
    j["slack"] = nullptr;
  }
  if (!witness.empty()) j["witness"] = witness;
  if (witness_distance) j["witness_distance"] = to_string(*witness_distance);
  return j;
}

bool VerificationReport::pass() const {
  return std::all_of(conditions.begin(), conditions.end(), [](const Condition& c) { return c.pass(); });
}

const Condition* VerificationReport::find(const std::string& name) const {
  for (const auto& c : conditions) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

nlohmann::json VerificationReport::to_json() const {
  nlohmann::json conds = nlohmann::json::array();
  for (const auto& c : conditions) conds.push_back(c.to_json());
  return {{"kind", kind}, {"verdict", pass() ? "pass" : "fail"}, {"conditions", conds}, {"details", extra}};
}

Rational location_radius(const FiniteMetricSpace& space, Index x, const SparseVector& v) {
  Rational best(0);
  const auto& u = *v.universe();
  for (auto k : v.indices()) {
    auto d = space.dist(x, u.location(k));
    if (d > best) best = d;
  }
  return best;
}

namespace {

// ---------------------------------------------------------------- reduction

struct Worst {
  std::optional<SurdSum> value;
  Index a = 0;
  Index b = 0;
  bool pair = false;
  Rational d{0};

  void offer(const SurdSum& v, Index x, Index y, bool is_pair, const Rational& dist) {
    if (value) {
      int c = compare(v, *value);
      if (c < 0) return;
      if (c == 0 && std::make_pair(x, y) >= std::make_pair(a, b)) return;
    }
    value = v;
    a = x;
    b = y;
    pair = is_pair;
    d = dist;
  }
  void merge(const Worst& o) {
    if (o.value) offer(*o.value, o.a, o.b, o.pair, o.d);
  }
};

struct Tally {
  Worst worst;
  std::uint64_t checked = 0;
  std::uint64_t skipped = 0;
  void merge(const Tally& o) {
    worst.merge(o.worst);
    checked += o.checked;
    skipped += o.skipped;
  }
};

Condition make_condition(std::string name, std::string quantity, const Tally& t, SurdSum bound,
                         const FiniteMetricSpace& space) {
  Condition c;
  c.name = std::move(name);
  c.quantity = std::move(quantity);
  c.worst = t.worst.value;
  c.bound = std::move(bound);
  c.checked = t.checked;
  c.skipped = t.skipped;
  if (t.worst.value) {
    c.witness.push_back(space.label(t.worst.a));
    if (t.worst.pair) {
      c.witness.push_back(space.label(t.worst.b));
      c.witness_distance = t.worst.d;
    }
  }
  return c;
}

std::string entry_name(const std::string& base, const Rational& S) { return base + "@" + to_string(S); }

void check_profile(const Profile& p, const std::string& what) {
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k].delta < 0) throw MalformedCertificate(what + " has a negative entry");
    if (k > 0 && p[k].delta > p[k - 1].delta) throw MalformedCertificate(what + " is not nonincreasing");
    if (k > 0 && p[k].S < p[k - 1].S) throw MalformedCertificate(what + " radii are not sorted");
  }
}

// ---------------------------------------------------------------- scopes

/// The points a field verifier quantifies over: the whole space or one fiber.
struct Scope {
  const FiniteMetricSpace* space = nullptr;
  std::vector<Index> all;
  std::vector<Index> valid;
  std::vector<Index> missing;  // valid by radius but without a vector
  std::vector<char> in_scope;
  std::vector<char> is_valid;
  std::function<const SparseVector*(Index)> vec;
};

Scope make_scope(const FiniteMetricSpace& space, std::vector<Index> all, const Rational& margin,
                 std::function<const SparseVector*(Index)> vec) {
  Scope s;
  s.space = &space;
  s.all = std::move(all);
  s.vec = std::move(vec);
  s.in_scope.assign(space.size(), 0);
  s.is_valid.assign(space.size(), 0);
  for (auto x : s.all) {
    s.in_scope[x] = 1;
    if (!space.valid_at(x, margin)) continue;
    if (s.vec(x)) {
      s.valid.push_back(x);
      s.is_valid[x] = 1;
    } else {
      s.missing.push_back(x);
    }
  }
  return s;
}

Scope whole_scope(const UnitField& field, const Rational& margin) {
  if (field.vectors.size() != field.space->size()) throw DomainError("field does not cover the space");
  std::vector<Index> all(field.space->size());
  for (Index x = 0; x < all.size(); ++x) all[x] = x;
  return make_scope(*field.space, std::move(all), margin, [&field](Index x) { return field.at(x); });
}

Tally tally_coverage(const Scope& s) {
  Tally t;
  t.checked = s.valid.size() + s.missing.size();
  t.worst.offer(SurdSum(Rational(Integer(static_cast<std::int64_t>(s.missing.size())))),
                s.missing.empty() ? 0 : s.missing.front(), 0, false, Rational(0));
  if (s.missing.empty() && s.valid.empty()) t.worst.value.reset();
  return t;
}

Tally tally_unit(const Scope& s) {
  auto per = parallel_map<Tally>(s.valid.size(), [&](std::size_t i) {
    Tally t;
    auto x = s.valid[i];
    auto dev = s.vec(x)->norm_sq() - Rational(1);
    t.worst.offer(SurdSum(rational_abs(dev)), x, x, false, Rational(0));
    t.checked = 1;
    return t;
  });
  Tally out;
  for (const auto& t : per) out.merge(t);
  return out;
}

Tally tally_near(const Scope& s, const NearBound& nb) {
  auto per = parallel_map<Tally>(s.all.size(), [&](std::size_t i) {
    Tally t;
    auto x = s.all[i];
    for (auto y : s.space->ball(x, nb.R)) {
      if (y <= x || !s.in_scope[y]) continue;
      if (!s.is_valid[x] || !s.is_valid[y]) {
        ++t.skipped;
        continue;
      }
      ++t.checked;
      const auto& u = *s.vec(x);
      const auto& v = *s.vec(y);
      SurdSum q = nb.form == NearForm::Norm ? dist_sq(u, v) : (SurdSum(Rational(1)) - inner(u, v)).abs();
      t.worst.offer(q, x, y, true, s.space->dist(x, y));
    }
    return t;
  });
  Tally out;
  for (const auto& t : per) out.merge(t);
  return out;
}

SurdSum near_bound_value(const NearBound& nb) {
  if (nb.form == NearForm::Norm) return SurdSum(nb.eps * nb.eps);
  return SurdSum(nb.eps);
}

std::string near_quantity(const NearBound& nb) {
  return nb.form == NearForm::Norm ? "||v_x - v_y||^2" : "|1 - <v_x, v_y>|";
}

std::uint64_t pairs_of(std::size_t n) { return static_cast<std::uint64_t>(n) * (n ? n - 1 : 0) / 2; }

/// sup |<v_x, v_y>| over valid pairs with d(x, y) >= each threshold.
std::vector<Tally> tally_far(const Scope& s, const std::vector<Rational>& thresholds, bool located) {
  std::vector<Tally> out(thresholds.size());
  if (thresholds.empty()) return out;
  Rational lowest = *std::min_element(thresholds.begin(), thresholds.end());
  std::vector<Rational> reach;
  if (located) {
    reach = parallel_map<Rational>(s.valid.size(),
                                   [&](std::size_t i) { return location_radius(*s.space, s.valid[i], *s.vec(s.valid[i])); });
  }
  auto per = parallel_map<std::vector<Tally>>(s.valid.size(), [&](std::size_t i) {
    std::vector<Tally> local(thresholds.size());
    auto x = s.valid[i];
    for (std::size_t j = i + 1; j < s.valid.size(); ++j) {
      auto y = s.valid[j];
      auto d = s.space->dist(x, y);
      if (d < lowest) continue;
      SurdSum q;
      if (!located || d <= reach[i] + reach[j]) q = inner(*s.vec(x), *s.vec(y)).abs();
      for (std::size_t k = 0; k < thresholds.size(); ++k) {
        if (d < thresholds[k]) continue;
        ++local[k].checked;
        local[k].worst.offer(q, std::min(x, y), std::max(x, y), true, d);
      }
    }
    return local;
  });
  for (const auto& local : per) {
    for (std::size_t k = 0; k < out.size(); ++k) out[k].merge(local[k]);
  }
  auto skipped = pairs_of(s.all.size()) - pairs_of(s.valid.size());
  for (auto& t : out) t.skipped = skipped;
  return out;
}

/// Tail outside B_S(x) for located fields; indices located outside the scope
/// always count as outside.
std::vector<Tally> tally_located_tails(const Scope& s, const Profile& profile) {
  std::vector<Tally> out(profile.size());
  auto per = parallel_map<std::vector<Tally>>(s.valid.size(), [&](std::size_t i) {
    std::vector<Tally> local(profile.size());
    auto x = s.valid[i];
    const auto& v = *s.vec(x);
    const auto& u = *v.universe();
    std::vector<Rational> tails(profile.size(), Rational(0));
    for (std::size_t e = 0; e < v.size(); ++e) {
      auto loc = u.location(v.indices()[e]);
      bool inside = s.in_scope[loc];
      Rational d = inside ? s.space->dist(x, loc) : Rational(0);
      auto sq = v.coefs()[e].square();
      for (std::size_t k = 0; k < profile.size(); ++k) {
        if (!inside || d > profile[k].S) tails[k] += sq;
      }
    }
    for (std::size_t k = 0; k < profile.size(); ++k) {
      local[k].checked = 1;
      local[k].worst.offer(SurdSum(tails[k]), x, x, false, Rational(0));
    }
    return local;
  });
  for (const auto& local : per) {
    for (std::size_t k = 0; k < out.size(); ++k) out[k].merge(local[k]);
  }
  return out;
}

nlohmann::json base_details(const Scope& s, const NearBound& nb, const Rational& margin) {
  return {{"points", s.all.size()},
          {"valid_points", s.valid.size()},
          {"margin", to_string(margin)},
          {"R", to_string(nb.R)},
          {"epsilon", to_string(nb.eps)},
          {"near_form", to_string(nb.form)}};
}

void add_field_core(VerificationReport& rep, const Scope& s, const NearBound& nb) {
  rep.conditions.push_back(make_condition("coverage", "valid points without a vector", tally_coverage(s),
                                          SurdSum(Rational(0)), *s.space));
  rep.conditions.push_back(
      make_condition("unit_norm", "| ||v_x||^2 - 1 |", tally_unit(s), SurdSum(Rational(0)), *s.space));
  rep.conditions.push_back(
      make_condition("near", near_quantity(nb), tally_near(s, nb), near_bound_value(nb), *s.space));
}

void require_vector_form(const NearBound& nb) {
  if (nb.form == NearForm::Ratio) throw MalformedCertificate("vector certificates need an inner or norm bound");
}

}  // namespace

// ---------------------------------------------------------------- property A (sets)

VerificationReport verify(const PropASetCert& cert) {
  const auto& space = *cert.space;
  if (cert.sets.size() != space.size()) throw MalformedCertificate("set family does not cover the space");
  std::vector<Index> all(space.size());
  for (Index x = 0; x < all.size(); ++x) all[x] = x;
  auto present = [&](Index x) { return cert.sets[x].has_value(); };
  std::vector<char> valid(space.size(), 0);
  Tally nonempty;
  std::vector<Index> valid_pts;
  for (auto x : all) {
    if (!space.valid_at(x, cert.margin)) continue;
    ++nonempty.checked;
    if (!present(x) || cert.sets[x]->empty()) {
      nonempty.worst.offer(SurdSum(Rational(1)), x, x, false, Rational(0));
      continue;
    }
    valid[x] = 1;
    valid_pts.push_back(x);
  }
  if (!nonempty.worst.value && nonempty.checked) nonempty.worst.offer(SurdSum(Rational(0)), 0, 0, false, Rational(0));

  auto near_per = parallel_map<Tally>(all.size(), [&](std::size_t i) {
    Tally t;
    auto x = all[i];
    for (auto y : space.ball(x, cert.R)) {
      if (y == x) continue;
      if (!valid[x] || !valid[y]) {
        if (y > x) ++t.skipped;
        continue;
      }
      ++t.checked;
      const auto& a = *cert.sets[x];
      const auto& b = *cert.sets[y];
      std::size_t common = 0;
      std::size_t p = 0, q = 0;
      while (p < a.size() && q < b.size()) {
        if (a[p] < b[q]) {
          ++p;
        } else if (b[q] < a[p]) {
          ++q;
        } else {
          ++common;
          ++p;
          ++q;
        }
      }
      auto sym = static_cast<std::int64_t>(a.size() + b.size() - 2 * common);
      Rational ratio(Integer(sym), Integer(static_cast<std::int64_t>(a.size())));
      t.worst.offer(SurdSum(ratio), x, y, true, space.dist(x, y));
    }
    return t;
  });
  Tally near;
  for (const auto& t : near_per) near.merge(t);

  auto support_per = parallel_map<Tally>(valid_pts.size(), [&](std::size_t i) {
    Tally t;
    auto x = valid_pts[i];
    Rational best(0);
    Index arg = x;
    for (const auto& [y, n] : *cert.sets[x]) {
      auto d = space.dist(x, y);
      if (d > best) {
        best = d;
        arg = y;
      }
    }
    t.checked = 1;
    t.worst.offer(SurdSum(best), x, arg, true, best);
    return t;
  });
  Tally support;
  for (const auto& t : support_per) support.merge(t);

  VerificationReport rep;
  rep.kind = "prop-a-sets";
  rep.conditions.push_back(make_condition("nonempty", "empty sets", nonempty, SurdSum(Rational(0)), space));
  rep.conditions.push_back(make_condition("near", "|A_x sym-diff A_y| / |A_x|", near, SurdSum(cert.eps), space));
  rep.conditions.push_back(make_condition("support", "d(x, y) for (y, n) in A_x", support, SurdSum(cert.S), space));
  rep.extra = {{"points", space.size()},
               {"valid_points", valid_pts.size()},
               {"margin", to_string(cert.margin)},
               {"R", to_string(cert.R)},
               {"epsilon", to_string(cert.eps)},
               {"S", to_string(cert.S)}};
  return rep;
}

// ---------------------------------------------------------------- property A (vectors)

VerificationReport verify(const PropAVectorCert& cert) {
  require_vector_form(cert.near);
  auto s = whole_scope(cert.field, cert.margin);
  VerificationReport rep;
  rep.kind = "prop-a-vector";
  add_field_core(rep, s, cert.near);
  auto far = tally_far(s, {cert.S}, cert.field.universe->located());
  rep.conditions.push_back(
      make_condition("orthogonality", "|<v_x, v_y>| at d >= S", far[0], SurdSum(Rational(0)), *s.space));
  if (cert.support_radius) {
    if (!cert.field.universe->located()) throw DomainError("support radius needs a located universe");
    Profile p{{*cert.support_radius, Rational(0)}};
    auto t = tally_located_tails(s, p);
    rep.conditions.push_back(make_condition("support", "mass located outside B(x, support_radius)", t[0],
                                            SurdSum(Rational(0)), *s.space));
  }
  rep.extra = base_details(s, cert.near, cert.margin);
  rep.extra["S"] = to_string(cert.S);
  return rep;
}

// ---------------------------------------------------------------- strong embeddability

VerificationReport verify(const StrongEmbedCert& cert) {
  require_vector_form(cert.near);
  check_profile(cert.tails, "tail profile");
  if (!cert.field.universe->located()) {
    throw DomainError("strong embeddability certificates need a universe located in the space");
  }
  auto s = whole_scope(cert.field, cert.margin);
  VerificationReport rep;
  rep.kind = "strong-embed";
  add_field_core(rep, s, cert.near);
  auto tails = tally_located_tails(s, cert.tails);
  for (std::size_t k = 0; k < cert.tails.size(); ++k) {
    rep.conditions.push_back(make_condition(entry_name("tail", cert.tails[k].S), "sum_{w outside B_S(x)} b_x(w)^2",
                                            tails[k], SurdSum(cert.tails[k].delta), *s.space));
  }
  rep.extra = base_details(s, cert.near, cert.margin);
  return rep;
}

// ---------------------------------------------------------------- coarse embeddability

VerificationReport verify(const CoarseWitness& cert) {
  require_vector_form(cert.near);
  check_profile(cert.decay, "decay profile");
  auto s = whole_scope(cert.field, cert.margin);
  VerificationReport rep;
  rep.kind = "coarse-witness";
  add_field_core(rep, s, cert.near);
  std::vector<Rational> th;
  for (const auto& e : cert.decay) th.push_back(e.S);
  auto far = tally_far(s, th, cert.field.universe->located());
  for (std::size_t k = 0; k < cert.decay.size(); ++k) {
    rep.conditions.push_back(make_condition(entry_name("decay", cert.decay[k].S), "|<b_x, b_y>| at d >= S", far[k],
                                            SurdSum(cert.decay[k].delta), *s.space));
  }
  rep.extra = base_details(s, cert.near, cert.margin);
  return rep;
}

// ---------------------------------------------------------------- families

namespace {

void check_family_universe(const SetMapFamily& family, const UnitField& field) {
  if (field.space.get() != family.domain_ptr().get()) throw DomainError("field and family have different domains");
  if (field.universe->size() != family.universe_size()) {
    throw DomainError("field universe is not the disjoint union of the codomains");
  }
}

/// Support radius sup d(x, fiber(w)) and tails outside the images of B_S(x).
std::pair<Tally, std::vector<Tally>> tally_family(const Scope& s, const SetMapFamily& family, const Profile& profile) {
  std::vector<Tally> tails(profile.size());
  Tally support;
  auto per = parallel_map<std::pair<Tally, std::vector<Tally>>>(s.valid.size(), [&](std::size_t i) {
    std::pair<Tally, std::vector<Tally>> local{Tally{}, std::vector<Tally>(profile.size())};
    auto x = s.valid[i];
    const auto& v = *s.vec(x);
    Rational best(0);
    Index arg = x;
    std::vector<Rational> t(profile.size(), Rational(0));
    for (std::size_t e = 0; e < v.size(); ++e) {
      auto [p, d] = family.nearest_in_fiber(x, v.indices()[e]);
      if (d > best) {
        best = d;
        arg = p;
      }
      auto sq = v.coefs()[e].square();
      for (std::size_t k = 0; k < profile.size(); ++k) {
        if (d > profile[k].S) t[k] += sq;
      }
    }
    local.first.checked = 1;
    local.first.worst.offer(SurdSum(best), x, arg, true, best);
    for (std::size_t k = 0; k < profile.size(); ++k) {
      local.second[k].checked = 1;
      local.second[k].worst.offer(SurdSum(t[k]), x, x, false, Rational(0));
    }
    return local;
  });
  for (const auto& [sup, tl] : per) {
    support.merge(sup);
    for (std::size_t k = 0; k < tails.size(); ++k) tails[k].merge(tl[k]);
  }
  return {support, tails};
}

}  // namespace

VerificationReport verify(const ExactFamilyCert& cert) {
  require_vector_form(cert.near);
  check_family_universe(*cert.family, cert.field);
  auto s = whole_scope(cert.field, cert.margin);
  VerificationReport rep;
  rep.kind = "exact-family";
  add_field_core(rep, s, cert.near);
  auto [support, tails] = tally_family(s, *cert.family, {});
  rep.conditions.push_back(
      make_condition("support", "d(x, fiber(w)) over supp xi_x", support, SurdSum(cert.S), *s.space));
  rep.extra = base_details(s, cert.near, cert.margin);
  rep.extra["S"] = to_string(cert.S);
  return rep;
}

VerificationReport verify(const SEFamilyCert& cert) {
  require_vector_form(cert.near);
  check_profile(cert.tails, "tail profile");
  check_family_universe(*cert.family, cert.field);
  auto s = whole_scope(cert.field, cert.margin);
  VerificationReport rep;
  rep.kind = "se-family";
  add_field_core(rep, s, cert.near);
  auto [support, tails] = tally_family(s, *cert.family, cert.tails);
  for (std::size_t k = 0; k < cert.tails.size(); ++k) {
    rep.conditions.push_back(make_condition(entry_name("tail", cert.tails[k].S),
                                            "sum of xi_x(w)^2 over d(x, fiber(w)) > S", tails[k],
                                            SurdSum(cert.tails[k].delta), *s.space));
  }
  rep.extra = base_details(s, cert.near, cert.margin);
  rep.extra["support_radius"] = support.worst.value ? to_string(*support.worst.value) : "0";
  return rep;
}

VerificationReport verify(const EquiFamilyCert& cert) {
  require_vector_form(cert.near);
  const auto& family = *cert.family;
  const auto& domain = family.domain();
  if (cert.flavor != EquiFlavor::Exact) check_profile(cert.profile, "profile");
  if (cert.flavor == EquiFlavor::Strong && !cert.universe->located()) {
    throw DomainError("equi-strong certificates need a universe located in the domain");
  }
  std::vector<Index> covered;
  for (const auto& p : cert.pieces) {
    if (p.y >= family.universe_size()) throw DomainError("piece outside the family");
    if (p.vectors.size() != family.fiber(p.y).size()) throw DomainError("piece vectors do not match the fiber");
    covered.push_back(p.y);
  }
  std::sort(covered.begin(), covered.end());
  if (std::adjacent_find(covered.begin(), covered.end()) != covered.end()) {
    throw MalformedCertificate("piece listed twice");
  }

  Tally coverage, unit, near;
  std::size_t nprof = cert.flavor == EquiFlavor::Exact ? 1 : cert.profile.size();
  std::vector<Tally> cond(nprof);
  std::size_t valid_points = 0;
  std::vector<Rational> thresholds;
  if (cert.flavor == EquiFlavor::Exact) {
    thresholds.push_back(cert.S);
  } else if (cert.flavor == EquiFlavor::Coarse) {
    for (const auto& e : cert.profile) thresholds.push_back(e.S);
  }
  for (Index y = 0; y < family.universe_size(); ++y) {
    const auto& fib = family.fiber(y);
    if (fib.empty()) continue;
    const PieceField* piece = nullptr;
    for (const auto& p : cert.pieces) {
      if (p.y == y) piece = &p;
    }
    auto lookup = [&](Index x) -> const SparseVector* {
      if (!piece) return nullptr;
      auto it = std::lower_bound(fib.begin(), fib.end(), x);
      const auto& v = piece->vectors[static_cast<std::size_t>(it - fib.begin())];
      return v ? &*v : nullptr;
    };
    auto s = make_scope(domain, fib, cert.margin, lookup);
    valid_points += s.valid.size();
    coverage.merge(tally_coverage(s));
    unit.merge(tally_unit(s));
    near.merge(tally_near(s, cert.near));
    if (cert.flavor == EquiFlavor::Strong) {
      auto t = tally_located_tails(s, cert.profile);
      for (std::size_t k = 0; k < nprof; ++k) cond[k].merge(t[k]);
    } else {
      auto t = tally_far(s, thresholds, cert.universe->located());
      for (std::size_t k = 0; k < nprof; ++k) cond[k].merge(t[k]);
    }
  }

  VerificationReport rep;
  rep.kind = "equi-family";
  rep.conditions.push_back(
      make_condition("coverage", "valid points without a vector", coverage, SurdSum(Rational(0)), domain));
  rep.conditions.push_back(make_condition("unit_norm", "| ||v_x||^2 - 1 |", unit, SurdSum(Rational(0)), domain));
  rep.conditions.push_back(make_condition("near", near_quantity(cert.near), near, near_bound_value(cert.near), domain));
  if (cert.flavor == EquiFlavor::Exact) {
    rep.conditions.push_back(
        make_condition("orthogonality", "|<v_s, v_t>| at d >= S", cond[0], SurdSum(Rational(0)), domain));
  } else if (cert.flavor == EquiFlavor::Coarse) {
    for (std::size_t k = 0; k < nprof; ++k) {
      rep.conditions.push_back(make_condition(entry_name("decay", cert.profile[k].S), "|<v_s, v_t>| at d >= S",
                                              cond[k], SurdSum(cert.profile[k].delta), domain));
    }
  } else {
    for (std::size_t k = 0; k < nprof; ++k) {
      rep.conditions.push_back(make_condition(entry_name("tail", cert.profile[k].S),
                                              "sum_{w outside B_S(s) in the piece} v_s(w)^2", cond[k],
                                              SurdSum(cert.profile[k].delta), domain));
    }
  }
  rep.extra = {{"pieces", cert.pieces.size()},
               {"flavor", to_string(cert.flavor)},
               {"valid_points", valid_points},
               {"margin", to_string(cert.margin)},
               {"R", to_string(cert.near.R)},
               {"epsilon", to_string(cert.near.eps)},
               {"near_form", to_string(cert.near.form)}};
  if (cert.flavor == EquiFlavor::Exact) rep.extra["S"] = to_string(cert.S);
  return rep;
}

// ---------------------------------------------------------------- two-prime lemma

nlohmann::json TwoPrimeResult::to_json() const {
  nlohmann::json j{{"mixed_sup", to_string(mixed_sup)},
                   {"tail_sup", to_string(tail_sup)},
                   {"diagonal_equal", diagonal_equal},
                   {"sup_form", sup_form},
                   {"pair_sum_form", pair_sum_form},
                   {"pair_root_form", pair_root_form},
                   {"pairs", pairs}};
  if (!witness.empty()) j["witness"] = witness;
  if (!sum_form_violation.empty()) j["sum_form_violation"] = sum_form_violation;
  return j;
}

TwoPrimeResult verify_two_prime(const StrongEmbedCert& cert, const Rational& S) {
  if (!cert.field.universe->located()) throw DomainError("two-prime check needs a located universe");
  auto s = whole_scope(cert.field, cert.margin);
  const auto& space = *s.space;
  const auto n = s.valid.size();
  // per point: distances from x to every support location, and the tail
  struct PointData {
    std::vector<Rational> d;
    Rational tail{0};
    Rational reach{0};
  };
  auto data = parallel_map<PointData>(n, [&](std::size_t i) {
    PointData pd;
    auto x = s.valid[i];
    const auto& v = *s.vec(x);
    pd.d.reserve(v.size());
    for (std::size_t e = 0; e < v.size(); ++e) {
      auto d = space.dist(x, v.universe()->location(v.indices()[e]));
      if (d > S) pd.tail += v.coefs()[e].square();
      if (d > pd.reach) pd.reach = d;
      pd.d.push_back(d);
    }
    return pd;
  });
  struct Local {
    Worst mixed;
    bool diag = true;
    bool sum_form = true;
    bool root_form = true;
    std::optional<std::pair<Index, Index>> violation;
    std::uint64_t pairs = 0;
  };
  auto per = parallel_map<Local>(n, [&](std::size_t i) {
    Local l;
    auto x = s.valid[i];
    const auto& u = *s.vec(x);
    for (std::size_t j = i; j < n; ++j) {
      auto y = s.valid[j];
      const auto& v = *s.vec(y);
      auto dxy = space.dist(x, y);
      ++l.pairs;
      SurdSum mixed;
      if (i == j || dxy <= data[i].reach + data[j].reach) {
        // allowed(k): location within S of both x and y
        const auto& ui = u.indices();
        const auto& vi = v.indices();
        std::size_t p = 0, q = 0;
        Rational rational(0);
        while (p < ui.size() && q < vi.size()) {
          if (ui[p] < vi[q]) {
            ++p;
          } else if (vi[q] < ui[p]) {
            ++q;
          } else {
            bool inside = data[i].d[p] <= S && data[j].d[q] <= S;
            if (!inside) {
              const auto& a = u.coefs()[p];
              const auto& b = v.coefs()[q];
              if (a.radicand() == b.radicand()) {
                rational += rational_abs(a.coef() * b.coef()) *
                            Rational(Integer(static_cast<std::int64_t>(a.radicand())));
              } else {
                mixed += (a * b).abs();
              }
            }
            ++p;
            ++q;
          }
        }
        mixed += SurdSum(rational);
      }
      if (i == j && mixed != SurdSum(data[i].tail)) l.diag = false;
      auto sum = data[i].tail + data[j].tail;
      if (compare(mixed, SurdSum(sum)) > 0) {
        l.sum_form = false;
        if (!l.violation) l.violation = std::make_pair(x, y);
      }
      SurdSum root = SurdSum(Surd::sqrt_of(data[i].tail)) + SurdSum(Surd::sqrt_of(data[j].tail));
      if (compare(mixed, root) > 0) l.root_form = false;
      l.mixed.offer(mixed, std::min(x, y), std::max(x, y), true, dxy);
    }
    return l;
  });
  TwoPrimeResult out;
  Worst mixed;
  std::optional<std::pair<Index, Index>> violation;
  for (const auto& l : per) {
    mixed.merge(l.mixed);
    out.diagonal_equal = out.diagonal_equal && l.diag;
    out.pair_sum_form = out.pair_sum_form && l.sum_form;
    out.pair_root_form = out.pair_root_form && l.root_form;
    if (!violation && l.violation) violation = l.violation;
    out.pairs += l.pairs;
  }
  for (const auto& pd : data) out.tail_sup = std::max(out.tail_sup, pd.tail);
  if (mixed.value) {
    out.mixed_sup = *mixed.value;
    out.witness = {space.label(mixed.a), space.label(mixed.b)};
  }
  out.sup_form = compare(out.mixed_sup, SurdSum(out.tail_sup + out.tail_sup)) <= 0;
  if (violation) out.sum_form_violation = {space.label(violation->first), space.label(violation->second)};
  return out;
}

}  // namespace coarse
