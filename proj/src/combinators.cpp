#include "coarse/combinators.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "coarse/errors.hpp"
#include "coarse/parallel.hpp"
#include "coarse/verify.hpp"

namespace coarse {

namespace {

std::vector<Index> valid_points(const UnitField& f, const Rational& margin) {
  std::vector<Index> out;
  for (Index x = 0; x < f.space->size(); ++x) {
    if (f.at(x) && f.space->valid_at(x, margin)) out.push_back(x);
  }
  return out;
}

/// A rational r >= sqrt(q), to six decimals.
Rational sqrt_upper(const SurdSum& q) {
  const std::int64_t scale = 1'000'000;
  auto approx = std::sqrt(std::max(0.0, q.approx()));
  Rational r(Integer(static_cast<std::int64_t>(std::ceil(approx * scale))), Integer(scale));
  while (compare(SurdSum(r * r), q) < 0) r += Rational(Integer(1), Integer(scale));
  return r;
}

/// A rational >= q, exact when q is rational.
Rational rational_upper(const SurdSum& q) {
  if (q.is_rational()) return q.rational_part();
  return q.upper_bound(6);
}

void require_pass(const VerificationReport& rep, const std::string& what) {
  if (rep.pass()) return;
  std::string failing;
  for (const auto& c : rep.conditions) {
    if (!c.pass()) failing += (failing.empty() ? "" : ", ") + c.name;
  }
  throw ParameterMismatch(what + " fails verification (" + failing + "); refused");
}

}  // namespace

// ---------------------------------------------------------------- measurements

std::optional<SurdSum> measure_near_inner(const UnitField& field, const Rational& margin, const Rational& R) {
  auto pts = valid_points(field, margin);
  std::vector<char> ok(field.space->size(), 0);
  for (auto x : pts) ok[x] = 1;
  auto per = parallel_map<std::optional<SurdSum>>(pts.size(), [&](std::size_t i) {
    std::optional<SurdSum> best;
    auto x = pts[i];
    for (auto y : field.space->ball(x, R)) {
      if (y <= x || !ok[y]) continue;
      auto q = (SurdSum(Rational(1)) - inner(*field.at(x), *field.at(y))).abs();
      if (!best || compare(q, *best) > 0) best = q;
    }
    return best;
  });
  std::optional<SurdSum> out;
  for (auto& b : per) {
    if (b && (!out || compare(*b, *out) > 0)) out = *b;
  }
  return out;
}

Rational measure_orthogonality_radius(const UnitField& field, const Rational& margin) {
  auto pts = valid_points(field, margin);
  const auto& space = *field.space;
  bool located = field.universe->located();
  std::vector<Rational> reach(pts.size(), Rational(0));
  if (located) {
    parallel_for(pts.size(), [&](std::size_t i) { reach[i] = location_radius(space, pts[i], *field.at(pts[i])); });
  }
  auto per = parallel_map<Rational>(pts.size(), [&](std::size_t i) {
    Rational best(0);
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      auto d = space.dist(pts[i], pts[j]);
      if (d <= best) continue;
      if (located && d > reach[i] + reach[j]) continue;
      if (!inner(*field.at(pts[i]), *field.at(pts[j])).is_zero()) best = d;
    }
    return best;
  });
  Rational best(0);
  for (const auto& b : per) best = std::max(best, b);
  return best + Rational(1);
}

std::vector<Rational> measure_tails(const UnitField& field, const Rational& margin, const std::vector<Rational>& radii) {
  if (!field.universe->located()) throw DomainError("tails need a universe located in the space");
  auto pts = valid_points(field, margin);
  auto per = parallel_map<std::vector<Rational>>(pts.size(), [&](std::size_t i) {
    auto x = pts[i];
    const auto& v = *field.at(x);
    std::vector<Rational> t(radii.size(), Rational(0));
    for (std::size_t e = 0; e < v.size(); ++e) {
      auto d = field.space->dist(x, field.universe->location(v.indices()[e]));
      auto sq = v.coefs()[e].square();
      for (std::size_t k = 0; k < radii.size(); ++k) {
        if (d > radii[k]) t[k] += sq;
      }
    }
    return t;
  });
  std::vector<Rational> out(radii.size(), Rational(0));
  for (const auto& t : per) {
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::max(out[k], t[k]);
  }
  return out;
}

// ---------------------------------------------------------------- conversions

PropAVectorCert sets_to_vector(const PropASetCert& cert) {
  require_pass(verify(cert), "set certificate");
  const auto& space = *cert.space;
  std::set<std::pair<Index, std::int64_t>> used;
  for (Index x = 0; x < space.size(); ++x) {
    if (!cert.sets[x] || !space.valid_at(x, cert.margin)) continue;
    used.insert(cert.sets[x]->begin(), cert.sets[x]->end());
  }
  std::vector<std::pair<Index, std::int64_t>> order(used.begin(), used.end());
  std::vector<std::string> labels;
  std::vector<Index> loc;
  for (const auto& [y, n] : order) {
    labels.push_back(space.label(y) + "#" + std::to_string(n));
    loc.push_back(y);
  }
  auto universe = std::make_shared<Universe>("XxN", std::move(labels), std::move(loc));

  PropAVectorCert out;
  out.field.space = cert.space;
  out.field.universe = universe;
  out.field.vectors.resize(space.size());
  parallel_for(space.size(), [&](std::size_t x) {
    if (!cert.sets[x] || !space.valid_at(static_cast<Index>(x), cert.margin)) return;
    std::vector<Index> support;
    for (const auto& p : *cert.sets[x]) {
      support.push_back(static_cast<Index>(std::lower_bound(order.begin(), order.end(), p) - order.begin()));
    }
    out.field.vectors[x] = normalized_indicator(universe, std::move(support));
  });
  out.margin = cert.margin;
  out.support_radius = cert.S;

  auto near = measure_near_inner(out.field, cert.margin, cert.R);
  out.near = {cert.R, near ? rational_upper(*near) : Rational(0), NearForm::Inner};
  Rational analytic = cert.S + cert.S + Rational(1);
  auto measured = measure_orthogonality_radius(out.field, cert.margin);
  out.S = std::min(analytic, measured);
  out.provenance = {{"construction", "sets-to-vector"},
                    {"set_epsilon", to_string(cert.eps)},
                    {"epsilon_measured", near ? to_string(*near) : "0"},
                    {"S_analytic", to_string(analytic)},
                    {"S_measured", to_string(measured)},
                    {"input", cert.provenance}};
  return out;
}

StrongEmbedCert prop_a_to_strong(const PropAVectorCert& cert) {
  if (!cert.field.universe->located()) throw DomainError("property A field is not located in the space; refused");
  Rational radius(0);
  if (cert.support_radius) {
    radius = *cert.support_radius;
  } else {
    for (auto x : valid_points(cert.field, cert.margin)) {
      radius = std::max(radius, location_radius(*cert.field.space, x, *cert.field.at(x)));
    }
  }
  StrongEmbedCert out;
  out.near = cert.near;
  out.tails = {{radius, Rational(0)}};
  out.margin = cert.margin;
  out.field = cert.field;
  out.provenance = {{"construction", "prop-a-to-strong"}, {"input", cert.provenance}};
  return out;
}

CoarseWitness strong_to_coarse(const StrongEmbedCert& cert) {
  CoarseWitness out;
  out.near = cert.near;
  out.margin = cert.margin;
  out.field = cert.field;
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : cert.tails) {
    Rational bound(0);
    if (e.delta != 0) {
      auto two_root = SurdSum(Surd::sqrt_of(e.delta)) + SurdSum(Surd::sqrt_of(e.delta));
      bound = std::min(Rational(1), rational_upper(two_root));
    }
    out.decay.push_back({e.S + e.S + Rational(1), bound});
  }
  auto rep = verify(out);
  for (std::size_t k = 0; k < out.decay.size(); ++k) {
    auto& e = out.decay[k];
    const auto* c = rep.find("decay@" + to_string(e.S));
    nlohmann::json entry{{"S", to_string(e.S)}, {"analytic", to_string(e.delta)}};
    if (c && c->worst) {
      auto measured = rational_upper(*c->worst);
      entry["measured"] = to_string(*c->worst);
      e.delta = std::min(e.delta, measured);
    }
    entries.push_back(entry);
  }
  out.provenance = {{"construction", "strong-to-coarse"}, {"decay", entries}, {"input", cert.provenance}};
  return out;
}

namespace {

/// Reindex a field over a located universe onto l^2(X) when locations are injective.
UnitField reindex_onto_points(const UnitField& field) {
  const auto& u = *field.universe;
  if (!u.located()) throw DomainError("field universe is not located in the space");
  std::vector<char> seen(field.space->size(), 0);
  for (auto l : u.locations()) {
    if (seen[l]) throw DomainError("field universe has two indices at one point");
    seen[l] = 1;
  }
  UnitField out;
  out.space = field.space;
  out.universe = point_universe(*field.space);
  out.vectors.resize(field.vectors.size());
  for (std::size_t x = 0; x < field.vectors.size(); ++x) {
    if (!field.vectors[x]) continue;
    std::vector<std::pair<Index, Surd>> entries;
    const auto& v = *field.vectors[x];
    for (std::size_t e = 0; e < v.size(); ++e) entries.emplace_back(u.location(v.indices()[e]), v.coefs()[e]);
    out.vectors[x] = SparseVector(out.universe, std::move(entries));
  }
  return out;
}

}  // namespace

ExactFamilyCert as_identity_family(const PropAVectorCert& cert) {
  ExactFamilyCert out;
  out.family = identity_family(cert.field.space);
  out.near = cert.near;
  out.margin = cert.margin;
  out.field = reindex_onto_points(cert.field);
  if (cert.support_radius) {
    out.S = *cert.support_radius;
  } else {
    for (auto x : valid_points(out.field, out.margin)) {
      out.S = std::max(out.S, location_radius(*out.field.space, x, *out.field.at(x)));
    }
  }
  out.provenance = {{"construction", "identity-family"}, {"input", cert.provenance}};
  return out;
}

SEFamilyCert as_identity_family(const StrongEmbedCert& cert) {
  SEFamilyCert out;
  out.family = identity_family(cert.field.space);
  out.near = cert.near;
  out.tails = cert.tails;
  out.margin = cert.margin;
  out.field = reindex_onto_points(cert.field);
  out.provenance = {{"construction", "identity-family"}, {"input", cert.provenance}};
  return out;
}

std::optional<ExactFamilyCert> se_to_exact(const SEFamilyCert& cert) {
  for (const auto& e : cert.tails) {
    if (e.delta != 0) continue;
    ExactFamilyCert out;
    out.family = cert.family;
    out.near = cert.near;
    out.S = e.S;
    out.margin = cert.margin;
    out.field = cert.field;
    out.provenance = {{"construction", "se-to-exact"}, {"input", cert.provenance}};
    return out;
  }
  return std::nullopt;
}

SEFamilyCert exact_to_se(const ExactFamilyCert& cert) {
  SEFamilyCert out;
  out.family = cert.family;
  out.near = cert.near;
  out.tails = {{cert.S, Rational(0)}};
  out.margin = cert.margin;
  out.field = cert.field;
  out.provenance = {{"construction", "exact-to-se"}, {"input", cert.provenance}};
  return out;
}

// ---------------------------------------------------------------- negotiation

std::string to_string(Negotiation mode) { return mode == Negotiation::Analytic ? "analytic" : "realized"; }

Negotiation parse_negotiation(const std::string& text) {
  if (text == "analytic") return Negotiation::Analytic;
  if (text == "realized") return Negotiation::Realized;
  throw DomainError("unknown negotiation mode '" + text + "'");
}

nlohmann::json Stage::to_json() const {
  return {{"name", name},
          {"inequality", inequality},
          {"value", coarse::to_string(value)},
          {"bound", coarse::to_string(bound)},
          {"pass", pass()}};
}

// ---------------------------------------------------------------- gluing

namespace {

struct OuterTerm {
  Index w;
  Index eta;
  Rational d;  // d(x, fiber(w))
  Surd alpha;
};

struct Glued {
  UnitField field;
  Rational margin{0};
  std::vector<Index> points;                 // output-valid points
  std::vector<std::vector<OuterTerm>> terms;  // aligned with `points`
  std::vector<std::int64_t> row;              // domain point -> position in points, -1 if absent
};

void check_families(const SetMapFamily& a, const SetMapFamily& b) {
  if (&a == &b) return;
  if (a.universe_size() != b.universe_size() || a.descriptor() != b.descriptor() ||
      a.domain().size() != b.domain().size()) {
    throw DomainError("outer and fiber certificates are over different families");
  }
}

Glued glue(const SetMapFamily& family, const UnitField& outer, const Rational& outer_margin,
           const EquiFamilyCert& fibers) {
  check_families(family, *fibers.family);
  if (outer.universe->size() != family.universe_size()) {
    throw DomainError("outer field universe is not the disjoint union of the codomains");
  }
  const auto& space = family.domain();
  std::vector<std::int64_t> piece_of(family.universe_size(), -1);
  for (std::size_t p = 0; p < fibers.pieces.size(); ++p) piece_of[fibers.pieces[p].y] = static_cast<std::int64_t>(p);

  struct PerPoint {
    bool candidate = false;
    bool deficient = false;
    std::vector<OuterTerm> terms;
  };
  auto per = parallel_map<PerPoint>(space.size(), [&](std::size_t xi) {
    PerPoint pp;
    auto x = static_cast<Index>(xi);
    const auto* a = outer.at(x);
    if (!a || !space.valid_at(x, outer_margin)) return pp;
    pp.candidate = true;
    for (std::size_t e = 0; e < a->size(); ++e) {
      auto w = a->indices()[e];
      if (family.fiber(w).empty() || piece_of[w] < 0) {
        pp.deficient = true;
        break;
      }
      auto [s, d] = family.nearest_in_fiber(x, w);
      if (!fibers.at(w, s) || !space.valid_at(s, fibers.margin)) {
        pp.deficient = true;
        break;
      }
      pp.terms.push_back({w, s, d, a->coefs()[e]});
    }
    return pp;
  });

  Glued g;
  g.margin = std::max(outer_margin, fibers.margin);
  for (Index x = 0; x < space.size(); ++x) {
    if (!per[x].candidate || !per[x].deficient) continue;
    const auto& r = space.validity(x);
    if (!r) throw TruncationError("fiber vectors missing at '" + space.label(x) + "' although its ball is complete");
    g.margin = std::max(g.margin, *r + Rational(1));
  }
  g.row.assign(space.size(), -1);
  for (Index x = 0; x < space.size(); ++x) {
    if (!per[x].candidate || !space.valid_at(x, g.margin)) continue;
    if (per[x].deficient) throw TruncationError("fiber vectors missing at '" + space.label(x) + "'");
    g.row[x] = static_cast<std::int64_t>(g.points.size());
    g.points.push_back(x);
    g.terms.push_back(std::move(per[x].terms));
  }

  // universe: the (w, u) pairs actually used
  std::set<std::pair<Index, Index>> used;
  for (const auto& terms : g.terms) {
    for (const auto& t : terms) {
      for (auto u : fibers.at(t.w, t.eta)->indices()) used.emplace(t.w, u);
    }
  }
  std::vector<std::pair<Index, Index>> order(used.begin(), used.end());
  const auto& fu = *fibers.universe;
  std::vector<std::string> labels;
  std::vector<Index> loc;
  labels.reserve(order.size());
  for (const auto& [w, u] : order) {
    labels.push_back(family.universe_labels()[w] + "|" + fu.label(u));
    if (fu.located()) loc.push_back(fu.location(u));
  }
  auto universe = std::make_shared<Universe>("glued", std::move(labels), std::move(loc));

  g.field.space = family.domain_ptr();
  g.field.universe = universe;
  g.field.vectors.resize(space.size());
  parallel_for(g.points.size(), [&](std::size_t i) {
    std::vector<std::pair<Index, Surd>> entries;
    for (const auto& t : g.terms[i]) {
      const auto& b = *fibers.at(t.w, t.eta);
      for (std::size_t e = 0; e < b.size(); ++e) {
        auto k = std::lower_bound(order.begin(), order.end(), std::make_pair(t.w, b.indices()[e])) - order.begin();
        entries.emplace_back(static_cast<Index>(k), t.alpha * b.coefs()[e]);
      }
    }
    g.field.vectors[g.points[i]] = SparseVector(universe, std::move(entries));
  });
  return g;
}

/// Quantities of the gluing argument measured over output-valid pairs at distance <= R.
struct NearMeasures {
  std::optional<SurdSum> outer;  // |1 - <alpha_x, alpha_y>|
  std::optional<SurdSum> fiber;  // |1 - <beta(eta(x,w)), beta(eta(y,w))>| over good w
  std::optional<SurdSum> mixed;  // sum over bad w of |alpha_x(w) alpha_y(w)|
  Rational fiber_range{0};       // max d(eta(x,w), eta(y,w)) over good w
};

void keep_max(std::optional<SurdSum>& acc, const SurdSum& v) {
  if (!acc || compare(v, *acc) > 0) acc = v;
}

NearMeasures measure_glue(const Glued& g, const UnitField& outer, const EquiFamilyCert& fibers, const Rational& R,
                          const std::optional<Rational>& good_radius) {
  const auto& space = *g.field.space;
  auto per = parallel_map<NearMeasures>(g.points.size(), [&](std::size_t i) {
    NearMeasures m;
    auto x = g.points[i];
    for (auto y : space.ball(x, R)) {
      if (y <= x || g.row[y] < 0) continue;
      const auto& tx = g.terms[i];
      const auto& ty = g.terms[static_cast<std::size_t>(g.row[y])];
      keep_max(m.outer, (SurdSum(Rational(1)) - inner(*outer.at(x), *outer.at(y))).abs());
      SurdSum mixed;
      std::size_t p = 0, q = 0;
      while (p < tx.size() && q < ty.size()) {
        if (tx[p].w < ty[q].w) {
          ++p;
        } else if (ty[q].w < tx[p].w) {
          ++q;
        } else {
          const auto& a = tx[p];
          const auto& b = ty[q];
          bool good = !good_radius || (a.d <= *good_radius && b.d <= *good_radius);
          if (good) {
            auto v = (SurdSum(Rational(1)) - inner(*fibers.at(a.w, a.eta), *fibers.at(b.w, b.eta))).abs();
            keep_max(m.fiber, v);
            m.fiber_range = std::max(m.fiber_range, space.dist(a.eta, b.eta));
          } else {
            mixed += (a.alpha * b.alpha).abs();
          }
          ++p;
          ++q;
        }
      }
      keep_max(m.mixed, mixed);
    }
    return m;
  });
  NearMeasures out;
  for (const auto& m : per) {
    if (m.outer) keep_max(out.outer, *m.outer);
    if (m.fiber) keep_max(out.fiber, *m.fiber);
    if (m.mixed) keep_max(out.mixed, *m.mixed);
    out.fiber_range = std::max(out.fiber_range, m.fiber_range);
  }
  return out;
}

SurdSum or_zero(const std::optional<SurdSum>& v) { return v ? *v : SurdSum(); }

void enforce(const std::vector<Stage>& stages, const std::string& construction) {
  std::string failing;
  for (const auto& s : stages) {
    if (s.pass()) continue;
    failing += "\n  " + s.name + ": " + s.inequality + " violated (" + to_string(s.value) + " > " + to_string(s.bound) + ")";
  }
  if (!failing.empty()) throw ParameterMismatch(construction + ": sub-certificates do not support the targets" + failing);
}

nlohmann::json stages_json(const std::vector<Stage>& stages) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : stages) out.push_back(s.to_json());
  return out;
}

/// Smallest profile radius whose bound satisfies pred.
template <class Pred>
std::optional<ProfileEntry> first_entry(const Profile& p, Pred pred) {
  for (const auto& e : p) {
    if (pred(e)) return e;
  }
  return std::nullopt;
}

nlohmann::json targets_json(const CombineTargets& t) {
  return {{"R", to_string(t.R)}, {"epsilon", to_string(t.eps)}, {"delta", to_string(t.delta)},
          {"negotiation", to_string(t.mode)}};
}

}  // namespace

PropAVectorCert combine_exact(const ExactFamilyCert& outer, const EquiFamilyCert& fibers,
                              const CombineTargets& targets) {
  if (fibers.flavor != EquiFlavor::Exact) throw DomainError("combine_exact needs equi-exact fibers");
  const Rational half = targets.eps / Rational(2);
  const auto& SX = outer.S;
  const auto& SY = fibers.S;
  auto g = glue(*outer.family, outer.field, outer.margin, fibers);
  auto m = measure_glue(g, outer.field, fibers, targets.R, std::nullopt);

  std::vector<Stage> declared{
      {"outer-range", "R <= R_outer", SurdSum(targets.R), outer.near.R},
      {"outer-near", "outer |1 - <alpha_x, alpha_y>| <= eps/2", SurdSum(inner_equivalent(outer.near)), half},
      {"fiber-range", "2 S_X + R <= fiber near-range", SurdSum(SX + SX + targets.R), fibers.near.R},
      {"fiber-near", "fiber |1 - <beta_s, beta_t>| <= eps/2", SurdSum(inner_equivalent(fibers.near)), half}};
  std::vector<Stage> realized{
      {"outer-near", "measured outer |1 - <alpha_x, alpha_y>| <= eps/2", or_zero(m.outer), half},
      {"fiber-near", "measured fiber |1 - <beta(eta(x,w)), beta(eta(y,w))>| <= eps/2", or_zero(m.fiber), half}};
  enforce(targets.mode == Negotiation::Analytic ? declared : realized, "combine_exact");

  PropAVectorCert out;
  out.field = g.field;
  out.margin = g.margin;
  Rational threshold = SX + SX + SY;
  auto near = measure_near_inner(out.field, out.margin, targets.R);
  auto orth = measure_orthogonality_radius(out.field, out.margin);
  out.near = {targets.R, std::min(targets.eps, near ? rational_upper(*near) : Rational(0)), NearForm::Inner};
  // S_Y = 0 only separates distinct fiber points, so the threshold is strict there
  out.S = SY > Rational(0) ? std::min(threshold, orth) : orth;
  out.provenance = {{"construction", "combine-exact"},
                    {"targets", targets_json(targets)},
                    {"S_X", to_string(SX)},
                    {"S_Y", to_string(SY)},
                    {"threshold", to_string(threshold)},
                    {"declared", stages_json(declared)},
                    {"realized", stages_json(realized)},
                    {"realized_fiber_range", to_string(m.fiber_range)},
                    {"epsilon_measured", near ? to_string(*near) : "0"},
                    {"S_measured", to_string(orth)},
                    {"margin", to_string(out.margin)},
                    {"outer", outer.provenance},
                    {"fibers", fibers.provenance}};
  return out;
}

namespace {

struct SeSplit {
  Rational SX{0};
  Rational SXp{0};
  std::vector<Stage> declared;
  std::vector<Stage> realized;
  NearMeasures near;
  Glued glued;
};

/// Near-side bookkeeping shared by the coarse and strong combinations:
/// |1 - <xi_x, xi_y>| <= outer near + fiber near on good w + 2 * mixed tail on bad w.
SeSplit split_near(const SEFamilyCert& outer, const EquiFamilyCert& fibers, const Rational& R, const Rational& eps_inner,
                   Negotiation mode, const std::string& construction) {
  for (std::size_t k = 1; k < outer.tails.size(); ++k) {
    if (outer.tails[k].delta > outer.tails[k - 1].delta) throw MalformedCertificate("outer tail profile is not nonincreasing");
  }
  const Rational third = eps_inner / Rational(3);
  const Rational sixth = eps_inner / Rational(6);
  SeSplit s;
  s.glued = glue(*outer.family, outer.field, outer.margin, fibers);

  std::optional<ProfileEntry> sx;
  if (mode == Negotiation::Analytic) {
    sx = first_entry(outer.tails, [&](const ProfileEntry& e) { return e.delta + e.delta <= sixth; });
    if (!sx) throw ParameterMismatch(construction + ": no outer tail entry with 2 delta <= eps/6");
    s.SX = sx->S;
    s.near = measure_glue(s.glued, outer.field, fibers, R, s.SX);
  } else {
    for (const auto& e : outer.tails) {
      auto m = measure_glue(s.glued, outer.field, fibers, R, e.S);
      if (compare(or_zero(m.mixed), SurdSum(sixth)) <= 0) {
        sx = e;
        s.near = m;
        break;
      }
    }
    if (!sx) throw ParameterMismatch(construction + ": no outer tail radius with measured mixed tail <= eps/6");
    s.SX = sx->S;
  }
  s.declared = {
      {"outer-range", "R <= R_outer", SurdSum(R), outer.near.R},
      {"outer-near", "outer |1 - <alpha_x, alpha_y>| <= eps/3", SurdSum(inner_equivalent(outer.near)), third},
      {"fiber-range", "2 S_X + R <= fiber near-range", SurdSum(s.SX + s.SX + R), fibers.near.R},
      {"fiber-near", "fiber |1 - <beta_s, beta_t>| <= eps/3", SurdSum(inner_equivalent(fibers.near)), third},
      {"outer-mixed-tail", "2 delta_X(S_X) <= eps/6", SurdSum(sx->delta + sx->delta), sixth}};
  s.realized = {
      {"outer-near", "measured outer |1 - <alpha_x, alpha_y>| <= eps/3", or_zero(s.near.outer), third},
      {"fiber-near", "measured fiber |1 - <beta(eta(x,w)), beta(eta(y,w))>| <= eps/3", or_zero(s.near.fiber), third},
      {"outer-mixed-tail", "measured mixed outer tail at S_X <= eps/6", or_zero(s.near.mixed), sixth}};
  return s;
}

}  // namespace

CoarseWitness combine_se_coarse(const SEFamilyCert& outer, const EquiFamilyCert& fibers,
                                const CombineTargets& targets) {
  if (fibers.flavor != EquiFlavor::Coarse) throw DomainError("combine_se_coarse needs equi-coarse fibers");
  auto s = split_near(outer, fibers, targets.R, targets.eps, targets.mode, "combine_se_coarse");
  const Rational half_delta = targets.delta / Rational(2);

  auto sy = first_entry(fibers.profile, [&](const ProfileEntry& e) { return e.delta <= half_delta; });
  if (!sy) throw ParameterMismatch("combine_se_coarse: no fiber decay entry with delta <= delta/2");
  std::optional<ProfileEntry> sxp;
  Rational far_mixed(0);
  if (targets.mode == Negotiation::Analytic) {
    sxp = first_entry(outer.tails, [&](const ProfileEntry& e) { return e.delta + e.delta <= half_delta; });
    if (!sxp) throw ParameterMismatch("combine_se_coarse: no outer tail entry with 2 delta <= delta/2");
  } else {
    std::vector<Rational> radii;
    for (const auto& e : outer.tails) radii.push_back(e.S);
    // measured over the output-valid points, through the outer family's fibers
    UnitField restricted = outer.field;
    for (Index x = 0; x < restricted.vectors.size(); ++x) {
      if (s.glued.row[x] < 0) restricted.vectors[x].reset();
    }
    SEFamilyCert probe = outer;
    probe.field = restricted;
    probe.margin = s.glued.margin;
    auto rep = verify(probe);
    for (const auto& e : outer.tails) {
      const auto* c = rep.find("tail@" + to_string(e.S));
      Rational t = c && c->worst ? rational_upper(*c->worst) : Rational(0);
      if (t + t <= half_delta) {
        sxp = e;
        far_mixed = t + t;
        break;
      }
    }
    if (!sxp) throw ParameterMismatch("combine_se_coarse: no outer tail radius with measured 2 tail <= delta/2");
  }
  auto declared = s.declared;
  declared.push_back({"fiber-decay", "fiber |<beta_s, beta_t>| <= delta/2 beyond S_Y", SurdSum(sy->delta), half_delta});
  declared.push_back({"outer-far-tail", "2 delta_X(S'_X) <= delta/2", SurdSum(sxp->delta + sxp->delta), half_delta});
  auto realized = s.realized;
  realized.push_back({"fiber-decay", "fiber |<beta_s, beta_t>| <= delta/2 beyond S_Y", SurdSum(sy->delta), half_delta});
  realized.push_back({"outer-far-tail", "measured 2 sup tail at S'_X <= delta/2", SurdSum(far_mixed), half_delta});
  enforce(targets.mode == Negotiation::Analytic ? declared : realized, "combine_se_coarse");

  CoarseWitness out;
  out.field = s.glued.field;
  out.margin = s.glued.margin;
  Rational threshold = sxp->S + sxp->S + sy->S;
  auto near = measure_near_inner(out.field, out.margin, targets.R);
  out.near = {targets.R, std::min(targets.eps, near ? rational_upper(*near) : Rational(0)), NearForm::Inner};
  out.decay = {{threshold, targets.delta}};
  auto rep = verify(out);
  const auto* far = rep.find("decay@" + to_string(threshold));
  std::string far_measured = "0";
  if (far && far->worst) {
    far_measured = to_string(*far->worst);
    out.decay[0].delta = std::min(targets.delta, rational_upper(*far->worst));
  } else {
    out.decay[0].delta = Rational(0);
  }
  out.provenance = {{"construction", "combine-se-coarse"},
                    {"targets", targets_json(targets)},
                    {"S_X", to_string(s.SX)},
                    {"S'_X", to_string(sxp->S)},
                    {"S_Y", to_string(sy->S)},
                    {"threshold", to_string(threshold)},
                    {"declared", stages_json(declared)},
                    {"realized", stages_json(realized)},
                    {"realized_fiber_range", to_string(s.near.fiber_range)},
                    {"epsilon_measured", near ? to_string(*near) : "0"},
                    {"far_measured", far_measured},
                    {"margin", to_string(out.margin)},
                    {"outer", outer.provenance},
                    {"fibers", fibers.provenance}};
  return out;
}

StrongEmbedCert combine_se_strong(const SEFamilyCert& outer, const EquiFamilyCert& fibers,
                                  const CombineTargets& targets) {
  if (fibers.flavor != EquiFlavor::Strong) throw DomainError("combine_se_strong needs equi-strong fibers");
  if (!fibers.universe->located()) throw DomainError("fiber fields are not located in the domain; refused");
  // ||xi_x - xi_y|| <= eps  <=>  |1 - <xi_x, xi_y>| <= eps^2 / 2
  const Rational eps_inner = targets.eps * targets.eps / Rational(2);
  auto s = split_near(outer, fibers, targets.R, eps_inner, targets.mode, "combine_se_strong");
  enforce(targets.mode == Negotiation::Analytic ? s.declared : s.realized, "combine_se_strong");

  // tail outside B_{S + S'}(x) is at most delta_X(S) + delta_Y(S')
  std::map<Rational, Rational> analytic;
  for (const auto& a : outer.tails) {
    for (const auto& b : fibers.profile) {
      auto r = a.S + b.S;
      auto d = a.delta + b.delta;
      auto it = analytic.find(r);
      if (it == analytic.end() || d < it->second) analytic[r] = d;
    }
  }
  std::vector<Rational> radii;
  for (const auto& [r, d] : analytic) radii.push_back(r);

  StrongEmbedCert out;
  out.field = s.glued.field;
  out.margin = s.glued.margin;
  auto tails = measure_tails(out.field, out.margin, radii);
  nlohmann::json tail_log = nlohmann::json::array();
  for (std::size_t k = 0; k < radii.size(); ++k) {
    out.tails.push_back({radii[k], tails[k]});
    tail_log.push_back({{"S", to_string(radii[k])},
                        {"analytic", to_string(analytic[radii[k]])},
                        {"measured", to_string(tails[k])}});
  }
  UnitField& f = out.field;
  std::optional<SurdSum> worst_sq;
  {
    auto pts = valid_points(f, out.margin);
    std::vector<char> ok(f.space->size(), 0);
    for (auto x : pts) ok[x] = 1;
    auto per = parallel_map<std::optional<SurdSum>>(pts.size(), [&](std::size_t i) {
      std::optional<SurdSum> best;
      for (auto y : f.space->ball(pts[i], targets.R)) {
        if (y <= pts[i] || !ok[y]) continue;
        keep_max(best, dist_sq(*f.at(pts[i]), *f.at(y)));
      }
      return best;
    });
    for (const auto& b : per) {
      if (b) keep_max(worst_sq, *b);
    }
  }
  out.near = {targets.R, targets.eps, NearForm::Norm};
  if (worst_sq) out.near.eps = std::min(targets.eps, sqrt_upper(*worst_sq));
  out.provenance = {{"construction", "combine-se-strong"},
                    {"targets", targets_json(targets)},
                    {"S_X", to_string(s.SX)},
                    {"declared", stages_json(s.declared)},
                    {"realized", stages_json(s.realized)},
                    {"realized_fiber_range", to_string(s.near.fiber_range)},
                    {"norm_sq_measured", worst_sq ? to_string(*worst_sq) : "0"},
                    {"tails", tail_log},
                    {"margin", to_string(out.margin)},
                    {"outer", outer.provenance},
                    {"fibers", fibers.provenance}};
  return out;
}

}  // namespace coarse
