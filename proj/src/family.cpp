#include "coarse/family.hpp"

#include <algorithm>

#include "coarse/errors.hpp"
#include "coarse/parallel.hpp"

namespace coarse {

SetMapFamily::SetMapFamily(SpacePtr domain, std::vector<FamilyComponent> components, nlohmann::json descriptor)
    : domain_(std::move(domain)), components_(std::move(components)), descriptor_(std::move(descriptor)) {
  if (components_.empty()) throw DomainError("a family needs at least one map");
  bool tagged = components_.size() > 1;
  for (const auto& c : components_) {
    if (c.map.size() != domain_->size()) throw DomainError("map '" + c.name + "' is not total on the domain");
    offset_.push_back(labels_.size());
    for (const auto& w : c.codomain) labels_.push_back(tagged ? c.name + ":" + w : w);
    for (auto v : c.map) {
      if (v >= c.codomain.size()) throw DomainError("map '" + c.name + "' leaves its codomain");
    }
  }
  fibers_.assign(labels_.size(), {});
  for (std::size_t i = 0; i < components_.size(); ++i) {
    for (Index x = 0; x < domain_->size(); ++x) fibers_[image(i, x)].push_back(x);
  }
}

std::size_t SetMapFamily::component_of(Index y) const {
  auto it = std::upper_bound(offset_.begin(), offset_.end(), static_cast<std::size_t>(y));
  return static_cast<std::size_t>(it - offset_.begin()) - 1;
}

bool SetMapFamily::in_fiber(Index x, Index y) const { return image(component_of(y), x) == y; }

std::pair<Index, Rational> SetMapFamily::nearest_in_fiber(Index x, Index y) const {
  const auto& f = fibers_.at(y);
  if (f.empty()) throw DomainError("empty fiber over '" + labels_[y] + "'");
  if (in_fiber(x, y)) return {x, Rational(0)};
  Index best = f.front();
  Rational bd = domain_->dist(x, best);
  for (std::size_t k = 1; k < f.size(); ++k) {
    auto d = domain_->dist(x, f[k]);
    if (d < bd) {
      bd = d;
      best = f[k];
    }
  }
  return {best, bd};
}

Rational SetMapFamily::dist_to_fiber(Index x, Index y) const { return nearest_in_fiber(x, y).second; }

SpacePtr SetMapFamily::fiber_space(Index y) const {
  nlohmann::json d{{"kind", "fiber"}, {"fiber", labels_.at(y)}};
  return subspace(domain_, fibers_.at(y), d);
}

FamilyPtr identity_family(const SpacePtr& space) {
  FamilyComponent c{"id", space->labels(), {}};
  c.map.resize(space->size());
  for (Index x = 0; x < space->size(); ++x) c.map[x] = x;
  nlohmann::json d{{"kind", "identity"}, {"space", space_to_json(*space)}};
  return std::make_shared<SetMapFamily>(space, std::vector<FamilyComponent>{std::move(c)}, std::move(d));
}

FamilyPtr quotient_family(const SpacePtr& ball_space, const std::vector<CosetSpace>& quotients) {
  const auto& ball = ball_space->group_ball();
  if (!ball) throw DomainError("quotient families need a Cayley window as domain");
  std::vector<FamilyComponent> comps;
  nlohmann::json subs = nlohmann::json::array();
  for (std::size_t i = 0; i < quotients.size(); ++i) {
    const auto& q = quotients[i];
    if (q.ball.get() != ball.get() && q.ball->size() != ball->size()) {
      throw DomainError("coset space was built on a different window");
    }
    comps.push_back({"pi" + std::to_string(i + 1), q.space->labels(), q.coset_of});
    subs.push_back(q.subgroup->descriptor());
  }
  nlohmann::json d{{"kind", "quotient"},
                   {"group", ball->model().descriptor()},
                   {"radius", ball->radius()},
                   {"subgroups", subs}};
  return std::make_shared<SetMapFamily>(ball_space, std::move(comps), std::move(d));
}

FamilyPtr build_family(const nlohmann::json& j, const Caps& caps) {
  if (!j.is_object()) throw MalformedCertificate("family must be a JSON object");
  auto kind = j.value("kind", "");
  if (kind == "identity") return identity_family(build_space(j.at("space"), caps));
  if (kind == "quotient") {
    auto model = make_group(j.at("group"));
    int radius = j.at("radius").get<int>();
    if (radius > caps.max_radius) throw ResourceError("ball radius exceeds the configured cap");
    auto ball = std::make_shared<const GroupBall>(model, radius, caps.max_points);
    auto space = group_ball_space(ball);
    std::vector<CosetSpace> qs;
    for (const auto& s : j.at("subgroups")) qs.push_back(quotient_space(ball, make_subgroup(*model, s)));
    return quotient_family(space, qs);
  }
  if (kind == "explicit") {
    auto space = build_space(j.at("space"), caps);
    std::vector<FamilyComponent> comps;
    for (const auto& cj : j.at("components")) {
      FamilyComponent c;
      c.name = cj.at("name").get<std::string>();
      c.codomain = cj.at("codomain").get<std::vector<std::string>>();
      std::unordered_map<std::string, Index> cod;
      for (Index w = 0; w < c.codomain.size(); ++w) cod.emplace(c.codomain[w], w);
      c.map.assign(space->size(), 0);
      std::vector<bool> seen(space->size(), false);
      for (const auto& [x, w] : cj.at("map").items()) {
        auto it = cod.find(w.get<std::string>());
        if (it == cod.end()) throw DomainError("map value '" + w.get<std::string>() + "' not in the codomain");
        auto xi = space->index(x);
        c.map[xi] = it->second;
        seen[xi] = true;
      }
      if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
        throw DomainError("map '" + c.name + "' is not total on the domain");
      }
      comps.push_back(std::move(c));
    }
    return std::make_shared<SetMapFamily>(space, std::move(comps), j);
  }
  throw MalformedCertificate("unknown family kind '" + kind + "'");
}

// ---------------------------------------------------------------- EtaSection

EtaSection::EtaSection(FamilyPtr family, const std::vector<Index>& points)
    : family_(std::move(family)), points_(points) {
  const auto ny = family_->universe_size();
  row_.assign(family_->domain().size(), -1);
  eta_.resize(points_.size() * ny);
  dist_.resize(points_.size() * ny);
  for (std::size_t r = 0; r < points_.size(); ++r) row_[points_[r]] = static_cast<std::int64_t>(r);
  parallel_for(points_.size(), [&](std::size_t r) {
    for (Index y = 0; y < ny; ++y) {
      if (family_->fiber(y).empty()) continue;
      auto [p, d] = family_->nearest_in_fiber(points_[r], y);
      eta_[r * ny + y] = p;
      dist_[r * ny + y] = d;
    }
  });
}

Index EtaSection::operator()(Index x, Index y) const {
  auto r = row_.at(x);
  if (r < 0) throw DomainError("eta section not tabulated at this point");
  return eta_[static_cast<std::size_t>(r) * family_->universe_size() + y];
}

const Rational& EtaSection::distance(Index x, Index y) const {
  auto r = row_.at(x);
  if (r < 0) throw DomainError("eta section not tabulated at this point");
  return dist_[static_cast<std::size_t>(r) * family_->universe_size() + y];
}

}  // namespace coarse
