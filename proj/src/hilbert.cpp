#include "coarse/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "coarse/errors.hpp"

namespace coarse {

Universe::Universe(std::string tag, std::vector<std::string> labels, std::vector<Index> location)
    : tag_(std::move(tag)), labels_(std::move(labels)), location_(std::move(location)) {
  if (!location_.empty() && location_.size() != labels_.size()) {
    throw DomainError("universe location list does not match its labels");
  }
  index_.reserve(labels_.size());
  for (Index k = 0; k < labels_.size(); ++k) {
    if (!index_.emplace(labels_[k], k).second) throw DomainError("duplicate universe label '" + labels_[k] + "'");
  }
}

std::optional<Index> Universe::find(const std::string& label) const {
  auto it = index_.find(label);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

UniversePtr point_universe(const FiniteMetricSpace& space, std::string tag) {
  std::vector<Index> loc(space.size());
  std::iota(loc.begin(), loc.end(), Index{0});
  return std::make_shared<Universe>(std::move(tag), space.labels(), std::move(loc));
}

SparseVector::SparseVector(UniversePtr universe, std::vector<std::pair<Index, Surd>> entries)
    : universe_(std::move(universe)) {
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  idx_.reserve(entries.size());
  coef_.reserve(entries.size());
  for (auto& [k, c] : entries) {
    if (k >= universe_->size()) throw DomainError("vector index outside its universe");
    if (!idx_.empty() && idx_.back() == k) throw DomainError("repeated vector index '" + universe_->label(k) + "'");
    if (c.is_zero()) continue;
    idx_.push_back(k);
    coef_.push_back(std::move(c));
  }
}

Rational SparseVector::norm_sq() const {
  Rational s(0);
  for (const auto& c : coef_) s += c.square();
  return s;
}

Surd SparseVector::at(Index k) const {
  auto it = std::lower_bound(idx_.begin(), idx_.end(), k);
  if (it == idx_.end() || *it != k) return {};
  return coef_[static_cast<std::size_t>(it - idx_.begin())];
}

SparseVector normalized_indicator(const UniversePtr& universe, std::vector<Index> support) {
  if (support.empty()) throw DomainError("indicator of an empty set cannot be normalized");
  auto c = Surd::sqrt_of(Rational(Integer(1), Integer(static_cast<std::int64_t>(support.size()))));
  std::vector<std::pair<Index, Surd>> entries;
  entries.reserve(support.size());
  for (auto k : support) entries.emplace_back(k, c);
  return SparseVector(universe, std::move(entries));
}

namespace {

void require_same(const SparseVector& u, const SparseVector& v) {
  if (u.universe() == v.universe()) return;
  if (!u.universe() || !v.universe() || u.universe()->tag() != v.universe()->tag() ||
      u.universe()->size() != v.universe()->size()) {
    throw DomainError("vectors live in different universes");
  }
}

// Accumulates products of surds; rational products stay out of the map.
struct Accumulator {
  Rational rational{0};
  SurdSum rest;
  void add(const Surd& a, const Surd& b) {
    if (a.radicand() == b.radicand()) {
      rational += a.coef() * b.coef() * Rational(Integer(static_cast<std::int64_t>(a.radicand())));
    } else {
      rest += a * b;
    }
  }
  void add_abs(const Surd& a, const Surd& b) {
    if (a.radicand() == b.radicand()) {
      rational += rational_abs(a.coef() * b.coef()) * Rational(Integer(static_cast<std::int64_t>(a.radicand())));
    } else {
      rest += (a * b).abs();
    }
  }
  SurdSum result() const { return rest + SurdSum(rational); }
};

}  // namespace

SurdSum inner(const SparseVector& u, const SparseVector& v) {
  require_same(u, v);
  Accumulator acc;
  const auto& a = u.indices();
  const auto& b = v.indices();
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      acc.add(u.coefs()[i], v.coefs()[j]);
      ++i;
      ++j;
    }
  }
  return acc.result();
}

SurdSum dist_sq(const SparseVector& u, const SparseVector& v) {
  SurdSum out(u.norm_sq() + v.norm_sq());
  out -= inner(u, v) + inner(u, v);
  return out;
}

double dist_norm(const SparseVector& u, const SparseVector& v) { return std::sqrt(std::max(0.0, dist_sq(u, v).approx())); }

Rational tail_mass(const SparseVector& u, const std::function<bool(Index)>& allowed) {
  Rational s(0);
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!allowed(u.indices()[i])) s += u.coefs()[i].square();
  }
  return s;
}

SurdSum mixed_tail(const SparseVector& u, const SparseVector& v, const std::function<bool(Index)>& allowed) {
  require_same(u, v);
  Accumulator acc;
  const auto& a = u.indices();
  const auto& b = v.indices();
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      if (!allowed(a[i])) acc.add_abs(u.coefs()[i], v.coefs()[j]);
      ++i;
      ++j;
    }
  }
  return acc.result();
}

// ---------------------------------------------------------------- JSON

nlohmann::json universe_to_json(const Universe& u, const FiniteMetricSpace* located_in) {
  nlohmann::json out{{"tag", u.tag()}, {"labels", u.labels()}};
  if (u.located()) {
    if (!located_in) throw DomainError("located universe needs its space for serialization");
    nlohmann::json loc = nlohmann::json::array();
    for (auto l : u.locations()) loc.push_back(located_in->label(l));
    out["location"] = loc;
  }
  return out;
}

UniversePtr universe_from_json(const nlohmann::json& j, const FiniteMetricSpace* located_in) {
  if (!j.is_object()) throw MalformedCertificate("universe must be a JSON object");
  auto tag = j.at("tag").get<std::string>();
  auto labels = j.at("labels").get<std::vector<std::string>>();
  std::vector<Index> loc;
  if (j.contains("location") && !j.at("location").is_null()) {
    if (!located_in) throw MalformedCertificate("located universe without a space");
    const auto& lj = j.at("location");
    if (lj.size() != labels.size()) throw MalformedCertificate("universe location list has the wrong length");
    loc.reserve(labels.size());
    for (const auto& l : lj) loc.push_back(located_in->index(l.get<std::string>()));
  }
  return std::make_shared<Universe>(std::move(tag), std::move(labels), std::move(loc));
}

nlohmann::json vector_to_json(const SparseVector& v) {
  nlohmann::json entries = nlohmann::json::object();
  for (std::size_t i = 0; i < v.size(); ++i) entries[v.universe()->label(v.indices()[i])] = to_string(v.coefs()[i]);
  return {{"universe", v.universe()->tag()}, {"entries", entries}};
}

SparseVector vector_from_json(const nlohmann::json& j, const UniversePtr& universe) {
  if (!j.is_object() || !j.contains("entries")) throw MalformedCertificate("vector needs \"entries\"");
  if (j.contains("universe") && j.at("universe").get<std::string>() != universe->tag()) {
    throw DomainError("vector universe '" + j.at("universe").get<std::string>() + "' does not match '" +
                      universe->tag() + "'");
  }
  std::vector<std::pair<Index, Surd>> entries;
  for (const auto& [label, coef] : j.at("entries").items()) {
    auto k = universe->find(label);
    if (!k) throw DomainError("unknown universe label '" + label + "'");
    entries.emplace_back(*k, parse_surd(coef.get<std::string>()));
  }
  return SparseVector(universe, std::move(entries));
}

}  // namespace coarse
