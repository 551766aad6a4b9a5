#include "coarse/serialize.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "coarse/errors.hpp"
#include "coarse/verify.hpp"

namespace coarse {

namespace {

Rational rat(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw MalformedCertificate(std::string("missing field \"") + key + "\"");
  const auto& v = j.at(key);
  if (v.is_string()) return parse_rational(v.get<std::string>());
  if (v.is_number_integer()) return Rational(Integer{v.get<std::int64_t>()});
  throw MalformedCertificate(std::string("field \"") + key + "\" must be a rational string");
}

const nlohmann::json& need(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw MalformedCertificate(std::string("missing field \"") + key + "\"");
  return j.at(key);
}

nlohmann::json field_to_json(const UnitField& f) {
  nlohmann::json vectors = nlohmann::json::object();
  for (Index x = 0; x < f.vectors.size(); ++x) {
    if (f.vectors[x]) vectors[f.space->label(x)] = vector_to_json(*f.vectors[x]).at("entries");
  }
  return {{"universe", universe_to_json(*f.universe, f.space.get())}, {"vectors", vectors}};
}

UnitField field_from_json(const nlohmann::json& j, const SpacePtr& space) {
  UnitField f;
  f.space = space;
  f.universe = universe_from_json(need(j, "universe"), space.get());
  f.vectors.assign(space->size(), std::nullopt);
  for (const auto& [label, entries] : need(j, "vectors").items()) {
    f.vectors[space->index(label)] = vector_from_json({{"entries", entries}}, f.universe);
  }
  return f;
}

nlohmann::json base(const char* kind, const nlohmann::json& provenance) {
  return {{"kind", kind}, {"provenance", provenance.is_null() ? nlohmann::json::object() : provenance}};
}

nlohmann::json provenance_of(const nlohmann::json& j) { return j.value("provenance", nlohmann::json::object()); }

}  // namespace

nlohmann::json near_to_json(const NearBound& nb) {
  return {{"R", to_string(nb.R)}, {"eps", to_string(nb.eps)}, {"form", to_string(nb.form)}};
}

NearBound near_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw MalformedCertificate("near bound must be an object");
  return {rat(j, "R"), rat(j, "eps"), parse_near_form(need(j, "form").get<std::string>())};
}

nlohmann::json profile_to_json(const Profile& p) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : p) out.push_back({{"S", to_string(e.S)}, {"delta", to_string(e.delta)}});
  return out;
}

Profile profile_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw MalformedCertificate("profile must be an array");
  Profile p;
  for (const auto& e : j) p.push_back({rat(e, "S"), rat(e, "delta")});
  return p;
}

std::string cert_kind(const AnyCert& cert) {
  static const char* names[] = {"prop-a-sets", "prop-a-vector", "strong-embed", "coarse-witness",
                                "exact-family", "se-family",     "equi-family"};
  return names[cert.index()];
}

nlohmann::json to_json(const PropASetCert& c) {
  auto j = base("prop-a-sets", c.provenance);
  j["space"] = space_to_json(*c.space);
  j["near"] = near_to_json({c.R, c.eps, NearForm::Ratio});
  j["S"] = to_string(c.S);
  j["margin"] = to_string(c.margin);
  nlohmann::json sets = nlohmann::json::object();
  for (Index x = 0; x < c.sets.size(); ++x) {
    if (!c.sets[x]) continue;
    nlohmann::json s = nlohmann::json::array();
    for (const auto& [p, t] : *c.sets[x]) s.push_back({c.space->label(p), t});
    sets[c.space->label(x)] = s;
  }
  j["sets"] = sets;
  return j;
}

nlohmann::json to_json(const PropAVectorCert& c) {
  auto j = base("prop-a-vector", c.provenance);
  j["space"] = space_to_json(*c.field.space);
  j["near"] = near_to_json(c.near);
  j["S"] = to_string(c.S);
  j["margin"] = to_string(c.margin);
  if (c.support_radius) j["support_radius"] = to_string(*c.support_radius);
  j["field"] = field_to_json(c.field);
  return j;
}

nlohmann::json to_json(const StrongEmbedCert& c) {
  auto j = base("strong-embed", c.provenance);
  j["space"] = space_to_json(*c.field.space);
  j["near"] = near_to_json(c.near);
  j["tails"] = profile_to_json(c.tails);
  j["margin"] = to_string(c.margin);
  j["field"] = field_to_json(c.field);
  return j;
}

nlohmann::json to_json(const CoarseWitness& c) {
  auto j = base("coarse-witness", c.provenance);
  j["space"] = space_to_json(*c.field.space);
  j["near"] = near_to_json(c.near);
  j["decay"] = profile_to_json(c.decay);
  j["margin"] = to_string(c.margin);
  j["field"] = field_to_json(c.field);
  return j;
}

nlohmann::json to_json(const ExactFamilyCert& c) {
  auto j = base("exact-family", c.provenance);
  j["family"] = c.family->descriptor();
  j["near"] = near_to_json(c.near);
  j["S"] = to_string(c.S);
  j["margin"] = to_string(c.margin);
  j["field"] = field_to_json(c.field);
  return j;
}

nlohmann::json to_json(const SEFamilyCert& c) {
  auto j = base("se-family", c.provenance);
  j["family"] = c.family->descriptor();
  j["near"] = near_to_json(c.near);
  j["tails"] = profile_to_json(c.tails);
  j["margin"] = to_string(c.margin);
  j["field"] = field_to_json(c.field);
  return j;
}

nlohmann::json to_json(const EquiFamilyCert& c) {
  auto j = base("equi-family", c.provenance);
  const auto& dom = c.family->domain();
  j["family"] = c.family->descriptor();
  j["flavor"] = to_string(c.flavor);
  j["near"] = near_to_json(c.near);
  j["S"] = to_string(c.S);
  j["profile"] = profile_to_json(c.profile);
  j["margin"] = to_string(c.margin);
  j["universe"] = universe_to_json(*c.universe, &dom);
  nlohmann::json pieces = nlohmann::json::array();
  for (const auto& p : c.pieces) {
    const auto& fib = c.family->fiber(p.y);
    nlohmann::json vectors = nlohmann::json::object();
    for (std::size_t i = 0; i < p.vectors.size(); ++i) {
      if (p.vectors[i]) vectors[dom.label(fib[i])] = vector_to_json(*p.vectors[i]).at("entries");
    }
    pieces.push_back({{"y", c.family->universe_labels()[p.y]}, {"vectors", vectors}});
  }
  j["pieces"] = pieces;
  return j;
}

nlohmann::json to_json(const AnyCert& cert) {
  return std::visit([](const auto& c) { return to_json(c); }, cert);
}

AnyCert cert_from_json(const nlohmann::json& j, const Caps& caps) {
  if (!j.is_object()) throw MalformedCertificate("certificate must be a JSON object");
  auto kind = need(j, "kind");
  if (!kind.is_string()) throw MalformedCertificate("\"kind\" must be a string");
  const auto k = kind.get<std::string>();
  try {
    if (k == "prop-a-sets") {
      PropASetCert c;
      c.space = build_space(need(j, "space"), caps);
      auto nb = near_from_json(need(j, "near"));
      if (nb.form != NearForm::Ratio) throw MalformedCertificate("set certificates use the ratio form");
      c.R = nb.R;
      c.eps = nb.eps;
      c.S = rat(j, "S");
      c.margin = rat(j, "margin");
      c.sets.assign(c.space->size(), std::nullopt);
      for (const auto& [label, set] : need(j, "sets").items()) {
        std::vector<std::pair<Index, std::int64_t>> s;
        for (const auto& e : set) {
          if (!e.is_array() || e.size() != 2) throw MalformedCertificate("set entries are [point, tag] pairs");
          s.emplace_back(c.space->index(e[0].get<std::string>()), e[1].get<std::int64_t>());
        }
        std::sort(s.begin(), s.end());
        c.sets[c.space->index(label)] = std::move(s);
      }
      c.provenance = provenance_of(j);
      return c;
    }
    if (k == "prop-a-vector") {
      PropAVectorCert c;
      auto space = build_space(need(j, "space"), caps);
      c.near = near_from_json(need(j, "near"));
      c.S = rat(j, "S");
      c.margin = rat(j, "margin");
      if (j.contains("support_radius")) c.support_radius = rat(j, "support_radius");
      c.field = field_from_json(need(j, "field"), space);
      c.provenance = provenance_of(j);
      return c;
    }
    if (k == "strong-embed") {
      StrongEmbedCert c;
      auto space = build_space(need(j, "space"), caps);
      c.near = near_from_json(need(j, "near"));
      c.tails = profile_from_json(need(j, "tails"));
      c.margin = rat(j, "margin");
      c.field = field_from_json(need(j, "field"), space);
      c.provenance = provenance_of(j);
      return c;
    }
    if (k == "coarse-witness") {
      CoarseWitness c;
      auto space = build_space(need(j, "space"), caps);
      c.near = near_from_json(need(j, "near"));
      c.decay = profile_from_json(need(j, "decay"));
      c.margin = rat(j, "margin");
      c.field = field_from_json(need(j, "field"), space);
      c.provenance = provenance_of(j);
      return c;
    }
    if (k == "exact-family" || k == "se-family") {
      auto family = build_family(need(j, "family"), caps);
      auto near = near_from_json(need(j, "near"));
      auto margin = rat(j, "margin");
      auto field = field_from_json(need(j, "field"), family->domain_ptr());
      if (k == "exact-family") {
        ExactFamilyCert c;
        c.family = family;
        c.near = near;
        c.S = rat(j, "S");
        c.margin = margin;
        c.field = std::move(field);
        c.provenance = provenance_of(j);
        return c;
      }
      SEFamilyCert c;
      c.family = family;
      c.near = near;
      c.tails = profile_from_json(need(j, "tails"));
      c.margin = margin;
      c.field = std::move(field);
      c.provenance = provenance_of(j);
      return c;
    }
    if (k == "equi-family") {
      EquiFamilyCert c;
      c.family = build_family(need(j, "family"), caps);
      const auto& dom = c.family->domain();
      auto flavor = need(j, "flavor").get<std::string>();
      if (flavor == "exact") {
        c.flavor = EquiFlavor::Exact;
      } else if (flavor == "coarse") {
        c.flavor = EquiFlavor::Coarse;
      } else if (flavor == "strong") {
        c.flavor = EquiFlavor::Strong;
      } else {
        throw MalformedCertificate("unknown flavor '" + flavor + "'");
      }
      c.near = near_from_json(need(j, "near"));
      c.S = rat(j, "S");
      c.profile = profile_from_json(need(j, "profile"));
      c.margin = rat(j, "margin");
      c.universe = universe_from_json(need(j, "universe"), &dom);
      std::unordered_map<std::string, Index> ys;
      for (Index y = 0; y < c.family->universe_size(); ++y) ys.emplace(c.family->universe_labels()[y], y);
      for (const auto& pj : need(j, "pieces")) {
        auto label = need(pj, "y").get<std::string>();
        auto it = ys.find(label);
        if (it == ys.end()) throw DomainError("unknown codomain element '" + label + "'");
        PieceField p;
        p.y = it->second;
        const auto& fib = c.family->fiber(p.y);
        p.vectors.assign(fib.size(), std::nullopt);
        for (const auto& [x, entries] : need(pj, "vectors").items()) {
          auto xi = dom.index(x);
          auto pos = std::lower_bound(fib.begin(), fib.end(), xi);
          if (pos == fib.end() || *pos != xi) throw DomainError("point '" + x + "' is not in the fiber over " + label);
          p.vectors[pos - fib.begin()] = vector_from_json({{"entries", entries}}, c.universe);
        }
        c.pieces.push_back(std::move(p));
      }
      c.provenance = provenance_of(j);
      return c;
    }
  } catch (const nlohmann::json::exception& e) {
    throw MalformedCertificate(std::string("schema violation: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw MalformedCertificate(std::string("bad number: ") + e.what());
  }
  throw MalformedCertificate("unknown certificate kind '" + k + "'");
}

VerificationReport verify_any(const AnyCert& cert) {
  return std::visit([](const auto& c) { return verify(c); }, cert);
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MalformedCertificate("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw MalformedCertificate(path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const nlohmann::json& json) {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot write " + path);
  out << json.dump(1) << "\n";
}

}  // namespace coarse
