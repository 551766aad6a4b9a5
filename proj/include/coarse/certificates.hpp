#pragma once

// Certificate records for property A, strong and coarse embeddability, and
// the family versions, plus the verification report they produce.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "coarse/family.hpp"
#include "coarse/hilbert.hpp"

namespace coarse {

/// How the near condition is phrased.
///   Ratio: |A_x sym-diff A_y| / |A_x| <= eps
///   Inner: |1 - <v_x, v_y>| <= eps
///   Norm:  ||v_x - v_y|| <= eps (checked as ||v_x - v_y||^2 <= eps^2)
enum class NearForm { Ratio, Inner, Norm };

struct NearBound {
  Rational R{0};
  Rational eps{0};
  NearForm form = NearForm::Inner;
};

/// The equivalent bound on |1 - <u, v>| for unit vectors.
Rational inner_equivalent(const NearBound& nb);
std::string to_string(NearForm form);
NearForm parse_near_form(const std::string& text);

/// One (S, delta) entry of a decay or tail profile.
struct ProfileEntry {
  Rational S{0};
  Rational delta{0};
};
using Profile = std::vector<ProfileEntry>;

/// A point participates in verification when its validity radius reaches the
/// certificate margin; the field is only required there.
struct PropASetCert {
  SpacePtr space;
  Rational R{0};
  Rational eps{0};
  Rational S{0};
  Rational margin{0};
  // per point: sorted (point, multiplicity tag) pairs
  std::vector<std::optional<std::vector<std::pair<Index, std::int64_t>>>> sets;
  nlohmann::json provenance;
};

struct PropAVectorCert {
  NearBound near;
  Rational S{0};  // exact orthogonality at distance >= S
  Rational margin{0};
  std::optional<Rational> support_radius;  // located fields: supp alpha_x within B(x)
  UnitField field;
  nlohmann::json provenance;
};

struct StrongEmbedCert {
  NearBound near{Rational(0), Rational(0), NearForm::Norm};
  Profile tails;
  Rational margin{0};
  UnitField field;
  nlohmann::json provenance;
};

struct CoarseWitness {
  NearBound near;
  Profile decay;  // |<b_x, b_y>| <= delta when d(x, y) >= S
  Rational margin{0};
  UnitField field;
  nlohmann::json provenance;
};

struct ExactFamilyCert {
  FamilyPtr family;
  NearBound near{Rational(0), Rational(0), NearForm::Norm};
  Rational S{0};  // supp xi_x within the images of B_S(x)
  Rational margin{0};
  UnitField field;  // universe: the disjoint union of codomains
  nlohmann::json provenance;
};

struct SEFamilyCert {
  FamilyPtr family;
  NearBound near{Rational(0), Rational(0), NearForm::Norm};
  Profile tails;
  Rational margin{0};
  UnitField field;
  nlohmann::json provenance;
};

enum class EquiFlavor { Exact, Coarse, Strong };
std::string to_string(EquiFlavor flavor);

/// Vectors on one fiber, aligned with family->fiber(y).
struct PieceField {
  Index y = 0;
  std::vector<std::optional<SparseVector>> vectors;
};

/// Fibers of a family viewed as a family of spaces with shared constants.
struct EquiFamilyCert {
  FamilyPtr family;
  EquiFlavor flavor = EquiFlavor::Exact;
  NearBound near{Rational(0), Rational(0), NearForm::Norm};
  Rational S{0};    // exact flavor: orthogonality radius
  Profile profile;  // coarse: decay profile; strong: tail profile
  Rational margin{0};
  UniversePtr universe;  // strong flavor requires locations in the domain
  std::vector<PieceField> pieces;
  nlohmann::json provenance;

  /// Vector of the piece over y at domain point x, if stored.
  const SparseVector* at(Index y, Index x) const;
};

// ---------------------------------------------------------------- reports

struct Condition {
  std::string name;
  std::string quantity;
  std::optional<SurdSum> worst;  // empty when nothing was checked
  SurdSum bound;
  std::vector<std::string> witness;  // point labels (one or two)
  std::optional<Rational> witness_distance;
  std::uint64_t checked = 0;
  std::uint64_t skipped = 0;

  bool pass() const { return !worst || compare(*worst, bound) <= 0; }
  /// worst == bound: allowed, but reported.
  bool equality() const { return worst && *worst == bound; }
  std::optional<SurdSum> slack() const;
  nlohmann::json to_json() const;
};

struct VerificationReport {
  std::string kind;
  std::vector<Condition> conditions;
  nlohmann::json extra = nlohmann::json::object();

  bool pass() const;
  const Condition* find(const std::string& name) const;
  nlohmann::json to_json() const;
};

}  // namespace coarse
