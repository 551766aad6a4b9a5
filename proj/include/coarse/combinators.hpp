#pragma once

// Conversions between certificate kinds and the two gluing constructions
// xi_x(w, s) = alpha_x(w) * beta_w(eta(x, w))(s) over a family's fibers.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "coarse/certificates.hpp"

namespace coarse {

/// alpha_x = 1_{A_x} / sqrt|A_x| over the located universe X x N.
/// The near tolerance is re-measured and the orthogonality radius tightened.
PropAVectorCert sets_to_vector(const PropASetCert& cert);

/// Same field, tail profile [(support radius, 0)].
StrongEmbedCert prop_a_to_strong(const PropAVectorCert& cert);

/// Same field, decay entries (2 S_k + 1, min(1, 2 sqrt(delta_k))), each then
/// replaced by the measured sup when that is smaller.
CoarseWitness strong_to_coarse(const StrongEmbedCert& cert);

/// Reinterpret a field over l^2(X) as a family certificate for {Id : X -> X}.
ExactFamilyCert as_identity_family(const PropAVectorCert& cert);
SEFamilyCert as_identity_family(const StrongEmbedCert& cert);

/// An SE family certificate whose profile has a zero entry, as an exact one.
std::optional<ExactFamilyCert> se_to_exact(const SEFamilyCert& cert);
/// Exact support within S gives the tail profile [(S, 0)].
SEFamilyCert exact_to_se(const ExactFamilyCert& cert);

/// How sub-certificate sufficiency is decided.
///   Analytic: the declared parameters satisfy the combination inequalities
///             (e.g. fiber near-range >= 2 S_X + R).
///   Realized: each inequality is checked with the quantity measured over the
///             pairs the construction actually uses.
enum class Negotiation { Analytic, Realized };
std::string to_string(Negotiation mode);
Negotiation parse_negotiation(const std::string& text);

/// One inequality of a combination argument.
struct Stage {
  std::string name;
  std::string inequality;
  SurdSum value;  // declared or measured left-hand side
  Rational bound{0};
  bool pass() const { return compare(value, SurdSum(bound)) <= 0; }
  nlohmann::json to_json() const;
};

struct CombineTargets {
  Rational R{0};
  Rational eps{0};    // exact/coarse: bound on |1 - <xi_x, xi_y>|; strong: on ||xi_x - xi_y||
  Rational delta{1};  // coarse only
  Negotiation mode = Negotiation::Analytic;
};

/// Exact outer family + equi-exact fibers -> property A field.
PropAVectorCert combine_exact(const ExactFamilyCert& outer, const EquiFamilyCert& fibers,
                              const CombineTargets& targets);

/// SE outer family + equi-coarse fibers -> coarse witness.
CoarseWitness combine_se_coarse(const SEFamilyCert& outer, const EquiFamilyCert& fibers,
                                const CombineTargets& targets);

/// SE outer family + equi-strong fibers -> strong certificate.
StrongEmbedCert combine_se_strong(const SEFamilyCert& outer, const EquiFamilyCert& fibers,
                                  const CombineTargets& targets);

/// max |1 - <v_x, v_y>| over pairs valid at `margin` with d(x, y) <= R.
std::optional<SurdSum> measure_near_inner(const UnitField& field, const Rational& margin, const Rational& R);

/// Smallest S (max distance of a non-orthogonal pair, plus one) beyond which
/// all valid pairs are exactly orthogonal.
Rational measure_orthogonality_radius(const UnitField& field, const Rational& margin);

/// sup over valid x of the mass located outside B_S(x), per radius.
std::vector<Rational> measure_tails(const UnitField& field, const Rational& margin, const std::vector<Rational>& radii);

}  // namespace coarse
