#pragma once

// Group actions on finite windows: orbits, stabilizers, minimal translators
// and the T_k profile, the displacement constant, the action-to-family
// construction, coset transport, and the extension pipeline.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "coarse/combinators.hpp"

namespace coarse {

/// G (a Cayley window) acting on a finite space. act(g, x) is empty when the
/// image leaves the stored window.
class GroupAction {
 public:
  using ActFn = std::function<std::optional<Index>(const Element&, Index)>;
  GroupAction(SpacePtr group_space, SpacePtr space, ActFn act, nlohmann::json descriptor);

  const GroupBall& ball() const { return *group_space_->group_ball(); }
  const SpacePtr& group_space() const { return group_space_; }
  const SpacePtr& space() const { return space_; }
  std::optional<Index> act(const Element& g, Index x) const { return act_(g, x); }
  std::optional<Index> act(Index g, Index x) const { return act_(ball().element(g), x); }
  const nlohmann::json& descriptor() const { return descriptor_; }

 private:
  SpacePtr group_space_;
  SpacePtr space_;
  ActFn act_;
  nlohmann::json descriptor_;
};

/// G acting on itself by left multiplication.
GroupAction left_translation(const SpacePtr& group_space);
/// Z^n acting on a Z^m window by g . x = x + A g (A is m x n).
GroupAction affine_action(const SpacePtr& group_space, const SpacePtr& lattice_space,
                          std::vector<std::vector<std::int64_t>> matrix);
/// G acting on G/H by g . aH = (g a) H.
GroupAction quotient_action(const SpacePtr& group_space, const CosetSpace& quotient);
/// Action from JSON: {"preset": "left" | "affine" | "quotient", ...}.
GroupAction build_action(const nlohmann::json& json, const Caps& caps = {});

/// Checks act(e, x) = x and act(g, act(h, x)) = act(gh, x) on stored triples
/// (exhaustive up to `limit` triples, seeded sample beyond).
std::optional<std::string> check_action(const GroupAction& action, std::uint64_t seed, std::size_t limit = 200000);

struct OrbitData {
  std::vector<Index> representatives;  // smallest point index per orbit
  std::vector<Index> orbit_of;         // point -> orbit
  std::vector<SubgroupPtr> stabilizers;
  /// Stored stabilizer members of each representative.
  std::vector<std::vector<Index>> stabilizer_members;
  nlohmann::json to_json(const GroupAction& action) const;
};

OrbitData orbit_decomposition(const GroupAction& action);

struct TkProfile {
  std::vector<std::int64_t> N;  // N[m], m = 0..m_max
  std::vector<std::int64_t> T;  // T[k], k = 0..N[m_max]
  /// point -> (translator ball index, orbit) when a translator is stored.
  std::vector<std::optional<std::pair<Index, std::size_t>>> translator;
  std::int64_t m_max = 0;
  std::uint64_t inclusion_checks = 0;
  std::optional<std::string> inclusion_violation;
  nlohmann::json to_json(const GroupAction& action) const;
};

/// Minimal translators in canonical ball order, N_m = max |g_w| over
/// B_m(x_1), T_k = max{m : N_m <= k}, and the exhaustive inclusion check
/// B_{T_k}(g x_1) in the union of B_k(g) x_i over valid (g, k).
TkProfile compute_tk(const GroupAction& action, const OrbitData& orbits, bool exhaustive_inclusion = true);

/// C = ceil(max d_X(x_i, h x_j) / (|h| + 1)) over stored h, at least 1.
/// Uses left-invariance of isometric actions.
std::int64_t displacement_constant(const GroupAction& action, const OrbitData& orbits);
/// Exhaustive max of d_X(g x_i, g' x_j) / (d_G(g, g') + 1) over stored pairs.
Rational displacement_ratio_exhaustive(const GroupAction& action, const OrbitData& orbits);

/// Quotient maps pi_i : G -> G/H_i for the orbit stabilizers.
FamilyPtr orbit_family(const GroupAction& action, const OrbitData& orbits);

/// xi_g = uniform unit vector over every coset; S measured.
ExactFamilyCert finite_quotient_exact_cert(const FamilyPtr& quotient_family);

/// xi_g = beta_{g x_1} transported to the cosets via the orbit identification.
/// Finite acted-on spaces dispatch to finite_quotient_exact_cert.
SEFamilyCert action_to_se_family(const GroupAction& action, const OrbitData& orbits, const TkProfile& tk,
                                 const StrongEmbedCert& base, const NearBound& target);

/// Certificates on the H-window transported to every coset gH along
/// h -> r h (r the shortest member of the coset). The flavor follows the base:
/// property A vector -> exact, coarse witness -> coarse, strong -> strong.
EquiFamilyCert transport_coset_certs(const FamilyPtr& family, std::size_t component, const PropAVectorCert& base);
EquiFamilyCert transport_coset_certs(const FamilyPtr& family, std::size_t component, const CoarseWitness& base);
EquiFamilyCert transport_coset_certs(const FamilyPtr& family, std::size_t component, const StrongEmbedCert& base);

struct PipelineResult {
  StrongEmbedCert cert;
  std::optional<SEFamilyCert> outer;
  std::optional<EquiFamilyCert> fibers;
  std::string path;  // "combined", "subgroup", or "quotient"
  nlohmann::json log;
};

/// Strong embeddability of G from certificates on G/H and H (H normal).
PipelineResult extension_pipeline(const SpacePtr& group_space, const SubgroupPtr& H, const CosetSpace& quotient,
                                  const StrongEmbedCert& quotient_cert, const StrongEmbedCert& sub_cert,
                                  const CombineTargets& targets);

}  // namespace coarse
