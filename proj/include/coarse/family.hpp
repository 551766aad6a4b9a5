#pragma once

// Families of set maps phi_i : X -> Y_i, their disjoint union of codomains,
// fibers, and nearest-point sections.

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "coarse/space.hpp"

namespace coarse {

struct FamilyComponent {
  std::string name;
  std::vector<std::string> codomain;
  std::vector<Index> map;  // domain point -> codomain index
};

class SetMapFamily {
 public:
  SetMapFamily(SpacePtr domain, std::vector<FamilyComponent> components, nlohmann::json descriptor);

  const FiniteMetricSpace& domain() const { return *domain_; }
  const SpacePtr& domain_ptr() const { return domain_; }
  std::size_t component_count() const { return components_.size(); }
  const FamilyComponent& component(std::size_t i) const { return components_[i]; }

  /// Size of the disjoint union of the codomains.
  std::size_t universe_size() const { return labels_.size(); }
  const std::vector<std::string>& universe_labels() const { return labels_; }
  /// Tagged element (i, w) -> flat index.
  Index flat(std::size_t component, Index w) const { return static_cast<Index>(offset_[component] + w); }
  std::size_t component_of(Index y) const;
  /// phi_i(x) as a flat index.
  Index image(std::size_t component, Index x) const { return flat(component, components_[component].map[x]); }
  /// Sorted preimage of a flat index.
  const std::vector<Index>& fiber(Index y) const { return fibers_[y]; }
  /// True when x lies in the fiber over y.
  bool in_fiber(Index x, Index y) const;

  /// min over s in the fiber of d(x, s).
  Rational dist_to_fiber(Index x, Index y) const;
  /// Closest fiber point to x, ties to the smallest index, with its distance.
  std::pair<Index, Rational> nearest_in_fiber(Index x, Index y) const;

  /// The fiber as a space with the induced metric.
  SpacePtr fiber_space(Index y) const;

  const nlohmann::json& descriptor() const { return descriptor_; }

 private:
  SpacePtr domain_;
  std::vector<FamilyComponent> components_;
  std::vector<std::size_t> offset_;
  std::vector<std::string> labels_;
  std::vector<std::vector<Index>> fibers_;
  nlohmann::json descriptor_;
};

using FamilyPtr = std::shared_ptr<const SetMapFamily>;

FamilyPtr identity_family(const SpacePtr& space);
/// Quotient maps G -> G/H_i on a Cayley window.
FamilyPtr quotient_family(const SpacePtr& ball_space, const std::vector<CosetSpace>& quotients);
FamilyPtr build_family(const nlohmann::json& json, const Caps& caps = {});

/// eta(x, w): a closest point of the fiber over w, tabulated for the
/// requested domain points and every w.
class EtaSection {
 public:
  EtaSection(FamilyPtr family, const std::vector<Index>& points);
  Index operator()(Index x, Index y) const;
  const Rational& distance(Index x, Index y) const;
  const std::vector<Index>& points() const { return points_; }

 private:
  FamilyPtr family_;
  std::vector<Index> points_;
  std::vector<std::int64_t> row_;  // domain point -> row, -1 if absent
  std::vector<Index> eta_;
  std::vector<Rational> dist_;
};

}  // namespace coarse
