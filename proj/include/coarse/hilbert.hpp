#pragma once

// Finitely supported vectors in l^2 of a labelled index set, with exact
// inner products, tails, and optional locations of indices in a space.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "coarse/numeric.hpp"
#include "coarse/space.hpp"

namespace coarse {

/// Index set of an l^2 space. Located universes map every index to a point
/// of a metric space (e.g. l^2(X) or l^2(X x N)).
class Universe {
 public:
  Universe(std::string tag, std::vector<std::string> labels, std::vector<Index> location = {});

  const std::string& tag() const { return tag_; }
  std::size_t size() const { return labels_.size(); }
  const std::string& label(Index k) const { return labels_[k]; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::optional<Index> find(const std::string& label) const;
  bool located() const { return !location_.empty(); }
  Index location(Index k) const { return location_[k]; }
  const std::vector<Index>& locations() const { return location_; }

 private:
  std::string tag_;
  std::vector<std::string> labels_;
  std::vector<Index> location_;
  std::unordered_map<std::string, Index> index_;
};

using UniversePtr = std::shared_ptr<const Universe>;

/// The located universe l^2(X): one index per point.
UniversePtr point_universe(const FiniteMetricSpace& space, std::string tag = "points");

class SparseVector {
 public:
  SparseVector() = default;
  explicit SparseVector(UniversePtr universe) : universe_(std::move(universe)) {}
  /// Entries may come in any order; indices must be distinct, zeros are dropped.
  SparseVector(UniversePtr universe, std::vector<std::pair<Index, Surd>> entries);

  const UniversePtr& universe() const { return universe_; }
  std::size_t size() const { return idx_.size(); }
  const std::vector<Index>& indices() const { return idx_; }
  const std::vector<Surd>& coefs() const { return coef_; }
  Rational norm_sq() const;
  /// Coefficient at an index (zero when absent).
  Surd at(Index k) const;

 private:
  UniversePtr universe_;
  std::vector<Index> idx_;
  std::vector<Surd> coef_;
};

/// 1_A / sqrt|A| over the given (distinct) indices.
SparseVector normalized_indicator(const UniversePtr& universe, std::vector<Index> support);

SurdSum inner(const SparseVector& u, const SparseVector& v);
/// Exact ||u - v||^2.
SurdSum dist_sq(const SparseVector& u, const SparseVector& v);
double dist_norm(const SparseVector& u, const SparseVector& v);
/// Sum of u(k)^2 over stored indices with allowed(k) false.
Rational tail_mass(const SparseVector& u, const std::function<bool(Index)>& allowed);
/// Sum of |u(k) v(k)| over indices with allowed(k) false.
SurdSum mixed_tail(const SparseVector& u, const SparseVector& v, const std::function<bool(Index)>& allowed);

/// A vector per point of a space; points below the certificate margin may
/// carry no vector.
struct UnitField {
  SpacePtr space;
  UniversePtr universe;
  std::vector<std::optional<SparseVector>> vectors;

  const SparseVector* at(Index x) const { return vectors[x] ? &*vectors[x] : nullptr; }
};

nlohmann::json universe_to_json(const Universe& u, const FiniteMetricSpace* located_in);
UniversePtr universe_from_json(const nlohmann::json& j, const FiniteMetricSpace* located_in);
nlohmann::json vector_to_json(const SparseVector& v);
SparseVector vector_from_json(const nlohmann::json& j, const UniversePtr& universe);

}  // namespace coarse
