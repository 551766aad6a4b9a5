#pragma once

// Group models with decidable canonical forms, and finite word-metric balls.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace coarse {

using Index = std::uint32_t;
using Element = std::vector<std::int64_t>;

struct ElementHash {
  std::size_t operator()(const Element& g) const noexcept;
};

/// Coordinate order used to break word-length ties: per coordinate compare
/// |c| first and put c before -c.
bool coordinate_less(const Element& a, const Element& b);

class GroupModel {
 public:
  virtual ~GroupModel() = default;

  virtual Element identity() const = 0;
  virtual Element multiply(const Element& a, const Element& b) const = 0;
  virtual Element inverse(const Element& a) const = 0;
  /// Finite symmetric generating set.
  virtual const std::vector<Element>& generators() const = 0;
  virtual std::string format(const Element& g) const = 0;
  virtual Element parse(std::string_view text) const = 0;
  /// Word length in closed form, when the model has one.
  virtual std::optional<std::int64_t> word_length(const Element&) const { return std::nullopt; }
  /// d(a, b) = |a^-1 b| without materializing the quotient, when cheap.
  virtual std::optional<std::int64_t> distance(const Element&, const Element&) const { return std::nullopt; }
  /// True when multiplication is commutative (every subgroup is normal).
  virtual bool abelian() const { return false; }
  virtual nlohmann::json descriptor() const = 0;
};

using GroupPtr = std::shared_ptr<const GroupModel>;

GroupPtr lattice_group(int n);
GroupPtr free_group(int rank);
GroupPtr cyclic_group(int order);
/// Finite group from a multiplication table over 0..m-1 with 0 the identity.
/// `gens` is closed under inverses automatically.
GroupPtr table_group(std::vector<std::vector<int>> table, std::vector<int> gens);
/// Z^n x| Z with (v, t)(w, s) = (v + A^t w, t + s); A must be unimodular.
GroupPtr semidirect_group(std::vector<std::vector<std::int64_t>> matrix);
GroupPtr make_group(const nlohmann::json& descriptor);

/// Checks identity, inverse and associativity laws on sampled elements and
/// that the generating set is symmetric. Returns a description of the first
/// violation, or nothing.
std::optional<std::string> check_group_laws(const GroupModel& model, const std::vector<Element>& sample,
                                            std::uint64_t seed, int trials = 200);

/// All elements of word length <= radius, sorted by (length, coordinates).
class GroupBall {
 public:
  GroupBall(GroupPtr model, int radius, std::size_t cap = 2'000'000);

  const GroupModel& model() const { return *model_; }
  const GroupPtr& model_ptr() const { return model_; }
  int radius() const { return radius_; }
  std::size_t size() const { return elements_.size(); }
  const Element& element(Index i) const { return elements_[i]; }
  const std::vector<Element>& elements() const { return elements_; }
  std::int64_t length(Index i) const { return lengths_[i]; }
  std::optional<Index> find(const Element& g) const;
  /// The breadth-first search exhausted the group (finite group).
  bool complete() const { return complete_; }
  /// Number of stored elements with word length <= r.
  std::size_t count_within(std::int64_t r) const;

  /// Word length of an arbitrary element of length <= 2 * radius.
  std::int64_t length_of(const Element& g) const;
  /// d(a, b) = |a^-1 b| for stored elements.
  std::int64_t distance(Index a, Index b) const;

 private:
  GroupPtr model_;
  int radius_;
  bool complete_ = false;
  std::vector<Element> elements_;
  std::vector<std::int64_t> lengths_;
  std::vector<std::size_t> shell_end_;
  std::unordered_map<Element, Index, ElementHash> index_;
  // lengths up to 2 * radius when the model has no closed form
  std::unordered_map<Element, std::int64_t, ElementHash> wide_;
};

using BallPtr = std::shared_ptr<const GroupBall>;

/// Subgroups given by a membership oracle.
class Subgroup {
 public:
  virtual ~Subgroup() = default;
  virtual bool contains(const Element& g) const = 0;
  virtual nlohmann::json descriptor() const = 0;
  /// Declared normal (always true in abelian groups).
  virtual bool declared_normal() const { return false; }
};

using SubgroupPtr = std::shared_ptr<const Subgroup>;

SubgroupPtr trivial_subgroup();
SubgroupPtr whole_group();
/// Elements of Z^n supported on the listed axes (0-based).
SubgroupPtr coordinate_subgroup(std::vector<int> axes);
/// Elements of Z^n whose coordinates are all divisible by k.
SubgroupPtr multiples_subgroup(std::int64_t k);
SubgroupPtr element_subgroup(std::vector<Element> elements);
/// Stabilizer-style subgroup from an arbitrary predicate.
SubgroupPtr predicate_subgroup(std::function<bool(const Element&)> pred, nlohmann::json descriptor);
SubgroupPtr make_subgroup(const GroupModel& model, const nlohmann::json& descriptor);

/// Identity membership and sampled closure under a * b^-1 on the ball.
void check_subgroup(const GroupBall& ball, const Subgroup& h, std::uint64_t seed, int trials = 400);
/// Sampled check that g h g^-1 stays in H for stored g, h.
bool check_normal(const GroupBall& ball, const Subgroup& h, std::uint64_t seed, int trials = 400);

}  // namespace coarse
