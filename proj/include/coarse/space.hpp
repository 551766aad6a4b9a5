#pragma once

// Finite metric spaces: explicit distance tables, windows onto Cayley graphs,
// coset spaces and induced subspaces. Every point carries a validity radius:
// the largest S for which the ambient ball B_S(x) is known to be stored.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "coarse/group.hpp"
#include "coarse/numeric.hpp"

namespace coarse {

class MetricOracle {
 public:
  virtual ~MetricOracle() = default;
  virtual Rational dist(Index a, Index b) const = 0;
  /// Sorted points within distance S of x, when a fast path exists.
  virtual std::optional<std::vector<Index>> ball(Index, const Rational&) const { return std::nullopt; }
};

class FiniteMetricSpace {
 public:
  FiniteMetricSpace(std::vector<std::string> labels, std::shared_ptr<const MetricOracle> metric,
                    std::vector<std::optional<Rational>> validity, nlohmann::json descriptor,
                    BallPtr group_ball = nullptr);

  std::size_t size() const { return labels_.size(); }
  const std::string& label(Index i) const { return labels_[i]; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::optional<Index> find(std::string_view label) const;
  /// Like find, but unknown labels raise DomainError.
  Index index(std::string_view label) const;

  Rational dist(Index a, Index b) const { return metric_->dist(a, b); }
  /// Closed ball {y : d(x, y) <= S}, sorted by index.
  std::vector<Index> ball(Index x, const Rational& S) const;

  /// nullopt means unbounded (the whole ambient space is stored).
  const std::optional<Rational>& validity(Index x) const { return validity_[x]; }
  bool valid_at(Index x, const Rational& radius) const;
  /// Number of points whose validity radius reaches `radius`.
  std::size_t count_valid(const Rational& radius) const;

  /// How to rebuild the space ({"kind": ...}); explicit spaces embed their table.
  const nlohmann::json& descriptor() const { return descriptor_; }
  /// For Cayley windows: point i is ball element i.
  const BallPtr& group_ball() const { return group_ball_; }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, Index> index_;
  std::shared_ptr<const MetricOracle> metric_;
  std::vector<std::optional<Rational>> validity_;
  nlohmann::json descriptor_;
  BallPtr group_ball_;
};

using SpacePtr = std::shared_ptr<const FiniteMetricSpace>;

/// Full symmetric table (dist[i][j]); validity defaults to unbounded.
SpacePtr explicit_space(std::vector<std::string> labels, std::vector<std::vector<Rational>> dist,
                        std::vector<std::optional<Rational>> validity = {});

/// Window onto the word metric: r(g) = radius - |g| unless the ball is the whole group.
SpacePtr group_ball_space(BallPtr ball);

/// Left cosets gH meeting the window, with the quotient metric
/// d(aH, bH) = min over stored representatives.
struct CosetSpace {
  SpacePtr space;
  BallPtr ball;
  SubgroupPtr subgroup;
  bool normal = false;
  std::vector<Index> coset_of;              // ball element -> coset
  std::vector<std::vector<Index>> members;  // coset -> ball elements, sorted
  std::vector<Index> representative;        // coset -> shortest member
};

CosetSpace quotient_space(BallPtr ball, SubgroupPtr subgroup, std::uint64_t seed = 1);

/// Induced metric on a subset of `parent` (validity inherited).
SpacePtr subspace(const SpacePtr& parent, std::vector<Index> points, nlohmann::json descriptor);

/// The stored members of H as a space with the metric of G.
SpacePtr subgroup_space(const SpacePtr& ball_space, const SubgroupPtr& subgroup);

/// Resource caps shared by builders.
struct Caps {
  std::size_t max_points = 2'000'000;
  int max_radius = 400;
  std::size_t max_universe = 5'000'000;
};

/// Rebuild a space from its descriptor or explicit JSON form.
SpacePtr build_space(const nlohmann::json& json, const Caps& caps = {});
/// Serializable form: descriptors for generated spaces, tables for explicit ones.
nlohmann::json space_to_json(const FiniteMetricSpace& space);

struct MetricCheck {
  std::optional<std::string> violation;
  Rational min_gap{0};
  std::vector<std::size_t> max_ball;  // max |B_r(x)| over valid x, r = 0..
  std::size_t triples_checked = 0;
};

/// Exhaustive metric axiom check for spaces up to `exhaustive_limit` points,
/// seeded sampling beyond that.
MetricCheck check_metric(const FiniteMetricSpace& space, std::uint64_t seed, int max_r = 4,
                         std::size_t exhaustive_limit = 500);

}  // namespace coarse
