#include "coarse/space.hpp"

#include <algorithm>
#include <limits>
#include <random>

#include "coarse/errors.hpp"

namespace coarse {

FiniteMetricSpace::FiniteMetricSpace(std::vector<std::string> labels, std::shared_ptr<const MetricOracle> metric,
                                     std::vector<std::optional<Rational>> validity, nlohmann::json descriptor,
                                     BallPtr group_ball)
    : labels_(std::move(labels)),
      metric_(std::move(metric)),
      validity_(std::move(validity)),
      descriptor_(std::move(descriptor)),
      group_ball_(std::move(group_ball)) {
  if (validity_.empty()) validity_.assign(labels_.size(), std::nullopt);
  if (validity_.size() != labels_.size()) throw DomainError("validity list does not match the point list");
  index_.reserve(labels_.size());
  for (Index i = 0; i < labels_.size(); ++i) {
    if (!index_.emplace(labels_[i], i).second) throw DomainError("duplicate point id '" + labels_[i] + "'");
  }
}

std::optional<Index> FiniteMetricSpace::find(std::string_view label) const {
  auto it = index_.find(std::string(label));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Index FiniteMetricSpace::index(std::string_view label) const {
  if (auto i = find(label)) return *i;
  throw DomainError("unknown point id '" + std::string(label) + "'");
}

std::vector<Index> FiniteMetricSpace::ball(Index x, const Rational& S) const {
  if (x >= size()) throw DomainError("point index out of range");
  if (auto fast = metric_->ball(x, S)) return std::move(*fast);
  std::vector<Index> out;
  for (Index y = 0; y < size(); ++y) {
    if (y == x || metric_->dist(x, y) <= S) out.push_back(y);
  }
  return out;
}

bool FiniteMetricSpace::valid_at(Index x, const Rational& radius) const {
  const auto& r = validity_[x];
  return !r || *r >= radius;
}

std::size_t FiniteMetricSpace::count_valid(const Rational& radius) const {
  std::size_t n = 0;
  for (Index x = 0; x < size(); ++x) n += valid_at(x, radius) ? 1 : 0;
  return n;
}

// ---------------------------------------------------------------- explicit

namespace {

class TableMetric final : public MetricOracle {
 public:
  explicit TableMetric(std::vector<std::vector<Rational>> d) : d_(std::move(d)) {}
  Rational dist(Index a, Index b) const override { return d_[a][b]; }

 private:
  std::vector<std::vector<Rational>> d_;
};

class IntTableMetric final : public MetricOracle {
 public:
  IntTableMetric(std::size_t n, std::vector<std::int64_t> d) : n_(n), d_(std::move(d)) {}
  Rational dist(Index a, Index b) const override { return Rational(Integer(d_[a * n_ + b])); }

 private:
  std::size_t n_;
  std::vector<std::int64_t> d_;
};

nlohmann::json explicit_json(const std::vector<std::string>& labels, const std::vector<std::vector<Rational>>& dist,
                             const std::vector<std::optional<Rational>>& validity) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < i; ++j) row.push_back(to_string(dist[i][j]));
    rows.push_back(row);
  }
  nlohmann::json out{{"kind", "explicit"}, {"points", labels}, {"dist", rows}};
  bool any = std::any_of(validity.begin(), validity.end(), [](const auto& v) { return v.has_value(); });
  if (any) {
    nlohmann::json val = nlohmann::json::array();
    for (const auto& v : validity) val.push_back(v ? nlohmann::json(to_string(*v)) : nlohmann::json(nullptr));
    out["validity"] = val;
  }
  return out;
}

}  // namespace

SpacePtr explicit_space(std::vector<std::string> labels, std::vector<std::vector<Rational>> dist,
                        std::vector<std::optional<Rational>> validity) {
  auto n = labels.size();
  if (dist.size() != n) throw DomainError("distance table size does not match the point list");
  for (const auto& row : dist) {
    if (row.size() != n) throw DomainError("distance table is not square");
  }
  if (validity.empty()) validity.assign(n, std::nullopt);
  auto desc = explicit_json(labels, dist, validity);
  return std::make_shared<FiniteMetricSpace>(std::move(labels), std::make_shared<TableMetric>(std::move(dist)),
                                             std::move(validity), std::move(desc));
}

// ---------------------------------------------------------------- Cayley windows

namespace {

class BallMetric final : public MetricOracle {
 public:
  explicit BallMetric(BallPtr ball) : ball_(std::move(ball)) {}
  Rational dist(Index a, Index b) const override { return Rational(Integer(ball_->distance(a, b))); }
  std::optional<std::vector<Index>> ball(Index x, const Rational& S) const override {
    if (S < 0) return std::vector<Index>{};
    auto r = static_cast<std::int64_t>(S.numerator() / S.denominator());
    if (r > ball_->radius() && !ball_->complete()) return std::nullopt;
    const auto& model = ball_->model();
    const auto& g = ball_->element(x);
    std::vector<Index> out;
    auto n = ball_->count_within(r);
    for (Index i = 0; i < n; ++i) {
      if (auto y = ball_->find(model.multiply(g, ball_->element(i)))) out.push_back(*y);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

 private:
  BallPtr ball_;
};

nlohmann::json ball_descriptor(const GroupBall& ball) {
  return {{"kind", "group-ball"}, {"group", ball.model().descriptor()}, {"radius", ball.radius()}};
}

}  // namespace

SpacePtr group_ball_space(BallPtr ball) {
  std::vector<std::string> labels;
  std::vector<std::optional<Rational>> validity;
  labels.reserve(ball->size());
  validity.reserve(ball->size());
  for (Index i = 0; i < ball->size(); ++i) {
    labels.push_back(ball->model().format(ball->element(i)));
    if (ball->complete()) {
      validity.emplace_back(std::nullopt);
    } else {
      validity.emplace_back(Rational(Integer(ball->radius() - ball->length(i))));
    }
  }
  auto desc = ball_descriptor(*ball);
  return std::make_shared<FiniteMetricSpace>(std::move(labels), std::make_shared<BallMetric>(ball),
                                             std::move(validity), std::move(desc), ball);
}

// ---------------------------------------------------------------- cosets

namespace {

constexpr std::size_t kDenseCosetLimit = 2000;

class LazyCosetMetric final : public MetricOracle {
 public:
  LazyCosetMetric(BallPtr ball, std::vector<std::vector<Index>> members, std::vector<Index> rep)
      : ball_(std::move(ball)), members_(std::move(members)), rep_(std::move(rep)) {}
  Rational dist(Index a, Index b) const override {
    if (a == b) return Rational(0);
    return Rational(Integer(std::min(one_sided(a, b), one_sided(b, a))));
  }

 private:
  std::int64_t one_sided(Index a, Index b) const {
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    for (auto m : members_[b]) best = std::min(best, ball_->distance(rep_[a], m));
    return best;
  }
  BallPtr ball_;
  std::vector<std::vector<Index>> members_;
  std::vector<Index> rep_;
};

}  // namespace

CosetSpace quotient_space(BallPtr ball, SubgroupPtr subgroup, std::uint64_t seed) {
  check_subgroup(*ball, *subgroup, seed);
  CosetSpace out;
  out.ball = ball;
  out.subgroup = subgroup;
  out.normal = check_normal(*ball, *subgroup, seed);
  const auto& model = ball->model();
  const auto n = ball->size();
  constexpr Index kUnset = std::numeric_limits<Index>::max();
  out.coset_of.assign(n, kUnset);

  auto desc = subgroup->descriptor();
  bool trivial = desc.value("kind", "") == "trivial";
  bool whole = desc.value("kind", "") == "whole";
  for (Index g = 0; g < n; ++g) {
    if (out.coset_of[g] != kUnset) continue;
    auto c = static_cast<Index>(out.members.size());
    out.members.emplace_back();
    out.representative.push_back(g);
    if (trivial) {
      out.coset_of[g] = c;
      out.members[c].push_back(g);
      continue;
    }
    Element ginv = model.inverse(ball->element(g));
    for (Index j = g; j < n; ++j) {
      if (out.coset_of[j] != kUnset) continue;
      if (whole || subgroup->contains(model.multiply(ginv, ball->element(j)))) {
        out.coset_of[j] = c;
        out.members[c].push_back(j);
      }
    }
  }

  const auto k = out.members.size();
  std::vector<std::string> labels;
  std::vector<std::optional<Rational>> validity;
  for (Index c = 0; c < k; ++c) {
    labels.push_back("[" + model.format(ball->element(out.representative[c])) + "]");
    if (ball->complete() || whole) {
      validity.emplace_back(std::nullopt);
    } else {
      validity.emplace_back(Rational(Integer(ball->radius() - ball->length(out.representative[c]))));
    }
  }

  std::shared_ptr<const MetricOracle> metric;
  if (k <= kDenseCosetLimit) {
    std::vector<std::int64_t> table(k * k, std::numeric_limits<std::int64_t>::max());
    if (out.normal) {
      // d(aH, bH) = d(a, bH) for normal H
      for (Index a = 0; a < k; ++a) {
        auto ra = out.representative[a];
        for (Index m = 0; m < n; ++m) {
          auto& cell = table[a * k + out.coset_of[m]];
          cell = std::min(cell, ball->distance(ra, m));
        }
      }
    } else {
      if (n > 5000) throw ResourceError("quotient by a non-normal subgroup is limited to 5000 stored elements");
      for (Index a = 0; a < k; ++a) {
        for (auto x : out.members[a]) {
          for (Index m = 0; m < n; ++m) {
            auto& cell = table[a * k + out.coset_of[m]];
            cell = std::min(cell, ball->distance(x, m));
          }
        }
      }
    }
    for (Index a = 0; a < k; ++a) {
      table[a * k + a] = 0;
      for (Index b = 0; b < a; ++b) {
        auto v = std::min(table[a * k + b], table[b * k + a]);
        table[a * k + b] = table[b * k + a] = v;
      }
    }
    metric = std::make_shared<IntTableMetric>(k, std::move(table));
  } else {
    if (!out.normal) throw ResourceError("quotient by a non-normal subgroup is limited to 2000 cosets");
    metric = std::make_shared<LazyCosetMetric>(ball, out.members, out.representative);
  }

  nlohmann::json d{{"kind", "quotient"},
                   {"group", model.descriptor()},
                   {"radius", ball->radius()},
                   {"subgroup", subgroup->descriptor()}};
  out.space = std::make_shared<FiniteMetricSpace>(std::move(labels), metric, std::move(validity), std::move(d));
  return out;
}

// ---------------------------------------------------------------- subspaces

namespace {

class SubMetric final : public MetricOracle {
 public:
  SubMetric(SpacePtr parent, std::vector<Index> points) : parent_(std::move(parent)), points_(std::move(points)) {
    local_.assign(parent_->size(), -1);
    for (std::size_t i = 0; i < points_.size(); ++i) local_[points_[i]] = static_cast<std::int64_t>(i);
  }
  Rational dist(Index a, Index b) const override { return parent_->dist(points_[a], points_[b]); }
  std::optional<std::vector<Index>> ball(Index x, const Rational& S) const override {
    std::vector<Index> out;
    for (auto y : parent_->ball(points_[x], S)) {
      if (local_[y] >= 0) out.push_back(static_cast<Index>(local_[y]));
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  SpacePtr parent_;
  std::vector<Index> points_;
  std::vector<std::int64_t> local_;
};

}  // namespace

SpacePtr subspace(const SpacePtr& parent, std::vector<Index> points, nlohmann::json descriptor) {
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  std::vector<std::string> labels;
  std::vector<std::optional<Rational>> validity;
  for (auto p : points) {
    if (p >= parent->size()) throw DomainError("subspace point out of range");
    labels.push_back(parent->label(p));
    validity.push_back(parent->validity(p));
  }
  return std::make_shared<FiniteMetricSpace>(std::move(labels), std::make_shared<SubMetric>(parent, points),
                                             std::move(validity), std::move(descriptor));
}

SpacePtr subgroup_space(const SpacePtr& ball_space, const SubgroupPtr& subgroup) {
  const auto& ball = ball_space->group_ball();
  if (!ball) throw DomainError("subgroup spaces need a Cayley window");
  check_subgroup(*ball, *subgroup, 1);
  std::vector<Index> pts;
  for (Index i = 0; i < ball->size(); ++i) {
    if (subgroup->contains(ball->element(i))) pts.push_back(i);
  }
  nlohmann::json d{{"kind", "subgroup"},
                   {"group", ball->model().descriptor()},
                   {"radius", ball->radius()},
                   {"subgroup", subgroup->descriptor()}};
  if (subgroup->descriptor().value("kind", "") == "trivial") {
    // {e} is stored in full
    return std::make_shared<FiniteMetricSpace>(std::vector<std::string>{ball_space->label(pts.at(0))},
                                               std::make_shared<SubMetric>(ball_space, pts),
                                               std::vector<std::optional<Rational>>{std::nullopt}, std::move(d));
  }
  return subspace(ball_space, std::move(pts), std::move(d));
}

// ---------------------------------------------------------------- JSON

SpacePtr build_space(const nlohmann::json& j, const Caps& caps) {
  if (!j.is_object()) throw MalformedCertificate("space must be a JSON object");
  std::string kind = j.value("kind", j.contains("points") ? "explicit" : "");
  if (kind == "explicit") {
    auto labels = j.at("points").get<std::vector<std::string>>();
    auto n = labels.size();
    if (n > caps.max_points) throw ResourceError("space exceeds the point cap");
    const auto& rows = j.at("dist");
    if (rows.size() != n) throw MalformedCertificate("\"dist\" must have one row per point");
    std::vector<std::vector<Rational>> d(n, std::vector<Rational>(n, Rational(0)));
    for (std::size_t i = 0; i < n; ++i) {
      const auto& row = rows[i];
      // rows may be lower-triangular (i entries) or include the diagonal
      if (row.size() != i && row.size() != i + 1) {
        throw MalformedCertificate("row " + std::to_string(i) + " of \"dist\" has the wrong length");
      }
      for (std::size_t k = 0; k < i; ++k) {
        d[i][k] = d[k][i] = parse_rational(row[k].is_string() ? row[k].get<std::string>() : row[k].dump());
      }
    }
    std::vector<std::optional<Rational>> validity;
    if (j.contains("validity")) {
      for (const auto& v : j.at("validity")) {
        validity.push_back(v.is_null() ? std::nullopt
                                       : std::optional<Rational>(parse_rational(v.is_string() ? v.get<std::string>()
                                                                                              : v.dump())));
      }
    }
    return explicit_space(std::move(labels), std::move(d), std::move(validity));
  }
  if (kind == "group-ball" || kind == "quotient" || kind == "subgroup") {
    auto model = make_group(j.at("group"));
    int radius = j.at("radius").get<int>();
    if (radius > caps.max_radius) throw ResourceError("ball radius exceeds the configured cap");
    auto ball = std::make_shared<const GroupBall>(model, radius, caps.max_points);
    if (kind == "group-ball") return group_ball_space(ball);
    auto h = make_subgroup(*model, j.at("subgroup"));
    if (kind == "quotient") return quotient_space(ball, h).space;
    return subgroup_space(group_ball_space(ball), h);
  }
  throw MalformedCertificate("unknown space kind '" + kind + "'");
}

nlohmann::json space_to_json(const FiniteMetricSpace& space) { return space.descriptor(); }

// ---------------------------------------------------------------- checks

MetricCheck check_metric(const FiniteMetricSpace& space, std::uint64_t seed, int max_r,
                         std::size_t exhaustive_limit) {
  MetricCheck out;
  const auto n = space.size();
  bool have_gap = false;
  auto note = [&](std::string msg) {
    if (!out.violation) out.violation = std::move(msg);
  };
  auto check_triple = [&](Index x, Index y, Index z, const Rational& dxy, const Rational& dyz, const Rational& dxz) {
    ++out.triples_checked;
    if (dxz > dxy + dyz) {
      note("triangle inequality fails at (" + space.label(x) + ", " + space.label(y) + ", " + space.label(z) + ")");
    }
  };
  if (n <= exhaustive_limit) {
    std::vector<Rational> d(n * n);
    for (Index x = 0; x < n; ++x) {
      for (Index y = 0; y < n; ++y) d[x * n + y] = space.dist(x, y);
    }
    for (Index x = 0; x < n; ++x) {
      if (d[x * n + x] != 0) note("d(x, x) != 0 at " + space.label(x));
      for (Index y = x + 1; y < n; ++y) {
        const auto& v = d[x * n + y];
        if (v != d[y * n + x]) note("asymmetric distance at (" + space.label(x) + ", " + space.label(y) + ")");
        if (v <= 0) note("distinct points at distance 0: (" + space.label(x) + ", " + space.label(y) + ")");
        if (!have_gap || v < out.min_gap) {
          out.min_gap = v;
          have_gap = true;
        }
      }
    }
    bool integral = std::all_of(d.begin(), d.end(), [](const Rational& v) { return v.denominator() == 1; });
    if (integral) {
      std::vector<std::int64_t> di(n * n);
      for (std::size_t i = 0; i < n * n; ++i) di[i] = d[i].numerator();
      for (Index x = 0; x < n; ++x) {
        for (Index z = x + 1; z < n; ++z) {
          auto dxz = di[x * n + z];
          for (Index y = 0; y < n; ++y) {
            if (y == x || y == z) continue;
            ++out.triples_checked;
            if (dxz > di[x * n + y] + di[y * n + z]) {
              note("triangle inequality fails at (" + space.label(x) + ", " + space.label(y) + ", " +
                   space.label(z) + ")");
            }
          }
        }
      }
    } else {
      for (Index x = 0; x < n; ++x) {
        for (Index z = x + 1; z < n; ++z) {
          for (Index y = 0; y < n; ++y) {
            if (y == x || y == z) continue;
            check_triple(x, y, z, d[x * n + y], d[y * n + z], d[x * n + z]);
          }
        }
      }
    }
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Index> pick(0, static_cast<Index>(n - 1));
    for (int t = 0; t < 20000; ++t) {
      Index x = pick(rng), y = pick(rng), z = pick(rng);
      auto dxy = space.dist(x, y), dyz = space.dist(y, z), dxz = space.dist(x, z);
      if (dxy != space.dist(y, x)) note("asymmetric distance at (" + space.label(x) + ", " + space.label(y) + ")");
      if (x != y && (!have_gap || dxy < out.min_gap)) {
        out.min_gap = dxy;
        have_gap = true;
      }
      if ((dxy == 0) != (x == y)) note("d(x, y) = 0 iff x = y fails at (" + space.label(x) + ", " + space.label(y) + ")");
      check_triple(x, y, z, dxy, dyz, dxz);
    }
  }
  if (have_gap && out.min_gap < 1) note("points closer than 1: uniform discreteness gap " + to_string(out.min_gap));
  for (int r = 0; r <= max_r; ++r) {
    std::size_t best = 0;
    Rational rr(r);
    for (Index x = 0; x < n; ++x) {
      if (!space.valid_at(x, rr)) continue;
      best = std::max(best, space.ball(x, rr).size());
    }
    out.max_ball.push_back(best);
  }
  return out;
}

}  // namespace coarse
