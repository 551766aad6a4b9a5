#include "coarse/generators.hpp"

#include <algorithm>

#include "coarse/combinators.hpp"
#include "coarse/errors.hpp"
#include "coarse/parallel.hpp"
#include "coarse/verify.hpp"

namespace coarse {

namespace {

/// Fill in the measured near ratio (ratio bounds are at most 2).
void measure_ratio(PropASetCert& cert) {
  cert.eps = Rational(2);
  auto rep = verify(cert);
  const auto* near = rep.find("near");
  cert.eps = near && near->worst ? near->worst->rational_part() : Rational(0);
}

using SetList = std::vector<std::pair<Index, std::int64_t>>;

SetList tagged(std::vector<Index> pts) {
  std::sort(pts.begin(), pts.end());
  SetList out;
  out.reserve(pts.size());
  for (auto p : pts) out.emplace_back(p, 1);
  return out;
}

}  // namespace

PropASetCert folner_prop_a(int n, int N, int window, const Rational& R, const Caps& caps) {
  if (n < 1 || N < 1) throw DomainError("Følner boxes need n >= 1 and N >= 1");
  if (window < n * N) throw TruncationError("window radius " + std::to_string(window) + " is smaller than nN = " +
                                            std::to_string(n * N));
  if (window > caps.max_radius) throw ResourceError("window radius exceeds the configured cap");
  auto ball = std::make_shared<const GroupBall>(lattice_group(n), window, caps.max_points);
  PropASetCert cert;
  cert.space = group_ball_space(ball);
  cert.R = R;
  cert.S = Rational(Integer(static_cast<std::int64_t>(n) * N));
  cert.margin = cert.S;
  cert.sets.resize(ball->size());
  // offsets of the box [-N, N]^n
  std::vector<Element> box{Element(n, 0)};
  for (int axis = 0; axis < n; ++axis) {
    std::vector<Element> next;
    for (const auto& b : box) {
      for (int c = -N; c <= N; ++c) {
        auto e = b;
        e[axis] = c;
        next.push_back(e);
      }
    }
    box = std::move(next);
  }
  parallel_for(ball->size(), [&](std::size_t i) {
    if (!cert.space->valid_at(static_cast<Index>(i), cert.margin)) return;
    std::vector<Index> pts;
    pts.reserve(box.size());
    for (const auto& off : box) {
      auto g = ball->model().multiply(ball->element(static_cast<Index>(i)), off);
      auto k = ball->find(g);
      if (!k) throw TruncationError("box around a valid point leaves the window");
      pts.push_back(*k);
    }
    cert.sets[i] = tagged(std::move(pts));
  });
  cert.provenance = {{"generator", "folner-zn"}, {"n", n}, {"N", N}, {"window", window}, {"R", to_string(R)}};
  measure_ratio(cert);
  return cert;
}

std::vector<Element> tree_ray(const Element& g, int N) {
  std::size_t k = 0;
  while (k < g.size() && g[k] == 1) ++k;
  std::vector<Element> out;
  Element cur = g;
  while (static_cast<int>(out.size()) < N) {
    out.push_back(cur);
    if (cur.size() > k) {
      cur.pop_back();
    } else {
      cur.push_back(1);
      ++k;
    }
  }
  return out;
}

PropASetCert tree_ray_prop_a(int rank, int N, int window, const Rational& R, const Caps& caps) {
  if (N < 1) throw DomainError("ray segments need N >= 1");
  if (window < N - 1) throw TruncationError("window radius is smaller than the ray segment");
  if (window > caps.max_radius) throw ResourceError("window radius exceeds the configured cap");
  auto ball = std::make_shared<const GroupBall>(free_group(rank), window, caps.max_points);
  PropASetCert cert;
  cert.space = group_ball_space(ball);
  cert.R = R;
  cert.S = Rational(Integer(N - 1));
  cert.margin = cert.S;
  cert.sets.resize(ball->size());
  parallel_for(ball->size(), [&](std::size_t i) {
    if (!cert.space->valid_at(static_cast<Index>(i), cert.margin)) return;
    std::vector<Index> pts;
    for (const auto& v : tree_ray(ball->element(static_cast<Index>(i)), N)) {
      auto k = ball->find(v);
      if (!k) throw TruncationError("ray from a valid point leaves the window");
      pts.push_back(*k);
    }
    cert.sets[i] = tagged(std::move(pts));
  });
  cert.provenance = {{"generator", "tree-ray"}, {"rank", rank}, {"N", N}, {"window", window}, {"R", to_string(R)}};
  measure_ratio(cert);
  return cert;
}

PropASetCert folner_balls(const SpacePtr& space, const Rational& N, const Rational& R) {
  if (space->count_valid(N) == 0) {
    throw TruncationError("no point of the window has validity radius " + to_string(N));
  }
  PropASetCert cert;
  cert.space = space;
  cert.R = R;
  cert.S = N;
  cert.margin = N;
  cert.sets.resize(space->size());
  parallel_for(space->size(), [&](std::size_t i) {
    auto x = static_cast<Index>(i);
    if (!space->valid_at(x, N)) return;
    cert.sets[i] = tagged(space->ball(x, N));
  });
  cert.provenance = {{"generator", "folner-balls"}, {"N", to_string(N)}, {"R", to_string(R)}, {"space", space->descriptor()}};
  measure_ratio(cert);
  return cert;
}

UnitField delta_field(const SpacePtr& space) {
  UnitField f;
  f.space = space;
  f.universe = point_universe(*space);
  f.vectors.resize(space->size());
  for (Index x = 0; x < space->size(); ++x) f.vectors[x] = SparseVector(f.universe, {{x, Surd(Rational(1))}});
  return f;
}

StrongEmbedCert uniform_strong(const SpacePtr& space, const Rational& R, const std::vector<Rational>& radii) {
  for (Index x = 0; x < space->size(); ++x) {
    if (space->validity(x)) throw DomainError("uniform fields need a complete finite space");
  }
  StrongEmbedCert cert;
  cert.field.space = space;
  cert.field.universe = point_universe(*space);
  std::vector<Index> all(space->size());
  for (Index x = 0; x < all.size(); ++x) all[x] = x;
  auto v = normalized_indicator(cert.field.universe, all);
  cert.field.vectors.assign(space->size(), v);
  cert.near = {R, Rational(0), NearForm::Norm};
  auto tails = measure_tails(cert.field, Rational(0), radii);
  for (std::size_t k = 0; k < radii.size(); ++k) cert.tails.push_back({radii[k], tails[k]});
  cert.provenance = {{"generator", "finite-uniform"}, {"space", space->descriptor()}};
  return cert;
}

SpacePtr cyclic_space(int order) {
  auto ball = std::make_shared<const GroupBall>(cyclic_group(order), order);
  return group_ball_space(ball);
}

ExactFamilyCert fiber_ball_family(const FamilyPtr& family, const Rational& N, const Rational& R) {
  const auto& space = family->domain();
  ExactFamilyCert cert;
  cert.family = family;
  cert.S = N;
  cert.margin = N;
  cert.field.space = family->domain_ptr();
  cert.field.universe = std::make_shared<Universe>("codomains", family->universe_labels());
  cert.field.vectors.resize(space.size());
  parallel_for(space.size(), [&](std::size_t i) {
    auto x = static_cast<Index>(i);
    if (!space.valid_at(x, N)) return;
    std::vector<Index> near;
    for (Index w = 0; w < family->universe_size(); ++w) {
      if (!family->fiber(w).empty() && family->dist_to_fiber(x, w) <= N) near.push_back(w);
    }
    cert.field.vectors[i] = normalized_indicator(cert.field.universe, std::move(near));
  });
  auto eps = measure_near_inner(cert.field, cert.margin, R);
  cert.near = {R, eps ? eps->rational_part() : Rational(0), NearForm::Inner};
  if (eps && !eps->is_rational()) cert.near.eps = eps->upper_bound(6);
  cert.provenance = {{"generator", "fiber-balls"}, {"N", to_string(N)}, {"R", to_string(R)}};
  return cert;
}

}  // namespace coarse
