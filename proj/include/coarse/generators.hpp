#pragma once

// Ground-truth certificates for standard spaces. Every generator measures the
// parameters it reports.

#include "coarse/certificates.hpp"

namespace coarse {

/// Z^n window of the given l^1 radius, A_x = (x + [-N, N]^n) x {1}, S = nN.
PropASetCert folner_prop_a(int n, int N, int window, const Rational& R, const Caps& caps = {});

/// Free group window, A_g = first N vertices of the geodesic ray from g
/// toward a^infinity, S = N - 1.
PropASetCert tree_ray_prop_a(int rank, int N, int window, const Rational& R, const Caps& caps = {});

/// The ray above as reduced words: g, then toward a^infinity.
std::vector<Element> tree_ray(const Element& g, int N);

/// A_x = B_N(x) x {1} on any space, S = N.
PropASetCert folner_balls(const SpacePtr& space, const Rational& N, const Rational& R);

/// beta_x = delta_x over l^2(X).
UnitField delta_field(const SpacePtr& space);

/// beta_x = uniform unit vector over every point of a complete space; the tail
/// profile is measured at the given radii.
StrongEmbedCert uniform_strong(const SpacePtr& space, const Rational& R, const std::vector<Rational>& radii);

/// Cyclic group Z/order with its generator word metric.
SpacePtr cyclic_space(int order);

/// xi_x = normalized indicator of {w : d(x, fiber(w)) <= N}; S = N.
ExactFamilyCert fiber_ball_family(const FamilyPtr& family, const Rational& N, const Rational& R);

}  // namespace coarse
