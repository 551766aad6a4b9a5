#pragma once

#include "coarse/certificates.hpp"

namespace coarse {

VerificationReport verify(const PropASetCert& cert);
VerificationReport verify(const PropAVectorCert& cert);
VerificationReport verify(const StrongEmbedCert& cert);
VerificationReport verify(const CoarseWitness& cert);
VerificationReport verify(const ExactFamilyCert& cert);
VerificationReport verify(const SEFamilyCert& cert);
VerificationReport verify(const EquiFamilyCert& cert);

/// Mixed tails sum_{w outside B_S(x) and B_S(y)} |b_x(w) b_y(w)| against
/// single tails, over all valid pairs of a located strong certificate.
struct TwoPrimeResult {
  SurdSum mixed_sup;      // sup over pairs of the mixed tail
  Rational tail_sup{0};   // sup over points of the single tail
  bool diagonal_equal = true;  // mixed(x, x) == tail(x) everywhere
  bool sup_form = true;        // mixed_sup <= 2 tail_sup
  bool pair_sum_form = true;   // mixed(x, y) <= tail(x) + tail(y) for every pair
  bool pair_root_form = true;  // mixed(x, y) <= sqrt(tail(x)) + sqrt(tail(y))
  std::vector<std::string> witness;  // pair realizing mixed_sup
  std::vector<std::string> sum_form_violation;
  std::uint64_t pairs = 0;
  nlohmann::json to_json() const;
};

TwoPrimeResult verify_two_prime(const StrongEmbedCert& cert, const Rational& S);

/// max over the support of v of d(x, location), for located fields.
Rational location_radius(const FiniteMetricSpace& space, Index x, const SparseVector& v);

}  // namespace coarse
