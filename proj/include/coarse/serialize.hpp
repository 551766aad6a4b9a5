#pragma once

// JSON round-trips for every certificate kind. Rationals are strings "p/q",
// surds "c*sqrt(r)"; spaces and families are stored by descriptor, so a file
// is self-contained.

#include <string>
#include <variant>

#include <json.hpp>

#include "coarse/certificates.hpp"
#include "coarse/errors.hpp"

namespace coarse {

using AnyCert = std::variant<PropASetCert, PropAVectorCert, StrongEmbedCert, CoarseWitness, ExactFamilyCert,
                             SEFamilyCert, EquiFamilyCert>;

/// "prop-a-sets", "prop-a-vector", "strong-embed", "coarse-witness",
/// "exact-family", "se-family" or "equi-family".
std::string cert_kind(const AnyCert& cert);

nlohmann::json to_json(const PropASetCert& cert);
nlohmann::json to_json(const PropAVectorCert& cert);
nlohmann::json to_json(const StrongEmbedCert& cert);
nlohmann::json to_json(const CoarseWitness& cert);
nlohmann::json to_json(const ExactFamilyCert& cert);
nlohmann::json to_json(const SEFamilyCert& cert);
nlohmann::json to_json(const EquiFamilyCert& cert);
nlohmann::json to_json(const AnyCert& cert);

/// Schema problems raise MalformedCertificate; unknown labels DomainError.
AnyCert cert_from_json(const nlohmann::json& json, const Caps& caps = {});

template <class T>
T cert_as(const AnyCert& cert, const std::string& expected) {
  if (const auto* p = std::get_if<T>(&cert)) return *p;
  throw MalformedCertificate("expected a " + expected + " certificate, got " + cert_kind(cert));
}

VerificationReport verify_any(const AnyCert& cert);

nlohmann::json near_to_json(const NearBound& nb);
NearBound near_from_json(const nlohmann::json& json);
nlohmann::json profile_to_json(const Profile& p);
Profile profile_from_json(const nlohmann::json& json);

/// Parse a file; I/O and syntax problems raise MalformedCertificate.
nlohmann::json read_json_file(const std::string& path);
/// Indented, key-sorted, newline-terminated.
void write_json_file(const std::string& path, const nlohmann::json& json);

}  // namespace coarse
