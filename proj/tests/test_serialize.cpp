#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>

#include "coarse/action.hpp"
#include "coarse/family.hpp"
#include "coarse/generators.hpp"
#include "coarse/serialize.hpp"
#include "coarse/verify.hpp"

using namespace coarse;

namespace {

void round_trip(const AnyCert& cert) {
  auto j = to_json(cert);
  auto back = cert_from_json(j);
  CHECK(cert_kind(back) == cert_kind(cert));
  CHECK(to_json(back) == j);
  CHECK(verify_any(back).to_json() == verify_any(cert).to_json());
}

struct Lines {
  SpacePtr gs;
  FamilyPtr family;
  SpacePtr line;
};

Lines lines(int radius) {
  auto ball = std::make_shared<const GroupBall>(lattice_group(2), radius);
  auto gs = group_ball_space(ball);
  auto H = coordinate_subgroup({1});
  return {gs, quotient_family(gs, {quotient_space(ball, H)}), subgroup_space(gs, H)};
}

}  // namespace

TEST_CASE("every certificate kind survives a round trip") {
  auto sets = folner_prop_a(1, 3, 20, Rational(2));
  auto vec = sets_to_vector(sets);
  auto strong = prop_a_to_strong(vec);
  auto coarse_w = strong_to_coarse(strong);
  auto L = lines(14);
  auto exact = fiber_ball_family(L.family, Rational(2), Rational(2));
  auto se = exact_to_se(exact);
  auto equi = transport_coset_certs(L.family, 0, sets_to_vector(folner_balls(L.line, Rational(3), Rational(2))));

  SUBCASE("sets") { round_trip(sets); }
  SUBCASE("vector") { round_trip(vec); }
  SUBCASE("strong") { round_trip(strong); }
  SUBCASE("coarse") { round_trip(coarse_w); }
  SUBCASE("uniform on a cycle") { round_trip(uniform_strong(cyclic_space(12), Rational(1), {Rational(1)})); }
  SUBCASE("tree ray") { round_trip(tree_ray_prop_a(2, 3, 4, Rational(1))); }
  SUBCASE("exact family") { round_trip(exact); }
  SUBCASE("se family") { round_trip(se); }
  SUBCASE("equi family") { round_trip(equi); }
}

TEST_CASE("files round trip byte for byte") {
  auto dir = std::filesystem::temp_directory_path() / "coarse_serialize_test";
  std::filesystem::create_directories(dir);
  auto path = (dir / "cert.json").string();
  auto j = to_json(prop_a_to_strong(sets_to_vector(folner_prop_a(2, 2, 6, Rational(1)))));
  write_json_file(path, j);
  CHECK(read_json_file(path) == j);
  auto again = (dir / "again.json").string();
  write_json_file(again, to_json(cert_from_json(read_json_file(path))));
  std::ifstream a(path), b(again);
  std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
  CHECK(sa == sb);
  CHECK(sa.back() == '\n');
  std::filesystem::remove_all(dir);
}

TEST_CASE("malformed certificates") {
  auto good = to_json(sets_to_vector(folner_prop_a(1, 2, 8, Rational(1))));

  CHECK_THROWS_AS(cert_from_json(nlohmann::json::array()), MalformedCertificate);
  CHECK_THROWS_AS(cert_from_json(nlohmann::json{{"kind", "nonsense"}}), MalformedCertificate);
  CHECK_THROWS_AS(cert_from_json(nlohmann::json{{"kind", 4}}), MalformedCertificate);

  auto j = good;
  j.erase("near");
  CHECK_THROWS_AS(cert_from_json(j), MalformedCertificate);

  j = good;
  j["S"] = 3.5;
  CHECK_THROWS_AS(cert_from_json(j), MalformedCertificate);

  j = good;
  j["S"] = "one/two";
  CHECK_THROWS_AS(cert_from_json(j), MalformedCertificate);

  j = good;
  j["near"] = "close";
  CHECK_THROWS_AS(cert_from_json(j), MalformedCertificate);

  auto sets = to_json(folner_prop_a(1, 2, 8, Rational(1)));
  auto first = sets["sets"].begin();
  (*first)[0] = nlohmann::json::array({"0"});
  CHECK_THROWS_AS(cert_from_json(sets), MalformedCertificate);

  CHECK_THROWS_AS(read_json_file("/nonexistent/cert.json"), MalformedCertificate);
  auto path = (std::filesystem::temp_directory_path() / "coarse_bad.json").string();
  {
    std::ofstream out(path);
    out << "{\"kind\": ";
  }
  CHECK_THROWS_AS(read_json_file(path), MalformedCertificate);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(cert_as<StrongEmbedCert>(cert_from_json(good), "strong-embed"), MalformedCertificate);
}
