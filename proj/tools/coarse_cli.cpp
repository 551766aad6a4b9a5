// Command-line front end: build and check spaces, generate, verify, convert
// and combine certificates, inspect group actions, and run the extension
// pipeline. Exit status: 0 pass, 1 verification failure or refused
// parameters, 2 bad input or resource/truncation problems.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "coarse/action.hpp"
#include "coarse/combinators.hpp"
#include "coarse/errors.hpp"
#include "coarse/generators.hpp"
#include "coarse/parallel.hpp"
#include "coarse/serialize.hpp"
#include "coarse/verify.hpp"

using namespace coarse;
using nlohmann::json;

namespace {

struct RunConfig {
  int threads = 0;
  std::uint64_t seed = 1;
  std::string tolerance = "0";
  Caps caps;
  std::string report;
  std::string csv;

  json to_json() const { return {{"seed", seed}, {"tolerance", tolerance}}; }
};

struct Failed {
  int code;
};

void emit(const json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(1) << "\n";
  } else {
    write_json_file(path, j);
  }
}

/// Adds the configured tolerance to every bound (inexact inputs only).
VerificationReport with_tolerance(VerificationReport rep, const RunConfig& cfg) {
  auto tol = parse_rational(cfg.tolerance);
  if (tol < 0) throw DomainError("tolerance must be nonnegative");
  if (tol != 0) {
    for (auto& c : rep.conditions) c.bound += SurdSum(tol);
  }
  return rep;
}

json report_json(const VerificationReport& rep, const RunConfig& cfg) {
  auto j = rep.to_json();
  j["config"] = cfg.to_json();
  return j;
}

void write_csv(const VerificationReport& rep, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot write " + path);
  out << "name,checked,skipped,worst,bound,pass\n";
  for (const auto& c : rep.conditions) {
    out << c.name << "," << c.checked << "," << c.skipped << "," << (c.worst ? to_string(*c.worst) : "") << ","
        << to_string(c.bound) << "," << (c.pass() ? "true" : "false") << "\n";
  }
}

/// Verifies, writes the report, and returns whether it passed.
bool report(const AnyCert& cert, const RunConfig& cfg, const std::string& path) {
  auto rep = with_tolerance(verify_any(cert), cfg);
  emit(report_json(rep, cfg), path.empty() ? cfg.report : path);
  if (!cfg.csv.empty()) write_csv(rep, cfg.csv);
  return rep.pass();
}

AnyCert load_cert(const std::string& path, const RunConfig& cfg) { return cert_from_json(read_json_file(path), cfg.caps); }

SpacePtr load_space(const std::string& path, const RunConfig& cfg) {
  auto j = read_json_file(path);
  if (j.contains("space") && j.at("space").is_object()) j = j.at("space");
  return build_space(j, cfg.caps);
}

std::vector<Rational> parse_list(const std::string& text) {
  std::vector<Rational> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse_rational(item));
  }
  return out;
}

// ---------------------------------------------------------------- space

void add_space(CLI::App& app, RunConfig& cfg) {
  auto* space = app.add_subcommand("space", "Build or check finite metric spaces");
  space->require_subcommand(1);

  auto* build = space->add_subcommand("build", "Build a space from a descriptor and write it");
  static std::string config, out;
  build->add_option("--config", config, "Space descriptor (JSON)")->required();
  build->add_option("-o,--output", out, "Output file");
  build->callback([&cfg] {
    auto s = load_space(config, cfg);
    std::size_t complete = 0;
    Rational min_r(0);
    bool have = false;
    for (Index x = 0; x < s->size(); ++x) {
      const auto& r = s->validity(x);
      if (!r) {
        ++complete;
      } else if (!have || *r < min_r) {
        min_r = *r;
        have = true;
      }
    }
    emit({{"space", space_to_json(*s)},
          {"points", s->size()},
          {"complete_points", complete},
          {"min_validity", have ? json(to_string(min_r)) : json(nullptr)}},
         out);
  });

  auto* check = space->add_subcommand("check", "Check the metric axioms");
  static std::string file;
  static int max_r = 4;
  static std::size_t limit = 500;
  check->add_option("space", file, "Space file")->required();
  check->add_option("--max-radius-profile", max_r, "Largest r in the ball-size profile");
  check->add_option("--exhaustive-limit", limit, "Largest size checked exhaustively");
  check->callback([&cfg] {
    auto s = load_space(file, cfg);
    auto mc = check_metric(*s, cfg.seed, max_r, limit);
    json j{{"kind", "metric-check"},
           {"verdict", mc.violation ? "fail" : "pass"},
           {"points", s->size()},
           {"triples_checked", mc.triples_checked},
           {"min_gap", to_string(mc.min_gap)},
           {"max_ball", mc.max_ball},
           {"sampled", s->size() > limit},
           {"config", cfg.to_json()}};
    if (mc.violation) j["violation"] = *mc.violation;
    emit(j, cfg.report);
    if (mc.violation) throw Failed{1};
  });
}

// ---------------------------------------------------------------- generate

void add_generate(CLI::App& app, RunConfig& cfg) {
  auto* gen = app.add_subcommand("generate", "Write a generated certificate");
  gen->require_subcommand(1);
  static std::string out, space, family, base, action, R = "1", eps = "0", radii = "0";
  static int dim = 1, rank = 2, N = 1, window = 10, order = 0, component = 0;
  static std::string Nq = "1";
  auto common = [](CLI::App* c) { c->add_option("-o,--output", out, "Output file")->required(); };

  auto* folner = gen->add_subcommand("folner", "Boxes x + [-N, N]^n on a Z^n window");
  common(folner);
  folner->add_option("--dim", dim);
  folner->add_option("--N", N)->required();
  folner->add_option("--window", window)->required();
  folner->add_option("--R", R);
  folner->callback([&cfg] { write_json_file(out, to_json(folner_prop_a(dim, N, window, parse_rational(R), cfg.caps))); });

  auto* ray = gen->add_subcommand("tree-ray", "Ray segments toward a^inf in a free group");
  common(ray);
  ray->add_option("--rank", rank);
  ray->add_option("--N", N)->required();
  ray->add_option("--window", window)->required();
  ray->add_option("--R", R);
  ray->callback([&cfg] { write_json_file(out, to_json(tree_ray_prop_a(rank, N, window, parse_rational(R), cfg.caps))); });

  auto* balls = gen->add_subcommand("folner-balls", "A_x = B_N(x) on a given space");
  common(balls);
  balls->add_option("--space", space)->required();
  balls->add_option("--N", Nq)->required();
  balls->add_option("--R", R);
  balls->callback([&cfg] {
    write_json_file(out, to_json(folner_balls(load_space(space, cfg), parse_rational(Nq), parse_rational(R))));
  });

  auto* delta = gen->add_subcommand("delta", "Point masses, as a strong certificate");
  common(delta);
  delta->add_option("--space", space)->required();
  delta->add_option("--R", R);
  delta->add_option("--eps", eps, "Claimed norm tolerance");
  delta->callback([&cfg] {
    StrongEmbedCert c;
    c.field = delta_field(load_space(space, cfg));
    c.near = {parse_rational(R), parse_rational(eps), NearForm::Norm};
    c.tails = {{Rational(0), Rational(0)}};
    c.provenance = {{"generator", "delta"}};
    write_json_file(out, to_json(c));
  });

  auto* uniform = gen->add_subcommand("uniform", "Uniform vector on a complete finite space");
  common(uniform);
  uniform->add_option("--space", space);
  uniform->add_option("--order", order, "Cyclic group order instead of --space");
  uniform->add_option("--R", R);
  uniform->add_option("--radii", radii, "Comma-separated tail radii");
  uniform->callback([&cfg] {
    auto s = order > 0 ? cyclic_space(order) : load_space(space, cfg);
    write_json_file(out, to_json(uniform_strong(s, parse_rational(R), parse_list(radii))));
  });

  auto* fb = gen->add_subcommand("fiber-balls", "Exact family certificate from fiber neighbourhoods");
  common(fb);
  fb->add_option("--family", family)->required();
  fb->add_option("--N", Nq)->required();
  fb->add_option("--R", R);
  fb->callback([&cfg] {
    auto fam = build_family(read_json_file(family), cfg.caps);
    write_json_file(out, to_json(fiber_ball_family(fam, parse_rational(Nq), parse_rational(R))));
  });

  auto* tr = gen->add_subcommand("transport", "Subgroup certificate moved to every coset of a quotient family");
  common(tr);
  tr->add_option("--family", family)->required();
  tr->add_option("--component", component);
  tr->add_option("--base", base, "Certificate on the subgroup window")->required();
  tr->callback([&cfg] {
    auto fam = build_family(read_json_file(family), cfg.caps);
    auto b = load_cert(base, cfg);
    auto idx = static_cast<std::size_t>(component);
    EquiFamilyCert e;
    if (auto* p = std::get_if<PropAVectorCert>(&b)) {
      e = transport_coset_certs(fam, idx, *p);
    } else if (auto* s = std::get_if<StrongEmbedCert>(&b)) {
      e = transport_coset_certs(fam, idx, *s);
    } else if (auto* w = std::get_if<CoarseWitness>(&b)) {
      e = transport_coset_certs(fam, idx, *w);
    } else {
      throw MalformedCertificate("transport needs a prop-a-vector, strong-embed or coarse-witness base");
    }
    write_json_file(out, to_json(e));
  });

  auto* af = gen->add_subcommand("action-family", "SE family certificate from a cofinite action");
  common(af);
  af->add_option("--action", action)->required();
  af->add_option("--base", base, "Strong certificate on the acted-on space")->required();
  af->add_option("--R", R);
  af->add_option("--eps", eps, "Target bound on |1 - <xi_g, xi_h>|");
  af->callback([&cfg] {
    auto a = build_action(read_json_file(action), cfg.caps);
    auto b = cert_as<StrongEmbedCert>(load_cert(base, cfg), "strong-embed");
    auto orbits = orbit_decomposition(a);
    auto tk = compute_tk(a, orbits, false);
    NearBound target{parse_rational(R), parse_rational(eps), NearForm::Inner};
    write_json_file(out, to_json(action_to_se_family(a, orbits, tk, b, target)));
  });
}

// ---------------------------------------------------------------- verify / convert / combine

void add_verify(CLI::App& app, RunConfig& cfg) {
  auto* v = app.add_subcommand("verify", "Verify a certificate file");
  static std::string file;
  v->add_option("certificate", file)->required();
  v->callback([&cfg] {
    if (!report(load_cert(file, cfg), cfg, "")) throw Failed{1};
  });
}

void add_convert(CLI::App& app, RunConfig& cfg) {
  auto* conv = app.add_subcommand("convert", "Convert between certificate kinds");
  static std::string mode, in, out;
  conv->add_option("mode", mode, "sets-to-vector | prop-a-to-strong | strong-to-coarse")
      ->required()
      ->check(CLI::IsMember({"sets-to-vector", "prop-a-to-strong", "strong-to-coarse"}));
  conv->add_option("input", in)->required();
  conv->add_option("-o,--output", out)->required();
  conv->callback([&cfg] {
    auto c = load_cert(in, cfg);
    AnyCert result;
    if (mode == "sets-to-vector") {
      result = sets_to_vector(cert_as<PropASetCert>(c, "prop-a-sets"));
    } else if (mode == "prop-a-to-strong") {
      result = prop_a_to_strong(cert_as<PropAVectorCert>(c, "prop-a-vector"));
    } else {
      result = strong_to_coarse(cert_as<StrongEmbedCert>(c, "strong-embed"));
    }
    write_json_file(out, to_json(result));
    if (!report(result, cfg, "")) throw Failed{1};
  });
}

void add_combine(CLI::App& app, RunConfig& cfg) {
  auto* comb = app.add_subcommand("combine", "Glue an outer family certificate with fiber certificates");
  static std::string mode, outer, fibers, out, R = "1", eps = "1", delta = "1", negotiation = "analytic";
  comb->add_option("mode", mode, "exact | se-coarse | se-strong")
      ->required()
      ->check(CLI::IsMember({"exact", "se-coarse", "se-strong"}));
  comb->add_option("--outer", outer)->required();
  comb->add_option("--fibers", fibers)->required();
  comb->add_option("--R", R);
  comb->add_option("--eps", eps);
  comb->add_option("--delta", delta);
  comb->add_option("--negotiation", negotiation)->check(CLI::IsMember({"analytic", "realized"}));
  comb->add_option("-o,--output", out)->required();
  comb->callback([&cfg] {
    CombineTargets t{parse_rational(R), parse_rational(eps), parse_rational(delta), parse_negotiation(negotiation)};
    auto f = cert_as<EquiFamilyCert>(load_cert(fibers, cfg), "equi-family");
    auto o = load_cert(outer, cfg);
    AnyCert result;
    if (mode == "exact") {
      result = combine_exact(cert_as<ExactFamilyCert>(o, "exact-family"), f, t);
    } else if (mode == "se-coarse") {
      result = combine_se_coarse(cert_as<SEFamilyCert>(o, "se-family"), f, t);
    } else {
      result = combine_se_strong(cert_as<SEFamilyCert>(o, "se-family"), f, t);
    }
    write_json_file(out, to_json(result));
    if (!report(result, cfg, "")) throw Failed{1};
  });
}

// ---------------------------------------------------------------- group

void add_group(CLI::App& app, RunConfig& cfg) {
  auto* grp = app.add_subcommand("group", "Orbits, T_k profile and displacement constant of an action");
  grp->require_subcommand(1);
  static std::string action, out;
  static bool identity_only = false, exhaustive = false;
  auto common = [](CLI::App* c) {
    c->add_option("--action", action, "Action descriptor (JSON)")->required();
    c->add_option("-o,--output", out);
  };
  auto* orb = grp->add_subcommand("orbits", "Orbit representatives and stabilizers");
  common(orb);
  orb->callback([&cfg] {
    auto a = build_action(read_json_file(action), cfg.caps);
    auto j = orbit_decomposition(a).to_json(a);
    if (auto bad = check_action(a, cfg.seed)) j["action_violation"] = *bad;
    j["config"] = cfg.to_json();
    emit(j, out);
  });
  auto* tk = grp->add_subcommand("tk", "Minimal translators, N_m and T_k");
  common(tk);
  tk->add_flag("--identity-only", identity_only, "Check the inclusion at the identity only");
  tk->callback([&cfg] {
    auto a = build_action(read_json_file(action), cfg.caps);
    auto orbits = orbit_decomposition(a);
    auto p = compute_tk(a, orbits, !identity_only);
    auto j = p.to_json(a);
    j["config"] = cfg.to_json();
    emit(j, out);
    if (p.inclusion_violation) throw Failed{1};
  });
  auto* cst = grp->add_subcommand("constant", "Displacement constant C");
  common(cst);
  cst->add_flag("--exhaustive", exhaustive, "Also compute the exhaustive pair ratio");
  cst->callback([&cfg] {
    auto a = build_action(read_json_file(action), cfg.caps);
    auto orbits = orbit_decomposition(a);
    json j{{"C", displacement_constant(a, orbits)}, {"config", cfg.to_json()}};
    if (exhaustive) j["exhaustive_ratio"] = to_string(displacement_ratio_exhaustive(a, orbits));
    emit(j, out);
  });
}

// ---------------------------------------------------------------- pipeline

StrongEmbedCert input_cert(const json& spec, const SpacePtr& space, const RunConfig& cfg, const std::string& dir) {
  if (spec.contains("file")) {
    auto p = std::filesystem::path(spec.at("file").get<std::string>());
    if (p.is_relative()) p = std::filesystem::path(dir) / p;
    return cert_as<StrongEmbedCert>(load_cert(p.string(), cfg), "strong-embed");
  }
  auto gen = spec.value("generate", "");
  if (gen == "folner-balls") {
    auto sets = folner_balls(space, Rational(Integer{spec.at("N").get<std::int64_t>()}),
                             parse_rational(spec.at("R").get<std::string>()));
    return prop_a_to_strong(sets_to_vector(sets));
  }
  if (gen == "uniform") {
    std::vector<Rational> radii;
    for (const auto& r : spec.value("radii", json::array())) radii.push_back(parse_rational(r.get<std::string>()));
    return uniform_strong(space, parse_rational(spec.value("R", "1")), radii);
  }
  throw MalformedCertificate("input certificate needs \"file\" or \"generate\": folner-balls | uniform");
}

void add_pipeline(CLI::App& app, RunConfig& cfg) {
  auto* pipe = app.add_subcommand("pipeline", "Multi-stage constructions");
  pipe->require_subcommand(1);
  auto* ext = pipe->add_subcommand("extension", "Strong certificate for G from certificates on G/H and H");
  static std::string config, out_dir;
  ext->add_option("--config", config, "Pipeline configuration (JSON)")->required();
  ext->add_option("--out-dir", out_dir, "Artifact directory (default: $COARSE_CACHE_DIR or .)");
  ext->callback([&cfg] {
    auto c = read_json_file(config);
    auto dir = out_dir;
    if (dir.empty()) {
      const char* env = std::getenv("COARSE_CACHE_DIR");
      dir = env ? env : ".";
    }
    std::filesystem::create_directories(dir);
    auto cfg_dir = std::filesystem::path(config).parent_path().string();
    auto path = [&](const std::string& name) { return (std::filesystem::path(dir) / name).string(); };

    json log;
    try {
      auto model = make_group(c.at("group"));
      int radius = c.at("radius").get<int>();
      if (radius > cfg.caps.max_radius) throw ResourceError("ball radius exceeds the configured cap");
      auto ball = std::make_shared<const GroupBall>(model, radius, cfg.caps.max_points);
      auto gs = group_ball_space(ball);
      auto H = make_subgroup(*model, c.at("subgroup"));
      check_subgroup(*ball, *H, cfg.seed);
      auto q = quotient_space(ball, H, cfg.seed);
      auto hs = subgroup_space(gs, H);
      const auto& t = c.at("targets");
      CombineTargets targets{parse_rational(t.at("R").get<std::string>()),
                             parse_rational(t.at("eps").get<std::string>()), Rational(1),
                             parse_negotiation(t.value("negotiation", "analytic"))};

      StrongEmbedCert qcert, hcert;
      try {
        qcert = input_cert(c.at("quotient_certificate"), q.space, cfg, cfg_dir);
      } catch (const Error& e) {
        throw TruncationError(std::string("stage quotient-input: ") + e.what());
      }
      try {
        hcert = input_cert(c.at("subgroup_certificate"), hs, cfg, cfg_dir);
      } catch (const Error& e) {
        throw TruncationError(std::string("stage subgroup-input: ") + e.what());
      }
      write_json_file(path("quotient.json"), to_json(qcert));
      write_json_file(path("subgroup.json"), to_json(hcert));

      auto res = extension_pipeline(gs, H, q, qcert, hcert, targets);
      if (res.outer) {
        write_json_file(path("outer.json"), to_json(*res.outer));
        emit(report_json(verify(*res.outer), cfg), path("outer.report.json"));
      }
      if (res.fibers) {
        write_json_file(path("fibers.json"), to_json(*res.fibers));
        emit(report_json(verify(*res.fibers), cfg), path("fibers.report.json"));
      }
      write_json_file(path("final.json"), to_json(res.cert));
      auto rep = with_tolerance(verify(res.cert), cfg);
      emit(report_json(rep, cfg), path("final.report.json"));
      log = res.log;
      log["config"] = cfg.to_json();
      log["artifacts"] = {"quotient.json", "subgroup.json", "final.json"};
      write_json_file(path("pipeline.json"), log);
      std::cout << "path: " << res.path << "\nfinal: " << (rep.pass() ? "pass" : "fail") << " (" << path("final.json")
                << ")\n";
      if (!rep.pass()) throw Failed{1};
    } catch (const nlohmann::json::exception& e) {
      throw MalformedCertificate(std::string("pipeline config: ") + e.what());
    }
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certificates for property A, coarse and strong embeddability on finite windows"};
  app.require_subcommand(1);
  app.fallthrough();
  RunConfig cfg;
  app.add_option("--threads", cfg.threads, "Worker threads (0: hardware)");
  app.add_option("--seed", cfg.seed, "Seed for sampled checks");
  app.add_option("--tolerance", cfg.tolerance, "Additive allowance on every bound (exact by default)");
  app.add_option("--max-points", cfg.caps.max_points);
  app.add_option("--max-radius", cfg.caps.max_radius);
  app.add_option("--max-universe", cfg.caps.max_universe);
  app.add_option("--report", cfg.report, "Report file (default: stdout)");
  app.add_option("--csv", cfg.csv, "Also write the condition table as CSV");
  app.parse_complete_callback([&cfg] {
    if (cfg.threads > 0) set_parallelism(cfg.threads);
    if (cfg.caps.max_points == 0 || cfg.caps.max_radius <= 0 || cfg.caps.max_universe == 0) {
      throw CLI::ValidationError("caps must be positive");
    }
  });

  add_space(app, cfg);
  add_generate(app, cfg);
  add_verify(app, cfg);
  add_convert(app, cfg);
  add_combine(app, cfg);
  add_group(app, cfg);
  add_pipeline(app, cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const Failed& f) {
    return f.code;
  } catch (const ParameterMismatch& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
