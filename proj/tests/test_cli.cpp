#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() / ("coarse_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator()(const std::string& name) const { return (dir / name).string(); }
};

int run(const std::string& args, const std::string& log) {
  std::string cmd = std::string(COARSE_CLI_PATH) + " " + args + " >" + log + " 2>&1";
  int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string config(const std::string& name) { return std::string(COARSE_CONFIG_DIR) + "/" + name; }

}  // namespace

TEST_CASE("generate, verify, convert") {
  Scratch tmp;
  auto log = tmp("log.txt");
  REQUIRE(run("generate folner --dim 1 --N 10 --window 60 --R 2 -o " + tmp("sets.json"), log) == 0);
  CHECK(run("verify " + tmp("sets.json") + " --report " + tmp("rep.json"), log) == 0);
  auto rep = nlohmann::json::parse(slurp(tmp("rep.json")));
  CHECK(rep["verdict"] == "pass");
  CHECK(rep.contains("config"));

  CHECK(run("convert sets-to-vector " + tmp("sets.json") + " -o " + tmp("vec.json"), log) == 0);
  CHECK(run("convert prop-a-to-strong " + tmp("vec.json") + " -o " + tmp("strong.json"), log) == 0);
  CHECK(run("convert strong-to-coarse " + tmp("strong.json") + " -o " + tmp("coarse.json"), log) == 0);
  CHECK(run("verify " + tmp("coarse.json"), log) == 0);
}

TEST_CASE("a claim tighter than the sets support fails with exit 1") {
  Scratch tmp;
  auto log = tmp("log.txt");
  REQUIRE(run("generate folner --dim 1 --N 1 --window 20 --R 1 -o " + tmp("sets.json"), log) == 0);
  auto j = nlohmann::json::parse(slurp(tmp("sets.json")));
  j["near"]["eps"] = "1/5";
  std::ofstream(tmp("tight.json")) << j.dump();
  CHECK(run("verify " + tmp("tight.json"), log) == 1);
  CHECK(slurp(log).find("fail") != std::string::npos);
}

TEST_CASE("malformed input exits 2") {
  Scratch tmp;
  auto log = tmp("log.txt");
  std::ofstream(tmp("bad.json")) << "{\"kind\": \"prop-a-vector\"";
  CHECK(run("verify " + tmp("bad.json"), log) == 2);
  std::ofstream(tmp("odd.json")) << "{\"kind\": \"mystery\"}";
  CHECK(run("verify " + tmp("odd.json"), log) == 2);
  CHECK(run("verify " + tmp("missing.json"), log) == 2);
}

TEST_CASE("group queries") {
  Scratch tmp;
  auto log = tmp("log.txt");
  REQUIRE(run("group constant --action " + config("z_index2.json") + " -o " + tmp("c.json"), log) == 0);
  auto c = nlohmann::json::parse(slurp(tmp("c.json")));
  CHECK(c["C"] == 2);
  REQUIRE(run("group orbits --action " + config("z_index2.json") + " -o " + tmp("o.json"), log) == 0);
  CHECK(nlohmann::json::parse(slurp(tmp("o.json")))["orbits"].size() == 2);
}

TEST_CASE("pipeline outcomes") {
  Scratch tmp;
  auto log = tmp("log.txt");
  CHECK(run("pipeline extension --config " + config("z2_extension_small_window.json") + " --out-dir " + tmp("small"),
            log) == 2);
  CHECK(slurp(log).find("stage quotient-input") != std::string::npos);

  CHECK(run("pipeline extension --config " + config("z2_extension_whole.json") + " --out-dir " + tmp("whole"), log) ==
        0);
  CHECK(slurp(log).find("path: subgroup") != std::string::npos);
  auto report = nlohmann::json::parse(slurp(tmp("whole/final.report.json")));
  CHECK(report["verdict"] == "pass");
  CHECK(fs::exists(tmp("whole/pipeline.json")));
}
