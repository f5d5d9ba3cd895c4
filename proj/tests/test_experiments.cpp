#include <doctest.h>

#include <filesystem>
#include <string>

#include <json.hpp>

#include "critsde/common.hpp"
#include "critsde/experiments.hpp"
#include "critsde/io.hpp"

using namespace critsde;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& leaf) {
  const fs::path dir = fs::temp_directory_path() / ("critsde_exp_" + leaf);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("config parsing fills defaults and respects overrides") {
  const ExperimentConfig cfg = parse_config(json{{"experiment", "simulate"}});
  CHECK(cfg.experiment == "simulate");
  CHECK(cfg.exps.p == 2.0);
  CHECK(cfg.exps.q == 4.0);
  CHECK(cfg.exps.dim == 1);
  CHECK(cfg.exps.T == 1.0);
  CHECK(cfg.seed == 2026);
  CHECK(cfg.workers == 1);
  CHECK(!cfg.strict);
  CHECK(cfg.out_dir == fs::path("runs") / "simulate");

  const ExperimentConfig full = parse_config(json{
      {"experiment", "krylov-check"},
      {"exponents", {{"p", 3.0}, {"q", 3.0}, {"d", 1}, {"T", 2.0}}},
      {"seed", 7},
      {"workers", 4},
      {"strict", true},
      {"out", "elsewhere"},
      {"params", json::object()}});
  CHECK(full.exps.p == 3.0);
  CHECK(full.exps.q == 3.0);
  CHECK(full.exps.T == 2.0);
  CHECK(full.seed == 7);
  CHECK(full.workers == 4);
  CHECK(full.strict);
  CHECK(full.out_dir == fs::path("elsewhere"));
}

TEST_CASE("config parsing rejects malformed documents") {
  CHECK_THROWS_AS((void)parse_config(json::object()), ConfigError);
  CHECK_THROWS_AS((void)parse_config(json{{"experiment", "unknown-name"}}),
                  ConfigError);
  CHECK_THROWS_AS(
      (void)parse_config(json{{"experiment", "simulate"}, {"typo", 1}}),
      ConfigError);
  CHECK_THROWS_AS(
      (void)parse_config(json{{"experiment", "simulate"},
                              {"exponents", {{"p", 2.0}, {"nope", 1}}}}),
      ConfigError);
  CHECK_THROWS_AS(
      (void)parse_config(json{{"experiment", "simulate"}, {"workers", 0}}),
      ConfigError);
  CHECK_THROWS_AS(
      (void)parse_config(json{{"experiment", "simulate"}, {"workers", 65}}),
      ConfigError);
  // non-critical exponents are refused at the boundary
  CHECK_THROWS_AS(
      (void)parse_config(json{{"experiment", "simulate"},
                              {"exponents", {{"p", 2.0}, {"q", 3.0}}}}),
      ConfigError);
}

TEST_CASE("every advertised experiment has a default config") {
  for (const std::string name :
       {"pde-solve", "krylov-check", "simulate", "zvonkin-compare",
        "mollify-demo", "counterexample", "feller-probe", "density"}) {
    const json doc = default_config(name);
    const ExperimentConfig cfg = parse_config(doc);
    CHECK(cfg.experiment == name);
  }
  CHECK_THROWS_AS((void)default_config("nonsense"), ConfigError);
}

TEST_CASE("config files load strictly") {
  const fs::path dir = fresh_dir("files");
  fs::create_directories(dir);
  io::write_text(dir / "good.json", R"({"experiment": "counterexample"})");
  CHECK(load_config_file(dir / "good.json").experiment == "counterexample");

  io::write_text(dir / "bad.json", "{not json");
  CHECK_THROWS_AS((void)load_config_file(dir / "bad.json"), ConfigError);
  CHECK_THROWS_AS((void)load_config_file(dir / "missing.json"), ConfigError);
}

TEST_CASE("counterexample experiment runs end to end") {
  const fs::path out = fresh_dir("counter");
  ExperimentConfig cfg = parse_config(json{
      {"experiment", "counterexample"},
      {"out", out.string()},
      {"params", {{"k_max", 8}, {"n_list", {4, 8}}}}});
  const int rc = run_experiment(cfg);
  CHECK(rc == 0);
  CHECK(fs::exists(out / "manifest.json"));
  CHECK(fs::exists(out / "config.json"));
  CHECK(fs::exists(out / "lower_bound.csv"));

  const json man = json::parse(io::read_text(out / "manifest.json"));
  CHECK(man.at("experiment") == "counterexample");
  bool saw_check = false;
  for (const auto& c : man.at("checks")) {
    CHECK(c.at("pass").get<bool>());
    saw_check = true;
  }
  CHECK(saw_check);

  // identical configs reproduce identical artifact bytes
  const std::string csv_hash = io::sha256_file(out / "lower_bound.csv");
  const fs::path out2 = fresh_dir("counter2");
  cfg.out_dir = out2;
  CHECK(run_experiment(cfg) == 0);
  CHECK(io::sha256_file(out2 / "lower_bound.csv") == csv_hash);
}

TEST_CASE("simulate experiment writes ensemble artifacts and passes oracles") {
  const fs::path out = fresh_dir("sim");
  const ExperimentConfig cfg = parse_config(json{
      {"experiment", "simulate"},
      {"out", out.string()},
      {"params",
       {{"drift", {{"b2", {{"kind", "zero"}}}}},
        {"n_paths", 12000},
        {"n_steps", 64}}}});
  CHECK(run_experiment(cfg) == 0);
  CHECK(fs::exists(out / "manifest.json"));
  CHECK(fs::exists(out / "modulus.csv"));
  CHECK(fs::exists(out / "report.json"));

  const json man = json::parse(io::read_text(out / "manifest.json"));
  bool brownian_mean = false, modulus = false;
  for (const auto& c : man.at("checks")) {
    const std::string name = c.at("name");
    if (name == "brownian_mean") brownian_mean = c.at("pass").get<bool>();
    if (name == "modulus_slope") modulus = c.at("pass").get<bool>();
  }
  CHECK(brownian_mean);
  CHECK(modulus);
}

TEST_CASE("unknown experiment params fail before any work happens") {
  const fs::path out = fresh_dir("strictparams");
  const ExperimentConfig cfg = parse_config(json{
      {"experiment", "counterexample"},
      {"out", out.string()},
      {"params", {{"k_maxx", 8}}}});
  CHECK_THROWS_AS((void)run_experiment(cfg), ConfigError);
  CHECK(!fs::exists(out / "manifest.json"));
}
