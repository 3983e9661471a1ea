#include <doctest.h>

#include <string>

#include "cli/config.hpp"
#include "pacbound/errors.hpp"

using namespace pacbound;
using namespace pacbound::cli;

TEST_CASE("defaults resolve to the bundled experiment") {
  const ExperimentConfig cfg = parse_config("{}");
  CHECK(cfg.noise.kind == NoiseKind::gaussian);
  CHECK(cfg.w_mode == WMode::u_only);
  CHECK(cfg.delta == doctest::Approx(0.05));
  CHECK(cfg.seed == 1);
  CHECK(cfg.threads == 1);
  CHECK(cfg.kl_mode == "auto");
  REQUIRE(cfg.N_grid.size() == 7);
  CHECK(cfg.N_grid.front() == 100);
  CHECK(cfg.N_grid.back() == 1000000);
  REQUIRE(cfg.policies.size() == 1);
  CHECK(cfg.policies[0].kind == "schedule");
  // gaussian innovations select the mgf-route bound
  REQUIRE(cfg.theorems.size() == 1);
  CHECK(cfg.theorems[0] == Theorem::thm1_unbounded);
  CHECK(cfg.config_hash.size() == 16);
  CHECK(cfg.mcmc.prior_steps == 30000);
  CHECK(cfg.mcmc.gibbs_steps == 20000);
  CHECK(cfg.verify.coverage.replications == 200);
}

TEST_CASE("truncated noise selects the bounded-route bounds") {
  const ExperimentConfig cfg = parse_config(R"({"noise":{"kind":"truncated_gaussian"}})");
  CHECK(cfg.noise.kind == NoiseKind::truncated_gaussian);
  CHECK(cfg.noise.c_e == doctest::Approx(1.0));
  REQUIRE(cfg.theorems.size() == 2);
  CHECK(cfg.theorems[0] == Theorem::thm2_bounded);
  CHECK(cfg.theorems[1] == Theorem::thm3_bounded_alt);
}

TEST_CASE("unknown keys are rejected at every level") {
  CHECK_THROWS_AS(parse_config(R"({"bogus":1})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"mcmc":{"bogus":1}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"noise":{"kind":"gaussian","bogus":1}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"verify":{"coverage":{"bogus":1}}})"), ConfigError);
}

TEST_CASE("route and noise compatibility") {
  CHECK_THROWS_AS(parse_config(R"({"theorems":["thm2_bounded"]})"), ConfigError);
  CHECK_THROWS_AS(
      parse_config(R"({"noise":{"kind":"truncated_gaussian"},"theorems":["nope"]})"),
      ConfigError);
  CHECK_NOTHROW(
      parse_config(R"({"noise":{"kind":"truncated_gaussian"},"theorems":["thm3_bounded_alt"]})"));
}

TEST_CASE("lambda policy forms") {
  const ExperimentConfig one =
      parse_config(R"({"lambda_policy":{"kind":"fixed","value":0.01}})");
  REQUIRE(one.policies.size() == 1);
  CHECK(one.policies[0].kind == "fixed");
  CHECK(one.policies[0].value == doctest::Approx(0.01));

  const ExperimentConfig two =
      parse_config(R"({"lambda_policy":[{"kind":"star"},{"kind":"schedule"}]})");
  REQUIRE(two.policies.size() == 2);
  CHECK(two.policies[0].kind == "star");

  CHECK_THROWS_AS(parse_config(R"({"lambda_policy":{"kind":"fixed"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"lambda_policy":{"kind":"best"}})"), ConfigError);
}

TEST_CASE("validation guards") {
  CHECK_THROWS_AS(parse_config(R"({"delta":1.5})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"N_grid":[]})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"N_grid":[1]})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"kl_mode":"exact"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"mcmc":{"sup_mode":"none"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"threads":0})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"noise":{"kind":"gaussian","Q":[[1.0,0.0],[0.0]]}})"),
                  ConfigError);
}

TEST_CASE("config hash covers numerics but not placement") {
  const ExperimentConfig base = parse_config("{}");
  const ExperimentConfig seeded = parse_config(R"({"seed":2})");
  const ExperimentConfig moved = parse_config(R"({"out_dir":"elsewhere","threads":4})");
  const ExperimentConfig tweaked = parse_config(R"({"delta":0.1})");
  CHECK(base.config_hash != seeded.config_hash);
  CHECK(base.config_hash == moved.config_hash);
  CHECK(base.config_hash != tweaked.config_hash);

  // canonical resolution is idempotent
  CHECK(resolved_config_json(base) == resolved_config_json(parse_config("{}")));
}

TEST_CASE("finalize refreshes the hash after overrides") {
  ExperimentConfig cfg = parse_config("{}");
  const std::string before = cfg.config_hash;
  cfg.seed = 99;
  finalize(cfg);
  CHECK(cfg.config_hash != before);
  cfg.seed = 1;
  finalize(cfg);
  CHECK(cfg.config_hash == before);
}

TEST_CASE("generator override") {
  const std::string text = R"({
    "generator": {
      "A": [[0.2, 0.0], [0.0, 0.1]],
      "K": [[0.5, 0.0], [0.0, 0.5]],
      "C": [[1.0, 0.0], [0.0, 1.0]],
      "D": [[1.0, 0.0], [0.0, 1.0]],
      "ny": 1,
      "nu": 1
    }
  })";
  const ExperimentConfig cfg = parse_config(text);
  CHECK(cfg.generator.sys.A(0, 0) == doctest::Approx(0.2));
  CHECK(cfg.generator.n_y == 1);

  // noise whose dimension disagrees with the generator partition
  CHECK_THROWS_AS(
      parse_config(R"({"noise":{"kind":"gaussian","Q":[[1.0,0,0],[0,1.0,0],[0,0,1.0]]}})"),
      ConfigError);
}

TEST_CASE("empty path loads defaults") {
  const ExperimentConfig cfg = load_config_file("");
  CHECK(cfg.config_hash == parse_config("{}").config_hash);
}
