#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pacbound/bounds.hpp"
#include "pacbound/posterior.hpp"
#include "pacbound/system.hpp"

namespace pacbound::cli {

struct McmcSettings {
  Eigen::Index prior_steps = 30000;
  Eigen::Index prior_thin = 10;
  double prior_scale = 0.5;
  int chains = 1;
  Eigen::Index gibbs_steps = 20000;
  Eigen::Index gibbs_thin = 8;
  double gibbs_scale = 0.25;
  // "yu" widens the class-sup search to the full input-output parameter
  // family (a separate chain); "experiment" reuses the experiment prior only
  std::string sup_mode = "yu";
  Eigen::Index sup_steps = 30000;
  double safety = 1.1;
};

struct LambdaPolicy {
  std::string kind = "schedule";  // fixed | schedule | star
  double value = 0.0;             // fixed only
};

struct CoverageSettings {
  bool enabled = true;
  Eigen::Index replications = 200;
  Eigen::Index N = 1000;
};

struct VerifySettings {
  Eigen::Index moment_draws = 200000;
  Eigen::Index trials = 2000;
  std::vector<Eigen::Index> vn_N_grid = {10, 100, 1000};
  CoverageSettings coverage;
  double corrupt_ge = 1.0;  // debug fault injection, scales the stored gain
};

struct ExperimentConfig {
  Generator generator;
  NoiseSpec noise;
  WMode w_mode = WMode::u_only;
  ClassConstraint constraint;
  McmcSettings mcmc;
  std::vector<Eigen::Index> N_grid = {100, 464, 2154, 10000, 46416, 215443, 1000000};
  double delta = 0.05;
  std::vector<LambdaPolicy> policies{LambdaPolicy{}};
  std::vector<Theorem> theorems;  // empty in the file: chosen by noise kind
  bool strict_appendix = false;
  std::string kl_mode = "auto";  // gibbs | reweight | auto (chain when N <= 1e4)
  Eigen::Index bound_N = 0;      // 0: first grid point
  VerifySettings verify;
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  int threads = 1;
  // digest of the resolved numerical settings (seed included, out_dir and
  // threads excluded); stamped into every output file
  std::string config_hash;
};

ExperimentConfig default_config();

// Parses and validates a JSON config. Missing keys take defaults, unknown
// keys are rejected at every nesting level, and the resolved hash is filled.
ExperimentConfig parse_config(const std::string& json_text);

ExperimentConfig load_config_file(const std::string& path);

// Canonical JSON of the resolved settings; the config hash is the FNV-1a
// digest of this string.
std::string resolved_config_json(const ExperimentConfig& cfg);

// Recomputes the hash after command-line overrides.
void finalize(ExperimentConfig& cfg);

}  // namespace pacbound::cli
