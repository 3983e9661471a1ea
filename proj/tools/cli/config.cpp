#include "cli/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pacbound/errors.hpp"
#include "pacbound/reference.hpp"
#include "pacbound/serialize.hpp"

namespace pacbound::cli {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const char* where, const std::set<std::string>& known) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) {
      throw ConfigError(std::string("unknown config key \"") + it.key() + "\" in " + where);
    }
  }
}

Eigen::MatrixXd matrix_from(const json& j, const char* name) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) {
    throw ConfigError(std::string(name) + " must be a non-empty array of rows");
  }
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(j.front().size());
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j.at(static_cast<std::size_t>(i));
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ConfigError(std::string(name) + " has ragged rows");
    }
    for (Eigen::Index k = 0; k < cols; ++k) {
      const json& v = row.at(static_cast<std::size_t>(k));
      if (!v.is_number()) throw ConfigError(std::string(name) + " entries must be numbers");
      out(i, k) = v.get<double>();
    }
  }
  return out;
}

json matrix_to(const Eigen::MatrixXd& mat) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < mat.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < mat.cols(); ++k) row.push_back(mat(i, k));
    rows.push_back(row);
  }
  return rows;
}

Eigen::Index index_from(const json& j, const char* name) {
  if (!j.is_number_integer()) throw ConfigError(std::string(name) + " must be an integer");
  return j.get<Eigen::Index>();
}

double number_from(const json& j, const char* name) {
  if (!j.is_number()) throw ConfigError(std::string(name) + " must be a number");
  return j.get<double>();
}

std::vector<Eigen::Index> index_list_from(const json& j, const char* name) {
  if (!j.is_array()) throw ConfigError(std::string(name) + " must be an array of integers");
  std::vector<Eigen::Index> out;
  for (const json& v : j) out.push_back(index_from(v, name));
  return out;
}

void parse_noise(const json& j, NoiseSpec& spec) {
  reject_unknown(j, "noise", {"kind", "Q", "c_e", "q_is_target"});
  if (j.contains("kind")) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "gaussian") {
      spec.kind = NoiseKind::gaussian;
    } else if (kind == "truncated_gaussian") {
      spec.kind = NoiseKind::truncated_gaussian;
    } else {
      throw ConfigError("noise.kind must be gaussian or truncated_gaussian");
    }
  }
  if (j.contains("Q")) spec.Q_e = matrix_from(j.at("Q"), "noise.Q");
  if (j.contains("c_e")) spec.c_e = number_from(j.at("c_e"), "noise.c_e");
  if (j.contains("q_is_target")) {
    if (!j.at("q_is_target").is_boolean()) throw ConfigError("noise.q_is_target must be a bool");
    spec.q_is_target = j.at("q_is_target").get<bool>();
  }
  if (spec.kind == NoiseKind::truncated_gaussian && spec.c_e == 0.0) spec.c_e = 1.0;
}

void parse_constraint(const json& j, ClassConstraint& c) {
  reject_unknown(j, "class_constraint", {"rho_max", "Gf_max", "theta_box"});
  if (j.contains("rho_max")) c.rho_max = number_from(j.at("rho_max"), "rho_max");
  if (j.contains("Gf_max")) c.Gf_max = number_from(j.at("Gf_max"), "Gf_max");
  if (j.contains("theta_box")) c.theta_box = number_from(j.at("theta_box"), "theta_box");
  if (c.rho_max <= 0.0 || c.rho_max > 1.0) throw ConfigError("rho_max must be in (0, 1]");
  if (c.Gf_max <= 0.0) throw ConfigError("Gf_max must be positive");
  if (c.theta_box <= 0.0) throw ConfigError("theta_box must be positive");
}

void parse_mcmc(const json& j, McmcSettings& m) {
  reject_unknown(j, "mcmc",
                 {"prior_steps", "prior_thin", "prior_scale", "chains", "gibbs_steps",
                  "gibbs_thin", "gibbs_scale", "sup_mode", "sup_steps", "safety"});
  if (j.contains("prior_steps")) m.prior_steps = index_from(j.at("prior_steps"), "prior_steps");
  if (j.contains("prior_thin")) m.prior_thin = index_from(j.at("prior_thin"), "prior_thin");
  if (j.contains("prior_scale")) m.prior_scale = number_from(j.at("prior_scale"), "prior_scale");
  if (j.contains("chains")) m.chains = static_cast<int>(index_from(j.at("chains"), "chains"));
  if (j.contains("gibbs_steps")) m.gibbs_steps = index_from(j.at("gibbs_steps"), "gibbs_steps");
  if (j.contains("gibbs_thin")) m.gibbs_thin = index_from(j.at("gibbs_thin"), "gibbs_thin");
  if (j.contains("gibbs_scale")) m.gibbs_scale = number_from(j.at("gibbs_scale"), "gibbs_scale");
  if (j.contains("sup_mode")) m.sup_mode = j.at("sup_mode").get<std::string>();
  if (j.contains("sup_steps")) m.sup_steps = index_from(j.at("sup_steps"), "sup_steps");
  if (j.contains("safety")) m.safety = number_from(j.at("safety"), "safety");
  if (m.prior_steps < 100 || m.gibbs_steps < 100 || m.sup_steps < 100) {
    throw ConfigError("mcmc step counts must be at least 100");
  }
  if (m.prior_thin < 1 || m.gibbs_thin < 1) throw ConfigError("mcmc thinning must be >= 1");
  if (m.prior_scale <= 0.0 || m.gibbs_scale <= 0.0) {
    throw ConfigError("mcmc proposal scales must be positive");
  }
  if (m.chains < 1) throw ConfigError("mcmc.chains must be >= 1");
  if (m.sup_mode != "yu" && m.sup_mode != "experiment") {
    throw ConfigError("mcmc.sup_mode must be yu or experiment");
  }
  if (m.safety < 1.0) throw ConfigError("mcmc.safety must be >= 1");
}

LambdaPolicy parse_policy(const json& j) {
  reject_unknown(j, "lambda_policy", {"kind", "value"});
  LambdaPolicy p;
  if (j.contains("kind")) p.kind = j.at("kind").get<std::string>();
  if (j.contains("value")) p.value = number_from(j.at("value"), "lambda_policy.value");
  if (p.kind != "fixed" && p.kind != "schedule" && p.kind != "star") {
    throw ConfigError("lambda_policy.kind must be fixed, schedule or star");
  }
  if (p.kind == "fixed" && p.value <= 0.0) {
    throw ConfigError("fixed lambda policy needs a positive value");
  }
  return p;
}

void parse_coverage(const json& j, CoverageSettings& c) {
  reject_unknown(j, "verify.coverage", {"enabled", "replications", "N"});
  if (j.contains("enabled")) {
    if (!j.at("enabled").is_boolean()) throw ConfigError("coverage.enabled must be a bool");
    c.enabled = j.at("enabled").get<bool>();
  }
  if (j.contains("replications")) {
    c.replications = index_from(j.at("replications"), "coverage.replications");
  }
  if (j.contains("N")) c.N = index_from(j.at("N"), "coverage.N");
  // the coverage runner enforces the same floor; reject at parse time
  if (c.replications < 100) throw ConfigError("coverage.replications must be at least 100");
  if (c.N < 2) throw ConfigError("coverage.N must be at least 2");
}

void parse_verify(const json& j, VerifySettings& v) {
  reject_unknown(j, "verify", {"moment_draws", "trials", "vn_N_grid", "coverage", "corrupt_ge"});
  if (j.contains("moment_draws")) v.moment_draws = index_from(j.at("moment_draws"), "moment_draws");
  if (j.contains("trials")) v.trials = index_from(j.at("trials"), "trials");
  if (j.contains("vn_N_grid")) v.vn_N_grid = index_list_from(j.at("vn_N_grid"), "vn_N_grid");
  if (j.contains("coverage")) parse_coverage(j.at("coverage"), v.coverage);
  if (j.contains("corrupt_ge")) v.corrupt_ge = number_from(j.at("corrupt_ge"), "corrupt_ge");
  if (v.moment_draws < 10 || v.trials < 10) throw ConfigError("verify sample sizes too small");
  if (v.vn_N_grid.empty()) throw ConfigError("verify.vn_N_grid must be non-empty");
  for (Eigen::Index n : v.vn_N_grid) {
    if (n < 2) throw ConfigError("verify.vn_N_grid entries must be >= 2");
  }
  if (v.corrupt_ge <= 0.0) throw ConfigError("verify.corrupt_ge must be positive");
}

void cross_validate(const ExperimentConfig& cfg) {
  validate(cfg.generator);
  validate(cfg.noise);
  if (cfg.noise.Q_e.rows() != cfg.generator.n_y + cfg.generator.n_u) {
    throw ConfigError("noise dimension does not match the generator output partition");
  }
  if (cfg.N_grid.empty()) throw ConfigError("N grid must not be empty");
  for (Eigen::Index n : cfg.N_grid) {
    if (n < 2) throw ConfigError("N grid entries must be >= 2");
  }
  if (cfg.delta <= 0.0 || cfg.delta >= 1.0) throw ConfigError("delta must be in (0, 1)");
  if (cfg.policies.empty()) throw ConfigError("at least one lambda policy is required");
  if (cfg.theorems.empty()) throw ConfigError("at least one theorem is required");
  for (Theorem t : cfg.theorems) {
    if (t != Theorem::thm1_unbounded && cfg.noise.kind != NoiseKind::truncated_gaussian) {
      throw ConfigError(std::string(to_string(t)) + " needs truncated_gaussian noise");
    }
  }
  if (cfg.kl_mode != "auto" && cfg.kl_mode != "gibbs" && cfg.kl_mode != "reweight") {
    throw ConfigError("kl_mode must be auto, gibbs or reweight");
  }
  if (cfg.bound_N < 0) throw ConfigError("bound_N must be >= 0");
  if (cfg.threads < 1) throw ConfigError("threads must be >= 1");
}

}  // namespace

ExperimentConfig default_config() {
  ExperimentConfig cfg;
  cfg.generator = reference_generator();
  cfg.noise = reference_noise_gaussian();
  cfg.theorems = {Theorem::thm1_unbounded};
  finalize(cfg);
  return cfg;
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  reject_unknown(j, "config",
                 {"generator", "noise", "w_mode", "class_constraint", "mcmc", "N_grid", "delta",
                  "lambda_policy", "theorems", "strict_appendix", "kl_mode", "bound_N", "verify",
                  "out_dir", "seed", "threads"});

  ExperimentConfig cfg;
  cfg.generator = reference_generator();
  cfg.noise = reference_noise_gaussian();

  if (j.contains("generator")) cfg.generator = generator_from_json(j.at("generator").dump());
  if (j.contains("noise")) parse_noise(j.at("noise"), cfg.noise);
  if (j.contains("w_mode")) cfg.w_mode = wmode_from_string(j.at("w_mode").get<std::string>());
  if (j.contains("class_constraint")) parse_constraint(j.at("class_constraint"), cfg.constraint);
  if (j.contains("mcmc")) parse_mcmc(j.at("mcmc"), cfg.mcmc);
  if (j.contains("N_grid")) cfg.N_grid = index_list_from(j.at("N_grid"), "N_grid");
  if (j.contains("delta")) cfg.delta = number_from(j.at("delta"), "delta");
  if (j.contains("lambda_policy")) {
    const json& lp = j.at("lambda_policy");
    cfg.policies.clear();
    if (lp.is_array()) {
      for (const json& p : lp) cfg.policies.push_back(parse_policy(p));
    } else {
      cfg.policies.push_back(parse_policy(lp));
    }
  }
  if (j.contains("theorems")) {
    cfg.theorems.clear();
    if (!j.at("theorems").is_array()) throw ConfigError("theorems must be an array");
    for (const json& t : j.at("theorems")) {
      cfg.theorems.push_back(theorem_from_string(t.get<std::string>()));
    }
  } else {
    cfg.theorems = cfg.noise.kind == NoiseKind::gaussian
                       ? std::vector<Theorem>{Theorem::thm1_unbounded}
                       : std::vector<Theorem>{Theorem::thm2_bounded, Theorem::thm3_bounded_alt};
  }
  if (j.contains("strict_appendix")) {
    if (!j.at("strict_appendix").is_boolean()) throw ConfigError("strict_appendix must be a bool");
    cfg.strict_appendix = j.at("strict_appendix").get<bool>();
  }
  if (j.contains("kl_mode")) cfg.kl_mode = j.at("kl_mode").get<std::string>();
  if (j.contains("bound_N")) cfg.bound_N = index_from(j.at("bound_N"), "bound_N");
  if (j.contains("verify")) parse_verify(j.at("verify"), cfg.verify);
  if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_integer()) throw ConfigError("seed must be an integer");
    cfg.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("threads")) cfg.threads = static_cast<int>(index_from(j.at("threads"), "threads"));

  cross_validate(cfg);
  finalize(cfg);
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  if (path.empty()) return default_config();
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str());
}

std::string resolved_config_json(const ExperimentConfig& cfg) {
  json j;
  j["generator"] = json::parse(generator_to_json(cfg.generator));
  {
    json n;
    n["kind"] = cfg.noise.kind == NoiseKind::gaussian ? "gaussian" : "truncated_gaussian";
    n["Q"] = matrix_to(cfg.noise.Q_e);
    n["c_e"] = cfg.noise.c_e;
    n["q_is_target"] = cfg.noise.q_is_target;
    j["noise"] = n;
  }
  j["w_mode"] = to_string(cfg.w_mode);
  j["class_constraint"] = {{"rho_max", cfg.constraint.rho_max},
                           {"Gf_max", cfg.constraint.Gf_max},
                           {"theta_box", cfg.constraint.theta_box}};
  j["mcmc"] = {{"prior_steps", cfg.mcmc.prior_steps}, {"prior_thin", cfg.mcmc.prior_thin},
               {"prior_scale", cfg.mcmc.prior_scale}, {"chains", cfg.mcmc.chains},
               {"gibbs_steps", cfg.mcmc.gibbs_steps}, {"gibbs_thin", cfg.mcmc.gibbs_thin},
               {"gibbs_scale", cfg.mcmc.gibbs_scale}, {"sup_mode", cfg.mcmc.sup_mode},
               {"sup_steps", cfg.mcmc.sup_steps},     {"safety", cfg.mcmc.safety}};
  j["N_grid"] = cfg.N_grid;
  j["delta"] = cfg.delta;
  {
    json ps = json::array();
    for (const LambdaPolicy& p : cfg.policies) {
      ps.push_back({{"kind", p.kind}, {"value", p.value}});
    }
    j["lambda_policy"] = ps;
  }
  {
    json ts = json::array();
    for (Theorem t : cfg.theorems) ts.push_back(to_string(t));
    j["theorems"] = ts;
  }
  j["strict_appendix"] = cfg.strict_appendix;
  j["kl_mode"] = cfg.kl_mode;
  j["bound_N"] = cfg.bound_N;
  j["verify"] = {{"moment_draws", cfg.verify.moment_draws},
                 {"trials", cfg.verify.trials},
                 {"vn_N_grid", cfg.verify.vn_N_grid},
                 {"coverage",
                  {{"enabled", cfg.verify.coverage.enabled},
                   {"replications", cfg.verify.coverage.replications},
                   {"N", cfg.verify.coverage.N}}},
                 {"corrupt_ge", cfg.verify.corrupt_ge}};
  j["seed"] = cfg.seed;
  return j.dump();
}

void finalize(ExperimentConfig& cfg) { cfg.config_hash = fnv1a_hex(resolved_config_json(cfg)); }

}  // namespace pacbound::cli
