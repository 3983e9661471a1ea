#include "pacbound/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "pacbound/errors.hpp"

namespace pacbound {

namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, const char* name) {
  if (!j.is_array()) throw ConfigError(std::string(name) + " must be an array of rows");
  const Eigen::Index n_rows = static_cast<Eigen::Index>(j.size());
  if (n_rows == 0) return Eigen::MatrixXd(0, 0);
  if (!j[0].is_array()) throw ConfigError(std::string(name) + " rows must be arrays");
  const Eigen::Index n_cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd M(n_rows, n_cols);
  for (Eigen::Index i = 0; i < n_rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n_cols) {
      throw ConfigError(std::string(name) + " rows have inconsistent lengths");
    }
    for (Eigen::Index k = 0; k < n_cols; ++k) {
      const json& cell = row[static_cast<std::size_t>(k)];
      if (!cell.is_number()) throw ConfigError(std::string(name) + " entries must be numbers");
      M(i, k) = cell.get<double>();
    }
  }
  return M;
}

void require_keys(const json& j, std::initializer_list<const char*> keys, const char* what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
  for (const char* key : keys) {
    if (!j.contains(key)) {
      throw ConfigError(std::string(what) + " is missing key \"" + key + "\"");
    }
  }
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : keys) known = known || item.key() == key;
    if (!known) throw ConfigError(std::string(what) + " has unknown key \"" + item.key() + "\"");
  }
}

StateSpaceSystem system_from_parsed(const json& j) {
  StateSpaceSystem sys;
  sys.A = matrix_from_json(j.at("A"), "A");
  sys.B = matrix_from_json(j.at("K"), "K");
  sys.C = matrix_from_json(j.at("C"), "C");
  sys.D = matrix_from_json(j.at("D"), "D");
  validate(sys);
  return sys;
}

json parse_text(const std::string& text, const char* what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError(std::string(what) + " is not valid JSON");
  return j;
}

std::string key_value(const std::string& line, const std::string& key) {
  const std::string needle = key + "=";
  const std::size_t pos = line.find(needle);
  if (pos == std::string::npos) return {};
  const std::size_t start = pos + needle.size();
  const std::size_t end = line.find(' ', start);
  return line.substr(start, end == std::string::npos ? std::string::npos : end - start);
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t hash = 14695981039346656037ull;
  for (const char c : text) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

std::string system_to_json(const StateSpaceSystem& sys) {
  json j;
  j["A"] = matrix_to_json(sys.A);
  j["K"] = matrix_to_json(sys.B);
  j["C"] = matrix_to_json(sys.C);
  j["D"] = matrix_to_json(sys.D);
  return j.dump();
}

StateSpaceSystem system_from_json(const std::string& text) {
  const json j = parse_text(text, "system document");
  require_keys(j, {"A", "K", "C", "D"}, "system document");
  return system_from_parsed(j);
}

std::string generator_to_json(const Generator& gen) {
  json j;
  j["A"] = matrix_to_json(gen.sys.A);
  j["K"] = matrix_to_json(gen.sys.B);
  j["C"] = matrix_to_json(gen.sys.C);
  j["D"] = matrix_to_json(gen.sys.D);
  j["ny"] = gen.n_y;
  j["nu"] = gen.n_u;
  return j.dump();
}

Generator generator_from_json(const std::string& text) {
  const json j = parse_text(text, "generator document");
  require_keys(j, {"A", "K", "C", "D", "ny", "nu"}, "generator document");
  Generator gen;
  gen.sys = system_from_parsed(j);
  if (!j.at("ny").is_number_integer() || !j.at("nu").is_number_integer()) {
    throw ConfigError("ny and nu must be integers");
  }
  gen.n_y = j.at("ny").get<int>();
  gen.n_u = j.at("nu").get<int>();
  validate(gen);
  return gen;
}

std::string constants_to_json(const BoundConstants& c) {
  json j;
  j["G_e"] = c.G_e;
  j["G_bar_f"] = c.G_bar_f;
  j["G_bar_gen"] = c.G_bar_gen;
  j["l1_gen"] = c.l1_gen;
  j["mu_max"] = c.mu_max;
  j["G_e1"] = c.G_e1;
  j["G_bar_f1"] = c.G_bar_f1;
  j["G_bar_f2"] = c.G_bar_f2;
  j["G_gen1"] = c.G_gen1;
  j["G_gen2"] = c.G_gen2;
  j["C_big"] = c.C_big;
  return j.dump();
}

const char* to_string(WMode mode) { return mode == WMode::u_only ? "u_only" : "yu"; }

WMode wmode_from_string(const std::string& name) {
  if (name == "u_only") return WMode::u_only;
  if (name == "yu") return WMode::yu;
  throw ConfigError("unknown predictor input mode \"" + name + "\"");
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, int n_y, int n_u,
                          const std::string& config_hash) {
  if (traj.y.cols() != n_y || traj.u.cols() != n_u || traj.m() != n_y + n_u) {
    throw DimensionError("trajectory columns do not match the output partition");
  }
  os << "# config=" << config_hash << " seed=" << traj.seed << "\n";
  os << "# x0=";
  for (Eigen::Index i = 0; i < traj.x0.size(); ++i) {
    os << (i ? ";" : "") << format_double(traj.x0(i));
  }
  os << "\n# q_innov=";
  for (Eigen::Index i = 0; i < traj.q_innov.rows(); ++i) {
    os << (i ? "|" : "");
    for (Eigen::Index j = 0; j < traj.q_innov.cols(); ++j) {
      os << (j ? ";" : "") << format_double(traj.q_innov(i, j));
    }
  }
  os << "\nt";
  for (int i = 1; i <= n_y; ++i) os << ",y" << i;
  for (int i = 1; i <= n_u; ++i) os << ",u" << i;
  for (int i = 1; i <= n_y + n_u; ++i) os << ",e" << i;
  os << "\n";
  const Eigen::Index burn = traj.e_burn.rows();
  for (Eigen::Index t = 0; t < burn; ++t) {
    os << (t - burn);
    for (int i = 0; i < n_y + n_u; ++i) os << ",nan";
    for (Eigen::Index j = 0; j < traj.e_burn.cols(); ++j) {
      os << "," << format_double(traj.e_burn(t, j));
    }
    os << "\n";
  }
  for (Eigen::Index t = 0; t < traj.length(); ++t) {
    os << t;
    for (Eigen::Index j = 0; j < traj.y.cols(); ++j) os << "," << format_double(traj.y(t, j));
    for (Eigen::Index j = 0; j < traj.u.cols(); ++j) os << "," << format_double(traj.u(t, j));
    for (Eigen::Index j = 0; j < traj.e.cols(); ++j) os << "," << format_double(traj.e(t, j));
    os << "\n";
  }
}

void write_chain_csv(std::ostream& os, const Chain& chain, const Eigen::VectorXd& log_prior,
                     const Eigen::VectorXd& emp_loss, const std::string& config_hash) {
  const Eigen::Index n = chain.samples.rows();
  if (log_prior.size() != n || emp_loss.size() != n) {
    throw DimensionError("chain audit columns do not match the sample count");
  }
  os << "# config=" << config_hash << " seed=" << chain.seed << " mode=" << to_string(chain.mode)
     << " burn_in=" << chain.burn_in << " thinning=" << chain.thinning
     << " acceptance=" << format_double(chain.acceptance_rate) << "\n";
  for (Eigen::Index j = 0; j < chain.samples.cols(); ++j) os << (j ? "," : "") << "theta_" << j;
  os << ",log_prior,emp_loss\n";
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < chain.samples.cols(); ++j) {
      os << (j ? "," : "") << format_double(chain.samples(i, j));
    }
    os << "," << format_double(log_prior(i)) << "," << format_double(emp_loss(i)) << "\n";
  }
}

StoredChain read_chain_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("# ", 0) != 0) {
    throw ConfigError("chain file is missing its metadata comment");
  }
  StoredChain stored;
  stored.config_hash = key_value(line, "config");
  stored.chain.seed = std::strtoull(key_value(line, "seed").c_str(), nullptr, 10);
  stored.chain.mode = wmode_from_string(key_value(line, "mode"));
  stored.chain.burn_in = std::strtoll(key_value(line, "burn_in").c_str(), nullptr, 10);
  stored.chain.thinning = std::strtoll(key_value(line, "thinning").c_str(), nullptr, 10);
  stored.chain.acceptance_rate = std::strtod(key_value(line, "acceptance").c_str(), nullptr);
  if (!std::getline(is, line)) throw ConfigError("chain file is missing its header row");
  Eigen::Index dim = 0;
  {
    std::stringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) {
      if (cell.rfind("theta_", 0) == 0) dim += 1;
    }
  }
  if (dim == 0) throw ConfigError("chain file header has no theta columns");
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(row, cell, ',')) values.push_back(std::strtod(cell.c_str(), nullptr));
    if (static_cast<Eigen::Index>(values.size()) != dim + 2) {
      throw ConfigError("chain file row has the wrong number of columns");
    }
    rows.push_back(std::move(values));
  }
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  stored.chain.samples.resize(n, dim);
  stored.chain.log_densities.resize(n);
  stored.log_prior.resize(n);
  stored.emp_loss.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) stored.chain.samples(i, j) = rows[i][j];
    stored.log_prior(i) = rows[i][dim];
    stored.emp_loss(i) = rows[i][dim + 1];
    stored.chain.log_densities(i) = stored.log_prior(i);
  }
  return stored;
}

void write_report_csv_header(std::ostream& os, const std::string& config_hash,
                             std::uint64_t seed) {
  os << "# config=" << config_hash << " seed=" << seed << "\n";
  os << "theorem,N,lambda,delta,kl,kl_se,psi,psi_se,r_N,vacuous\n";
}

void append_report_row(std::ostream& os, const BoundReport& report) {
  os << to_string(report.theorem) << "," << report.N << "," << format_double(report.lambda)
     << "," << format_double(report.delta) << "," << format_double(report.kl.value) << ","
     << format_double(report.kl.se) << "," << format_double(report.psi.value) << ","
     << format_double(report.psi.se) << "," << format_double(report.r_N) << ","
     << (report.vacuous ? "true" : "false") << "\n";
}

void write_lemma_csv_header(std::ostream& os, const std::string& config_hash,
                            std::uint64_t seed) {
  os << "# config=" << config_hash << " seed=" << seed << "\n";
  os << "lemma_id,r,N,lambda,observed,bound,margin,se,pass\n";
}

void append_lemma_row(std::ostream& os, const LemmaCheckResult& result) {
  os << result.lemma_id << "," << format_double(result.r) << "," << result.N << ","
     << format_double(result.lambda) << "," << format_double(result.observed) << ","
     << format_double(result.bound) << "," << format_double(result.margin) << ","
     << format_double(result.se) << "," << (result.pass ? "true" : "false") << "\n";
}

}  // namespace pacbound
