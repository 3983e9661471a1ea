#pragma once

#include <iosfwd>
#include <string>

#include "pacbound/bounds.hpp"
#include "pacbound/oracle.hpp"

namespace pacbound {

// Shortest fixed-format decimal that round-trips a double.
std::string format_double(double x);

// FNV-1a 64-bit hex digest, used to stamp output files with their config.
std::string fnv1a_hex(const std::string& text);

// {"A": [[..]], "K": [[..]], "C": [[..]], "D": [[..]]}; unknown keys are
// rejected. The generator form adds "ny" and "nu".
std::string system_to_json(const StateSpaceSystem& sys);
StateSpaceSystem system_from_json(const std::string& text);
std::string generator_to_json(const Generator& gen);
Generator generator_from_json(const std::string& text);

std::string constants_to_json(const BoundConstants& c);

const char* to_string(WMode mode);
WMode wmode_from_string(const std::string& name);

// Columns t,y1..y_ny,u1..u_nu,e1..e_m. Burn-in innovations appear at
// negative t with empty output columns; x0 and the innovation second moment
// ride along as comments so the file supports exact replay.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, int n_y, int n_u,
                          const std::string& config_hash);

// One row per kept sample: theta components, log prior, empirical loss.
void write_chain_csv(std::ostream& os, const Chain& chain, const Eigen::VectorXd& log_prior,
                     const Eigen::VectorXd& emp_loss, const std::string& config_hash);

struct StoredChain {
  Chain chain;
  Eigen::VectorXd log_prior;
  Eigen::VectorXd emp_loss;
  std::string config_hash;
};

StoredChain read_chain_csv(std::istream& is);

void write_report_csv_header(std::ostream& os, const std::string& config_hash,
                             std::uint64_t seed);
void append_report_row(std::ostream& os, const BoundReport& report);

void write_lemma_csv_header(std::ostream& os, const std::string& config_hash,
                            std::uint64_t seed);
void append_lemma_row(std::ostream& os, const LemmaCheckResult& result);

}  // namespace pacbound
