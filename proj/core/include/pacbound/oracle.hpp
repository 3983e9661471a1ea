#pragma once

#include <string>
#include <vector>

#include "pacbound/bounds.hpp"

namespace pacbound {

// One Monte-Carlo check of a proven inequality. These are transcription
// tests: a failure means a formula was copied wrong, not that the inequality
// is in doubt.
struct LemmaCheckResult {
  std::string lemma_id;
  Eigen::Index trials = 0;
  double observed = 0.0;
  double bound = 0.0;
  double margin = 0.0;  // bound - observed
  double se = 0.0;
  bool pass = false;    // observed <= bound + 3 se
  double r = 0.0;
  Eigen::Index N = 0;
  double lambda = 0.0;
  double observed_trimmed = 0.0;  // mgf check only: top 0.1% of draws removed
};

// E||e||^{2r} against mu_max^r 2^r (m+r-1)!, for r = 1..r_max (<= 5).
std::vector<LemmaCheckResult> check_even_moments(const NoiseSpec& noise, int r_max,
                                                 Eigen::Index trials, std::uint64_t seed);

double sigma_moment_bound(const NoiseSpec& noise, int m, int r);

// r-th moment of the centred outer products Q - e e^T (matched lag) and
// -e1 e2^T (mismatched lag) against sigma(r); observed is the larger case.
LemmaCheckResult check_sigma_bound(const NoiseSpec& noise, const Dims& dims, int r,
                                   Eigen::Index trials, std::uint64_t seed);

// E|V_N - L_hat_N|^r against (m+r-1)!/sqrt(N) (4 Gbar_gen Gbar_f)^r per
// grid point; gaussian innovations, r in {1, 2}.
std::vector<LemmaCheckResult> check_vn_moment_decay(const StateSpaceSystem& pred, WMode mode,
                                                    const Generator& gen, const NoiseSpec& noise,
                                                    int r,
                                                    const std::vector<Eigen::Index>& N_grid,
                                                    Eigen::Index trials, std::uint64_t seed);

// E[(L - V_N)^r] against n_y^r/N sigma(r) 4(r-1) Ge^{2r}; r even.
LemmaCheckResult check_L_minus_V_moments(const StateSpaceSystem& pred, WMode mode,
                                         const Generator& gen, const NoiseSpec& noise, int r,
                                         Eigen::Index N, Eigen::Index trials,
                                         std::uint64_t seed);

// Largest rate the mgf inequality tolerates: 1/(3 (m+1) n_y mu_max Ge^2).
double mgf_lambda_threshold(const Dims& dims, double mu_max, double G_e);

double mgf_bound_value(double lambda, Eigen::Index N, const Dims& dims, double mu_max,
                       double G_e);

// E e^{lambda (L - V_N)} against the closed-form bound; gaussian innovations
// only. Also reports a trimmed estimate since the plain mean is heavy-tailed.
LemmaCheckResult check_mgf_bound(const StateSpaceSystem& pred, WMode mode, const Generator& gen,
                                 const NoiseSpec& noise, double lambda, Eigen::Index N,
                                 Eigen::Index trials, std::uint64_t seed);

struct CoverageOptions {
  ClassConstraint constraint;
  Eigen::Index replications = 200;
  Eigen::Index gibbs_steps = 20000;
  Eigen::Index gibbs_thin = 8;
  double proposal_scale = 0.25;
  double lambda = 0.0;  // 0: per-route default (half the cap, the schedule, sqrt(N))
  std::uint64_t seed = 1;
  // debug fault injection: scales every G_e entering psi and the sups, to
  // prove the coverage check can fail when constants are corrupted
  double corrupt_Ge = 1.0;
};

struct CoverageResult {
  double fraction = 0.0;
  double se = 0.0;
  double required = 0.0;  // 1 - 2 delta - 3 se
  bool pass = false;
  Eigen::Index replications = 0;
  double lambda = 0.0;
  Eigen::Index successes = 0;
  BoundReport first_report;  // report of the first replication, for audit
};

// The probabilistic claim itself: fraction of independent data draws with
// E_rho L(f) <= E_rho L_hat_N(f) + r_N, posterior and KL refit per draw,
// psi and the sups shared (they do not depend on the data).
CoverageResult check_coverage(Theorem theorem, const Generator& gen, const NoiseSpec& noise,
                              Eigen::Index N, double delta, const PriorCloud& cloud,
                              const CoverageOptions& opts);

}  // namespace pacbound
