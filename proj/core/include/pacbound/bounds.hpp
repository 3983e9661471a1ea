#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "pacbound/constants.hpp"
#include "pacbound/posterior.hpp"

namespace pacbound {

// The three certified error terms. thm1_unbounded covers gaussian
// innovations via the moment-generating-function route, thm2_bounded covers
// component-bounded innovations with the exponential-moment argument, and
// thm3_bounded_alt is the sharpened bounded variant with the 1/sqrt(N) rate.
enum class Theorem { thm1_unbounded, thm2_bounded, thm3_bounded_alt };

const char* to_string(Theorem theorem);
Theorem theorem_from_string(const std::string& name);

struct Dims {
  int n_y = 0;
  int n_u = 0;
  int m() const { return n_y + n_u; }
};

struct PsiEstimate {
  double value = 0.0;
  double se = 0.0;
};

// Class-sup estimates entering admissibility, the schedule, and vacuity.
// Estimated by maximizing over a prior sample cloud and inflating by the
// safety factor; recorded in every report.
struct SupInfo {
  double sup_Ge = 0.0;
  double sup_Gf = 0.0;
  double safety = 1.0;
  Eigen::Index n_samples = 0;
  double lambda_max = 0.0;  // admissibility cap, unbounded route only (0 = n/a)
};

struct BoundReport {
  Theorem theorem = Theorem::thm1_unbounded;
  Eigen::Index N = 0;
  double lambda = 0.0;
  double delta = 0.0;
  KlEstimate kl;
  PsiEstimate psi;
  double r_N = 0.0;
  bool vacuous = false;
  SupInfo sup_info;
  std::string note;
};

// Largest admissible rate of the unbounded route: the reciprocal of
// max{8 m G_bar_gen sup_Gf, 6 (m+1) n_y mu_max sup_Ge^2}. The appendix
// derivation supports only half of this; strict_appendix selects the
// stricter cap.
double lambda_max_unbounded(double sup_Gf, double sup_Ge, const Dims& dims, double mu_max,
                            double G_bar_gen, bool strict_appendix = false);

// (1/2)[ln E_pi(1 + C1(f,lambda)/N) + ln E_pi(1 + C2(f,lambda)/sqrt(N))]
// over the prior sample cloud, with a delta-method standard error that
// accounts for chain autocorrelation. Throws InadmissibleRateError naming
// the first sample whose denominator is not strictly positive.
PsiEstimate psi_unbounded(double lambda, Eigen::Index N,
                          const std::vector<BoundConstants>& prior_samples, const Dims& dims,
                          double mu_max);

// (1/2)[ln E_pi(1 + e^{lambda G_gen1 Ge^2}/N) + ln E_pi(1 + e^{lambda G_gen2
// Gf}/sqrt(N))], exponents kept in log space so large rates cannot overflow.
PsiEstimate psi_bounded(double lambda, Eigen::Index N,
                        const std::vector<BoundConstants>& prior_samples, double G_gen1,
                        double G_gen2);

// (1/2)[ln E_pi(1 - C12 + C12 e^{lambda C11/N}) + ln E_pi e^{lambda^2 C2/N}]
// with C11 = 2 l1_gen C G_bar_f2, C12 = l1_gen C G_bar_f1 and
// C2 = 8 (Ge + Ge1)^2 C^2 (4 Ge C + 1)^2 per sample.
PsiEstimate psi_bounded_alt(double lambda, Eigen::Index N,
                            const std::vector<BoundConstants>& prior_samples);

// r_N = (kl + ln(1/delta) + psi)/lambda. Never vacuous-flagged: with
// unbounded innovations no finite loss range exists to compare against.
BoundReport r_N_unbounded(double lambda, Eigen::Index N, double delta, const KlEstimate& kl,
                          const PsiEstimate& psi, const SupInfo& sup = {});

// Same assembly with the bounded psi; flags vacuity when r_N exceeds the
// a-priori loss-gap range 2 (C sup_Ge)^2.
BoundReport r_N_bounded(double lambda, Eigen::Index N, double delta, const KlEstimate& kl,
                        const std::vector<BoundConstants>& prior_samples, const SupInfo& sup);

BoundReport r_N_bounded_alt(double lambda, Eigen::Index N, double delta, const KlEstimate& kl,
                            const std::vector<BoundConstants>& prior_samples, const SupInfo& sup);

double vacuity_threshold(double C_big, double sup_Ge);

// sup over the cloud of max{G_gen1 Ge^2, G_gen2 Gf}, inflated by safety.
double schedule_sup_term(const std::vector<BoundConstants>& prior_samples, double safety);

// lambda(N) = ln(sqrt(N)) / sup_term. Throws ConfigError for N < 2.
double lambda_schedule(Eigen::Index N, double sup_term);

// Golden-section minimizer on [lo, hi]; tol is the final bracket width on
// the input axis. Returns (argmin, min).
std::pair<double, double> golden_section_min(const std::function<double(double)>& f, double lo,
                                             double hi, double tol);

// The KL of the tilted posterior is a function of lambda; candidates during
// the rate search re-estimate it through this handle.
using KlHandle = std::function<KlEstimate(double)>;

struct LambdaStarOptions {
  double rel_tol = 1e-4;       // relative bracket width on lambda
  double reference_lambda = 0; // schedule point also tried when > 0
};

// Minimizes r_N over admissible lambda by golden section on ln(lambda),
// re-estimating the KL at every candidate. The unbounded route searches
// (0, lambda_max); the bounded routes grow the upper bracket by doubling
// until r_N turns upward. Returns the full report at the minimizer.
BoundReport lambda_star(Eigen::Index N, double delta, Theorem theorem, const KlHandle& kl_of,
                        const std::vector<BoundConstants>& prior_samples, const Dims& dims,
                        const SupInfo& sup, const LambdaStarOptions& opts = {});

// Prior sample cloud with the per-sample constants and class-sup estimates.
struct PriorCloud {
  Eigen::MatrixXd thetas;
  WMode mode = WMode::u_only;
  std::vector<BoundConstants> consts;
  Eigen::VectorXd Ge;
  Eigen::VectorXd Gf;
  double safety = 1.1;
  double sup_Ge = 0.0;
  double sup_Gf = 0.0;
};

PriorCloud make_prior_cloud(const Chain& chain, const Generator& gen, const NoiseSpec& noise,
                            double safety = 1.1);

SupInfo sup_info_of(const PriorCloud& cloud);

}  // namespace pacbound
