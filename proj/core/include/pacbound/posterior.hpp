#pragma once

#include <functional>

#include "pacbound/loss.hpp"
#include "pacbound/system.hpp"

namespace pacbound {

// Parameter vector of the two-state single-output predictor family:
// A = [t1 t2; t3 t4], C = [t7 t8]; u_only packs B = [t5; t6], D = [t9];
// yu packs B = [t10 t5; t11 t6], D = [0 t9].
struct PredictorParams {
  Eigen::VectorXd theta;
  WMode mode = WMode::u_only;
};

int theta_dim(WMode mode);
StateSpaceSystem make_predictor(const PredictorParams& params);

// Membership region of the hypothesis class: stable predictor dynamics,
// bounded gain product, and a sup-norm box that keeps flat directions from
// drifting.
struct ClassConstraint {
  double rho_max = 1.0;
  double Gf_max = 10.0;
  double theta_box = 100.0;
};

bool in_class(const PredictorParams& params, const ClassConstraint& constraint);

// -gain_bound on the class, -inf outside it.
double log_prior_unnorm(const PredictorParams& params, const ClassConstraint& constraint);

// log prior - lambda * empirical loss.
double log_gibbs_unnorm(const PredictorParams& params, const ClassConstraint& constraint,
                        double lambda, const Trajectory& traj);

using LogDensity = std::function<double(const Eigen::VectorXd&)>;

LogDensity make_log_prior(WMode mode, const ClassConstraint& constraint);
LogDensity make_log_gibbs(WMode mode, const ClassConstraint& constraint, double lambda,
                          const Trajectory& traj);

struct Chain {
  Eigen::MatrixXd samples;        // kept draws, one per row
  Eigen::VectorXd log_densities;  // target log density of each kept draw
  double acceptance_rate = 0.0;   // post burn-in
  Eigen::Index burn_in = 0;
  Eigen::Index thinning = 1;
  std::uint64_t seed = 0;
  WMode mode = WMode::u_only;
};

struct MhOptions {
  Eigen::Index burn_in = -1;   // -1: steps / 5
  Eigen::Index thinning = 1;
  double accept_low = 0.2;     // adaptation window during burn-in
  double accept_high = 0.4;
};

// Random-walk Metropolis with isotropic gaussian proposals. The proposal
// scale adapts during burn-in to land in [accept_low, accept_high] and is
// frozen afterwards. Throws ConfigError if the initial point has zero
// density, TuningError if the frozen acceptance rate ends below 1e-2.
Chain mh_sample(const LogDensity& log_density, const PredictorParams& init, Eigen::Index steps,
                double proposal_scale, std::uint64_t seed, const MhOptions& opts = {});

// Mean with autocorrelation-adjusted standard error (initial positive
// sequence estimator) and the implied effective sample size.
struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  double ess = 0.0;
};

MeanSe expectation_over(const Eigen::VectorXd& values);

// Applies a per-sample functional over a chain.
Eigen::VectorXd evaluate_over(const Chain& chain,
                              const std::function<double(const PredictorParams&)>& functional);

struct LogZEstimate {
  double log_z = 0.0;
  double se = 0.0;  // standard error of log Z
};

// log of the prior average of exp(-lambda * loss), computed with a shifted
// exponent so large lambda cannot underflow. losses are the empirical losses
// of the prior chain draws.
LogZEstimate estimate_log_z(const Eigen::VectorXd& prior_losses, double lambda);

struct KlEstimate {
  double value = 0.0;      // clamped at zero
  double raw = 0.0;        // before clamping
  double se = 0.0;
  double mean_loss = 0.0;  // posterior mean of the empirical loss
  double mean_loss_se = 0.0;
};

// KL of the tilted posterior against the prior via the identity
// KL = -lambda * E_post[loss] - log Z. The posterior mean comes from a chain
// targeting the tilted density.
KlEstimate kl_from_gibbs_chain(const Eigen::VectorXd& gibbs_losses, double lambda,
                               const LogZEstimate& log_z);

// Same identity, but with the posterior mean computed by self-normalized
// reweighting of prior draws; usable for any lambda without a fresh chain.
KlEstimate kl_by_reweighting(const Eigen::VectorXd& prior_losses, double lambda);

}  // namespace pacbound
