#pragma once

#include "cli/config.hpp"
#include "pacbound/bounds.hpp"
#include "pacbound/oracle.hpp"

namespace pacbound::cli {

// Data-independent state shared by every bound evaluation: the prior sample
// cloud with per-sample constants, the class-sup estimates, generator-level
// scalars, the admissibility cap and the schedule denominator.
struct Workspace {
  Chain prior_chain;
  PriorCloud cloud;
  SupInfo sup;
  Dims dims;
  double mu_max = 0.0;
  double G_bar_gen = 0.0;
  double lambda_max = 0.0;
  double schedule_sup = 0.0;   // bounded routes only, 0 otherwise
  Eigen::VectorXd init_theta;  // lowest-gain prior draw, chain start point
};

Workspace build_workspace(const ExperimentConfig& cfg);

// Route defaults: half the admissibility cap, the ln(sqrt N) schedule, or
// sqrt(N) for the large-rate bounded route.
double default_lambda(Theorem t, Eigen::Index N, const Workspace& ws);

// Empirical loss of every cloud predictor on one trajectory.
Eigen::VectorXd prior_losses_on(const Workspace& ws, const Trajectory& traj, int threads);

// KL of the tilted posterior: fresh tempered chain for small N (or when
// forced), reweighting of the prior losses otherwise. chain_out, when given,
// receives the chain and its per-draw losses for persistence.
KlEstimate estimate_kl(const ExperimentConfig& cfg, const Workspace& ws, const Trajectory& traj,
                       const Eigen::VectorXd& prior_losses, double lambda, std::uint64_t seed,
                       Chain* chain_out, Eigen::VectorXd* losses_out);

// One sweep cell: resolves lambda from the policy, estimates the KL, and
// assembles the route's report.
BoundReport evaluate_cell(const ExperimentConfig& cfg, const Workspace& ws,
                          const Trajectory& traj, const Eigen::VectorXd& prior_losses, Theorem t,
                          const LambdaPolicy& policy, Eigen::Index N, std::uint64_t seed,
                          Chain* chain_out, Eigen::VectorXd* losses_out);

int cmd_simulate(const ExperimentConfig& cfg);
int cmd_sweep(const ExperimentConfig& cfg);
int cmd_verify(const ExperimentConfig& cfg);
int cmd_bound(const ExperimentConfig& cfg);
int cmd_lambda_star(const ExperimentConfig& cfg);

}  // namespace pacbound::cli
