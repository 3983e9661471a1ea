#pragma once

#include "pacbound/constants.hpp"
#include "pacbound/system.hpp"

namespace pacbound {

struct LossValue {
  double value = 0.0;
  Eigen::Index n_samples = 0;
  double std_error = 0.0;
  bool exact = true;  // deterministic given its inputs (no Monte-Carlo error)
};

// Mean squared one-step prediction error of the rollout started from the
// zero predictor state.
LossValue empirical_loss(const StateSpaceSystem& pred, WMode mode, const Trajectory& traj);

// Same average, but for the predictor that has already seen the infinite
// past: the error system is driven by the trajectory's innovations with its
// state started from stationarity. Stationary start is realized exactly for
// a gaussian trajectory (conditional draw of the predictor state given x0,
// seeded from the trajectory seed) and by replaying the stored burn-in
// innovations otherwise. Throws ConfigError if the trajectory lacks the
// innovation sequence.
LossValue infinite_horizon_loss(const StateSpaceSystem& pred, WMode mode, const Generator& gen,
                                const Trajectory& traj);

// Stationary expected squared prediction error, from the error-system
// Lyapunov equation: trace(C P C^T) + trace(D Q D^T). Q_eff is the
// second-moment matrix of the innovations (achieved covariance for
// truncated noise).
LossValue generalization_loss(const StateSpaceSystem& pred, WMode mode, const Generator& gen,
                              const Eigen::MatrixXd& Q_eff);

}  // namespace pacbound
