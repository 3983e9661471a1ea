#include "pacbound/loss.hpp"

#include <string>

#include "pacbound/errors.hpp"
#include "pacbound/linalg.hpp"
#include "pacbound/rng.hpp"

namespace pacbound {

namespace {

constexpr std::uint64_t kStationaryInitStream = 0x1f3d5b79;

double mean_error_energy(const StateSpaceSystem& err, Eigen::VectorXd state,
                         const Eigen::MatrixXd& e) {
  const Eigen::Index N = e.rows();
  Eigen::VectorXd out(err.p());
  double acc = 0.0;
  for (Eigen::Index t = 0; t < N; ++t) {
    out.noalias() = err.C * state;
    out.noalias() += err.D * e.row(t).transpose();
    acc += out.squaredNorm();
    Eigen::VectorXd xn = err.A * state;
    xn.noalias() += err.B * e.row(t).transpose();
    state.swap(xn);
  }
  return acc / static_cast<double>(N);
}

}  // namespace

LossValue empirical_loss(const StateSpaceSystem& pred, WMode mode, const Trajectory& traj) {
  const Eigen::Index N = traj.length();
  if (N < 1) throw ConfigError("empirical_loss needs a nonempty trajectory");
  const Eigen::MatrixXd w = build_w(mode, traj);
  const Eigen::MatrixXd yhat = predict_rollout(pred, w);
  if (yhat.cols() != traj.y.cols())
    throw DimensionError("predictor output width does not match the trajectory");
  LossValue out;
  out.value = (traj.y - yhat).squaredNorm() / static_cast<double>(N);
  out.n_samples = N;
  return out;
}

LossValue infinite_horizon_loss(const StateSpaceSystem& pred, WMode mode, const Generator& gen,
                                const Trajectory& traj) {
  if (traj.e.rows() != traj.length() || traj.e.rows() == 0)
    throw ConfigError("infinite_horizon_loss needs the trajectory's innovation sequence");
  const StateSpaceSystem err = build_error_system(pred, mode, gen);
  require_stable(err, "infinite_horizon_loss error system");

  const Eigen::Index n_g = gen.sys.n(), n_p = pred.n();
  Eigen::VectorXd state(n_g + n_p);
  if (traj.e_burn.rows() > 0) {
    // Bounded start: replay the burn-in through the full error system. The
    // generator block then reproduces x0 and the predictor block carries the
    // same truncated transient the generator was given.
    state.setZero();
    for (Eigen::Index t = 0; t < traj.e_burn.rows(); ++t) {
      Eigen::VectorXd xn = err.A * state;
      xn.noalias() += err.B * traj.e_burn.row(t).transpose();
      state.swap(xn);
    }
  } else {
    if (traj.q_innov.rows() != err.n_w())
      throw ConfigError("infinite_horizon_loss needs the trajectory's innovation covariance");
    // Gaussian start: the joint stationary state is gaussian, so draw the
    // predictor block from its conditional law given the stored x0.
    const Eigen::MatrixXd P =
        solve_discrete_lyapunov(err.A, err.B * traj.q_innov * err.B.transpose());
    const Eigen::MatrixXd P11 = P.topLeftCorner(n_g, n_g);
    const Eigen::MatrixXd P21 = P.bottomLeftCorner(n_p, n_g);
    const Eigen::MatrixXd P22 = P.bottomRightCorner(n_p, n_p);
    const Eigen::MatrixXd P11_pinv = psd_pinv(P11);
    const Eigen::MatrixXd gain = P21 * P11_pinv;
    const Eigen::MatrixXd cond_cov = P22 - gain * P21.transpose();
    Rng rng(derive_seed(traj.seed, kStationaryInitStream));
    state.head(n_g) = traj.x0;
    state.tail(n_p) = gain * traj.x0 + psd_sqrt(cond_cov) * rng.normal_vector(n_p);
  }

  LossValue out;
  out.value = mean_error_energy(err, std::move(state), traj.e);
  out.n_samples = traj.length();
  return out;
}

LossValue generalization_loss(const StateSpaceSystem& pred, WMode mode, const Generator& gen,
                              const Eigen::MatrixXd& Q_eff) {
  const StateSpaceSystem err = build_error_system(pred, mode, gen);
  require_stable(err, "generalization_loss error system");
  if (Q_eff.rows() != err.n_w() || Q_eff.cols() != err.n_w())
    throw DimensionError("innovation covariance must be m x m");
  const Eigen::MatrixXd P = solve_discrete_lyapunov(err.A, err.B * Q_eff * err.B.transpose());
  LossValue out;
  out.value = (err.C * P * err.C.transpose()).trace() + (err.D * Q_eff * err.D.transpose()).trace();
  out.n_samples = 0;
  return out;
}

}  // namespace pacbound
