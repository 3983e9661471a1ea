#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace pacbound {

// Discrete-time state-space quadruple. For data generators B is the
// innovation gain (often written K) and D is the identity feedthrough of the
// innovation onto the output.
struct StateSpaceSystem {
  Eigen::MatrixXd A;  // n x n
  Eigen::MatrixXd B;  // n x n_w
  Eigen::MatrixXd C;  // p x n
  Eigen::MatrixXd D;  // p x n_w

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index n_w() const { return B.cols(); }
  Eigen::Index p() const { return C.rows(); }
};

// Throws DimensionError unless all four matrices are mutually consistent.
void validate(const StateSpaceSystem& sys);

// Throws StabilityError unless spectral_radius(A) < 1.
void require_stable(const StateSpaceSystem& sys, const char* what);

// A generator together with the output partition [y; u].
struct Generator {
  StateSpaceSystem sys;
  int n_y = 0;
  int n_u = 0;
};

// Checks partition consistency: p == n_w == n_y + n_u.
void validate(const Generator& gen);

enum class NoiseKind { gaussian, truncated_gaussian };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::gaussian;
  Eigen::MatrixXd Q_e;   // m x m, symmetric positive definite
  double c_e = 0.0;      // componentwise bound, truncated kind only
  // When true, Q_e is the covariance the truncated draws should achieve and
  // the sampling covariance is solved for; when false (default) Q_e is the
  // pre-truncation covariance and the achieved one is merely reported.
  bool q_is_target = false;
};

void validate(const NoiseSpec& spec);

// Sampling and effective second-moment descriptions of a noise spec.
// Q_sample feeds the sampler (pre-truncation); Q_effective is the covariance
// of the delivered draws (equals Q_e for the gaussian kind). mass is the
// acceptance probability of the rejection step (1 for gaussian).
struct ResolvedNoise {
  Eigen::MatrixXd Q_sample;
  Eigen::MatrixXd Q_effective;
  double mass = 1.0;
};

ResolvedNoise resolve_noise(const NoiseSpec& spec);

// Probability mass of the box {|e_i| <= c_e for all i} under N(0, Q),
// by tensorized Gauss-Legendre quadrature (deterministic).
double truncation_mass(const Eigen::MatrixXd& Q, double c_e);

// Covariance of N(0, Q) conditioned on the same box.
Eigen::MatrixXd truncated_covariance(const Eigen::MatrixXd& Q, double c_e);

struct Trajectory {
  Eigen::MatrixXd y;       // N x n_y
  Eigen::MatrixXd u;       // N x n_u
  Eigen::MatrixXd e;       // N x m, innovation draws actually used
  Eigen::MatrixXd e_burn;  // B x m burn-in innovations; empty when the
                           // initial state was drawn from stationarity
  Eigen::VectorXd x0;      // generator state at t = 0
  Eigen::MatrixXd q_innov; // second-moment matrix of the innovation process
  std::uint64_t seed = 0;

  Eigen::Index length() const { return y.rows(); }
  Eigen::Index m() const { return e.cols(); }
};

// i.i.d. zero-mean draws, one per row. Gaussian kind applies the symmetric
// square root of Q_sample to standard normals; truncated kind rejects until
// every component is within [-c_e, c_e]. Throws ConfigError if the observed
// acceptance rate falls below 1e-3.
Eigen::MatrixXd draw_noise(const NoiseSpec& spec, Eigen::Index count, std::uint64_t seed);

// Burn-in length used for the truncated kind: number of steps after which the
// zero-state transient is below 1e-12 relative.
Eigen::Index burn_in_length(const StateSpaceSystem& sys);

// Recomputes the output path from a stored initial state and innovation
// sequence; simulate_generator routes through this so the Trajectory
// invariant (replay reproduces y,u bitwise) holds by construction.
void replay(const Generator& gen, const Eigen::VectorXd& x0, const Eigen::MatrixXd& e,
            Eigen::MatrixXd& y, Eigen::MatrixXd& u);

// Simulates N steps of the generator. Gaussian kind starts from an exact
// stationary draw; truncated kind burns in from the zero state and keeps the
// burn-in innovations on the trajectory.
Trajectory simulate_generator(const Generator& gen, const NoiseSpec& spec, Eigen::Index N,
                              std::uint64_t seed);

// Predictor input selection.
enum class WMode { u_only, yu };

Eigen::Index w_dim(WMode mode, const Generator& gen);

// N x n_w matrix of predictor inputs assembled from a trajectory.
Eigen::MatrixXd build_w(WMode mode, const Trajectory& traj);

// Runs the predictor from x_hat(0) = 0 over the input rows of w and returns
// the N x p prediction matrix.
Eigen::MatrixXd predict_rollout(const StateSpaceSystem& pred, const Eigen::MatrixXd& w);

}  // namespace pacbound
