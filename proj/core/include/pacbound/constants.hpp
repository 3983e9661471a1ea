#pragma once

#include "pacbound/system.hpp"

namespace pacbound {

// Certificate for the matrix-power decay ||A^k||_2 <= M_hat * gamma_hat^k.
struct PowerBound {
  double M_hat = 1.0;
  double gamma_hat = 0.0;
};

// Per-predictor and generator-level scalars consumed by the error terms.
// The last three are only meaningful for bounded (truncated) noise and are
// NaN otherwise.
struct BoundConstants {
  double G_e = 0.0;        // l1 norm of the error system
  double G_bar_f = 0.0;    // predictor gain product
  double G_bar_gen = 0.0;  // generator scale, l1_gen^2 * mu_max
  double l1_gen = 0.0;     // l1 norm of the generator
  double mu_max = 0.0;     // largest eigenvalue of the innovation covariance
  double G_e1 = 0.0;       // (k+1)-weighted l1 norm of the error system
  double G_bar_f1 = 0.0;
  double G_bar_f2 = 0.0;
  double G_gen1 = 0.0;
  double G_gen2 = 0.0;
  double C_big = 0.0;      // c_e * sqrt(n_u + n_y)
};

// Assembles the system whose output is the prediction error y - yhat when
// driven by the generator innovations. The state stacks the generator state
// on top of the predictor state. In yu mode the predictor feedthrough must
// have its first n_y columns identically zero (the prediction may not read
// the current output); violations raise ConfigError.
StateSpaceSystem build_error_system(const StateSpaceSystem& pred, WMode mode,
                                    const Generator& gen);

// gamma_hat = (1 + spectral_radius)/2 and the smallest valid M_hat, scanned
// until the ratio ||A^k||/gamma_hat^k has decayed below 1e-12.
PowerBound power_bound(const Eigen::MatrixXd& A);

// Certified upper bound on ||D||_2 + sum_k ||C A^k K||_2: partial sum until
// the geometric tail bound drops below tol, then the tail bound is added.
double l1_system_norm(const StateSpaceSystem& sys, double tol = 1e-10);

// Same with (k+1) weights on the sum; the tail uses the closed form of
// sum_{k>K} (k+1) x^k.
double l1_system_norm_weighted(const StateSpaceSystem& sys, double tol = 1e-10);

// The predictor gain product (1 + ||D|| + M ||B|| ||C|| / (1-g)) *
// M ||C|| ||B|| / (1-g)^1.5 evaluated with the power_bound certificate.
double predictor_gain_bound(const StateSpaceSystem& pred);

// Fills every field for one (predictor, generator, noise) triple.
BoundConstants compute_constants(const StateSpaceSystem& pred, WMode mode, const Generator& gen,
                                 const NoiseSpec& noise, double tol = 1e-10);

}  // namespace pacbound
