#include "pacbound/constants.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "pacbound/errors.hpp"
#include "pacbound/linalg.hpp"

namespace pacbound {

StateSpaceSystem build_error_system(const StateSpaceSystem& pred, WMode mode,
                                    const Generator& gen) {
  validate(gen);
  validate(pred);
  const Eigen::Index n_y = gen.n_y, n_u = gen.n_u, m = n_y + n_u;
  if (pred.p() != n_y)
    throw DimensionError("predictor output dimension must equal n_y");
  const Eigen::Index nw_expected = mode == WMode::u_only ? n_u : m;
  if (pred.n_w() != nw_expected)
    throw DimensionError("predictor input width does not match the w mode");
  if (mode == WMode::yu && pred.D.leftCols(n_y).cwiseAbs().maxCoeff() > 0.0)
    throw ConfigError("predictor feedthrough must not act on the current output "
                      "(first n_y columns of D must be zero in yu mode)");

  const Eigen::MatrixXd C1 = gen.sys.C.topRows(n_y);
  const Eigen::MatrixXd C2 = gen.sys.C.bottomRows(n_u);
  Eigen::MatrixXd C_w, B_w, D_w;
  if (mode == WMode::u_only) {
    C_w = C2;
    B_w.resize(pred.n(), m);
    B_w << Eigen::MatrixXd::Zero(pred.n(), n_y), pred.B;
    D_w.resize(n_y, m);
    D_w << Eigen::MatrixXd::Zero(n_y, n_y), pred.D;
  } else {
    C_w = gen.sys.C;
    B_w = pred.B;
    D_w = pred.D;
  }

  const Eigen::Index n_g = gen.sys.n(), n_p = pred.n();
  StateSpaceSystem err;
  err.A.setZero(n_g + n_p, n_g + n_p);
  err.A.topLeftCorner(n_g, n_g) = gen.sys.A;
  err.A.bottomLeftCorner(n_p, n_g) = pred.B * C_w;
  err.A.bottomRightCorner(n_p, n_p) = pred.A;
  err.B.resize(n_g + n_p, m);
  err.B << gen.sys.B, B_w;
  err.C.resize(n_y, n_g + n_p);
  err.C << C1 - pred.D * C_w, -pred.C;
  err.D.resize(n_y, m);
  err.D << Eigen::MatrixXd::Identity(n_y, n_y), Eigen::MatrixXd::Zero(n_y, n_u);
  err.D -= D_w;
  return err;
}

PowerBound power_bound(const Eigen::MatrixXd& A) {
  const double rho = spectral_radius(A);
  if (rho >= 1.0)
    throw StabilityError("power_bound: spectral radius " + std::to_string(rho) + " >= 1");
  PowerBound pb;
  pb.gamma_hat = 0.5 * (1.0 + rho);
  // Track A^k / gamma_hat^k; its norm peaks and then decays to zero because
  // the scaled matrix has spectral radius rho/gamma_hat < 1.
  Eigen::MatrixXd scaled = A / pb.gamma_hat;
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(A.rows(), A.cols());
  double max_ratio = 1.0;
  for (long k = 1; k <= 1000000; ++k) {
    power = (power * scaled).eval();
    const double ratio = op_norm(power);
    if (ratio > max_ratio) max_ratio = ratio;
    if (ratio < 1e-12) {
      pb.M_hat = std::max(1.0 + 1e-9, max_ratio);
      return pb;
    }
  }
  throw NumericError("power_bound: ratio did not decay below 1e-12 within 1e6 powers");
}

namespace {

double l1_norm_impl(const StateSpaceSystem& sys, double tol, bool weighted) {
  validate(sys);
  require_stable(sys, "l1_system_norm");
  if (tol <= 0.0) throw ConfigError("l1_system_norm needs tol > 0");
  if (sys.C.size() == 0 || op_norm(sys.C) == 0.0 || op_norm(sys.B) == 0.0)
    return op_norm(sys.D);

  const PowerBound pb = power_bound(sys.A);
  const double g = pb.gamma_hat;
  const double scale = pb.M_hat * op_norm(sys.C) * op_norm(sys.B);
  double total = op_norm(sys.D);
  Eigen::MatrixXd CAk = sys.C;  // C * A^k
  for (long k = 0; k <= 10000000; ++k) {
    const double weight = weighted ? static_cast<double>(k + 1) : 1.0;
    total += weight * op_norm(CAk * sys.B);
    double tail;
    const double gk1 = std::pow(g, static_cast<double>(k + 1));
    if (weighted) {
      // sum_{j>k} (j+1) g^j = g^{k+1} ((k+2) - (k+1) g) / (1-g)^2
      tail = scale * gk1 * ((k + 2) - (k + 1) * g) / ((1.0 - g) * (1.0 - g));
    } else {
      tail = scale * gk1 / (1.0 - g);
    }
    if (tail < tol) return total + tail;
    CAk = (CAk * sys.A).eval();
  }
  throw NumericError("l1_system_norm: tail bound did not reach the tolerance");
}

}  // namespace

double l1_system_norm(const StateSpaceSystem& sys, double tol) {
  return l1_norm_impl(sys, tol, false);
}

double l1_system_norm_weighted(const StateSpaceSystem& sys, double tol) {
  return l1_norm_impl(sys, tol, true);
}

double predictor_gain_bound(const StateSpaceSystem& pred) {
  const double nB = op_norm(pred.B), nC = op_norm(pred.C);
  if (nB == 0.0 || nC == 0.0) return 0.0;
  const PowerBound pb = power_bound(pred.A);
  const double one_minus = 1.0 - pb.gamma_hat;
  const double core = pb.M_hat * nB * nC / one_minus;
  return (1.0 + op_norm(pred.D) + core) * pb.M_hat * nC * nB / std::pow(one_minus, 1.5);
}

BoundConstants compute_constants(const StateSpaceSystem& pred, WMode mode, const Generator& gen,
                                 const NoiseSpec& noise, double tol) {
  validate(noise);
  const StateSpaceSystem err = build_error_system(pred, mode, gen);
  require_stable(err, "compute_constants error system");

  BoundConstants c;
  c.G_e = l1_system_norm(err, tol);
  c.G_e1 = l1_system_norm_weighted(err, tol);
  c.G_bar_f = predictor_gain_bound(pred);
  c.l1_gen = l1_system_norm(gen.sys, tol);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(noise.Q_e);
  c.mu_max = es.eigenvalues().maxCoeff();
  c.G_bar_gen = c.l1_gen * c.l1_gen * c.mu_max;

  const double nB = op_norm(pred.B), nC = op_norm(pred.C);
  const PowerBound pb = power_bound(pred.A);
  const double one_minus = 1.0 - pb.gamma_hat;
  const double core = pb.M_hat * nB * nC / one_minus;
  c.G_bar_f1 = core;
  c.G_bar_f2 = (1.0 + op_norm(pred.D) + core) / one_minus;

  const double m = static_cast<double>(gen.n_y + gen.n_u);
  if (noise.kind == NoiseKind::truncated_gaussian) {
    c.G_gen1 = 8.0 * noise.c_e * noise.c_e * gen.n_y * m;
    c.G_gen2 = 4.0 * c.l1_gen * c.l1_gen * noise.c_e * noise.c_e * m;
    c.C_big = noise.c_e * std::sqrt(m);
  } else {
    c.G_gen1 = std::numeric_limits<double>::quiet_NaN();
    c.G_gen2 = std::numeric_limits<double>::quiet_NaN();
    c.C_big = std::numeric_limits<double>::quiet_NaN();
  }
  return c;
}

}  // namespace pacbound
