#include "pacbound/system.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "pacbound/errors.hpp"
#include "pacbound/linalg.hpp"
#include "pacbound/rng.hpp"

namespace pacbound {

void validate(const StateSpaceSystem& sys) {
  const Eigen::Index n = sys.A.rows();
  if (sys.A.cols() != n) throw DimensionError("state matrix must be square");
  if (sys.B.rows() != n) throw DimensionError("input matrix row count does not match state size");
  if (sys.C.cols() != n)
    throw DimensionError("output matrix column count does not match state size");
  if (sys.D.rows() != sys.C.rows() || sys.D.cols() != sys.B.cols())
    throw DimensionError("feedthrough must be p x n_w");
}

void require_stable(const StateSpaceSystem& sys, const char* what) {
  const double rho = spectral_radius(sys.A);
  if (rho >= 1.0)
    throw StabilityError(std::string(what) + ": spectral radius " + std::to_string(rho) +
                         " >= 1");
}

void validate(const Generator& gen) {
  validate(gen.sys);
  if (gen.n_y < 1 || gen.n_u < 0)
    throw DimensionError("generator needs n_y >= 1 and n_u >= 0");
  const Eigen::Index m = gen.n_y + gen.n_u;
  if (gen.sys.p() != m || gen.sys.n_w() != m)
    throw DimensionError("generator output and innovation dimension must both equal n_y + n_u");
}

void validate(const NoiseSpec& spec) {
  const Eigen::Index m = spec.Q_e.rows();
  if (m == 0 || spec.Q_e.cols() != m)
    throw ConfigError("noise covariance must be square and nonempty");
  if ((spec.Q_e - spec.Q_e.transpose()).norm() > 1e-12 * (1.0 + spec.Q_e.norm()))
    throw ConfigError("noise covariance must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(spec.Q_e);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw ConfigError("noise covariance must be positive definite");
  if (spec.kind == NoiseKind::truncated_gaussian && spec.c_e <= 0.0)
    throw ConfigError("truncated noise needs c_e > 0");
}

namespace {

struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GaussLegendre gauss_legendre(int n) {
  GaussLegendre rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.weights[n - 1 - i] = rule.weights[i];
  }
  return rule;
}

constexpr int kQuadNodes = 120;

// Integrates f over the box [-c, c]^m against the N(0, Q) density.
// f maps the evaluation point to a scalar contribution multiplier.
template <typename F>
double box_gaussian_integral(const Eigen::MatrixXd& Q, double c, F&& f) {
  const Eigen::Index m = Q.rows();
  if (m > 3)
    throw ConfigError("box quadrature supports at most 3 noise components, got " +
                      std::to_string(m));
  const GaussLegendre rule = gauss_legendre(kQuadNodes);
  const Eigen::MatrixXd Qinv = Q.inverse();
  const double norm_const =
      std::pow(2.0 * M_PI, -0.5 * static_cast<double>(m)) / std::sqrt(Q.determinant());
  // beyond 9 marginal sigmas the density carries no double-precision mass;
  // clamping a very wide box keeps the nodes where the integrand lives
  Eigen::VectorXd s(m);
  for (Eigen::Index a = 0; a < m; ++a) s(a) = std::min(c, 9.0 * std::sqrt(Q(a, a)));
  Eigen::VectorXd e(m);
  double total = 0.0;
  const auto density = [&](const Eigen::VectorXd& pt) {
    return norm_const * std::exp(-0.5 * pt.dot(Qinv * pt));
  };
  if (m == 1) {
    for (int i = 0; i < kQuadNodes; ++i) {
      e(0) = s(0) * rule.nodes[i];
      total += rule.weights[i] * density(e) * f(e);
    }
  } else if (m == 2) {
    for (int i = 0; i < kQuadNodes; ++i) {
      e(0) = s(0) * rule.nodes[i];
      for (int j = 0; j < kQuadNodes; ++j) {
        e(1) = s(1) * rule.nodes[j];
        total += rule.weights[i] * rule.weights[j] * density(e) * f(e);
      }
    }
  } else {
    for (int i = 0; i < kQuadNodes; ++i) {
      e(0) = s(0) * rule.nodes[i];
      for (int j = 0; j < kQuadNodes; ++j) {
        e(1) = s(1) * rule.nodes[j];
        for (int k = 0; k < kQuadNodes; ++k) {
          e(2) = s(2) * rule.nodes[k];
          total += rule.weights[i] * rule.weights[j] * rule.weights[k] * density(e) * f(e);
        }
      }
    }
  }
  return total * s.prod();
}

}  // namespace

double truncation_mass(const Eigen::MatrixXd& Q, double c_e) {
  return box_gaussian_integral(Q, c_e, [](const Eigen::VectorXd&) { return 1.0; });
}

Eigen::MatrixXd truncated_covariance(const Eigen::MatrixXd& Q, double c_e) {
  const Eigen::Index m = Q.rows();
  const double mass = truncation_mass(Q, c_e);
  if (mass <= 0.0) throw NumericError("truncation box has zero mass");
  Eigen::MatrixXd cov(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = a; b < m; ++b) {
      const double v = box_gaussian_integral(
          Q, c_e, [a, b](const Eigen::VectorXd& e) { return e(a) * e(b); });
      cov(a, b) = cov(b, a) = v / mass;
    }
  return cov;
}

ResolvedNoise resolve_noise(const NoiseSpec& spec) {
  validate(spec);
  ResolvedNoise out;
  if (spec.kind == NoiseKind::gaussian) {
    out.Q_sample = spec.Q_e;
    out.Q_effective = spec.Q_e;
    out.mass = 1.0;
    return out;
  }
  if (!spec.q_is_target) {
    out.Q_sample = spec.Q_e;
    out.Q_effective = truncated_covariance(spec.Q_e, spec.c_e);
    out.mass = truncation_mass(spec.Q_e, spec.c_e);
    return out;
  }
  // Solve for the pre-truncation covariance whose truncation achieves Q_e.
  Eigen::MatrixXd Qs = spec.Q_e;
  for (int iter = 0; iter < 200; ++iter) {
    const Eigen::MatrixXd achieved = truncated_covariance(Qs, spec.c_e);
    const Eigen::MatrixXd gap = spec.Q_e - achieved;
    if (gap.norm() <= 1e-11 * spec.Q_e.norm()) {
      out.Q_sample = Qs;
      out.Q_effective = achieved;
      out.mass = truncation_mass(Qs, spec.c_e);
      return out;
    }
    Qs += gap;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Qs);
    if (es.eigenvalues().minCoeff() <= 0.0)
      throw NumericError("target covariance is not achievable by truncation with this c_e");
  }
  throw NumericError("pre-truncation covariance iteration did not converge");
}

Eigen::MatrixXd draw_noise(const NoiseSpec& spec, Eigen::Index count, std::uint64_t seed) {
  if (count < 1) throw ConfigError("draw_noise needs count >= 1");
  const ResolvedNoise rn = resolve_noise(spec);
  const Eigen::Index m = rn.Q_sample.rows();
  const Eigen::MatrixXd S = psd_sqrt(rn.Q_sample);
  Rng rng(seed);
  Eigen::MatrixXd e(count, m);
  if (spec.kind == NoiseKind::gaussian) {
    for (Eigen::Index i = 0; i < count; ++i) e.row(i) = (S * rng.normal_vector(m)).transpose();
    return e;
  }
  std::uint64_t attempts = 0, accepted = 0;
  for (Eigen::Index i = 0; i < count; ++i) {
    for (std::uint64_t tries = 0;; ++tries) {
      if (tries >= 100000)
        throw ConfigError("truncated noise rejection acceptance rate below 1e-3; "
                          "c_e is too small for this covariance");
      ++attempts;
      const Eigen::VectorXd cand = S * rng.normal_vector(m);
      if (cand.cwiseAbs().maxCoeff() <= spec.c_e) {
        e.row(i) = cand.transpose();
        ++accepted;
        break;
      }
      if (attempts % 100000 == 0 &&
          static_cast<double>(accepted) < 1e-3 * static_cast<double>(attempts))
        throw ConfigError("truncated noise rejection acceptance rate below 1e-3; "
                          "c_e is too small for this covariance");
    }
  }
  return e;
}

Eigen::Index burn_in_length(const StateSpaceSystem& sys) {
  const double rho = spectral_radius(sys.A);
  const Eigen::Index n = sys.n();
  if (rho <= 0.0) return std::max<Eigen::Index>(n, 1);
  const double steps = std::ceil(std::log(1e-12) / std::log(rho));
  return std::max<Eigen::Index>(static_cast<Eigen::Index>(steps), std::max<Eigen::Index>(n, 1));
}

void replay(const Generator& gen, const Eigen::VectorXd& x0, const Eigen::MatrixXd& e,
            Eigen::MatrixXd& y, Eigen::MatrixXd& u) {
  const Eigen::Index N = e.rows();
  y.resize(N, gen.n_y);
  u.resize(N, gen.n_u);
  Eigen::VectorXd x = x0;
  Eigen::VectorXd z(gen.sys.p());
  for (Eigen::Index t = 0; t < N; ++t) {
    z.noalias() = gen.sys.C * x;
    z.noalias() += gen.sys.D * e.row(t).transpose();
    y.row(t) = z.head(gen.n_y).transpose();
    u.row(t) = z.tail(gen.n_u).transpose();
    Eigen::VectorXd xn = gen.sys.A * x;
    xn.noalias() += gen.sys.B * e.row(t).transpose();
    x.swap(xn);
  }
}

Trajectory simulate_generator(const Generator& gen, const NoiseSpec& spec, Eigen::Index N,
                              std::uint64_t seed) {
  validate(gen);
  require_stable(gen.sys, "simulate_generator");
  if (N < 1) throw ConfigError("simulate_generator needs N >= 1");
  if (spec.Q_e.rows() != gen.sys.n_w())
    throw DimensionError("noise dimension does not match the generator innovation dimension");
  const ResolvedNoise rn = resolve_noise(spec);

  Trajectory traj;
  traj.seed = seed;
  traj.q_innov = rn.Q_effective;
  if (spec.kind == NoiseKind::gaussian) {
    const Eigen::MatrixXd P =
        solve_discrete_lyapunov(gen.sys.A, gen.sys.B * rn.Q_sample * gen.sys.B.transpose());
    Rng init_rng(derive_seed(seed, 1));
    traj.x0 = psd_sqrt(P) * init_rng.normal_vector(gen.sys.n());
    traj.e = draw_noise(spec, N, derive_seed(seed, 2));
    traj.e_burn.resize(0, gen.sys.n_w());
  } else {
    const Eigen::Index burn = burn_in_length(gen.sys);
    const Eigen::MatrixXd all = draw_noise(spec, burn + N, derive_seed(seed, 2));
    traj.e_burn = all.topRows(burn);
    traj.e = all.bottomRows(N);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(gen.sys.n());
    for (Eigen::Index t = 0; t < burn; ++t) {
      Eigen::VectorXd xn = gen.sys.A * x;
      xn.noalias() += gen.sys.B * traj.e_burn.row(t).transpose();
      x.swap(xn);
    }
    traj.x0 = x;
  }
  replay(gen, traj.x0, traj.e, traj.y, traj.u);
  return traj;
}

Eigen::Index w_dim(WMode mode, const Generator& gen) {
  return mode == WMode::u_only ? gen.n_u : gen.n_y + gen.n_u;
}

Eigen::MatrixXd build_w(WMode mode, const Trajectory& traj) {
  if (mode == WMode::u_only) return traj.u;
  Eigen::MatrixXd w(traj.length(), traj.y.cols() + traj.u.cols());
  w << traj.y, traj.u;
  return w;
}

Eigen::MatrixXd predict_rollout(const StateSpaceSystem& pred, const Eigen::MatrixXd& w) {
  validate(pred);
  require_stable(pred, "predict_rollout");
  if (w.cols() != pred.n_w())
    throw DimensionError("input width " + std::to_string(w.cols()) +
                         " does not match predictor n_w " + std::to_string(pred.n_w()));
  const Eigen::Index N = w.rows();
  Eigen::MatrixXd yhat(N, pred.p());
  Eigen::VectorXd x = Eigen::VectorXd::Zero(pred.n());
  Eigen::VectorXd out(pred.p());
  for (Eigen::Index t = 0; t < N; ++t) {
    out.noalias() = pred.C * x;
    out.noalias() += pred.D * w.row(t).transpose();
    yhat.row(t) = out.transpose();
    Eigen::VectorXd xn = pred.A * x;
    xn.noalias() += pred.B * w.row(t).transpose();
    x.swap(xn);
  }
  return yhat;
}

}  // namespace pacbound
