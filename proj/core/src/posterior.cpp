#include "pacbound/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pacbound/constants.hpp"
#include "pacbound/errors.hpp"
#include "pacbound/linalg.hpp"
#include "pacbound/rng.hpp"

namespace pacbound {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

int theta_dim(WMode mode) { return mode == WMode::u_only ? 9 : 11; }

StateSpaceSystem make_predictor(const PredictorParams& params) {
  const int dim = theta_dim(params.mode);
  if (params.theta.size() != dim) {
    throw DimensionError("predictor parameter vector has size " +
                         std::to_string(params.theta.size()) + ", expected " +
                         std::to_string(dim));
  }
  const Eigen::VectorXd& t = params.theta;
  StateSpaceSystem sys;
  sys.A.resize(2, 2);
  sys.A << t(0), t(1), t(2), t(3);
  sys.C.resize(1, 2);
  sys.C << t(6), t(7);
  if (params.mode == WMode::u_only) {
    sys.B.resize(2, 1);
    sys.B << t(4), t(5);
    sys.D.resize(1, 1);
    sys.D << t(8);
  } else {
    sys.B.resize(2, 2);
    sys.B << t(9), t(4), t(10), t(5);
    sys.D.resize(1, 2);
    sys.D << 0.0, t(8);
  }
  return sys;
}

double log_prior_unnorm(const PredictorParams& params, const ClassConstraint& constraint) {
  if (params.theta.lpNorm<Eigen::Infinity>() > constraint.theta_box) return -kInf;
  const StateSpaceSystem pred = make_predictor(params);
  const double rho = spectral_radius(pred.A);
  if (!(rho < constraint.rho_max)) return -kInf;
  // cheap lower bound on the gain product (M_hat >= 1, leading factor >= 1)
  // prunes near-unit spectral radii before the expensive power scan
  const double gamma_hat = 0.5 * (1.0 + rho);
  const double bc = op_norm(pred.B) * op_norm(pred.C);
  if (bc / std::pow(1.0 - gamma_hat, 1.5) >= constraint.Gf_max) return -kInf;
  double gf = 0.0;
  try {
    gf = predictor_gain_bound(pred);
  } catch (const NumericError&) {
    // membership requires a certified gain bound; an uncertifiable point is
    // treated as outside the class
    return -kInf;
  }
  if (!(gf < constraint.Gf_max)) return -kInf;
  return -gf;
}

bool in_class(const PredictorParams& params, const ClassConstraint& constraint) {
  return std::isfinite(log_prior_unnorm(params, constraint));
}

double log_gibbs_unnorm(const PredictorParams& params, const ClassConstraint& constraint,
                        double lambda, const Trajectory& traj) {
  const double lp = log_prior_unnorm(params, constraint);
  if (!std::isfinite(lp)) return lp;
  const LossValue loss = empirical_loss(make_predictor(params), params.mode, traj);
  return lp - lambda * loss.value;
}

LogDensity make_log_prior(WMode mode, const ClassConstraint& constraint) {
  return [mode, constraint](const Eigen::VectorXd& theta) {
    return log_prior_unnorm(PredictorParams{theta, mode}, constraint);
  };
}

LogDensity make_log_gibbs(WMode mode, const ClassConstraint& constraint, double lambda,
                          const Trajectory& traj) {
  return [mode, constraint, lambda, &traj](const Eigen::VectorXd& theta) {
    return log_gibbs_unnorm(PredictorParams{theta, mode}, constraint, lambda, traj);
  };
}

Chain mh_sample(const LogDensity& log_density, const PredictorParams& init, Eigen::Index steps,
                double proposal_scale, std::uint64_t seed, const MhOptions& opts) {
  const Eigen::Index dim = init.theta.size();
  if (dim != theta_dim(init.mode)) {
    throw DimensionError("chain initial point has the wrong parameter dimension");
  }
  if (steps < 10) throw ConfigError("mh_sample needs at least 10 steps");
  if (!(proposal_scale > 0.0)) throw ConfigError("proposal scale must be positive");
  const Eigen::Index burn = opts.burn_in >= 0 ? opts.burn_in : steps / 5;
  if (burn >= steps) throw ConfigError("burn-in leaves no kept draws");
  const Eigen::Index thin = std::max<Eigen::Index>(1, opts.thinning);

  Eigen::VectorXd cur = init.theta;
  double cur_ld = log_density(cur);
  if (!std::isfinite(cur_ld)) {
    throw ConfigError("chain initial point has zero target density");
  }

  Rng rng(seed);
  double scale = proposal_scale;
  const Eigen::Index kept_cap = (steps - burn + thin - 1) / thin;
  Chain chain;
  chain.samples.resize(kept_cap, dim);
  chain.log_densities.resize(kept_cap);
  chain.burn_in = burn;
  chain.thinning = thin;
  chain.seed = seed;
  chain.mode = init.mode;

  Eigen::Index kept = 0;
  Eigen::Index accepted_post = 0;
  Eigen::Index accepted_win = 0;
  Eigen::Index window = 0;
  for (Eigen::Index step = 0; step < steps; ++step) {
    const Eigen::VectorXd prop = cur + scale * rng.normal_vector(dim);
    const double prop_ld = log_density(prop);
    bool accept = false;
    if (std::isfinite(prop_ld)) {
      const double log_alpha = prop_ld - cur_ld;
      accept = log_alpha >= 0.0 || std::log(rng.uniform()) < log_alpha;
    }
    if (accept) {
      cur = prop;
      cur_ld = prop_ld;
    }
    if (step < burn) {
      // acceptance-targeted scale adaptation, frozen once burn-in ends
      window += 1;
      accepted_win += accept ? 1 : 0;
      if (window == 100) {
        const double rate = static_cast<double>(accepted_win) / 100.0;
        if (rate < opts.accept_low) scale *= 0.8;
        if (rate > opts.accept_high) scale *= 1.25;
        window = 0;
        accepted_win = 0;
      }
    } else {
      accepted_post += accept ? 1 : 0;
      if ((step - burn) % thin == 0) {
        chain.samples.row(kept) = cur.transpose();
        chain.log_densities(kept) = cur_ld;
        kept += 1;
      }
    }
  }
  chain.acceptance_rate = static_cast<double>(accepted_post) / static_cast<double>(steps - burn);
  if (chain.acceptance_rate < 1e-2) {
    throw TuningError("post burn-in acceptance rate " + std::to_string(chain.acceptance_rate) +
                      " is below 1e-2; adjust the proposal scale");
  }
  return chain;
}

MeanSe expectation_over(const Eigen::VectorXd& values) {
  const Eigen::Index n = values.size();
  if (n == 0) throw ConfigError("expectation over an empty sample");
  MeanSe out;
  out.mean = values.mean();
  if (n == 1) {
    out.se = kInf;
    out.ess = 1.0;
    return out;
  }
  const Eigen::VectorXd centered = values.array() - out.mean;
  const double c0 = centered.squaredNorm() / static_cast<double>(n);
  if (c0 <= 0.0) {
    out.se = 0.0;
    out.ess = static_cast<double>(n);
    return out;
  }
  auto autocov = [&](Eigen::Index lag) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i + lag < n; ++i) acc += centered(i) * centered(i + lag);
    return acc / static_cast<double>(n);
  };
  // initial positive sequence: accumulate paired autocovariances while the
  // pair sums stay positive
  double sigma2 = -c0;
  for (Eigen::Index k = 0; 2 * k < n; ++k) {
    const double even = autocov(2 * k);
    const double odd = (2 * k + 1 < n) ? autocov(2 * k + 1) : 0.0;
    const double pair = even + odd;
    if (pair <= 0.0) break;
    sigma2 += 2.0 * pair;
  }
  if (sigma2 <= 0.0) sigma2 = c0;
  out.se = std::sqrt(sigma2 / static_cast<double>(n));
  out.ess = static_cast<double>(n) * c0 / sigma2;
  return out;
}

Eigen::VectorXd evaluate_over(const Chain& chain,
                              const std::function<double(const PredictorParams&)>& functional) {
  const Eigen::Index n = chain.samples.rows();
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out(i) = functional(PredictorParams{chain.samples.row(i).transpose(), chain.mode});
  }
  return out;
}

LogZEstimate estimate_log_z(const Eigen::VectorXd& prior_losses, double lambda) {
  const Eigen::Index n = prior_losses.size();
  if (n == 0) throw ConfigError("log Z estimate over an empty sample");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be nonnegative");
  const Eigen::VectorXd s = -lambda * prior_losses;
  const double shift = s.maxCoeff();
  const Eigen::VectorXd w = (s.array() - shift).exp();
  const MeanSe ms = expectation_over(w);
  LogZEstimate out;
  out.log_z = shift + std::log(ms.mean);
  out.se = ms.se / ms.mean;
  return out;
}

KlEstimate kl_from_gibbs_chain(const Eigen::VectorXd& gibbs_losses, double lambda,
                               const LogZEstimate& log_z) {
  const MeanSe ms = expectation_over(gibbs_losses);
  KlEstimate out;
  out.mean_loss = ms.mean;
  out.mean_loss_se = ms.se;
  out.raw = -lambda * ms.mean - log_z.log_z;
  out.value = std::max(0.0, out.raw);
  out.se = std::hypot(lambda * ms.se, log_z.se);
  return out;
}

KlEstimate kl_by_reweighting(const Eigen::VectorXd& prior_losses, double lambda) {
  const Eigen::Index n = prior_losses.size();
  if (n == 0) throw ConfigError("reweighting over an empty sample");
  const Eigen::VectorXd s = -lambda * prior_losses;
  const double shift = s.maxCoeff();
  const Eigen::VectorXd h = (s.array() - shift).exp();
  const Eigen::VectorXd g = h.cwiseProduct(prior_losses);
  const double mean_h = h.mean();
  const double mean_g = g.mean();
  KlEstimate out;
  out.mean_loss = mean_g / mean_h;
  // linearized influence of each draw on the posterior loss mean and the raw
  // divergence; expectation_over handles the chain autocorrelation
  Eigen::VectorXd infl_loss(n);
  Eigen::VectorXd infl_kl(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    infl_loss(i) = (g(i) - out.mean_loss * h(i)) / mean_h;
    infl_kl(i) = -lambda * infl_loss(i) - (h(i) - mean_h) / mean_h;
  }
  out.mean_loss_se = expectation_over(infl_loss).se;
  out.raw = -lambda * out.mean_loss - (shift + std::log(mean_h));
  out.value = std::max(0.0, out.raw);
  out.se = expectation_over(infl_kl).se;
  return out;
}

}  // namespace pacbound
