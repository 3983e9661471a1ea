#include "pacbound/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pacbound/errors.hpp"
#include "pacbound/linalg.hpp"
#include "pacbound/rng.hpp"

namespace pacbound {

namespace {

double factorial(int k) {
  double out = 1.0;
  for (int i = 2; i <= k; ++i) out *= static_cast<double>(i);
  return out;
}

struct MomentStat {
  double mean = 0.0;
  double se = 0.0;
};

MomentStat iid_mean(const Eigen::VectorXd& values) {
  const Eigen::Index n = values.size();
  MomentStat out;
  out.mean = values.mean();
  if (n > 1) {
    const double var = (values.array() - out.mean).square().sum() / static_cast<double>(n - 1);
    out.se = std::sqrt(var / static_cast<double>(n));
  }
  return out;
}

LemmaCheckResult finish(LemmaCheckResult result) {
  result.margin = result.bound - result.observed;
  result.pass = result.observed <= result.bound + 3.0 * result.se;
  return result;
}

}  // namespace

std::vector<LemmaCheckResult> check_even_moments(const NoiseSpec& noise, int r_max,
                                                 Eigen::Index trials, std::uint64_t seed) {
  if (r_max < 1 || r_max > 5) throw ConfigError("even-moment check supports r_max in 1..5");
  if (trials < 2) throw ConfigError("even-moment check needs at least 2 trials");
  validate(noise);
  const Eigen::MatrixXd draws = draw_noise(noise, trials, seed);
  const int m = static_cast<int>(noise.Q_e.rows());
  const double mu_max = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(noise.Q_e)
                            .eigenvalues()
                            .maxCoeff();
  const Eigen::VectorXd sq = draws.rowwise().squaredNorm();
  std::vector<LemmaCheckResult> results;
  for (int r = 1; r <= r_max; ++r) {
    const Eigen::VectorXd v = sq.array().pow(r);
    const MomentStat stat = iid_mean(v);
    LemmaCheckResult res;
    res.lemma_id = "innovation_even_moments";
    res.trials = trials;
    res.r = r;
    res.observed = stat.mean;
    res.se = stat.se;
    res.bound = std::pow(mu_max, r) * std::pow(2.0, r) * factorial(m + r - 1);
    results.push_back(finish(res));
  }
  return results;
}

double sigma_moment_bound(const NoiseSpec& noise, int m, int r) {
  if (noise.kind == NoiseKind::truncated_gaussian) {
    return std::pow(2.0 * noise.c_e * noise.c_e * m, r);
  }
  const double mu_max = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(noise.Q_e)
                            .eigenvalues()
                            .maxCoeff();
  return std::pow(mu_max, r) * std::pow(3.0, r) * factorial(m + r - 1);
}

LemmaCheckResult check_sigma_bound(const NoiseSpec& noise, const Dims& dims, int r,
                                   Eigen::Index trials, std::uint64_t seed) {
  if (r < 2 || r > 4) throw ConfigError("outer-product moment check supports r in 2..4");
  if (trials < 2) throw ConfigError("outer-product moment check needs at least 2 trials");
  validate(noise);
  if (noise.Q_e.rows() != dims.m()) {
    throw DimensionError("noise dimension does not match n_y + n_u");
  }
  const Eigen::MatrixXd q_eff = resolve_noise(noise).Q_effective;
  const Eigen::MatrixXd draws1 = draw_noise(noise, trials, seed);
  const Eigen::MatrixXd draws2 = draw_noise(noise, trials, derive_seed(seed, 1));
  Eigen::VectorXd matched(trials);
  Eigen::VectorXd mismatched(trials);
  for (Eigen::Index i = 0; i < trials; ++i) {
    const Eigen::VectorXd e1 = draws1.row(i).transpose();
    const Eigen::VectorXd e2 = draws2.row(i).transpose();
    matched(i) = std::pow(op_norm(q_eff - e1 * e1.transpose()), r);
    mismatched(i) = std::pow(e1.norm() * e2.norm(), r);
  }
  const MomentStat stat_eq = iid_mean(matched);
  const MomentStat stat_neq = iid_mean(mismatched);
  LemmaCheckResult res;
  res.lemma_id = "outer_product_moment";
  res.trials = trials;
  res.r = r;
  if (stat_eq.mean >= stat_neq.mean) {
    res.observed = stat_eq.mean;
    res.se = stat_eq.se;
  } else {
    res.observed = stat_neq.mean;
    res.se = stat_neq.se;
  }
  res.bound = sigma_moment_bound(noise, dims.m(), r);
  return finish(res);
}

std::vector<LemmaCheckResult> check_vn_moment_decay(const StateSpaceSystem& pred, WMode mode,
                                                    const Generator& gen, const NoiseSpec& noise,
                                                    int r,
                                                    const std::vector<Eigen::Index>& N_grid,
                                                    Eigen::Index trials, std::uint64_t seed) {
  if (r < 1 || r > 2) throw ConfigError("decay check supports r in {1, 2}");
  if (noise.kind != NoiseKind::gaussian) {
    throw ConfigError("decay check applies to gaussian innovations");
  }
  if (trials < 2) throw ConfigError("decay check needs at least 2 trials");
  const BoundConstants c = compute_constants(pred, mode, gen, noise);
  const int m = gen.n_y + gen.n_u;
  const double scale = std::pow(4.0 * c.G_bar_gen * c.G_bar_f, r) * factorial(m + r - 1);
  std::vector<LemmaCheckResult> results;
  std::uint64_t stream = 0;
  for (const Eigen::Index N : N_grid) {
    Eigen::VectorXd v(trials);
    for (Eigen::Index t = 0; t < trials; ++t) {
      const Trajectory traj = simulate_generator(gen, noise, N, derive_seed(seed, stream++));
      const double gap = infinite_horizon_loss(pred, mode, gen, traj).value -
                         empirical_loss(pred, mode, traj).value;
      v(t) = std::pow(std::abs(gap), r);
    }
    const MomentStat stat = iid_mean(v);
    LemmaCheckResult res;
    res.lemma_id = "stationary_vs_rollout_gap";
    res.trials = trials;
    res.r = r;
    res.N = N;
    res.observed = stat.mean;
    res.se = stat.se;
    res.bound = scale / std::sqrt(static_cast<double>(N));
    results.push_back(finish(res));
  }
  return results;
}

LemmaCheckResult check_L_minus_V_moments(const StateSpaceSystem& pred, WMode mode,
                                         const Generator& gen, const NoiseSpec& noise, int r,
                                         Eigen::Index N, Eigen::Index trials,
                                         std::uint64_t seed) {
  if (r != 2 && r != 4) throw ConfigError("loss-gap moment check supports r in {2, 4}");
  if (trials < 2) throw ConfigError("loss-gap moment check needs at least 2 trials");
  const BoundConstants c = compute_constants(pred, mode, gen, noise);
  const ResolvedNoise rnoise = resolve_noise(noise);
  const double L = generalization_loss(pred, mode, gen, rnoise.Q_effective).value;
  Eigen::VectorXd v(trials);
  for (Eigen::Index t = 0; t < trials; ++t) {
    const Trajectory traj = simulate_generator(gen, noise, N, derive_seed(seed, t));
    v(t) = std::pow(L - infinite_horizon_loss(pred, mode, gen, traj).value, r);
  }
  const MomentStat stat = iid_mean(v);
  const int m = gen.n_y + gen.n_u;
  LemmaCheckResult res;
  res.lemma_id = "loss_gap_moment";
  res.trials = trials;
  res.r = r;
  res.N = N;
  res.observed = stat.mean;
  res.se = stat.se;
  res.bound = std::pow(static_cast<double>(gen.n_y), r) / static_cast<double>(N) *
              sigma_moment_bound(noise, m, r) * 4.0 * (r - 1) * std::pow(c.G_e, 2 * r);
  return finish(res);
}

double mgf_lambda_threshold(const Dims& dims, double mu_max, double G_e) {
  if (!(mu_max > 0.0) || !(G_e > 0.0)) throw ConfigError("mgf threshold needs positive inputs");
  return 1.0 / (3.0 * (dims.m() + 1) * dims.n_y * mu_max * G_e * G_e);
}

double mgf_bound_value(double lambda, Eigen::Index N, const Dims& dims, double mu_max,
                       double G_e) {
  const double a = 3.0 * lambda * dims.n_y * mu_max * G_e * G_e;
  const double denom = 1.0 - (dims.m() + 1) * a;
  if (!(denom > 0.0)) {
    throw InadmissibleRateError("mgf bound undefined: 1 - 3(m+1) lambda n_y mu_max Ge^2 = " +
                                std::to_string(denom));
  }
  return 1.0 + (2.0 / static_cast<double>(N)) * factorial(dims.m() + 1) * a * a / denom;
}

LemmaCheckResult check_mgf_bound(const StateSpaceSystem& pred, WMode mode, const Generator& gen,
                                 const NoiseSpec& noise, double lambda, Eigen::Index N,
                                 Eigen::Index trials, std::uint64_t seed) {
  if (noise.kind != NoiseKind::gaussian) {
    throw ConfigError("mgf check applies to gaussian innovations");
  }
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be nonnegative");
  if (trials < 2) throw ConfigError("mgf check needs at least 2 trials");
  const BoundConstants c = compute_constants(pred, mode, gen, noise);
  const Dims dims{gen.n_y, gen.n_u};
  const double L = generalization_loss(pred, mode, gen, noise.Q_e).value;
  Eigen::VectorXd v(trials);
  for (Eigen::Index t = 0; t < trials; ++t) {
    const Trajectory traj = simulate_generator(gen, noise, N, derive_seed(seed, t));
    v(t) = std::exp(lambda * (L - infinite_horizon_loss(pred, mode, gen, traj).value));
  }
  const MomentStat stat = iid_mean(v);
  LemmaCheckResult res;
  res.lemma_id = "loss_gap_mgf";
  res.trials = trials;
  res.N = N;
  res.lambda = lambda;
  res.observed = stat.mean;
  res.se = stat.se;
  res.bound = mgf_bound_value(lambda, N, dims, c.mu_max, c.G_e);
  std::vector<double> sorted(v.data(), v.data() + v.size());
  std::sort(sorted.begin(), sorted.end());
  const Eigen::Index keep = std::max<Eigen::Index>(
      1, trials - static_cast<Eigen::Index>(std::floor(0.001 * static_cast<double>(trials))));
  res.observed_trimmed =
      std::accumulate(sorted.begin(), sorted.begin() + keep, 0.0) / static_cast<double>(keep);
  return finish(res);
}

CoverageResult check_coverage(Theorem theorem, const Generator& gen, const NoiseSpec& noise,
                              Eigen::Index N, double delta, const PriorCloud& cloud,
                              const CoverageOptions& opts) {
  if (opts.replications < 100) throw ConfigError("coverage needs at least 100 replications");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must be in (0, 1)");
  if (cloud.consts.empty()) throw ConfigError("coverage needs a nonempty prior cloud");
  validate(gen);

  const Dims dims{gen.n_y, gen.n_u};
  std::vector<BoundConstants> consts = cloud.consts;
  SupInfo sup = sup_info_of(cloud);
  if (opts.corrupt_Ge != 1.0) {
    for (BoundConstants& c : consts) c.G_e *= opts.corrupt_Ge;
    sup.sup_Ge *= opts.corrupt_Ge;
  }
  const BoundConstants& g0 = consts.front();

  double lambda = opts.lambda;
  if (theorem == Theorem::thm1_unbounded) {
    sup.lambda_max =
        lambda_max_unbounded(sup.sup_Gf, sup.sup_Ge, dims, g0.mu_max, g0.G_bar_gen);
    if (lambda <= 0.0) lambda = 0.5 * sup.lambda_max;
  } else if (lambda <= 0.0) {
    lambda = theorem == Theorem::thm2_bounded
                 ? lambda_schedule(N, schedule_sup_term(consts, cloud.safety))
                 : std::sqrt(static_cast<double>(N));
  }

  PsiEstimate psi_fixed;
  if (theorem == Theorem::thm1_unbounded) {
    psi_fixed = psi_unbounded(lambda, N, consts, dims, g0.mu_max);
  }

  const ResolvedNoise rnoise = resolve_noise(noise);

  Eigen::Index init_row = 0;
  cloud.Gf.minCoeff(&init_row);
  const PredictorParams init{cloud.thetas.row(init_row).transpose(), cloud.mode};

  const Eigen::Index n_prior = cloud.thetas.rows();
  std::vector<StateSpaceSystem> prior_preds;
  prior_preds.reserve(static_cast<std::size_t>(n_prior));
  for (Eigen::Index i = 0; i < n_prior; ++i) {
    prior_preds.push_back(make_predictor({cloud.thetas.row(i).transpose(), cloud.mode}));
  }

  MhOptions mh_opts;
  mh_opts.thinning = opts.gibbs_thin;

  CoverageResult out;
  out.lambda = lambda;
  out.replications = opts.replications;
  for (Eigen::Index rep = 0; rep < opts.replications; ++rep) {
    const Trajectory traj =
        simulate_generator(gen, noise, N, derive_seed(opts.seed, 1000 + rep));
    Eigen::VectorXd prior_losses(n_prior);
    for (Eigen::Index i = 0; i < n_prior; ++i) {
      prior_losses(i) = empirical_loss(prior_preds[i], cloud.mode, traj).value;
    }
    const LogZEstimate lz = estimate_log_z(prior_losses, lambda);
    const LogDensity target = make_log_gibbs(cloud.mode, opts.constraint, lambda, traj);
    const Chain gibbs = mh_sample(target, init, opts.gibbs_steps, opts.proposal_scale,
                                  derive_seed(opts.seed, 500000 + rep), mh_opts);
    const Eigen::Index n_g = gibbs.samples.rows();
    Eigen::VectorXd emp(n_g);
    Eigen::VectorXd stat(n_g);
    for (Eigen::Index j = 0; j < n_g; ++j) {
      const StateSpaceSystem p = make_predictor({gibbs.samples.row(j).transpose(), cloud.mode});
      emp(j) = empirical_loss(p, cloud.mode, traj).value;
      stat(j) = generalization_loss(p, cloud.mode, gen, rnoise.Q_effective).value;
    }
    const KlEstimate kl = kl_from_gibbs_chain(emp, lambda, lz);
    BoundReport report;
    switch (theorem) {
      case Theorem::thm1_unbounded:
        report = r_N_unbounded(lambda, N, delta, kl, psi_fixed, sup);
        break;
      case Theorem::thm2_bounded:
        report = r_N_bounded(lambda, N, delta, kl, consts, sup);
        break;
      case Theorem::thm3_bounded_alt:
        report = r_N_bounded_alt(lambda, N, delta, kl, consts, sup);
        break;
    }
    if (stat.mean() <= emp.mean() + report.r_N) out.successes += 1;
    if (rep == 0) out.first_report = report;
  }
  out.fraction = static_cast<double>(out.successes) / static_cast<double>(out.replications);
  out.se = std::sqrt(out.fraction * (1.0 - out.fraction) /
                     static_cast<double>(out.replications));
  out.required = 1.0 - 2.0 * delta - 3.0 * out.se;
  out.pass = out.fraction >= out.required;
  return out;
}

}  // namespace pacbound
