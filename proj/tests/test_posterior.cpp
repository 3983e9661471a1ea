#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "pacbound/constants.hpp"
#include "pacbound/errors.hpp"
#include "pacbound/posterior.hpp"
#include "pacbound/reference.hpp"
#include "pacbound/rng.hpp"

using namespace pacbound;

namespace {

Eigen::VectorXd fixture_theta() {
  Eigen::VectorXd t(9);
  t << 0.2, -0.1, 0.05, 0.3, 0.5, -0.25, 0.4, 0.15, 0.6;
  return t;
}

}  // namespace

TEST_CASE("parameter packing") {
  CHECK(theta_dim(WMode::u_only) == 9);
  CHECK(theta_dim(WMode::yu) == 11);

  PredictorParams p;
  p.mode = WMode::u_only;
  p.theta.resize(9);
  p.theta << 1, 2, 3, 4, 5, 6, 7, 8, 9;
  const StateSpaceSystem s = make_predictor(p);
  CHECK(s.A(0, 0) == 1.0);
  CHECK(s.A(0, 1) == 2.0);
  CHECK(s.A(1, 0) == 3.0);
  CHECK(s.A(1, 1) == 4.0);
  CHECK(s.B(0, 0) == 5.0);
  CHECK(s.B(1, 0) == 6.0);
  CHECK(s.C(0, 0) == 7.0);
  CHECK(s.C(0, 1) == 8.0);
  CHECK(s.D(0, 0) == 9.0);

  PredictorParams q;
  q.mode = WMode::yu;
  q.theta.resize(11);
  q.theta << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11;
  const StateSpaceSystem t = make_predictor(q);
  CHECK(t.B.cols() == 2);
  // output column first, then input; feedthrough never reads the output
  CHECK(t.B(0, 0) == 10.0);
  CHECK(t.B(1, 0) == 11.0);
  CHECK(t.B(0, 1) == 5.0);
  CHECK(t.B(1, 1) == 6.0);
  CHECK(t.D(0, 0) == 0.0);
  CHECK(t.D(0, 1) == 9.0);

  PredictorParams bad;
  bad.mode = WMode::u_only;
  bad.theta = Eigen::VectorXd::Zero(11);
  CHECK_THROWS_AS(make_predictor(bad), DimensionError);
}

TEST_CASE("class membership") {
  const ClassConstraint cons;
  PredictorParams p;
  p.mode = WMode::u_only;
  p.theta = Eigen::VectorXd::Zero(9);
  CHECK(in_class(p, cons));

  p.theta = fixture_theta();
  CHECK(in_class(p, cons));

  // unstable predictor dynamics
  p.theta(0) = 1.2;
  p.theta(1) = 0.0;
  p.theta(2) = 0.0;
  CHECK_FALSE(in_class(p, cons));

  // gain bound violated: static system with product gain 90
  p.theta.setZero();
  p.theta(4) = 3.0;
  p.theta(6) = 3.0;
  const double gf = predictor_gain_bound(make_predictor(p));
  CHECK(gf > cons.Gf_max);
  CHECK_FALSE(in_class(p, cons));

  // parameter box violated
  p.theta.setZero();
  p.theta(8) = 1000.0;
  CHECK_FALSE(in_class(p, cons));
}

TEST_CASE("log prior is the negative gain bound on the class") {
  const ClassConstraint cons;
  PredictorParams p;
  p.mode = WMode::u_only;
  p.theta = fixture_theta();
  const double expect = -predictor_gain_bound(make_predictor(p));
  CHECK(log_prior_unnorm(p, cons) == doctest::Approx(expect).epsilon(1e-14));

  const LogDensity prior = make_log_prior(WMode::u_only, cons);
  CHECK(prior(p.theta) == doctest::Approx(expect).epsilon(1e-14));

  p.theta(0) = 1.2;
  p.theta(1) = 0.0;
  p.theta(2) = 0.0;
  CHECK(log_prior_unnorm(p, cons) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("gibbs log density tilts the prior by the empirical loss") {
  const Generator gen = reference_generator();
  const Trajectory traj = simulate_generator(gen, reference_noise_gaussian(), 100, 6);
  const ClassConstraint cons;
  PredictorParams p;
  p.mode = WMode::u_only;
  p.theta = fixture_theta();
  const double lambda = 2.5;
  const double loss = empirical_loss(make_predictor(p), WMode::u_only, traj).value;
  const double expect = log_prior_unnorm(p, cons) - lambda * loss;
  CHECK(log_gibbs_unnorm(p, cons, lambda, traj) == doctest::Approx(expect).epsilon(1e-13));

  const LogDensity gibbs = make_log_gibbs(WMode::u_only, cons, lambda, traj);
  CHECK(gibbs(p.theta) == doctest::Approx(expect).epsilon(1e-13));
}

TEST_CASE("mh_sample determinism and bookkeeping") {
  const LogDensity target = [](const Eigen::VectorXd& x) { return -0.5 * x.squaredNorm(); };
  PredictorParams init;
  init.mode = WMode::u_only;
  init.theta = Eigen::VectorXd::Zero(9);

  MhOptions opts;
  opts.thinning = 4;
  const Chain a = mh_sample(target, init, 1000, 0.5, 42, opts);
  const Chain b = mh_sample(target, init, 1000, 0.5, 42, opts);
  const Chain c = mh_sample(target, init, 1000, 0.5, 43, opts);
  CHECK((a.samples - b.samples).norm() == 0.0);
  CHECK((a.log_densities - b.log_densities).norm() == 0.0);
  CHECK((a.samples - c.samples).norm() != 0.0);

  // kept draws: ceil((steps - burn)/thin) with default burn = steps/5
  CHECK(a.samples.rows() == 200);
  CHECK(a.burn_in == 200);
  CHECK(a.thinning == 4);
  CHECK(a.seed == 42);
  CHECK(a.acceptance_rate > 0.05);
  CHECK(a.acceptance_rate < 0.95);
}

TEST_CASE("mh_sample reproduces a gaussian target") {
  const LogDensity target = [](const Eigen::VectorXd& x) { return -0.5 * x.squaredNorm(); };
  PredictorParams init;
  init.mode = WMode::u_only;
  init.theta = Eigen::VectorXd::Zero(9);
  MhOptions opts;
  opts.thinning = 4;
  const Chain chain = mh_sample(target, init, 60000, 0.5, 7, opts);
  CHECK(chain.acceptance_rate > 0.15);
  CHECK(chain.acceptance_rate < 0.5);
  for (int j = 0; j < 9; ++j) {
    const MeanSe m = expectation_over(chain.samples.col(j));
    CHECK(std::abs(m.mean) <= 5.0 * m.se);
    const double var = (chain.samples.col(j).array() - m.mean).square().mean();
    CHECK(var == doctest::Approx(1.0).epsilon(0.15));
  }
}

TEST_CASE("mh_sample rejects a zero-density start") {
  const ClassConstraint cons;
  const LogDensity prior = make_log_prior(WMode::u_only, cons);
  PredictorParams init;
  init.mode = WMode::u_only;
  init.theta = Eigen::VectorXd::Zero(9);
  init.theta(0) = 1.5;  // unstable dynamics, outside the class
  CHECK_THROWS_AS(mh_sample(prior, init, 1000, 0.5, 1), ConfigError);
}

TEST_CASE("prior chain stays inside the class") {
  const ClassConstraint cons;
  const LogDensity prior = make_log_prior(WMode::u_only, cons);
  PredictorParams init;
  init.mode = WMode::u_only;
  init.theta = Eigen::VectorXd::Zero(9);
  MhOptions opts;
  opts.thinning = 10;
  const Chain chain = mh_sample(prior, init, 4000, 0.5, 3, opts);
  for (Eigen::Index i = 0; i < chain.samples.rows(); ++i) {
    PredictorParams p{chain.samples.row(i).transpose(), WMode::u_only};
    CHECK(in_class(p, cons));
  }
}

TEST_CASE("expectation_over on independent and correlated sequences") {
  Eigen::VectorXd small(4);
  small << 1.0, 2.0, 3.0, 4.0;
  const MeanSe ms = expectation_over(small);
  CHECK(ms.mean == doctest::Approx(2.5).epsilon(1e-14));

  const Eigen::Index n = 20000;
  Rng rng(5);
  Eigen::VectorXd iid(n), ar(n);
  double prev = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    iid(i) = rng.normal();
    prev = 0.9 * prev + rng.normal();
    ar(i) = prev;
  }
  const MeanSe mi = expectation_over(iid);
  const double plain_se = 1.0 / std::sqrt(static_cast<double>(n));
  CHECK(mi.se == doctest::Approx(plain_se).epsilon(0.2));
  CHECK(mi.ess == doctest::Approx(static_cast<double>(n)).epsilon(0.25));

  // AR(0.9): effective sample size shrinks by about (1-phi)/(1+phi) = 1/19
  const MeanSe ma = expectation_over(ar);
  CHECK(ma.ess < n / 6.0);
  CHECK(ma.se > 2.5 * plain_se);

  CHECK_THROWS_AS(expectation_over(Eigen::VectorXd()), ConfigError);
}

TEST_CASE("evaluate_over applies the functional rowwise") {
  Chain chain;
  chain.mode = WMode::u_only;
  chain.samples.resize(2, 9);
  chain.samples.row(0) = Eigen::VectorXd::Zero(9).transpose();
  chain.samples.row(1) = fixture_theta().transpose();
  const Eigen::VectorXd v = evaluate_over(
      chain, [](const PredictorParams& p) { return p.theta.sum(); });
  CHECK(v(0) == doctest::Approx(0.0));
  CHECK(v(1) == doctest::Approx(fixture_theta().sum()).epsilon(1e-14));
}

TEST_CASE("log Z estimate worked example") {
  Eigen::VectorXd losses(2);
  losses << 1.0, 2.0;
  const LogZEstimate z = estimate_log_z(losses, 1.0);
  CHECK(z.log_z ==
        doctest::Approx(std::log(0.5 * (std::exp(-1.0) + std::exp(-2.0)))).epsilon(1e-13));

  CHECK(estimate_log_z(losses, 0.0).log_z == doctest::Approx(0.0).epsilon(1e-15));

  // huge rates must not underflow: log Z ~ -lambda * min loss
  const LogZEstimate big = estimate_log_z(losses, 5000.0);
  CHECK(std::isfinite(big.log_z));
  CHECK(big.log_z == doctest::Approx(-5000.0 - std::log(2.0)).epsilon(1e-10));
}

TEST_CASE("KL identity from a gibbs chain") {
  Eigen::VectorXd gibbs_losses(2);
  gibbs_losses << 0.5, 0.7;
  LogZEstimate z;
  z.log_z = -1.0;
  z.se = 0.1;
  const KlEstimate kl = kl_from_gibbs_chain(gibbs_losses, 2.0, z);
  // KL = -lambda E_rho[loss] - log Z = -2 * 0.6 + 1 = -0.2, clamped at zero
  CHECK(kl.raw == doctest::Approx(-0.2).epsilon(1e-13));
  CHECK(kl.value == 0.0);
  CHECK(kl.mean_loss == doctest::Approx(0.6).epsilon(1e-14));
}

TEST_CASE("KL by reweighting matches the two-point closed form") {
  Eigen::VectorXd losses(2);
  losses << 0.0, 1.0;
  const double lambda = 1.5;
  const double w1 = std::exp(-lambda);
  const double mean_loss = w1 / (1.0 + w1);
  const double log_z = std::log(0.5 * (1.0 + w1));
  const double expect = -lambda * mean_loss - log_z;
  const KlEstimate kl = kl_by_reweighting(losses, lambda);
  CHECK(kl.raw == doctest::Approx(expect).epsilon(1e-12));
  CHECK(kl.value == doctest::Approx(expect).epsilon(1e-12));
  CHECK(kl.mean_loss == doctest::Approx(mean_loss).epsilon(1e-12));
  CHECK(kl.value >= 0.0);

  CHECK(kl_by_reweighting(losses, 0.0).value == 0.0);
}
