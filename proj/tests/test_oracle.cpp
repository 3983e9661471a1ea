#include <doctest.h>

#include <cmath>

#include "pacbound/constants.hpp"
#include "pacbound/errors.hpp"
#include "pacbound/oracle.hpp"
#include "pacbound/posterior.hpp"
#include "pacbound/reference.hpp"

using namespace pacbound;

namespace {

const Dims kDims{1, 1};
const double kMu = 0.24965596788841515;

StateSpaceSystem fixture_predictor() {
  PredictorParams p;
  p.mode = WMode::u_only;
  p.theta.resize(9);
  p.theta << 0.2, -0.1, 0.05, 0.3, 0.5, -0.25, 0.4, 0.15, 0.6;
  return make_predictor(p);
}

// factorial of small nonnegative integers
double fact(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

}  // namespace

TEST_CASE("even moments of the innovation norm") {
  const auto res = check_even_moments(reference_noise_gaussian(), 3, 30000, 11);
  REQUIRE(res.size() == 3);
  for (int i = 0; i < 3; ++i) {
    const int r = i + 1;
    CHECK(res[i].r == doctest::Approx(static_cast<double>(r)));
    // sub-gaussian growth bound 2^r mu_max^r (m + r - 1)!
    const double bound = std::pow(2.0 * kMu, r) * fact(2 + r - 1);
    CHECK(res[i].bound == doctest::Approx(bound).epsilon(1e-12));
    CHECK(res[i].pass);
    CHECK(res[i].observed <= res[i].bound + 3.0 * res[i].se);
    CHECK(res[i].trials == 30000);
  }
  // r = 1 observed is tr(Q_e) = 0.302
  CHECK(res[0].observed == doctest::Approx(0.302).epsilon(0.05));

  CHECK_THROWS_AS(check_even_moments(reference_noise_gaussian(), 6, 1000, 1), ConfigError);
  CHECK_THROWS_AS(check_even_moments(reference_noise_gaussian(), 2, 1, 1), ConfigError);
}

TEST_CASE("truncated innovations satisfy the same moment growth") {
  const auto res = check_even_moments(reference_noise_bounded(), 2, 30000, 12);
  for (const auto& r : res) CHECK(r.pass);
}

TEST_CASE("outer-product moment bound") {
  for (int r : {2, 3}) {
    const LemmaCheckResult res =
        check_sigma_bound(reference_noise_gaussian(), kDims, r, 30000, 13);
    // sigma(r) = 3^r mu_max^r (m + r - 1)!
    CHECK(res.bound == doctest::Approx(std::pow(3.0 * kMu, r) * fact(r + 1)).epsilon(1e-12));
    CHECK(res.pass);
    CHECK(res.r == doctest::Approx(static_cast<double>(r)));
  }
  const LemmaCheckResult tr =
      check_sigma_bound(reference_noise_bounded(), kDims, 2, 30000, 14);
  CHECK(tr.pass);
  CHECK_THROWS_AS(check_sigma_bound(reference_noise_gaussian(), kDims, 5, 1000, 1), ConfigError);
}

TEST_CASE("infinite-horizon loss concentrates around the empirical loss") {
  const Generator gen = reference_generator();
  const StateSpaceSystem pred = fixture_predictor();
  const BoundConstants c =
      compute_constants(pred, WMode::u_only, gen, reference_noise_gaussian());
  const std::vector<Eigen::Index> grid = {10, 100};
  const auto res = check_vn_moment_decay(pred, WMode::u_only, gen, reference_noise_gaussian(),
                                         1, grid, 400, 15);
  REQUIRE(res.size() == 2);
  for (int i = 0; i < 2; ++i) {
    // (m + r - 1)!/sqrt(N) (4 Gbar_gen Gbar_f)^r with m = 2, r = 1
    const double bound =
        2.0 / std::sqrt(static_cast<double>(grid[i])) * 4.0 * c.G_bar_gen * c.G_bar_f;
    CHECK(res[i].bound == doctest::Approx(bound).epsilon(1e-10));
    CHECK(res[i].N == grid[i]);
    CHECK(res[i].pass);
  }
  CHECK(res[1].bound == doctest::Approx(res[0].bound / std::sqrt(10.0)).epsilon(1e-12));

  CHECK_THROWS_AS(check_vn_moment_decay(pred, WMode::u_only, gen, reference_noise_bounded(), 1,
                                        grid, 400, 1),
                  ConfigError);
}

TEST_CASE("stationary-vs-finite loss gap moment bound") {
  const Generator gen = reference_generator();
  const StateSpaceSystem pred = fixture_predictor();
  const BoundConstants c =
      compute_constants(pred, WMode::u_only, gen, reference_noise_gaussian());
  const LemmaCheckResult res = check_L_minus_V_moments(pred, WMode::u_only, gen,
                                                       reference_noise_gaussian(), 2, 500, 400,
                                                       16);
  // n_y^r / N sigma(r) 4 (r - 1) Ge^{2r} with r = 2
  const double sigma2 = std::pow(3.0 * kMu, 2) * fact(3);
  const double bound = sigma2 / 500.0 * 4.0 * std::pow(c.G_e, 4.0);
  CHECK(res.bound == doctest::Approx(bound).epsilon(1e-10));
  CHECK(res.pass);
  CHECK_THROWS_AS(check_L_minus_V_moments(pred, WMode::u_only, gen, reference_noise_gaussian(),
                                          3, 500, 400, 1),
                  ConfigError);
}

TEST_CASE("mgf rate threshold") {
  const double Ge = 2.5;
  const double thr = mgf_lambda_threshold(kDims, kMu, Ge);
  // 1/(3 (m + 1) n_y mu_max Ge^2) with m = 2
  CHECK(thr == doctest::Approx(1.0 / (9.0 * kMu * Ge * Ge)).epsilon(1e-13));
  CHECK_NOTHROW(mgf_bound_value(0.5 * thr, 100, kDims, kMu, Ge));
  CHECK_THROWS_AS(mgf_bound_value(1.01 * thr, 100, kDims, kMu, Ge), InadmissibleRateError);
  CHECK_THROWS_AS(mgf_lambda_threshold(kDims, 0.0, Ge), ConfigError);
}

TEST_CASE("mgf bound holds at half the threshold") {
  const Generator gen = reference_generator();
  const StateSpaceSystem pred = fixture_predictor();
  const BoundConstants c =
      compute_constants(pred, WMode::u_only, gen, reference_noise_gaussian());
  const double lambda = 0.5 * mgf_lambda_threshold(kDims, kMu, c.G_e);
  // 2000 trials so the 0.1 percent trim actually removes draws
  const LemmaCheckResult res = check_mgf_bound(pred, WMode::u_only, gen,
                                               reference_noise_gaussian(), lambda, 200, 2000, 17);
  CHECK(res.pass);
  CHECK(res.lambda == doctest::Approx(lambda));
  CHECK(res.observed_trimmed <= res.observed);
  CHECK(res.bound == doctest::Approx(mgf_bound_value(lambda, 200, kDims, kMu, c.G_e))
                         .epsilon(1e-12));

  CHECK_THROWS_AS(check_mgf_bound(pred, WMode::u_only, gen, reference_noise_bounded(), lambda,
                                  200, 400, 1),
                  ConfigError);
}

TEST_CASE("coverage guard rails") {
  Chain chain;
  chain.mode = WMode::u_only;
  chain.samples = Eigen::MatrixXd::Zero(1, 9);
  const PriorCloud cloud = make_prior_cloud(chain, reference_generator(),
                                            reference_noise_gaussian(), 1.1);
  CoverageOptions opts;
  opts.replications = 50;
  CHECK_THROWS_AS(check_coverage(Theorem::thm1_unbounded, reference_generator(),
                                 reference_noise_gaussian(), 100, 0.05, cloud, opts),
                  ConfigError);
}
