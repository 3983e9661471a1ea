#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "pacbound/constants.hpp"
#include "pacbound/errors.hpp"
#include "pacbound/linalg.hpp"
#include "pacbound/posterior.hpp"
#include "pacbound/reference.hpp"
#include "pacbound/rng.hpp"

using namespace pacbound;

namespace {

StateSpaceSystem fixture_predictor() {
  PredictorParams p;
  p.mode = WMode::u_only;
  p.theta.resize(9);
  p.theta << 0.2, -0.1, 0.05, 0.3, 0.5, -0.25, 0.4, 0.15, 0.6;
  return make_predictor(p);
}

}  // namespace

TEST_CASE("power_bound worked examples") {
  Eigen::MatrixXd A(1, 1);
  A << 0.5;
  PowerBound pb = power_bound(A);
  CHECK(pb.gamma_hat == doctest::Approx(0.75).epsilon(1e-14));
  // M_hat carries a 1e-9 floor so the certificate is strict at k = 0
  CHECK(pb.M_hat == doctest::Approx(1.0).epsilon(1e-8));

  Eigen::MatrixXd Nl(2, 2);
  Nl << 0.0, 10.0, 0.0, 0.0;
  pb = power_bound(Nl);
  CHECK(pb.gamma_hat == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(pb.M_hat == doctest::Approx(20.0).epsilon(1e-12));

  pb = power_bound(Eigen::MatrixXd::Zero(2, 2));
  CHECK(pb.gamma_hat == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(pb.M_hat == doctest::Approx(1.0).epsilon(1e-8));

  Eigen::MatrixXd unstable(1, 1);
  unstable << 1.0;
  CHECK_THROWS_AS(power_bound(unstable), StabilityError);
}

TEST_CASE("power_bound certifies the matrix powers") {
  Rng rng(99);
  Eigen::MatrixXd A(3, 3);
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) A(i, j) = rng.normal();
  A *= 0.85 / spectral_radius(A);
  const PowerBound pb = power_bound(A);
  CHECK(pb.gamma_hat < 1.0);
  Eigen::MatrixXd Ak = Eigen::MatrixXd::Identity(3, 3);
  double g = 1.0;
  for (int k = 0; k <= 40; ++k) {
    CHECK(op_norm(Ak) <= pb.M_hat * g * (1.0 + 1e-12));
    Ak = Ak * A;
    g *= pb.gamma_hat;
  }
}

TEST_CASE("l1 norm hand values") {
  StateSpaceSystem sys;
  sys.A = Eigen::MatrixXd::Zero(2, 2);
  sys.B.resize(2, 1);
  sys.B << 1.0, 0.0;
  sys.C.resize(1, 2);
  sys.C << 2.0, 0.0;
  sys.D.resize(1, 1);
  sys.D << 3.0;
  // static part 3 plus the single impulse term ||C B|| = 2
  CHECK(l1_system_norm(sys) == doctest::Approx(5.0).epsilon(1e-9));
  // the k = 0 impulse term keeps weight 1, so the weighted norm coincides
  CHECK(l1_system_norm_weighted(sys) == doctest::Approx(5.0).epsilon(1e-9));

  // nilpotent shift: h1 = C B = 1 at weight 1, h2 = C A B = 2 at weight 2
  StateSpaceSystem shift;
  shift.A.resize(2, 2);
  shift.A << 0.0, 1.0, 0.0, 0.0;
  shift.B.resize(2, 1);
  shift.B << 0.0, 1.0;
  shift.C.resize(1, 2);
  shift.C << 2.0, 1.0;
  shift.D.resize(1, 1);
  shift.D << 3.0;
  CHECK(l1_system_norm(shift) == doctest::Approx(6.0).epsilon(1e-9));
  CHECK(l1_system_norm_weighted(shift) == doctest::Approx(8.0).epsilon(1e-9));

  StateSpaceSystem pole;
  pole.A.resize(1, 1);
  pole.A << 0.5;
  pole.B.resize(1, 1);
  pole.B << 1.0;
  pole.C.resize(1, 1);
  pole.C << 1.0;
  pole.D.resize(1, 1);
  pole.D << 0.0;
  // sum of 0.5^k = 2; the certified value may exceed it only by the tail slack
  const double l1 = l1_system_norm(pole);
  CHECK(l1 >= 2.0 - 1e-12);
  CHECK(l1 <= 2.0 + 1e-6);
  // sum of (k+1) 0.5^k = 4
  const double l1w = l1_system_norm_weighted(pole);
  CHECK(l1w >= 4.0 - 1e-12);
  CHECK(l1w <= 4.0 + 1e-6);
}

TEST_CASE("l1 norm is a similarity invariant") {
  const Generator gen = reference_generator();
  Eigen::MatrixXd T(2, 2);
  T << 2.0, 1.0, -0.5, 1.5;
  StateSpaceSystem sim;
  sim.A = T * gen.sys.A * T.inverse();
  sim.B = T * gen.sys.B;
  sim.C = gen.sys.C * T.inverse();
  sim.D = gen.sys.D;
  CHECK(l1_system_norm(sim) == doctest::Approx(l1_system_norm(gen.sys)).epsilon(1e-8));
}

TEST_CASE("generator scale constants") {
  const Generator gen = reference_generator();
  // frozen oracle value for ||D|| + sum ||C A^k K||
  CHECK(l1_system_norm(gen.sys) == doctest::Approx(2.0314131773587194).epsilon(1e-8));

  const BoundConstants c = compute_constants(fixture_predictor(), WMode::u_only, gen,
                                             reference_noise_gaussian());
  CHECK(c.l1_gen == doctest::Approx(2.0314131773587194).epsilon(1e-8));
  CHECK(c.mu_max == doctest::Approx(0.24965596788841515).epsilon(1e-12));
  CHECK(c.G_bar_gen == doctest::Approx(1.0302401777867092).epsilon(1e-8));
  CHECK(c.G_bar_gen == doctest::Approx(c.l1_gen * c.l1_gen * c.mu_max).epsilon(1e-12));

  // bounded-route constants are not defined for gaussian innovations
  CHECK(std::isnan(c.C_big));
  CHECK(std::isnan(c.G_gen1));
  CHECK(std::isnan(c.G_gen2));
}

TEST_CASE("bounded-route constants") {
  const Generator gen = reference_generator();
  const BoundConstants c = compute_constants(fixture_predictor(), WMode::u_only, gen,
                                             reference_noise_bounded());
  CHECK(c.C_big == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(c.G_gen1 == doctest::Approx(16.0).epsilon(1e-14));
  CHECK(c.G_gen2 == doctest::Approx(8.0 * c.l1_gen * c.l1_gen).epsilon(1e-12));
  CHECK(c.G_gen2 == doctest::Approx(33.0131).epsilon(1e-4));
  // pre-truncation covariance keeps the moment scale conservative
  CHECK(c.mu_max == doctest::Approx(0.24965596788841515).epsilon(1e-12));
}

TEST_CASE("error-system constants of the zero predictor") {
  const Generator gen = reference_generator();
  PredictorParams zero;
  zero.mode = WMode::u_only;
  zero.theta = Eigen::VectorXd::Zero(9);
  const BoundConstants c = compute_constants(make_predictor(zero), WMode::u_only, gen,
                                             reference_noise_gaussian());
  // zero predictor: the error system is the generator's y channel
  CHECK(c.G_e == doctest::Approx(2.027455276460441).epsilon(1e-8));
  CHECK(c.G_bar_f == 0.0);
  CHECK(c.G_e1 >= c.G_e);
}

TEST_CASE("predictor gain bound formula") {
  const StateSpaceSystem pred = fixture_predictor();
  const PowerBound pb = power_bound(pred.A);
  const double g = pb.gamma_hat, M = pb.M_hat;
  const double nB = op_norm(pred.B), nC = op_norm(pred.C), nD = op_norm(pred.D);
  const double expect = (1.0 + nD + M * nB * nC / (1.0 - g)) * M * nC * nB /
                        std::pow(1.0 - g, 1.5);
  CHECK(predictor_gain_bound(pred) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(compute_constants(pred, WMode::u_only, reference_generator(),
                          reference_noise_gaussian())
            .G_bar_f == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("error system reproduces the prediction error pathwise") {
  const Generator gen = reference_generator();
  const StateSpaceSystem pred = fixture_predictor();
  const StateSpaceSystem err_sys = build_error_system(pred, WMode::u_only, gen);
  CHECK(err_sys.n() == 4);
  CHECK(err_sys.n_w() == 2);
  CHECK(err_sys.p() == 1);

  // bounded trajectories replay from the zero state, so both the error
  // system and the generator-plus-predictor pair can be driven from zero
  // over burn-in plus kept innovations and compared pathwise
  const Trajectory traj = simulate_generator(gen, reference_noise_bounded(), 250, 13);
  Eigen::MatrixXd e_full(traj.e_burn.rows() + traj.e.rows(), 2);
  e_full << traj.e_burn, traj.e;
  const Eigen::MatrixXd err_from_sys = predict_rollout(err_sys, e_full);

  Trajectory full;
  full.e = e_full;
  replay(gen, Eigen::VectorXd::Zero(2), e_full, full.y, full.u);
  const Eigen::MatrixXd err_direct =
      full.y - predict_rollout(pred, build_w(WMode::u_only, full));
  CHECK((err_from_sys - err_direct).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("yu error system pathwise and feedthrough guard") {
  const Generator gen = reference_generator();
  PredictorParams p;
  p.mode = WMode::yu;
  p.theta.resize(11);
  p.theta << 0.2, -0.1, 0.05, 0.3, 0.5, -0.25, 0.4, 0.15, 0.6, 0.1, -0.05;
  const StateSpaceSystem pred = make_predictor(p);
  const StateSpaceSystem err_sys = build_error_system(pred, WMode::yu, gen);

  const Trajectory traj = simulate_generator(gen, reference_noise_bounded(), 250, 14);
  Eigen::MatrixXd e_full(traj.e_burn.rows() + traj.e.rows(), 2);
  e_full << traj.e_burn, traj.e;
  const Eigen::MatrixXd err_from_sys = predict_rollout(err_sys, e_full);

  Trajectory full;
  full.e = e_full;
  replay(gen, Eigen::VectorXd::Zero(2), e_full, full.y, full.u);
  const Eigen::MatrixXd err_direct =
      full.y - predict_rollout(pred, build_w(WMode::yu, full));
  CHECK((err_from_sys - err_direct).cwiseAbs().maxCoeff() <= 1e-10);

  // a predictor that reads the current output has no causal error system
  StateSpaceSystem acausal = pred;
  acausal.D(0, 0) = 0.3;
  CHECK_THROWS_AS(build_error_system(acausal, WMode::yu, gen), ConfigError);
}

TEST_CASE("unstable predictor dynamics are rejected") {
  PredictorParams p;
  p.mode = WMode::u_only;
  p.theta.resize(9);
  p.theta << 1.2, 0.0, 0.0, 0.3, 0.5, -0.25, 0.4, 0.15, 0.6;
  CHECK_THROWS_AS(compute_constants(make_predictor(p), WMode::u_only, reference_generator(),
                                    reference_noise_gaussian()),
                  StabilityError);
}
