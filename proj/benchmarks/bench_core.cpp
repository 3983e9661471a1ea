#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "pacbound/bounds.hpp"
#include "pacbound/constants.hpp"
#include "pacbound/linalg.hpp"
#include "pacbound/loss.hpp"
#include "pacbound/posterior.hpp"
#include "pacbound/reference.hpp"
#include "pacbound/rng.hpp"
#include "pacbound/system.hpp"

namespace {

using namespace pacbound;

StateSpaceSystem fixture_predictor() {
  Eigen::VectorXd theta(9);
  theta << 0.2, -0.1, 0.05, 0.3, 0.5, -0.25, 0.4, 0.15, 0.6;
  return make_predictor(PredictorParams{theta, WMode::u_only});
}

const Trajectory& fixture_trajectory(Eigen::Index n) {
  static Trajectory t10k =
      simulate_generator(reference_generator(), reference_noise_gaussian(), 10000, 7);
  static Trajectory t50 =
      simulate_generator(reference_generator(), reference_noise_gaussian(), 50, 7);
  return n == 50 ? t50 : t10k;
}

std::vector<BoundConstants> fixture_cloud(std::size_t n) {
  const BoundConstants base = compute_constants(fixture_predictor(), WMode::u_only,
                                                reference_generator(),
                                                reference_noise_bounded());
  return std::vector<BoundConstants>(n, base);
}

void bm_lyapunov_solve_2x2(benchmark::State& state) {
  const Generator gen = reference_generator();
  const Eigen::MatrixXd Q =
      gen.sys.B * reference_Q_e() * gen.sys.B.transpose();
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_discrete_lyapunov(gen.sys.A, Q));
  }
}
BENCHMARK(bm_lyapunov_solve_2x2);

void bm_lyapunov_solve_8x8(benchmark::State& state) {
  Rng rng(11);
  Eigen::MatrixXd A(8, 8);
  for (Eigen::Index i = 0; i < 64; ++i) A(i / 8, i % 8) = 0.3 * rng.normal();
  A *= 0.8 / spectral_radius(A);
  const Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(8, 8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_discrete_lyapunov(A, Q));
  }
}
BENCHMARK(bm_lyapunov_solve_8x8);

void bm_rollout_loss_10k(benchmark::State& state) {
  const StateSpaceSystem pred = fixture_predictor();
  const Trajectory& traj = fixture_trajectory(10000);
  for (auto _ : state) {
    benchmark::DoNotOptimize(empirical_loss(pred, WMode::u_only, traj));
  }
  state.SetItemsProcessed(state.iterations() * traj.length());
}
BENCHMARK(bm_rollout_loss_10k);

void bm_stationary_loss_50(benchmark::State& state) {
  const StateSpaceSystem pred = fixture_predictor();
  const Generator gen = reference_generator();
  const Trajectory& traj = fixture_trajectory(50);
  for (auto _ : state) {
    benchmark::DoNotOptimize(infinite_horizon_loss(pred, WMode::u_only, gen, traj));
  }
}
BENCHMARK(bm_stationary_loss_50);

void bm_generalization_loss(benchmark::State& state) {
  const StateSpaceSystem pred = fixture_predictor();
  const Generator gen = reference_generator();
  const Eigen::MatrixXd Q = reference_Q_e();
  for (auto _ : state) {
    benchmark::DoNotOptimize(generalization_loss(pred, WMode::u_only, gen, Q));
  }
}
BENCHMARK(bm_generalization_loss);

void bm_l1_norm_weighted(benchmark::State& state) {
  const StateSpaceSystem pred = fixture_predictor();
  for (auto _ : state) {
    benchmark::DoNotOptimize(l1_system_norm_weighted(pred));
  }
}
BENCHMARK(bm_l1_norm_weighted);

void bm_compute_constants(benchmark::State& state) {
  const StateSpaceSystem pred = fixture_predictor();
  const Generator gen = reference_generator();
  const NoiseSpec noise = reference_noise_bounded();
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_constants(pred, WMode::u_only, gen, noise));
  }
}
BENCHMARK(bm_compute_constants);

void bm_psi_unbounded_cloud(benchmark::State& state) {
  const std::vector<BoundConstants> cloud = fixture_cloud(2400);
  const Dims dims{1, 1};
  const double mu_max = cloud.front().mu_max;
  for (auto _ : state) {
    benchmark::DoNotOptimize(psi_unbounded(1e-3, 1000, cloud, dims, mu_max));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(cloud.size()));
}
BENCHMARK(bm_psi_unbounded_cloud);

void bm_psi_bounded_cloud(benchmark::State& state) {
  const std::vector<BoundConstants> cloud = fixture_cloud(2400);
  const double G_gen1 = cloud.front().G_gen1;
  const double G_gen2 = cloud.front().G_gen2;
  for (auto _ : state) {
    benchmark::DoNotOptimize(psi_bounded(0.02, 1000, cloud, G_gen1, G_gen2));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(cloud.size()));
}
BENCHMARK(bm_psi_bounded_cloud);

void bm_prior_chain_steps(benchmark::State& state) {
  const LogDensity prior = make_log_prior(WMode::u_only, ClassConstraint{});
  const PredictorParams init{Eigen::VectorXd::Zero(9), WMode::u_only};
  std::uint64_t seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mh_sample(prior, init, 2000, 0.1, seed++));
  }
  state.SetItemsProcessed(state.iterations() * 2000);
}
BENCHMARK(bm_prior_chain_steps);

}  // namespace

BENCHMARK_MAIN();
