#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include "pacbound/errors.hpp"
#include "pacbound/posterior.hpp"
#include "pacbound/reference.hpp"
#include "pacbound/serialize.hpp"

using namespace pacbound;

namespace {

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("format_double round-trips") {
  const double values[] = {0.0,          1.0,       -1.0, 0.1, 1.0 / 3.0, 3.141592653589793,
                           1e-17,        -2.5e300,  1e300, 0.22688251067499854,
                           5e-324,       1.0 + 1e-15};
  for (double x : values) {
    const std::string s = format_double(x);
    CHECK(std::strtod(s.c_str(), nullptr) == x);
  }
  CHECK(format_double(1.0) == "1");
}

TEST_CASE("fnv1a digest vectors") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("ab") != fnv1a_hex("ba"));
}

TEST_CASE("system json round-trip") {
  const Generator gen = reference_generator();
  const StateSpaceSystem back = system_from_json(system_to_json(gen.sys));
  CHECK((back.A - gen.sys.A).norm() == 0.0);
  CHECK((back.B - gen.sys.B).norm() == 0.0);
  CHECK((back.C - gen.sys.C).norm() == 0.0);
  CHECK((back.D - gen.sys.D).norm() == 0.0);

  // the innovation gain is stored under "K"
  CHECK(system_to_json(gen.sys).find("\"K\"") != std::string::npos);

  CHECK_THROWS_AS(
      system_from_json(R"({"A":[[0.5]],"K":[[1.0]],"C":[[1.0]],"D":[[0.0]],"X":1})"),
      ConfigError);
  CHECK_THROWS_AS(system_from_json(R"({"A":[[0.5]],"K":[[1.0]],"C":[[1.0]]})"), ConfigError);
}

TEST_CASE("generator json round-trip") {
  const Generator gen = reference_generator();
  const Generator back = generator_from_json(generator_to_json(gen));
  CHECK(back.n_y == 1);
  CHECK(back.n_u == 1);
  CHECK((back.sys.A - gen.sys.A).norm() == 0.0);
  CHECK((back.sys.B - gen.sys.B).norm() == 0.0);
}

TEST_CASE("constants json names every scale") {
  BoundConstants c;
  c.G_e = 2.0;
  c.G_bar_f = 3.0;
  const std::string j = constants_to_json(c);
  for (const char* key : {"\"G_e\"", "\"G_bar_f\"", "\"G_bar_gen\"", "\"l1_gen\"", "\"mu_max\"",
                          "\"G_gen1\"", "\"G_gen2\"", "\"C_big\""}) {
    CHECK(j.find(key) != std::string::npos);
  }
}

TEST_CASE("predictor input mode names") {
  CHECK(std::string(to_string(WMode::u_only)) == "u_only");
  CHECK(std::string(to_string(WMode::yu)) == "yu");
  CHECK(wmode_from_string("u_only") == WMode::u_only);
  CHECK(wmode_from_string("yu") == WMode::yu);
  CHECK_THROWS_AS(wmode_from_string("both"), ConfigError);
}

TEST_CASE("trajectory csv schema") {
  const Generator gen = reference_generator();
  const Trajectory traj = simulate_generator(gen, reference_noise_bounded(), 40, 9);
  std::ostringstream os;
  write_trajectory_csv(os, traj, 1, 1, "deadbeef");
  const auto lines = lines_of(os.str());

  REQUIRE(lines.size() == 3 + 1 + 16 + 40);
  CHECK(lines[0] == "# config=deadbeef seed=9");
  CHECK(lines[1].rfind("# x0=", 0) == 0);
  CHECK(lines[2].rfind("# q_innov=", 0) == 0);
  CHECK(lines[3] == "t,y1,u1,e1,e2");

  // burn-in innovations ride along at negative t with nan outputs
  CHECK(lines[4].rfind("-16,nan,nan,", 0) == 0);
  CHECK(lines[19].rfind("-1,nan,nan,", 0) == 0);
  CHECK(lines[20].rfind("0,", 0) == 0);

  // first kept row reproduces the stored values exactly
  const std::string expect = "0," + format_double(traj.y(0, 0)) + "," +
                             format_double(traj.u(0, 0)) + "," + format_double(traj.e(0, 0)) +
                             "," + format_double(traj.e(0, 1));
  CHECK(lines[20] == expect);

  CHECK_THROWS_AS(write_trajectory_csv(os, traj, 2, 1, "x"), DimensionError);
}

TEST_CASE("gaussian trajectory csv has no burn block") {
  const Generator gen = reference_generator();
  const Trajectory traj = simulate_generator(gen, reference_noise_gaussian(), 25, 4);
  std::ostringstream os;
  write_trajectory_csv(os, traj, 1, 1, "h");
  const auto lines = lines_of(os.str());
  REQUIRE(lines.size() == 3 + 1 + 25);
  CHECK(lines[4].rfind("0,", 0) == 0);
}

TEST_CASE("chain csv round-trips bitwise") {
  const LogDensity target = [](const Eigen::VectorXd& x) { return -0.5 * x.squaredNorm(); };
  PredictorParams init;
  init.mode = WMode::u_only;
  init.theta = Eigen::VectorXd::Zero(9);
  MhOptions opts;
  opts.thinning = 5;
  const Chain chain = mh_sample(target, init, 600, 0.4, 77, opts);
  const Eigen::Index n = chain.samples.rows();
  Eigen::VectorXd log_prior(n), emp_loss(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    log_prior(i) = -0.1 * static_cast<double>(i) - 1.0 / 3.0;
    emp_loss(i) = 0.01 * static_cast<double>(i) + 0.2;
  }

  std::ostringstream os;
  write_chain_csv(os, chain, log_prior, emp_loss, "cafe01");
  std::istringstream is(os.str());
  const StoredChain back = read_chain_csv(is);

  CHECK(back.config_hash == "cafe01");
  CHECK(back.chain.mode == WMode::u_only);
  CHECK(back.chain.seed == 77);
  CHECK(back.chain.thinning == 5);
  CHECK((back.chain.samples - chain.samples).norm() == 0.0);
  CHECK((back.log_prior - log_prior).norm() == 0.0);
  CHECK((back.emp_loss - emp_loss).norm() == 0.0);
  // the reader stores the prior column as the chain log density
  CHECK((back.chain.log_densities - log_prior).norm() == 0.0);

  Eigen::VectorXd short_col(n - 1);
  CHECK_THROWS_AS(write_chain_csv(os, chain, short_col, emp_loss, "x"), DimensionError);
}

TEST_CASE("report csv schema") {
  std::ostringstream os;
  write_report_csv_header(os, "beef", 5);
  BoundReport rep;
  rep.theorem = Theorem::thm2_bounded;
  rep.N = 400;
  rep.lambda = 0.5;
  rep.delta = 0.05;
  rep.kl.value = 0.25;
  rep.kl.se = 0.01;
  rep.psi.value = 0.125;
  rep.psi.se = 0.5;
  rep.r_N = 7.75;
  rep.vacuous = true;
  append_report_row(os, rep);
  const auto lines = lines_of(os.str());
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "# config=beef seed=5");
  CHECK(lines[1] == "theorem,N,lambda,delta,kl,kl_se,psi,psi_se,r_N,vacuous");
  CHECK(lines[2] == "thm2_bounded,400,0.5,0.05,0.25,0.01,0.125,0.5,7.75,true");
}

TEST_CASE("lemma csv schema") {
  std::ostringstream os;
  write_lemma_csv_header(os, "f00d", 2);
  LemmaCheckResult res;
  res.lemma_id = "even_moment";
  res.r = 2.0;
  res.N = 0;
  res.lambda = 0.0;
  res.observed = 0.5;
  res.bound = 1.0;
  res.margin = 0.5;
  res.se = 0.25;
  res.pass = true;
  append_lemma_row(os, res);
  const auto lines = lines_of(os.str());
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "# config=f00d seed=2");
  CHECK(lines[1] == "lemma_id,r,N,lambda,observed,bound,margin,se,pass");
  CHECK(lines[2] == "even_moment,2,0,0,0.5,1,0.5,0.25,true");
}
