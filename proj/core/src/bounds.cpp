#include "pacbound/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pacbound/errors.hpp"

namespace pacbound {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double factorial(int k) {
  double out = 1.0;
  for (int i = 2; i <= k; ++i) out *= static_cast<double>(i);
  return out;
}

double softplus(double x) {
  if (x > 30.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

// (1/2)[ln mean e^{v1} + ln mean e^{v2}] with shifted exponentials and an
// influence-function standard error over the (possibly autocorrelated)
// sample cloud.
PsiEstimate half_sum_log_means(const Eigen::VectorXd& v1, const Eigen::VectorXd& v2) {
  const Eigen::Index n = v1.size();
  if (n == 0 || v2.size() != n) throw ConfigError("psi estimate needs a nonempty sample cloud");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(v1(i)) || !std::isfinite(v2(i))) {
      throw NumericError("psi exponent overflowed at sample " + std::to_string(i) +
                         " (log-space value " +
                         std::to_string(std::isfinite(v1(i)) ? v2(i) : v1(i)) + ")");
    }
  }
  const double m1 = v1.maxCoeff();
  const double m2 = v2.maxCoeff();
  const Eigen::VectorXd w1 = (v1.array() - m1).exp();
  const Eigen::VectorXd w2 = (v2.array() - m2).exp();
  const double mean1 = w1.mean();
  const double mean2 = w2.mean();
  PsiEstimate out;
  out.value = 0.5 * ((m1 + std::log(mean1)) + (m2 + std::log(mean2)));
  Eigen::VectorXd infl(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    infl(i) = 0.5 * ((w1(i) - mean1) / mean1 + (w2(i) - mean2) / mean2);
  }
  out.se = expectation_over(infl).se;
  return out;
}

BoundReport assemble(Theorem theorem, double lambda, Eigen::Index N, double delta,
                     const KlEstimate& kl, const PsiEstimate& psi, const SupInfo& sup) {
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (!(delta > 0.0 && delta <= 1.0)) throw ConfigError("delta must be in (0, 1]");
  if (N < 1) throw ConfigError("N must be positive");
  BoundReport report;
  report.theorem = theorem;
  report.N = N;
  report.lambda = lambda;
  report.delta = delta;
  report.kl = kl;
  report.psi = psi;
  report.r_N = (kl.value + std::log(1.0 / delta) + psi.value) / lambda;
  report.sup_info = sup;
  return report;
}

}  // namespace

const char* to_string(Theorem theorem) {
  switch (theorem) {
    case Theorem::thm1_unbounded: return "thm1_unbounded";
    case Theorem::thm2_bounded: return "thm2_bounded";
    case Theorem::thm3_bounded_alt: return "thm3_bounded_alt";
  }
  throw ConfigError("unknown theorem id");
}

Theorem theorem_from_string(const std::string& name) {
  if (name == "thm1_unbounded") return Theorem::thm1_unbounded;
  if (name == "thm2_bounded") return Theorem::thm2_bounded;
  if (name == "thm3_bounded_alt") return Theorem::thm3_bounded_alt;
  throw ConfigError("unknown theorem id \"" + name + "\"");
}

double lambda_max_unbounded(double sup_Gf, double sup_Ge, const Dims& dims, double mu_max,
                            double G_bar_gen, bool strict_appendix) {
  if (!(sup_Gf > 0.0) || !(sup_Ge > 0.0) || !(mu_max > 0.0) || !(G_bar_gen > 0.0)) {
    throw ConfigError("lambda_max_unbounded needs positive sup and scale inputs");
  }
  if (dims.n_y < 1 || dims.n_u < 0) throw ConfigError("invalid dimensions");
  const double m = static_cast<double>(dims.m());
  const double brace1 = 8.0 * m * G_bar_gen * sup_Gf;
  const double brace2 = 6.0 * (m + 1.0) * dims.n_y * mu_max * sup_Ge * sup_Ge;
  const double cap = 1.0 / std::max(brace1, brace2);
  return strict_appendix ? 0.5 * cap : cap;
}

PsiEstimate psi_unbounded(double lambda, Eigen::Index N,
                          const std::vector<BoundConstants>& prior_samples, const Dims& dims,
                          double mu_max) {
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (N < 1) throw ConfigError("N must be positive");
  const Eigen::Index n = static_cast<Eigen::Index>(prior_samples.size());
  if (n == 0) throw ConfigError("psi estimate needs a nonempty sample cloud");
  const double m = static_cast<double>(dims.m());
  const double fact_m = factorial(dims.m());
  const double fact_m1 = factorial(dims.m() + 1);
  const double sqrt_N = std::sqrt(static_cast<double>(N));
  Eigen::VectorXd v1(n);
  Eigen::VectorXd v2(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const BoundConstants& c = prior_samples[i];
    const double a = 6.0 * lambda * dims.n_y * mu_max * c.G_e * c.G_e;
    const double d1 = 1.0 - (m + 1.0) * a;
    const double b = 8.0 * lambda * c.G_bar_gen * c.G_bar_f;
    const double d2 = 1.0 - m * b;
    if (!(d1 > 0.0)) {
      throw InadmissibleRateError("lambda " + std::to_string(lambda) +
                                  " is inadmissible at sample " + std::to_string(i) +
                                  ": 1 - 6(m+1) lambda n_y mu_max Ge^2 = " + std::to_string(d1));
    }
    if (!(d2 > 0.0)) {
      throw InadmissibleRateError("lambda " + std::to_string(lambda) +
                                  " is inadmissible at sample " + std::to_string(i) +
                                  ": 1 - 8 lambda m Gbar_gen Gbar_f = " + std::to_string(d2));
    }
    const double C1 = 2.0 * fact_m1 * a * a / d1;
    const double C2 = fact_m * b / d2;
    v1(i) = std::log1p(C1 / static_cast<double>(N));
    v2(i) = std::log1p(C2 / sqrt_N);
  }
  return half_sum_log_means(v1, v2);
}

PsiEstimate psi_bounded(double lambda, Eigen::Index N,
                        const std::vector<BoundConstants>& prior_samples, double G_gen1,
                        double G_gen2) {
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (N < 1) throw ConfigError("N must be positive");
  const Eigen::Index n = static_cast<Eigen::Index>(prior_samples.size());
  if (n == 0) throw ConfigError("psi estimate needs a nonempty sample cloud");
  const double log_N = std::log(static_cast<double>(N));
  Eigen::VectorXd v1(n);
  Eigen::VectorXd v2(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const BoundConstants& c = prior_samples[i];
    v1(i) = softplus(lambda * G_gen1 * c.G_e * c.G_e - log_N);
    v2(i) = softplus(lambda * G_gen2 * c.G_bar_f - 0.5 * log_N);
  }
  return half_sum_log_means(v1, v2);
}

PsiEstimate psi_bounded_alt(double lambda, Eigen::Index N,
                            const std::vector<BoundConstants>& prior_samples) {
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (N < 1) throw ConfigError("N must be positive");
  const Eigen::Index n = static_cast<Eigen::Index>(prior_samples.size());
  if (n == 0) throw ConfigError("psi estimate needs a nonempty sample cloud");
  const double Nd = static_cast<double>(N);
  Eigen::VectorXd v1(n);
  Eigen::VectorXd v2(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const BoundConstants& c = prior_samples[i];
    const double C11 = 2.0 * c.l1_gen * c.C_big * c.G_bar_f2;
    const double C12 = c.l1_gen * c.C_big * c.G_bar_f1;
    const double C2 = 8.0 * (c.G_e + c.G_e1) * (c.G_e + c.G_e1) * c.C_big * c.C_big *
                      (4.0 * c.G_e * c.C_big + 1.0) * (4.0 * c.G_e * c.C_big + 1.0);
    const double x = lambda * C11 / Nd;
    if (C12 <= 0.0) {
      v1(i) = 0.0;
    } else if (x > 30.0) {
      // 1 - C12 + C12 e^x = e^x (C12 + (1 - C12) e^{-x})
      v1(i) = x + std::log(C12 + (1.0 - C12) * std::exp(-x));
    } else {
      v1(i) = std::log1p(C12 * std::expm1(x));
    }
    v2(i) = lambda * lambda * C2 / Nd;
  }
  return half_sum_log_means(v1, v2);
}

BoundReport r_N_unbounded(double lambda, Eigen::Index N, double delta, const KlEstimate& kl,
                          const PsiEstimate& psi, const SupInfo& sup) {
  if (sup.lambda_max > 0.0 && lambda > sup.lambda_max) {
    throw InadmissibleRateError("lambda " + std::to_string(lambda) +
                                " exceeds the admissible cap " + std::to_string(sup.lambda_max));
  }
  BoundReport report = assemble(Theorem::thm1_unbounded, lambda, N, delta, kl, psi, sup);
  report.vacuous = false;
  report.note = "unbounded innovations admit no finite trivial bound; vacuity undefined";
  if (sup.lambda_max > 0.0) {
    const double floor = std::log(1.0 / delta) / sup.lambda_max;
    if (report.r_N < floor - 1e-12) {
      throw NumericError("error-term floor violated: r_N below ln(1/delta)/lambda_max");
    }
  }
  return report;
}

double vacuity_threshold(double C_big, double sup_Ge) {
  if (!std::isfinite(C_big) || !(C_big > 0.0)) {
    throw ConfigError("vacuity is only defined for bounded innovations");
  }
  return 2.0 * (C_big * sup_Ge) * (C_big * sup_Ge);
}

BoundReport r_N_bounded(double lambda, Eigen::Index N, double delta, const KlEstimate& kl,
                        const std::vector<BoundConstants>& prior_samples, const SupInfo& sup) {
  if (prior_samples.empty()) throw ConfigError("bounded report needs a sample cloud");
  const BoundConstants& gen_level = prior_samples.front();
  const PsiEstimate psi = psi_bounded(lambda, N, prior_samples, gen_level.G_gen1,
                                      gen_level.G_gen2);
  BoundReport report = assemble(Theorem::thm2_bounded, lambda, N, delta, kl, psi, sup);
  report.vacuous = report.r_N >= vacuity_threshold(gen_level.C_big, sup.sup_Ge);
  return report;
}

BoundReport r_N_bounded_alt(double lambda, Eigen::Index N, double delta, const KlEstimate& kl,
                            const std::vector<BoundConstants>& prior_samples,
                            const SupInfo& sup) {
  if (prior_samples.empty()) throw ConfigError("bounded report needs a sample cloud");
  const PsiEstimate psi = psi_bounded_alt(lambda, N, prior_samples);
  BoundReport report = assemble(Theorem::thm3_bounded_alt, lambda, N, delta, kl, psi, sup);
  report.vacuous = report.r_N >= vacuity_threshold(prior_samples.front().C_big, sup.sup_Ge);
  return report;
}

double schedule_sup_term(const std::vector<BoundConstants>& prior_samples, double safety) {
  if (prior_samples.empty()) throw ConfigError("schedule sup needs a sample cloud");
  if (!(safety >= 1.0)) throw ConfigError("safety factor must be at least 1");
  double sup = 0.0;
  for (const BoundConstants& c : prior_samples) {
    sup = std::max(sup, std::max(c.G_gen1 * c.G_e * c.G_e, c.G_gen2 * c.G_bar_f));
  }
  return safety * sup;
}

double lambda_schedule(Eigen::Index N, double sup_term) {
  if (N < 2) throw ConfigError("the rate schedule needs N >= 2");
  if (!(sup_term > 0.0)) throw ConfigError("schedule sup term must be positive");
  return std::log(std::sqrt(static_cast<double>(N))) / sup_term;
}

std::pair<double, double> golden_section_min(const std::function<double(double)>& f, double lo,
                                             double hi, double tol) {
  if (!(lo < hi)) throw ConfigError("golden section needs lo < hi");
  if (!(tol > 0.0)) throw ConfigError("golden section needs a positive tolerance");
  const double inv_phi = 0.6180339887498949;
  double a = lo;
  double b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  while (b - a > tol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
  }
  return f1 <= f2 ? std::make_pair(x1, f1) : std::make_pair(x2, f2);
}

BoundReport lambda_star(Eigen::Index N, double delta, Theorem theorem, const KlHandle& kl_of,
                        const std::vector<BoundConstants>& prior_samples, const Dims& dims,
                        const SupInfo& sup, const LambdaStarOptions& opts) {
  if (prior_samples.empty()) throw ConfigError("rate search needs a sample cloud");
  auto report_at = [&](double lambda) -> BoundReport {
    const KlEstimate kl = kl_of(lambda);
    switch (theorem) {
      case Theorem::thm1_unbounded: {
        const PsiEstimate psi = psi_unbounded(lambda, N, prior_samples, dims,
                                              prior_samples.front().mu_max);
        return r_N_unbounded(lambda, N, delta, kl, psi, sup);
      }
      case Theorem::thm2_bounded:
        return r_N_bounded(lambda, N, delta, kl, prior_samples, sup);
      case Theorem::thm3_bounded_alt:
        return r_N_bounded_alt(lambda, N, delta, kl, prior_samples, sup);
    }
    throw ConfigError("unknown theorem id");
  };

  double lo = 0.0;
  double hi = 0.0;
  if (theorem == Theorem::thm1_unbounded) {
    if (!(sup.lambda_max > 0.0)) {
      throw InadmissibleRateError("rate search needs a positive admissible cap");
    }
    hi = sup.lambda_max * (1.0 - 1e-9);
    lo = hi * 1e-8;
  } else {
    double pivot = opts.reference_lambda > 0.0 ? opts.reference_lambda : 1.0;
    double r_pivot = report_at(pivot).r_N;
    for (int i = 0; i < 60; ++i) {
      const double next = pivot * 2.0;
      const double r_next = report_at(next).r_N;
      if (r_next > r_pivot) break;
      pivot = next;
      r_pivot = r_next;
    }
    hi = pivot * 2.0;
    lo = hi * 1e-10;
  }

  const auto [log_lambda, r_min] =
      golden_section_min([&](double t) { return report_at(std::exp(t)).r_N; }, std::log(lo),
                         std::log(hi), std::log1p(opts.rel_tol));
  (void)r_min;
  BoundReport best = report_at(std::exp(log_lambda));
  if (opts.reference_lambda > 0.0) {
    const BoundReport ref = report_at(opts.reference_lambda);
    if (ref.r_N < best.r_N) best = ref;
  }
  return best;
}

PriorCloud make_prior_cloud(const Chain& chain, const Generator& gen, const NoiseSpec& noise,
                            double safety) {
  if (!(safety >= 1.0)) throw ConfigError("safety factor must be at least 1");
  const Eigen::Index n = chain.samples.rows();
  if (n == 0) throw ConfigError("prior cloud needs a nonempty chain");
  PriorCloud cloud;
  cloud.thetas.resize(n, chain.samples.cols());
  cloud.mode = chain.mode;
  cloud.safety = safety;
  cloud.consts.reserve(static_cast<std::size_t>(n));
  cloud.Ge.resize(n);
  cloud.Gf.resize(n);
  // a draw whose error-system norms cannot be certified within the scan caps
  // (spectral radius within ~1e-5 of one) is dropped, mirroring the prior's
  // certificate-based membership
  Eigen::Index kept = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const PredictorParams params{chain.samples.row(i).transpose(), chain.mode};
    BoundConstants c;
    try {
      c = compute_constants(make_predictor(params), chain.mode, gen, noise);
    } catch (const NumericError&) {
      continue;
    }
    cloud.thetas.row(kept) = chain.samples.row(i);
    cloud.Ge(kept) = c.G_e;
    cloud.Gf(kept) = c.G_bar_f;
    cloud.consts.push_back(c);
    ++kept;
  }
  if (kept == 0) throw ConfigError("no prior draw admitted a certified constant set");
  cloud.thetas.conservativeResize(kept, Eigen::NoChange);
  cloud.Ge.conservativeResize(kept);
  cloud.Gf.conservativeResize(kept);
  cloud.sup_Ge = safety * cloud.Ge.maxCoeff();
  cloud.sup_Gf = safety * cloud.Gf.maxCoeff();
  return cloud;
}

SupInfo sup_info_of(const PriorCloud& cloud) {
  SupInfo sup;
  sup.sup_Ge = cloud.sup_Ge;
  sup.sup_Gf = cloud.sup_Gf;
  sup.safety = cloud.safety;
  sup.n_samples = cloud.thetas.rows();
  return sup;
}

}  // namespace pacbound
