// End-to-end acceptance suite. Each test case checks one numbered
// criterion and prints exactly one summary line; sub-checks only produce
// output when they fail. Expected values are computed from closed forms or
// brute-force oracles inside the test, never from the code under test.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sharpwave/ergodic.hpp"
#include "sharpwave/harness.hpp"
#include "sharpwave/sensitivity.hpp"
#include "sharpwave/stats.hpp"

using namespace sharpwave;
using nlohmann::json;

namespace {

void report(int n, bool pass, const std::string& detail) {
  std::printf("[criterion %d] %s: %s\n", n, pass ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
}

double now_minus(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// Independent per-mode quantities for a 1D Dirichlet domain: mu_j =
// (j pi)^2 + lambda and the capped power-law covariance q_j.
double mu_1d(int j, double lambda) {
  const double l = (j + 1) * M_PI;
  return l * l + lambda;
}

double q_1d(int j, double lambda, double s, double c4) {
  return std::min(c4, std::pow(mu_1d(j, lambda), -s));
}

SpectralField unit_mode(const DomainPtr& dom, int j) {
  SpectralField f(dom);
  f.coeffs[j] = 1.0;
  return f;
}

ExperimentSpec sweep_spec(double s_noise, double beta) {
  ExperimentSpec spec;
  spec.dim = 1;
  spec.bc = "dirichlet";
  spec.modes = 16;
  spec.lambda = 1.0;
  spec.rebuild_domain();
  spec.base.cov = CovarianceSpec(s_noise, 1.0, beta);
  spec.base.epsilon = 1.0;
  spec.base.T = 1.0;
  spec.base.tau = 1.0 / 16.0;
  spec.taus = {1.0 / 256.0, 1.0 / 128.0, 1.0 / 64.0, 1.0 / 32.0, 1.0 / 16.0};
  spec.ref_ratio = 64;
  spec.paths = 100000;
  spec.observables.push_back(
      {"bounded_cosine", make_observable("bounded_cosine", spec.base.domain)});
  spec.seed = 4101;
  return spec;
}

}  // namespace

TEST_CASE("criterion_1: convolution increment variance, 64 modes") {
  const auto t0 = std::chrono::steady_clock::now();
  const double lambda = 1.0, s = 1.0, c4 = 1.0, tau = 1.0 / 16.0;
  const auto dom = DomainSpec::build(1, BoundaryCondition::Dirichlet, 64,
                                     lambda);
  RunConfig cfg;
  cfg.domain = dom;
  cfg.cov = CovarianceSpec(s, c4, 0.99);
  cfg.tau = tau;
  cfg.delta = tau;
  Stepper stepper(cfg);

  const int M = 100000;
  Eigen::ArrayXd sum = Eigen::ArrayXd::Zero(64), sumsq = sum;
  Eigen::VectorXd incr(64);
  PathRng rng(90001, 0);
  for (int i = 0; i < M; ++i) {
    stepper.sample_increment(incr, rng);
    sum += incr.array();
    sumsq += incr.array().square();
  }
  int bad = 0;
  double worst = 0.0;
  for (int j = 0; j < 64; ++j) {
    const double mu = mu_1d(j, lambda);
    const double sigma2 =
        q_1d(j, lambda, s, c4) * (1.0 - std::exp(-2.0 * mu * tau)) / (2.0 * mu);
    const double var = (sumsq[j] - sum[j] * sum[j] / M) / (M - 1);
    const double dev = std::abs(var - sigma2) / (sigma2 * std::sqrt(2.0 / M));
    worst = std::max(worst, dev);
    if (dev > 4.0) ++bad;
  }
  const double secs = now_minus(t0);
  const bool pass = bad == 0 && secs < 10.0;
  report(1, pass,
         "worst per-mode deviation " + std::to_string(worst) +
             " se (limit 4), " + std::to_string(secs) + " s");
  CHECK(bad == 0);
  CHECK(secs < 10.0);
}

TEST_CASE("criterion_2: closed-form cubic flow vs brute-force integration") {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 gen(424242);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double xi0 = -3.0 + 6.0 * u01(gen);
    const double t = 0.05 + 0.45 * u01(gen);
    const double eps = 0.2 + 1.8 * u01(gen);
    const double lam = 0.5 + 1.5 * u01(gen);
    FlowParams params(eps, lam, OddPolynomial::allen_cahn());
    const double got = flow(xi0, t, params);
    const double want = oracles::rk4_flow(xi0, t, params, 1e-6);
    const double rel = std::abs(got - want) / std::max(1e-12, std::abs(want));
    worst = std::max(worst, rel);
  }
  const double secs = now_minus(t0);
  const bool pass = worst < 1e-8 && secs < 30.0;
  report(2, pass,
         "max relative error " + std::to_string(worst) + " over 50 points, " +
             std::to_string(secs) + " s");
  CHECK(worst < 1e-8);
  CHECK(secs < 30.0);
}

TEST_CASE("criterion_3: linear-case long-run variance is the exact AR(1)") {
  const auto t0 = std::chrono::steady_clock::now();
  const double lambda = 1.0, s = 1.0, c4 = 1.0, tau = 0.125;
  const int J = 16, M = 100000;
  const auto dom = DomainSpec::build(1, BoundaryCondition::Dirichlet, J,
                                     lambda);
  RunConfig cfg;
  cfg.domain = dom;
  cfg.cov = CovarianceSpec(s, c4, 0.99);
  cfg.poly = OddPolynomial({lambda});  // f = eps lambda xi: pure OU per mode
  cfg.epsilon = 1.0;
  cfg.tau = tau;
  cfg.delta = 0.0;
  cfg.T = 4.0;  // rho^{2N} < 1e-37 for the slowest mode
  cfg.validate();
  const int N = cfg.num_steps();

  Stepper stepper(cfg);
  Eigen::ArrayXd sum = Eigen::ArrayXd::Zero(J), sumsq = sum;
  for (int p = 0; p < M; ++p) {
    PathRng rng(90003, static_cast<std::uint64_t>(p));
    Eigen::VectorXd u = Eigen::VectorXd::Zero(J);
    for (int n = 0; n < N; ++n) stepper.step(u, rng);
    sum += u.array();
    sumsq += u.array().square();
  }
  int bad = 0;
  double worst = 0.0;
  for (int j = 0; j < J; ++j) {
    const double mu = mu_1d(j, lambda);
    const double rho = std::exp(-mu * tau);
    const double sigma2 =
        q_1d(j, lambda, s, c4) * (1.0 - std::exp(-2.0 * mu * tau)) / (2.0 * mu);
    const double exact = sigma2 / (1.0 - rho * rho);
    const double var = (sumsq[j] - sum[j] * sum[j] / M) / (M - 1);
    const double dev = std::abs(var - exact) / (exact * std::sqrt(2.0 / M));
    worst = std::max(worst, dev);
    if (dev > 4.0) ++bad;
  }
  const double secs = now_minus(t0);
  const bool pass = bad == 0 && secs < 60.0;
  report(3, pass,
         "worst per-mode deviation " + std::to_string(worst) +
             " se (limit 4), " + std::to_string(secs) + " s");
  CHECK(bad == 0);
  CHECK(secs < 60.0);
}

TEST_CASE("criterion_4: weak order, smooth noise preset") {
  ExperimentSpec spec = sweep_spec(1.0, 0.99);
  const WeakOrderResult res = weak_order_sweep(spec);
  const bool pass = res.status == "ok" && res.fit.slope >= 0.7 &&
                    res.fit.slope <= 1.2;
  report(4, pass,
         "status " + res.status + ", slope " + std::to_string(res.fit.slope) +
             " (want [0.7, 1.2]), " + std::to_string(res.runtime_seconds) +
             " s");
  CHECK(res.status == "ok");
  CHECK(res.fit.slope >= 0.7);
  CHECK(res.fit.slope <= 1.2);
}

TEST_CASE("criterion_5: weak order, rough noise preset") {
  // Known red: the measured slope is ~0.92 (R^2 0.998) and stays at
  // 0.83-0.92 under asymmetric initial data, a broadband observable
  // direction, and 64 modes. The scheme integrates the linear part and
  // the stochastic convolution exactly, so its only error is the
  // splitting commutator, which is O(tau) regardless of noise roughness;
  // the [0.10, 0.45] band assumes the rough-noise upper bound is sharp,
  // and an error smaller than a bound is not a defect of the scheme.
  ExperimentSpec spec = sweep_spec(0.0, 0.45);
  spec.seed = 4102;
  const WeakOrderResult res = weak_order_sweep(spec);
  // "inconclusive" means CI gating removed the cells; that is a failure.
  const bool pass = res.status == "ok" && res.fit.slope >= 0.10 &&
                    res.fit.slope <= 0.45;
  report(5, pass,
         "status " + res.status + ", slope " + std::to_string(res.fit.slope) +
             " (want [0.10, 0.45]), " + std::to_string(res.runtime_seconds) +
             " s");
  CHECK(res.status == "ok");
  CHECK(res.fit.slope >= 0.10);
  CHECK(res.fit.slope <= 0.45);
}

TEST_CASE("criterion_6: sharp-interface scaling is polynomial in 1/eps") {
  // Known red on the poly-vs-exp sub-check: the error grows only ~2.9x
  // while 1/eps grows 8x (exponent ~0.5, far under the cap), but the
  // four-point curve is convex in log-log — the eps = 1/8 cell sits at
  // the onset of the sharp-interface regime — and over a single decade a
  // low-degree polynomial is indistinguishable from exp(c/eps) with
  // small c, so the exponential fit wins the SSR comparison. The shape
  // is unchanged at tau(1) = 1/64 and with a stable-phase start.
  ExperimentSpec spec = sweep_spec(1.0, 0.99);
  spec.experiment = Experiment::EpsScaling;
  spec.eps_values = {1.0, 0.5, 0.25, 0.125};
  spec.paths = 10000;
  spec.seed = 4103;
  const EpsScalingResult res = eps_scaling_study(spec);
  const bool pass =
      res.status == "ok" && res.poly_beats_exp && res.exponent < 6.0;
  report(6, pass,
         "status " + res.status + ", exponent " +
             std::to_string(res.exponent) + " (want < 6), poly ssr " +
             std::to_string(res.poly_ssr) + " vs exp ssr " +
             std::to_string(res.exp_ssr) + ", " +
             std::to_string(res.runtime_seconds) + " s");
  CHECK(res.status == "ok");
  CHECK(res.poly_beats_exp);
  CHECK(res.exponent < 6.0);
}

TEST_CASE("criterion_7: fourth-moment stability over a long horizon") {
  const auto t0 = std::chrono::steady_clock::now();
  const auto dom = DomainSpec::build(1, BoundaryCondition::Dirichlet, 16, 1.0);
  RunConfig cfg;
  cfg.domain = dom;
  cfg.cov = CovarianceSpec(1.0, 1.0, 0.99);
  cfg.tau = 1.0 / 16.0;
  cfg.delta = cfg.tau;
  cfg.T = 50.0;
  cfg.master_seed = 90007;
  cfg.validate();
  const int N = cfg.num_steps(), half = N / 2, M = 1000;

  std::vector<double> first(M), second(M), diff(M);
  for (int p = 0; p < M; ++p) {
    PathRng rng(cfg.master_seed, static_cast<std::uint64_t>(p));
    double m1 = 0.0, m2 = 0.0;
    run_with_observer(cfg, rng, [&](int n, const Eigen::VectorXd& u) {
      const double s4 = std::pow(sup_norm(SpectralField(dom, u)), 4);
      if (n <= half)
        m1 = std::max(m1, s4);
      else
        m2 = std::max(m2, s4);
    });
    first[p] = m1;
    second[p] = m2;
    diff[p] = m1 - m2;
  }
  const auto c1 = stats::mean_ci(first);
  const auto c2 = stats::mean_ci(second);
  const auto cd = stats::mean_ci(diff);
  const double limit = 0.1 * std::max(c1.mean, c2.mean) + cd.half_width;
  const double secs = now_minus(t0);
  const bool pass = std::abs(cd.mean) < limit;
  report(7, pass,
         "windowed sup-norm^4 halves " + std::to_string(c1.mean) + " vs " +
             std::to_string(c2.mean) + ", gap " + std::to_string(cd.mean) +
             " (limit " + std::to_string(limit) + "), " +
             std::to_string(secs) + " s");
  CHECK(std::abs(cd.mean) < limit);
}

TEST_CASE("criterion_8: pathwise sensitivity vs finite differences and the "
          "integration-by-parts estimator") {
  const auto t0 = std::chrono::steady_clock::now();
  const auto dom = DomainSpec::build(1, BoundaryCondition::Dirichlet, 16, 1.0);
  RunConfig cfg;
  cfg.domain = dom;
  cfg.cov = CovarianceSpec(1.0, 1.0, 0.99);
  cfg.tau = 1.0 / 64.0;
  cfg.delta = cfg.tau;
  cfg.T = 1.0;
  cfg.scheme = Scheme::TamedExpEuler;
  cfg.master_seed = 90011;
  cfg.validate();

  SpectralField y(dom);
  y.coeffs[0] = 0.8;
  const SpectralField h = unit_mode(dom, 0);
  const Observable phi = Observable::bounded_cosine(unit_mode(dom, 0), 1.0,
                                                    -0.5);
  const int M = 4000;
  const auto pw = estimate_dX(cfg, y, h, phi, M);

  // Central differences driven by the same per-path noise streams.
  const double eps_fd = 1e-6;
  std::vector<double> fd(M);
  for (int p = 0; p < M; ++p) {
    RunConfig up = cfg, dn = cfg;
    up.initial = SpectralField(dom, y.coeffs + eps_fd * h.coeffs);
    dn.initial = SpectralField(dom, y.coeffs - eps_fd * h.coeffs);
    PathRng r1(cfg.master_seed, p), r2(cfg.master_seed, p);
    fd[p] = (phi.value(run(up, r1).final_state().coeffs) -
             phi.value(run(dn, r2).final_state().coeffs)) /
            (2.0 * eps_fd);
  }
  const auto fd_ci = stats::mean_ci(fd);
  const double rel =
      std::abs(pw.value - fd_ci.mean) / std::max(1e-12, std::abs(fd_ci.mean));

  const auto bel = estimate_dX_bel(cfg, y, h, phi, 20000);
  const double joint =
      std::sqrt(pw.stderr_ * pw.stderr_ + bel.stderr_ * bel.stderr_);
  const double bel_dev = std::abs(pw.value - bel.value) / joint;
  const double secs = now_minus(t0);
  const bool pass = rel < 1e-3 && bel_dev < 3.0;
  report(8, pass,
         "pathwise vs FD relative error " + std::to_string(rel) +
             " (want < 1e-3), IBP deviation " + std::to_string(bel_dev) +
             " joint se (want < 3), " + std::to_string(secs) + " s");
  CHECK(rel < 1e-3);
  CHECK(bel_dev < 3.0);
}

TEST_CASE("criterion_9: forgetting of antipodal initial conditions") {
  const auto t0 = std::chrono::steady_clock::now();
  const auto dom = DomainSpec::build(1, BoundaryCondition::Dirichlet, 16, 1.0);
  RunConfig cfg;
  cfg.domain = dom;
  cfg.cov = CovarianceSpec(1.0, 1.0, 0.99);
  cfg.tau = 1.0 / 16.0;
  cfg.delta = cfg.tau;
  cfg.T = 20.0;
  cfg.master_seed = 90013;
  cfg.validate();

  std::vector<double> times;
  for (double t = 20.0; t > 2.0 * cfg.tau; t /= 1.6) {
    const double snapped = std::round(t / cfg.tau) * cfg.tau;
    if (times.empty() || std::abs(times.back() - snapped) > 1e-12)
      times.push_back(snapped);
  }
  std::reverse(times.begin(), times.end());

  const Observable phi = make_observable("shifted_cosine", dom);
  const auto curve =
      ergodic_gap_curve(cfg, constant_field(dom, 1.0),
                        constant_field(dom, -1.0), phi, times, 3000);
  const double gap_end = curve.gaps.back();
  const double ci_end = curve.ci_half.back();
  const double secs = now_minus(t0);
  // Common-noise chains coalesce to the bitwise-identical state well before
  // t = 20, so gap and CI are both exactly zero there; <= keeps that
  // strongest-possible outcome a pass.
  const bool pass =
      gap_end <= 2.0 * ci_end && curve.omega1_hat > 0.0 &&
      curve.r_squared > 0.9;
  report(9, pass,
         "gap(20) " + std::to_string(gap_end) + " vs 2xCI " +
             std::to_string(2.0 * ci_end) + ", decay rate " +
             std::to_string(curve.omega1_hat) + ", R^2 " +
             std::to_string(curve.r_squared) + ", " + std::to_string(secs) +
             " s");
  CHECK(gap_end <= 2.0 * ci_end);
  CHECK(curve.omega1_hat > 0.0);
  CHECK(curve.r_squared > 0.9);
}

TEST_CASE("criterion_10: central limit behaviour of time averages") {
  const auto t0 = std::chrono::steady_clock::now();
  const auto dom = DomainSpec::build(1, BoundaryCondition::Dirichlet, 16, 1.0);

  // Linear case: Z_T variance against the closed form sum q_j g_j^2 / B_j^2.
  RunConfig lin;
  lin.domain = dom;
  lin.cov = CovarianceSpec(1.0, 1.0, 0.99);
  lin.poly = OddPolynomial({1.0});  // f = eps lambda xi
  lin.tau = 1.0 / 64.0;
  lin.delta = 0.0;
  lin.T = 1.0;
  lin.master_seed = 90017;
  const Observable glin = Observable::linear_functional(unit_mode(dom, 0));
  const double mu0 = mu_1d(0, 1.0);
  const double exact_var = q_1d(0, 1.0, 1.0, 1.0) / (mu0 * mu0);
  const CltResult lres = clt_experiment(lin, glin, 40.0, 3000, 0.0, 2.0, 0.99);
  const double lin_rel = std::abs(lres.variance_estimate - exact_var) /
                         exact_var;

  // Cubic case: near-normality and the gradient variance quadrature.
  RunConfig cub;
  cub.domain = dom;
  cub.cov = CovarianceSpec(1.0, 1.0, 0.99);
  cub.tau = 1.0 / 32.0;
  cub.delta = cub.tau;
  cub.T = 1.0;
  cub.master_seed = 90019;
  const Observable phi = make_observable("shifted_cosine", dom);
  const double mu_phi =
      estimate_invariant_mean(cub, phi, 10.0, 100.0, 300).mean;
  const CltResult cres =
      clt_experiment(cub, phi, 100.0, 200, mu_phi, 5.0, 0.99);
  const double quad =
      poisson_variance_quadrature(cub, phi, mu_phi, 16, 128, 10.0, 2.0, 5.0);
  const double quad_rel =
      std::abs(quad - cres.variance_estimate) / cres.variance_estimate;

  const double secs = now_minus(t0);
  const bool pass = lin_rel < 0.10 && cres.ks_pvalue > 0.01 && quad_rel < 0.25;
  report(10, pass,
         "linear variance off by " + std::to_string(100.0 * lin_rel) +
             "% (want < 10%), cubic KS p " + std::to_string(cres.ks_pvalue) +
             " (want > 0.01), quadrature off by " +
             std::to_string(100.0 * quad_rel) + "% (want < 25%), " +
             std::to_string(secs) + " s");
  CHECK(lin_rel < 0.10);
  CHECK(cres.ks_pvalue > 0.01);
  CHECK(quad_rel < 0.25);
}

TEST_CASE("criterion_11: linear solution of the correction equation") {
  const auto t0 = std::chrono::steady_clock::now();
  const auto dom = DomainSpec::build(1, BoundaryCondition::Dirichlet, 16, 1.0);
  RunConfig cfg;
  cfg.domain = dom;
  cfg.cov = CovarianceSpec(1.0, 1.0, 0.99);
  cfg.poly = OddPolynomial({1.0});
  cfg.tau = 1.0 / 64.0;
  cfg.delta = 0.0;
  cfg.T = 1.0;
  cfg.master_seed = 90023;
  const Observable phi = Observable::linear_functional(unit_mode(dom, 0));

  SpectralField x(dom);
  x.coeffs[0] = 1.0;
  x.coeffs[1] = -0.5;
  const double mu0 = mu_1d(0, 1.0);
  const double exact = x.coeffs[0] / mu0;

  const auto est = estimate_poisson(cfg, phi, x, {3.0, 6.0}, 0.0, 500);
  const double value_err = std::abs(est.value - exact);

  // Central differences of the estimator along mode 0 share the noise
  // streams, so for linear dynamics they equal the reported gradient
  // up to the O(h^2) truncation; compare against the closed form 1/mu0.
  const double grad_rel =
      std::abs(est.gradient.coeffs[0] - 1.0 / mu0) / (1.0 / mu0);
  const double secs = now_minus(t0);
  const bool pass = value_err < est.ci_half_width && grad_rel < 5e-2 &&
                    !est.horizon_warning;
  report(11, pass,
         "value error " + std::to_string(value_err) + " vs CI " +
             std::to_string(est.ci_half_width) + ", gradient relative error " +
             std::to_string(grad_rel) + " (want < 0.05), " +
             std::to_string(secs) + " s");
  CHECK(value_err < est.ci_half_width);
  CHECK(grad_rel < 5e-2);
  CHECK_FALSE(est.horizon_warning);
}

namespace {

json weak_order_json(const WeakOrderResult& res) {
  json cells = json::array();
  for (const auto& c : res.cells)
    cells.push_back({{"tau", c.tau},
                     {"error", c.error},
                     {"ci_half", c.ci_half},
                     {"mean_coarse", c.mean_coarse},
                     {"mean_ref", c.mean_ref},
                     {"used_in_fit", c.used_in_fit}});
  return {{"status", res.status},
          {"slope", res.fit.slope},
          {"slope_stderr", res.fit.slope_stderr},
          {"r_squared", res.fit.r_squared},
          {"tau_ref", res.tau_ref},
          {"paths", res.paths},
          {"warnings", res.warnings},
          {"cells", cells}};  // runtime_seconds deliberately excluded
}

}  // namespace

TEST_CASE("criterion_12: sweep summaries are thread-count independent") {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentSpec spec = sweep_spec(1.0, 0.99);
  spec.taus = {1.0 / 64.0, 1.0 / 32.0, 1.0 / 16.0};
  spec.paths = 2000;
  spec.seed = 4112;
  ExperimentSpec eight = spec;
  eight.threads = 8;
  const std::string a = weak_order_json(weak_order_sweep(spec)).dump();
  const std::string b = weak_order_json(weak_order_sweep(eight)).dump();
  const double secs = now_minus(t0);
  const bool pass = a == b;
  report(12, pass,
         std::string("summaries at 1 and 8 threads ") +
             (pass ? "identical" : "differ") + ", " + std::to_string(secs) +
             " s");
  CHECK(a == b);
}
