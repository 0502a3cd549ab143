#include "sharpwave/ergodic.hpp"

#include <cmath>
#include <stdexcept>

namespace sharpwave {

namespace {

int steps_for(const RunConfig& config, double time_span) {
  const double ratio = time_span / config.tau;
  const int n = static_cast<int>(std::llround(ratio));
  if (n < 0 || std::abs(ratio - n) > 1e-9 * std::max(1.0, ratio))
    throw std::invalid_argument("time span is not a multiple of tau");
  return n;
}

}  // namespace

stats::MeanCI estimate_invariant_mean(const RunConfig& config,
                                      const Observable& phi, double burn_in,
                                      double horizon, int paths) {
  if (!(burn_in < horizon))
    throw std::invalid_argument("estimate_invariant_mean: burn_in >= horizon");
  const int n_burn = steps_for(config, burn_in);
  const int n_total = steps_for(config, horizon);

  RunConfig cfg = config;
  cfg.T = horizon;
  std::vector<double> path_means(paths);
  for (int p = 0; p < paths; ++p) {
    PathRng rng(cfg.master_seed, static_cast<std::uint64_t>(p));
    double acc = 0.0;
    run_with_observer(cfg, rng, [&](int n, const Eigen::VectorXd& u) {
      if (n > n_burn) acc += phi.value(u);
    });
    path_means[p] = acc / (n_total - n_burn);
  }
  return stats::mean_ci(path_means);
}

GapCurve ergodic_gap_curve(const RunConfig& config, const SpectralField& x1,
                           const SpectralField& x2, const Observable& phi,
                           const std::vector<double>& times, int paths) {
  if (times.empty())
    throw std::invalid_argument("ergodic_gap_curve: no times");
  std::vector<int> steps;
  steps.reserve(times.size());
  for (double t : times) steps.push_back(steps_for(config, t));
  const int n_total = steps.back();

  GapCurve curve;
  curve.times = times;
  std::vector<std::vector<double>> diffs(times.size(),
                                         std::vector<double>(paths));
  RunConfig cfg = config;
  Stepper stepper(cfg);
  Eigen::VectorXd incr(cfg.domain->total_modes());
  for (int p = 0; p < paths; ++p) {
    PathRng rng(cfg.master_seed, static_cast<std::uint64_t>(p));
    Eigen::VectorXd u1 = x1.coeffs, u2 = x2.coeffs;
    std::size_t next = 0;
    while (next < steps.size() && steps[next] == 0) {
      diffs[next][p] = phi.value(u1) - phi.value(u2);
      ++next;
    }
    for (int n = 1; n <= n_total; ++n) {
      stepper.sample_increment(incr, rng);
      stepper.step_with_increment(u1, incr);
      stepper.step_with_increment(u2, incr);
      while (next < steps.size() && steps[next] == n) {
        diffs[next][p] = phi.value(u1) - phi.value(u2);
        ++next;
      }
    }
  }

  for (std::size_t i = 0; i < times.size(); ++i) {
    const auto ci = stats::mean_ci(diffs[i]);
    curve.gaps.push_back(std::abs(ci.mean));
    curve.ci_half.push_back(ci.half_width);
  }

  // Exponential fit on the identifiable (pre-noise-floor) segment.
  std::vector<double> ft, fy;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (curve.gaps[i] > 2.0 * curve.ci_half[i] && curve.gaps[i] > 0.0) {
      ft.push_back(times[i]);
      fy.push_back(std::log(curve.gaps[i]));
    }
  }
  curve.fit_points = static_cast<int>(ft.size());
  if (ft.size() >= 2) {
    const auto fit = stats::linear_fit(ft, fy);
    curve.omega1_hat = -fit.slope;
    curve.omega2_hat = std::exp(fit.intercept);
    curve.r_squared = fit.r_squared;
  }
  return curve;
}

MeasureGap invariant_measure_gap(const RunConfig& config_tau1,
                                 const RunConfig& config_tau2,
                                 const std::vector<Observable>& dictionary,
                                 double burn_in, double horizon, int paths) {
  if (!(config_tau1.tau > config_tau2.tau) &&
      config_tau1.tau != config_tau2.tau)
    throw std::invalid_argument("invariant_measure_gap: tau1 < tau2");
  MeasureGap out;
  std::vector<double> se1, se2;
  const RunConfig* configs[2] = {&config_tau1, &config_tau2};
  for (int which = 0; which < 2; ++which) {
    const RunConfig* cfg = configs[which];
    const int n_burn = steps_for(*cfg, burn_in);
    const int n_total = steps_for(*cfg, horizon);
    RunConfig run_cfg = *cfg;
    run_cfg.T = horizon;
    std::vector<std::vector<double>> path_means(
        dictionary.size(), std::vector<double>(paths, 0.0));
    for (int p = 0; p < paths; ++p) {
      PathRng rng(run_cfg.master_seed, static_cast<std::uint64_t>(p));
      run_with_observer(run_cfg, rng, [&](int n, const Eigen::VectorXd& u) {
        if (n > n_burn)
          for (std::size_t k = 0; k < dictionary.size(); ++k)
            path_means[k][p] += dictionary[k].value(u);
      });
      for (auto& pm : path_means)
        pm[p] /= (n_total - n_burn);
    }
    for (std::size_t k = 0; k < dictionary.size(); ++k) {
      const auto ci = stats::mean_ci(path_means[k]);
      if (which == 0) {
        out.means_tau1.push_back(ci.mean);
        se1.push_back(ci.stderr_);
      } else {
        out.means_tau2.push_back(ci.mean);
        se2.push_back(ci.stderr_);
      }
    }
  }
  for (std::size_t k = 0; k < dictionary.size(); ++k) {
    out.gaps.push_back(std::abs(out.means_tau1[k] - out.means_tau2[k]));
    out.ci_half.push_back(1.96 *
                          std::sqrt(se1[k] * se1[k] + se2[k] * se2[k]));
    out.sup_gap = std::max(out.sup_gap, out.gaps.back());
  }
  return out;
}

namespace {

// Forward sweep storing states, then one backward (adjoint) sweep giving
// the time-quadrature of the pathwise sensitivity for all directions at
// once: G = sum_n tau w_n (dU_n/dU_0)^T Dphi(u_n).
struct PoissonPathResult {
  double value = 0.0;
  std::vector<double> partials;
  Eigen::VectorXd gradient;
};

PoissonPathResult poisson_one_path(const RunConfig& cfg,
                                   const Observable& phi,
                                   const SpectralField& x,
                                   const std::vector<int>& horizon_steps,
                                   double mu_phi, PathRng& rng,
                                   bool want_gradient) {
  const int N = horizon_steps.back();
  const double tau = cfg.tau;
  Stepper stepper(cfg);
  RegularizedDrift drift(cfg.delta, cfg.flow_params());
  DriftDerivatives derivs(drift);
  const auto& dom = *cfg.domain;
  const Eigen::ArrayXd decay = (-dom.shifted_eigenvalues() * tau).exp();

  std::vector<Eigen::VectorXd> states;
  if (want_gradient) states.reserve(N + 1);
  Eigen::VectorXd u = x.coeffs;
  std::vector<double> phis(N + 1);
  phis[0] = phi.value(u);
  if (want_gradient) states.push_back(u);
  for (int n = 1; n <= N; ++n) {
    stepper.step(u, rng);
    phis[n] = phi.value(u);
    if (want_gradient) states.push_back(u);
  }

  PoissonPathResult out;
  // Trapezoid in time of the centered integrand, one partial per horizon.
  for (int h : horizon_steps) {
    double s = 0.5 * (phis[0] - mu_phi) + 0.5 * (phis[h] - mu_phi);
    for (int n = 1; n < h; ++n) s += phis[n] - mu_phi;
    out.partials.push_back(tau * s);
  }
  out.value = out.partials.back();

  if (want_gradient) {
    Eigen::VectorXd grid(dom.total_grid()), tmp(dom.total_modes());
    auto weight = [&](int n) { return (n == 0 || n == N) ? 0.5 : 1.0; };
    Eigen::VectorXd c = (tau * weight(N)) * phi.gradient(states[N]);
    for (int k = N - 1; k >= 0; --k) {
      // c <- M_k^T c = (I + tau B_k) S(tau) c with B_k the symmetric
      // pointwise multiplier by theta'(u_k).
      c.array() *= decay;
      synthesize(dom, c, grid);
      Eigen::VectorXd ugrid(dom.total_grid());
      synthesize(dom, states[k], ugrid);
      for (Eigen::Index i = 0; i < grid.size(); ++i)
        grid[i] *= derivs.prime(ugrid[i]);
      analyze(dom, grid, tmp);
      c += tau * tmp;
      if (k > 0) c += (tau * weight(k)) * phi.gradient(states[k]);
    }
    out.gradient = c + (tau * weight(0)) * phi.gradient(states[0]);
  }
  return out;
}

}  // namespace

PoissonEstimate estimate_poisson(const RunConfig& config,
                                 const Observable& phi, const SpectralField& x,
                                 const std::vector<double>& horizons,
                                 double mu_phi, int paths) {
  if (horizons.empty())
    throw std::invalid_argument("estimate_poisson: no horizons");
  std::vector<int> hsteps;
  for (double h : horizons) hsteps.push_back(steps_for(config, h));

  RunConfig cfg = config;
  cfg.T = horizons.back();
  PoissonEstimate est;
  est.horizons = horizons;
  est.partial_values.assign(horizons.size(), 0.0);
  est.gradient = SpectralField(cfg.domain);
  std::vector<double> values(paths);
  for (int p = 0; p < paths; ++p) {
    PathRng rng(cfg.master_seed, static_cast<std::uint64_t>(p));
    const auto res =
        poisson_one_path(cfg, phi, x, hsteps, mu_phi, rng, true);
    values[p] = res.value;
    for (std::size_t i = 0; i < hsteps.size(); ++i)
      est.partial_values[i] += res.partials[i];
    est.gradient.coeffs += res.gradient;
  }
  for (auto& v : est.partial_values) v /= paths;
  est.gradient.coeffs /= paths;
  const auto ci = stats::mean_ci(values);
  est.value = ci.mean;
  est.ci_half_width = ci.half_width;
  if (horizons.size() >= 2) {
    const double jump = std::abs(est.partial_values.back() -
                                 est.partial_values[horizons.size() - 2]);
    est.horizon_warning = jump > 2.0 * est.ci_half_width;
  }
  return est;
}

CltResult clt_experiment(const RunConfig& config, const Observable& phi,
                         double T, int replicates, double mu_phi,
                         double burn_in, double gamma_label) {
  if (replicates < 100)
    throw std::invalid_argument("clt_experiment: need >= 100 replicates");
  const int n_burn = steps_for(config, burn_in);
  const int n_window = steps_for(config, T);

  RunConfig cfg = config;
  cfg.T = burn_in + T;
  CltResult res;
  res.z_samples.resize(replicates);
  const double inv_sqrt_T = 1.0 / std::sqrt(T);
  SpectralField start =
      cfg.initial.domain ? cfg.initial : SpectralField(cfg.domain);
  for (int r = 0; r < replicates; ++r) {
    PathRng rng(cfg.master_seed, static_cast<std::uint64_t>(r));
    // Left-endpoint convention: the time integral of phi(u_[t]) over the
    // window is tau * sum of phi at states n_burn .. n_burn + n_window - 1.
    double z = n_burn == 0 ? phi.value(start.coeffs) - mu_phi : 0.0;
    run_with_observer(cfg, rng, [&](int n, const Eigen::VectorXd& u) {
      if (n >= n_burn && n < n_burn + n_window) z += phi.value(u) - mu_phi;
    });
    res.z_samples[r] = cfg.tau * z * inv_sqrt_T;
  }
  res.variance_estimate = stats::sample_variance(res.z_samples);
  const auto mean = stats::mean_ci(res.z_samples);
  const double sd = std::sqrt(res.variance_estimate);
  if (sd > 0.0) {
    res.ks_statistic = stats::ks_statistic(res.z_samples, mean.mean, sd);
    res.ks_pvalue = stats::ks_pvalue(res.ks_statistic, res.z_samples.size());
  } else {
    res.ks_pvalue = 1.0;
  }
  const double N = static_cast<double>(n_window);
  res.hypothesis_rule_1 =
      std::sqrt(N) * std::pow(config.epsilon, -gamma_label / 2.0) *
      std::pow(config.tau, std::min(1.0, 0.5 + gamma_label / 2.0));
  res.hypothesis_rule_2 = std::sqrt(N) * std::pow(config.epsilon, -2.0) *
                          std::pow(config.tau, 1.5);
  res.hypothesis_warning =
      res.hypothesis_rule_1 >= 1.0 || res.hypothesis_rule_2 >= 1.0;
  return res;
}

double poisson_variance_quadrature(const RunConfig& config,
                                   const Observable& phi, double mu_phi,
                                   int x_samples, int inner_paths,
                                   double horizon, double spacing,
                                   double burn_in) {
  if (inner_paths < 2 || x_samples < 1)
    throw std::invalid_argument("poisson_variance_quadrature: bad counts");
  const int n_burn = steps_for(config, burn_in);
  const int n_spacing = steps_for(config, spacing);
  const std::vector<int> hsteps = {steps_for(config, horizon)};
  const Eigen::ArrayXd qj = config.cov.q(*config.domain);

  // Invariant-measure samples from one long chain.
  RunConfig chain_cfg = config;
  chain_cfg.T = burn_in + spacing * x_samples;
  std::vector<Eigen::VectorXd> xs;
  xs.reserve(x_samples);
  {
    PathRng rng(config.master_seed, 0x706f69ull);  // chain stream
    run_with_observer(chain_cfg, rng, [&](int n, const Eigen::VectorXd& u) {
      if (n > n_burn && (n - n_burn) % n_spacing == 0 &&
          static_cast<int>(xs.size()) < x_samples)
        xs.push_back(u);
    });
  }

  RunConfig inner_cfg = config;
  inner_cfg.T = horizon;
  double acc = 0.0;
  for (int i = 0; i < static_cast<int>(xs.size()); ++i) {
    const SpectralField x(config.domain, xs[i]);
    Eigen::VectorXd ga = Eigen::VectorXd::Zero(config.domain->total_modes());
    Eigen::VectorXd gb = ga;
    const int half = inner_paths / 2;
    for (int p = 0; p < 2 * half; ++p) {
      PathRng rng(config.master_seed,
                  0x1000000ull + static_cast<std::uint64_t>(i) * inner_paths +
                      p);
      const auto res =
          poisson_one_path(inner_cfg, phi, x, hsteps, mu_phi, rng, true);
      (p < half ? ga : gb) += res.gradient;
    }
    ga /= half;
    gb /= half;
    // Split-sample quadratic form: E[<Q ga, gb>] = sum_j q_j (D Xi)_j^2
    // without the inner-path variance bias of a squared mean.
    acc += (qj * ga.array() * gb.array()).sum();
  }
  return acc / xs.size();
}

}  // namespace sharpwave
