#pragma once

#include <vector>

#include "sharpwave/sensitivity.hpp"
#include "sharpwave/stats.hpp"

namespace sharpwave {

// Ensemble-and-time average of phi over (burn_in, horizon] across M paths.
// CI is normal-theory across per-path time averages.
stats::MeanCI estimate_invariant_mean(const RunConfig& config,
                                      const Observable& phi, double burn_in,
                                      double horizon, int paths);

struct GapCurve {
  std::vector<double> times;
  std::vector<double> gaps;       // |E phi(u^x1) - E phi(u^x2)|
  std::vector<double> ci_half;    // paired-difference CI half-widths
  double omega1_hat = 0.0;        // fitted decay rate (positive = decaying)
  double omega2_hat = 0.0;        // fitted prefactor
  double r_squared = 0.0;
  int fit_points = 0;             // points above the noise floor used in fit
};

// Two chains from x1 and x2 driven by one Brownian path per sample path
// (common random numbers); gap with CI at each requested time, and an
// exponential fit log gap = log omega2 - omega1 t on the pre-noise-floor
// segment (gap > 2 x CI half-width).
GapCurve ergodic_gap_curve(const RunConfig& config, const SpectralField& x1,
                           const SpectralField& x2, const Observable& phi,
                           const std::vector<double>& times, int paths);

struct MeasureGap {
  std::vector<double> means_tau1, means_tau2;
  std::vector<double> gaps;      // per-observable |mean1 - mean2|
  std::vector<double> ci_half;   // joint CI of the gap
  double sup_gap = 0.0;          // TV proxy over the dictionary
};

// Long-run phi-averages at two step sizes; their sup-gap over a finite
// dictionary of bounded observables is a lower-bound proxy of the
// invariant-measure total-variation distance.
MeasureGap invariant_measure_gap(const RunConfig& config_tau1,
                                 const RunConfig& config_tau2,
                                 const std::vector<Observable>& dictionary,
                                 double burn_in, double horizon, int paths);

struct PoissonEstimate {
  double value = 0.0;          // Xi_hat(x) at the final horizon
  double ci_half_width = 0.0;
  SpectralField gradient;      // D Xi_hat(x) as a coefficient vector
  std::vector<double> horizons;
  std::vector<double> partial_values;  // Xi_hat truncated at each horizon
  bool horizon_warning = false;        // last two partials not Cauchy-close
};

// Xi(x) = int_0^inf E[phi(u(t,x)) - mu(phi)] dt truncated at the largest
// horizon, trapezoid quadrature at step resolution. The gradient integrates
// the pathwise sensitivity over the same window via one backward
// (adjoint) sweep per path.
PoissonEstimate estimate_poisson(const RunConfig& config,
                                 const Observable& phi, const SpectralField& x,
                                 const std::vector<double>& horizons,
                                 double mu_phi, int paths);

struct CltResult {
  std::vector<double> z_samples;       // R normalized time averages
  double variance_estimate = 0.0;      // sample variance of Z_T
  double ks_statistic = 0.0;           // against the fitted normal
  double ks_pvalue = 0.0;
  double hypothesis_rule_1 = 0.0;      // N^{1/2} eps^{-gamma/2} tau^{min(1,1/2+gamma/2)}
  double hypothesis_rule_2 = 0.0;      // N^{1/2} eps^{-2} tau^{3/2}
  bool hypothesis_warning = false;
};

// R independent replicates of Z_T = T^{-1/2} int_0^T [phi(u_[t]) - mu(phi)]dt
// with the left-endpoint piecewise-constant convention. Each replicate burns
// in for burn_in time units before the integration window.
CltResult clt_experiment(const RunConfig& config, const Observable& phi,
                         double T, int replicates, double mu_phi,
                         double burn_in, double gamma_label);

// Monte Carlo estimate of the CLT asymptotic variance
// int ||Q^{1/2} D Xi||_HS^2 dmu: x sampled along a long chain, the gradient
// of Xi at each x estimated by adjoint sweeps over inner paths; the
// quadratic form uses two independent halves so the product is unbiased.
double poisson_variance_quadrature(const RunConfig& config,
                                   const Observable& phi, double mu_phi,
                                   int x_samples, int inner_paths,
                                   double horizon, double spacing,
                                   double burn_in);

}  // namespace sharpwave
