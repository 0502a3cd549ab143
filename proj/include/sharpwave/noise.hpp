#pragma once

#include <vector>

#include "sharpwave/domain.hpp"
#include "sharpwave/rng.hpp"

namespace sharpwave {

// Diagonal covariance of the Q-Wiener process in the eigenbasis of A:
//   q_j = min(cap, (lambda_j + lambda)^{-decay_exponent}).
// decay_exponent = 0 is spatially white noise (up to the cap).
struct CovarianceSpec {
  double decay_exponent = 1.0;  // s in [0, 1]
  double cap = 1.0;             // c4 > 0
  double beta_target = 1.0;     // claimed regularity index beta in (0, 2]

  CovarianceSpec() = default;
  CovarianceSpec(double s, double c4, double beta);

  Eigen::ArrayXd q(const DomainSpec& domain) const;
};

struct RegularityReport {
  double trace_value = 0.0;             // sum_j q_j (lambda_j+lambda)^{beta-1}
  double nondegeneracy_constant = 0.0;  // sup_j (q_j (lambda_j+lambda))^{-1/2}
  double beta_admissible_sup = 0.0;     // strict upper bound for beta
  bool beta_target_admissible = false;
  bool space_time_white = false;
};

// Truncated trace and non-degeneracy constants, plus the largest beta for
// which the infinite-sum criterion converges given the spectrum growth of
// the 1D / 2D Laplacian.
RegularityReport check_regularity(const CovarianceSpec& cov,
                                  const DomainSpec& domain);

// Exact per-mode variance of the stochastic-convolution increment
// int_{t_n}^{t_{n+1}} S_lambda(t_{n+1}-s) dW(s):
//   sigma_j^2 = q_j (1 - e^{-2(lambda_j+lambda) tau}) / (2(lambda_j+lambda)).
Eigen::ArrayXd convolution_variances(const DomainSpec& domain,
                                     const CovarianceSpec& cov, double tau);

// One increment of the stochastic convolution over a step of length tau;
// modes are filled in fixed mode order.
SpectralField sample_convolution_increment(DomainPtr domain,
                                           const CovarianceSpec& cov,
                                           double tau, PathRng& rng);

// Plain Wiener increment W(t_{n+1}) - W(t_n): per-mode N(0, q_j tau).
SpectralField sample_plain_increment(DomainPtr domain,
                                     const CovarianceSpec& cov, double tau,
                                     PathRng& rng);

struct RefinedIncrements {
  std::vector<SpectralField> fine;  // r increments at step coarse_tau / r
  SpectralField aggregate;          // the coarse-step increment they induce
};

// Exact common-random-number coupling between step sizes: the aggregate
// equals sum_k S_lambda(remaining time) fine_k, so a coarse step and its r
// refined steps are driven by one Brownian path. The aggregate's per-mode
// variance equals sigma_j^2(coarse_tau) exactly.
RefinedIncrements refine_convolution_increments(double coarse_tau,
                                                int refinement_ratio,
                                                DomainPtr domain,
                                                const CovarianceSpec& cov,
                                                PathRng& rng);

}  // namespace sharpwave
