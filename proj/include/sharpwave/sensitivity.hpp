#pragma once

#include <vector>

#include "sharpwave/integrators.hpp"

namespace sharpwave {

enum class ObservableKind { BoundedCosine, GaussianBump, LinearFunctional };

// Test functional phi: H -> R. BoundedCosine and GaussianBump are bounded
// with bounded first and second derivatives; LinearFunctional is unbounded
// and only admitted in linear-case oracles.
struct Observable {
  ObservableKind kind = ObservableKind::BoundedCosine;
  SpectralField direction;   // g (BoundedCosine / LinearFunctional)
  double frequency = 1.0;    // omega (BoundedCosine)
  double phase = 0.0;        // offset breaking the u -> -u symmetry
  int projection_rank = 1;   // leading modes entering the bump
  double width = 1.0;        // bump width

  static Observable bounded_cosine(SpectralField g, double omega,
                                   double phase = 0.0);
  static Observable gaussian_bump(DomainPtr domain, int rank, double width);
  static Observable linear_functional(SpectralField g);

  bool bounded() const { return kind != ObservableKind::LinearFunctional; }

  double value(const Eigen::VectorXd& coeffs) const;
  // D phi(u) as a coefficient vector.
  Eigen::VectorXd gradient(const Eigen::VectorXd& coeffs) const;
  // D^2 phi(u) . (h1, h2).
  double hessian(const Eigen::VectorXd& coeffs, const Eigen::VectorXd& h1,
                 const Eigen::VectorXd& h2) const;
};

// First variation eta^h and optional second variation zeta^{h1,h2} along a
// base trajectory.
struct VariationState {
  std::vector<SpectralField> eta;
  std::vector<SpectralField> zeta;
};

// Exponential Euler recursion matching the state scheme's tangent map:
//   eta_{k+1} = S(tau) (eta_k + tau theta'(u_k) (.) eta_k)
// with (.) the pointwise product on the physical grid. The trajectory must
// retain per-step states (retain_full_path).
std::vector<SpectralField> evolve_first_variation(const Trajectory& traj,
                                                  const SpectralField& h,
                                                  const RunConfig& config);

// Same recursion with the bilinear forcing theta''(u_k) (.) eta1 (.) eta2
// added before the semigroup.
std::vector<SpectralField> evolve_second_variation(
    const Trajectory& traj, const std::vector<SpectralField>& eta1,
    const std::vector<SpectralField>& eta2, const RunConfig& config);

struct EstimatorResult {
  double value = 0.0;
  double ci_half_width = 0.0;
  double stderr_ = 0.0;
  int paths = 0;
};

// Monte Carlo estimator of DX(t, y) . h = E_y[ Dphi(u(T)) . eta^h(T) ],
// propagating state and variation together (pathwise derivative of the
// discrete scheme when config.scheme is TamedExpEuler).
EstimatorResult estimate_dX(const RunConfig& config, const SpectralField& y,
                            const SpectralField& h, const Observable& phi,
                            int paths);

// Bismut-Elworthy-Li estimator
//   (1/T) E[ int_0^T < Q^{-1/2} (-A+lambda)^{-1/2} eta^h(s), dW~(s) >
//            phi(u(T)) ],
// score-function form needing no Dphi. The discrete stochastic integral is
// left-point at step resolution. Rejects modes with q_j < 1e-30.
EstimatorResult estimate_dX_bel(const RunConfig& config,
                                const SpectralField& y,
                                const SpectralField& h, const Observable& phi,
                                int paths);

// Pathwise second derivative, E[Dphi . zeta + D^2 phi (eta1, eta2)].
EstimatorResult estimate_d2X(const RunConfig& config, const SpectralField& y,
                             const SpectralField& h1, const SpectralField& h2,
                             const Observable& phi, int paths);

}  // namespace sharpwave
