#pragma once

#include "sharpwave/domain.hpp"

namespace sharpwave {

// Action of the semigroup S_lambda(t) = exp((A - lambda) t): coefficient j is
// multiplied by exp(-(lambda_j + lambda) t). Rejects t < 0.
SpectralField apply_semigroup(const SpectralField& field, double t);
void apply_semigroup_inplace(Eigen::VectorXd& coeffs, const DomainSpec& dom,
                             double t);

// (-A + lambda)^kappa: coefficient j multiplied by (lambda_j + lambda)^kappa.
// Negative powers are fine, the spectrum is bounded below by lambda > 0.
SpectralField apply_fractional_power(const SpectralField& field, double kappa);

// H^kappa norm: (sum_j (lambda_j + lambda)^kappa v_j^2)^{1/2}.
// kappa = 0 is the plain L2 coefficient norm.
double sobolev_norm(const SpectralField& field, double kappa);

// Physical <-> spectral transforms on the oversampled grid. The grid is
// large enough to dealias polynomial Nemytskii evaluation of the configured
// degree (generalized 3/2-rule with phys_grid_factor >= m + 1).
Eigen::VectorXd to_physical(const SpectralField& field);
SpectralField from_physical(const Eigen::VectorXd& grid, DomainPtr domain);

// In-place transform kernels used by the steppers; `grid` and `coeffs` must
// be sized total_grid() and total_modes().
void synthesize(const DomainSpec& dom, const Eigen::VectorXd& coeffs,
                Eigen::VectorXd& grid);
void analyze(const DomainSpec& dom, const Eigen::VectorXd& grid,
             Eigen::VectorXd& coeffs);

// Maximum absolute value over the oversampled physical grid. A lower bound
// of the true sup-norm; used consistently throughout so moment-bound checks
// are self-consistent.
double sup_norm(const SpectralField& field);

}  // namespace sharpwave
