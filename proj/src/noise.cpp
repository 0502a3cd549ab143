#include "sharpwave/noise.hpp"

#include <cmath>
#include <stdexcept>

namespace sharpwave {

CovarianceSpec::CovarianceSpec(double s, double c4, double beta)
    : decay_exponent(s), cap(c4), beta_target(beta) {
  if (s < 0.0 || s > 1.0)
    throw std::invalid_argument("CovarianceSpec: decay_exponent outside [0,1]");
  if (!(c4 > 0.0)) throw std::invalid_argument("CovarianceSpec: cap <= 0");
  if (!(beta > 0.0) || beta > 2.0)
    throw std::invalid_argument("CovarianceSpec: beta_target outside (0,2]");
}

Eigen::ArrayXd CovarianceSpec::q(const DomainSpec& domain) const {
  return domain.shifted_eigenvalues().pow(-decay_exponent).min(cap);
}

RegularityReport check_regularity(const CovarianceSpec& cov,
                                  const DomainSpec& domain) {
  RegularityReport rep;
  const auto& mu = domain.shifted_eigenvalues();
  const Eigen::ArrayXd qj = cov.q(domain);
  rep.trace_value = (qj * mu.pow(cov.beta_target - 1.0)).sum();
  rep.nondegeneracy_constant = (qj * mu).inverse().sqrt().maxCoeff();
  // Convergence of sum_j lambda_j^{beta-1-s} with lambda_j ~ j^{2/d}:
  // d=1 requires beta < 1/2 + s, d=2 requires beta < s.
  rep.beta_admissible_sup = (domain.dim() == 1)
                                ? std::min(2.0, 0.5 + cov.decay_exponent)
                                : cov.decay_exponent;
  rep.beta_target_admissible = cov.beta_target < rep.beta_admissible_sup;
  rep.space_time_white = (domain.dim() == 1 && cov.decay_exponent == 0.0);
  return rep;
}

Eigen::ArrayXd convolution_variances(const DomainSpec& domain,
                                     const CovarianceSpec& cov, double tau) {
  if (!(tau > 0.0))
    throw std::invalid_argument("convolution_variances: tau <= 0");
  const auto& mu = domain.shifted_eigenvalues();
  // -expm1 keeps precision when 2 mu tau is tiny.
  Eigen::ArrayXd var(mu.size());
  const Eigen::ArrayXd qj = cov.q(domain);
  for (Eigen::Index j = 0; j < mu.size(); ++j)
    var[j] = qj[j] * (-std::expm1(-2.0 * mu[j] * tau)) / (2.0 * mu[j]);
  return var;
}

namespace {
SpectralField gaussian_field(DomainPtr domain, const Eigen::ArrayXd& stddev,
                             PathRng& rng) {
  SpectralField out(std::move(domain));
  for (Eigen::Index j = 0; j < out.coeffs.size(); ++j)
    out.coeffs[j] = stddev[j] * rng.normal();
  return out;
}
}  // namespace

SpectralField sample_convolution_increment(DomainPtr domain,
                                           const CovarianceSpec& cov,
                                           double tau, PathRng& rng) {
  const Eigen::ArrayXd sd =
      convolution_variances(*domain, cov, tau).sqrt();
  return gaussian_field(std::move(domain), sd, rng);
}

SpectralField sample_plain_increment(DomainPtr domain,
                                     const CovarianceSpec& cov, double tau,
                                     PathRng& rng) {
  if (!(tau > 0.0))
    throw std::invalid_argument("sample_plain_increment: tau <= 0");
  const Eigen::ArrayXd sd = (cov.q(*domain) * tau).sqrt();
  return gaussian_field(std::move(domain), sd, rng);
}

RefinedIncrements refine_convolution_increments(double coarse_tau,
                                                int refinement_ratio,
                                                DomainPtr domain,
                                                const CovarianceSpec& cov,
                                                PathRng& rng) {
  if (refinement_ratio < 1)
    throw std::invalid_argument("refine_convolution_increments: ratio < 1");
  const double fine_tau = coarse_tau / refinement_ratio;
  const Eigen::ArrayXd decay =
      (-domain->shifted_eigenvalues() * fine_tau).exp();
  const Eigen::ArrayXd sd =
      convolution_variances(*domain, cov, fine_tau).sqrt();

  RefinedIncrements out;
  out.aggregate = SpectralField(domain);
  out.fine.reserve(refinement_ratio);
  for (int k = 0; k < refinement_ratio; ++k) {
    out.fine.push_back(gaussian_field(domain, sd, rng));
    // aggregate <- S(fine_tau) aggregate + fine_k, which telescopes to
    // sum_k S((r-1-k) fine_tau) fine_k.
    out.aggregate.coeffs.array() =
        out.aggregate.coeffs.array() * decay + out.fine.back().coeffs.array();
  }
  return out;
}

}  // namespace sharpwave
