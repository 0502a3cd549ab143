#include "sharpwave/sensitivity.hpp"

#include <cmath>
#include <stdexcept>

#include "sharpwave/stats.hpp"

namespace sharpwave {

Observable Observable::bounded_cosine(SpectralField g, double omega,
                                      double phase_offset) {
  Observable o;
  o.kind = ObservableKind::BoundedCosine;
  o.direction = std::move(g);
  o.frequency = omega;
  o.phase = phase_offset;
  return o;
}

Observable Observable::gaussian_bump(DomainPtr domain, int rank,
                                     double width) {
  if (rank < 1 || rank > domain->total_modes())
    throw std::invalid_argument("Observable: bump rank out of range");
  if (!(width > 0.0)) throw std::invalid_argument("Observable: width <= 0");
  Observable o;
  o.kind = ObservableKind::GaussianBump;
  o.direction = SpectralField(std::move(domain));
  o.projection_rank = rank;
  o.width = width;
  return o;
}

Observable Observable::linear_functional(SpectralField g) {
  Observable o;
  o.kind = ObservableKind::LinearFunctional;
  o.direction = std::move(g);
  return o;
}

double Observable::value(const Eigen::VectorXd& coeffs) const {
  switch (kind) {
    case ObservableKind::BoundedCosine:
      return std::cos(frequency * direction.coeffs.dot(coeffs) + phase);
    case ObservableKind::GaussianBump: {
      const double s2 = coeffs.head(projection_rank).squaredNorm();
      return std::exp(-s2 / (2.0 * width * width));
    }
    case ObservableKind::LinearFunctional:
      return direction.coeffs.dot(coeffs);
  }
  return 0.0;
}

Eigen::VectorXd Observable::gradient(const Eigen::VectorXd& coeffs) const {
  switch (kind) {
    case ObservableKind::BoundedCosine:
      return (-frequency * std::sin(frequency *
                                        direction.coeffs.dot(coeffs) +
                                    phase)) *
             direction.coeffs;
    case ObservableKind::GaussianBump: {
      Eigen::VectorXd g = Eigen::VectorXd::Zero(coeffs.size());
      g.head(projection_rank) =
          (-value(coeffs) / (width * width)) * coeffs.head(projection_rank);
      return g;
    }
    case ObservableKind::LinearFunctional:
      return direction.coeffs;
  }
  return {};
}

double Observable::hessian(const Eigen::VectorXd& coeffs,
                           const Eigen::VectorXd& h1,
                           const Eigen::VectorXd& h2) const {
  switch (kind) {
    case ObservableKind::BoundedCosine: {
      const double a = frequency * direction.coeffs.dot(coeffs) + phase;
      return -frequency * frequency * std::cos(a) *
             direction.coeffs.dot(h1) * direction.coeffs.dot(h2);
    }
    case ObservableKind::GaussianBump: {
      const double w2 = width * width;
      const double v = value(coeffs);
      const auto p = coeffs.head(projection_rank);
      return v * (p.dot(h1.head(projection_rank)) *
                      p.dot(h2.head(projection_rank)) / (w2 * w2) -
                  h1.head(projection_rank).dot(h2.head(projection_rank)) / w2);
    }
    case ObservableKind::LinearFunctional:
      return 0.0;
  }
  return 0.0;
}

namespace {

// Tangent-map machinery shared by the variation recursions and estimators:
// multiply pointwise by theta'(u_k) on the grid and push through the step's
// semigroup.
struct TangentOps {
  const DomainSpec& dom;
  RegularizedDrift drift;
  DriftDerivatives derivs;
  double tau;
  Eigen::ArrayXd decay;
  mutable Eigen::VectorXd grid_u, grid_h, coeff_ws;

  TangentOps(const RunConfig& config)
      : dom(*config.domain),
        drift(config.delta, config.flow_params()),
        derivs(drift),
        tau(config.tau),
        decay((-config.domain->shifted_eigenvalues() * config.tau).exp()),
        grid_u(config.domain->total_grid()),
        grid_h(config.domain->total_grid()),
        coeff_ws(config.domain->total_modes()) {}

  void theta_prime_grid(const Eigen::VectorXd& u_coeffs,
                        Eigen::VectorXd& out) const {
    synthesize(dom, u_coeffs, grid_u);
    out.resize(grid_u.size());
    for (Eigen::Index i = 0; i < grid_u.size(); ++i)
      out[i] = derivs.prime(grid_u[i]);
  }

  // eta <- S(tau) (eta + tau tp_grid (.) eta + tau forcing_coeffs)
  void advance(Eigen::VectorXd& eta, const Eigen::VectorXd& tp_grid,
               const Eigen::VectorXd* forcing_coeffs = nullptr) const {
    synthesize(dom, eta, grid_h);
    grid_h.array() *= tp_grid.array();
    analyze(dom, grid_h, coeff_ws);
    eta += tau * coeff_ws;
    if (forcing_coeffs) eta += tau * (*forcing_coeffs);
    eta.array() *= decay;
  }
};

}  // namespace

std::vector<SpectralField> evolve_first_variation(const Trajectory& traj,
                                                  const SpectralField& h,
                                                  const RunConfig& config) {
  const std::size_t n = traj.states.size();
  const std::size_t want = static_cast<std::size_t>(config.num_steps()) + 1;
  if (n != want || traj.states.size() != traj.times.size())
    throw std::invalid_argument(
        "evolve_first_variation: need a fully retained path (one state per "
        "step)");
  TangentOps ops(config);
  std::vector<SpectralField> eta;
  eta.reserve(n);
  eta.push_back(h);
  Eigen::VectorXd tp(config.domain->total_grid());
  Eigen::VectorXd cur = h.coeffs;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    ops.theta_prime_grid(traj.states[k].coeffs, tp);
    ops.advance(cur, tp);
    eta.emplace_back(config.domain, cur);
  }
  return eta;
}

std::vector<SpectralField> evolve_second_variation(
    const Trajectory& traj, const std::vector<SpectralField>& eta1,
    const std::vector<SpectralField>& eta2, const RunConfig& config) {
  const std::size_t n = traj.states.size();
  if (eta1.size() != n || eta2.size() != n)
    throw std::invalid_argument(
        "evolve_second_variation: eta paths must match the trajectory");
  TangentOps ops(config);
  std::vector<SpectralField> zeta;
  zeta.reserve(n);
  zeta.push_back(SpectralField(config.domain));
  Eigen::VectorXd tp(config.domain->total_grid());
  Eigen::VectorXd cur = Eigen::VectorXd::Zero(config.domain->total_modes());
  Eigen::VectorXd g1(config.domain->total_grid()),
      g2(config.domain->total_grid()), forcing(config.domain->total_modes());
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const auto& u = traj.states[k].coeffs;
    ops.theta_prime_grid(u, tp);
    // Bilinear forcing theta''(u) (.) eta1 (.) eta2; ops.grid_u still holds
    // the physical values of u from theta_prime_grid.
    synthesize(*config.domain, eta1[k].coeffs, g1);
    synthesize(*config.domain, eta2[k].coeffs, g2);
    for (Eigen::Index i = 0; i < g1.size(); ++i)
      g1[i] *= ops.derivs.second(ops.grid_u[i]) * g2[i];
    analyze(*config.domain, g1, forcing);
    ops.advance(cur, tp, &forcing);
    zeta.emplace_back(config.domain, cur);
  }
  return zeta;
}

namespace {

EstimatorResult reduce(std::vector<double>& samples) {
  const auto ci = stats::mean_ci(samples);
  return {ci.mean, ci.half_width, ci.stderr_, static_cast<int>(ci.n)};
}

}  // namespace

EstimatorResult estimate_dX(const RunConfig& config, const SpectralField& y,
                            const SpectralField& h, const Observable& phi,
                            int paths) {
  if (paths < 100)
    throw std::invalid_argument("estimate_dX: need at least 100 paths");
  RunConfig cfg = config;
  cfg.initial = y;
  cfg.validate();
  const int N = cfg.num_steps();

  std::vector<double> samples(paths);
  Stepper stepper(cfg);
  TangentOps ops(cfg);
  Eigen::VectorXd tp(cfg.domain->total_grid());
  for (int p = 0; p < paths; ++p) {
    PathRng rng(cfg.master_seed, static_cast<std::uint64_t>(p));
    Eigen::VectorXd u = y.coeffs;
    Eigen::VectorXd eta = h.coeffs;
    for (int n = 0; n < N; ++n) {
      ops.theta_prime_grid(u, tp);
      ops.advance(eta, tp);
      stepper.step(u, rng);
    }
    samples[p] = phi.gradient(u).dot(eta);
  }
  return reduce(samples);
}

EstimatorResult estimate_dX_bel(const RunConfig& config,
                                const SpectralField& y,
                                const SpectralField& h, const Observable& phi,
                                int paths) {
  if (paths < 100)
    throw std::invalid_argument("estimate_dX_bel: need at least 100 paths");
  RunConfig cfg = config;
  cfg.initial = y;
  cfg.validate();
  const int N = cfg.num_steps();
  const double T = cfg.T;

  const Eigen::ArrayXd qj = cfg.cov.q(*cfg.domain);
  if ((qj < 1e-30).any())
    throw std::invalid_argument("estimate_dX_bel: degenerate covariance mode");
  (void)T;

  std::vector<double> samples(paths);
  Stepper stepper(cfg);
  TangentOps ops(cfg);
  // Exact integration by parts for the discrete chain: the step noise is
  // additive, so for every k
  //   E[Dphi(u_N) eta_N] = E[phi(u_N) <Sigma^{-1} xi_k, eta_{k+1}>],
  // with eta_{k+1} the tangent after step k (independent of xi_k) and
  // Sigma the per-mode increment covariance. Averaging over k gives the
  // score below; per mode Sigma^{-1} xi_k = z_k / sd_j with z_k the
  // standard normals behind the increment.
  const Eigen::ArrayXd inv_sd = stepper.conv_stddev().inverse();
  Eigen::VectorXd tp(cfg.domain->total_grid());
  Eigen::VectorXd incr(cfg.domain->total_modes());
  std::vector<double> scores(paths), values(paths);
  for (int p = 0; p < paths; ++p) {
    PathRng rng(cfg.master_seed, static_cast<std::uint64_t>(p));
    Eigen::VectorXd u = y.coeffs;
    Eigen::VectorXd eta = h.coeffs;
    double score = 0.0;
    for (int n = 0; n < N; ++n) {
      stepper.sample_increment(incr, rng);
      ops.theta_prime_grid(u, tp);
      ops.advance(eta, tp);
      score += (eta.array() * (incr.array() * inv_sd.square())).sum();
      stepper.step_with_increment(u, incr);
    }
    scores[p] = score / static_cast<double>(N);
    values[p] = phi.value(u);
  }
  // Each score term has zero conditional mean, so E[score] = 0 and shifting
  // the observable by a constant leaves the estimator unbiased; centering at
  // the sample mean is a variance-reducing control variate (residual bias
  // O(1/paths) from reusing the same samples for the mean).
  const double center = stats::mean_ci(values).mean;
  for (int p = 0; p < paths; ++p)
    samples[p] = (values[p] - center) * scores[p];
  return reduce(samples);
}

EstimatorResult estimate_d2X(const RunConfig& config, const SpectralField& y,
                             const SpectralField& h1, const SpectralField& h2,
                             const Observable& phi, int paths) {
  if (paths < 100)
    throw std::invalid_argument("estimate_d2X: need at least 100 paths");
  RunConfig cfg = config;
  cfg.initial = y;
  cfg.validate();
  const int N = cfg.num_steps();

  std::vector<double> samples(paths);
  Stepper stepper(cfg);
  TangentOps ops(cfg);
  Eigen::VectorXd tp(cfg.domain->total_grid());
  Eigen::VectorXd g1(cfg.domain->total_grid()), g2(cfg.domain->total_grid()),
      forcing(cfg.domain->total_modes());
  for (int p = 0; p < paths; ++p) {
    PathRng rng(cfg.master_seed, static_cast<std::uint64_t>(p));
    Eigen::VectorXd u = y.coeffs;
    Eigen::VectorXd e1 = h1.coeffs, e2 = h2.coeffs;
    Eigen::VectorXd zeta = Eigen::VectorXd::Zero(u.size());
    for (int n = 0; n < N; ++n) {
      ops.theta_prime_grid(u, tp);
      synthesize(*cfg.domain, e1, g1);
      synthesize(*cfg.domain, e2, g2);
      for (Eigen::Index i = 0; i < g1.size(); ++i)
        g1[i] *= ops.derivs.second(ops.grid_u[i]) * g2[i];
      analyze(*cfg.domain, g1, forcing);
      ops.advance(zeta, tp, &forcing);
      ops.advance(e1, tp);
      ops.advance(e2, tp);
      stepper.step(u, rng);
    }
    samples[p] = phi.gradient(u).dot(zeta) + phi.hessian(u, e1, e2);
  }
  return reduce(samples);
}

}  // namespace sharpwave
