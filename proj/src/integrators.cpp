#include "sharpwave/integrators.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace sharpwave {

int RunConfig::num_steps() const {
  const double ratio = T / tau;
  const int n = static_cast<int>(std::llround(ratio));
  if (n < 0 || std::abs(ratio - n) > 1e-9 * std::max(1.0, ratio))
    throw std::invalid_argument("RunConfig: T / tau is not an integer");
  return n;
}

void RunConfig::validate() const {
  if (!domain) throw std::invalid_argument("RunConfig: no domain");
  if (!(tau > 0.0)) throw std::invalid_argument("RunConfig: tau <= 0");
  if (T < 0.0) throw std::invalid_argument("RunConfig: T < 0");
  (void)num_steps();
  if (!(epsilon > 0.0)) throw std::invalid_argument("RunConfig: epsilon <= 0");
  if (delta < 0.0 || delta >= 1.0)
    throw std::invalid_argument("RunConfig: delta outside [0,1)");
  if (scheme == Scheme::TamedExpEuler && !(delta > 0.0))
    throw std::invalid_argument("RunConfig: tamed scheme needs delta > 0");
  const double lambda = domain->lambda();
  if (tau * (lambda + 1.0 / epsilon) > c3 + 1e-12)
    throw std::invalid_argument("RunConfig: tau (lambda + 1/eps) exceeds c3");
  // Standing hypothesis c1 <= eps * lambda <= c2.
  const double el = epsilon * lambda;
  if (el < 0.01 || el > 100.0)
    throw std::invalid_argument("RunConfig: eps * lambda far outside [c1,c2]");
  if (initial.domain && !initial.domain->same_as(*domain))
    throw std::invalid_argument("RunConfig: initial field domain mismatch");
}

FlowParams RunConfig::flow_params() const {
  return FlowParams(epsilon, domain->lambda(), poly, flow_method);
}

Stepper::Stepper(const RunConfig& config)
    : domain_(config.domain),
      scheme_(config.scheme),
      tau_(config.tau),
      delta_(config.delta),
      flow_(config.flow_params()) {
  config.validate();
  decay_ = (-domain_->shifted_eigenvalues() * tau_).exp();
  conv_sd_ = convolution_variances(*domain_, config.cov, tau_).sqrt();
  plain_sd_ = (config.cov.q(*domain_) * tau_).sqrt();
  grid_ws_.resize(domain_->total_grid());
  coeff_ws_.resize(domain_->total_modes());
  if (flow_.method == FlowMethod::ClosedFormCubic) {
    cubic_fast_ = true;
    cf_c_ = flow_.c();
    cf_b_ = flow_.b();
    cf_e2_ = std::exp(-2.0 * cf_c_ * tau_);
    cf_ratio_ = (cf_c_ != 0.0) ? cf_b_ / cf_c_ : 0.0;
  }
}

void Stepper::apply_flow_grid() {
  const Eigen::Index n = grid_ws_.size();
  double* x = grid_ws_.data();
  if (cubic_fast_) {
    if (cf_b_ == 0.0) {
      const double factor = std::exp(cf_c_ * tau_);
      for (Eigen::Index i = 0; i < n; ++i) x[i] *= factor;
    } else if (cf_c_ == 0.0) {
      const double add = 2.0 * cf_b_ * tau_;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double v = x[i];
        if (v == 0.0) continue;
        x[i] = std::copysign(1.0 / std::sqrt(1.0 / (v * v) + add), v);
      }
    } else {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double v = x[i];
        if (v == 0.0) continue;
        const double y = cf_e2_ * (1.0 / (v * v) - cf_ratio_) + cf_ratio_;
        x[i] = std::copysign(1.0 / std::sqrt(y), v);
      }
    }
  } else {
    for (Eigen::Index i = 0; i < n; ++i) x[i] = flow(x[i], tau_, flow_);
  }
}

void Stepper::deterministic_step(Eigen::VectorXd& coeffs) {
  if (scheme_ != Scheme::TamedExpEuler && cubic_fast_ && cf_b_ == 0.0) {
    // Linear drift commutes with the basis: no grid round trip needed.
    coeffs.array() *= decay_ * std::exp(cf_c_ * tau_);
    return;
  }
  synthesize(*domain_, coeffs, grid_ws_);
  if (scheme_ == Scheme::TamedExpEuler) {
    // u + tau Theta_delta(u), pointwise on the grid.
    const int m = flow_.poly.m();
    const Eigen::Index n = grid_ws_.size();
    double* x = grid_ws_.data();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = x[i];
      const double F = std::pow(v, 2 * m);
      const double drift =
          (-flow_.poly.eval(v) / flow_.epsilon + flow_.lambda * v) /
          (1.0 + delta_ * F);
      x[i] = v + tau_ * drift;
    }
  } else {
    apply_flow_grid();
  }
  analyze(*domain_, grid_ws_, coeffs);
  coeffs.array() *= decay_;
}

void Stepper::sample_increment(Eigen::VectorXd& out, PathRng& rng) {
  const Eigen::ArrayXd& sd =
      (scheme_ == Scheme::SplittingPlain) ? plain_sd_ : conv_sd_;
  for (Eigen::Index j = 0; j < out.size(); ++j) out[j] = sd[j] * rng.normal();
  if (scheme_ == Scheme::SplittingPlain) out.array() *= decay_;
}

void Stepper::step(Eigen::VectorXd& coeffs, PathRng& rng) {
  sample_increment(coeff_ws_, rng);
  deterministic_step(coeffs);
  coeffs += coeff_ws_;
}

void Stepper::step_with_increment(Eigen::VectorXd& coeffs,
                                  const Eigen::VectorXd& increment) {
  deterministic_step(coeffs);
  coeffs += increment;
}

namespace {
SpectralField one_step(const SpectralField& u, const RunConfig& config,
                       PathRng& rng, Scheme scheme) {
  RunConfig c = config;
  c.scheme = scheme;
  Stepper stepper(c);
  SpectralField out = u;
  stepper.step(out.coeffs, rng);
  return out;
}
}  // namespace

SpectralField step_splitting(const SpectralField& u, const RunConfig& config,
                             PathRng& rng) {
  return one_step(u, config, rng, Scheme::SplittingConvolution);
}

SpectralField step_splitting_plain(const SpectralField& u,
                                   const RunConfig& config, PathRng& rng) {
  return one_step(u, config, rng, Scheme::SplittingPlain);
}

SpectralField step_tamed_exp_euler(const SpectralField& u,
                                   const RunConfig& config, PathRng& rng) {
  return one_step(u, config, rng, Scheme::TamedExpEuler);
}

Trajectory run(const RunConfig& config, PathRng& rng) {
  config.validate();
  const int N = config.num_steps();
  Stepper stepper(config);
  Trajectory traj;
  SpectralField u = config.initial.domain ? config.initial
                                          : SpectralField(config.domain);
  traj.times.push_back(0.0);
  traj.states.push_back(u);
  Eigen::VectorXd incr(config.domain->total_modes());
  for (int n = 1; n <= N; ++n) {
    stepper.sample_increment(incr, rng);
    stepper.step_with_increment(u.coeffs, incr);
    if (config.retain_full_path || n == N) {
      traj.times.push_back(n * config.tau);
      traj.states.push_back(u);
      if (config.retain_full_path)
        traj.increments.emplace_back(config.domain, incr);
    }
  }
  return traj;
}

void run_with_observer(
    const RunConfig& config, PathRng& rng,
    const std::function<void(int, const Eigen::VectorXd&)>& observer) {
  config.validate();
  const int N = config.num_steps();
  Stepper stepper(config);
  Eigen::VectorXd coeffs = config.initial.domain
                               ? config.initial.coeffs
                               : Eigen::VectorXd::Zero(
                                     config.domain->total_modes());
  for (int n = 1; n <= N; ++n) {
    stepper.step(coeffs, rng);
    observer(n, coeffs);
  }
}

std::pair<Trajectory, Trajectory> run_coupled_pair(
    const RunConfig& config_coarse, int refinement_ratio, PathRng& rng) {
  if (refinement_ratio < 1)
    throw std::invalid_argument("run_coupled_pair: ratio < 1");
  if (config_coarse.scheme == Scheme::SplittingPlain)
    throw std::invalid_argument(
        "run_coupled_pair: coupling requires convolution increments");
  config_coarse.validate();

  RunConfig config_fine = config_coarse;
  config_fine.tau = config_coarse.tau / refinement_ratio;

  Stepper coarse(config_coarse);
  Stepper fine(config_fine);
  const auto& dom = *config_coarse.domain;
  const Eigen::ArrayXd fine_decay =
      (-dom.shifted_eigenvalues() * config_fine.tau).exp();

  SpectralField uc = config_coarse.initial.domain
                         ? config_coarse.initial
                         : SpectralField(config_coarse.domain);
  SpectralField uf = uc;
  Trajectory tc, tf;
  tc.times.push_back(0.0);
  tc.states.push_back(uc);
  tf.times.push_back(0.0);
  tf.states.push_back(uf);

  const int N = config_coarse.num_steps();
  Eigen::VectorXd fine_incr(dom.total_modes());
  Eigen::VectorXd aggregate(dom.total_modes());
  for (int n = 1; n <= N; ++n) {
    aggregate.setZero();
    for (int k = 0; k < refinement_ratio; ++k) {
      fine.sample_increment(fine_incr, rng);
      fine.step_with_increment(uf.coeffs, fine_incr);
      aggregate.array() = aggregate.array() * fine_decay + fine_incr.array();
    }
    coarse.step_with_increment(uc.coeffs, aggregate);
    if (config_coarse.retain_full_path || n == N) {
      tc.times.push_back(n * config_coarse.tau);
      tc.states.push_back(uc);
      tf.times.push_back(n * config_coarse.tau);
      tf.states.push_back(uf);
    }
  }
  return {std::move(tc), std::move(tf)};
}

SpectralField interpolate(const Trajectory& traj, const RunConfig& config,
                          double t) {
  if (traj.times.empty() || t < traj.times.front() || t > traj.times.back())
    throw std::invalid_argument("interpolate: t outside stored range");
  std::size_t k = 0;
  while (k + 1 < traj.times.size() && traj.times[k + 1] <= t) ++k;
  if (t == traj.times[k]) return traj.states[k];
  if (k >= traj.increments.size())
    throw std::invalid_argument("interpolate: step increments not retained");

  const double s = t - traj.times[k];
  const double tau = traj.times[k + 1] - traj.times[k];
  const FlowParams fp = config.flow_params();
  const auto& dom = *config.domain;

  // Deterministic part S(s) Phi_s(u_k).
  Eigen::VectorXd grid = to_physical(traj.states[k]);
  for (Eigen::Index i = 0; i < grid.size(); ++i)
    grid[i] = flow(grid[i], s, fp);
  SpectralField out = from_physical(grid, config.domain);
  apply_semigroup_inplace(out.coeffs, dom, s);

  // In-step stochastic integral: OU-bridge conditional mean given the stored
  // end-of-step increment (approximate; exact at both endpoints).
  const auto& mu = dom.shifted_eigenvalues();
  for (Eigen::Index j = 0; j < out.coeffs.size(); ++j) {
    const double scale = std::exp(-mu[j] * (s + tau)) *
                         std::expm1(2.0 * mu[j] * s) /
                         (-std::expm1(-2.0 * mu[j] * tau));
    out.coeffs[j] += scale * traj.increments[k].coeffs[j];
  }
  return out;
}

void export_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("export_csv: cannot open " + path);
  out << "time,mode,coefficient\n";
  char buf[96];
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    for (Eigen::Index j = 0; j < traj.states[i].coeffs.size(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g,%lld,%.17g", traj.times[i],
                    static_cast<long long>(j), traj.states[i].coeffs[j]);
      out << buf << '\n';
    }
  }
}

void export_binary(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("export_binary: cannot open " + path);
  out.write("SHRPWAV1", 8);
  const std::uint64_t n_times = traj.times.size();
  const std::uint64_t n_modes =
      traj.states.empty() ? 0 : traj.states[0].coeffs.size();
  out.write(reinterpret_cast<const char*>(&n_times), 8);
  out.write(reinterpret_cast<const char*>(&n_modes), 8);
  out.write(reinterpret_cast<const char*>(traj.times.data()),
            static_cast<std::streamsize>(8 * n_times));
  // Column-major: one column of coefficients per snapshot.
  for (const auto& state : traj.states)
    out.write(reinterpret_cast<const char*>(state.coeffs.data()),
              static_cast<std::streamsize>(8 * n_modes));
}

}  // namespace sharpwave
