#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sharpwave/noise.hpp"
#include "sharpwave/scalar_dynamics.hpp"
#include "sharpwave/spectral.hpp"

namespace sharpwave {

enum class Scheme { SplittingConvolution, SplittingPlain, TamedExpEuler };

// One reproducibility record: everything a run depends on.
struct RunConfig {
  DomainPtr domain;
  CovarianceSpec cov;
  OddPolynomial poly = OddPolynomial::allen_cahn();
  double epsilon = 1.0;
  double tau = 0.0625;
  double delta = 0.0;  // taming parameter; default policy sets delta = tau
  double T = 1.0;
  Scheme scheme = Scheme::SplittingConvolution;
  FlowMethod flow_method = FlowMethod::ClosedFormCubic;
  SpectralField initial;
  std::uint64_t master_seed = 1;
  double c3 = 1.0;  // stability budget for tau (lambda + 1/eps)
  bool retain_full_path = false;

  int num_steps() const;
  void validate() const;
  FlowParams flow_params() const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<SpectralField> states;
  // Per-step noise increments, only kept when retain_full_path is set;
  // increments[k] is the noise added over (times[k], times[k+1]].
  std::vector<SpectralField> increments;

  const SpectralField& final_state() const { return states.back(); }
};

// Reusable one-step engine with precomputed per-mode factors. Not shared
// between threads; each worker builds its own from the (immutable) config.
class Stepper {
public:
  Stepper(const RunConfig& config);

  // Advance coefficients by one step, sampling this step's noise from rng.
  void step(Eigen::VectorXd& coeffs, PathRng& rng);
  // Advance with an externally supplied noise increment (coupling).
  void step_with_increment(Eigen::VectorXd& coeffs,
                           const Eigen::VectorXd& increment);
  // The deterministic part only (flow/drift then semigroup).
  void deterministic_step(Eigen::VectorXd& coeffs);

  void sample_increment(Eigen::VectorXd& out, PathRng& rng);
  const Eigen::ArrayXd& conv_stddev() const { return conv_sd_; }
  double tau() const { return tau_; }

private:
  void apply_flow_grid();

  DomainPtr domain_;
  Scheme scheme_;
  double tau_;
  double delta_;
  FlowParams flow_;
  Eigen::ArrayXd decay_;    // exp(-(lambda_j + lambda) tau)
  Eigen::ArrayXd conv_sd_;  // convolution-increment stddev per mode
  Eigen::ArrayXd plain_sd_; // plain-increment stddev per mode
  // Cubic closed-form constants, precomputed at fixed tau.
  bool cubic_fast_ = false;
  double cf_c_ = 0.0, cf_b_ = 0.0, cf_e2_ = 1.0, cf_ratio_ = 0.0;
  Eigen::VectorXd grid_ws_, coeff_ws_;
};

// Single steps as free functions (spec-level surface; run() uses Stepper).
SpectralField step_splitting(const SpectralField& u, const RunConfig& config,
                             PathRng& rng);
SpectralField step_splitting_plain(const SpectralField& u,
                                   const RunConfig& config, PathRng& rng);
SpectralField step_tamed_exp_euler(const SpectralField& u,
                                   const RunConfig& config, PathRng& rng);

// Iterate the configured stepper from t = 0 to T. Records endpoints always;
// all intermediate states (and increments) when retain_full_path is set.
Trajectory run(const RunConfig& config, PathRng& rng);

// Streaming variant: observer(step_index, coeffs) after every step
// (step_index from 1 to N); nothing is stored.
void run_with_observer(
    const RunConfig& config, PathRng& rng,
    const std::function<void(int, const Eigen::VectorXd&)>& observer);

// Coarse and fine trajectories driven by one Brownian path via
// refine_convolution_increments; the fine chain at tau/ratio serves as the
// exact-solution surrogate in weak-error estimation.
std::pair<Trajectory, Trajectory> run_coupled_pair(
    const RunConfig& config_coarse, int refinement_ratio, PathRng& rng);

// Continuous interpolation inside step k: deterministic part exact, in-step
// stochastic integral approximated by the stored end-of-step increment
// scaled by the per-mode OU-bridge conditional mean.
SpectralField interpolate(const Trajectory& traj, const RunConfig& config,
                          double t);

void export_csv(const Trajectory& traj, const std::string& path);
void export_binary(const Trajectory& traj, const std::string& path);

}  // namespace sharpwave
