#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "sharpwave/ergodic.hpp"
#include "sharpwave/sensitivity.hpp"
#include "sharpwave/stats.hpp"

namespace sharpwave {

enum class Experiment {
  Simulate,
  WeakOrder,
  EpsScaling,
  ErgodicGap,
  Clt,
  Selftest
};

struct NamedObservable {
  std::string name;
  Observable obs;
};

// Everything an experiment run depends on, filled from a flat key=value
// config file plus command-line overrides.
struct ExperimentSpec {
  Experiment experiment = Experiment::Simulate;
  RunConfig base;

  // Raw knobs kept so the domain can be rebuilt (eps sweeps change lambda).
  int dim = 1;
  std::string bc = "dirichlet";
  int modes = 64;
  double lambda = 1.0;
  int grid_factor = 2;

  double initial_constant = 0.0;     // constant initial profile, projected
  bool delta_follows_tau = true;     // taming default policy delta = tau

  std::vector<double> taus;          // weak-order sweep cells, ascending
  std::vector<double> eps_values;    // eps sweep, descending
  int ref_ratio = 64;                // fine reference ratio for min(tau)
  std::vector<NamedObservable> observables;
  int paths = 1000;
  int threads = 1;

  double burn_in = 5.0;
  double horizon = 20.0;
  std::vector<double> gap_times;
  double gap_amplitude = 1.0;        // antipodal constant starts +-a
  double clt_T = 100.0;
  int replicates = 200;
  double gamma_label = 0.99;         // documentation-only regularity label
  bool variance_quadrature = false;
  int quad_x_samples = 8;
  int quad_inner_paths = 64;
  double quad_spacing = 2.0;
  bool sensitivity = false;          // add a sensitivity section to simulate

  std::uint64_t seed = 1;
  std::string out_dir = ".";

  void validate() const;
  // Rebuild base.domain from dim/bc/modes/lambda/grid_factor.
  void rebuild_domain();
};

// Flat key=value config text (lines, '#' comments). Unknown keys are
// rejected by name. Values of list keys are comma-separated.
ExperimentSpec parse_config_text(const std::string& text);
ExperimentSpec load_config(const std::string& path);

// Canonical serialization: every semantically meaningful field, one
// sorted key=value line each. The hash is FNV-1a over this text.
std::string canonical_config_text(const ExperimentSpec& spec);
std::uint64_t config_hash(const ExperimentSpec& spec);
std::uint64_t fnv1a(const std::string& text);

// Run fn(i) for i in [0, n) on up to `threads` workers. Work is claimed
// from a shared atomic counter; callers reduce per-index results in index
// order, so the outcome is thread-count independent.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

struct WeakOrderCell {
  double tau = 0.0;
  double error = 0.0;         // |E phi(coarse) - E phi(reference)|
  double ci_half = 0.0;       // CI of the coupled difference
  double mean_coarse = 0.0;
  double mean_ref = 0.0;
  bool used_in_fit = false;   // gap exceeds 3x CI half-width
};

struct WeakOrderResult {
  std::vector<WeakOrderCell> cells;
  stats::LinFit fit;              // log error vs log tau
  std::string status;             // "ok" | "inconclusive"
  std::vector<std::string> warnings;
  double tau_ref = 0.0;
  int paths = 0;
  double runtime_seconds = 0.0;
};

// Coupled weak-error cells sharing one fine reference path per sample:
// the reference runs at min(tau)/ref_ratio and every cell's increments are
// aggregates of the same fine increments, so each cell's effective
// refinement ratio is at least ref_ratio.
WeakOrderResult weak_order_sweep(const ExperimentSpec& spec);

struct EpsScalingCell {
  double epsilon = 0.0;
  double tau = 0.0;
  double error = 0.0;
  double ci_half = 0.0;
  bool used_in_fit = false;
};

struct EpsScalingResult {
  std::vector<EpsScalingCell> cells;
  double exponent = 0.0;        // slope of log error vs log(1/eps)
  double exponent_stderr = 0.0;
  double poly_ssr = 0.0;        // residual of log error ~ log(1/eps)
  double exp_ssr = 0.0;         // residual of log error ~ 1/eps
  bool poly_beats_exp = false;
  std::string status;
  std::vector<std::string> warnings;
  int paths = 0;
  double runtime_seconds = 0.0;
};

// Weak error against a ratio-ref_ratio coupled reference at each eps, with
// tau co-scaled so tau (lambda + 1/eps) is constant and eps lambda = 1.
EpsScalingResult eps_scaling_study(const ExperimentSpec& spec);

struct CheckResult {
  std::string name;      // module.operation
  bool pass = false;
  std::string expected;
  std::string got;
};

struct SelftestReport {
  std::vector<CheckResult> checks;
  bool all_pass = false;
  double runtime_seconds = 0.0;
};

// Closed-form and small-Monte-Carlo checks across all modules. The
// perturbation argument is a mutation hook: a nonzero value corrupts the
// semigroup constant used by the decay oracle check, which must then fail.
SelftestReport selftest(std::uint64_t seed = 1,
                        double semigroup_perturbation = 0.0);

// Projection of the constant function xi(x) = a onto the domain's basis.
SpectralField constant_field(DomainPtr domain, double a);

// Build the spec's named observable (factory by name).
Observable make_observable(const std::string& name, DomainPtr domain);

void write_csv(const std::string& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

}  // namespace sharpwave
