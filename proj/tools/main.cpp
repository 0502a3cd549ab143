#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "sharpwave/harness.hpp"

using nlohmann::json;
using namespace sharpwave;

namespace {

struct CommonOpts {
  std::string config_path;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  int paths = 0;    // 0 = keep config value
  int threads = 1;
  bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "flat key=value config file");
  cmd->add_option("--seed", o.seed, "master seed")->default_val(1);
  cmd->add_option("--out", o.out_dir, "output directory")->default_val(".");
  cmd->add_option("--paths", o.paths, "Monte Carlo path count override");
  cmd->add_option("--threads", o.threads, "worker thread count")
      ->default_val(1);
}

ExperimentSpec make_spec(const CommonOpts& o, Experiment experiment) {
  ExperimentSpec spec =
      o.config_path.empty() ? parse_config_text("") : load_config(o.config_path);
  spec.experiment = experiment;
  spec.seed = o.seed;
  spec.base.master_seed = o.seed;
  if (o.paths > 0) spec.paths = o.paths;
  spec.threads = std::max(1, o.threads);
  spec.out_dir = o.out_dir;
  std::filesystem::create_directories(spec.out_dir);
  return spec;
}

std::string hash_hex(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

json base_summary(const ExperimentSpec& spec) {
  json j;
  j["experiment"] = "";
  j["seed"] = spec.seed;
  j["config_hash"] = hash_hex(config_hash(spec));
  json cfg = json::object();
  std::stringstream ss(canonical_config_text(spec));
  std::string line;
  while (std::getline(ss, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos)
      cfg[line.substr(0, eq)] = line.substr(eq + 1);
  }
  j["config"] = cfg;
  j["warnings"] = json::array();
  return j;
}

void write_summary(const ExperimentSpec& spec, json& j, double runtime_s) {
  j["runtime_seconds"] = runtime_s;  // excluded from reproducibility claims
  std::ofstream out(spec.out_dir + "/summary.json");
  out << j.dump(2) << "\n";
}

json estimator_json(const EstimatorResult& r) {
  return {{"value", r.value},
          {"ci_half_width", r.ci_half_width},
          {"paths", r.paths}};
}

int cmd_simulate(const CommonOpts& o) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentSpec spec = make_spec(o, Experiment::Simulate);
  spec.base.retain_full_path = true;
  json j = base_summary(spec);
  j["experiment"] = "simulate";

  PathRng rng(spec.seed, 0);
  const Trajectory traj = run(spec.base, rng);
  export_csv(traj, spec.out_dir + "/trajectory.csv");
  export_binary(traj, spec.out_dir + "/trajectory.bin");

  const SpectralField& uN = traj.final_state();
  j["results"] = {{"steps", spec.base.num_steps()},
                  {"final_sup_norm", sup_norm(uN)},
                  {"final_l2_norm", sobolev_norm(uN, 0.0)},
                  {"final_h1_norm", sobolev_norm(uN, 1.0)}};

  if (spec.sensitivity) {
    const Observable& phi = spec.observables.front().obs;
    SpectralField h(spec.base.domain);
    h.coeffs[0] = 1.0;
    RunConfig scfg = spec.base;
    scfg.retain_full_path = false;
    scfg.scheme = Scheme::TamedExpEuler;  // exact pathwise tangent map
    if (scfg.delta <= 0.0) scfg.delta = scfg.tau;
    const SpectralField y = spec.base.initial.domain
                                ? spec.base.initial
                                : SpectralField(spec.base.domain);
    const int m = std::max(100, spec.paths);
    json sens;
    sens["pathwise_dX"] = estimator_json(estimate_dX(scfg, y, h, phi, m));
    sens["bel_dX"] = estimator_json(estimate_dX_bel(scfg, y, h, phi, m));
    sens["pathwise_d2X"] =
        estimator_json(estimate_d2X(scfg, y, h, h, phi, m));
    j["sensitivity"] = sens;
  }

  write_summary(spec, j,
                std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0)
                    .count());
  std::printf("simulate: %d steps, final sup-norm %.6g\n",
              spec.base.num_steps(), sup_norm(uN));
  return 0;
}

int cmd_weak_order(const CommonOpts& o) {
  ExperimentSpec spec = make_spec(o, Experiment::WeakOrder);
  if (spec.taus.empty())
    spec.taus = {1.0 / 256, 1.0 / 128, 1.0 / 64, 1.0 / 32, 1.0 / 16};
  std::sort(spec.taus.begin(), spec.taus.end());
  const WeakOrderResult res = weak_order_sweep(spec);

  std::vector<std::vector<double>> rows;
  for (const auto& c : res.cells)
    rows.push_back({c.tau, c.error, c.ci_half, c.mean_coarse, c.mean_ref,
                    c.used_in_fit ? 1.0 : 0.0});
  write_csv(spec.out_dir + "/weak_order.csv",
            {"tau", "weak_error", "ci_half", "mean_coarse", "mean_reference",
             "used_in_fit"},
            rows);

  json j = base_summary(spec);
  j["experiment"] = "weak-order";
  for (const auto& w : res.warnings) j["warnings"].push_back(w);
  json cells = json::array();
  for (const auto& c : res.cells)
    cells.push_back({{"tau", c.tau},
                     {"weak_error", c.error},
                     {"ci_half", c.ci_half},
                     {"paths", res.paths},
                     {"used_in_fit", c.used_in_fit}});
  j["results"] = {{"status", res.status},
                  {"slope", res.fit.slope},
                  {"slope_stderr", res.fit.slope_stderr},
                  {"r_squared", res.fit.r_squared},
                  {"tau_reference", res.tau_ref},
                  {"paths", res.paths},
                  {"cells", cells}};
  write_summary(spec, j, res.runtime_seconds);
  std::printf("weak-order: status %s, slope %.4f +- %.4f (%zu cells)\n",
              res.status.c_str(), res.fit.slope, res.fit.slope_stderr,
              res.cells.size());
  return res.status == "ok" ? 0 : 1;
}

int cmd_eps_scaling(const CommonOpts& o) {
  ExperimentSpec spec = make_spec(o, Experiment::EpsScaling);
  if (spec.eps_values.empty()) spec.eps_values = {1.0, 0.5, 0.25, 0.125};
  const EpsScalingResult res = eps_scaling_study(spec);

  std::vector<std::vector<double>> rows;
  for (const auto& c : res.cells)
    rows.push_back({c.epsilon, c.tau, c.error, c.ci_half,
                    c.used_in_fit ? 1.0 : 0.0});
  write_csv(spec.out_dir + "/eps_scaling.csv",
            {"epsilon", "tau", "weak_error", "ci_half", "used_in_fit"}, rows);

  json j = base_summary(spec);
  j["experiment"] = "eps-scaling";
  for (const auto& w : res.warnings) j["warnings"].push_back(w);
  json cells = json::array();
  for (const auto& c : res.cells)
    cells.push_back({{"epsilon", c.epsilon},
                     {"tau", c.tau},
                     {"weak_error", c.error},
                     {"ci_half", c.ci_half},
                     {"paths", res.paths},
                     {"used_in_fit", c.used_in_fit}});
  j["results"] = {{"status", res.status},
                  {"exponent", res.exponent},
                  {"exponent_stderr", res.exponent_stderr},
                  {"poly_ssr", res.poly_ssr},
                  {"exp_ssr", res.exp_ssr},
                  {"poly_beats_exp", res.poly_beats_exp},
                  {"paths", res.paths},
                  {"cells", cells}};
  write_summary(spec, j, res.runtime_seconds);
  std::printf(
      "eps-scaling: status %s, exponent %.4f, poly ssr %.4g vs exp ssr "
      "%.4g\n",
      res.status.c_str(), res.exponent, res.poly_ssr, res.exp_ssr);
  return (res.status == "ok" && res.poly_beats_exp) ? 0 : 1;
}

int cmd_ergodic_gap(const CommonOpts& o) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentSpec spec = make_spec(o, Experiment::ErgodicGap);
  if (spec.gap_times.empty()) {
    // Log-spaced grid snapped to the step size: the coupling gap decays
    // exponentially, so most of the signal sits at early times.
    double t = spec.horizon;
    std::vector<double> rev;
    while (t >= 2.0 * spec.base.tau) {
      rev.push_back(std::llround(t / spec.base.tau) * spec.base.tau);
      t /= 1.6;
    }
    for (auto it = rev.rbegin(); it != rev.rend(); ++it)
      if (spec.gap_times.empty() || *it > spec.gap_times.back())
        spec.gap_times.push_back(*it);
  }
  const Observable& phi = spec.observables.front().obs;
  const SpectralField x1 = constant_field(spec.base.domain, spec.gap_amplitude);
  const SpectralField x2 =
      constant_field(spec.base.domain, -spec.gap_amplitude);
  const GapCurve curve = ergodic_gap_curve(spec.base, x1, x2, phi,
                                           spec.gap_times, spec.paths);

  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < curve.times.size(); ++i)
    rows.push_back({curve.times[i], curve.gaps[i], curve.ci_half[i]});
  write_csv(spec.out_dir + "/ergodic_gap.csv", {"time", "gap", "ci_half"},
            rows);

  json j = base_summary(spec);
  j["experiment"] = "ergodic-gap";
  json pts = json::array();
  for (std::size_t i = 0; i < curve.times.size(); ++i)
    pts.push_back({{"time", curve.times[i]},
                   {"gap", curve.gaps[i]},
                   {"ci_half", curve.ci_half[i]},
                   {"paths", spec.paths}});
  j["ergodic"] = {{"decay_rate", curve.omega1_hat},
                  {"prefactor", curve.omega2_hat},
                  {"r_squared", curve.r_squared},
                  {"fit_points", curve.fit_points},
                  {"paths", spec.paths},
                  {"points", pts}};
  j["results"] = j["ergodic"];
  write_summary(spec, j,
                std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0)
                    .count());
  std::printf("ergodic-gap: decay rate %.4f, R^2 %.4f, %d fit points\n",
              curve.omega1_hat, curve.r_squared, curve.fit_points);
  return 0;
}

int cmd_clt(const CommonOpts& o) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentSpec spec = make_spec(o, Experiment::Clt);
  const Observable& phi = spec.observables.front().obs;

  const auto mu = estimate_invariant_mean(spec.base, phi, spec.burn_in,
                                          spec.horizon, spec.paths);
  const CltResult clt =
      clt_experiment(spec.base, phi, spec.clt_T, spec.replicates, mu.mean,
                     spec.burn_in, spec.gamma_label);

  std::vector<std::vector<double>> rows;
  for (double z : clt.z_samples) rows.push_back({z});
  write_csv(spec.out_dir + "/clt_samples.csv", {"z"}, rows);

  json j = base_summary(spec);
  j["experiment"] = "clt";
  j["clt"] = {{"replicates", spec.replicates},
              {"window_T", spec.clt_T},
              {"mu_phi", mu.mean},
              {"mu_phi_ci_half", mu.half_width},
              {"variance", clt.variance_estimate},
              {"ks_statistic", clt.ks_statistic},
              {"ks_pvalue", clt.ks_pvalue},
              {"hypothesis_rule_1", clt.hypothesis_rule_1},
              {"hypothesis_rule_2", clt.hypothesis_rule_2}};
  if (clt.hypothesis_warning)
    j["warnings"].push_back(
        "CLT hypothesis rule violated: step size too coarse for the "
        "requested epsilon/gamma regime");

  if (spec.variance_quadrature) {
    const double var_quad = poisson_variance_quadrature(
        spec.base, phi, mu.mean, spec.quad_x_samples, spec.quad_inner_paths,
        spec.horizon, spec.quad_spacing, spec.burn_in);
    const SpectralField x0 = spec.base.initial.domain
                                 ? spec.base.initial
                                 : SpectralField(spec.base.domain);
    const auto poisson =
        estimate_poisson(spec.base, phi, x0,
                         {spec.horizon / 2.0, spec.horizon}, mu.mean,
                         std::max(100, spec.paths / 10));
    j["poisson"] = {{"value", poisson.value},
                    {"ci_half_width", poisson.ci_half_width},
                    {"variance_quadrature", var_quad},
                    {"horizon_warning", poisson.horizon_warning}};
    if (poisson.horizon_warning)
      j["warnings"].push_back(
          "Poisson horizon truncation not Cauchy-close; extend horizon");
  }
  j["results"] = j["clt"];
  write_summary(spec, j,
                std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0)
                    .count());
  std::printf("clt: variance %.6g, KS p-value %.4f over %d replicates\n",
              clt.variance_estimate, clt.ks_pvalue, spec.replicates);
  return 0;
}

int cmd_selftest(const CommonOpts& o, double mutate_semigroup) {
  ExperimentSpec spec = make_spec(o, Experiment::Selftest);
  const SelftestReport rep = selftest(spec.seed, mutate_semigroup);
  json j = base_summary(spec);
  j["experiment"] = "selftest";
  json checks = json::array();
  for (const auto& c : rep.checks) {
    std::printf("[%s] %s: expected %s, got %s\n", c.pass ? "PASS" : "FAIL",
                c.name.c_str(), c.expected.c_str(), c.got.c_str());
    checks.push_back({{"name", c.name},
                      {"pass", c.pass},
                      {"expected", c.expected},
                      {"got", c.got}});
  }
  j["results"] = {{"all_pass", rep.all_pass}, {"checks", checks}};
  write_summary(spec, j, rep.runtime_seconds);
  std::printf("selftest: %s (%zu checks, %.1f s)\n",
              rep.all_pass ? "all pass" : "FAILURES", rep.checks.size(),
              rep.runtime_seconds);
  return rep.all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "sharpwave: spectral-Galerkin simulator and Monte Carlo verification "
      "harness for stochastic reaction-diffusion equations"};
  app.require_subcommand(1);

  CommonOpts o;
  double mutate_semigroup = 0.0;
  auto* sim = app.add_subcommand("simulate", "integrate one trajectory");
  auto* weak = app.add_subcommand("weak-order", "weak-error sweep over tau");
  auto* eps = app.add_subcommand("eps-scaling",
                                 "weak-error growth as eps decreases");
  auto* gap = app.add_subcommand("ergodic-gap",
                                 "two-start coupling gap decay");
  auto* clt = app.add_subcommand("clt", "normalized time-average statistics");
  auto* self = app.add_subcommand("selftest", "closed-form sanity checks");
  for (auto* cmd : {sim, weak, eps, gap, clt, self}) add_common(cmd, o);
  self->add_option("--mutate-semigroup", mutate_semigroup,
                   "perturb the semigroup constant (mutation hook; any "
                   "nonzero value must produce a named failure)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(o);
    if (weak->parsed()) return cmd_weak_order(o);
    if (eps->parsed()) return cmd_eps_scaling(o);
    if (gap->parsed()) return cmd_ergodic_gap(o);
    if (clt->parsed()) return cmd_clt(o);
    if (self->parsed()) return cmd_selftest(o, mutate_semigroup);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
