// Command-line front end: instance generation, bound construction, policy
// certification, experiment orchestration, and family feasibility audits.
#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "pwmbound/errors.hpp"
#include "pwmbound/experiment.hpp"
#include "pwmbound/instance_io.hpp"
#include "pwmbound/lmi_assembly.hpp"

namespace {

using namespace pwmbound;

// Flag values that override whatever the config file or preset provided.
struct Overrides {
  std::optional<std::string> instance, out_dir, init, init_family, policy;
  std::optional<int> nx, nu, samples, max_functions, max_outer, snapshot_every,
      phase2_functions, rollouts, horizon, audit_samples, sdp_max_iter;
  std::optional<double> eps_in, eps_out, norm_cap, feas_tol, gap_tol;
  std::optional<std::uint64_t> instance_seed, sample_seed, rollout_seed, audit_seed;
  bool no_refine = false;
  bool no_convex_p = false;
  bool compact = false;

  void apply(ExperimentConfig& c) const {
    if (instance) c.instance_path = *instance;
    if (out_dir) c.out_dir = *out_dir;
    if (init) c.init = *init;
    if (init_family) c.init_family_path = *init_family;
    if (policy) c.policy = *policy;
    if (nx) c.nx = *nx;
    if (nu) c.nu = *nu;
    if (samples) c.n_samples = *samples;
    if (max_functions) c.max_functions = *max_functions;
    if (max_outer) c.max_outer = *max_outer;
    if (snapshot_every) c.snapshot_every = *snapshot_every;
    if (phase2_functions) c.phase2_functions = *phase2_functions;
    if (rollouts) c.n_rollouts = *rollouts;
    if (horizon) c.horizon = *horizon;
    if (audit_samples) c.audit_samples = *audit_samples;
    if (sdp_max_iter) c.solver.max_iter = *sdp_max_iter;
    if (eps_in) c.eps_in = *eps_in;
    if (eps_out) c.eps_out = *eps_out;
    if (norm_cap) c.norm_cap = *norm_cap;
    if (feas_tol) c.solver.feas_tol = *feas_tol;
    if (gap_tol) c.solver.gap_tol = *gap_tol;
    if (instance_seed) c.instance_seed = *instance_seed;
    if (sample_seed) c.sample_seed = *sample_seed;
    if (rollout_seed) c.rollout_seed = *rollout_seed;
    if (audit_seed) c.audit_seed = *audit_seed;
    if (no_refine) c.refine = false;
    if (no_convex_p) c.convex_P = false;
    if (compact) c.compact = true;
  }
};

void add_run_options(CLI::App* sub, Overrides& o, std::string& config_path,
                     std::string& preset) {
  auto* cfg = sub->add_option("--config", config_path, "experiment config JSON");
  sub->add_option("--preset", preset, "built-in preset: cdc-1d, rand-4d, rand-10d")
      ->excludes(cfg);
  sub->add_option("--instance", o.instance, "instance JSON to run on");
  sub->add_option("--out-dir", o.out_dir, "directory for run artifacts");
  sub->add_option("--nx", o.nx, "generated instance state dimension");
  sub->add_option("--nu", o.nu, "generated instance input dimension");
  sub->add_option("--instance-seed", o.instance_seed, "instance generator seed");
  sub->add_option("--samples", o.samples, "number of state samples");
  sub->add_option("--sample-seed", o.sample_seed, "state sampling seed");
  sub->add_option("--max-functions", o.max_functions, "cap on generated members");
  sub->add_option("--max-outer", o.max_outer, "cap on outer sweeps");
  sub->add_option("--eps-in", o.eps_in, "refinement stopping tolerance");
  sub->add_option("--eps-out", o.eps_out, "outer stopping tolerance (<0: auto)");
  sub->add_flag("--no-refine", o.no_refine, "skip candidate refinement");
  sub->add_option("--init", o.init, "initial family: zero | single-bi | family");
  sub->add_option("--init-family", o.init_family, "family JSON for --init family");
  sub->add_flag("--no-convex-p", o.no_convex_p, "drop the curvature restriction");
  sub->add_option("--norm-cap", o.norm_cap, "norm cap on coefficients (0: off)");
  sub->add_option("--snapshot-every", o.snapshot_every,
                  "write a family snapshot every k members");
  sub->add_option("--phase2-functions", o.phase2_functions,
                  "extra members in a second conditioned phase");
  sub->add_flag("--compact", o.compact, "drop dominated members after the run");
  sub->add_option("--audit-samples", o.audit_samples, "feasibility audit samples");
  sub->add_option("--audit-seed", o.audit_seed, "feasibility audit seed");
  sub->add_option("--feas-tol", o.feas_tol, "interior-point feasibility tolerance");
  sub->add_option("--gap-tol", o.gap_tol, "interior-point gap tolerance");
  sub->add_option("--sdp-max-iter", o.sdp_max_iter, "interior-point iteration cap");
}

ExperimentConfig build_config(const std::string& config_path, const std::string& preset,
                              const Overrides& o) {
  ExperimentConfig c;
  if (!config_path.empty())
    c = load_config(config_path);
  else if (!preset.empty())
    c = preset_config(preset);
  o.apply(c);
  validate(c);
  return c;
}

void print_result(const ExperimentResult& r) {
  std::printf("instance: nx=%d nu=%d\n", r.instance.nx(), r.instance.nu());
  std::printf("members: %d  sweeps: %d  stop: %s\n", r.bound.functions_generated,
              static_cast<int>(r.bound.sweep_f.size()) - 1, to_string(r.bound.stop));
  std::printf("sampled objective: %s\n", format_g17(r.bound.sweep_f.back()).c_str());
  std::printf("single-bi baseline: %s\n", format_g17(r.single_bi_objective).c_str());
  std::printf("audit max violation: %s\n", format_g17(r.max_audit_violation).c_str());
  if (r.gap) {
    std::printf("lower bound: %s\n", format_g17(r.gap->lower_bound).c_str());
    std::printf("policy cost: %s (stderr %s)\n", format_g17(r.gap->policy_cost).c_str(),
                format_g17(r.gap->policy_cost_stderr).c_str());
    std::printf("gap: %.4g%%\n", 100.0 * r.gap->gap_fraction);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"certified lower bounds for box-constrained LQ control"};
  app.require_subcommand(1);
  int exit_code = 0;

  // gen -----------------------------------------------------------------
  auto* gen = app.add_subcommand("gen", "generate an instance file");
  std::string gen_out, gen_preset;
  std::optional<int> gen_nx, gen_nu;
  std::optional<std::uint64_t> gen_seed;
  gen->add_option("--out", gen_out, "instance JSON to write")->required();
  gen->add_option("--preset", gen_preset, "cdc-1d, rand-4d, or rand-10d");
  gen->add_option("--nx", gen_nx, "state dimension");
  gen->add_option("--nu", gen_nu, "input dimension");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->callback([&] {
    ExperimentConfig c;
    if (!gen_preset.empty()) c = preset_config(gen_preset);
    if (gen_nx) c.nx = *gen_nx;
    if (gen_nu) c.nu = *gen_nu;
    if (gen_seed) c.instance_seed = *gen_seed;
    const LQProblem inst = resolve_instance(c);
    save_instance(inst, gen_out);
    std::printf("wrote %s (nx=%d nu=%d)\n", gen_out.c_str(), inst.nx(), inst.nu());
  });

  // bound ---------------------------------------------------------------
  auto* bound = app.add_subcommand("bound", "build a lower-bounding family");
  std::string bound_config, bound_preset;
  Overrides bound_o;
  add_run_options(bound, bound_o, bound_config, bound_preset);
  bound->callback([&] {
    ExperimentConfig c = build_config(bound_config, bound_preset, bound_o);
    c.n_rollouts = 0;
    print_result(run(c));
  });

  // experiment ----------------------------------------------------------
  auto* exp = app.add_subcommand("experiment", "full bound + certification pipeline");
  std::string exp_config, exp_preset;
  Overrides exp_o;
  add_run_options(exp, exp_o, exp_config, exp_preset);
  exp->add_option("--policy", exp_o.policy, "certified policy: clipped-lqr | greedy");
  exp->add_option("--rollouts", exp_o.rollouts, "certification rollouts (0: skip)");
  exp->add_option("--horizon", exp_o.horizon, "rollout horizon (<=0: auto)");
  exp->add_option("--rollout-seed", exp_o.rollout_seed, "certification seed");
  exp->callback([&] {
    print_result(run(build_config(exp_config, exp_preset, exp_o)));
  });

  // certify -------------------------------------------------------------
  auto* cert = app.add_subcommand("certify", "certify a policy against a family");
  std::string cert_instance, cert_family, cert_policy = "clipped-lqr", cert_out;
  int cert_rollouts = 5000, cert_horizon = 0;
  std::uint64_t cert_seed = 3;
  cert->add_option("--instance", cert_instance, "instance JSON")->required();
  cert->add_option("--family", cert_family, "family JSON")->required();
  cert->add_option("--policy", cert_policy, "clipped-lqr | greedy");
  cert->add_option("--rollouts", cert_rollouts, "number of rollouts");
  cert->add_option("--horizon", cert_horizon, "rollout horizon (<=0: auto)");
  cert->add_option("--seed", cert_seed, "rollout seed");
  cert->add_option("--out", cert_out, "gap report JSON to write");
  cert->callback([&] {
    const LQProblem inst = load_instance(cert_instance);
    const VFFamily family = load_family(cert_family);
    Policy policy;
    if (cert_policy == "clipped-lqr")
      policy = clipped_lqr_policy(inst);
    else if (cert_policy == "greedy")
      policy = greedy_policy(inst, family);
    else
      throw ConfigError("policy must be one of: clipped-lqr, greedy");
    const GapReport rep = certify(inst, family, policy, cert_rollouts, cert_horizon,
                                  cert_seed);
    std::printf("lower bound: %s\n", format_g17(rep.lower_bound).c_str());
    std::printf("policy cost: %s (stderr %s)\n", format_g17(rep.policy_cost).c_str(),
                format_g17(rep.policy_cost_stderr).c_str());
    std::printf("gap: %.4g%%  rollouts: %d  horizon: %d\n", 100.0 * rep.gap_fraction,
                rep.n_rollouts, rep.horizon);
    if (!cert_out.empty()) save_gap_report(rep, cert_out);
  });

  // audit ---------------------------------------------------------------
  auto* audit = app.add_subcommand("audit", "feasibility-check a family file");
  std::string audit_instance, audit_family;
  int audit_n = 10000;
  std::uint64_t audit_seed_v = 4;
  double audit_tol = 1e-6;
  audit->add_option("--instance", audit_instance, "instance JSON")->required();
  audit->add_option("--family", audit_family, "family JSON")->required();
  audit->add_option("--samples", audit_n, "audit sample count");
  audit->add_option("--seed", audit_seed_v, "audit seed");
  audit->add_option("--tol", audit_tol, "largest acceptable violation");
  audit->callback([&] {
    const LQProblem inst = load_instance(audit_instance);
    const VFFamily family = load_family(audit_family);
    const Eigen::VectorXd viol = feasibility_audit_family(inst, family, audit_n,
                                                          audit_seed_v);
    const double worst = viol.maxCoeff();
    std::printf("members: %d  max violation: %s  tol: %s\n",
                static_cast<int>(family.size()), format_g17(worst).c_str(),
                format_g17(audit_tol).c_str());
    if (worst > audit_tol) {
      std::fprintf(stderr, "audit: family violates the inequality beyond tol\n");
      exit_code = 4;
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const pwmbound::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const pwmbound::SolverError& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return exit_code;
}
