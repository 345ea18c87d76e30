#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "pwmbound/lq_model.hpp"
#include "pwmbound/policy_eval.hpp"
#include "pwmbound/pwm_algorithms.hpp"

namespace pwmbound {

// Everything a bound/certify run needs, serializable to JSON so runs are
// reproducible from a single file.  Seeds have fixed defaults; no entropy is
// ever pulled from the environment.
struct ExperimentConfig {
  std::string preset;             // "cdc-1d" selects the built-in study instance
  std::string instance_path;      // empty: generate from (nx, nu, instance_seed)
  int nx = 1;
  int nu = 1;
  std::uint64_t instance_seed = 1;

  int n_samples = 10000;
  std::uint64_t sample_seed = 2;

  int max_functions = 1000;
  int max_outer = 100;
  double eps_in = 1e-3;
  double eps_out = -1;            // < 0: auto-scale from the starting objective
  bool refine = true;
  std::string init = "single-bi"; // "zero" | "single-bi" | "family"
  std::string init_family_path;   // required when init == "family"
  bool convex_P = true;
  double norm_cap = 0;
  int snapshot_every = 0;         // > 0: family snapshot every k members
  int phase2_functions = 0;       // > 0: second run conditioned on the first
  bool compact = false;           // drop dominated members after the run
  int occupancy_reweight_iters = 0;  // reserved; must stay 0

  std::string policy = "clipped-lqr";  // "clipped-lqr" | "greedy"
  int n_rollouts = 5000;
  int horizon = 0;                // <= 0: auto from gamma
  std::uint64_t rollout_seed = 3;
  std::uint64_t audit_seed = 4;
  int audit_samples = 10000;

  SdpOptions solver{1e-9, 1e-9, 200, false};
  std::string out_dir;
};

// Throws ConfigError on out-of-range values or unimplemented hooks.
void validate(const ExperimentConfig& cfg);

ExperimentConfig load_config(const std::string& path);
void save_config(const ExperimentConfig& cfg, const std::string& path);

// Known presets: "cdc-1d" (the 1-D study), "rand-4d", "rand-10d".
ExperimentConfig preset_config(const std::string& name);

// Random instance: A scaled to unit spectral radius, Gaussian B_u, identity
// state/input costs, gamma 0.99, unit input box, x0 ~ N(0, 9 I), no noise.
LQProblem generate_instance(int nx, int nu, std::uint64_t seed);

// The instance a config runs on: instance_path when set, the built-in
// single-state study instance for preset "cdc-1d", else generate_instance.
LQProblem resolve_instance(const ExperimentConfig& cfg);

struct ExperimentResult {
  LQProblem instance;
  OuterResult bound;
  std::optional<GapReport> gap;  // absent when n_rollouts == 0
  double single_bi_objective = 0;
  double max_audit_violation = 0;
};

// Full pipeline: load/generate instance, initialize families, run the outer
// loop (optionally a second conditioned phase), audit every member, certify.
// Writes instance echo, config echo, trace CSVs, family files, and the gap
// report into cfg.out_dir when it is non-empty.
ExperimentResult run(const ExperimentConfig& cfg);

}  // namespace pwmbound
