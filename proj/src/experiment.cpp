#include "pwmbound/experiment.hpp"

#include <Eigen/Eigenvalues>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <random>
#include <set>

#include "pwmbound/errors.hpp"
#include "pwmbound/instance_io.hpp"
#include "pwmbound/lmi_assembly.hpp"
#include "pwmbound/rng.hpp"
#include "pwmbound/sample_set.hpp"

namespace pwmbound {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

void validate(const ExperimentConfig& cfg) {
  if (cfg.instance_path.empty() && cfg.preset != "cdc-1d" && (cfg.nx < 1 || cfg.nu < 1))
    throw ConfigError("generated instances need nx >= 1 and nu >= 1");
  if (cfg.n_samples < 1) throw ConfigError("n_samples must be positive");
  if (cfg.max_functions < 1) throw ConfigError("max_functions must be positive");
  if (cfg.max_outer < 1) throw ConfigError("max_outer must be positive");
  if (cfg.eps_in <= 0) throw ConfigError("eps_in must be positive");
  if (cfg.init != "zero" && cfg.init != "single-bi" && cfg.init != "family")
    throw ConfigError("init must be one of: zero, single-bi, family");
  if (cfg.init == "family" && cfg.init_family_path.empty())
    throw ConfigError("init == family requires init_family_path");
  if (cfg.norm_cap < 0) throw ConfigError("norm_cap must be non-negative");
  if (cfg.snapshot_every < 0) throw ConfigError("snapshot_every must be non-negative");
  if (cfg.phase2_functions < 0) throw ConfigError("phase2_functions must be non-negative");
  if (cfg.occupancy_reweight_iters != 0)
    throw ConfigError("occupancy_reweight_iters is reserved and must stay 0");
  if (cfg.policy != "clipped-lqr" && cfg.policy != "greedy")
    throw ConfigError("policy must be one of: clipped-lqr, greedy");
  if (cfg.n_rollouts != 0 && cfg.n_rollouts < 2)
    throw ConfigError("n_rollouts must be 0 (skip) or at least 2");
  if (cfg.audit_samples < 0) throw ConfigError("audit_samples must be non-negative");
  if (cfg.solver.feas_tol <= 0 || cfg.solver.gap_tol <= 0)
    throw ConfigError("solver tolerances must be positive");
  if (cfg.solver.max_iter < 1) throw ConfigError("solver max_iter must be positive");
}

namespace {

const std::set<std::string> kConfigKeys = {
    "preset",         "instance_path", "nx",
    "nu",             "instance_seed", "n_samples",
    "sample_seed",    "max_functions", "max_outer",
    "eps_in",         "eps_out",       "refine",
    "init",           "init_family_path", "convex_P",
    "norm_cap",       "snapshot_every", "phase2_functions",
    "compact",        "occupancy_reweight_iters", "policy",
    "n_rollouts",     "horizon",       "rollout_seed",
    "audit_seed",     "audit_samples", "solver",
    "out_dir"};

template <typename T>
void maybe(const json& j, const char* key, T& into) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    into = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config field has wrong type: ") + key);
  }
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open: " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw ConfigError("bad JSON in " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!kConfigKeys.count(key)) throw ConfigError("unknown config field: " + key);

  ExperimentConfig cfg;
  std::string preset;
  maybe(j, "preset", preset);
  if (!preset.empty()) cfg = preset_config(preset);
  maybe(j, "instance_path", cfg.instance_path);
  maybe(j, "nx", cfg.nx);
  maybe(j, "nu", cfg.nu);
  maybe(j, "instance_seed", cfg.instance_seed);
  maybe(j, "n_samples", cfg.n_samples);
  maybe(j, "sample_seed", cfg.sample_seed);
  maybe(j, "max_functions", cfg.max_functions);
  maybe(j, "max_outer", cfg.max_outer);
  maybe(j, "eps_in", cfg.eps_in);
  maybe(j, "eps_out", cfg.eps_out);
  maybe(j, "refine", cfg.refine);
  maybe(j, "init", cfg.init);
  maybe(j, "init_family_path", cfg.init_family_path);
  maybe(j, "convex_P", cfg.convex_P);
  maybe(j, "norm_cap", cfg.norm_cap);
  maybe(j, "snapshot_every", cfg.snapshot_every);
  maybe(j, "phase2_functions", cfg.phase2_functions);
  maybe(j, "compact", cfg.compact);
  maybe(j, "occupancy_reweight_iters", cfg.occupancy_reweight_iters);
  maybe(j, "policy", cfg.policy);
  maybe(j, "n_rollouts", cfg.n_rollouts);
  maybe(j, "horizon", cfg.horizon);
  maybe(j, "rollout_seed", cfg.rollout_seed);
  maybe(j, "audit_seed", cfg.audit_seed);
  maybe(j, "audit_samples", cfg.audit_samples);
  maybe(j, "out_dir", cfg.out_dir);
  if (j.count("solver")) {
    const json& s = j["solver"];
    if (!s.is_object()) throw ConfigError("config field solver must be an object");
    for (const auto& [key, _] : s.items())
      if (key != "feas_tol" && key != "gap_tol" && key != "max_iter" && key != "verbose")
        throw ConfigError("unknown solver field: " + key);
    maybe(s, "feas_tol", cfg.solver.feas_tol);
    maybe(s, "gap_tol", cfg.solver.gap_tol);
    maybe(s, "max_iter", cfg.solver.max_iter);
    maybe(s, "verbose", cfg.solver.verbose);
  }
  validate(cfg);
  return cfg;
}

void save_config(const ExperimentConfig& cfg, const std::string& path) {
  ordered_json j;
  j["preset"] = cfg.preset;
  j["instance_path"] = cfg.instance_path;
  j["nx"] = cfg.nx;
  j["nu"] = cfg.nu;
  j["instance_seed"] = cfg.instance_seed;
  j["n_samples"] = cfg.n_samples;
  j["sample_seed"] = cfg.sample_seed;
  j["max_functions"] = cfg.max_functions;
  j["max_outer"] = cfg.max_outer;
  j["eps_in"] = cfg.eps_in;
  j["eps_out"] = cfg.eps_out;
  j["refine"] = cfg.refine;
  j["init"] = cfg.init;
  j["init_family_path"] = cfg.init_family_path;
  j["convex_P"] = cfg.convex_P;
  j["norm_cap"] = cfg.norm_cap;
  j["snapshot_every"] = cfg.snapshot_every;
  j["phase2_functions"] = cfg.phase2_functions;
  j["compact"] = cfg.compact;
  j["occupancy_reweight_iters"] = cfg.occupancy_reweight_iters;
  j["policy"] = cfg.policy;
  j["n_rollouts"] = cfg.n_rollouts;
  j["horizon"] = cfg.horizon;
  j["rollout_seed"] = cfg.rollout_seed;
  j["audit_seed"] = cfg.audit_seed;
  j["audit_samples"] = cfg.audit_samples;
  j["solver"] = {{"feas_tol", cfg.solver.feas_tol},
                 {"gap_tol", cfg.solver.gap_tol},
                 {"max_iter", cfg.solver.max_iter},
                 {"verbose", cfg.solver.verbose}};
  j["out_dir"] = cfg.out_dir;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open for writing: " + path);
  os << j.dump(2) << "\n";
}

ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig cfg;
  cfg.preset = name;
  if (name == "cdc-1d") {
    cfg.n_samples = 10000;
    cfg.max_functions = 1000;
    cfg.init = "single-bi";
    cfg.policy = "clipped-lqr";
    cfg.n_rollouts = 5000;
    return cfg;
  }
  if (name == "rand-4d") {
    cfg.nx = 4;
    cfg.nu = 2;
    cfg.n_samples = 2000;
    cfg.max_functions = 50;
    cfg.init = "single-bi";
    return cfg;
  }
  if (name == "rand-10d") {
    cfg.nx = 10;
    cfg.nu = 3;
    cfg.n_samples = 2000;
    cfg.max_functions = 50;
    cfg.init = "single-bi";
    return cfg;
  }
  throw ConfigError("unknown preset: " + name);
}

namespace {

LQProblem cdc_1d_instance() {
  LQProblem p;
  p.A = Eigen::MatrixXd::Constant(1, 1, 1.0);
  p.B_u = Eigen::MatrixXd::Constant(1, 1, -0.5);
  p.B_xi = Eigen::MatrixXd::Zero(1, 1);
  p.L = Eigen::Vector3d(1.0, 0.1, 0.0).asDiagonal();
  p.gamma = 0.95;
  p.u_lo = Eigen::VectorXd::Constant(1, -1.0);
  p.u_hi = Eigen::VectorXd::Constant(1, 1.0);
  p.xi_mean = Eigen::VectorXd::Zero(1);
  p.xi_second = Eigen::MatrixXd::Identity(1, 1);
  p.x0_mean = Eigen::VectorXd::Zero(1);
  p.x0_cov = Eigen::MatrixXd::Constant(1, 1, 10.0);
  return p;
}

}  // namespace

LQProblem generate_instance(int nx, int nu, std::uint64_t seed) {
  if (nx < 1 || nu < 1) throw ConfigError("generate_instance: nx and nu must be positive");
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  LQProblem p;
  p.A.resize(nx, nx);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < nx; ++j) p.A(i, j) = normal(rng);
  const Eigen::VectorXcd eigs = Eigen::EigenSolver<Eigen::MatrixXd>(p.A, false).eigenvalues();
  const double radius = eigs.cwiseAbs().maxCoeff();
  if (radius > 1e-12) p.A /= radius;
  p.B_u.resize(nx, nu);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < nu; ++j) p.B_u(i, j) = normal(rng);
  p.B_xi = Eigen::MatrixXd::Zero(nx, 0);
  const int d = nx + nu + 1;
  p.L = Eigen::MatrixXd::Identity(d, d);
  p.L(d - 1, d - 1) = 0.0;
  p.gamma = 0.99;
  p.u_lo = Eigen::VectorXd::Constant(nu, -1.0);
  p.u_hi = Eigen::VectorXd::Constant(nu, 1.0);
  p.xi_mean = Eigen::VectorXd::Zero(0);
  p.xi_second = Eigen::MatrixXd::Zero(0, 0);
  p.x0_mean = Eigen::VectorXd::Zero(nx);
  p.x0_cov = 9.0 * Eigen::MatrixXd::Identity(nx, nx);
  validate(p);
  return p;
}

LQProblem resolve_instance(const ExperimentConfig& cfg) {
  if (!cfg.instance_path.empty()) return load_instance(cfg.instance_path);
  if (cfg.preset == "cdc-1d") return cdc_1d_instance();
  return generate_instance(cfg.nx, cfg.nu, cfg.instance_seed);
}

namespace {

// Splices a continuation run onto an earlier one: sweep numbers, member
// indices and cumulative times continue where the first run stopped.
void append_phase(OuterResult& main, OuterResult&& extra) {
  const int sweep_off = static_cast<int>(main.sweep_f.size()) - 1;
  const int func_off = main.functions_generated;
  const double cum_off = main.sdp_log.empty() ? 0.0 : main.sdp_log.back().cum_ms;
  for (auto& row : extra.rows) {
    row.outer_iter += sweep_off;
    main.rows.push_back(row);
  }
  for (size_t i = 1; i < extra.sweep_f.size(); ++i) main.sweep_f.push_back(extra.sweep_f[i]);
  for (auto& row : extra.sdp_log) {
    row.function_idx += func_off;
    row.cum_ms += cum_off;
    main.sdp_log.push_back(row);
  }
  main.functions_generated += extra.functions_generated;
  main.a_obj = std::move(extra.a_obj);
  main.a_con = std::move(extra.a_con);
  main.stop = extra.stop;
}

}  // namespace

ExperimentResult run(const ExperimentConfig& cfg) {
  validate(cfg);
  ExperimentResult result;

  result.instance = resolve_instance(cfg);
  const LQProblem& inst = result.instance;

  const bool writing = !cfg.out_dir.empty();
  fs::path out;
  if (writing) {
    out = fs::path(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw ConfigError("cannot create out_dir: " + cfg.out_dir);
    save_config(cfg, (out / "config.json").string());
    save_instance(inst, (out / "instance.json").string());
  }

  SampleSet samples = SampleSet::draw(inst, cfg.n_samples, cfg.sample_seed);

  BellmanSdpOptions lmi;
  lmi.convex_P = cfg.convex_P;
  lmi.norm_cap = cfg.norm_cap;

  // baseline: one self-conditioned quadratic against the sample moments
  const SingleBellmanResult baseline = single_bellman_lp(inst, samples, lmi, cfg.solver);
  result.single_bi_objective = baseline.objective;

  VFFamily a_obj;
  if (cfg.init == "zero") {
    a_obj.push_back(zero_vf(inst.nx()));
  } else if (cfg.init == "single-bi") {
    a_obj.push_back(baseline.vf);
  } else {
    a_obj = load_family(cfg.init_family_path);
    for (const auto& vf : a_obj)
      if (vf.dim() != inst.nx())
        throw ConfigError("init family dimension does not match the instance");
  }
  VFFamily a_con = a_obj;

  OuterOptions opts;
  opts.eps_in = cfg.eps_in;
  opts.eps_out = cfg.eps_out;
  opts.max_outer = cfg.max_outer;
  opts.max_functions = cfg.max_functions;
  opts.refine = cfg.refine;
  opts.lmi = lmi;
  opts.solver = cfg.solver;
  if (cfg.snapshot_every > 0 && writing) {
    const fs::path snap_dir = out;
    const int every = cfg.snapshot_every;
    opts.on_append = [snap_dir, every](int generated, const VFFamily& fam) {
      if (generated % every == 0) {
        char name[64];
        std::snprintf(name, sizeof(name), "family_snapshot_%06d.json", generated);
        save_family(fam, (snap_dir / name).string());
      }
    };
  }

  result.bound = outer_problem(inst, std::move(a_obj), std::move(a_con), samples, opts);

  if (cfg.phase2_functions > 0) {
    OuterOptions opts2 = opts;
    opts2.max_functions = cfg.phase2_functions;
    opts2.eps_out = cfg.eps_out;
    OuterResult phase2 =
        outer_problem(inst, result.bound.a_obj, result.bound.a_con, samples, opts2);
    append_phase(result.bound, std::move(phase2));
  }

  if (cfg.compact) result.bound.a_obj = compact_family(result.bound.a_obj, samples);
  const VFFamily& family = result.bound.a_obj;

  if (cfg.audit_samples > 0) {
    const Eigen::VectorXd viol =
        feasibility_audit_family(inst, family, cfg.audit_samples, cfg.audit_seed);
    result.max_audit_violation = viol.maxCoeff();
  }

  if (cfg.n_rollouts > 0) {
    const Policy policy = cfg.policy == "clipped-lqr" ? clipped_lqr_policy(inst)
                                                      : greedy_policy(inst, family);
    result.gap = certify(inst, family, policy, cfg.n_rollouts, cfg.horizon,
                         cfg.rollout_seed);
  }

  if (writing) {
    save_family(family, (out / "family.json").string());
    write_outer_trace_csv(result.bound, (out / "outer_trace.csv").string());
    write_sdp_timing_csv(result.bound, (out / "sdp_timing.csv").string());
    if (result.gap) save_gap_report(*result.gap, (out / "gap_report.json").string());
  }
  return result;
}

}  // namespace pwmbound
