#include "pwmbound/pwm_algorithms.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "pwmbound/errors.hpp"

namespace pwmbound {

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
      .count();
}

// Sampled objective against the pre-folded cache (no sync).
double f_cached(const Eigen::Ref<const Eigen::VectorXd>& alpha, const SampleSet& samples) {
  const Eigen::VectorXd vals = samples.basis().transpose() * alpha;
  const Eigen::VectorXd& fam = samples.family_values();
  double acc = 0;
  for (int i = 0; i < samples.count(); ++i) acc += std::max(vals[i], fam[i]);
  return acc / samples.count();
}

double family_objective(const SampleSet& samples) {
  const Eigen::VectorXd& fam = samples.family_values();
  double acc = 0;
  for (int i = 0; i < samples.count(); ++i) acc += fam[i];
  return acc / samples.count();
}

// Once the family holds many near-duplicate members, the per-sample SDPs
// develop flat optimal faces: the multiplier certificate is then not unique,
// the solver's normal-equation system turns structurally singular well before
// the duality gap closes, and the cleanest honest outcome is a near-optimal
// iterate whose multipliers may sit microscopically outside their bounds.
// Such a solve is still usable when the remaining relative gap is small
// (optimality of the append step only affects progress speed, never
// soundness) and the candidate itself checks out: either the returned
// certificate is clean after all, or a direct sampled Bellman-inequality
// audit of the extracted candidate passes with strict margin (the functional
// inequality is what makes a member sound; the matrix certificate is only the
// sufficient construction for it).
constexpr double kDegenerateGapTol = 1e-3;
constexpr int kDegenerateAuditSamples = 20000;
constexpr std::uint64_t kDegenerateAuditSeed = 99991;

bool usable_degenerate(const SdpSolution& sol, const SdpOptions& sopts,
                       const std::function<bool(const QuadraticVF&)>& accept,
                       const QuadraticVF& candidate) {
  if (sol.gap > kDegenerateGapTol) return false;
  if (sol.min_eig >= -sopts.feas_tol) return true;
  return accept && accept(candidate);
}

}  // namespace

double f_pwm(const Eigen::Ref<const Eigen::VectorXd>& alpha, const VFFamily& a_obj,
             SampleSet& samples) {
  samples.sync(a_obj);
  return f_cached(alpha, samples);
}

Subgradient subgradient(const Eigen::Ref<const Eigen::VectorXd>& alpha,
                        const VFFamily& a_obj, SampleSet& samples) {
  samples.sync(a_obj);
  Subgradient sg;
  sg.moments = dominating_moments(samples, alpha);
  sg.d = pack_objective(sg.moments);
  return sg;
}

const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::Converged: return "Converged";
    case StopReason::ZeroSubgradient: return "ZeroSubgradient";
    case StopReason::IterationCap: return "IterationCap";
  }
  return "?";
}

MmResult mm_minimize(const ValueSubgradOracle& value_subgrad, const LinMinOracle& linmin,
                     const Eigen::VectorXd& x0, double eps, int max_iter) {
  if (eps <= 0) throw std::invalid_argument("mm: eps must be positive");
  if (max_iter < 1) throw std::invalid_argument("mm: need at least one pass");
  MmResult res;
  res.x = x0;
  auto [f0, g] = value_subgrad(x0);
  res.f = f0;
  double total = 0;
  for (int it = 0; it < max_iter; ++it) {
    if (g.size() == 0 || g.cwiseAbs().maxCoeff() == 0.0) {
      res.steps.push_back({res.f, 0.0});
      res.stop = StopReason::ZeroSubgradient;
      return res;
    }
    auto [xm, vmin] = linmin(g);
    const double stationarity = vmin - res.x.dot(g);
    auto [f_new, g_new] = value_subgrad(xm);
    if (f_new <= res.f) {  // accept; the surrogate guarantees this in exact math
      res.x = xm;
      g = std::move(g_new);
    }
    const double f_acc = std::min(f_new, res.f);
    const double delta = res.f - f_acc;
    total += delta;
    res.f = f_acc;
    res.steps.push_back({res.f, stationarity});
    if (delta < eps * (total + 1e-12 * (1.0 + std::abs(res.f)))) {
      res.stop = StopReason::Converged;
      return res;
    }
  }
  res.stop = StopReason::IterationCap;
  return res;
}

InnerResult inner_problem_core(BellmanSdp& bsdp, const QuadraticVF& alpha0,
                               SampleSet& samples, const InnerOptions& opts) {
  if (opts.eps <= 0) throw std::invalid_argument("inner: eps must be positive");
  if (opts.max_iter < 1) throw std::invalid_argument("inner: need at least one pass");
  if (alpha0.dim() != bsdp.nx)
    throw std::invalid_argument("inner: start point has wrong dimension");

  const int K = bsdp.alpha_dim();
  InnerResult res;
  Eigen::VectorXd alpha = pack_alpha(alpha0);
  double f_cur = f_cached(alpha, samples);
  double total = 0;

  for (int it = 0; it < opts.max_iter; ++it) {
    Subgradient sg;
    sg.moments = dominating_moments(samples, alpha);
    sg.d = pack_objective(sg.moments);
    if (sg.moments.weight == 0.0) {
      res.steps.push_back({f_cur, 0.0, 0, 0.0});
      res.stop = StopReason::ZeroSubgradient;
      break;
    }
    set_objective(bsdp, sg.moments);
    const auto t0 = std::chrono::steady_clock::now();
    const SdpSolution sol = solve(bsdp.sdp, opts.solver);
    if (opts.on_solve) opts.on_solve(sol.iterations, elapsed_ms(t0));
    if (sol.status != SdpStatus::Optimal &&
        !usable_degenerate(sol, opts.solver, opts.accept_degenerate, bsdp.vf_from(sol.y)))
      throw SolverError(std::string("inner: refinement SDP ended ") + to_string(sol.status));
    const Eigen::VectorXd alpha_new = sol.y.head(K);
    const double stationarity = alpha.dot(sg.d) - sol.primal_obj;
    const double f_new = f_cached(alpha_new, samples);
    if (f_new >= f_cur) alpha = alpha_new;  // guaranteed in exact arithmetic
    const double f_acc = std::max(f_new, f_cur);
    const double delta = f_acc - f_cur;
    total += delta;
    f_cur = f_acc;
    res.steps.push_back({f_cur, sg.moments.weight, sol.iterations, stationarity});
    if (delta < opts.eps * (total + 1e-12 * (1.0 + std::abs(f_cur)))) {
      res.stop = StopReason::Converged;
      break;
    }
  }
  res.vf = unpack_alpha(alpha, bsdp.nx);
  res.f = f_cur;
  return res;
}

InnerResult inner_problem(const LQProblem& prob, const QuadraticVF& alpha0,
                          const VFFamily& a_obj, const VFFamily& a_con,
                          SampleSet& samples, const InnerOptions& opts) {
  samples.sync(a_obj);
  MomentPair seed;  // placeholder; each pass sets the true objective
  seed.weight = 1.0;
  seed.mu = Eigen::VectorXd::Zero(prob.nx());
  seed.sigma = Eigen::MatrixXd::Zero(prob.nx(), prob.nx());
  BellmanSdp bsdp = assemble(prob, a_con, seed, opts.lmi);
  InnerOptions iopt = opts;
  if (!iopt.accept_degenerate)
    iopt.accept_degenerate = [&prob, &a_con](const QuadraticVF& cand) {
      return feasibility_audit(prob, a_con, cand, kDegenerateAuditSamples,
                               kDegenerateAuditSeed) <= 0.0;
    };
  return inner_problem_core(bsdp, alpha0, samples, iopt);
}

OuterResult outer_problem(const LQProblem& prob, VFFamily a_obj, VFFamily a_con,
                          SampleSet& samples, const OuterOptions& opts) {
  if (a_obj.empty() || a_con.empty())
    throw std::invalid_argument("outer: both families must start non-empty");
  if (opts.max_outer < 1 || opts.max_functions < 1)
    throw std::invalid_argument("outer: sweep and member caps must be positive");
  if (opts.eps_in <= 0) throw std::invalid_argument("outer: eps_in must be positive");

  samples.sync(a_obj);
  OuterResult res;
  res.stop = StopReason::IterationCap;

  MomentPair seed;
  seed.weight = 1.0;
  seed.mu = Eigen::VectorXd::Zero(prob.nx());
  seed.sigma = Eigen::MatrixXd::Zero(prob.nx(), prob.nx());
  BellmanSdp bsdp = assemble(prob, a_con, seed, opts.lmi);

  double f_now = family_objective(samples);
  res.sweep_f.push_back(f_now);
  const double eps_out =
      opts.eps_out >= 0 ? opts.eps_out : 1e-6 * (1.0 + std::abs(f_now));

  // degenerate-solve fallback: audit the candidate against the current
  // conditioning family (captured by reference; it grows as members append)
  const auto audit_ok = [&prob, &a_con](const QuadraticVF& cand) {
    return feasibility_audit(prob, a_con, cand, kDegenerateAuditSamples,
                             kDegenerateAuditSeed) <= 0.0;
  };

  const auto run_start = std::chrono::steady_clock::now();
  bool capped = false;
  for (int sweep = 1; sweep <= opts.max_outer && !capped; ++sweep) {
    const double f_sweep_start = f_now;
    for (int i = 0; i < samples.count(); ++i) {
      if (res.functions_generated >= opts.max_functions) {
        capped = true;
        break;
      }
      const auto t0 = std::chrono::steady_clock::now();
      int member_sdp_iters = 0;

      // warm start: point-mass objective at this sample
      set_objective(bsdp, dirac_moments(samples.points().col(i)));
      const auto td = std::chrono::steady_clock::now();
      const SdpSolution warm = solve(bsdp.sdp, opts.solver);
      const double warm_ms = elapsed_ms(td);
      if (warm.status != SdpStatus::Optimal &&
          !usable_degenerate(warm, opts.solver, audit_ok, bsdp.vf_from(warm.y)))
        throw SolverError(std::string("outer: point-mass SDP ended ") +
                          to_string(warm.status));
      member_sdp_iters += warm.iterations;
      res.sdp_log.push_back({res.functions_generated + 1, 'd', warm.iterations, warm_ms,
                             elapsed_ms(run_start)});

      QuadraticVF vf_new = bsdp.vf_from(warm.y);
      int inner_iters = 0;
      double weight = 0;
      if (opts.refine) {
        InnerOptions iopt;
        iopt.eps = opts.eps_in;
        iopt.max_iter = opts.inner_max_iter;
        iopt.lmi = opts.lmi;
        iopt.solver = opts.solver;
        iopt.on_solve = [&](int iters, double ms) {
          member_sdp_iters += iters;
          res.sdp_log.push_back(
              {res.functions_generated + 1, 'r', iters, ms, elapsed_ms(run_start)});
        };
        iopt.accept_degenerate = audit_ok;
        const InnerResult ref = inner_problem_core(bsdp, vf_new, samples, iopt);
        vf_new = ref.vf;
        inner_iters = ref.iterations();
        if (!ref.steps.empty()) weight = ref.steps.back().weight;
      } else {
        weight = dominating_moments(samples, pack_alpha(vf_new)).weight;
      }

      a_obj.push_back(vf_new);
      a_con.push_back(vf_new);
      samples.fold(vf_new);
      append_conditioning(bsdp, prob, vf_new);
      res.functions_generated += 1;
      f_now = family_objective(samples);
      res.rows.push_back({sweep, i, inner_iters, f_now, weight, member_sdp_iters,
                          elapsed_ms(t0)});
      if (opts.on_append) opts.on_append(res.functions_generated, a_obj);
    }
    res.sweep_f.push_back(f_now);
    if (!capped && f_now - f_sweep_start < eps_out) {
      res.stop = StopReason::Converged;
      break;
    }
  }
  res.a_obj = std::move(a_obj);
  res.a_con = std::move(a_con);
  return res;
}

SingleBellmanResult single_bellman_lp(const LQProblem& prob, const MomentPair& objective,
                                      const BellmanSdpOptions& lmi, const SdpOptions& solver) {
  BellmanSdp bsdp = assemble_single(prob, objective, lmi);
  SingleBellmanResult res;
  res.sol = solve(bsdp.sdp, solver);
  if (res.sol.status != SdpStatus::Optimal)
    throw SolverError(std::string("single Bellman SDP ended ") + to_string(res.sol.status));
  res.vf = bsdp.vf_from(res.sol.y);
  res.objective = res.sol.primal_obj;
  return res;
}

SingleBellmanResult single_bellman_lp(const LQProblem& prob, const SampleSet& samples,
                                      const BellmanSdpOptions& lmi, const SdpOptions& solver) {
  const int nx = samples.nx();
  Eigen::VectorXd mu_sum = Eigen::VectorXd::Zero(nx);
  Eigen::MatrixXd sigma_sum = Eigen::MatrixXd::Zero(nx, nx);
  for (int i = 0; i < samples.count(); ++i) {
    const auto x = samples.points().col(i);
    mu_sum += x;
    sigma_sum += x * x.transpose();
  }
  MomentPair m;
  m.weight = 1.0;
  m.mu = mu_sum / samples.count();
  m.sigma = sigma_sum / samples.count();
  return single_bellman_lp(prob, m, lmi, solver);
}

VFFamily compact_family(const VFFamily& family, const SampleSet& samples) {
  if (family.empty()) throw std::invalid_argument("compact: empty family");
  const int n = samples.count();
  Eigen::VectorXd best = Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
  std::vector<int> which(n, -1);
  for (int j = 0; j < static_cast<int>(family.size()); ++j) {
    const Eigen::VectorXd vals = samples.basis().transpose() * pack_alpha(family[j]);
    for (int i = 0; i < n; ++i) {
      if (vals[i] > best[i]) {  // strict: ties keep the earliest member
        best[i] = vals[i];
        which[i] = j;
      }
    }
  }
  std::vector<char> used(family.size(), 0);
  for (int i = 0; i < n; ++i)
    if (which[i] >= 0) used[which[i]] = 1;
  VFFamily out;
  for (size_t j = 0; j < family.size(); ++j)
    if (used[j]) out.push_back(family[j]);
  if (out.empty()) out.push_back(family.front());
  return out;
}

}  // namespace pwmbound
