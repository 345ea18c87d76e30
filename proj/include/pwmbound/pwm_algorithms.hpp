#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "pwmbound/lmi_assembly.hpp"
#include "pwmbound/lq_model.hpp"
#include "pwmbound/moments.hpp"
#include "pwmbound/quad_value.hpp"
#include "pwmbound/sample_set.hpp"
#include "pwmbound/sdp_solver.hpp"

namespace pwmbound {

// Sampled objective (1/N) sum_i max(alpha . basis(x_i), family max).  The
// sample cache must be synced with a_obj before the call; reductions run in
// storage order.
double f_pwm(const Eigen::Ref<const Eigen::VectorXd>& alpha, const VFFamily& a_obj,
             SampleSet& samples);

// Upper subgradient of f_pwm at alpha: mean basis vector over the samples the
// candidate dominates (ties included); d is its packed form, weight the
// dominating fraction.  weight == 0 implies d == 0 exactly.
struct Subgradient {
  Eigen::VectorXd d;
  MomentPair moments;
};
Subgradient subgradient(const Eigen::Ref<const Eigen::VectorXd>& alpha,
                        const VFFamily& a_obj, SampleSet& samples);

enum class StopReason { Converged, ZeroSubgradient, IterationCap };

const char* to_string(StopReason r);

// ---------------------------------------------------------------------------
// Generic minorize-maximize loop in minimization form: minimize a concave
// function over a convex set, alternating a linear surrogate at the current
// point with its exact minimization.  The value oracle returns (f, lower
// subgradient); linmin returns argmin_{x in C} x'd together with the optimal
// value x*'d (used for the stationarity residual min_x (x - x_k)'d_k <= 0).
//
// Stops when the per-step decrease drops below eps * (total decrease so far
// + tiny floor), on a zero subgradient, or at max_iter loop passes.  The
// objective never increases along the iterates.
// ---------------------------------------------------------------------------
struct MmStep {
  double f = 0;              // objective after this pass
  double stationarity = 0;   // min_{x in C} (x - x_k)' d_k, <= 0 up to solver noise
};

struct MmResult {
  Eigen::VectorXd x;
  double f = 0;
  std::vector<MmStep> steps;     // one entry per loop pass
  StopReason stop = StopReason::IterationCap;
  int iterations() const { return static_cast<int>(steps.size()); }
};

using ValueSubgradOracle =
    std::function<std::pair<double, Eigen::VectorXd>(const Eigen::VectorXd&)>;
// (d) -> (argmin x'd over C, min value)
using LinMinOracle =
    std::function<std::pair<Eigen::VectorXd, double>(const Eigen::VectorXd&)>;

MmResult mm_minimize(const ValueSubgradOracle& value_subgrad, const LinMinOracle& linmin,
                     const Eigen::VectorXd& x0, double eps, int max_iter);

// ---------------------------------------------------------------------------
// Candidate refinement: maximize f_pwm over the Bellman-inequality set of
// a_con, starting from alpha0, by alternating subgradients with linear SDP
// solves.  eps is relative to the objective gain accumulated in this call.
// ---------------------------------------------------------------------------
struct InnerOptions {
  double eps = 1e-3;
  int max_iter = 50;
  BellmanSdpOptions lmi;
  SdpOptions solver;
  // Called after each SDP solve with (interior-point iterations, wall ms).
  std::function<void(int, double)> on_solve;
  // Fallback acceptance for solves that stop short of optimality with a small
  // remaining gap (flat optimal faces leave no better honest exit).  Receives
  // the candidate the solve produced; returning true lets the pass continue
  // with it.  Unset: such solves raise SolverError.
  std::function<bool(const QuadraticVF&)> accept_degenerate;
};

struct InnerStep {
  double f = 0;            // f_pwm after the pass
  double weight = 0;       // dominating fraction of the subgradient used
  int sdp_iters = 0;       // 0 when the pass held the iterate (zero subgradient)
  double stationarity = 0;
};

struct InnerResult {
  QuadraticVF vf;
  double f = 0;
  std::vector<InnerStep> steps;
  StopReason stop = StopReason::IterationCap;
  int iterations() const { return static_cast<int>(steps.size()); }
};

InnerResult inner_problem(const LQProblem& prob, const QuadraticVF& alpha0,
                          const VFFamily& a_obj, const VFFamily& a_con,
                          SampleSet& samples, const InnerOptions& opts = {});

// Core used by the outer loop: reuses a pre-assembled constraint SDP whose
// conditioning family matches a_con backing `samples`' objective cache.
InnerResult inner_problem_core(BellmanSdp& bsdp, const QuadraticVF& alpha0,
                               SampleSet& samples, const InnerOptions& opts);

// ---------------------------------------------------------------------------
// Family construction: sweeps the samples, per sample solves the point-mass
// objective SDP as a warm start, optionally refines it, then appends the
// result to both the objective and conditioning families.  Terminates when a
// full sweep improves the sampled objective by less than eps_out, at
// max_outer sweeps, or once max_functions members were generated.
// ---------------------------------------------------------------------------
struct OuterOptions {
  double eps_in = 1e-3;
  double eps_out = -1;       // absolute; < 0 picks 1e-6 * (1 + |f at start|)
  int max_outer = 100;
  int max_functions = 1000;
  bool refine = true;
  BellmanSdpOptions lmi;
  SdpOptions solver;
  int inner_max_iter = 50;
  // Called after each appended member with (members generated, family).
  std::function<void(int, const VFFamily&)> on_append;
};

struct OuterRow {
  int outer_iter = 0;   // sweep number, 1-based
  int sample_idx = 0;   // sample that seeded the member
  int inner_iters = 0;  // refinement passes (0 when refinement is off)
  double f_pwm = 0;     // sampled objective after appending
  double weight = 0;    // final subgradient weight seen for the member
  int sdp_iters = 0;    // interior-point iterations, warm start + refinement
  double wall_ms = 0;
};

struct SdpLogRow {
  int function_idx = 0;  // 1-based index of the generated member
  char kind = 'd';       // 'd' point-mass warm start, 'r' refinement step
  int iters = 0;
  double wall_ms = 0;
  double cum_ms = 0;
};

struct OuterResult {
  VFFamily a_obj, a_con;
  std::vector<OuterRow> rows;       // one per generated member
  std::vector<double> sweep_f;      // f at start, then after each full sweep
  std::vector<SdpLogRow> sdp_log;   // one per SDP solve
  int functions_generated = 0;
  StopReason stop = StopReason::IterationCap;
};

OuterResult outer_problem(const LQProblem& prob, VFFamily a_obj, VFFamily a_con,
                          SampleSet& samples, const OuterOptions& opts = {});

// ---------------------------------------------------------------------------
// Baseline: one self-referential Bellman inequality, moment objective.
// ---------------------------------------------------------------------------
struct SingleBellmanResult {
  QuadraticVF vf;
  double objective = 0;
  SdpSolution sol;
};

SingleBellmanResult single_bellman_lp(const LQProblem& prob, const MomentPair& objective,
                                      const BellmanSdpOptions& lmi = {},
                                      const SdpOptions& solver = {});
// Sample-moment objective: the optimum value equals the sampled family
// objective of the returned member (up to roundoff).
SingleBellmanResult single_bellman_lp(const LQProblem& prob, const SampleSet& samples,
                                      const BellmanSdpOptions& lmi = {},
                                      const SdpOptions& solver = {});

// Drops members that never attain the sampled maximum (keeps at least one).
VFFamily compact_family(const VFFamily& family, const SampleSet& samples);

}  // namespace pwmbound
