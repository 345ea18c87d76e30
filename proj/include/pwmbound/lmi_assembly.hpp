#pragma once

#include <cstdint>

#include "pwmbound/lq_model.hpp"
#include "pwmbound/moments.hpp"
#include "pwmbound/quad_value.hpp"
#include "pwmbound/sdp_solver.hpp"

namespace pwmbound {

struct BellmanSdpOptions {
  bool convex_P = true;   // extra PSD block forcing the quadratic part >= 0
  double norm_cap = 0.0;  // > 0: cap |alpha|_2 by this value (extra block)
};

// Semidefinite encoding of the Bellman inequality
//
//   eval(vf, x) <= stage_cost(x,u) + gamma * max_k E[eval(vf_k, next(x,u))]
//
// for all x and all u in the input box, with the right-hand maximum taken
// over a fixed conditioning family.  The epigraph of the maximum adds one
// coordinate to the lifted vector [x; u; 1; t]; each conditioning member
// contributes one multiplier, each input dimension one box multiplier.
//
// Decision layout: y = [ alpha (packed vf) ; lambda_con ; lambda_box ].
struct BellmanSdp {
  int nx = 0, nu = 0;
  int n_con = 0;
  BellmanSdpOptions opts;
  SdpProblem sdp;

  int alpha_dim() const;
  int lambda_con_offset() const { return alpha_dim(); }
  int lambda_box_offset() const { return alpha_dim() + n_con; }

  QuadraticVF vf_from(const Eigen::VectorXd& y) const;
};

// Builds the point-wise-maximum Bellman SDP for the given conditioning
// family (non-empty) and moment objective.
BellmanSdp assemble(const LQProblem& prob, const VFFamily& a_con,
                    const MomentPair& objective, const BellmanSdpOptions& opts = {});

// Appends one conditioning member (one multiplier, one block) in place.
void append_conditioning(BellmanSdp& bsdp, const LQProblem& prob, const QuadraticVF& vf);

// Replaces the moment objective (constraints untouched).
void set_objective(BellmanSdp& bsdp, const MomentPair& objective);

// Single self-referential Bellman inequality  vf <= T vf  (no point-wise
// maximum, no epigraph coordinate); same decision layout minus lambda_con.
BellmanSdp assemble_single(const LQProblem& prob, const MomentPair& objective,
                           const BellmanSdpOptions& opts = {});

// Empirical check of the Bellman inequality for vf against the conditioning
// family (the maximum additionally includes vf itself).  Samples x from the
// initial-state Gaussian and u uniformly from the box; returns the largest
// violation found (<= 0 means the inequality held at every sample).
double feasibility_audit(const LQProblem& prob, const VFFamily& a_con,
                         const QuadraticVF& vf, int n_samples, std::uint64_t seed);

// Batch audit of every member against the whole family; shares the per-sample
// maximum across members.  Returns one max violation per member.
Eigen::VectorXd feasibility_audit_family(const LQProblem& prob, const VFFamily& family,
                                         int n_samples, std::uint64_t seed);

}  // namespace pwmbound
