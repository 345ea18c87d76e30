#pragma once

#include <cstdint>

#include "pwmbound/lq_model.hpp"
#include "pwmbound/quad_value.hpp"

namespace pwmbound {

// Unconstrained-optimal linear gain, clipped componentwise to the input box.
Policy clipped_lqr_policy(const LQProblem& prob);

// One-step lookahead against the family's point-wise maximum: minimizes
// stage_cost(x,u) + gamma * max_k E[eval(vf_k, next)] over the box by
// projected gradient descent with a fixed iteration budget and diminishing
// steps; returns the best iterate visited.
Policy greedy_policy(const LQProblem& prob, const VFFamily& family, int pg_iters = 200);

struct GapReport {
  double lower_bound = 0;        // mean family value over the sampled x0
  double policy_cost = 0;        // mean simulated discounted cost, same x0 draws
  double policy_cost_stderr = 0;
  double gap_fraction = 0;       // (policy_cost - lower_bound) / policy_cost
  int n_rollouts = 0;
  int horizon = 0;
  std::uint64_t seed = 0;
};

// Monte-Carlo sub-optimality certificate: pairs each rollout's simulated cost
// with the family value at the same initial state.  horizon <= 0 picks the
// smallest T with gamma^T <= 1e-6.  Deterministic for fixed seed.
GapReport certify(const LQProblem& prob, const VFFamily& family, const Policy& policy,
                  int n_rollouts, int horizon, std::uint64_t seed);

}  // namespace pwmbound
