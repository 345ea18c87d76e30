#pragma once

#include <string>

#include "pwmbound/lq_model.hpp"
#include "pwmbound/policy_eval.hpp"
#include "pwmbound/pwm_algorithms.hpp"
#include "pwmbound/quad_value.hpp"

namespace pwmbound {

// Doubles in every serialized artifact are printed with 17 significant
// digits, so round-trips and byte-comparisons of reruns are exact.
std::string format_g17(double v);

// Instance JSON: matrices as row-major nested arrays under the field names
// A, B_u, B_xi, L, gamma, u_lo, u_hi, xi_mean, xi_second, x0_mean, x0_cov.
LQProblem load_instance(const std::string& path);
void save_instance(const LQProblem& prob, const std::string& path);

// Family JSON: {"members": [{"s":..., "p":[...], "P":[[...]]}, ...]}.
VFFamily load_family(const std::string& path);
void save_family(const VFFamily& family, const std::string& path);

void save_gap_report(const GapReport& report, const std::string& path);
GapReport load_gap_report(const std::string& path);

// One row per generated member: outer_iter, sample_idx, inner_iter, f_pwm,
// weight, sdp_iters, wall_ms.
void write_outer_trace_csv(const OuterResult& result, const std::string& path);

// One row per SDP solve with cumulative wall time.
void write_sdp_timing_csv(const OuterResult& result, const std::string& path);

}  // namespace pwmbound
