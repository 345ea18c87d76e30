#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

namespace pwmbound {

// One PSD block of the constraint F0 + sum_i y_i F_i >= 0.  Coefficients are
// stored sparsely: only variables that actually touch the block appear, each
// at most once, with a symmetric dense matrix.
struct SdpBlock {
  int dim = 0;
  Eigen::MatrixXd f0;
  std::vector<std::pair<int, Eigen::MatrixXd>> coeff;  // (variable index, F_i)
};

// maximize b'y  subject to  F0^k + sum_i y_i F_i^k >= 0 for every block k.
struct SdpProblem {
  int num_vars = 0;
  Eigen::VectorXd b;
  std::vector<SdpBlock> blocks;
};

void validate(const SdpProblem& prob);

enum class SdpStatus { Optimal, Infeasible, Unbounded, MaxIter };

const char* to_string(SdpStatus s);

struct SdpOptions {
  double feas_tol = 1e-8;
  double gap_tol = 1e-8;
  int max_iter = 200;
  bool verbose = false;
};

struct SdpSolution {
  SdpStatus status = SdpStatus::MaxIter;
  Eigen::VectorXd y;
  double primal_obj = 0;  // b'y
  double dual_obj = 0;    // <F0, X>; >= primal_obj at dual feasibility
  std::vector<Eigen::MatrixXd> X;  // dual certificate, one PSD matrix per block
  int iterations = 0;
  double min_eig = 0;      // most negative eigenvalue of F(y) across blocks
  double dual_residual = 0;  // max_i |<F_i, X> + b_i| / (1 + |b|_inf)
  double gap = 0;            // |dual_obj - primal_obj| / (1 + |primal_obj|)
  std::vector<double> mu_trace;  // average complementarity per iteration

  std::string summary() const;  // one-line status string for regression files
};

// Primal-dual interior-point solve.  Deterministic: identical inputs and
// options produce identical iterates.  Unbounded is only reported together
// with a verified improving ray; numerical breakdown returns MaxIter with the
// best iterate found.
SdpSolution solve(const SdpProblem& prob, const SdpOptions& opts = {});

// Sparse text round-trip (SDPA-compatible: minimize c'x with c = -b and
// constant matrix -F0, so externally reported optima are negated).
std::string to_sparse_text(const SdpProblem& prob);
SdpProblem from_sparse_text(const std::string& text);

}  // namespace pwmbound
