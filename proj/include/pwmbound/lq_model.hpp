#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

namespace pwmbound {

// Discounted linear-quadratic stochastic control problem:
//
//   x+ = A x + B_u u + B_xi xi,   stage cost [x;u;1]' L [x;u;1],
//   u componentwise in [u_lo, u_hi],   discount gamma in [0,1).
//
// The noise xi enters every computation through its first and second moments
// only; simulation draws it as a Gaussian consistent with those moments.
// x0_mean / x0_cov describe the initial-state distribution used for state
// sampling and certification rollouts.
struct LQProblem {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B_u;
  Eigen::MatrixXd B_xi;
  Eigen::MatrixXd L;  // (nx+nu+1) x (nx+nu+1), symmetric PSD
  double gamma = 0.0;
  Eigen::VectorXd u_lo, u_hi;
  Eigen::VectorXd xi_mean;
  Eigen::MatrixXd xi_second;  // E[xi xi'] (second moment, not covariance)
  Eigen::VectorXd x0_mean;
  Eigen::MatrixXd x0_cov;

  int nx() const { return static_cast<int>(A.rows()); }
  int nu() const { return static_cast<int>(B_u.cols()); }
  int nxi() const { return static_cast<int>(B_xi.cols()); }
};

// Throws std::invalid_argument on dimension mismatches, non-symmetric or
// indefinite moment/cost matrices, gamma outside [0,1), or an empty box.
void validate(const LQProblem& prob);

Eigen::VectorXd step(const LQProblem& prob, const Eigen::Ref<const Eigen::VectorXd>& x,
                     const Eigen::Ref<const Eigen::VectorXd>& u,
                     const Eigen::Ref<const Eigen::VectorXd>& xi);

double stage_cost(const LQProblem& prob, const Eigen::Ref<const Eigen::VectorXd>& x,
                  const Eigen::Ref<const Eigen::VectorXd>& u);

struct RiccatiResult {
  Eigen::MatrixXd P;  // quadratic coefficient of the unconstrained value function
  Eigen::MatrixXd K;  // optimal unconstrained gain, u = -K x
  double offset = 0;  // constant term; exact when the noise has zero mean
  int iterations = 0;
};

// Fixed point of the discounted Riccati iteration started from the state cost
// block, stopped when the Frobenius norm of the update falls below tol.
// Requires a purely quadratic stage cost (no affine terms in L).
RiccatiResult discounted_riccati(const LQProblem& prob, double tol = 1e-12,
                                 int max_iter = 1000000);

struct Trajectory {
  Eigen::MatrixXd states;  // nx x (horizon+1)
  Eigen::MatrixXd inputs;  // nu x horizon
  double discounted_cost = 0;
};

using Policy = std::function<Eigen::VectorXd(const Eigen::Ref<const Eigen::VectorXd>&)>;

// Rolls the policy forward for `horizon` steps with Gaussian noise draws
// matching (xi_mean, xi_second).  Throws std::runtime_error if the policy
// output leaves the input box.  Bit-reproducible for a fixed seed.
Trajectory simulate(const LQProblem& prob, const Policy& policy,
                    const Eigen::Ref<const Eigen::VectorXd>& x0, int horizon,
                    std::uint64_t seed);

}  // namespace pwmbound
