#include "pwmbound/policy_eval.hpp"

#include <cmath>
#include <stdexcept>

#include "pwmbound/moments.hpp"
#include "pwmbound/rng.hpp"

namespace pwmbound {

Policy clipped_lqr_policy(const LQProblem& prob) {
  const RiccatiResult rr = discounted_riccati(prob);
  const Eigen::MatrixXd k = rr.K;
  const Eigen::VectorXd lo = prob.u_lo, hi = prob.u_hi;
  return [k, lo, hi](const Eigen::Ref<const Eigen::VectorXd>& x) {
    return (-k * x).cwiseMax(lo).cwiseMin(hi).eval();
  };
}

Policy greedy_policy(const LQProblem& prob, const VFFamily& family, int pg_iters) {
  validate(prob);
  if (family.empty()) throw std::invalid_argument("greedy: empty family");
  if (pg_iters < 1) throw std::invalid_argument("greedy: need at least one iteration");
  const int nx = prob.nx(), nu = prob.nu();

  // one-step objective: z' S_k z with z = [x; u; 1], maximized over k
  std::vector<Eigen::MatrixXd> forms;
  forms.reserve(family.size());
  for (const auto& vf : family) forms.push_back(prob.L + prob.gamma * lift_next(prob, vf).M);

  // gradient Lipschitz bound over the input coordinates
  double lip = 0;
  for (const auto& s : forms) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.block(nx, nx, nu, nu),
                                                      Eigen::EigenvaluesOnly);
    lip = std::max(lip, 2.0 * es.eigenvalues().cwiseAbs().maxCoeff());
  }
  const double eta0 = lip > 0 ? 1.0 / lip : 1.0;
  const Eigen::VectorXd lo = prob.u_lo, hi = prob.u_hi;

  return [forms, eta0, lo, hi, nx, nu, pg_iters](const Eigen::Ref<const Eigen::VectorXd>& x) {
    Eigen::VectorXd z(nx + nu + 1);
    z.head(nx) = x;
    z[nx + nu] = 1.0;
    auto value_and_active = [&](const Eigen::VectorXd& u, int* active) {
      z.segment(nx, nu) = u;
      double best = -std::numeric_limits<double>::infinity();
      for (int k = 0; k < static_cast<int>(forms.size()); ++k) {
        const double v = z.dot(forms[k] * z);
        if (v > best) {
          best = v;
          if (active) *active = k;
        }
      }
      return best;
    };

    Eigen::VectorXd u = (0.5 * (lo + hi)).cwiseMax(lo).cwiseMin(hi);
    Eigen::VectorXd u_best = u;
    int active = 0;
    double f_best = value_and_active(u, &active);
    // diminishing-step phase handles kinks of the max; a constant-step phase
    // then polishes within the active smooth piece
    for (int phase = 0; phase < 2; ++phase) {
      for (int t = 0; t < pg_iters; ++t) {
        z.segment(nx, nu) = u;
        const Eigen::VectorXd grad = 2.0 * (forms[active] * z).segment(nx, nu);
        const double eta = phase == 0 ? eta0 / std::sqrt(t + 1.0) : eta0;
        u = (u - eta * grad).cwiseMax(lo).cwiseMin(hi);
        const double f = value_and_active(u, &active);
        if (f < f_best) {
          f_best = f;
          u_best = u;
        }
      }
      u = u_best;
      value_and_active(u, &active);
    }
    return u_best;
  };
}

GapReport certify(const LQProblem& prob, const VFFamily& family, const Policy& policy,
                  int n_rollouts, int horizon, std::uint64_t seed) {
  validate(prob);
  if (family.empty()) throw std::invalid_argument("certify: empty family");
  if (n_rollouts < 2) throw std::invalid_argument("certify: need at least two rollouts");
  if (horizon <= 0) {
    horizon = 1;
    if (prob.gamma > 0) {
      horizon = std::max(
          1, static_cast<int>(std::ceil(std::log(1e-6) / std::log(prob.gamma))));
    }
  }

  GapReport rep;
  rep.n_rollouts = n_rollouts;
  rep.horizon = horizon;
  rep.seed = seed;

  const Eigen::MatrixXd sq = psd_sqrt(prob.x0_cov);
  Rng x0_rng = make_rng(seed);
  double bound_acc = 0, cost_acc = 0, cost_sq_acc = 0;
  for (int r = 0; r < n_rollouts; ++r) {
    const Eigen::VectorXd x0 = gaussian_draw(x0_rng, prob.x0_mean, sq);
    bound_acc += eval_pwm(family, x0);
    const std::uint64_t roll_seed = mix64(mix64(seed) + static_cast<std::uint64_t>(r) + 1);
    const Trajectory traj = simulate(prob, policy, x0, horizon, roll_seed);
    cost_acc += traj.discounted_cost;
    cost_sq_acc += traj.discounted_cost * traj.discounted_cost;
  }
  rep.lower_bound = bound_acc / n_rollouts;
  rep.policy_cost = cost_acc / n_rollouts;
  const double var =
      std::max(0.0, (cost_sq_acc - n_rollouts * rep.policy_cost * rep.policy_cost) /
                        (n_rollouts - 1.0));
  rep.policy_cost_stderr = std::sqrt(var / n_rollouts);
  rep.gap_fraction = rep.policy_cost != 0.0
                         ? (rep.policy_cost - rep.lower_bound) / rep.policy_cost
                         : 0.0;
  return rep;
}

}  // namespace pwmbound
