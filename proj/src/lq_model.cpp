#include "pwmbound/lq_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "pwmbound/rng.hpp"

namespace pwmbound {

namespace {

void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument("LQProblem: " + what);
}

void require_symmetric_psd(const Eigen::MatrixXd& m, const std::string& name) {
  const double scale = 1.0 + m.cwiseAbs().maxCoeff();
  require((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * scale, name + " not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  require(es.eigenvalues().minCoeff() >= -1e-9 * scale, name + " not positive semidefinite");
}

}  // namespace

void validate(const LQProblem& prob) {
  const int nx = prob.nx(), nu = prob.nu(), nxi = prob.nxi();
  require(nx >= 1, "state dimension must be positive");
  require(nu >= 1, "input dimension must be positive");
  require(prob.A.rows() == nx && prob.A.cols() == nx, "A must be square");
  require(prob.B_u.rows() == nx, "B_u row count mismatch");
  require(prob.B_xi.rows() == nx || prob.B_xi.size() == 0, "B_xi row count mismatch");
  require(prob.L.rows() == nx + nu + 1 && prob.L.cols() == nx + nu + 1,
          "L must be (nx+nu+1) square");
  require_symmetric_psd(prob.L, "L");
  require(prob.gamma >= 0.0 && prob.gamma < 1.0, "gamma must lie in [0,1)");
  require(prob.u_lo.size() == nu && prob.u_hi.size() == nu, "box dimension mismatch");
  require((prob.u_lo.array() <= prob.u_hi.array()).all(), "input box is empty");
  require(prob.xi_mean.size() == nxi, "xi_mean dimension mismatch");
  require(prob.xi_second.rows() == nxi && prob.xi_second.cols() == nxi,
          "xi_second dimension mismatch");
  if (nxi > 0)
    require_symmetric_psd(prob.xi_second - prob.xi_mean * prob.xi_mean.transpose(),
                          "noise covariance (xi_second - mean outer product)");
  require(prob.x0_mean.size() == nx, "x0_mean dimension mismatch");
  require(prob.x0_cov.rows() == nx && prob.x0_cov.cols() == nx, "x0_cov dimension mismatch");
  require_symmetric_psd(prob.x0_cov, "x0_cov");
}

Eigen::VectorXd step(const LQProblem& prob, const Eigen::Ref<const Eigen::VectorXd>& x,
                     const Eigen::Ref<const Eigen::VectorXd>& u,
                     const Eigen::Ref<const Eigen::VectorXd>& xi) {
  Eigen::VectorXd next = prob.A * x + prob.B_u * u;
  if (xi.size() > 0) next += prob.B_xi * xi;
  return next;
}

double stage_cost(const LQProblem& prob, const Eigen::Ref<const Eigen::VectorXd>& x,
                  const Eigen::Ref<const Eigen::VectorXd>& u) {
  const int nx = prob.nx(), nu = prob.nu();
  Eigen::VectorXd z(nx + nu + 1);
  z << x, u, 1.0;
  return z.dot(prob.L * z);
}

RiccatiResult discounted_riccati(const LQProblem& prob, double tol, int max_iter) {
  const int nx = prob.nx(), nu = prob.nu();
  const Eigen::MatrixXd Q = prob.L.topLeftCorner(nx, nx);
  const Eigen::MatrixXd S = prob.L.block(0, nx, nx, nu);
  const Eigen::MatrixXd R = prob.L.block(nx, nx, nu, nu);
  const double affine = prob.L.col(nx + nu).cwiseAbs().maxCoeff();
  if (affine > 1e-12 * (1.0 + prob.L.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("discounted_riccati: stage cost has affine terms");

  const double g = prob.gamma;
  Eigen::MatrixXd P = Q;
  Eigen::MatrixXd K;
  for (int it = 1; it <= max_iter; ++it) {
    const Eigen::MatrixXd G = R + g * prob.B_u.transpose() * P * prob.B_u;
    Eigen::LLT<Eigen::MatrixXd> llt(G);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("discounted_riccati: input-cost block not positive definite");
    K = llt.solve(g * prob.B_u.transpose() * P * prob.A + S.transpose());
    Eigen::MatrixXd Pn =
        Q + g * prob.A.transpose() * P * prob.A - (g * prob.A.transpose() * P * prob.B_u + S) * K;
    Pn = 0.5 * (Pn + Pn.transpose()).eval();
    const double change = (Pn - P).norm();
    P = Pn;
    if (change <= tol) {
      RiccatiResult res;
      res.P = P;
      const Eigen::MatrixXd Gf = R + g * prob.B_u.transpose() * P * prob.B_u;
      res.K = Gf.llt().solve(g * prob.B_u.transpose() * P * prob.A + S.transpose());
      res.offset = 0.0;
      if (prob.nxi() > 0 && g > 0.0)
        res.offset = g * (prob.B_xi.transpose() * P * prob.B_xi * prob.xi_second).trace() /
                     (1.0 - g);
      res.iterations = it;
      return res;
    }
  }
  throw std::runtime_error("discounted_riccati: no convergence within iteration limit");
}

Trajectory simulate(const LQProblem& prob, const Policy& policy,
                    const Eigen::Ref<const Eigen::VectorXd>& x0, int horizon,
                    std::uint64_t seed) {
  if (horizon < 0) throw std::invalid_argument("simulate: negative horizon");
  if (x0.size() != prob.nx()) throw std::invalid_argument("simulate: x0 dimension mismatch");
  const int nxi = prob.nxi();
  Eigen::MatrixXd noise_sqrt;
  if (nxi > 0)
    noise_sqrt = psd_sqrt(prob.xi_second - prob.xi_mean * prob.xi_mean.transpose());

  Trajectory traj;
  traj.states.resize(prob.nx(), horizon + 1);
  traj.inputs.resize(prob.nu(), horizon);
  traj.discounted_cost = 0.0;

  Rng rng = make_rng(seed);
  Eigen::VectorXd x = x0;
  double disc = 1.0;
  traj.states.col(0) = x;
  for (int t = 0; t < horizon; ++t) {
    Eigen::VectorXd u = policy(x);
    if (u.size() != prob.nu()) throw std::runtime_error("simulate: policy output dimension");
    for (int i = 0; i < prob.nu(); ++i) {
      const double slack = 1e-12 * (1.0 + std::abs(prob.u_lo[i]) + std::abs(prob.u_hi[i]));
      if (u[i] < prob.u_lo[i] - slack || u[i] > prob.u_hi[i] + slack)
        throw std::runtime_error("simulate: policy output outside the input box");
      u[i] = std::min(std::max(u[i], prob.u_lo[i]), prob.u_hi[i]);
    }
    traj.inputs.col(t) = u;
    traj.discounted_cost += disc * stage_cost(prob, x, u);
    Eigen::VectorXd xi(nxi);
    if (nxi > 0) xi = gaussian_draw(rng, prob.xi_mean, noise_sqrt);
    x = step(prob, x, u, xi);
    traj.states.col(t + 1) = x;
    disc *= prob.gamma;
  }
  return traj;
}

}  // namespace pwmbound
