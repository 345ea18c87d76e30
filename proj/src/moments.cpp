#include "pwmbound/moments.hpp"

#include <stdexcept>

namespace pwmbound {

MomentPair dirac_moments(const Eigen::Ref<const Eigen::VectorXd>& x) {
  MomentPair m;
  m.weight = 1.0;
  m.mu = x;
  m.sigma = x * x.transpose();
  return m;
}

MomentPair initial_state_moments(const LQProblem& prob) {
  MomentPair m;
  m.weight = 1.0;
  m.mu = prob.x0_mean;
  m.sigma = prob.x0_cov + prob.x0_mean * prob.x0_mean.transpose();
  return m;
}

Eigen::VectorXd pack_objective(const MomentPair& m) {
  const int nx = static_cast<int>(m.mu.size());
  if (m.sigma.rows() != nx || m.sigma.cols() != nx)
    throw std::invalid_argument("pack_objective: inconsistent moment dimensions");
  Eigen::VectorXd b(basis_dim(nx));
  b[0] = m.weight;
  b.segment(1, nx) = m.mu;
  int k = 1 + nx;
  for (int i = 0; i < nx; ++i)
    for (int j = i; j < nx; ++j) b[k++] = m.sigma(i, j);
  return b;
}

LiftedQuadratic lift_current(const LQProblem& prob, const QuadraticVF& vf) {
  const int nx = prob.nx(), nu = prob.nu();
  if (vf.dim() != nx) throw std::invalid_argument("lift_current: dimension mismatch");
  LiftedQuadratic l;
  l.M = Eigen::MatrixXd::Zero(nx + nu + 1, nx + nu + 1);
  l.M.topLeftCorner(nx, nx) = vf.P;
  l.M.block(0, nx + nu, nx, 1) = 0.5 * vf.p;
  l.M.block(nx + nu, 0, 1, nx) = 0.5 * vf.p.transpose();
  l.M(nx + nu, nx + nu) = vf.s;
  return l;
}

LiftedQuadratic lift_next(const LQProblem& prob, const QuadraticVF& vf) {
  const int nx = prob.nx(), nu = prob.nu(), nxi = prob.nxi();
  if (vf.dim() != nx) throw std::invalid_argument("lift_next: dimension mismatch");
  LiftedQuadratic l;
  l.M = Eigen::MatrixXd::Zero(nx + nu + 1, nx + nu + 1);
  const Eigen::MatrixXd PA = vf.P * prob.A;
  const Eigen::MatrixXd PB = vf.P * prob.B_u;
  l.M.topLeftCorner(nx, nx) = prob.A.transpose() * PA;
  l.M.block(0, nx, nx, nu) = prob.A.transpose() * PB;
  l.M.block(nx, 0, nu, nx) = l.M.block(0, nx, nx, nu).transpose();
  l.M.block(nx, nx, nu, nu) = prob.B_u.transpose() * PB;

  Eigen::VectorXd cross_x = 0.5 * prob.A.transpose() * vf.p;
  Eigen::VectorXd cross_u = 0.5 * prob.B_u.transpose() * vf.p;
  double constant = vf.s;
  if (nxi > 0) {
    const Eigen::VectorXd drift = prob.B_xi * prob.xi_mean;
    cross_x += prob.A.transpose() * vf.P * drift;
    cross_u += prob.B_u.transpose() * vf.P * drift;
    constant += (prob.B_xi.transpose() * vf.P * prob.B_xi * prob.xi_second).trace() +
                vf.p.dot(drift);
  }
  l.M.block(0, nx + nu, nx, 1) = cross_x;
  l.M.block(nx + nu, 0, 1, nx) = cross_x.transpose();
  l.M.block(nx, nx + nu, nu, 1) = cross_u;
  l.M.block(nx + nu, nx, 1, nu) = cross_u.transpose();
  l.M(nx + nu, nx + nu) = constant;
  return l;
}

MomentPair dominating_moments(const SampleSet& samples,
                              const Eigen::Ref<const Eigen::VectorXd>& alpha) {
  const int nx = samples.nx();
  if (alpha.size() != basis_dim(nx))
    throw std::invalid_argument("dominating_moments: coefficient count mismatch");
  const Eigen::VectorXd vals = samples.basis().transpose() * alpha;
  const Eigen::VectorXd& fam = samples.family_values();

  // Sum first, scale once: keeps the packed result as close as floating
  // arithmetic allows to the exact mean of the dominating basis vectors.
  int n_dom = 0;
  Eigen::VectorXd mu_sum = Eigen::VectorXd::Zero(nx);
  Eigen::MatrixXd sigma_sum = Eigen::MatrixXd::Zero(nx, nx);
  for (int i = 0; i < samples.count(); ++i) {
    if (vals[i] >= fam[i]) {  // ties dominate
      const auto x = samples.points().col(i);
      ++n_dom;
      mu_sum += x;
      sigma_sum += x * x.transpose();
    }
  }
  const double inv_n = 1.0 / samples.count();
  MomentPair m;
  m.weight = static_cast<double>(n_dom) / samples.count();
  m.mu = inv_n * mu_sum;
  m.sigma = inv_n * sigma_sum;
  return m;
}

}  // namespace pwmbound
