#include "pwmbound/quad_value.hpp"

#include <limits>
#include <stdexcept>

namespace pwmbound {

QuadraticVF zero_vf(int nx) {
  QuadraticVF vf;
  vf.P = Eigen::MatrixXd::Zero(nx, nx);
  vf.p = Eigen::VectorXd::Zero(nx);
  vf.s = 0.0;
  return vf;
}

double eval(const QuadraticVF& vf, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != vf.p.size()) throw std::invalid_argument("eval: dimension mismatch");
  return x.dot(vf.P * x) + vf.p.dot(x) + vf.s;
}

double eval_pwm(const VFFamily& family, const Eigen::Ref<const Eigen::VectorXd>& x,
                int* which) {
  if (family.empty()) throw std::invalid_argument("eval_pwm: empty family");
  double best = -std::numeric_limits<double>::infinity();
  int best_idx = 0;
  for (int k = 0; k < static_cast<int>(family.size()); ++k) {
    const double v = eval(family[k], x);
    if (v > best) {
      best = v;
      best_idx = k;
    }
  }
  if (which) *which = best_idx;
  return best;
}

int basis_dim(int nx) { return 1 + nx + nx * (nx + 1) / 2; }

Eigen::VectorXd basis_vector(const Eigen::Ref<const Eigen::VectorXd>& x) {
  const int nx = static_cast<int>(x.size());
  Eigen::VectorXd phi(basis_dim(nx));
  phi[0] = 1.0;
  phi.segment(1, nx) = x;
  int k = 1 + nx;
  for (int i = 0; i < nx; ++i)
    for (int j = i; j < nx; ++j) phi[k++] = x[i] * x[j];
  return phi;
}

Eigen::VectorXd pack_alpha(const QuadraticVF& vf) {
  const int nx = vf.dim();
  if (vf.P.rows() != nx || vf.P.cols() != nx)
    throw std::invalid_argument("pack_alpha: inconsistent dimensions");
  Eigen::VectorXd alpha(basis_dim(nx));
  alpha[0] = vf.s;
  alpha.segment(1, nx) = vf.p;
  int k = 1 + nx;
  for (int i = 0; i < nx; ++i)
    for (int j = i; j < nx; ++j)
      alpha[k++] = (i == j) ? vf.P(i, i) : vf.P(i, j) + vf.P(j, i);
  return alpha;
}

QuadraticVF unpack_alpha(const Eigen::Ref<const Eigen::VectorXd>& alpha, int nx) {
  if (alpha.size() != basis_dim(nx))
    throw std::invalid_argument("unpack_alpha: wrong coefficient count");
  QuadraticVF vf = zero_vf(nx);
  vf.s = alpha[0];
  vf.p = alpha.segment(1, nx);
  int k = 1 + nx;
  for (int i = 0; i < nx; ++i)
    for (int j = i; j < nx; ++j) {
      if (i == j) {
        vf.P(i, i) = alpha[k];
      } else {
        vf.P(i, j) = 0.5 * alpha[k];
        vf.P(j, i) = 0.5 * alpha[k];
      }
      ++k;
    }
  return vf;
}

}  // namespace pwmbound
