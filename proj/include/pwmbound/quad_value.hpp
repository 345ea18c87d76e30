#pragma once

#include <Eigen/Dense>
#include <vector>

namespace pwmbound {

// One quadratic value function x -> x'Px + p'x + s with P symmetric.
struct QuadraticVF {
  Eigen::MatrixXd P;
  Eigen::VectorXd p;
  double s = 0.0;

  int dim() const { return static_cast<int>(p.size()); }
};

using VFFamily = std::vector<QuadraticVF>;

QuadraticVF zero_vf(int nx);

double eval(const QuadraticVF& vf, const Eigen::Ref<const Eigen::VectorXd>& x);

// Point-wise maximum over a non-empty family.  `which` (optional) receives
// the index of the attaining member; ties go to the lowest index.
double eval_pwm(const VFFamily& family, const Eigen::Ref<const Eigen::VectorXd>& x,
                int* which = nullptr);

// Monomial basis (1, x_1..x_n, x_i x_j for i <= j, row-major upper triangle).
// Packed coefficient vectors store each off-diagonal quadratic coefficient
// once, doubled, so that dot(alpha, basis_vector(x)) == eval(unpack(alpha), x).
int basis_dim(int nx);
Eigen::VectorXd basis_vector(const Eigen::Ref<const Eigen::VectorXd>& x);

Eigen::VectorXd pack_alpha(const QuadraticVF& vf);
QuadraticVF unpack_alpha(const Eigen::Ref<const Eigen::VectorXd>& alpha, int nx);

}  // namespace pwmbound
