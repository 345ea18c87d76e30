#include "pwmbound/rng.hpp"

#include <stdexcept>

namespace pwmbound {

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("psd_sqrt: matrix not square");
  if (a.size() == 0) return a;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success) throw std::runtime_error("psd_sqrt: eigensolver failed");
  const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
  if (es.eigenvalues().minCoeff() < -1e-9 * (1.0 + scale))
    throw std::invalid_argument("psd_sqrt: matrix not positive semidefinite");
  Eigen::VectorXd roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::VectorXd gaussian_draw(Rng& rng, const Eigen::VectorXd& mean,
                              const Eigen::MatrixXd& cov_sqrt) {
  std::normal_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = unit(rng);
  return mean + cov_sqrt * z;
}

}  // namespace pwmbound
