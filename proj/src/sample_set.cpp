#include "pwmbound/sample_set.hpp"

#include <limits>
#include <stdexcept>

#include "pwmbound/rng.hpp"

namespace pwmbound {

SampleSet::SampleSet(Eigen::MatrixXd points) : points_(std::move(points)) {
  if (points_.cols() < 1 || points_.rows() < 1)
    throw std::invalid_argument("SampleSet: need at least one sample and one dimension");
  basis_.resize(basis_dim(nx()), count());
  for (int i = 0; i < count(); ++i) basis_.col(i) = basis_vector(points_.col(i));
  reset_fold();
}

SampleSet SampleSet::draw(const LQProblem& prob, int count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("SampleSet::draw: need at least one sample");
  const Eigen::MatrixXd cov_sqrt = psd_sqrt(prob.x0_cov);
  Rng rng = make_rng(seed);
  Eigen::MatrixXd pts(prob.nx(), count);
  for (int i = 0; i < count; ++i) pts.col(i) = gaussian_draw(rng, prob.x0_mean, cov_sqrt);
  return SampleSet(std::move(pts));
}

void SampleSet::fold(const QuadraticVF& vf) {
  if (vf.dim() != nx()) throw std::invalid_argument("SampleSet::fold: dimension mismatch");
  const Eigen::VectorXd alpha = pack_alpha(vf);
  // basis dot products reproduce eval exactly at the packed coefficients
  const Eigen::VectorXd vals = basis_.transpose() * alpha;
  family_values_ = family_values_.cwiseMax(vals);
  ++folded_;
}

void SampleSet::sync(const VFFamily& family) {
  if (folded_ > static_cast<int>(family.size()))
    throw std::invalid_argument("SampleSet::sync: cache ahead of the family");
  for (int k = folded_; k < static_cast<int>(family.size()); ++k) fold(family[k]);
}

void SampleSet::reset_fold() {
  family_values_ =
      Eigen::VectorXd::Constant(count(), -std::numeric_limits<double>::infinity());
  folded_ = 0;
}

}  // namespace pwmbound
