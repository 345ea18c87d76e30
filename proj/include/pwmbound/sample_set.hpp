#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "pwmbound/lq_model.hpp"
#include "pwmbound/quad_value.hpp"

namespace pwmbound {

// Fixed set of state samples with a cached basis matrix and an incrementally
// maintained point-wise maximum over an append-only family of quadratics.
// Reductions over samples always run in storage order so results do not
// depend on chunking or thread counts.
class SampleSet {
 public:
  explicit SampleSet(Eigen::MatrixXd points);  // nx x count

  // Draws `count` i.i.d. samples from the problem's initial-state Gaussian.
  static SampleSet draw(const LQProblem& prob, int count, std::uint64_t seed);

  int count() const { return static_cast<int>(points_.cols()); }
  int nx() const { return static_cast<int>(points_.rows()); }
  const Eigen::MatrixXd& points() const { return points_; }
  const Eigen::MatrixXd& basis() const { return basis_; }  // basis_dim x count

  // Folds one more family member into the cached maximum.  Callers must fold
  // members in family order; folded_count() tracks how many have been seen.
  void fold(const QuadraticVF& vf);
  // Folds any members of `family` beyond folded_count().  Throws if the
  // cache is ahead of the family (members must never be removed).
  void sync(const VFFamily& family);
  void reset_fold();

  int folded_count() const { return folded_; }
  // Current maxima; -inf entries until the first fold.
  const Eigen::VectorXd& family_values() const { return family_values_; }

 private:
  Eigen::MatrixXd points_;
  Eigen::MatrixXd basis_;
  Eigen::VectorXd family_values_;
  int folded_ = 0;
};

}  // namespace pwmbound
