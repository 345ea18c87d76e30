#pragma once

#include <Eigen/Dense>

#include "pwmbound/lq_model.hpp"
#include "pwmbound/quad_value.hpp"
#include "pwmbound/sample_set.hpp"

namespace pwmbound {

// Symmetric quadratic form on the lifted vector [x; u; 1].
struct LiftedQuadratic {
  Eigen::MatrixXd M;  // (nx+nu+1) x (nx+nu+1), symmetric
};

// Weighted first/second moments of a state distribution.  Encodes the linear
// objective  weight*s + p'mu + trace(P*sigma)  over value-function
// coefficients; sigma is a second moment (PSD whenever weight > 0).
struct MomentPair {
  double weight = 0.0;
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
};

// Point mass of unit weight at x.
MomentPair dirac_moments(const Eigen::Ref<const Eigen::VectorXd>& x);

// Moments of the problem's initial-state distribution (weight 1).
MomentPair initial_state_moments(const LQProblem& prob);

// Packs the moment objective into basis coordinates, so that
// dot(pack_objective(m), pack_alpha(vf)) == m.weight*vf.s + m.mu'vf.p +
// trace(vf.P * m.sigma).
Eigen::VectorXd pack_objective(const MomentPair& m);

// [x;u;1]' lift_current(vf) [x;u;1] == eval(vf, x); input rows are zero.
LiftedQuadratic lift_current(const LQProblem& prob, const QuadraticVF& vf);

// [x;u;1]' lift_next(vf) [x;u;1] == E[ eval(vf, A x + B_u u + B_xi xi) ],
// exactly, using only the stored noise moments.
LiftedQuadratic lift_next(const LQProblem& prob, const QuadraticVF& vf);

// Moments of the samples where the candidate attains at least the cached
// family maximum (ties included).  The weight is the dominating fraction;
// pack_objective of the result equals the mean of basis_vector over the
// dominating samples.  Requires samples synced with the family backing its
// cache; an all-dominated candidate yields weight 0 and zero moments.
MomentPair dominating_moments(const SampleSet& samples,
                              const Eigen::Ref<const Eigen::VectorXd>& alpha);

}  // namespace pwmbound
