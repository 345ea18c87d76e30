#include "pwmbound/lmi_assembly.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "pwmbound/rng.hpp"

namespace pwmbound {

namespace {

// box certificate for input i on [x;u;1]: z' q z = -(u_i - lo)(u_i - hi) >= 0
Eigen::MatrixXd box_form(const LQProblem& prob, int i) {
  const int d = prob.nx() + prob.nu() + 1;
  const int ui = prob.nx() + i;
  const double lo = prob.u_lo[i], hi = prob.u_hi[i];
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(d, d);
  q(ui, ui) = -1.0;
  q(ui, d - 1) = q(d - 1, ui) = 0.5 * (lo + hi);
  q(d - 1, d - 1) = -lo * hi;
  return q;
}

Eigen::MatrixXd pad_corner(const Eigen::MatrixXd& m, int d) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
  out.topLeftCorner(m.rows(), m.cols()) = m;
  return out;
}

QuadraticVF unit_vf(int k, int nx) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(basis_dim(nx));
  e[k] = 1.0;
  return unpack_alpha(e, nx);
}

// Shared tail: convexity block, multiplier bounds, norm cap.
void add_common_blocks(BellmanSdp& bsdp, int n_lambda) {
  const int K = bsdp.alpha_dim();
  const int nx = bsdp.nx;
  if (bsdp.opts.convex_P) {
    SdpBlock pb;
    pb.dim = nx;
    pb.f0 = Eigen::MatrixXd::Zero(nx, nx);
    for (int k = 0; k < K; ++k) {
      const QuadraticVF u = unit_vf(k, nx);
      if (u.P.cwiseAbs().maxCoeff() > 0)
        pb.coeff.emplace_back(k, u.P);
    }
    bsdp.sdp.blocks.push_back(std::move(pb));
  }
  if (bsdp.opts.norm_cap > 0) {
    SdpBlock nb;
    nb.dim = K + 1;
    nb.f0 = bsdp.opts.norm_cap * Eigen::MatrixXd::Identity(K + 1, K + 1);
    for (int k = 0; k < K; ++k) {
      Eigen::MatrixXd f = Eigen::MatrixXd::Zero(K + 1, K + 1);
      f(k, K) = f(K, k) = 1.0;
      nb.coeff.emplace_back(k, f);
    }
    bsdp.sdp.blocks.push_back(std::move(nb));
  }
  for (int j = 0; j < n_lambda; ++j) {
    SdpBlock lb;
    lb.dim = 1;
    lb.f0 = Eigen::MatrixXd::Zero(1, 1);
    lb.coeff.emplace_back(K + j, Eigen::MatrixXd::Identity(1, 1));
    bsdp.sdp.blocks.push_back(std::move(lb));
  }
}

}  // namespace

int BellmanSdp::alpha_dim() const { return basis_dim(nx); }

QuadraticVF BellmanSdp::vf_from(const Eigen::VectorXd& y) const {
  if (y.size() != sdp.num_vars)
    throw std::invalid_argument("bellman sdp: decision vector has wrong length");
  return unpack_alpha(y.head(alpha_dim()), nx);
}

BellmanSdp assemble(const LQProblem& prob, const VFFamily& a_con,
                    const MomentPair& objective, const BellmanSdpOptions& opts) {
  validate(prob);
  BellmanSdp bsdp;
  bsdp.nx = prob.nx();
  bsdp.nu = prob.nu();
  bsdp.n_con = static_cast<int>(a_con.size());
  bsdp.opts = opts;

  const int K = bsdp.alpha_dim();
  const int nu = prob.nu();
  const int d = prob.nx() + nu + 2;  // [x; u; 1; t]
  bsdp.sdp.num_vars = K + bsdp.n_con + nu;

  SdpBlock main;
  main.dim = d;
  main.f0 = Eigen::MatrixXd::Zero(d, d);
  main.f0.topLeftCorner(d - 1, d - 1) = prob.L;
  main.f0(d - 1, d - 1) = prob.gamma;
  for (int k = 0; k < K; ++k)
    main.coeff.emplace_back(k, (-pad_corner(lift_current(prob, unit_vf(k, prob.nx())).M, d)).eval());
  for (int j = 0; j < bsdp.n_con; ++j) {
    Eigen::MatrixXd f = pad_corner(lift_next(prob, a_con[j]).M, d);
    f(d - 1, d - 1) = -1.0;
    main.coeff.emplace_back(K + j, std::move(f));
  }
  for (int i = 0; i < nu; ++i)
    main.coeff.emplace_back(K + bsdp.n_con + i, (-pad_corner(box_form(prob, i), d)).eval());
  bsdp.sdp.blocks.push_back(std::move(main));

  add_common_blocks(bsdp, bsdp.n_con + nu);
  set_objective(bsdp, objective);
  return bsdp;
}

void append_conditioning(BellmanSdp& bsdp, const LQProblem& prob, const QuadraticVF& vf) {
  if (vf.dim() != bsdp.nx)
    throw std::invalid_argument("bellman sdp: conditioning member has wrong dimension");
  const int at = bsdp.lambda_box_offset();  // new multiplier sits before the box ones
  for (auto& blk : bsdp.sdp.blocks)
    for (auto& entry : blk.coeff)
      if (entry.first >= at) ++entry.first;

  Eigen::VectorXd nb(bsdp.sdp.num_vars + 1);
  nb.head(at) = bsdp.sdp.b.head(at);
  nb[at] = 0.0;
  nb.tail(bsdp.sdp.num_vars - at) = bsdp.sdp.b.tail(bsdp.sdp.num_vars - at);
  bsdp.sdp.b = std::move(nb);
  bsdp.sdp.num_vars += 1;

  const int d = bsdp.nx + bsdp.nu + 2;
  Eigen::MatrixXd f = pad_corner(lift_next(prob, vf).M, d);
  f(d - 1, d - 1) = -1.0;
  bsdp.sdp.blocks[0].coeff.emplace_back(at, std::move(f));

  SdpBlock lb;
  lb.dim = 1;
  lb.f0 = Eigen::MatrixXd::Zero(1, 1);
  lb.coeff.emplace_back(at, Eigen::MatrixXd::Identity(1, 1));
  bsdp.sdp.blocks.push_back(std::move(lb));
  bsdp.n_con += 1;
}

void set_objective(BellmanSdp& bsdp, const MomentPair& objective) {
  if (objective.mu.size() != bsdp.nx)
    throw std::invalid_argument("bellman sdp: objective moments have wrong dimension");
  bsdp.sdp.b = Eigen::VectorXd::Zero(bsdp.sdp.num_vars);
  bsdp.sdp.b.head(bsdp.alpha_dim()) = pack_objective(objective);
}

BellmanSdp assemble_single(const LQProblem& prob, const MomentPair& objective,
                           const BellmanSdpOptions& opts) {
  validate(prob);
  BellmanSdp bsdp;
  bsdp.nx = prob.nx();
  bsdp.nu = prob.nu();
  bsdp.n_con = 0;
  bsdp.opts = opts;

  const int K = bsdp.alpha_dim();
  const int nu = prob.nu();
  const int d = prob.nx() + nu + 1;  // [x; u; 1], the function conditions on itself
  bsdp.sdp.num_vars = K + nu;

  SdpBlock main;
  main.dim = d;
  main.f0 = prob.L;
  for (int k = 0; k < K; ++k) {
    const QuadraticVF u = unit_vf(k, prob.nx());
    Eigen::MatrixXd f = -lift_current(prob, u).M + prob.gamma * lift_next(prob, u).M;
    main.coeff.emplace_back(k, std::move(f));
  }
  for (int i = 0; i < nu; ++i)
    main.coeff.emplace_back(K + i, (-box_form(prob, i)).eval());
  bsdp.sdp.blocks.push_back(std::move(main));

  add_common_blocks(bsdp, nu);
  set_objective(bsdp, objective);
  return bsdp;
}

namespace {

// One pass over Monte-Carlo (x, u) pairs; calls visit(x, u, stage, best_next)
// with best_next = max over `family` of the expected next-step value.
template <typename Visit>
void audit_sweep(const LQProblem& prob, const VFFamily& family, int n_samples,
                 std::uint64_t seed, Visit&& visit) {
  if (family.empty()) throw std::invalid_argument("audit: empty conditioning family");
  if (n_samples < 1) throw std::invalid_argument("audit: need at least one sample");
  std::vector<Eigen::MatrixXd> lifted;
  lifted.reserve(family.size());
  for (const auto& vf : family) lifted.push_back(lift_next(prob, vf).M);

  const Eigen::MatrixXd sq = psd_sqrt(prob.x0_cov);
  Rng rng = make_rng(seed);
  const int nx = prob.nx(), nu = prob.nu();
  Eigen::VectorXd z(nx + nu + 1);
  z[nx + nu] = 1.0;
  for (int s = 0; s < n_samples; ++s) {
    const Eigen::VectorXd x = gaussian_draw(rng, prob.x0_mean, sq);
    Eigen::VectorXd u(nu);
    for (int i = 0; i < nu; ++i) {
      std::uniform_real_distribution<double> dist(prob.u_lo[i], prob.u_hi[i]);
      u[i] = dist(rng);
    }
    z.head(nx) = x;
    z.segment(nx, nu) = u;
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& m : lifted) best = std::max(best, z.dot(m * z));
    visit(x, u, stage_cost(prob, x, u), best);
  }
}

}  // namespace

double feasibility_audit(const LQProblem& prob, const VFFamily& a_con,
                         const QuadraticVF& vf, int n_samples, std::uint64_t seed) {
  VFFamily cond = a_con;
  cond.push_back(vf);
  double worst = -std::numeric_limits<double>::infinity();
  audit_sweep(prob, cond, n_samples, seed,
              [&](const Eigen::VectorXd& x, const Eigen::VectorXd&, double stage,
                  double best_next) {
                worst = std::max(worst, eval(vf, x) - (stage + prob.gamma * best_next));
              });
  return worst;
}

Eigen::VectorXd feasibility_audit_family(const LQProblem& prob, const VFFamily& family,
                                         int n_samples, std::uint64_t seed) {
  Eigen::VectorXd worst = Eigen::VectorXd::Constant(
      static_cast<int>(family.size()), -std::numeric_limits<double>::infinity());
  audit_sweep(prob, family, n_samples, seed,
              [&](const Eigen::VectorXd& x, const Eigen::VectorXd&, double stage,
                  double best_next) {
                const double rhs = stage + prob.gamma * best_next;
                for (int k = 0; k < worst.size(); ++k)
                  worst[k] = std::max(worst[k], eval(family[k], x) - rhs);
              });
  return worst;
}

}  // namespace pwmbound
