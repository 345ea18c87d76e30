#include "pwmbound/sdp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace pwmbound {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kDenseVarLimit = 150;   // above this, try the structured Schur path
constexpr double kStepFraction = 0.98;

double sym_error(const Eigen::MatrixXd& m) {
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

}  // namespace

void validate(const SdpProblem& prob) {
  if (prob.num_vars < 1) throw std::invalid_argument("sdp: need at least one variable");
  if (prob.b.size() != prob.num_vars)
    throw std::invalid_argument("sdp: objective length does not match num_vars");
  if (!prob.b.allFinite()) throw std::invalid_argument("sdp: objective has non-finite entries");
  if (prob.blocks.empty()) throw std::invalid_argument("sdp: no constraint blocks");
  for (const auto& blk : prob.blocks) {
    if (blk.dim < 1) throw std::invalid_argument("sdp: block dimension must be positive");
    if (blk.f0.rows() != blk.dim || blk.f0.cols() != blk.dim)
      throw std::invalid_argument("sdp: constant block has wrong shape");
    if (!blk.f0.allFinite()) throw std::invalid_argument("sdp: non-finite constant block");
    if (sym_error(blk.f0) > 1e-9 * (1.0 + blk.f0.cwiseAbs().maxCoeff()))
      throw std::invalid_argument("sdp: constant block not symmetric");
    std::vector<char> seen(prob.num_vars, 0);
    for (const auto& [idx, mat] : blk.coeff) {
      if (idx < 0 || idx >= prob.num_vars)
        throw std::invalid_argument("sdp: coefficient variable index out of range");
      if (seen[idx]) throw std::invalid_argument("sdp: duplicate variable in block");
      seen[idx] = 1;
      if (mat.rows() != blk.dim || mat.cols() != blk.dim)
        throw std::invalid_argument("sdp: coefficient block has wrong shape");
      if (!mat.allFinite()) throw std::invalid_argument("sdp: non-finite coefficient");
      if (sym_error(mat) > 1e-9 * (1.0 + mat.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("sdp: coefficient block not symmetric");
    }
  }
}

const char* to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::Optimal: return "Optimal";
    case SdpStatus::Infeasible: return "Infeasible";
    case SdpStatus::Unbounded: return "Unbounded";
    case SdpStatus::MaxIter: return "MaxIter";
  }
  return "?";
}

std::string SdpSolution::summary() const {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "status=%s obj=%.9g gap=%.3g dres=%.3g mineig=%.3g iters=%d",
                to_string(status), primal_obj, gap, dual_residual, min_eig, iterations);
  return buf;
}

namespace {

// ---------------------------------------------------------------------------
// internal scaled/remapped problem (slack, when present, is a real variable
// with identity coefficients on every covered block plus its own bound)
// ---------------------------------------------------------------------------

struct IBlock {
  int dim = 0;
  Eigen::MatrixXd f0;
  std::vector<std::pair<int, Eigen::MatrixXd>> coeff;  // active-variable indices
  bool bound1 = false;  // dim 1 with exactly one variable (keeps Schur diagonal)
};

struct Internal {
  int m = 0;  // active variables; slack (if present) is index m-1
  bool slack = false;
  double big_m = 0;
  Eigen::VectorXd b;       // scaled; includes -M when slack is on
  std::vector<IBlock> blocks;
  std::vector<int> to_orig;     // active index -> original (-1 for slack)
  Eigen::VectorXd scale;        // y_orig = y_scaled / scale
  Eigen::VectorXd y0;
  int n_total = 0;              // sum of block dims
};

// Largest step with S + a*dS staying PSD (capped at `cap`).
double max_step(const Eigen::MatrixXd& s, const Eigen::MatrixXd& ds, double cap) {
  if (s.rows() == 1) {
    const double v = s(0, 0), dv = ds(0, 0);
    if (dv >= 0) return cap;
    return std::min(cap, -v / dv);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success) return 0.0;
  Eigen::MatrixXd w = llt.matrixL().solve(ds);
  w = llt.matrixL().solve(w.transpose().eval());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin >= -1e-14) return cap;
  return std::min(cap, -1.0 / lmin);
}

struct BlockState {
  Eigen::MatrixXd X, Z, Zinv;
};

// svec with sqrt(2) off-diagonal scaling: <A,B>_F == svec(A).svec(B).
int svec_dim(int d) { return d * (d + 1) / 2; }

Eigen::VectorXd svec(const Eigen::MatrixXd& a) {
  const int d = static_cast<int>(a.rows());
  Eigen::VectorXd v(svec_dim(d));
  const double r2 = std::sqrt(2.0);
  int k = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) v[k++] = (i == j) ? a(i, i) : r2 * a(i, j);
  return v;
}

// ---------------------------------------------------------------------------
// Newton-system engine.  Builds and factors  B_ij = tr(F_i Zinv F_j X)
// either densely or, when the problem is a long list of one-variable blocks
// plus a few small blocks, as arrowhead + low-rank.  One-variable blocks
// touching only their own variable contribute a diagonal entry; one-variable
// blocks coupling a variable with the shared slack variable contribute a
// diagonal entry plus one entry of a single shared column — together an
// arrowhead matrix K0 that solves in O(|S|).  The few genuinely coupled
// blocks fold into a low-rank G'HG term handled by Woodbury, and variables
// with no one-variable block at all go through a final small Schur step.
// ---------------------------------------------------------------------------
struct NewtonEngine {
  const Internal* ip = nullptr;
  bool structured = false;
  bool use_dense_now = false;   // which factorization the last factor() produced
  bool force_dense = false;     // driver escalation: skip the structured factor
  double extra_ridge = 0.0;     // escalated by the driver when directions blow up

  // structured data (fixed across iterations)
  std::vector<int> multi;        // blocks folded into G (svec rows)
  std::vector<int> row_off;      // svec row offset per multi block
  int nbar = 0;
  Eigen::MatrixXd G;             // nbar x m, svec of coefficients
  Eigen::MatrixXd g_s;           // nbar x |S|, the S columns of G
  std::vector<int> diag1;        // one-variable single-coefficient blocks
  std::vector<std::pair<int, int>> arrow1;  // (block, index of the non-slack coeff)
  std::vector<int> set_s, set_v; // anchored variables / the rest
  std::vector<int> var_class;    // >=0: position in set_s, -1: member of V
  int spos = -1;                 // position of the slack variable within set_s

  // per-iteration factorization
  Eigen::LDLT<Eigen::MatrixXd> dense_ldlt;
  Eigen::MatrixXd dense_b;
  Eigen::VectorXd dense_d;  // Jacobi equilibration, factor holds D B D
  Eigen::VectorXd d_diag;   // diagonal of K0 (S order)
  Eigen::VectorXd arr_c;    // arrowhead column of K0 (S order, zero at spos)
  Eigen::VectorXd arr_cd;   // arr_c / d_diag
  double arr_gamma = 1.0;   // arrowhead Schur scalar
  Eigen::MatrixXd hg;            // H * G
  Eigen::LLT<Eigen::MatrixXd> c_llt;        // H^-1 + G_S K0^-1 G_S'
  Eigen::MatrixXd y_kinv;        // K0^-1 G_S'  (|S| x nbar)
  Eigen::MatrixXd u;             // K^-1 B_SV  (|S| x |V|)
  Eigen::MatrixXd schur_v_u;     // eigenvectors of the free-variable Schur
  Eigen::VectorXd schur_v_winv;  // clamped inverse eigenvalues
  Eigen::MatrixXd b_vs;          // |V| x |S|

  void init(const Internal& prob) {
    ip = &prob;
    structured = false;
    if (prob.m <= kDenseVarLimit) return;
    nbar = 0;
    const int svar = prob.slack ? prob.m - 1 : -1;
    std::vector<char> has_anchor(prob.m, 0);
    for (int k = 0; k < static_cast<int>(prob.blocks.size()); ++k) {
      const auto& blk = prob.blocks[k];
      if (blk.bound1) {
        diag1.push_back(k);
        has_anchor[blk.coeff[0].first] = 1;
        continue;
      }
      int own = -1;  // which coefficient is the variable's own, the other is slack
      if (blk.dim == 1 && blk.coeff.size() == 2 && svar >= 0) {
        if (blk.coeff[1].first == svar && blk.coeff[0].first != svar) own = 0;
        else if (blk.coeff[0].first == svar && blk.coeff[1].first != svar) own = 1;
      }
      if (own >= 0 && blk.coeff[own].second(0, 0) != 0.0) {
        arrow1.emplace_back(k, own);
        has_anchor[blk.coeff[own].first] = 1;
        has_anchor[svar] = 1;
        continue;
      }
      multi.push_back(k);
      row_off.push_back(nbar);
      nbar += svec_dim(blk.dim);
    }
    var_class.assign(prob.m, -1);
    for (int i = 0; i < prob.m; ++i) {
      if (has_anchor[i]) {
        var_class[i] = static_cast<int>(set_s.size());
        set_s.push_back(i);
      } else {
        set_v.push_back(i);
      }
    }
    if (svar >= 0) spos = var_class[svar];
    if (!arrow1.empty() && spos < 0) return;  // arrowhead needs the slack anchored
    if (nbar > 400 || static_cast<int>(set_v.size()) > 200) {
      if (std::getenv("PWMBOUND_TRACE_NEWTON"))
        std::fprintf(stderr, "newton: structured rejected, nbar=%d nv=%zu (m=%d)\n", nbar,
                     set_v.size(), prob.m);
      return;
    }
    G = Eigen::MatrixXd::Zero(nbar, prob.m);
    for (int q = 0; q < static_cast<int>(multi.size()); ++q) {
      const auto& blk = prob.blocks[multi[q]];
      for (const auto& [i, f] : blk.coeff)
        G.block(row_off[q], i, svec_dim(blk.dim), 1) = svec(f);
    }
    g_s.resize(nbar, static_cast<int>(set_s.size()));
    for (int c = 0; c < static_cast<int>(set_s.size()); ++c) g_s.col(c) = G.col(set_s[c]);
    structured = true;
  }

  // Returns false when factorization breaks down even after a dense retry.
  bool factor(const std::vector<BlockState>& st) {
    if (structured && !force_dense && factor_structured(st)) {
      use_dense_now = false;
      return true;
    }
    if (structured && !force_dense && std::getenv("PWMBOUND_TRACE_NEWTON"))
      std::fprintf(stderr, "newton: structured factor fell back to dense (m=%d)\n", ip->m);
    use_dense_now = true;
    return factor_dense(st);
  }

  bool factor_dense(const std::vector<BlockState>& st) {
    const int m = ip->m;
    dense_b = Eigen::MatrixXd::Zero(m, m);
    std::vector<Eigen::MatrixXd> t;
    for (int k = 0; k < static_cast<int>(ip->blocks.size()); ++k) {
      const auto& blk = ip->blocks[k];
      const auto& s = st[k];
      if (blk.dim == 1) {
        const double w = s.X(0, 0) / s.Z(0, 0);
        for (size_t a = 0; a < blk.coeff.size(); ++a)
          for (size_t c = a; c < blk.coeff.size(); ++c) {
            const int i = blk.coeff[a].first, j = blk.coeff[c].first;
            const double v = w * blk.coeff[a].second(0, 0) * blk.coeff[c].second(0, 0);
            dense_b(i, j) += v;
            if (i != j) dense_b(j, i) += v;
          }
        continue;
      }
      // entries <F_a, (Zinv F_c X + X F_c Zinv)/2>, symmetric in (a, c)
      t.clear();
      t.reserve(blk.coeff.size());
      for (const auto& [j, fj] : blk.coeff) {
        const Eigen::MatrixXd w = s.Zinv * fj * s.X;
        t.push_back(0.5 * (w + w.transpose()));
      }
      for (size_t a = 0; a < blk.coeff.size(); ++a)
        for (size_t c = a; c < blk.coeff.size(); ++c) {
          const int i = blk.coeff[a].first, j = blk.coeff[c].first;
          const double v = blk.coeff[a].second.cwiseProduct(t[c]).sum();
          dense_b(i, j) += v;
          if (i != j) dense_b(j, i) += v;
        }
    }
    // equilibrate: slack and multiplier scales can spread the diagonal over
    // many decades, which would make the raw factorization drop rows
    if (!(dense_b.diagonal().minCoeff() > 0)) return false;
    dense_d = dense_b.diagonal().cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd beq = dense_d.asDiagonal() * dense_b * dense_d.asDiagonal();
    beq.diagonal().array() += 1e-14 + extra_ridge;
    // pivoted LDLT: near a degenerate optimum the Schur matrix develops an
    // almost-null subspace long before mu reaches the tolerance, and an
    // unpivoted factorization turns it into astronomically large garbage
    dense_ldlt.compute(beq);
    return dense_ldlt.info() == Eigen::Success;
  }

  bool factor_structured(const std::vector<BlockState>& st) {
    const int ns = static_cast<int>(set_s.size());
    const int nv = static_cast<int>(set_v.size());
    // arrowhead part K0 from the one-variable blocks
    d_diag = Eigen::VectorXd::Zero(ns);
    arr_c = Eigen::VectorXd::Zero(ns);
    for (const int k : diag1) {
      const auto& [i, f] = ip->blocks[k].coeff[0];
      d_diag[var_class[i]] += f(0, 0) * f(0, 0) * st[k].X(0, 0) / st[k].Z(0, 0);
    }
    for (const auto& [k, own] : arrow1) {
      const auto& blk = ip->blocks[k];
      const double w = st[k].X(0, 0) / st[k].Z(0, 0);
      const double fo = blk.coeff[own].second(0, 0);
      const double fs = blk.coeff[1 - own].second(0, 0);
      const int c = var_class[blk.coeff[own].first];
      d_diag[c] += w * fo * fo;
      d_diag[spos] += w * fs * fs;
      arr_c[c] += w * fo * fs;
    }
    if (ns > 0 && (d_diag.array() <= 0).any()) {
      if (std::getenv("PWMBOUND_TRACE_NEWTON"))
        std::fprintf(stderr, "newton: structured factor, nonpositive bound diagonal (min=%.3e)\n",
                     d_diag.minCoeff());
      return false;
    }
    if (spos >= 0) {
      arr_cd = arr_c.cwiseQuotient(d_diag);
      arr_gamma = d_diag[spos] - arr_c.dot(arr_cd);
      if (!(arr_gamma > 0)) {
        if (std::getenv("PWMBOUND_TRACE_NEWTON"))
          std::fprintf(stderr, "newton: structured factor, arrowhead pivot %.3e not positive\n",
                       arr_gamma);
        return false;
      }
    }

    // H = blkdiag over multi blocks of the symmetrized operator
    // M -> (Zinv M X + X M Zinv)/2; assemble H*G and H^-1 blockwise.
    hg.resize(nbar, ip->m);
    Eigen::MatrixXd hinv = Eigen::MatrixXd::Zero(nbar, nbar);
    for (int q = 0; q < static_cast<int>(multi.size()); ++q) {
      const auto& blk = ip->blocks[multi[q]];
      const auto& s = st[multi[q]];
      const int d = blk.dim, nb = svec_dim(d), off = row_off[q];
      Eigen::MatrixXd h(nb, nb);
      int col = 0;
      for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
          Eigen::MatrixXd e = Eigen::MatrixXd::Zero(d, d);
          const double v = (i == j) ? 1.0 : 1.0 / std::sqrt(2.0);
          e(i, j) = v;
          e(j, i) = v;
          const Eigen::MatrixXd w = 0.5 * (s.Zinv * e * s.X + s.X * e * s.Zinv);
          h.col(col++) = svec(w);
        }
      h = (0.5 * (h + h.transpose())).eval();
      if (extra_ridge > 0)
        h.diagonal().array() += extra_ridge * (1.0 + h.diagonal().cwiseAbs().maxCoeff());
      Eigen::LLT<Eigen::MatrixXd> hllt(h);
      if (hllt.info() != Eigen::Success) {
        // positive definite in exact arithmetic; rounding at extreme condition
        // can shave it, and a relative ridge costs far less than a dense retry
        h.diagonal().array() += 1e-12 * (1.0 + h.diagonal().cwiseAbs().maxCoeff());
        hllt.compute(h);
      }
      if (hllt.info() != Eigen::Success) {
        if (std::getenv("PWMBOUND_TRACE_NEWTON"))
          std::fprintf(stderr, "newton: structured factor, block operator not PD (dim=%d)\n", d);
        return false;
      }
      hinv.block(off, off, nb, nb) = hllt.solve(Eigen::MatrixXd::Identity(nb, nb));
      hg.middleRows(off, nb) = h * G.middleRows(off, nb);
    }

    y_kinv.resize(ns, nbar);
    for (int j = 0; j < nbar; ++j) y_kinv.col(j) = k0_solve(g_s.row(j).transpose());
    Eigen::MatrixXd cmat = hinv;
    cmat.noalias() += g_s * y_kinv;
    cmat = (0.5 * (cmat + cmat.transpose())).eval();
    c_llt.compute(cmat);
    if (c_llt.info() != Eigen::Success) {
      if (std::getenv("PWMBOUND_TRACE_NEWTON"))
        std::fprintf(stderr, "newton: structured factor, capacitance not PD (nbar=%d)\n", nbar);
      return false;
    }

    if (nv > 0) {
      Eigen::MatrixXd b_vv(nv, nv);
      b_vs.resize(nv, ns);
      for (int a = 0; a < nv; ++a) {
        const Eigen::VectorXd ha = hg.col(set_v[a]);
        for (int c = a; c < nv; ++c)
          b_vv(a, c) = b_vv(c, a) = G.col(set_v[c]).dot(ha);
        for (int c = 0; c < ns; ++c) b_vs(a, c) = G.col(set_s[c]).dot(ha);
      }
      u.resize(ns, nv);
      for (int a = 0; a < nv; ++a) u.col(a) = apply_kinv(b_vs.row(a).transpose());
      Eigen::MatrixXd schur = b_vv - b_vs * u;
      schur = (0.5 * (schur + schur.transpose())).eval();
      // positive definite in exact arithmetic, but the subtraction is
      // cancellation-heavy near convergence and can leave small negative
      // eigenvalues; clamp the spectrum instead of rejecting the factor, so
      // only the genuinely drowned directions get damped
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(schur);
      if (es.info() != Eigen::Success) {
        if (std::getenv("PWMBOUND_TRACE_NEWTON"))
          std::fprintf(stderr, "newton: structured factor, free-variable schur breakdown (nv=%d)\n",
                       nv);
        return false;
      }
      const double wmax = es.eigenvalues().cwiseAbs().maxCoeff();
      const double floor = std::max(1e-12, extra_ridge) * (1.0 + wmax);
      schur_v_u = es.eigenvectors();
      schur_v_winv = es.eigenvalues().cwiseMax(floor).cwiseInverse();
    }
    return true;
  }

  // K0^-1 r: diagonal solve plus the arrowhead pivot on the slack coordinate.
  Eigen::VectorXd k0_solve(const Eigen::VectorXd& r) const {
    Eigen::VectorXd t = r.cwiseQuotient(d_diag);
    if (spos < 0) return t;
    const double vs = (r[spos] - arr_c.dot(t)) / arr_gamma;
    t -= arr_cd * vs;
    t[spos] = vs;
    return t;
  }

  // B v with B = G' H G + K0, using the pieces already assembled for factoring.
  Eigen::VectorXd apply_b(const Eigen::VectorXd& v) const {
    const int ns = static_cast<int>(set_s.size());
    Eigen::VectorXd out = G.transpose() * (hg * v);
    for (int c = 0; c < ns; ++c) out[set_s[c]] += d_diag[c] * v[set_s[c]];
    if (spos >= 0) {
      const int sv = set_s[spos];
      double acc = 0;
      for (int c = 0; c < ns; ++c) acc += arr_c[c] * v[set_s[c]];
      out[sv] += acc;
      for (int c = 0; c < ns; ++c) out[set_s[c]] += arr_c[c] * v[sv];
    }
    return out;
  }

  // K^-1 r with K = K0 + G_S' H G_S via Woodbury.
  Eigen::VectorXd apply_kinv(const Eigen::VectorXd& r) const {
    const Eigen::VectorXd t = k0_solve(r);
    if (nbar == 0) return t;
    const Eigen::VectorXd w = c_llt.solve(g_s * t);
    return t - y_kinv * w;
  }

  // One factored backsolve plus guarded iterative refinement against the
  // exact operator: the Schur system turns ill-conditioned near the optimum
  // and a raw solve floors the residual, so keep correcting while each pass
  // still shrinks the true residual and return the best candidate seen.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    const auto once = [&](const Eigen::VectorXd& r) -> Eigen::VectorXd {
      if (use_dense_now)
        return dense_d.asDiagonal() * dense_ldlt.solve(dense_d.asDiagonal() * r);
      return solve_structured(r);
    };
    const auto apply_exact = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
      return use_dense_now ? (dense_b * v).eval() : apply_b(v);
    };
    Eigen::VectorXd v = once(rhs);
    Eigen::VectorXd vbest = v;
    double best = kInf, prev = kInf;
    for (int pass = 0; pass < 5; ++pass) {
      const double n = (rhs - apply_exact(v)).norm();
      if (n < best) {
        best = n;
        vbest = v;
      }
      if (n <= 1e-13 * (1.0 + rhs.norm()) || n > 0.5 * prev) break;
      prev = n;
      v += once(rhs - apply_exact(v));
    }
    return vbest;
  }

  Eigen::VectorXd solve_structured(const Eigen::VectorXd& rhs) const {
    const int ns = static_cast<int>(set_s.size());
    const int nv = static_cast<int>(set_v.size());
    Eigen::VectorXd r_s(ns), r_v(nv);
    for (int c = 0; c < ns; ++c) r_s[c] = rhs[set_s[c]];
    for (int a = 0; a < nv; ++a) r_v[a] = rhs[set_v[a]];
    const Eigen::VectorXd t1 = apply_kinv(r_s);
    Eigen::VectorXd dv(nv);
    if (nv > 0) {
      const Eigen::VectorXd rv2 = r_v - b_vs * t1;
      dv = schur_v_u * (schur_v_winv.asDiagonal() * (schur_v_u.transpose() * rv2));
    }
    Eigen::VectorXd ds = t1;
    if (nv > 0) ds -= u * dv;
    Eigen::VectorXd out(ip->m);
    for (int c = 0; c < ns; ++c) out[set_s[c]] = ds[c];
    for (int a = 0; a < nv; ++a) out[set_v[a]] = dv[a];
    return out;
  }
};

struct IpmOutcome {
  SdpStatus status = SdpStatus::MaxIter;
  Eigen::VectorXd y;
  std::vector<Eigen::MatrixXd> X;
  int iterations = 0;
  std::vector<double> mu_trace;
  bool converged = false;       // gap + dual residual below tolerance
};

// Full IPM run on the internal problem.
IpmOutcome run_ipm(const Internal& ip, const SdpOptions& opts) {
  IpmOutcome out;
  const int m = ip.m;
  const int nblocks = static_cast<int>(ip.blocks.size());

  NewtonEngine engine;
  engine.init(ip);

  Eigen::VectorXd y = ip.y0;
  std::vector<BlockState> st(nblocks);
  double bscale = 0;
  for (int i = 0; i < m; ++i)
    if (!ip.slack || i != m - 1) bscale = std::max(bscale, std::abs(ip.b[i]));
  double tau_x = std::max(10.0, 1.0 + bscale);
  if (ip.slack) tau_x = std::max(tau_x, ip.big_m / std::max(1, ip.n_total));

  auto rebuild_z = [&]() {
    for (int k = 0; k < nblocks; ++k) {
      Eigen::MatrixXd z = ip.blocks[k].f0;
      for (const auto& [i, f] : ip.blocks[k].coeff) z += y[i] * f;
      st[k].Z = std::move(z);
    }
  };
  rebuild_z();

  auto refresh_zinv = [&]() -> bool {
    for (int k = 0; k < nblocks; ++k) {
      if (ip.blocks[k].dim == 1) {
        if (st[k].Z(0, 0) <= 0) return false;
        st[k].Zinv = Eigen::MatrixXd::Constant(1, 1, 1.0 / st[k].Z(0, 0));
      } else {
        Eigen::LLT<Eigen::MatrixXd> llt(st[k].Z);
        if (llt.info() != Eigen::Success) return false;
        st[k].Zinv = llt.solve(Eigen::MatrixXd::Identity(ip.blocks[k].dim, ip.blocks[k].dim));
      }
    }
    return true;
  };
  if (!refresh_zinv()) {
    out.y = y;
    for (int k = 0; k < nblocks; ++k)
      out.X.push_back(Eigen::MatrixXd::Identity(ip.blocks[k].dim, ip.blocks[k].dim));
    return out;
  }
  // start on the central path: X = tau Z^-1 gives XZ = tau I exactly, however
  // unevenly the starting Z spreads across blocks; an identity X would put
  // coordinates with small starting z thousands of times "ahead" of the rest,
  // and the first predictor steps from such a skewed point reliably blow up
  for (int k = 0; k < nblocks; ++k)
    st[k].X = (0.5 * tau_x * (st[k].Zinv + st[k].Zinv.transpose())).eval();

  auto mu_of = [&]() {
    double acc = 0;
    for (int k = 0; k < nblocks; ++k) acc += st[k].X.cwiseProduct(st[k].Z).sum();
    return acc / ip.n_total;
  };
  // residual on the original coordinates; the slack row only guards
  // boundedness and its -M objective entry must not inflate the normalizer
  double borig = 0;
  for (int i = 0; i < m; ++i)
    if (!ip.slack || i != m - 1) borig = std::max(borig, std::abs(ip.b[i]));
  auto dual_res_of = [&]() {
    Eigen::VectorXd r = ip.b;
    for (int k = 0; k < nblocks; ++k)
      for (const auto& [i, f] : ip.blocks[k].coeff)
        r[i] += f.cwiseProduct(st[k].X).sum();
    double worst = 0;
    for (int i = 0; i < m; ++i)
      if (!ip.slack || i != m - 1) worst = std::max(worst, std::abs(r[i]));
    return worst / (1.0 + borig);
  };

  double best_score = kInf;
  Eigen::VectorXd best_y = y;
  std::vector<Eigen::MatrixXd> best_x;
  for (int k = 0; k < nblocks; ++k) best_x.push_back(st[k].X);

  const double mu0 = mu_of();
  std::vector<Eigen::MatrixXd> dz(nblocks), dx(nblocks), dz_aff(nblocks), dx_aff(nblocks);
  int stalls = 0;
  int hover = 0;           // consecutive iterations parked at the target mu
  int garbage_retries = 0; // consecutive ridge retries against broken directions

  for (int it = 0; it < opts.max_iter; ++it) {
    const double mu = mu_of();
    out.mu_trace.push_back(mu);
    out.iterations = it;

    const double dres = dual_res_of();
    const double pobj = ip.b.dot(y);
    const double rel_gap = mu * ip.n_total / (1.0 + std::abs(pobj));
    if (opts.verbose || std::getenv("PWMBOUND_TRACE_IPM"))
      std::printf("  ipm %3d mu=%9.3e dres=%9.3e gap=%9.3e obj=%.9e\n", it, mu, dres,
                  rel_gap, pobj);

    const double score = dres + rel_gap;
    if (score < best_score) {
      best_score = score;
      best_y = y;
      for (int k = 0; k < nblocks; ++k) best_x[k] = st[k].X;
    }

    if (dres <= opts.feas_tol && rel_gap <= opts.gap_tol) {
      out.converged = true;
      break;
    }
    // second acceptance tier: the returned certificate is the y side, whose
    // block eigenvalues are exact by construction; once the gap is in, the
    // slack has collapsed, and a dozen centering passes at the target mu have
    // not moved the dual residual, more grinding cannot improve the answer
    if (rel_gap <= opts.gap_tol && hover >= 12 && dres <= 100.0 * opts.feas_tol &&
        (!ip.slack || y[m - 1] <= opts.feas_tol)) {
      out.converged = true;
      break;
    }
    if (hover >= 25) break;

    // unbounded heuristic: exploding objective with stagnant complementarity
    if (pobj > 1e12 && mu > 1e-8 * mu0) {
      Eigen::VectorXd ray = y;
      if (ip.slack) ray[m - 1] = 0;
      const double norm = ray.norm();
      if (norm > 0) {
        ray /= norm;
        bool psd = true;
        for (int k = 0; k < nblocks && psd; ++k) {
          Eigen::MatrixXd zr = Eigen::MatrixXd::Zero(ip.blocks[k].dim, ip.blocks[k].dim);
          for (const auto& [i, f] : ip.blocks[k].coeff) zr += ray[i] * f;
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(zr, Eigen::EigenvaluesOnly);
          if (es.eigenvalues().minCoeff() < -1e-7) psd = false;
        }
        if (psd && ip.b.dot(ray) > 1e-7) {
          out.status = SdpStatus::Unbounded;
          break;
        }
      }
    }
    // uncertified runaway (typically a too-small slack penalty): stop early
    if (pobj > 1e14) break;
    // complementarity exhausted without feasibility: grinding on would only
    // push an already rank-deficient X into singularity
    if (mu < 1e-13 * (1.0 + std::abs(pobj)) && dres > opts.feas_tol) break;
    if (mu < 1e-300) break;

    if (!engine.factor(st)) break;

    // predictor (affine scaling): rhs_i = b_i
    const Eigen::VectorXd dy_aff = engine.solve(ip.b);
    for (int k = 0; k < nblocks; ++k) {
      const auto& blk = ip.blocks[k];
      Eigen::MatrixXd d = Eigen::MatrixXd::Zero(blk.dim, blk.dim);
      for (const auto& [i, f] : blk.coeff) d += dy_aff[i] * f;
      dz_aff[k] = d;
      Eigen::MatrixXd dxm = -st[k].X - st[k].Zinv * d * st[k].X;
      dx_aff[k] = 0.5 * (dxm + dxm.transpose());
    }
    double ap = kInf, ad = kInf;
    for (int k = 0; k < nblocks; ++k) {
      ap = std::min(ap, max_step(st[k].X, dx_aff[k], 1.0));
      ad = std::min(ad, max_step(st[k].Z, dz_aff[k], 1.0));
    }
    double mu_aff = 0;
    for (int k = 0; k < nblocks; ++k)
      mu_aff += (st[k].X + kStepFraction * ap * dx_aff[k])
                    .cwiseProduct(st[k].Z + kStepFraction * ad * dz_aff[k])
                    .sum();
    mu_aff = std::max(mu_aff / ip.n_total, 0.0);
    double sigma = std::pow(mu_aff / mu, 3.0);
    sigma = std::min(1.0, std::max(1e-10, sigma));
    // aim, don't overshoot: the dual residual floor rises as mu shrinks, so
    // never target a mu below what the gap tolerance actually needs; once
    // there, sigma saturates at 1 and the pure centering steps grind the
    // residual down at constant mu
    const double mu_target = 0.5 * opts.gap_tol * (1.0 + std::abs(pobj)) / ip.n_total;
    sigma = std::min(1.0, std::max(sigma, std::min(1.0, mu_target / mu)));
    hover = (mu <= 2.0 * mu_target) ? hover + 1 : 0;

    // corrector
    Eigen::VectorXd rhs = ip.b;
    for (int k = 0; k < nblocks; ++k) {
      const auto& blk = ip.blocks[k];
      const Eigen::MatrixXd e = st[k].Zinv * dz_aff[k] * dx_aff[k];
      const Eigen::MatrixXd zc = sigma * mu * st[k].Zinv - 0.5 * (e + e.transpose());
      for (const auto& [i, f] : blk.coeff) rhs[i] += f.cwiseProduct(zc).sum();
    }
    const Eigen::VectorXd dy = engine.solve(rhs);
    for (int k = 0; k < nblocks; ++k) {
      const auto& blk = ip.blocks[k];
      Eigen::MatrixXd d = Eigen::MatrixXd::Zero(blk.dim, blk.dim);
      for (const auto& [i, f] : blk.coeff) d += dy[i] * f;
      dz[k] = d;
      Eigen::MatrixXd dxm = sigma * mu * st[k].Zinv - st[k].X - st[k].Zinv * d * st[k].X -
                            st[k].Zinv * dz_aff[k] * dx_aff[k];
      dx[k] = 0.5 * (dxm + dxm.transpose());
    }
    // refine the step in constraint space: the triple products above are
    // formed at condition ~1/mu, and their rounding alone caps the reachable
    // residual; a full step should land on the constraints exactly, so cancel
    // the measured violation with one extra backsolve (X side only, Z exact).
    // The backsolve itself runs on the same ill-conditioned system, so only
    // accept the corrected step if it measurably shrinks the violation —
    // an unguarded correction occasionally injects an O(1) error instead
    auto viol_of = [&](const std::vector<Eigen::MatrixXd>& step) {
      Eigen::VectorXd v = ip.b;
      for (int k = 0; k < nblocks; ++k)
        for (const auto& [i, f] : ip.blocks[k].coeff)
          v[i] += f.cwiseProduct(st[k].X + step[k]).sum();
      return v;
    };
    const Eigen::VectorXd viol = viol_of(dx);
    const Eigen::VectorXd ddy = engine.solve(viol);
    std::vector<Eigen::MatrixXd> dx_ref(nblocks);
    for (int k = 0; k < nblocks; ++k) {
      const auto& blk = ip.blocks[k];
      Eigen::MatrixXd d = Eigen::MatrixXd::Zero(blk.dim, blk.dim);
      for (const auto& [i, f] : blk.coeff) d += ddy[i] * f;
      const Eigen::MatrixXd c = st[k].Zinv * d * st[k].X;
      dx_ref[k] = dx[k] - 0.5 * (c + c.transpose());
    }
    double viol_norm = viol.norm();
    const double viol_ref_norm = viol_of(dx_ref).norm();
    if (viol_ref_norm < viol_norm) {
      viol_norm = viol_ref_norm;
      for (int k = 0; k < nblocks; ++k) dx[k] = dx_ref[k];
    }
    ap = kInf;
    ad = kInf;
    for (int k = 0; k < nblocks; ++k) {
      ap = std::min(ap, max_step(st[k].X, dx[k], kInf));
      ad = std::min(ad, max_step(st[k].Z, dz[k], kInf));
    }
    ap = std::min(1.0, kStepFraction * ap);
    ad = std::min(1.0, kStepFraction * ad);

    if (opts.verbose || std::getenv("PWMBOUND_TRACE_IPM"))
      std::printf("      sigma=%8.2e mu_aff=%8.2e ap=%8.2e ad=%8.2e\n", sigma, mu_aff, ap,
                  ad);

    // a direction that fails to land on the linear constraints is not a
    // Newton direction at all: near a degenerate optimum the Schur matrix
    // develops an almost-null subspace whose solve error dwarfs everything
    // else (a committed step then wrecks the whole iterate, however small ap
    // is).  Also catch fully collapsed steps far from the target mu — the
    // same breakdown seen from the cone side.  In both cases redo the
    // iteration with a ridge proportional to mu: large enough to damp the
    // degenerate directions, small enough to vanish by the time mu reaches
    // the target.  Escalate if the retry still misbehaves.
    const bool garbage = viol_norm > 1e-4 * (1.0 + ip.b.norm()) ||
                         (std::min(ap, ad) < 1e-10 && mu > 100.0 * mu_target);
    if (garbage && ++garbage_retries <= 8) {
      const double anchor = std::min(1e-4, mu / (1.0 + std::abs(pobj)));
      engine.extra_ridge = std::min(1e-2, std::max(engine.extra_ridge * 10.0, anchor));
      hover = 0;
      continue;
    }
    if (garbage) break;  // ridges exhausted; salvage the best iterate below
    garbage_retries = 0;
    if (std::min(ap, ad) > 1e-3 && engine.extra_ridge > 0)
      engine.extra_ridge = (engine.extra_ridge > 1e-14) ? engine.extra_ridge * 0.1 : 0.0;

    if (std::min(ap, ad) < 1e-10) {
      if (++stalls >= 3) break;  // one side pinned: no progress left in it
    } else {
      stalls = 0;
    }

    // commit the step, backing off if rounding pushed a block off the cone:
    // the fraction-to-boundary rule guarantees this in exact arithmetic only,
    // and one indefinite X block poisons every later operator formation
    double apk = ap;
    for (int tries = 0; tries < 30; ++tries) {
      bool ok = true;
      for (int k = 0; k < nblocks && ok; ++k) {
        const Eigen::MatrixXd xc =
            (0.5 * ((st[k].X + apk * dx[k]) + (st[k].X + apk * dx[k]).transpose())).eval();
        if (xc.rows() == 1) {
          ok = xc(0, 0) > 0;
        } else {
          ok = Eigen::LLT<Eigen::MatrixXd>(xc).info() == Eigen::Success;
        }
      }
      if (ok) break;
      apk = (tries == 29) ? 0.0 : 0.5 * apk;
    }
    for (int k = 0; k < nblocks; ++k) {
      st[k].X += apk * dx[k];
      st[k].X = (0.5 * (st[k].X + st[k].X.transpose())).eval();
    }
    double adk = ad;
    bool z_ok = false;
    for (int tries = 0; tries < 30; ++tries) {
      y += adk * dy;
      rebuild_z();
      if (refresh_zinv()) {
        z_ok = true;
        break;
      }
      y -= adk * dy;
      adk *= 0.5;
    }
    if (!z_ok) {
      rebuild_z();
      refresh_zinv();
      break;
    }
  }

  if (out.status != SdpStatus::Unbounded) {
    if (dual_res_of() + mu_of() * ip.n_total / (1.0 + std::abs(ip.b.dot(y))) > best_score) {
      y = best_y;
      for (int k = 0; k < nblocks; ++k) st[k].X = best_x[k];
    }
  }
  out.y = y;
  out.X.clear();
  for (int k = 0; k < nblocks; ++k) out.X.push_back(st[k].X);
  return out;
}

Internal build_internal(const SdpProblem& prob, const std::vector<int>& active,
                        const Eigen::VectorXd& scale, bool with_slack, double big_m) {
  Internal ip;
  ip.m = static_cast<int>(active.size()) + (with_slack ? 1 : 0);
  ip.slack = with_slack;
  ip.big_m = big_m;
  ip.to_orig.assign(ip.m, -1);
  ip.scale = Eigen::VectorXd::Ones(ip.m);
  std::vector<int> orig_to_active(prob.num_vars, -1);
  for (size_t i = 0; i < active.size(); ++i) {
    ip.to_orig[i] = active[i];
    ip.scale[i] = scale[active[i]];
    orig_to_active[active[i]] = static_cast<int>(i);
  }
  ip.b.resize(ip.m);
  for (size_t i = 0; i < active.size(); ++i) ip.b[i] = prob.b[active[i]] / ip.scale[i];
  if (with_slack) ip.b[ip.m - 1] = -big_m;

  ip.n_total = 0;
  for (const auto& blk : prob.blocks) {
    IBlock ib;
    ib.dim = blk.dim;
    ib.f0 = 0.5 * (blk.f0 + blk.f0.transpose());
    for (const auto& [idx, mat] : blk.coeff) {
      const int a = orig_to_active[idx];
      if (a < 0) continue;  // unused variable (zero everywhere)
      ib.coeff.emplace_back(a, (0.5 * (mat + mat.transpose()) / ip.scale[a]).eval());
    }
    ib.bound1 = (ib.dim == 1 && ib.coeff.size() == 1);
    ip.blocks.push_back(std::move(ib));
    ip.n_total += blk.dim;
  }

  // start at y = 0 always.  Hand-picked interior starts were tried and are a
  // trap: any choice that keeps the one-variable bound blocks strictly
  // feasible leaves some of them barely positive, the starting cone geometry
  // is then skewed across several decades, and the first truncated steps
  // inflate mu without repairing anything.  The slack variable below gives
  // every covered block the same O(1+|f0|) starting margin instead, which is
  // the uniform geometry the interior-point iteration actually wants.
  ip.y0 = Eigen::VectorXd::Zero(ip.m);

  // slack covers every block that is not strictly positive at y0; it enters
  // as an honest variable so the Newton system sees it like any other
  if (with_slack) {
    const int nslack = ip.m - 1;
    double worst = 0;
    for (auto& blk : ip.blocks) {
      Eigen::MatrixXd z0 = blk.f0;
      for (const auto& [i, f] : blk.coeff) z0 += ip.y0[i] * f;
      double mineig;
      if (blk.dim == 1) {
        mineig = z0(0, 0);
      } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(z0, Eigen::EigenvaluesOnly);
        mineig = es.eigenvalues().minCoeff();
      }
      const double need = 1e-4 * (1.0 + blk.f0.cwiseAbs().maxCoeff());
      if (mineig < need || blk.dim >= 2) {
        blk.coeff.emplace_back(nslack, Eigen::MatrixXd::Identity(blk.dim, blk.dim));
        blk.bound1 = false;
        worst = std::min(worst, mineig);
      }
    }
    IBlock tb;  // slack bound block: t >= 0
    tb.dim = 1;
    tb.f0 = Eigen::MatrixXd::Zero(1, 1);
    tb.coeff.emplace_back(nslack, Eigen::MatrixXd::Identity(1, 1));
    tb.bound1 = true;
    ip.blocks.push_back(std::move(tb));
    ip.n_total += 1;
    ip.y0[nslack] = 1.0 + std::max(0.0, -worst);
  }
  return ip;
}

bool strictly_feasible_at_start(const SdpProblem& prob, const std::vector<int>& active,
                                const Eigen::VectorXd& scale) {
  Internal probe = build_internal(prob, active, scale, false, 0.0);
  for (const auto& blk : probe.blocks) {
    Eigen::MatrixXd z0 = blk.f0;
    for (const auto& [i, f] : blk.coeff) z0 += probe.y0[i] * f;
    const double need = 1e-4 * (1.0 + blk.f0.cwiseAbs().maxCoeff());
    if (blk.dim == 1) {
      if (z0(0, 0) < need) return false;
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(z0, Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < need) return false;
    }
  }
  return true;
}

}  // namespace

SdpSolution solve(const SdpProblem& prob, const SdpOptions& opts) {
  validate(prob);
  SdpSolution sol;

  // variables with identically zero coefficients cannot be pinned down
  std::vector<int> active;
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(prob.num_vars);
  for (int i = 0; i < prob.num_vars; ++i) {
    double mx = 0;
    for (const auto& blk : prob.blocks)
      for (const auto& [idx, mat] : blk.coeff)
        if (idx == i) mx = std::max(mx, mat.cwiseAbs().maxCoeff());
    if (mx == 0.0) {
      if (prob.b[i] != 0.0) {
        // free direction with objective slope: improving ray e_i * sign(b_i)
        sol.status = SdpStatus::Unbounded;
        sol.y = Eigen::VectorXd::Zero(prob.num_vars);
        return sol;
      }
      continue;
    }
    scale[i] = mx;
    active.push_back(i);
  }
  if (active.empty()) {
    // constant problem: y = 0 is optimal iff F0 is PSD
    sol.y = Eigen::VectorXd::Zero(prob.num_vars);
    double mineig = kInf;
    for (const auto& blk : prob.blocks) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(blk.f0, Eigen::EigenvaluesOnly);
      mineig = std::min(mineig, es.eigenvalues().minCoeff());
    }
    sol.min_eig = mineig;
    sol.status = mineig >= -opts.feas_tol ? SdpStatus::Optimal : SdpStatus::Infeasible;
    return sol;
  }

  double f0max = 0;
  for (const auto& blk : prob.blocks) f0max = std::max(f0max, blk.f0.cwiseAbs().maxCoeff());
  const bool need_slack = !strictly_feasible_at_start(prob, active, scale);
  // M must dominate the dual trace, which grows with the objective moments
  double bsum = 0;
  for (int i : active) bsum += std::abs(prob.b[i]) / scale[i];
  double big_m = 100.0 * (1.0 + f0max + bsum);
  const double t_small = std::max(1e3 * opts.feas_tol, 1e-7) * (1.0 + f0max);

  IpmOutcome outcome;
  Internal ip;
  for (int attempt = 0; attempt < 5; ++attempt) {
    ip = build_internal(prob, active, scale, need_slack, big_m);
    outcome = run_ipm(ip, opts);
    if (!need_slack || outcome.status == SdpStatus::Unbounded) break;
    if (outcome.y[ip.m - 1] <= t_small) break;  // slack vanished; M played no role
    if (attempt == 4) break;                    // classified infeasible below
    // M was too timid; push gently — an oversized M is itself a conditioning
    // penalty of order M^2/mu in the Newton system, so approach from below
    big_m *= 10.0;
  }

  // map back to the original variable space
  sol.y = Eigen::VectorXd::Zero(prob.num_vars);
  if (outcome.y.size() > 0) {
    for (int i = 0; i < static_cast<int>(active.size()); ++i)
      sol.y[active[i]] = outcome.y[i] / scale[active[i]];
  }

  const auto worst_block_eig = [&prob](const Eigen::VectorXd& y) {
    double me = kInf;
    for (const auto& blk : prob.blocks) {
      Eigen::MatrixXd z = blk.f0;
      for (const auto& [idx, mat] : blk.coeff) z += y[idx] * mat;
      if (blk.dim == 1) {
        me = std::min(me, z(0, 0));
      } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(z, Eigen::EigenvaluesOnly);
        me = std::min(me, es.eigenvalues().minCoeff());
      }
    }
    return me;
  };

  // polish: a variable sitting a hair outside a one-dimensional bound block is
  // snapped onto the bound.  Near a flat optimal face the final iterates can
  // leave several multipliers microscopically negative even though an exactly
  // feasible point with the same objective exists next door; the snap is kept
  // only when it improves the worst block eigenvalue.
  if (outcome.y.size() > 0) {
    Eigen::VectorXd y_snap = sol.y;
    bool snapped = false;
    for (const auto& blk : prob.blocks) {
      if (blk.dim != 1 || blk.coeff.size() != 1) continue;
      const auto& [idx, mat] = blk.coeff[0];
      const double f = mat(0, 0);
      if (f == 0.0) continue;
      const double val = blk.f0(0, 0) + y_snap[idx] * f;
      if (val < 0 && val >= -1e-4 * (1.0 + std::abs(blk.f0(0, 0)))) {
        y_snap[idx] = -blk.f0(0, 0) / f;
        snapped = true;
      }
    }
    if (snapped && worst_block_eig(y_snap) > worst_block_eig(sol.y))
      sol.y = std::move(y_snap);
  }

  sol.iterations = outcome.iterations;
  sol.mu_trace = std::move(outcome.mu_trace);
  sol.X.clear();
  for (size_t k = 0; k < prob.blocks.size(); ++k) {
    if (k < outcome.X.size())
      sol.X.push_back(outcome.X[k]);
    else
      sol.X.push_back(Eigen::MatrixXd::Zero(prob.blocks[k].dim, prob.blocks[k].dim));
  }

  sol.primal_obj = prob.b.dot(sol.y);
  sol.dual_obj = 0;
  for (size_t k = 0; k < prob.blocks.size(); ++k)
    sol.dual_obj += prob.blocks[k].f0.cwiseProduct(sol.X[k]).sum();
  double dres = 0, bs = 0;
  for (int i = 0; i < prob.num_vars; ++i) bs = std::max(bs, std::abs(prob.b[i]) / scale[i]);
  {
    Eigen::VectorXd r = prob.b;
    for (size_t k = 0; k < prob.blocks.size(); ++k)
      for (const auto& [idx, mat] : prob.blocks[k].coeff)
        r[idx] += mat.cwiseProduct(sol.X[k]).sum();
    for (int i = 0; i < prob.num_vars; ++i)
      dres = std::max(dres, std::abs(r[i]) / scale[i]);
  }
  sol.dual_residual = dres / (1.0 + bs);
  sol.gap = std::abs(sol.dual_obj - sol.primal_obj) / (1.0 + std::abs(sol.primal_obj));

  sol.min_eig = worst_block_eig(sol.y);

  if (outcome.status == SdpStatus::Unbounded) {
    sol.status = SdpStatus::Unbounded;
  } else if (outcome.converged) {
    sol.status = (!need_slack || outcome.y[ip.m - 1] <= t_small) ? SdpStatus::Optimal
                                                                 : SdpStatus::Infeasible;
  } else if (sol.dual_residual <= opts.feas_tol && sol.gap <= opts.gap_tol &&
             (!need_slack || outcome.y[ip.m - 1] <= t_small)) {
    // the loop never saw both residuals small on the same iterate, but the
    // best iterate measured in the original space qualifies
    sol.status = SdpStatus::Optimal;
  } else {
    sol.status = SdpStatus::MaxIter;
  }
  return sol;
}

// ---------------------------------------------------------------------------
// sparse text round-trip (SDPA layout: minimize c'x, X = sum x_i F_i - F0)
// ---------------------------------------------------------------------------

std::string to_sparse_text(const SdpProblem& prob) {
  validate(prob);
  std::ostringstream os;
  os << "\"converted: maximize b'y with F(y) = F0 + sum y_i F_i; c = -b, F0_out = -F0\n";
  os << prob.num_vars << "\n";
  os << prob.blocks.size() << "\n";
  for (size_t k = 0; k < prob.blocks.size(); ++k)
    os << prob.blocks[k].dim << (k + 1 < prob.blocks.size() ? " " : "\n");
  char buf[64];
  for (int i = 0; i < prob.num_vars; ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", -prob.b[i]);
    os << buf << (i + 1 < prob.num_vars ? " " : "\n");
  }
  auto emit = [&](int matno, int blkno, const Eigen::MatrixXd& mat, double sign) {
    for (int i = 0; i < mat.rows(); ++i)
      for (int j = i; j < mat.cols(); ++j)
        if (mat(i, j) != 0.0) {
          std::snprintf(buf, sizeof(buf), "%.17g", sign * mat(i, j));
          os << matno << " " << blkno << " " << (i + 1) << " " << (j + 1) << " " << buf
             << "\n";
        }
  };
  for (size_t k = 0; k < prob.blocks.size(); ++k) {
    emit(0, static_cast<int>(k + 1), prob.blocks[k].f0, -1.0);
    for (const auto& [idx, mat] : prob.blocks[k].coeff)
      emit(idx + 1, static_cast<int>(k + 1), mat, 1.0);
  }
  return os.str();
}

SdpProblem from_sparse_text(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::string joined;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '"' || line[0] == '*') continue;
    for (auto& c : line)
      if (c == ',' || c == '{' || c == '}' || c == '(' || c == ')') c = ' ';
    joined += line + "\n";
  }
  std::istringstream ds(joined);

  SdpProblem prob;
  int nblocks = 0;
  if (!(ds >> prob.num_vars >> nblocks) || prob.num_vars < 1 || nblocks < 1)
    throw std::invalid_argument("sparse text: bad header");
  std::vector<int> dims(nblocks);
  std::vector<bool> diag_only(nblocks, false);
  for (int k = 0; k < nblocks; ++k) {
    if (!(ds >> dims[k])) throw std::invalid_argument("sparse text: bad block sizes");
    if (dims[k] < 0) {  // negative size: diagonal-only block
      dims[k] = -dims[k];
      diag_only[k] = true;
    }
    if (dims[k] == 0) throw std::invalid_argument("sparse text: zero block size");
  }
  prob.b.resize(prob.num_vars);
  for (int i = 0; i < prob.num_vars; ++i) {
    double c;
    if (!(ds >> c)) throw std::invalid_argument("sparse text: bad objective");
    prob.b[i] = -c;
  }
  prob.blocks.resize(nblocks);
  std::vector<std::vector<Eigen::MatrixXd>> mats(nblocks);
  for (int k = 0; k < nblocks; ++k) {
    prob.blocks[k].dim = dims[k];
    prob.blocks[k].f0 = Eigen::MatrixXd::Zero(dims[k], dims[k]);
    mats[k].assign(prob.num_vars, Eigen::MatrixXd());
  }
  int matno, blkno, ii, jj;
  double val;
  while (ds >> matno >> blkno >> ii >> jj >> val) {
    if (blkno < 1 || blkno > nblocks || matno < 0 || matno > prob.num_vars)
      throw std::invalid_argument("sparse text: entry out of range");
    const int k = blkno - 1;
    if (ii < 1 || jj < 1 || ii > dims[k] || jj > dims[k])
      throw std::invalid_argument("sparse text: index out of range");
    if (diag_only[k] && ii != jj)
      throw std::invalid_argument("sparse text: off-diagonal entry in diagonal block");
    if (matno == 0) {
      prob.blocks[k].f0(ii - 1, jj - 1) = -val;
      prob.blocks[k].f0(jj - 1, ii - 1) = -val;
    } else {
      auto& m = mats[k][matno - 1];
      if (m.size() == 0) m = Eigen::MatrixXd::Zero(dims[k], dims[k]);
      m(ii - 1, jj - 1) = val;
      m(jj - 1, ii - 1) = val;
    }
  }
  for (int k = 0; k < nblocks; ++k)
    for (int i = 0; i < prob.num_vars; ++i)
      if (mats[k][i].size() > 0) prob.blocks[k].coeff.emplace_back(i, std::move(mats[k][i]));
  validate(prob);
  return prob;
}

}  // namespace pwmbound
