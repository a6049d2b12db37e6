#pragma once

// The discrete Lagrangian system of a degenerate billiard: the generating
// family {L_k}, collision chains and their Newton solvers, block-tridiagonal
// second variations, admissibility reports, finite-window hyperbolicity
// certificates, linear Poincare maps and the collision map.

#include "degbill/bvp.hpp"

#include <functional>
#include <map>
#include <optional>

namespace degbill {

/// A symbol of the multivalued discrete Lagrangian: which components the
/// segment joins and which orbit class resolves the multivaluedness.
struct Symbol {
  int from = 0, to = 0;
  std::string tag = "short";

  friend bool operator<(const Symbol& a, const Symbol& b) {
    return std::tie(a.from, a.to, a.tag) < std::tie(b.from, b.to, b.tag);
  }
};

/// Chain node: a chart point on a component, or a fixed ambient anchor
/// (comp = -1) used by finite chains.
struct Node {
  int comp = -1;
  Vec x; // chart coords if comp >= 0, ambient point otherwise
};

enum class ChainKind { Periodic, Finite };

struct CollisionInfo {
  Vec y;              // tangent collision momentum (chart basis)
  Vec p_in, p_out;    // full momenta arriving / leaving
  Vec v_in, v_out;    // velocities arriving / leaving
  double dp_norm = 0; // |Delta p|
};

struct Chain {
  ChainKind kind = ChainKind::Periodic;
  std::vector<Symbol> symbols; // one per segment
  std::vector<Node> nodes;     // periodic: n nodes; finite: n+2 incl anchors
  double E = 0;

  // filled by the solvers
  std::vector<CollisionInfo> collisions; // one per free node
  double residual = std::numeric_limits<double>::infinity();
  bool converged = false;
  bool degenerate = false;
  Mat hessian;      // assembled second variation over the free variables
  Mat kernel_basis; // columns spanning the near-kernel when degenerate
  double sv_min = 0, sv_max = 0;
  std::vector<double> newton_residuals;

  int n_segments() const { return static_cast<int>(symbols.size()); }
  int n_free() const {
    return kind == ChainKind::Periodic ? (int)nodes.size()
                                       : (int)nodes.size() - 2;
  }
  /// index of the j-th free node inside `nodes`
  int free_node(int j) const { return kind == ChainKind::Periodic ? j : j + 1; }
};

/// The generating family: evaluates L_k(x-, x+) = S(chart(x-), chart(x+))
/// together with first and second derivatives, caching by exact arguments.
class GeneratingFamily {
public:
  struct Eval {
    double L = 0;
    Vec dLm, dLp;      // D_{x-}L, D_{x+}L (tangent covectors)
    Mat Lmm, Lmp, Lpp; // second-derivative blocks; Lmp(i,j) = d2L/dx-_i dx+_j
    ActionFunction af;
  };

  using GuessGen = std::function<BvpGuess(const Problem&, const Vec& q_minus,
                                          const Vec& q_plus, double E)>;

  GeneratingFamily(const Problem& pb, double E, double newton_tol = 1e-11,
                   double ode_tol = 1e-12)
      : pb_(&pb), E_(E), newton_tol_(newton_tol), ode_tol_(ode_tol) {}

  const Problem& problem() const { return *pb_; }
  double energy() const { return E_; }

  void set_guess(const std::string& tag, GuessGen g) {
    guesses_[tag] = std::move(g);
  }

  /// Evaluate a segment between two nodes (chart points or ambient anchors).
  const Eval& eval(const Symbol& k, const Node& left, const Node& right) const {
    Key key{k, flatten(left), flatten(right)};
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;

    const Vec qm = ambient(left), qp = ambient(right);
    BvpGuess guess;
    auto git = guesses_.find(k.tag);
    if (git != guesses_.end()) guess = git->second(*pb_, qm, qp, E_);
    Eval ev;
    ev.af = connect_fixed_energy(*pb_, 0.0, qm, qp, E_, guess, newton_tol_,
                                 ode_tol_);
    fill_derivatives(ev, left, right);
    return cache_.emplace(std::move(key), std::move(ev)).first->second;
  }

  Vec ambient(const Node& n) const {
    return n.comp < 0 ? n.x : pb_->comps[n.comp].chart(n.x);
  }

  std::size_t cache_size() const { return cache_.size(); }

private:
  struct Key {
    Symbol k;
    std::vector<double> l, r;
    friend bool operator<(const Key& a, const Key& b) {
      if (a.k < b.k) return true;
      if (b.k < a.k) return false;
      return std::tie(a.l, a.r) < std::tie(b.l, b.r);
    }
  };

  static std::vector<double> flatten(const Node& n) {
    std::vector<double> v(n.x.data(), n.x.data() + n.x.size());
    v.push_back(n.comp);
    return v;
  }

  void fill_derivatives(Eval& ev, const Node& left, const Node& right) const {
    const int nl = left.comp >= 0 ? pb_->comps[left.comp].intrinsic_dim() : 0;
    const int nr = right.comp >= 0 ? pb_->comps[right.comp].intrinsic_dim() : 0;
    ev.L = ev.af.S;
    ev.dLm.resize(nl);
    ev.dLp.resize(nr);
    ev.Lmm.resize(nl, nl);
    ev.Lpp.resize(nr, nr);
    ev.Lmp.resize(nl, nr);
    if (nl) {
      const auto& c = pb_->comps[left.comp];
      const Mat J = c.chart_jac(left.x);
      ev.dLm = -J.transpose() * ev.af.p_minus;
      ev.Lmm = J.transpose() * ev.af.S_mm * J;
      ev.Lmm(0, 0) += (-ev.af.p_minus).dot(c.chart_hess(left.x));
    }
    if (nr) {
      const auto& c = pb_->comps[right.comp];
      const Mat J = c.chart_jac(right.x);
      ev.dLp = J.transpose() * ev.af.p_plus;
      ev.Lpp = J.transpose() * ev.af.S_pp * J;
      ev.Lpp(0, 0) += ev.af.p_plus.dot(c.chart_hess(right.x));
    }
    if (nl && nr) {
      const Mat Jl = pb_->comps[left.comp].chart_jac(left.x);
      const Mat Jr = pb_->comps[right.comp].chart_jac(right.x);
      ev.Lmp = Jl.transpose() * ev.af.B.transpose() * Jr;
    }
  }

  const Problem* pb_;
  double E_, newton_tol_, ode_tol_;
  std::map<std::string, GuessGen> guesses_;
  mutable std::map<Key, Eval> cache_;
};

namespace detail {

struct ChainLayout {
  std::vector<int> offset, dim;
  int total = 0;
};

inline ChainLayout chain_layout(const Problem& pb, const Chain& ch) {
  ChainLayout lay;
  for (int j = 0; j < ch.n_free(); ++j) {
    const Node& nd = ch.nodes[ch.free_node(j)];
    const int d = nd.comp >= 0 ? pb.comps[nd.comp].intrinsic_dim() : 0;
    lay.offset.push_back(lay.total);
    lay.dim.push_back(d);
    lay.total += d;
  }
  return lay;
}

/// Segment endpoints: segment j joins node seg_left(j) to seg_right(j).
inline int seg_left(const Chain& ch, int j) {
  return ch.kind == ChainKind::Periodic ? j : j;
}
inline int seg_right(const Chain& ch, int j) {
  return ch.kind == ChainKind::Periodic ? (j + 1) % (int)ch.nodes.size()
                                        : j + 1;
}

/// Maps a node index to its free-variable slot (-1 if fixed).
inline int node_slot(const Chain& ch, int node) {
  if (ch.kind == ChainKind::Periodic) return node;
  return (node == 0 || node == (int)ch.nodes.size() - 1) ? -1 : node - 1;
}

} // namespace detail

/// Derivative of the chain action with respect to every free node.
/// Component j is D_{x_j}(L_{k_{j-1}} + L_{k_j}); zero at critical chains.
inline std::vector<Vec> chain_gradient(const GeneratingFamily& fam,
                                       const Chain& ch) {
  const Problem& pb = fam.problem();
  std::vector<Vec> grad(ch.n_free());
  for (int j = 0; j < ch.n_free(); ++j) {
    const Node& nd = ch.nodes[ch.free_node(j)];
    grad[j] = Vec::Zero(nd.comp >= 0 ? pb.comps[nd.comp].intrinsic_dim() : 0);
  }
  for (int s = 0; s < ch.n_segments(); ++s) {
    const auto& ev = fam.eval(ch.symbols[s], ch.nodes[detail::seg_left(ch, s)],
                              ch.nodes[detail::seg_right(ch, s)]);
    const int ls = detail::node_slot(ch, detail::seg_left(ch, s));
    const int rs = detail::node_slot(ch, detail::seg_right(ch, s));
    if (ls >= 0 && ev.dLm.size()) grad[ls] += ev.dLm;
    if (rs >= 0 && ev.dLp.size()) grad[rs] += ev.dLp;
  }
  return grad;
}

/// Assembles the (block-tridiagonal, periodic or Dirichlet) second variation
/// over the free variables.
inline Mat chain_hessian(const GeneratingFamily& fam, const Chain& ch) {
  const Problem& pb = fam.problem();
  const auto lay = detail::chain_layout(pb, ch);
  Mat H = Mat::Zero(lay.total, lay.total);
  for (int s = 0; s < ch.n_segments(); ++s) {
    const auto& ev = fam.eval(ch.symbols[s], ch.nodes[detail::seg_left(ch, s)],
                              ch.nodes[detail::seg_right(ch, s)]);
    const int ls = detail::node_slot(ch, detail::seg_left(ch, s));
    const int rs = detail::node_slot(ch, detail::seg_right(ch, s));
    if (ls >= 0 && lay.dim[ls])
      H.block(lay.offset[ls], lay.offset[ls], lay.dim[ls], lay.dim[ls]) +=
          ev.Lmm;
    if (rs >= 0 && lay.dim[rs])
      H.block(lay.offset[rs], lay.offset[rs], lay.dim[rs], lay.dim[rs]) +=
          ev.Lpp;
    if (ls >= 0 && rs >= 0 && lay.dim[ls] && lay.dim[rs]) {
      H.block(lay.offset[ls], lay.offset[rs], lay.dim[ls], lay.dim[rs]) +=
          ev.Lmp;
      H.block(lay.offset[rs], lay.offset[ls], lay.dim[rs], lay.dim[ls]) +=
          ev.Lmp.transpose();
    }
  }
  return H;
}

/// Total chain action (sum of segment Lagrangians).
inline double chain_action(const GeneratingFamily& fam, const Chain& ch) {
  double a = 0;
  for (int s = 0; s < ch.n_segments(); ++s)
    a += fam
             .eval(ch.symbols[s], ch.nodes[detail::seg_left(ch, s)],
                   ch.nodes[detail::seg_right(ch, s)])
             .L;
  return a;
}

namespace detail {

inline void fill_collision_data(const GeneratingFamily& fam, Chain& ch) {
  const Problem& pb = fam.problem();
  ch.collisions.assign(ch.n_free(), {});
  for (int j = 0; j < ch.n_free(); ++j) {
    const int node = ch.free_node(j);
    const Node& nd = ch.nodes[node];
    // incoming segment ends at `node`, outgoing starts there
    int sin = -1, sout = -1;
    for (int s = 0; s < ch.n_segments(); ++s) {
      if (seg_right(ch, s) == node) sin = s;
      if (seg_left(ch, s) == node) sout = s;
    }
    CollisionInfo ci;
    const Vec q = fam.ambient(nd);
    const Vec w = pb.gyro(q);
    if (sin >= 0) {
      const auto& ev = fam.eval(ch.symbols[sin], ch.nodes[seg_left(ch, sin)],
                                ch.nodes[seg_right(ch, sin)]);
      ci.p_in = ev.af.p_plus;
      ci.v_in = ci.p_in - w;
    }
    if (sout >= 0) {
      const auto& ev = fam.eval(ch.symbols[sout], ch.nodes[seg_left(ch, sout)],
                                ch.nodes[seg_right(ch, sout)]);
      ci.p_out = ev.af.p_minus;
      ci.v_out = ci.p_out - w;
      if (nd.comp >= 0 && pb.comps[nd.comp].intrinsic_dim()) {
        const Mat J = pb.comps[nd.comp].chart_jac(nd.x);
        ci.y = J.transpose() * ci.p_out; // tangential part is continuous
      } else {
        ci.y = Vec(0);
      }
    }
    if (sin >= 0 && sout >= 0) ci.dp_norm = (ci.p_out - ci.p_in).norm();
    ch.collisions[j] = std::move(ci);
  }
}

inline void classify_hessian(Chain& ch) {
  if (ch.hessian.size() == 0) {
    ch.degenerate = false;
    ch.sv_min = ch.sv_max = 0;
    return;
  }
  Eigen::JacobiSVD<Mat> svd(ch.hessian, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  ch.sv_max = sv(0);
  ch.sv_min = sv(sv.size() - 1);
  ch.degenerate = ch.sv_min <= 1e-8 * std::max(ch.sv_max, 1e-30);
  if (ch.degenerate) {
    int k = 0;
    while (k < sv.size() && sv(sv.size() - 1 - k) <= 1e-8 * ch.sv_max) ++k;
    ch.kernel_basis = svd.matrixV().rightCols(k);
  }
}

} // namespace detail

/// Newton iteration on the chain gradient. Works for periodic and finite
/// chains; chains over discrete components are trivially critical.
inline Chain newton_chain(const GeneratingFamily& fam, Chain ch,
                          double tol = 1e-11, int max_iter = 40) {
  const Problem& pb = fam.problem();
  const auto lay = detail::chain_layout(pb, ch);
  ch.E = fam.energy();
  ch.newton_residuals.clear();
  for (int it = 0;; ++it) {
    const auto grad = chain_gradient(fam, ch);
    Vec g(lay.total);
    for (int j = 0; j < ch.n_free(); ++j)
      if (lay.dim[j]) g.segment(lay.offset[j], lay.dim[j]) = grad[j];
    ch.residual = lay.total ? g.cwiseAbs().maxCoeff() : 0.0;
    ch.newton_residuals.push_back(ch.residual);
    if (ch.residual < tol) break;
    if (it >= max_iter)
      throw ConvergenceError("newton_chain: no convergence");
    const Mat H = chain_hessian(fam, ch);
    Eigen::JacobiSVD<Mat> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) <= 1e-12 * std::max(sv(0), 1e-30))
      throw ConvergenceError(
          "newton_chain: singular Hessian during iteration");
    const Vec step = svd.solve(-g);
    for (int j = 0; j < ch.n_free(); ++j)
      if (lay.dim[j])
        ch.nodes[ch.free_node(j)].x += step.segment(lay.offset[j], lay.dim[j]);
  }
  ch.converged = true;
  ch.hessian = chain_hessian(fam, ch);
  detail::classify_hessian(ch);
  detail::fill_collision_data(fam, ch);
  return ch;
}

inline Chain newton_periodic(const GeneratingFamily& fam, const Chain& guess,
                             double tol = 1e-11) {
  Chain ch = guess;
  ch.kind = ChainKind::Periodic;
  return newton_chain(fam, std::move(ch), tol);
}

inline Chain newton_finite(const GeneratingFamily& fam, const Chain& guess,
                           const Vec& a, const Vec& b, double tol = 1e-11) {
  Chain ch = guess;
  ch.kind = ChainKind::Finite;
  Node na, nb;
  na.comp = -1;
  na.x = a;
  nb.comp = -1;
  nb.x = b;
  if ((int)ch.nodes.size() == ch.n_segments() - 1) {
    ch.nodes.insert(ch.nodes.begin(), na);
    ch.nodes.push_back(nb);
  } else {
    ch.nodes.front() = na;
    ch.nodes.back() = nb;
  }
  return newton_chain(fam, std::move(ch), tol);
}

// ---------------------------------------------------------------------------
// admissibility

struct AdmissibilityEntry {
  double dp_norm = 0;
  bool jump_ok = false;            // Delta p != 0
  bool no_straight_reflection = false; // v+ + v- not tangent to N
  bool pass_through = false;       // u_out = +u_in (Delta p = 0)
  Vec u_in, u_out;                 // normal velocity components
};

struct AdmissibilityReport {
  std::vector<AdmissibilityEntry> entries;
  bool jump_condition = true;
  bool no_straight_reflections = true;
};

inline AdmissibilityReport admissibility(const GeneratingFamily& fam,
                                         const Chain& ch) {
  const Problem& pb = fam.problem();
  if (!ch.converged)
    throw DomainError("admissibility: chain not converged");
  AdmissibilityReport rep;
  const double scale = 1e-8 * std::sqrt(2.0 * fam.energy());
  for (int j = 0; j < ch.n_free(); ++j) {
    const auto& ci = ch.collisions[j];
    if (!ci.p_in.size() || !ci.p_out.size()) continue; // chain boundary
    const Node& nd = ch.nodes[ch.free_node(j)];
    const Mat E = pb.comps[nd.comp].normal_frame(nd.x);
    AdmissibilityEntry e;
    e.dp_norm = ci.dp_norm;
    e.u_in = E.transpose() * ci.v_in;
    e.u_out = E.transpose() * ci.v_out;
    e.jump_ok = e.dp_norm > scale;
    e.pass_through = (e.u_out - e.u_in).norm() <= scale;
    e.no_straight_reflection = (e.u_out + e.u_in).norm() > scale;
    rep.jump_condition = rep.jump_condition && e.jump_ok;
    rep.no_straight_reflections =
        rep.no_straight_reflections && e.no_straight_reflection;
    rep.entries.push_back(std::move(e));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// finite-window hyperbolicity certificate

struct CertificateRow {
  int window = 0;
  double inverse_norm = 0; // sup-norm of the inverse truncated Hessian
  bool singular = false;
};

struct Certificate {
  std::vector<CertificateRow> rows;
  bool pass = false;
  double rel_spread = 0;
};

/// Dirichlet-window certificate for Definition-1 hyperbolicity: repeats the
/// converged periodic chain as an infinite word, truncates the second
/// variation to windows of the given lengths with pinned ends, and monitors
/// the sup-norm of the inverse across window sizes.
inline Certificate hyperbolicity_certificate(const GeneratingFamily& fam,
                                             const Chain& pattern,
                                             const std::vector<int>& windows) {
  if (!pattern.converged || pattern.kind != ChainKind::Periodic)
    throw DomainError("certificate needs a converged periodic pattern");
  const Problem& pb = fam.problem();
  const int n = pattern.n_free();

  // per-segment blocks of the infinite word
  std::vector<Mat> Lmm(n), Lpp(n), Lmp(n);
  std::vector<int> dim(n);
  for (int s = 0; s < n; ++s) {
    const auto& ev =
        fam.eval(pattern.symbols[s], pattern.nodes[detail::seg_left(pattern, s)],
                 pattern.nodes[detail::seg_right(pattern, s)]);
    Lmm[s] = ev.Lmm;
    Lpp[s] = ev.Lpp;
    Lmp[s] = ev.Lmp;
  }
  for (int j = 0; j < n; ++j)
    dim[j] = pb.comps[pattern.nodes[j].comp].intrinsic_dim();

  Certificate cert;
  std::vector<double> norms;
  for (int L : windows) {
    // free variables: positions 1..L of the repeated word (Dirichlet ends)
    std::vector<int> off(L + 2, 0), d(L + 2);
    int total = 0;
    for (int i = 0; i < L + 2; ++i) {
      d[i] = dim[i % n];
      off[i] = total;
      total += d[i];
    }
    const int i0 = d[0], i1 = total - d[L + 1]; // free span [i0, i1)
    Mat H = Mat::Zero(total, total);
    for (int s = 0; s < L + 1; ++s) {
      const int sm = s % n;
      if (d[s]) H.block(off[s], off[s], d[s], d[s]) += Lmm[sm];
      if (d[s + 1])
        H.block(off[s + 1], off[s + 1], d[s + 1], d[s + 1]) += Lpp[sm];
      if (d[s] && d[s + 1]) {
        H.block(off[s], off[s + 1], d[s], d[s + 1]) += Lmp[sm];
        H.block(off[s + 1], off[s], d[s + 1], d[s]) += Lmp[sm].transpose();
      }
    }
    const Mat Hw = H.block(i0, i0, i1 - i0, i1 - i0);
    CertificateRow row;
    row.window = L;
    if (Hw.size() == 0) {
      row.inverse_norm = 0; // zero-dimensional blocks: vacuous pass
    } else {
      Eigen::FullPivLU<Mat> lu(Hw);
      if (!lu.isInvertible()) {
        row.singular = true;
        row.inverse_norm = std::numeric_limits<double>::infinity();
      } else {
        row.inverse_norm = opnorm_inf(lu.inverse());
      }
    }
    norms.push_back(row.inverse_norm);
    cert.rows.push_back(row);
  }
  bool ok = true;
  for (const auto& r : cert.rows) ok = ok && !r.singular;
  if (ok && norms.front() > 0) {
    cert.rel_spread = spread(norms);
    ok = cert.rel_spread < 1.10; // bounded, non-increasing growth
    for (std::size_t i = 1; i < norms.size(); ++i)
      ok = ok && norms[i] <= norms[i - 1] * 1.10;
  } else if (ok) {
    cert.rel_spread = 1.0; // vacuous (empty blocks)
  }
  cert.pass = ok;
  return cert;
}

// ---------------------------------------------------------------------------
// linear Poincare maps

struct PoincareData {
  std::vector<Mat> maps; // P_i acting on (u_{i-1}, u_i)
  Mat monodromy;
  double det_P_minus_I = 0;
  Eigen::VectorXcd eigenvalues;
  bool twist_ok = false;
};

/// Transfer maps P_i : (u_{i-1}, u_i) -> (u_i, u_{i+1}) from the variational
/// relation B_{i-1} u_{i-1} + A_i u_i + B_i^T u_{i+1} = 0. Fails (twist_ok =
/// false) when some twist block B_i is singular.
inline PoincareData poincare_maps(const GeneratingFamily& fam,
                                  const Chain& ch) {
  if (!ch.converged || ch.kind != ChainKind::Periodic)
    throw DomainError("poincare_maps needs a converged periodic chain");
  const Problem& pb = fam.problem();
  const int n = ch.n_free();
  PoincareData pd;

  std::vector<Mat> A(n), B(n); // B[s] couples x_s to x_{s+1}
  const auto lay = detail::chain_layout(pb, ch);
  for (int s = 0; s < n; ++s) {
    const auto& ev = fam.eval(ch.symbols[s], ch.nodes[detail::seg_left(ch, s)],
                              ch.nodes[detail::seg_right(ch, s)]);
    B[s] = ev.Lmp;
  }
  for (int j = 0; j < n; ++j) {
    A[j] = Mat::Zero(lay.dim[j], lay.dim[j]);
    const int prev = (j + n - 1) % n;
    A[j] += fam.eval(ch.symbols[prev], ch.nodes[detail::seg_left(ch, prev)],
                     ch.nodes[detail::seg_right(ch, prev)])
                .Lpp;
    A[j] += fam.eval(ch.symbols[j], ch.nodes[detail::seg_left(ch, j)],
                     ch.nodes[detail::seg_right(ch, j)])
                .Lmm;
  }

  double block_scale = 1e-30;
  for (int j = 0; j < n; ++j)
    if (A[j].size()) block_scale = std::max(block_scale, A[j].norm());

  for (int j = 0; j < n; ++j) {
    const int d = lay.dim[j];
    if (d == 0) {
      pd.twist_ok = false;
      return pd;
    }
    // the variational relation at node j reads (Lmp orientation)
    //   B_{j-1}^T u_{j-1} + A_j u_j + B_j u_{j+1} = 0
    // singularity is judged against the diagonal-block scale
    Eigen::JacobiSVD<Mat> svd(B[j]);
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) <= 1e-8 * block_scale) {
      pd.twist_ok = false;
      return pd;
    }
    const int prev = (j + n - 1) % n;
    Eigen::FullPivLU<Mat> luj(B[j]);
    Mat P(2 * d, 2 * d);
    P.topLeftCorner(d, d).setZero();
    P.topRightCorner(d, d).setIdentity();
    P.bottomLeftCorner(d, d) = -luj.solve(B[prev].transpose());
    P.bottomRightCorner(d, d) = -luj.solve(A[j]);
    pd.maps.push_back(P);
  }
  pd.twist_ok = true;
  pd.monodromy = Mat::Identity(pd.maps[0].rows(), pd.maps[0].cols());
  for (int j = 0; j < n; ++j) pd.monodromy = pd.maps[j] * pd.monodromy;
  const Mat PI =
      pd.monodromy - Mat::Identity(pd.monodromy.rows(), pd.monodromy.cols());
  pd.det_P_minus_I = PI.determinant();
  pd.eigenvalues = pd.monodromy.eigenvalues();
  return pd;
}

// ---------------------------------------------------------------------------
// collision (scattering) map

struct CollisionMapResult {
  Vec x_next, y_next;
  int newton_iters = 0;
};

/// The locally defined symplectic map generated by L_k:
///   y = -D_{x} L_k(x, x'),   y' = D_{x'} L_k(x, x').
inline CollisionMapResult collision_map(const GeneratingFamily& fam,
                                        const Symbol& k, const Vec& x,
                                        const Vec& y, const Vec& x_next_guess,
                                        double tol = 1e-11) {
  Node left{k.from, x};
  CollisionMapResult r;
  r.x_next = x_next_guess;
  for (int it = 0;; ++it) {
    Node right{k.to, r.x_next};
    const auto& ev = fam.eval(k, left, right);
    const Vec g = ev.dLm + y; // want  D_x L = -y
    if (g.cwiseAbs().maxCoeff() < tol) {
      r.y_next = ev.dLp;
      r.newton_iters = it;
      return r;
    }
    if (it > 30)
      throw ConvergenceError("collision_map: implicit solve failed");
    // dg/dx' = Lmp
    Eigen::FullPivLU<Mat> lu(ev.Lmp);
    if (!lu.isInvertible())
      throw DomainError("collision_map: twist block singular (outside the "
                        "domain of the map)");
    r.x_next += lu.solve(-g);
  }
}

// ---------------------------------------------------------------------------
// Lyapunov-Schmidt equivalence check

struct LyapunovSchmidtReport {
  bool dg_invertible = false, dgamma_invertible = false;
  double norm_dg_inv = 0, norm_dgamma_inv = 0; // operator sup-norms
  bool simultaneous = false;
  bool norm_inequality = false; // |DGamma^-1| <= |DG^-1|
};

/// Verifies, on one finite-dimensional instance, that the Schur-reduced map
/// DGamma = Dq G1 - Dx G1 (Dx G2)^{-1} Dq G2 and the full DG are invertible
/// simultaneously, with |DGamma^{-1}| <= |DG^{-1}| in the sup norm.
inline LyapunovSchmidtReport lyapunov_schmidt_equivalence(const Mat& dqG1,
                                                          const Mat& dxG1,
                                                          const Mat& dqG2,
                                                          const Mat& dxG2) {
  const int nq = static_cast<int>(dqG1.rows());
  const int nx = static_cast<int>(dxG2.rows());
  Eigen::FullPivLU<Mat> luX(dxG2);
  if (!luX.isInvertible())
    throw DomainError("lyapunov_schmidt_equivalence: Dx G2 singular");

  Mat DG(nq + nx, nq + nx);
  DG.topLeftCorner(nq, nq) = dqG1;
  DG.topRightCorner(nq, nx) = dxG1;
  DG.bottomLeftCorner(nx, nq) = dqG2;
  DG.bottomRightCorner(nx, nx) = dxG2;
  const Mat DGamma = dqG1 - dxG1 * luX.solve(dqG2);

  LyapunovSchmidtReport rep;
  const double tol = 1e-10;
  Eigen::JacobiSVD<Mat> svG(DG), svGam(DGamma);
  rep.dg_invertible = svG.singularValues()(DG.rows() - 1) >
                      tol * std::max(svG.singularValues()(0), 1e-30);
  rep.dgamma_invertible =
      DGamma.size() == 0 ||
      svGam.singularValues()(DGamma.rows() - 1) >
          tol * std::max(svGam.singularValues()(0), 1e-30);
  rep.simultaneous = rep.dg_invertible == rep.dgamma_invertible;
  if (rep.dg_invertible && rep.dgamma_invertible) {
    rep.norm_dg_inv = opnorm_inf(DG.inverse());
    rep.norm_dgamma_inv =
        DGamma.size() ? opnorm_inf(DGamma.inverse()) : 0.0;
    rep.norm_inequality = rep.norm_dgamma_inv <= rep.norm_dg_inv;
  } else {
    rep.norm_inequality = true; // vacuous
  }
  return rep;
}

} // namespace degbill
