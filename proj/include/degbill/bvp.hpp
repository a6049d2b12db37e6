#pragma once

// Two-point boundary connections at fixed energy: Newton shooting over
// (initial momentum direction, transit time) with the speed pinned by H = E,
// the action function S(q-,q+), boundary momenta, and twist matrices
// extracted from the state-transition matrix.

#include "degbill/flow.hpp"

namespace degbill {

struct BvpGuess {
  Vec dir;        // unit direction of p - w(q-); empty = aim at q+
  double T = 0.0; // transit time; 0 = chord length / speed
};

/// A converged fixed-energy connecting orbit together with the first and
/// second derivatives of its Maupertuis action.
struct ActionFunction {
  Vec q_minus, q_plus;
  double E = 0, mu = 0;
  Trajectory orbit;
  double S = 0;      // Maupertuis action of the orbit
  Vec p_minus, p_plus;
  Mat B;             // twist: B(i,j) = d p+_i / d q-_j = d^2 S / dq-_j dq+_i
  Mat S_mm, S_pp;    // d^2 S within the q- and q+ blocks
  bool nondegenerate = false;
  double jac_cond = 0;
  int newton_iters = 0;
};

namespace detail {

/// RHS for (q, p, J, vec(M)) — flow, action and variational equations.
inline void flow_stm_rhs(const Problem& pb, double mu, const WorkVec& s,
                         WorkVec& ds) {
  const int m = pb.m, n2 = 2 * m;
  flow_rhs(pb, mu, s, ds);
  const Vec q = s.head(m);
  const Mat Om = pb.gyro_jac();
  Mat A(n2, n2);
  A.topLeftCorner(m, m) = -Om;
  A.topRightCorner(m, m) = Mat::Identity(m, m);
  Mat dpq = -pb.hessW(q);
  if (pb.omega != 0.0) dpq -= Om.transpose() * Om;
  if (mu != 0.0) dpq -= mu * pb.hessVsing(q);
  A.bottomLeftCorner(m, m) = dpq;
  A.bottomRightCorner(m, m) = Om.transpose();
  Eigen::Map<const Mat> M(s.data() + n2 + 1, n2, n2);
  Eigen::Map<Mat>(ds.data() + n2 + 1, n2, n2) = A * M;
}

struct StmShot {
  Vec q1, p1;        // endpoint state
  double J;          // action
  Mat M;             // 2m x 2m transition matrix
  DenseOutput<WorkVec> dense;
};

inline StmShot shoot_stm(const Problem& pb, double mu, const Vec& q0,
                         const Vec& p0, double T, double tol) {
  const int m = pb.m, n2 = 2 * m;
  WorkVec y0(n2 + 1 + n2 * n2);
  y0.head(m) = q0;
  y0.segment(m, m) = p0;
  y0[n2] = 0.0;
  Eigen::Map<Mat>(y0.data() + n2 + 1, n2, n2) = Mat::Identity(n2, n2);
  OdeOptions opt;
  opt.rtol = tol;
  opt.atol = tol;
  auto rhs = [&pb, mu](double, const WorkVec& s, WorkVec& ds) {
    ds.resize(s.size());
    flow_stm_rhs(pb, mu, s, ds);
  };
  auto r = integrate_ode(rhs, 0.0, y0, T, opt);
  StmShot sh;
  sh.q1 = r.y_end.head(m);
  sh.p1 = r.y_end.segment(m, m);
  sh.J = r.y_end[n2];
  sh.M = Eigen::Map<const Mat>(r.y_end.data() + n2 + 1, n2, n2);
  sh.dense = std::move(r.dense);
  return sh;
}

} // namespace detail

/// Finds the orbit of (M \ N, H_mu = E) joining q- to q+ near the supplied
/// guess. Unknowns are the direction of p - w(q-) on the unit sphere and the
/// transit time; the speed is fixed by the energy, so H = E holds exactly
/// along every iterate.
inline ActionFunction connect_fixed_energy(const Problem& pb, double mu,
                                           const Vec& q_minus,
                                           const Vec& q_plus, double E,
                                           const BvpGuess& guess = {},
                                           double tol = 1e-10,
                                           double ode_tol = 1e-12) {
  const int m = pb.m;
  double Wm = pb.W(q_minus);
  if (mu != 0.0) Wm += mu * pb.Vsing(q_minus);
  if (Wm >= E)
    throw DomainError("connect_fixed_energy: q- outside the domain of "
                      "possible motion");
  const double nu = std::sqrt(2.0 * (E - Wm));

  Vec dir = guess.dir.size() ? guess.dir.normalized()
                             : Vec((q_plus - q_minus).normalized());
  double T = guess.T > 0 ? guess.T : (q_plus - q_minus).norm() / nu;
  if (T <= 0) throw DomainError("connect_fixed_energy: empty connection");

  double cond = 0;
  int it = 0;
  double res0 = std::numeric_limits<double>::infinity();
  detail::StmShot sh;
  for (; it < 60; ++it) {
    const Vec p0 = pb.gyro(q_minus) + nu * dir;
    sh = detail::shoot_stm(pb, mu, q_minus, p0, T, ode_tol);
    const Vec r = sh.q1 - q_plus;
    if (!r.allFinite())
      throw ConvergenceError("connect_fixed_energy: shot diverged");
    const double rn = r.norm();
    if (rn < tol) break;
    if (it > 8 && rn > 10.0 * res0)
      throw ConvergenceError("connect_fixed_energy: Newton divergence");
    res0 = std::min(res0, rn);

    const Mat tang = detail::unit_complement(dir);
    Mat J(m, m);
    J.leftCols(m - 1) =
        sh.M.topRightCorner(m, m) * (nu * tang); // d q1 / d theta
    // endpoint velocity = qdot at T
    const Vec v1 = sh.p1 - pb.gyro(sh.q1);
    J.col(m - 1) = v1;
    Eigen::JacobiSVD<Mat> svd(J, Eigen::ComputeFullU | Eigen::ComputeFullV);
    cond = svd.singularValues()(0) /
           std::max(svd.singularValues()(m - 1), 1e-300);
    if (cond > 1e10)
      throw ConjugatePointsError(
          "connect_fixed_energy: singular shooting Jacobian "
          "(conjugate endpoints)");
    const Vec step = svd.solve(-r);
    dir = (dir + tang * step.head(m - 1)).normalized();
    T += step[m - 1];
    if (!(T > 0))
      throw ConvergenceError("connect_fixed_energy: transit time collapsed");
  }
  if (it >= 60)
    throw ConvergenceError("connect_fixed_energy: no convergence in 60 steps");

  { // Jacobian conditioning at the solution (twist-degeneracy reporting)
    const Mat tang = detail::unit_complement(dir);
    Mat J(m, m);
    J.leftCols(m - 1) = sh.M.topRightCorner(m, m) * (nu * tang);
    J.col(m - 1) = sh.p1 - pb.gyro(sh.q1);
    Eigen::JacobiSVD<Mat> svd(J);
    cond = svd.singularValues()(0) /
           std::max(svd.singularValues()(m - 1), 1e-300);
  }

  ActionFunction af;
  af.q_minus = q_minus;
  af.q_plus = q_plus;
  af.E = E;
  af.mu = mu;
  af.newton_iters = it;
  af.jac_cond = cond;
  af.nondegenerate = cond < 1e10;
  af.p_minus = pb.gyro(q_minus) + nu * dir;
  af.p_plus = sh.p1;
  af.S = sh.J;
  af.orbit.m = m;
  af.orbit.E = E;
  af.orbit.mu = mu;
  af.orbit.t0 = 0;
  af.orbit.t1 = T;
  af.orbit.dense = sh.dense;
  detail::scan_min_distance(pb, af.orbit);

  // Second derivatives of S from the transition matrix. For endpoint
  // variations the momentum/time response solves the linear system
  //   M_qq dq- + M_qp dp- + v+ dT = dq+,   <qdot-, dp-> - <pdot-, dq-> = 0.
  const Mat Mqq = sh.M.topLeftCorner(m, m), Mqp = sh.M.topRightCorner(m, m);
  const Mat Mpq = sh.M.bottomLeftCorner(m, m), Mpp = sh.M.bottomRightCorner(m, m);
  WorkVec f0(2 * m + 1), df0(2 * m + 1), f1(2 * m + 1), df1(2 * m + 1);
  f0.head(m) = q_minus;
  f0.segment(m, m) = af.p_minus;
  f0[2 * m] = 0;
  detail::flow_rhs(pb, mu, f0, df0);
  f1.head(m) = sh.q1;
  f1.segment(m, m) = sh.p1;
  f1[2 * m] = 0;
  detail::flow_rhs(pb, mu, f1, df1);
  const Vec qdot_m = df0.head(m), pdot_m = df0.segment(m, m);
  const Vec qdot_p = df1.head(m), pdot_p = df1.segment(m, m);

  Mat K(m + 1, m + 1);
  K.topLeftCorner(m, m) = Mqp;
  K.topRightCorner(m, 1) = qdot_p;
  K.bottomLeftCorner(1, m) = qdot_m.transpose();
  K(m, m) = 0.0;
  Eigen::PartialPivLU<Mat> Klu(K);

  af.B.resize(m, m);
  af.S_mm.resize(m, m);
  af.S_pp.resize(m, m);
  for (int j = 0; j < m; ++j) {
    Vec rhs = Vec::Zero(m + 1);
    rhs.head(m) = -Mqq.col(j);
    rhs[m] = pdot_m[j];
    const Vec sol = Klu.solve(rhs);
    const Vec dpm = sol.head(m);
    const double dT = sol[m];
    af.B.col(j) = Mpq.col(j) + Mpp * dpm + pdot_p * dT;
    af.S_mm.col(j) = -dpm; // S_{q-q-} = -dp-/dq-
  }
  for (int i = 0; i < m; ++i) {
    Vec rhs = Vec::Zero(m + 1);
    rhs[i] = 1.0;
    const Vec sol = Klu.solve(rhs);
    af.S_pp.col(i) = Mpp * sol.head(m) + pdot_p * sol[m];
  }
  return af;
}

/// Velocity at the two ends of a connection (time derivatives of q).
inline Vec boundary_velocity_minus(const Problem& pb, const ActionFunction& af) {
  return af.p_minus - pb.gyro(af.q_minus);
}
inline Vec boundary_velocity_plus(const Problem& pb, const ActionFunction& af) {
  return af.p_plus - pb.gyro(af.q_plus);
}

struct RestrictedTwist {
  Mat block;          // n- x n+ block of the twist in chart bases
  bool invertible;    // twist condition
  bool v_minus_transversal, v_plus_transversal;
};

/// Restriction of the twist form to the scatterer tangent spaces at the two
/// endpoints, plus the necessary transversality checks v+- not in TN.
inline RestrictedTwist restricted_twist(const Problem& pb,
                                        const ActionFunction& af,
                                        int comp_minus, const Vec& x_minus,
                                        int comp_plus, const Vec& x_plus) {
  const Component& cm = pb.comps[comp_minus];
  const Component& cp = pb.comps[comp_plus];
  if ((cm.chart(x_minus) - af.q_minus).norm() > 1e-8 ||
      (cp.chart(x_plus) - af.q_plus).norm() > 1e-8)
    throw DomainError("restricted_twist: endpoints not on the scatterer");
  const Mat Jm = cm.chart_jac(x_minus); // m x n-
  const Mat Jp = cp.chart_jac(x_plus);  // m x n+
  RestrictedTwist rt;
  // (i,j) entry = d^2 S / dx-_i dx+_j
  rt.block = Jm.transpose() * af.B.transpose() * Jp;

  auto transversal = [&](const Mat& Jc, const Vec& v) {
    if (Jc.cols() == 0) return true;
    const Vec t = Jc.col(0).normalized();
    return (v - v.dot(t) * t).norm() > 1e-8 * v.norm();
  };
  rt.v_minus_transversal = transversal(Jm, boundary_velocity_minus(pb, af));
  rt.v_plus_transversal = transversal(Jp, boundary_velocity_plus(pb, af));

  if (rt.block.size() == 0) {
    rt.invertible = true; // vacuous for discrete components
  } else {
    Eigen::JacobiSVD<Mat> svd(rt.block);
    const auto& sv = svd.singularValues();
    rt.invertible = rt.block.rows() == rt.block.cols() &&
                    sv(sv.size() - 1) > 1e-10 * std::max(1.0, sv(0));
  }
  return rt;
}

} // namespace degbill
