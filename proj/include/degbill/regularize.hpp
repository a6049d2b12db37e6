#pragma once

// Levi-Civita (codimension 2) and Kustaanheimo-Stiefel (codimension 3)
// regularization of near-collision motion inside one tube: the square /
// Hopf maps and their Hurwitz matrices, canonical momentum lifts, the
// regularized Hamiltonian in two evaluation forms, the normally hyperbolic
// data lambda(z), singularity-free integration, and the mu = 0 asymptotic
// orbits with their Maupertuis actions.
//
// Conventions. u(xi) = Gamma(xi) xi / 2 with |u| = |xi|^2 / 2, eta is the
// canonical conjugate (<v, du> = <eta, d xi>), and the regularized
// Hamiltonian is the unique function with {H = mu} = {H_mu = E}:
//
//   H(z, xi, eta) = (H_smooth(psi(z, xi, eta)) - E) |xi|^2 / (2 phi)
//                 = ((F0(z) - E)|xi|^2 + |eta|^2 / 2) / (2 phi0) + h.o.t.
//
// so the transverse eigenvalues are +-lambda(z), lambda = sqrt((E-F0)/2)/phi0.
// The KS fiber rotation e^{theta J} uses the generator J xi =
// (xi4, -xi3, xi2, -xi1), the kernel direction of the Hurwitz matrix.

#include "degbill/flow.hpp"

namespace degbill {

enum class RegMode { LC, KS };

// ---------------------------------------------------------------------------
// Hurwitz matrices and lifts

/// Levi-Civita matrix (2x2) or Kustaanheimo-Stiefel matrix (3x4).
inline Mat hurwitz(const Vec& xi) {
  if (xi.size() == 2) {
    Mat g(2, 2);
    g << xi[0], -xi[1], xi[1], xi[0];
    return g;
  }
  if (xi.size() == 4) {
    Mat g(3, 4);
    g << xi[0], -xi[1], -xi[2], xi[3],
        xi[1], xi[0], -xi[3], -xi[2],
        xi[2], xi[3], xi[0], xi[1];
    return g;
  }
  throw DomainError("hurwitz: xi must be R^2 (LC) or R^4 (KS)");
}

/// u(xi) = Gamma(xi) xi / 2; |u| = |xi|^2 / 2.
inline Vec square_map(const Vec& xi) { return 0.5 * hurwitz(xi) * xi; }

/// Generator of the KS fiber rotation: J xi = (xi4, -xi3, xi2, -xi1).
/// It spans ker Gamma(xi) and satisfies Gamma(J xi) = -Gamma(xi) J.
inline Mat ks_J() {
  Mat J = Mat::Zero(4, 4);
  J(0, 3) = 1;
  J(1, 2) = -1;
  J(2, 1) = 1;
  J(3, 0) = -1;
  return J;
}

inline Mat ks_rotation(double theta) {
  return std::cos(theta) * Mat::Identity(4, 4) + std::sin(theta) * ks_J();
}

/// Canonical lift of a normal offset u != 0: LC principal square root with
/// nonnegative first nonzero component; KS theta = 0 section.
inline Vec lift_offset(const Vec& u) {
  const double r = u.norm();
  if (r == 0.0) throw DomainError("lift_offset: branch point at u = 0");
  if (u.size() == 2) {
    const std::complex<double> s = std::sqrt(std::complex<double>(
        2.0 * u[0], 2.0 * u[1]));
    Vec xi(2);
    xi << s.real(), s.imag();
    if (xi[0] < 0 || (xi[0] == 0 && xi[1] < 0)) xi = -xi;
    return xi;
  }
  if (u.size() == 3) {
    Vec xi(4);
    if (u[0] >= 0) {
      const double a = std::sqrt(r + u[0]);
      xi << a, u[1] / a, u[2] / a, 0.0;
    } else {
      const double a = std::sqrt(r - u[0]);
      xi << u[1] / a, a, 0.0, u[2] / a;
    }
    return xi;
  }
  throw DomainError("lift_offset: u must be R^2 or R^3");
}

/// eta = Gamma*(xi) v — the canonical momentum lift (<v,du> = <eta,dxi>).
inline Vec momentum_lift(const Vec& xi, const Vec& v) {
  return hurwitz(xi).transpose() * v;
}

/// KS gauge function G = <J xi, eta>; zero on physical states.
inline double ks_gauge(const Vec& xi, const Vec& eta) {
  return (ks_J() * xi).dot(eta);
}

/// v = Gamma(xi) eta / |xi|^2, inverse of the momentum lift. KS states must
/// satisfy the gauge G = 0 for the inverse to exist.
inline Vec momentum_project(const Vec& xi, const Vec& eta,
                            double gauge_tol = 1e-8) {
  const double s = xi.squaredNorm();
  if (s == 0.0) throw DomainError("momentum_project: branch point xi = 0");
  if (xi.size() == 4 && std::abs(ks_gauge(xi, eta)) > gauge_tol * (1 + eta.norm()))
    throw GaugeError("momentum_project: KS gauge <J xi, eta> != 0");
  return hurwitz(xi) * eta / s;
}

// ---------------------------------------------------------------------------
// the regularized model of one tube

struct RegularizedState {
  RegMode mode;
  Vec x, y;     // tangent chart point and momentum (may be empty)
  Vec xi, eta;  // regularizing coordinates
  double mu_level = 0; // value of the regularized Hamiltonian
  double G = 0;        // KS gauge value
};

struct NormalHyperbolicData {
  Vec x, y;
  double lambda = 0;   // sqrt(E - F0(z)) / (sqrt(2) phi0)
  double a = 0, b = 0; // quadratic-part coefficients of H2 = (a|eta|^2 - b|xi|^2)/2
  double phi0 = 0, F0 = 0, nu = 0;
};

/// Regularized description of the motion inside the tube of one component.
/// State packing for integration: (x, y, xi, eta, J, t_phys).
class RegModel {
public:
  RegModel(const Problem& pb, int comp, double E)
      : pb_(&pb), comp_(comp), E_(E) {
    const Component& c = pb.comps[comp];
    if (c.kind == ChartKind::Circle)
      throw DomainError("RegModel: circle components not supported");
    d_ = c.codim();
    if (d_ != 2 && d_ != 3)
      throw DomainError("RegModel: codimension must be 2 or 3");
    nz_ = c.intrinsic_dim();
    if (nz_ > 0 && pb.omega != 0.0)
      throw DomainError("RegModel: gyroscopic wires not supported");
    mode_ = d_ == 2 ? RegMode::LC : RegMode::KS;
    xd_ = d_ == 2 ? 2 : 4;
    r_ = std::sqrt(2.0 * pb.rho);
  }

  RegMode mode() const { return mode_; }
  int comp() const { return comp_; }
  int codim() const { return d_; }
  int xi_dim() const { return xd_; }
  int z_dim() const { return nz_; }
  double energy() const { return E_; }
  double section_radius() const { return r_; } // |xi| at |u| = rho
  int state_size() const { return 2 * nz_ + 2 * xd_ + 2; }
  const Problem& problem() const { return *pb_; }

  // -- state packing ---------------------------------------------------------
  WorkVec pack(const Vec& x, const Vec& y, const Vec& xi,
               const Vec& eta) const {
    WorkVec s(state_size());
    s.head(nz_) = x;
    s.segment(nz_, nz_) = y;
    s.segment(2 * nz_, xd_) = xi;
    s.segment(2 * nz_ + xd_, xd_) = eta;
    s[2 * nz_ + 2 * xd_] = 0.0;     // action
    s[2 * nz_ + 2 * xd_ + 1] = 0.0; // physical time
    return s;
  }
  Vec xpart(const WorkVec& s) const { return s.head(nz_); }
  Vec ypart(const WorkVec& s) const { return s.segment(nz_, nz_); }
  Vec xipart(const WorkVec& s) const { return s.segment(2 * nz_, xd_); }
  Vec etapart(const WorkVec& s) const {
    return s.segment(2 * nz_ + xd_, xd_);
  }
  double action(const WorkVec& s) const { return s[2 * nz_ + 2 * xd_]; }
  double tphys(const WorkVec& s) const { return s[2 * nz_ + 2 * xd_ + 1]; }

  // -- tube geometry helpers -------------------------------------------------
  Vec ambient_of(const Vec& x, const Vec& u) const {
    const Component& c = pb_->comps[comp_];
    return c.chart(x) + c.normal_frame(x) * u;
  }

  /// Gauge base value b0 = frame components of w at the chart point.
  Vec gauge_b0(const Vec& x) const {
    const Component& c = pb_->comps[comp_];
    return c.normal_frame(x).transpose() * pb_->gyro(c.chart(x));
  }

  /// Gauge-adjusted normal gyro component: b~(x,u) = E^T (w(f(x,u)) - w(x)).
  Vec gyro_normal(const Vec& x, const Vec& u) const {
    const Component& c = pb_->comps[comp_];
    return c.normal_frame(x).transpose() *
           (pb_->gyro(ambient_of(x, u)) - pb_->gyro(c.chart(x)));
  }

  double phi(const Vec& x, const Vec& u) const {
    const Vec q = ambient_of(x, u);
    return pb_->comps[comp_].alpha - u.norm() * pb_->V_other(comp_, q);
  }
  double phi0() const { return pb_->comps[comp_].alpha; }

  double F0(const Vec& x, const Vec& y) const {
    return tangent_hamiltonian(*pb_, comp_, x, y, E_).F;
  }

  NormalHyperbolicData hyperbolic_data(const Vec& x, const Vec& y) const {
    NormalHyperbolicData nh;
    nh.x = x;
    nh.y = y;
    nh.F0 = F0(x, y);
    if (nh.F0 >= E_)
      throw DomainError("hyperbolic_data: z outside the region K");
    nh.phi0 = phi0();
    nh.a = 1.0 / (2.0 * nh.phi0);
    nh.b = (E_ - nh.F0) / nh.phi0;
    nh.lambda = std::sqrt(nh.a * nh.b);
    nh.nu = std::sqrt(2.0 * (E_ - nh.F0));
    return nh;
  }

  double lambda_of(const Vec& x, const Vec& y) const {
    return hyperbolic_data(x, y).lambda;
  }

  // -- the regularized Hamiltonian ------------------------------------------
  /// Expanded form, smooth through xi = 0 (restricted to the KS gauge G=0).
  double level(const Vec& x, const Vec& y, const Vec& xi,
               const Vec& eta) const {
    const double S = xi.squaredNorm();
    const Vec u = square_map(xi);
    const double ph = phi(x, u);
    const double P = smooth_P(x, y, u);
    const Vec bh = bhat(x, xi, u);
    return (P - E_) * S / (2 * ph) + (eta - bh).squaredNorm() / (4 * ph);
  }

  /// Composed form through the physical Hamiltonian; valid for xi != 0.
  double level_composed(const Vec& x, const Vec& y, const Vec& xi,
                        const Vec& eta) const {
    const double S = xi.squaredNorm();
    if (S == 0.0) throw DomainError("level_composed: xi = 0");
    const Vec u = square_map(xi);
    const Vec q = ambient_of(x, u);
    const Vec p = physical_momentum(x, y, xi, eta);
    const double Hs = pb_->H(q, p, 0.0); // smooth part only
    return (Hs - E_) * S / (2.0 * phi(x, u));
  }

  /// Full physical momentum of a regularized state (gauge removed).
  Vec physical_momentum(const Vec& x, const Vec& y, const Vec& xi,
                        const Vec& eta) const {
    const Component& c = pb_->comps[comp_];
    const Vec vtil = hurwitz(xi) * eta / xi.squaredNorm();
    Vec p = c.normal_frame(x) * (vtil + gauge_b0(x));
    if (nz_) p += c.chart_jac(x) * y; // flat charts: dual basis = chart basis
    return p;
  }

  /// Lift of a physical phase point inside the tube.
  RegularizedState lift_state(const Vec& q, const Vec& p) const {
    const Component& c = pb_->comps[comp_];
    const TubeCoords tc = tube_coordinates(*pb_, q);
    if (tc.comp != comp_)
      throw DomainError("lift_state: point lies in another component's tube");
    RegularizedState rs;
    rs.mode = mode_;
    rs.x = tc.x;
    rs.y.resize(nz_);
    if (nz_) rs.y = c.chart_jac(tc.x).transpose() * p;
    const Vec vtil =
        c.normal_frame(tc.x).transpose() * p - gauge_b0(tc.x);
    rs.xi = lift_offset(tc.u);
    rs.eta = momentum_lift(rs.xi, vtil);
    rs.G = xd_ == 4 ? ks_gauge(rs.xi, rs.eta) : 0.0;
    rs.mu_level = level(rs.x, rs.y, rs.xi, rs.eta);
    return rs;
  }

  /// Projection of a regularized state to physical phase coordinates.
  PhaseState project_state(const WorkVec& s) const {
    const Vec x = xpart(s), y = ypart(s), xi = xipart(s), eta = etapart(s);
    PhaseState ps;
    ps.q = ambient_of(x, square_map(xi));
    ps.p = physical_momentum(x, y, xi, eta);
    ps.t = tphys(s);
    return ps;
  }

  // -- Hamiltonian vector field ----------------------------------------------
  void rhs(const WorkVec& s, WorkVec& ds) const {
    const Vec x = xpart(s), y = ypart(s), xi = xipart(s), eta = etapart(s);
    const double S = xi.squaredNorm();
    const Vec u = square_map(xi);
    const Mat G = hurwitz(xi);
    const double ph = phi(x, u);
    const double C = 1.0 / (2.0 * ph);
    const Vec bh = bhat(x, xi, u);
    const Vec em = eta - bh;

    const double P = smooth_P(x, y, u);
    // dP/du and dphi/d(x,u)
    Vec dPdu, dPdx, dphidx;
    double dum;
    grad_smooth(x, y, u, dPdx, dPdu, dum);
    Vec dphidu;
    grad_phi(x, u, dphidx, dphidu);

    const double front = (P - E_) * S + 0.5 * em.squaredNorm();

    // eta-dot = -dH/dxi, xi-dot = dH/deta
    const Vec dH_deta = C * em;
    Vec dH_dxi = (P - E_) * C * 2.0 * xi;
    dH_dxi += S * C * (G.transpose() * dPdu);
    dH_dxi += front * (-C / ph) * (G.transpose() * dphidu);
    if (has_gyro_()) {
      // d bhat/dxi = T(b~) + Gamma^T (db~/du) Gamma with T(b)col_j = Gamma*(e_j) b
      const Vec bt = gyro_normal(x, u);
      Mat D(xd_, xd_);
      for (int j = 0; j < xd_; ++j) {
        Vec ej = Vec::Zero(xd_);
        ej[j] = 1.0;
        D.col(j) = hurwitz(ej).transpose() * bt;
      }
      D += G.transpose() * dgyro_du_(x, u) * G;
      dH_dxi -= D.transpose() * (C * em);
    }

    Vec dH_dy(nz_), dH_dx(nz_);
    if (nz_) {
      dH_dy = y * S * C; // flat wire chart: T = |y|^2/2
      dH_dx = S * C * dPdx + front * (-C / ph) * dphidx;
    }

    ds.setZero(state_size());
    if (nz_) {
      ds.head(nz_) = dH_dy;
      ds.segment(nz_, nz_) = -dH_dx;
    }
    ds.segment(2 * nz_, xd_) = dH_deta;
    ds.segment(2 * nz_ + xd_, xd_) = -dH_dxi;
    // action <y, xdot> + <eta, xidot> and physical time dt = |xi|^2/(2 phi) dtau
    double act = eta.dot(dH_deta);
    if (nz_) act += y.dot(dH_dy);
    ds[2 * nz_ + 2 * xd_] = act;
    ds[2 * nz_ + 2 * xd_ + 1] = S * C;
  }

private:
  bool has_gyro_() const { return pb_->omega != 0.0; }

  /// d b~/du in frame coordinates (linear gyro fields only).
  Mat dgyro_du_(const Vec& x, const Vec&) const {
    const Component& c = pb_->comps[comp_];
    const Mat E = c.normal_frame(x);
    return E.transpose() * pb_->gyro_jac() * E;
  }

  Vec bhat(const Vec& x, const Vec& xi, const Vec& u) const {
    if (!has_gyro_()) return Vec::Zero(xd_);
    return hurwitz(xi).transpose() * gyro_normal(x, u);
  }

  /// Smooth tangential + potential part P(x,y,u) = T(y) + W(f(x,u)),
  /// evaluated without the singular term (phi carries it).
  double smooth_P(const Vec& x, const Vec& y, const Vec& u) const {
    double P = pb_->W(ambient_of(x, u));
    if (nz_) P += 0.5 * y.squaredNorm();
    return P;
  }

  void grad_smooth(const Vec& x, const Vec& y, const Vec& u, Vec& dPdx,
                   Vec& dPdu, double& /*unused*/) const {
    const Component& c = pb_->comps[comp_];
    const Vec q = ambient_of(x, u);
    const Vec gW = pb_->gradW(q);
    dPdu = c.normal_frame(x).transpose() * gW;
    dPdx.resize(nz_);
    if (nz_) dPdx[0] = gW.dot(c.chart_jac(x).col(0));
    (void)y;
  }

  void grad_phi(const Vec& x, const Vec& u, Vec& dphidx, Vec& dphidu) const {
    const Component& c = pb_->comps[comp_];
    const Vec q = ambient_of(x, u);
    const double Vo = pb_->V_other(comp_, q);
    const Vec gVo = pb_->gradV_other(comp_, q);
    const double un = u.norm();
    // phi = alpha - |u| Vo(f(x,u)); |u| d/du|u| = u
    dphidu = -(un > 0 ? Vec((u / un) * Vo) : Vec(Vec::Zero(d_))) -
             un * (c.normal_frame(x).transpose() * gVo);
    dphidx.resize(nz_);
    if (nz_) dphidx[0] = -un * gVo.dot(c.chart_jac(x).col(0));
  }

  const Problem* pb_;
  int comp_;
  double E_;
  int d_, nz_, xd_;
  RegMode mode_;
  double r_;
};

// ---------------------------------------------------------------------------
// regularized integration

struct RegOptions {
  double tol = 1e-12;
  bool stop_at_section = false; // stop when |xi| reaches the section radius
  bool low_order = false;       // order-5 cap for non-analytic Hamiltonians
};

struct RegTrajectory {
  DenseOutput<WorkVec> dense;
  double tau0 = 0, tau1 = 0;
  double mu_level = 0;       // value of H at the initial state
  double max_level_drift = 0;
  double max_gauge = 0;      // sup |G| along the trajectory (KS)
  double min_xi_norm = 0;
  bool left_tube = false;    // stopped at |xi| = r (handoff back)
  WorkVec exit_state;
};

/// Integrates the regularized Hamiltonian flow. Passes through xi = 0
/// without events; optionally stops when the trajectory reaches the section
/// |xi| = r (leaving the tube).
inline RegTrajectory integrate_regularized(const RegModel& model,
                                           const WorkVec& s0, double tau_span,
                                           const RegOptions& opt = {}) {
  OdeOptions oopt;
  oopt.rtol = opt.tol;
  oopt.atol = opt.tol;
  auto rhs = [&model](double, const WorkVec& s, WorkVec& ds) {
    model.rhs(s, ds);
  };
  std::vector<EventSpec<WorkVec>> events;
  const double r2 = sqr(model.section_radius());
  if (opt.stop_at_section)
    events.push_back({[&model, r2](double, const WorkVec& s) {
                        return model.xipart(s).squaredNorm() - r2;
                      },
                      +1});
  OdeResult<WorkVec> r =
      opt.low_order
          ? integrate_ode_rk45(rhs, 0.0, s0, tau_span, oopt, events)
          : integrate_ode(rhs, 0.0, s0, tau_span, oopt, events);

  RegTrajectory out;
  out.dense = std::move(r.dense);
  out.tau0 = 0;
  out.tau1 = r.t_end;
  out.left_tube = r.reason == StopReason::Event;
  out.exit_state = r.y_end;
  out.mu_level = model.level(model.xpart(s0), model.ypart(s0),
                             model.xipart(s0), model.etapart(s0));
  out.min_xi_norm = std::numeric_limits<double>::infinity();
  for (const auto& seg : out.dense.segs)
    for (int i = 0; i <= 6; ++i) {
      const WorkVec s = seg.eval(seg.t0 + seg.h * i / 6.0);
      const double lev = model.level(model.xpart(s), model.ypart(s),
                                     model.xipart(s), model.etapart(s));
      out.max_level_drift =
          std::max(out.max_level_drift, std::abs(lev - out.mu_level));
      if (model.xi_dim() == 4)
        out.max_gauge = std::max(
            out.max_gauge,
            std::abs(ks_gauge(model.xipart(s), model.etapart(s))));
      out.min_xi_norm = std::min(out.min_xi_norm, model.xipart(s).norm());
    }
  return out;
}

/// Numerical Jacobian of the regularized vector field in the dynamical
/// variables (x, y, xi, eta), used by the eigenstructure checks.
inline Mat reg_linearization(const RegModel& model, const Vec& x, const Vec& y,
                             const Vec& xi, const Vec& eta, double h = 1e-6) {
  const int n = 2 * model.z_dim() + 2 * model.xi_dim();
  const WorkVec s0 = model.pack(x, y, xi, eta);
  Mat A(n, n);
  WorkVec sp, sm, dp(model.state_size()), dm(model.state_size());
  for (int j = 0; j < n; ++j) {
    sp = s0;
    sm = s0;
    sp[j] += h;
    sm[j] -= h;
    model.rhs(sp, dp);
    model.rhs(sm, dm);
    A.col(j) = ((dp - dm) / (2 * h)).head(n);
  }
  return A;
}

// ---------------------------------------------------------------------------
// asymptotic (mu = 0) collision orbits

struct AsymptoticData {
  Trajectory orbit;      // physical mu = 0 arc between the collision and the section
  double psi = 0;        // Maupertuis action of the arc
  double t_exit = 0;     // signed transit time (negative for the incoming side)
  Vec x_end, y_end;      // tangent data at the section crossing (g+-)
  Vec u_end;             // normal offset at the section, |u| = rho
  Vec xi_end, eta_end;   // lifted section data (h+-)
};

/// The mu = 0 orbit gamma_-(z0, u_-) (sign = -1, outgoing) or
/// gamma_+(z0, u_+) (sign = +1, incoming) with |udot(0)| = nu(z0), leaving
/// the collision configuration z = z0, u = 0 and crossing Sigma_rho at the
/// prescribed offset direction. Newton over the launch direction matches the
/// crossing point exactly.
inline AsymptoticData asymptotic_data(const RegModel& model, const Vec& x0,
                                      const Vec& y0, const Vec& u_dir,
                                      int sign, double tol = 1e-11) {
  const Problem& pb = model.problem();
  const Component& c = pb.comps[model.comp()];
  const double rho = pb.rho;
  const NormalHyperbolicData nh = model.hyperbolic_data(x0, y0);
  const int d = model.codim();
  const Vec e_target = u_dir.normalized();

  auto launch = [&](const Vec& e) {
    const Vec q0 = c.chart(x0);
    Vec v = c.normal_frame(x0) * (nh.nu * e) * (sign < 0 ? 1.0 : -1.0);
    if (model.z_dim()) v += c.chart_jac(x0) * y0; // flat charts: xdot = y
    const Vec p0 = v + pb.gyro(q0);
    std::vector<FlowEvent> ev;
    ev.push_back({[&pb, &model](double, const Vec& q, const Vec&) {
                    return pb.comp_dist(model.comp(), q) - pb.rho;
                  },
                  +1});
    const double span = (sign < 0 ? 1.0 : -1.0) * 4.0 * rho / nh.nu;
    auto fr = integrate_flow(pb, 0.0, make_state(pb, q0, p0, 0.0), span,
                             1e-13, ev, false);
    if (fr.reason != StopReason::Event)
      throw ConvergenceError("asymptotic_data: no section crossing");
    return fr.traj;
  };

  // Newton over the launch direction on S^{d-1}
  Vec e = e_target;
  Trajectory tr;
  for (int it = 0; it < 30; ++it) {
    tr = launch(e);
    const TubeCoords tc = tube_coordinates(pb, tr.q(tr.t1));
    const Vec rfull = tc.u / tc.u.norm() - e_target;
    const Mat tang = detail::unit_complement(e_target);
    const Vec r = tang.transpose() * rfull;
    if (r.cwiseAbs().maxCoeff() < tol) break;
    if (it == 29)
      throw ConvergenceError("asymptotic_data: direction Newton stalled");
    Mat J(d - 1, d - 1);
    const double h = 1e-7;
    for (int j = 0; j < d - 1; ++j) {
      const Vec ep = (e + h * tang.col(j)).normalized();
      const Trajectory trp = launch(ep);
      const TubeCoords tp = tube_coordinates(pb, trp.q(trp.t1));
      const Vec rp =
          tang.transpose() * Vec(tp.u / tp.u.norm() - e_target);
      J.col(j) = (rp - r) / h;
    }
    const Vec step = J.fullPivLu().solve(-r);
    e = (e + tang * step).normalized();
  }

  AsymptoticData ad;
  ad.orbit = tr;
  ad.psi = (sign < 0 ? 1.0 : -1.0) * tr.action();
  ad.t_exit = tr.t1;
  const TubeCoords tc = tube_coordinates(pb, tr.q(tr.t1));
  ad.u_end = tc.u;
  ad.x_end = tc.x;
  const Vec p_end = tr.p(tr.t1);
  ad.y_end.resize(model.z_dim());
  if (model.z_dim())
    ad.y_end = c.chart_jac(tc.x).transpose() * p_end;
  const RegularizedState rs = model.lift_state(tr.q(tr.t1), p_end);
  ad.xi_end = rs.xi;
  ad.eta_end = rs.eta;
  return ad;
}

} // namespace degbill
